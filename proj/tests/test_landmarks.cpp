#include "egraph/landmarks.hpp"

#include <doctest.h>

#include <random>

#include "test_util.hpp"

using namespace egraph;
using egtest::make_rng;
using egtest::random_unit;

namespace {

const Vec3 ex(1, 0, 0);
const Vec3 ey(0, 1, 0);
const Vec3 ez(0, 0, 1);

// Test-side noise: tilt dir by `angle` about an axis perpendicular to it,
// azimuth selecting the axis within the perpendicular plane.
UnitVec3 tilt(const UnitVec3& dir, double angle, double azimuth) {
  Vec3 ref = std::abs(dir.x()) < 0.9 ? ex : ey;
  const Vec3 u = dir.vec().cross(ref).normalized();
  const Vec3 v = dir.vec().cross(u);
  const Vec3 axis = std::cos(azimuth) * u + std::sin(azimuth) * v;
  return Rotation::from_axis_angle(axis, angle) * dir;
}

DirectionLandmark lm(int id, const Vec3& dir) {
  return DirectionLandmark{id, UnitVec3::normalized(dir), 1, DirectionKind::VanishingDirection};
}

}  // namespace

TEST_CASE("canonicalize: fixed cases and idempotence") {
  auto [c1, s1] = canonicalize(UnitVec3::normalized(ez));
  CHECK((c1.vec() - ez).norm() == 0.0);
  CHECK(s1 == +1);

  auto [c2, s2] = canonicalize(UnitVec3::normalized(-ex));
  CHECK((c2.vec() - ex).norm() == 0.0);
  CHECK(s2 == -1);

  // Leading near-zero component is skipped when deciding the sign.
  auto [c3, s3] = canonicalize(UnitVec3::from_unit(Vec3(0.0, -1.0, 0.0)));
  CHECK(c3.y() == 1.0);
  CHECK(s3 == -1);

  auto g = make_rng(71);
  for (int i = 0; i < 200; ++i) {
    const UnitVec3 v = random_unit(g);
    auto [c, s] = canonicalize(v);
    CHECK((c.vec() - s * v.vec()).norm() == 0.0);
    auto [cc, ss] = canonicalize(c);
    CHECK((cc.vec() - c.vec()).norm() == 0.0);
    CHECK(ss == +1);
  }
}

TEST_CASE("to_world: fixed rotations and isometry") {
  const UnitVec3 x = UnitVec3::normalized(ex);
  CHECK((to_world(x, Rotation::identity()).vec() - ex).norm() == 0.0);

  const Rotation rz90 = Rotation::from_axis_angle(ez, M_PI / 2.0);
  CHECK((to_world(x, rz90).vec() - ey).norm() <= 1e-15);

  auto g = make_rng(73);
  for (int i = 0; i < 200; ++i) {
    const UnitVec3 a = random_unit(g);
    const UnitVec3 b = random_unit(g);
    const Rotation r = egtest::random_rotation(g);
    CHECK(std::abs(to_world(a, r).vec().norm() - 1.0) <= 1e-12);
    // Angles between directions are preserved.
    CHECK(to_world(a, r).angle_to(to_world(b, r)) == doctest::Approx(a.angle_to(b)).epsilon(1e-9));
  }
}

TEST_CASE("match_direction: exact, negated, and empty results") {
  std::vector<DirectionLandmark> lms = {lm(0, ex), lm(1, ey), lm(2, ez)};

  auto hit = match_direction(UnitVec3::normalized(ey), lms);
  REQUIRE(hit.has_value());
  CHECK(hit->landmark_id == 1);
  CHECK(hit->sign == +1);
  CHECK(hit->residual == doctest::Approx(0.0));

  auto anti = match_direction(UnitVec3::normalized(-ey), lms);
  REQUIRE(anti.has_value());
  CHECK(anti->landmark_id == 1);
  CHECK(anti->sign == -1);
  CHECK(anti->residual == doctest::Approx(0.0));

  auto miss = match_direction(UnitVec3::normalized(Vec3(1, 1, 1)), lms);
  CHECK(!miss.has_value());
}

TEST_CASE("match_direction: threshold boundary at 5 degrees") {
  // |cos(theta) - 1| < th_vd  <=>  theta < acos(1 - th_vd), so with
  // th_vd = 1 - cos(5 deg) a 4.9 deg offset matches and 5.1 deg does not.
  std::vector<DirectionLandmark> lms = {lm(0, ez)};
  const double th = 1.0 - std::cos(5.0 * M_PI / 180.0);

  const UnitVec3 near = tilt(UnitVec3::normalized(ez), 4.9 * M_PI / 180.0, 0.3);
  const UnitVec3 far = tilt(UnitVec3::normalized(ez), 5.1 * M_PI / 180.0, 0.3);
  CHECK(match_direction(near, lms, th).has_value());
  CHECK(!match_direction(far, lms, th).has_value());

  auto r = match_direction(near, lms, th);
  CHECK(r->residual <= std::acos(1.0 - th));
  CHECK(r->residual == doctest::Approx(4.9 * M_PI / 180.0).epsilon(1e-9));
}

TEST_CASE("match_direction: sign consistency between v and -v") {
  auto g = make_rng(79);
  for (int i = 0; i < 100; ++i) {
    std::vector<DirectionLandmark> lms;
    for (int k = 0; k < 5; ++k) {
      lms.push_back(DirectionLandmark{k, canonicalize(random_unit(g)).first, 1,
                                      DirectionKind::VanishingDirection});
    }
    const UnitVec3 v = random_unit(g);
    const auto a = match_direction(v, lms);
    const auto b = match_direction(-v, lms);
    CHECK(a.has_value() == b.has_value());
    if (a) {
      CHECK(a->landmark_id == b->landmark_id);
      CHECK(a->sign == -b->sign);
      CHECK(a->residual == doctest::Approx(b->residual).epsilon(1e-12));
    }
  }
}

TEST_CASE("cluster_directions: repeated direction collapses to one group") {
  std::vector<DirectionObservation> samples(50, DirectionObservation{UnitVec3::normalized(ez)});
  const auto res = cluster_directions(samples, 3.0 * M_PI / 180.0, 20, 99);
  REQUIRE(res.clusters.size() == 1);
  CHECK(res.clusters[0].members.size() == 50);
  CHECK(res.unclustered.empty());
  CHECK((res.clusters[0].representative.vec() - ez).norm() <= 1e-12);
}

TEST_CASE("cluster_directions: empty and singleton inputs") {
  CHECK(cluster_directions({}, 0.05, 10, 1).clusters.empty());

  std::vector<DirectionObservation> one{DirectionObservation{UnitVec3::normalized(ex)}};
  const auto res = cluster_directions(one, 0.05, 10, 1);
  CHECK(res.clusters.empty());
  REQUIRE(res.unclustered.size() == 1);
  CHECK(res.unclustered[0] == 0);
}

TEST_CASE("cluster_directions: two noisy bundles separate; reps within 0.5 deg") {
  // Two bundles 90 degrees apart, 1 degree angular noise, 50 samples each,
  // 3 degree tolerance. Demand >= 95% success over 100 seeds.
  const UnitVec3 d0 = UnitVec3::normalized(ez);
  const UnitVec3 d1 = UnitVec3::normalized(ex);
  int ok = 0;
  for (uint64_t seed = 0; seed < 100; ++seed) {
    auto g = make_rng(1000 + seed);
    std::normal_distribution<double> noise(0.0, 1.0 * M_PI / 180.0);
    std::uniform_real_distribution<double> az(0.0, 2.0 * M_PI);
    std::vector<DirectionObservation> samples;
    for (int i = 0; i < 50; ++i)
      samples.push_back({tilt(d0, std::abs(noise(g)), az(g))});
    for (int i = 0; i < 50; ++i)
      samples.push_back({tilt(d1, std::abs(noise(g)), az(g)), DirectionKind::VanishingDirection,
                         ObservationSource::LineBundle, 1});

    const auto res = cluster_directions(samples, 3.0 * M_PI / 180.0, 30, seed);
    if (res.clusters.size() != 2) continue;
    double e0 = M_PI, e1 = M_PI;
    for (const auto& c : res.clusters) {
      e0 = std::min(e0, std::acos(std::abs(c.representative.dot(d0))));
      e1 = std::min(e1, std::acos(std::abs(c.representative.dot(d1))));
    }
    if (e0 <= 0.5 * M_PI / 180.0 && e1 <= 0.5 * M_PI / 180.0) ++ok;
  }
  CHECK(ok >= 95);
}

TEST_CASE("cluster_directions: groups are disjoint and cover the non-unclustered indices") {
  auto g = make_rng(83);
  std::uniform_real_distribution<double> az(0.0, 2.0 * M_PI);
  std::normal_distribution<double> noise(0.0, 0.01);
  std::vector<DirectionObservation> samples;
  const UnitVec3 dirs[3] = {UnitVec3::normalized(ex), UnitVec3::normalized(ey),
                            UnitVec3::normalized(Vec3(1, 1, 1))};
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < 20; ++i) samples.push_back({tilt(dirs[k], std::abs(noise(g)), az(g))});
  samples.push_back({random_unit(g)});  // an outlier far from every bundle

  const auto res = cluster_directions(samples, 0.05, 30, 7);
  std::vector<int> seen;
  for (const auto& c : res.clusters) {
    for (int idx : c.members) seen.push_back(idx);
    for (int idx : c.members) {
      CHECK(std::acos(std::abs(samples[idx].dir_c.dot(c.representative))) <= 0.05 + 1e-9);
    }
  }
  for (int idx : res.unclustered) seen.push_back(idx);
  std::sort(seen.begin(), seen.end());
  CHECK(std::adjacent_find(seen.begin(), seen.end()) == seen.end());  // disjoint
  CHECK(seen.size() == samples.size());                               // cover
}

TEST_CASE("fuse: identity update, bisector oracle, sign handling") {
  DirectionLandmark l = lm(0, ez);

  const DirectionLandmark same = fuse(l, UnitVec3::normalized(ez), +1);
  CHECK((same.dir_w.vec() - ez).norm() == 0.0);
  CHECK(same.support_count == 2);

  // Equal-weight fuse of two directions 2 degrees apart lands on the
  // bisector: 1 degree from either input.
  const UnitVec3 other = tilt(UnitVec3::normalized(ez), 2.0 * M_PI / 180.0, 1.1);
  const DirectionLandmark mid = fuse(l, other, +1);
  CHECK(mid.dir_w.angle_to(l.dir_w) == doctest::Approx(1.0 * M_PI / 180.0).epsilon(1e-9));
  CHECK(mid.dir_w.angle_to(other) == doctest::Approx(1.0 * M_PI / 180.0).epsilon(1e-9));

  const DirectionLandmark neg = fuse(l, -other, -1);
  CHECK((neg.dir_w.vec() - mid.dir_w.vec()).norm() == 0.0);
}

TEST_CASE("fuse: keeps unit norm and canonical sign across many updates") {
  auto g = make_rng(89);
  DirectionLandmark l = lm(0, Vec3(0.3, -0.2, 0.93));
  l.dir_w = canonicalize(l.dir_w).first;
  std::uniform_real_distribution<double> az(0.0, 2.0 * M_PI);
  std::normal_distribution<double> noise(0.0, 0.01);
  for (int i = 0; i < 200; ++i) {
    UnitVec3 obs = tilt(l.dir_w, std::abs(noise(g)), az(g));
    int sign = +1;
    if (i % 3 == 0) {
      obs = -obs;
      sign = -1;
    }
    l = fuse(l, obs, sign);
    CHECK(std::abs(l.dir_w.vec().norm() - 1.0) <= 1e-12);
    auto [c, s] = canonicalize(l.dir_w);
    CHECK(s == +1);
    CHECK(l.support_count == i + 2);
  }
}
