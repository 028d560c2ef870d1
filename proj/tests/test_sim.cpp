#include "egraph/sim.hpp"

#include <doctest.h>

#include "test_util.hpp"

using namespace egraph;
using egtest::make_rng;

namespace {

const Vec3 ex(1, 0, 0);
const Vec3 ey(0, 1, 0);
const Vec3 ez(0, 0, 1);

PlaneSpec plane(const Vec3& n, double d, const Vec3& center, double hu = 4.0, double hv = 3.0) {
  return PlaneSpec{UnitVec3::normalized(n), d, center, hu, hv};
}

SceneSpec manhattan_box() {
  SceneSpec spec;
  spec.style = SceneStyle::Manhattan;
  spec.planes = {
      plane(Vec3(0, 0, 1), 0.0, Vec3(0, 0, 0)),    // floor
      plane(Vec3(1, 0, 0), 4.0, Vec3(-4, 0, 1.5)), // wall x = -4
      plane(Vec3(0, 1, 0), 3.0, Vec3(0, -3, 1.5)), // wall y = -3
  };
  spec.bundles.push_back({UnitVec3::normalized(ex), 4, Vec3(0, -2.8, 0.1), Vec3(3, 0.1, 0.05), 2.5});
  spec.bundles.push_back({UnitVec3::normalized(ez), 3, Vec3(-3.8, 0, 1.5), Vec3(0.1, 2, 1.2), 1.2});
  spec.points = {80, Vec3(0, 0, 1.5), Vec3(3.5, 2.5, 1.2)};
  return spec;
}

bool same_observation(const FrameObservation& a, const FrameObservation& b) {
  if (a.directions.size() != b.directions.size() || a.planes.size() != b.planes.size() ||
      a.points.size() != b.points.size()) {
    return false;
  }
  for (size_t i = 0; i < a.directions.size(); ++i) {
    if (a.directions[i].observation.dir_c.vec() != b.directions[i].observation.dir_c.vec())
      return false;
  }
  for (size_t i = 0; i < a.planes.size(); ++i) {
    if (a.planes[i].n_c.vec() != b.planes[i].n_c.vec() || a.planes[i].d_c != b.planes[i].d_c)
      return false;
  }
  for (size_t i = 0; i < a.points.size(); ++i) {
    if (a.points[i].id != b.points[i].id || a.points[i].p_c != b.points[i].p_c ||
        a.points[i].bearing.vec() != b.points[i].bearing.vec())
      return false;
  }
  return true;
}

}  // namespace

TEST_CASE("generate_scene: manhattan truths are orthogonal; same seed reproduces the scene") {
  const SceneSpec spec = manhattan_box();
  const Scene s1 = generate_scene(spec, 42);
  const Scene s2 = generate_scene(spec, 42);

  REQUIRE(s1.planes.size() == 3);
  for (size_t a = 0; a < s1.planes.size(); ++a) {
    for (size_t b = a + 1; b < s1.planes.size(); ++b) {
      CHECK(std::abs(s1.planes[a].n.dot(s1.planes[b].n)) <= 1e-12);
    }
  }
  REQUIRE(s1.lines.size() == s2.lines.size());
  for (size_t i = 0; i < s1.lines.size(); ++i) {
    CHECK(s1.lines[i].center == s2.lines[i].center);
  }
  REQUIRE(s1.points.size() == s2.points.size());
  for (size_t i = 0; i < s1.points.size(); ++i) CHECK(s1.points[i] == s2.points[i]);
}

TEST_CASE("generate_scene: bundle truths record the spec directions") {
  SceneSpec spec;
  const UnitVec3 d30 = UnitVec3::normalized(Vec3(std::cos(30 * M_PI / 180), std::sin(30 * M_PI / 180), 0));
  const UnitVec3 d75 = UnitVec3::normalized(Vec3(std::cos(75 * M_PI / 180), std::sin(75 * M_PI / 180), 0));
  spec.bundles.push_back({d30, 3, Vec3::Zero(), Vec3::Ones(), 1.0});
  spec.bundles.push_back({d75, 3, Vec3::Zero(), Vec3::Ones(), 1.0});
  const Scene scene = generate_scene(spec, 7);
  REQUIRE(scene.direction_truths.size() == 2);
  CHECK(scene.direction_truths[0].angle_to(canonicalize(d30).first) <= 1e-12);
  CHECK(scene.direction_truths[1].angle_to(canonicalize(d75).first) <= 1e-12);
}

TEST_CASE("generate_scene: invalid specs rejected") {
  SceneSpec bad;
  bad.planes = {plane(ez, 0.0, Vec3(0, 0, 0), -1.0)};
  CHECK_THROWS_AS(generate_scene(bad, 1), SimSpecError);

  SceneSpec off_plane;
  off_plane.planes = {plane(ez, 0.0, Vec3(0, 0, 1))};  // center not on the plane
  CHECK_THROWS_AS(generate_scene(off_plane, 1), SimSpecError);

  SceneSpec lone;
  lone.bundles.push_back({UnitVec3::normalized(ex), 1, Vec3::Zero(), Vec3::Ones(), 1.0});
  CHECK_THROWS_AS(generate_scene(lone, 1), SimSpecError);
}

TEST_CASE("generate_trajectory: waypoints interpolate linearly with slerp") {
  TrajectorySpec spec;
  spec.kind = TrajectoryKind::Waypoints;
  spec.frame_count = 5;
  spec.waypoints = {{Rotation::identity(), Vec3(0, 0, 0)},
                    {Rotation::from_axis_angle(ez, M_PI / 2), Vec3(4, 0, 0)}};
  const auto poses = generate_trajectory(spec);
  REQUIRE(poses.size() == 5);
  CHECK((poses[2].t_wc - Vec3(2, 0, 0)).norm() <= 1e-12);
  CHECK(angular_distance(poses[2].r_wc, Rotation::from_axis_angle(ez, M_PI / 4)) <= 1e-12);
  CHECK((poses[4].t_wc - Vec3(4, 0, 0)).norm() <= 1e-12);
}

TEST_CASE("generate_trajectory: pure rotation keeps the position fixed") {
  TrajectorySpec spec;
  spec.kind = TrajectoryKind::PureRotation;
  spec.frame_count = 30;
  spec.rotation_position = Vec3(1, 2, 1.4);
  const auto poses = generate_trajectory(spec);
  for (const TimedPose& p : poses) CHECK((p.t_wc - spec.rotation_position).norm() == 0.0);
}

TEST_CASE("generate_trajectory: orbit positions sit on the circle") {
  TrajectorySpec spec;
  spec.kind = TrajectoryKind::Orbit;
  spec.frame_count = 40;
  spec.orbit_center = Vec3(1, -2, 1.0);
  spec.orbit_radius = 2.5;
  const auto poses = generate_trajectory(spec);
  for (const TimedPose& p : poses) {
    CHECK(std::abs((p.t_wc - spec.orbit_center).norm() - 2.5) <= 1e-12);
  }
}

TEST_CASE("generate_trajectory: invalid specs rejected") {
  TrajectorySpec spec;
  spec.frame_count = 1;
  CHECK_THROWS_AS(generate_trajectory(spec), SimSpecError);
  spec.frame_count = 10;
  spec.kind = TrajectoryKind::Waypoints;
  CHECK_THROWS_AS(generate_trajectory(spec), SimSpecError);  // no waypoints
}

TEST_CASE("observe: plane measurement by hand geometry") {
  // Wall z = 3 in front of a camera at the origin looking along +z (world
  // axes chosen so camera and world frames coincide).
  SceneSpec spec;
  spec.planes = {plane(Vec3(0, 0, -1), 3.0, Vec3(0, 0, 3))};  // normal toward the camera
  const Scene scene = generate_scene(spec, 3);
  TimedPose pose;  // identity: camera z is world z
  pose.r_wc = Rotation::identity();
  pose.t_wc = Vec3::Zero();

  const FrameObservation obs = observe(scene, pose, CameraModel{}, NoiseSpec{}, 11);
  REQUIRE(obs.planes.size() == 1);
  // Convention: measured normal points toward the camera, d is the
  // camera-to-plane distance, and n.p + d = 0 holds for points on the wall.
  CHECK((obs.planes[0].n_c.vec() - Vec3(0, 0, -1)).norm() <= 1e-12);
  CHECK(obs.planes[0].d_c == doctest::Approx(3.0));
  CHECK(obs.planes[0].n_c.vec().dot(Vec3(0.5, 0.2, 3.0)) + obs.planes[0].d_c ==
        doctest::Approx(0.0));
  REQUIRE(obs.directions.size() == 1);
  CHECK(obs.directions[0].observation.kind == DirectionKind::PlaneNormal);
  CHECK(obs.directions[0].plane_index == 0);
}

TEST_CASE("observe: back side of a plane is not visible") {
  SceneSpec spec;
  spec.planes = {plane(Vec3(0, 0, -1), 3.0, Vec3(0, 0, 3))};
  const Scene scene = generate_scene(spec, 3);
  // Camera behind the wall looking back at it: the patch faces away.
  const TimedPose pose = look_along(Vec3(0, 0, 6), -ez);
  const FrameObservation obs = observe(scene, pose, CameraModel{}, NoiseSpec{}, 11);
  CHECK(obs.planes.empty());
}

TEST_CASE("observe: zero-noise directions equal the rotated truths exactly") {
  const Scene scene = generate_scene(manhattan_box(), 9);
  const TimedPose pose = look_along(Vec3(2, 1, 1.5), Vec3(-1, -0.4, 0));
  const FrameObservation obs = observe(scene, pose, CameraModel{}, NoiseSpec{}, 17);
  REQUIRE(!obs.directions.empty());
  for (const DirectionMeasurement& m : obs.directions) {
    const UnitVec3 truth = scene.direction_truths[m.observation.truth_id];
    const UnitVec3 dir_w = to_world(m.observation.dir_c, pose.r_wc);
    CHECK(canonicalize(dir_w).first.angle_to(truth) <= 1e-12);
  }
  // Visibility is a pure function of the pose.
  const FrameObservation again = observe(scene, pose, CameraModel{}, NoiseSpec{}, 17);
  CHECK(same_observation(obs, again));
}

TEST_CASE("observe: lone visible line is tagged as a potential direction source") {
  SceneSpec spec;
  // Two-member bundle arranged so only one member can be in view: one
  // segment near the camera, the other far behind it.
  spec.bundles.push_back({UnitVec3::normalized(ey), 2, Vec3(0, 0, 0), Vec3(0.01, 0.01, 0.01), 0.5});
  Scene scene = generate_scene(spec, 21);
  scene.lines[0].center = Vec3(0, 0, 2);
  scene.lines[1].center = Vec3(0, 0, -50);
  const TimedPose pose = look_along(Vec3::Zero(), ez);
  const FrameObservation obs = observe(scene, pose, CameraModel{}, NoiseSpec{}, 31);
  REQUIRE(obs.directions.size() == 1);
  CHECK(obs.directions[0].observation.source == ObservationSource::LoneLine);

  scene.lines[1].center = Vec3(0.5, 0, 2);  // both members in view
  const FrameObservation both = observe(scene, pose, CameraModel{}, NoiseSpec{}, 31);
  REQUIRE(both.directions.size() == 1);
  CHECK(both.directions[0].observation.source == ObservationSource::LineBundle);
}

TEST_CASE("observe: opposite corridor views share the wall but no points") {
  // Camera pair at the two ends of a corridor looking inward: both see the
  // side wall plane, point features cluster at the two end walls.
  SceneSpec spec;
  spec.planes = {plane(Vec3(0, 1, 0), 1.5, Vec3(5, -1.5, 1.5), 6.0, 1.4)};
  spec.points = {40, Vec3(9.5, 0, 1.5), Vec3(0.3, 1.2, 1.2)};  // far-end cluster
  const Scene scene = generate_scene(spec, 12);

  const TimedPose forward = look_along(Vec3(1, 0, 1.5), ex);
  const TimedPose backward = look_along(Vec3(9, 0, 1.5), -ex);
  const FrameObservation a = observe(scene, forward, CameraModel{}, NoiseSpec{}, 1);
  const FrameObservation b = observe(scene, backward, CameraModel{}, NoiseSpec{}, 2);

  REQUIRE(a.planes.size() == 1);
  REQUIRE(b.planes.size() == 1);
  CHECK(a.planes[0].truth_id == b.planes[0].truth_id);

  CHECK(!a.points.empty());  // forward camera sees the far-end features
  for (const PointFeature& fa : a.points) {
    for (const PointFeature& fb : b.points) CHECK(fa.id != fb.id);
  }
}

TEST_CASE("observe: visible points lie inside the frustum and keep ids stable") {
  const Scene scene = generate_scene(manhattan_box(), 33);
  const CameraModel cam{};
  const TimedPose pose = look_along(Vec3(2, 1, 1.5), Vec3(-1, -0.3, 0));
  const FrameObservation obs = observe(scene, pose, cam, NoiseSpec{}, 3);
  const double tan_h = std::tan(cam.fov_h_deg * M_PI / 360.0);
  const double tan_v = std::tan(cam.fov_v_deg * M_PI / 360.0);
  for (const PointFeature& f : obs.points) {
    const Vec3 p = pose.r_wc.matrix().transpose() * (scene.points[f.id] - pose.t_wc);
    CHECK(p.z() >= cam.near_m);
    CHECK(p.z() <= cam.far_m);
    CHECK(std::abs(p.x()) <= p.z() * tan_h + 1e-12);
    CHECK(std::abs(p.y()) <= p.z() * tan_v + 1e-12);
    CHECK((f.p_c - p).norm() <= 1e-12);  // zero noise
  }
}

TEST_CASE("perturb_direction: zero mean bias over many samples") {
  auto g = make_rng(71);
  const UnitVec3 dir = UnitVec3::normalized(Vec3(0.3, -0.5, 0.81));
  const double sigma = 2.0 * M_PI / 180.0;
  Vec3 mean = Vec3::Zero();
  const int n = 10000;
  for (int i = 0; i < n; ++i) mean += perturb_direction(dir, sigma, g).vec();
  mean /= n;
  // The mean direction must align with the input; tangential drift stays
  // within 3 sigma / sqrt(n).
  const Vec3 tangential = mean - mean.dot(dir.vec()) * dir.vec();
  CHECK(tangential.norm() <= 3.0 * sigma / std::sqrt(static_cast<double>(n)));
  CHECK(UnitVec3::normalized(mean).angle_to(dir) <= 3.0 * sigma / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("run_sequence: deterministic, indexed, and parallel-equal") {
  const Scene scene = generate_scene(manhattan_box(), 55);
  TrajectorySpec tspec;
  tspec.kind = TrajectoryKind::Orbit;
  tspec.frame_count = 24;
  tspec.orbit_center = Vec3(0, 0, 1.5);
  tspec.orbit_radius = 1.2;
  const auto poses = generate_trajectory(tspec);
  NoiseSpec noise{0.3, 0.01, 0.005, 1.0};

  const auto serial = run_sequence(scene, poses, CameraModel{}, noise, 77, false);
  const auto serial2 = run_sequence(scene, poses, CameraModel{}, noise, 77, false);
  const auto parallel = run_sequence(scene, poses, CameraModel{}, noise, 77, true);

  REQUIRE(serial.size() == 24);
  for (size_t i = 0; i < serial.size(); ++i) {
    CHECK(serial[i].frame_index == static_cast<int>(i));
    CHECK(same_observation(serial[i], serial2[i]));
    CHECK(same_observation(serial[i], parallel[i]));
  }
}
