#include "egraph/landmarks.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace egraph {

std::pair<UnitVec3, int> canonicalize(const UnitVec3& dir) {
  const Vec3& v = dir.vec();
  double lead = 0.0;
  for (int i = 0; i < 3; ++i) {
    if (std::abs(v[i]) > 1e-9) {
      lead = v[i];
      break;
    }
  }
  const int sign = lead < 0.0 ? -1 : +1;
  return {sign < 0 ? -dir : dir, sign};
}

UnitVec3 to_world(const UnitVec3& dir_c, const Rotation& r_wc) { return r_wc * dir_c; }

std::optional<MatchResult> match_direction(const UnitVec3& dir_w,
                                           std::span<const DirectionLandmark> landmarks,
                                           double th_vd) {
  std::optional<MatchResult> best;
  for (const DirectionLandmark& lm : landmarks) {
    const double d = dir_w.dot(lm.dir_w);
    int sign = 0;
    if (std::abs(d - 1.0) < th_vd) {
      sign = +1;
    } else if (std::abs(d + 1.0) < th_vd) {
      sign = -1;
    } else {
      continue;
    }
    const double residual = std::acos(std::clamp(sign * d, -1.0, 1.0));
    if (!best || residual < best->residual) {
      best = MatchResult{lm.id, sign, residual};
    }
  }
  return best;
}

namespace {

double sign_agnostic_angle(const UnitVec3& a, const UnitVec3& b) {
  return std::acos(std::clamp(std::abs(a.dot(b)), -1.0, 1.0));
}

}  // namespace

ClusterResult cluster_directions(std::span<const DirectionObservation> samples,
                                 double angle_tol_rad, int iterations, uint64_t seed) {
  ClusterResult result;
  if (samples.empty()) return result;

  std::mt19937_64 rng(seed);
  std::vector<int> remaining(samples.size());
  for (size_t i = 0; i < samples.size(); ++i) remaining[i] = static_cast<int>(i);

  while (remaining.size() >= 2) {
    std::vector<int> best_inliers;
    std::uniform_int_distribution<size_t> pick(0, remaining.size() - 1);
    for (int it = 0; it < iterations; ++it) {
      const int seed_idx = remaining[pick(rng)];
      const UnitVec3& hyp = samples[seed_idx].dir_c;
      std::vector<int> inliers;
      for (int idx : remaining) {
        if (sign_agnostic_angle(hyp, samples[idx].dir_c) <= angle_tol_rad) {
          inliers.push_back(idx);
        }
      }
      if (inliers.size() > best_inliers.size()) best_inliers = std::move(inliers);
    }
    if (best_inliers.size() < 2) break;

    // Representative: mean of the inliers with signs aligned to the first.
    const UnitVec3& anchor = samples[best_inliers.front()].dir_c;
    Vec3 sum = Vec3::Zero();
    for (int idx : best_inliers) {
      const double s = samples[idx].dir_c.dot(anchor) < 0.0 ? -1.0 : 1.0;
      sum += s * samples[idx].dir_c.vec();
    }
    DirectionCluster cluster{canonicalize(UnitVec3::normalized(sum)).first, best_inliers};
    result.clusters.push_back(std::move(cluster));

    std::vector<int> next;
    for (int idx : remaining) {
      if (std::find(best_inliers.begin(), best_inliers.end(), idx) == best_inliers.end()) {
        next.push_back(idx);
      }
    }
    remaining = std::move(next);
  }

  result.unclustered = std::move(remaining);
  return result;
}

DirectionLandmark fuse(const DirectionLandmark& landmark, const UnitVec3& dir_w, int sign) {
  DirectionLandmark out = landmark;
  const Vec3 merged =
      landmark.support_count * landmark.dir_w.vec() + static_cast<double>(sign) * dir_w.vec();
  out.dir_w = canonicalize(UnitVec3::normalized(merged)).first;
  out.support_count = landmark.support_count + 1;
  return out;
}

}  // namespace egraph
