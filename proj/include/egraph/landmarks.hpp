#pragma once

#include "egraph/geom.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace egraph {

// Default association threshold: |cos - 1| < th_vd accepts directions
// within 5 degrees.
inline const double kDefaultThVd = 1.0 - std::cos(5.0 * M_PI / 180.0);

enum class DirectionKind { VanishingDirection, PlaneNormal };

enum class ObservationSource { LineBundle, Plane, LoneLine };

/// A global direction landmark: vanishing direction or plane normal,
/// stored in the world frame with canonical sign.
struct DirectionLandmark {
  int id = -1;
  UnitVec3 dir_w;
  int support_count = 1;
  DirectionKind kind = DirectionKind::VanishingDirection;
};

/// A lone line direction waiting for a parallel match before promotion.
struct PotentialDirection {
  int id = -1;
  UnitVec3 dir_w;       // canonical sign
  UnitVec3 dir_c_born;  // camera-frame measurement at the birth keyframe
  int born_at = -1;     // keyframe id
};

/// Hessian-form plane in the world frame: n_w . p + d_w = 0, with n_w
/// oriented so n_w . c + d_w > 0 for the first observing camera center c.
/// Distinct parallel planes (floor/ceiling) share one normal direction
/// landmark but keep separate Hessian records distinguished by d.
struct PlaneLandmark {
  int id = -1;
  int normal_landmark_id = -1;  // the plane-normal DirectionLandmark
  UnitVec3 n_w;
  double d_w = 0.0;
  int support_count = 1;
};

/// One camera-frame direction measurement.
struct DirectionObservation {
  UnitVec3 dir_c;
  DirectionKind kind = DirectionKind::VanishingDirection;
  ObservationSource source = ObservationSource::LineBundle;
  int truth_id = -1;  // simulator ground truth; estimators never read it
};

struct MatchResult {
  int landmark_id = -1;
  int sign = +1;          // +1: aligned branch, -1: anti-parallel branch
  double residual = 0.0;  // radians, <= acos(1 - th_vd)
};

/// Flips dir so the first component with |.| > 1e-9 is positive.
/// Returns the canonical direction and the sign s with result = s * dir.
std::pair<UnitVec3, int> canonicalize(const UnitVec3& dir);

/// World-frame transfer of a camera-frame direction: R_wc * dir_c.
UnitVec3 to_world(const UnitVec3& dir_c, const Rotation& r_wc);

/// Associates a world-frame direction against stored landmarks. A landmark
/// qualifies when |dot - 1| < th_vd (sign +1) or |dot + 1| < th_vd
/// (sign -1); among qualifiers the one with the smallest angular residual
/// wins. Empty optional when nothing qualifies.
std::optional<MatchResult> match_direction(const UnitVec3& dir_w,
                                           std::span<const DirectionLandmark> landmarks,
                                           double th_vd = kDefaultThVd);

struct DirectionCluster {
  UnitVec3 representative;   // normalized mean of the inliers, canonical sign
  std::vector<int> members;  // indices into the input sample list
};

struct ClusterResult {
  std::vector<DirectionCluster> clusters;
  std::vector<int> unclustered;  // singletons, candidates for PotentialDirection
};

/// Sign-agnostic RANSAC grouping of noisy direction samples. Each cluster's
/// members lie within angle_tol of its representative after sign
/// canonicalization; groups of size 1 are reported as unclustered.
ClusterResult cluster_directions(std::span<const DirectionObservation> samples,
                                 double angle_tol_rad, int iterations, uint64_t seed);

/// Merges a matched measurement into a landmark by the running weighted
/// spherical mean normalize(count * old + sign * dir), then re-canonicalizes.
DirectionLandmark fuse(const DirectionLandmark& landmark, const UnitVec3& dir_w, int sign);

}  // namespace egraph
