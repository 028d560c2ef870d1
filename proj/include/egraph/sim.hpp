#pragma once

#include "egraph/observation.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace egraph {

struct SimSpecError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Bounded rectangular plane patch: n . p + d = 0 through `center`, with
/// extents along two in-plane axes derived deterministically from n.
struct PlaneSpec {
  UnitVec3 n_w;
  double d_w = 0.0;
  Vec3 center = Vec3::Zero();
  double half_u = 1.0;
  double half_v = 1.0;
};

/// A bundle of parallel line segments sharing one direction. Anchors are
/// drawn uniformly inside the given box.
struct LineBundleSpec {
  UnitVec3 dir_w;
  int count = 2;
  Vec3 region_center = Vec3::Zero();
  Vec3 region_half = Vec3::Ones();
  double segment_half_length = 1.0;
};

struct PointCloudSpec {
  int count = 0;
  Vec3 region_center = Vec3::Zero();
  Vec3 region_half = Vec3::Ones();
};

enum class SceneStyle { Manhattan, AtlantaLike, General };

struct SceneSpec {
  SceneStyle style = SceneStyle::General;
  std::vector<PlaneSpec> planes;
  std::vector<LineBundleSpec> bundles;
  PointCloudSpec points;
};

struct LineSegment {
  Vec3 center = Vec3::Zero();
  UnitVec3 dir;
  double half_length = 1.0;
  int bundle = -1;
};

/// Fully resolved world with ground truth recorded for every landmark.
/// Direction truth ids: bundle i -> i, plane j's normal -> bundles + j.
struct Scene {
  struct Plane {
    UnitVec3 n;
    double d = 0.0;
    Vec3 center = Vec3::Zero();
    Vec3 axis_u = Vec3::UnitX();
    Vec3 axis_v = Vec3::UnitY();
    double half_u = 1.0;
    double half_v = 1.0;
    int direction_truth_id = -1;
  };
  SceneStyle style = SceneStyle::General;
  std::vector<Plane> planes;
  std::vector<LineSegment> lines;
  std::vector<Vec3> points;                 // feature id = index
  std::vector<UnitVec3> direction_truths;   // canonical sign
  int bundle_count = 0;
};

enum class TrajectoryKind { Waypoints, Orbit, Corridor, PureRotation };

struct Waypoint {
  Rotation r_wc;
  Vec3 t_wc = Vec3::Zero();
};

struct TrajectorySpec {
  TrajectoryKind kind = TrajectoryKind::Waypoints;
  int frame_count = 2;
  double frame_rate = 30.0;
  std::vector<Waypoint> waypoints;  // Waypoints kind

  Vec3 orbit_center = Vec3::Zero();  // Orbit kind: camera circles in z-plane
  double orbit_radius = 1.0;
  double orbit_revolutions = 1.0;

  double corridor_length = 10.0;  // Corridor kind: walk +x, turn, walk back
  double corridor_margin = 1.0;
  double corridor_height = 1.5;

  Vec3 rotation_position = Vec3::Zero();  // PureRotation kind: yaw in place
  double rotation_total_deg = 360.0;
};

struct CameraModel {
  double fov_h_deg = 90.0;
  double fov_v_deg = 70.0;
  double near_m = 0.1;
  double far_m = 30.0;
};

struct NoiseSpec {
  double dir_sigma_deg = 0.0;
  double plane_d_sigma_m = 0.0;
  double point_sigma_m = 0.0;
  double bearing_sigma_px = 0.0;
};

// Bearing noise is specified in pixels at this nominal focal length.
inline constexpr double kNominalFocalPx = 525.0;

/// Deterministic per-index seed derivation (splitmix64), stable under
/// partial re-runs and parallel scheduling.
uint64_t derive_seed(uint64_t master, uint64_t index);

/// Isotropic angular perturbation: rotates dir about a uniformly random
/// perpendicular axis by |N(0, sigma)|.
UnitVec3 perturb_direction(const UnitVec3& dir, double sigma_rad, std::mt19937_64& rng);

Scene generate_scene(const SceneSpec& spec, uint64_t seed);

std::vector<TimedPose> generate_trajectory(const TrajectorySpec& spec);

FrameObservation observe(const Scene& scene, const TimedPose& pose, const CameraModel& camera,
                         const NoiseSpec& noise, uint64_t seed);

/// Observes every trajectory pose with per-frame derived seeds. The OpenMP
/// and serial paths produce bit-identical output.
std::vector<FrameObservation> run_sequence(const Scene& scene, std::span<const TimedPose> poses,
                                           const CameraModel& camera, const NoiseSpec& noise,
                                           uint64_t master_seed, bool parallel = false);

/// Camera pose looking along `forward` from `position` (camera z axis is
/// the viewing direction, x is image right, y is image down).
TimedPose look_along(const Vec3& position, const Vec3& forward, double timestamp = 0.0);

}  // namespace egraph
