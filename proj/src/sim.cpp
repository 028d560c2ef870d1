#include "egraph/sim.hpp"

#include "egraph/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace egraph {

namespace {

// Deterministic orthonormal complement of a unit vector.
void perpendicular_axes(const Vec3& n, Vec3& u, Vec3& v) {
  const Vec3 ref = std::abs(n.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  u = n.cross(ref).normalized();
  v = n.cross(u);
}

// Camera-frame sign convention for line directions: lines have no
// intrinsic orientation, so emit the representative with positive depth
// component (z, then y, then x breaks ties). Frames looking at the same
// line from opposite sides report opposite vectors, which exercises the
// anti-parallel association branch.
UnitVec3 camera_sign(const UnitVec3& d) {
  const Vec3& v = d.vec();
  double lead = 0.0;
  for (int i : {2, 1, 0}) {
    if (std::abs(v[i]) > 1e-9) {
      lead = v[i];
      break;
    }
  }
  return lead < 0.0 ? -d : d;
}

struct Frustum {
  double tan_h, tan_v, near_m, far_m;

  explicit Frustum(const CameraModel& cam)
      : tan_h(std::tan(cam.fov_h_deg * M_PI / 360.0)),
        tan_v(std::tan(cam.fov_v_deg * M_PI / 360.0)),
        near_m(cam.near_m),
        far_m(cam.far_m) {}

  bool contains(const Vec3& p_c) const {
    if (p_c.z() < near_m || p_c.z() > far_m) return false;
    return std::abs(p_c.x()) <= p_c.z() * tan_h && std::abs(p_c.y()) <= p_c.z() * tan_v;
  }
};

}  // namespace

uint64_t derive_seed(uint64_t master, uint64_t index) {
  uint64_t z = master + 0x9E3779B97F4A7C15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

UnitVec3 perturb_direction(const UnitVec3& dir, double sigma_rad, std::mt19937_64& rng) {
  if (sigma_rad <= 0.0) return dir;
  std::normal_distribution<double> mag(0.0, sigma_rad);
  std::uniform_real_distribution<double> az(0.0, 2.0 * M_PI);
  const double angle = std::abs(mag(rng));
  const double phi = az(rng);
  Vec3 u, v;
  perpendicular_axes(dir.vec(), u, v);
  const Vec3 axis = std::cos(phi) * u + std::sin(phi) * v;
  return Rotation::from_axis_angle(axis, angle) * dir;
}

Scene generate_scene(const SceneSpec& spec, uint64_t seed) {
  for (const PlaneSpec& p : spec.planes) {
    if (p.half_u <= 0.0 || p.half_v <= 0.0) throw SimSpecError("plane extent must be positive");
    if (std::abs(p.n_w.vec().dot(p.center) + p.d_w) > 1e-9) {
      throw SimSpecError("plane center does not lie on the plane (n.c + d != 0)");
    }
  }
  for (const LineBundleSpec& b : spec.bundles) {
    if (b.count < 2) throw SimSpecError("line bundle needs at least 2 members");
    if (b.segment_half_length <= 0.0) throw SimSpecError("segment length must be positive");
  }
  if (spec.points.count < 0) throw SimSpecError("negative point count");

  Scene scene;
  scene.style = spec.style;
  scene.bundle_count = static_cast<int>(spec.bundles.size());
  std::mt19937_64 rng(derive_seed(seed, 0x5ce0e));

  int truth_id = 0;
  for (const LineBundleSpec& b : spec.bundles) {
    scene.direction_truths.push_back(canonicalize(b.dir_w).first);
    std::uniform_real_distribution<double> ux(-b.region_half.x(), b.region_half.x());
    std::uniform_real_distribution<double> uy(-b.region_half.y(), b.region_half.y());
    std::uniform_real_distribution<double> uz(-b.region_half.z(), b.region_half.z());
    for (int i = 0; i < b.count; ++i) {
      const Vec3 anchor = b.region_center + Vec3(ux(rng), uy(rng), uz(rng));
      scene.lines.push_back({anchor, b.dir_w, b.segment_half_length, truth_id});
    }
    ++truth_id;
  }
  for (const PlaneSpec& p : spec.planes) {
    Scene::Plane plane;
    plane.n = p.n_w;
    plane.d = p.d_w;
    plane.center = p.center;
    perpendicular_axes(p.n_w.vec(), plane.axis_u, plane.axis_v);
    plane.half_u = p.half_u;
    plane.half_v = p.half_v;
    plane.direction_truth_id = truth_id++;
    scene.planes.push_back(plane);
    scene.direction_truths.push_back(canonicalize(p.n_w).first);
  }
  {
    const PointCloudSpec& pc = spec.points;
    std::uniform_real_distribution<double> ux(-pc.region_half.x(), pc.region_half.x());
    std::uniform_real_distribution<double> uy(-pc.region_half.y(), pc.region_half.y());
    std::uniform_real_distribution<double> uz(-pc.region_half.z(), pc.region_half.z());
    for (int i = 0; i < pc.count; ++i) {
      scene.points.push_back(pc.region_center + Vec3(ux(rng), uy(rng), uz(rng)));
    }
  }
  return scene;
}

TimedPose look_along(const Vec3& position, const Vec3& forward, double timestamp) {
  const Vec3 f = forward.normalized();
  Vec3 up = Vec3::UnitZ();
  if (std::abs(f.dot(up)) > 0.99) up = Vec3::UnitY();
  const Vec3 right = f.cross(up).normalized();
  const Vec3 down = f.cross(right);
  Mat3 r;
  r.col(0) = right;
  r.col(1) = down;
  r.col(2) = f;
  return TimedPose{timestamp, Rotation::from_matrix_unchecked(r), position};
}

namespace {

std::vector<TimedPose> interpolate_waypoints(const TrajectorySpec& spec) {
  if (spec.waypoints.size() < 2) throw SimSpecError("waypoint trajectory needs >= 2 waypoints");
  std::vector<TimedPose> out;
  const int n = spec.frame_count;
  const int segments = static_cast<int>(spec.waypoints.size()) - 1;
  for (int i = 0; i < n; ++i) {
    const double s = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1) * segments;
    const int seg = std::min(static_cast<int>(s), segments - 1);
    const double a = s - seg;
    const Waypoint& w0 = spec.waypoints[seg];
    const Waypoint& w1 = spec.waypoints[seg + 1];
    const Eigen::Quaterniond q0(w0.r_wc.matrix());
    const Eigen::Quaterniond q1(w1.r_wc.matrix());
    TimedPose p;
    p.timestamp = i / spec.frame_rate;
    p.r_wc = Rotation::from_matrix_unchecked(q0.slerp(a, q1).toRotationMatrix());
    p.t_wc = (1.0 - a) * w0.t_wc + a * w1.t_wc;
    out.push_back(p);
  }
  return out;
}

}  // namespace

std::vector<TimedPose> generate_trajectory(const TrajectorySpec& spec) {
  if (spec.frame_count < 2) throw SimSpecError("trajectory needs frame_count >= 2");
  if (spec.frame_rate <= 0.0) throw SimSpecError("frame_rate must be positive");

  std::vector<TimedPose> out;
  const int n = spec.frame_count;
  switch (spec.kind) {
    case TrajectoryKind::Waypoints:
      return interpolate_waypoints(spec);

    case TrajectoryKind::Orbit: {
      if (spec.orbit_radius <= 0.0) throw SimSpecError("orbit radius must be positive");
      for (int i = 0; i < n; ++i) {
        const double theta = 2.0 * M_PI * spec.orbit_revolutions * i / (n - 1);
        const Vec3 pos =
            spec.orbit_center + spec.orbit_radius * Vec3(std::cos(theta), std::sin(theta), 0.0);
        out.push_back(look_along(pos, spec.orbit_center - pos, i / spec.frame_rate));
      }
      return out;
    }

    case TrajectoryKind::Corridor: {
      // Walk +x looking forward, turn in place, walk back looking -x.
      // Gentle lateral sway and vertical bob keep the positions off a
      // single line (a perfectly straight path has no SE(3) alignment).
      if (spec.corridor_length <= 2.0 * spec.corridor_margin) {
        throw SimSpecError("corridor too short for the requested margin");
      }
      const double x0 = spec.corridor_margin;
      const double x1 = spec.corridor_length - spec.corridor_margin;
      const auto walk_pos = [&](double x) {
        return Vec3(x, 0.15 * std::sin(1.7 * x), spec.corridor_height + 0.05 * std::sin(2.3 * x));
      };
      const int leg = static_cast<int>(n * 0.35);
      const int turn = n - 2 * leg;
      int i = 0;
      for (int k = 0; k < leg; ++k, ++i) {
        const double x = x0 + (x1 - x0) * k / std::max(1, leg - 1);
        out.push_back(look_along(walk_pos(x), Vec3::UnitX(), i / spec.frame_rate));
      }
      for (int k = 0; k < turn; ++k, ++i) {
        const double yaw = M_PI * (k + 1) / (turn + 1);
        out.push_back(look_along(walk_pos(x1), Vec3(std::cos(yaw), std::sin(yaw), 0.0),
                                 i / spec.frame_rate));
      }
      for (int k = 0; k < leg; ++k, ++i) {
        const double x = x1 - (x1 - x0) * k / std::max(1, leg - 1);
        out.push_back(look_along(walk_pos(x), -Vec3::UnitX(), i / spec.frame_rate));
      }
      return out;
    }

    case TrajectoryKind::PureRotation: {
      for (int i = 0; i < n; ++i) {
        const double yaw = spec.rotation_total_deg * M_PI / 180.0 * i / (n - 1);
        out.push_back(look_along(spec.rotation_position, Vec3(std::cos(yaw), std::sin(yaw), 0.0),
                                 i / spec.frame_rate));
      }
      return out;
    }
  }
  throw SimSpecError("unknown trajectory kind");
}

FrameObservation observe(const Scene& scene, const TimedPose& pose, const CameraModel& camera,
                         const NoiseSpec& noise, uint64_t seed) {
  if (camera.near_m <= 0.0 || camera.far_m <= camera.near_m) {
    throw SimSpecError("camera range invalid (need 0 < near < far)");
  }
  const Frustum frustum(camera);
  const Mat3 r_cw = pose.r_wc.matrix().transpose();
  const Vec3& cam_pos = pose.t_wc;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double dir_sigma = noise.dir_sigma_deg * M_PI / 180.0;
  const double bearing_sigma = noise.bearing_sigma_px / kNominalFocalPx;

  FrameObservation obs;
  obs.timestamp = pose.timestamp;
  obs.r_wc_gt = pose.r_wc;
  obs.t_wc_gt = pose.t_wc;

  // Planes: visible iff the patch faces the camera and some sample of the
  // bounded extent falls inside the frustum.
  for (const Scene::Plane& plane : scene.planes) {
    if (plane.n.vec().dot(cam_pos) + plane.d <= 0.0) continue;
    bool in_view = false;
    const int nu = std::clamp(static_cast<int>(std::ceil(plane.half_u * 4.0)), 2, 41);
    const int nv = std::clamp(static_cast<int>(std::ceil(plane.half_v * 4.0)), 2, 41);
    for (int a = 0; a <= nu && !in_view; ++a) {
      for (int b = 0; b <= nv && !in_view; ++b) {
        const double su = -plane.half_u + 2.0 * plane.half_u * a / nu;
        const double sv = -plane.half_v + 2.0 * plane.half_v * b / nv;
        const Vec3 p_w = plane.center + su * plane.axis_u + sv * plane.axis_v;
        in_view = frustum.contains(r_cw * (p_w - cam_pos));
      }
    }
    if (!in_view) continue;

    UnitVec3 n_c = UnitVec3::from_unit((r_cw * plane.n.vec()).normalized());
    double d_c = plane.d + plane.n.vec().dot(cam_pos);
    if (dir_sigma > 0.0) n_c = perturb_direction(n_c, dir_sigma, rng);
    if (noise.plane_d_sigma_m > 0.0) d_c += noise.plane_d_sigma_m * gauss(rng);

    const int plane_index = static_cast<int>(obs.planes.size());
    obs.planes.push_back({n_c, d_c, plane.direction_truth_id});
    obs.directions.push_back(
        {DirectionObservation{n_c, DirectionKind::PlaneNormal, ObservationSource::Plane,
                              plane.direction_truth_id},
         plane_index});
  }

  // Line bundles: two or more visible members yield a vanishing-direction
  // observation; a single one is a source-tagged lone direction.
  for (int b = 0; b < scene.bundle_count; ++b) {
    int visible = 0;
    const LineSegment* sample = nullptr;
    for (const LineSegment& line : scene.lines) {
      if (line.bundle != b) continue;
      if (frustum.contains(r_cw * (line.center - cam_pos))) {
        ++visible;
        sample = &line;
      }
    }
    if (visible == 0) continue;
    UnitVec3 dir_c = camera_sign(UnitVec3::from_unit((r_cw * sample->dir.vec()).normalized()));
    if (dir_sigma > 0.0) dir_c = perturb_direction(dir_c, dir_sigma, rng);
    obs.directions.push_back(
        {DirectionObservation{dir_c, DirectionKind::VanishingDirection,
                              visible >= 2 ? ObservationSource::LineBundle
                                           : ObservationSource::LoneLine,
                              b},
         -1});
  }

  for (size_t i = 0; i < scene.points.size(); ++i) {
    const Vec3 p_c = r_cw * (scene.points[i] - cam_pos);
    if (!frustum.contains(p_c)) continue;
    PointFeature f;
    f.id = static_cast<int>(i);
    f.p_c = p_c;
    if (noise.point_sigma_m > 0.0) {
      f.p_c += noise.point_sigma_m * Vec3(gauss(rng), gauss(rng), gauss(rng));
    }
    UnitVec3 bearing = UnitVec3::from_unit(p_c.normalized());
    if (bearing_sigma > 0.0) bearing = perturb_direction(bearing, bearing_sigma, rng);
    f.bearing = bearing;
    obs.points.push_back(f);
  }
  return obs;
}

std::vector<FrameObservation> run_sequence(const Scene& scene, std::span<const TimedPose> poses,
                                           const CameraModel& camera, const NoiseSpec& noise,
                                           uint64_t master_seed, bool parallel) {
  std::vector<FrameObservation> out(poses.size());
  parallel_for(
      static_cast<int>(poses.size()),
      [&](int i) {
        out[i] = observe(scene, poses[i], camera, noise, derive_seed(master_seed, i));
        out[i].frame_index = i;
      },
      parallel);
  return out;
}

}  // namespace egraph
