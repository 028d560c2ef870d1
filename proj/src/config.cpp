#include "egraph/config.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace egraph {

using nlohmann::json;

namespace {

const json& require(const json& j, const char* key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) {
    throw ConfigError("missing field: " + path + key);
  }
  return j.at(key);
}

template <typename T>
T get(const json& j, const char* key, const std::string& path) {
  try {
    return require(j, key, path).get<T>();
  } catch (const ConfigError&) {
    throw;
  } catch (const json::exception&) {
    throw ConfigError("bad value for field: " + path + key);
  }
}

template <typename T>
T get_or(const json& j, const char* key, const std::string& path, T fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  return get<T>(j, key, path);
}

Vec3 get_vec3(const json& j, const char* key, const std::string& path) {
  const json& a = require(j, key, path);
  if (!a.is_array() || a.size() != 3) {
    throw ConfigError("expected a 3-element array at: " + path + key);
  }
  try {
    return Vec3(a[0].get<double>(), a[1].get<double>(), a[2].get<double>());
  } catch (const json::exception&) {
    throw ConfigError("bad value for field: " + path + key);
  }
}

Vec3 get_vec3_or(const json& j, const char* key, const std::string& path, const Vec3& fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  return get_vec3(j, key, path);
}

json vec3_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

SceneStyle style_from_string(const std::string& s, const std::string& path) {
  if (s == "manhattan") return SceneStyle::Manhattan;
  if (s == "atlanta") return SceneStyle::AtlantaLike;
  if (s == "general") return SceneStyle::General;
  throw ConfigError("unknown scene style '" + s + "' at: " + path);
}

std::string style_to_string(SceneStyle s) {
  switch (s) {
    case SceneStyle::Manhattan: return "manhattan";
    case SceneStyle::AtlantaLike: return "atlanta";
    case SceneStyle::General: return "general";
  }
  return "general";
}

TrajectoryKind kind_from_string(const std::string& s, const std::string& path) {
  if (s == "waypoints") return TrajectoryKind::Waypoints;
  if (s == "orbit") return TrajectoryKind::Orbit;
  if (s == "corridor") return TrajectoryKind::Corridor;
  if (s == "pure_rotation") return TrajectoryKind::PureRotation;
  throw ConfigError("unknown trajectory kind '" + s + "' at: " + path);
}

std::string kind_to_string(TrajectoryKind k) {
  switch (k) {
    case TrajectoryKind::Waypoints: return "waypoints";
    case TrajectoryKind::Orbit: return "orbit";
    case TrajectoryKind::Corridor: return "corridor";
    case TrajectoryKind::PureRotation: return "pure_rotation";
  }
  return "waypoints";
}

}  // namespace

ExperimentConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }

  ExperimentConfig c;
  c.schema_version = get<int>(j, "schema_version", "");
  if (c.schema_version != 1) {
    throw ConfigError("unsupported schema_version " + std::to_string(c.schema_version));
  }
  c.name = get_or<std::string>(j, "name", "", "experiment");
  c.seed = get_or<uint64_t>(j, "seed", "", 1);

  const json& scene = require(j, "scene", "");
  c.scene.style = style_from_string(get_or<std::string>(scene, "style", "scene.", "general"),
                                    "scene.style");
  if (scene.contains("planes")) {
    int idx = 0;
    for (const json& p : scene.at("planes")) {
      const std::string path = "scene.planes[" + std::to_string(idx++) + "].";
      PlaneSpec ps;
      ps.n_w = UnitVec3::normalized(get_vec3(p, "n", path));
      ps.d_w = get<double>(p, "d", path);
      ps.center = get_vec3(p, "center", path);
      ps.half_u = get<double>(p, "half_u", path);
      ps.half_v = get<double>(p, "half_v", path);
      c.scene.planes.push_back(ps);
    }
  }
  if (scene.contains("bundles")) {
    int idx = 0;
    for (const json& b : scene.at("bundles")) {
      const std::string path = "scene.bundles[" + std::to_string(idx++) + "].";
      LineBundleSpec bs;
      bs.dir_w = UnitVec3::normalized(get_vec3(b, "dir", path));
      bs.count = get<int>(b, "count", path);
      bs.region_center = get_vec3(b, "region_center", path);
      bs.region_half = get_vec3(b, "region_half", path);
      bs.segment_half_length = get<double>(b, "segment_half_length", path);
      c.scene.bundles.push_back(bs);
    }
  }
  if (scene.contains("points")) {
    const json& p = scene.at("points");
    c.scene.points.count = get<int>(p, "count", "scene.points.");
    c.scene.points.region_center = get_vec3(p, "region_center", "scene.points.");
    c.scene.points.region_half = get_vec3(p, "region_half", "scene.points.");
  }

  const json& tr = require(j, "trajectory", "");
  c.trajectory.kind = kind_from_string(get<std::string>(tr, "kind", "trajectory."),
                                       "trajectory.kind");
  c.trajectory.frame_count = get<int>(tr, "frame_count", "trajectory.");
  c.trajectory.frame_rate = get_or<double>(tr, "frame_rate", "trajectory.", 30.0);
  if (tr.contains("waypoints")) {
    int idx = 0;
    for (const json& w : tr.at("waypoints")) {
      const std::string path = "trajectory.waypoints[" + std::to_string(idx++) + "].";
      const Vec3 position = get_vec3(w, "position", path);
      const Vec3 forward = get_vec3(w, "forward", path);
      const TimedPose p = look_along(position, forward);
      c.trajectory.waypoints.push_back({p.r_wc, p.t_wc});
    }
  }
  c.trajectory.orbit_center = get_vec3_or(tr, "orbit_center", "trajectory.", Vec3::Zero());
  c.trajectory.orbit_radius = get_or<double>(tr, "orbit_radius", "trajectory.", 1.0);
  c.trajectory.orbit_revolutions = get_or<double>(tr, "orbit_revolutions", "trajectory.", 1.0);
  c.trajectory.corridor_length = get_or<double>(tr, "corridor_length", "trajectory.", 10.0);
  c.trajectory.corridor_margin = get_or<double>(tr, "corridor_margin", "trajectory.", 1.0);
  c.trajectory.corridor_height = get_or<double>(tr, "corridor_height", "trajectory.", 1.5);
  c.trajectory.rotation_position =
      get_vec3_or(tr, "rotation_position", "trajectory.", Vec3::Zero());
  c.trajectory.rotation_total_deg = get_or<double>(tr, "rotation_total_deg", "trajectory.", 360.0);

  if (j.contains("camera")) {
    const json& cam = j.at("camera");
    c.camera.fov_h_deg = get_or<double>(cam, "fov_h_deg", "camera.", 90.0);
    c.camera.fov_v_deg = get_or<double>(cam, "fov_v_deg", "camera.", 70.0);
    c.camera.near_m = get_or<double>(cam, "near", "camera.", 0.1);
    c.camera.far_m = get_or<double>(cam, "far", "camera.", 30.0);
  }
  if (j.contains("noise")) {
    const json& n = j.at("noise");
    c.noise.dir_sigma_deg = get_or<double>(n, "dir_sigma_deg", "noise.", 0.0);
    c.noise.plane_d_sigma_m = get_or<double>(n, "plane_d_sigma_m", "noise.", 0.0);
    c.noise.point_sigma_m = get_or<double>(n, "point_sigma_m", "noise.", 0.0);
    c.noise.bearing_sigma_px = get_or<double>(n, "bearing_sigma_px", "noise.", 0.0);
  }
  if (j.contains("estimator")) {
    const json& e = j.at("estimator");
    c.estimator.graph.th_vd = get_or<double>(e, "th_vd", "estimator.", kDefaultThVd);
    c.estimator.graph.pd_expiry_keyframes =
        get_or<int>(e, "pd_expiry_keyframes", "estimator.", 10);
    c.estimator.graph.min_edge_shared = get_or<int>(e, "min_edge_shared", "estimator.", 2);
    c.estimator.keyframe.max_frame_gap = get_or<int>(e, "keyframe_max_gap", "estimator.", 20);
    c.estimator.keyframe.min_tracked_ratio =
        get_or<double>(e, "keyframe_min_ratio", "estimator.", 0.85);
    c.estimator.min_point_overlap = get_or<int>(e, "min_point_overlap", "estimator.", 2);
    c.estimator.min_fallback_points = get_or<int>(e, "min_fallback_points", "estimator.", 3);
    if (e.contains("weights")) {
      const json& w = e.at("weights");
      c.estimator.refine.point_weight = get_or<double>(w, "point", "estimator.weights.", 1.0);
      c.estimator.refine.plane_weight = get_or<double>(w, "plane", "estimator.weights.", 1.0);
      c.estimator.refine.line_weight = get_or<double>(w, "line", "estimator.weights.", 1.0);
    }
    c.estimator.refine.max_iterations = get_or<int>(e, "refine_max_iterations", "estimator.", 50);
    c.estimator.refine.initial_damping =
        get_or<double>(e, "refine_damping", "estimator.", 1e-4);
  }
  if (j.contains("eval")) {
    const json& e = j.at("eval");
    c.eval.max_dt = get_or<double>(e, "max_dt", "eval.", 0.02);
    c.eval.rpe_deltas = get_or<std::vector<int>>(e, "rpe_deltas", "eval.", {1});
  }
  return c;
}

std::string config_to_json(const ExperimentConfig& c) {
  json j;
  j["schema_version"] = c.schema_version;
  j["name"] = c.name;
  j["seed"] = c.seed;

  json scene;
  scene["style"] = style_to_string(c.scene.style);
  scene["planes"] = json::array();
  for (const PlaneSpec& p : c.scene.planes) {
    scene["planes"].push_back({{"n", vec3_json(p.n_w.vec())},
                               {"d", p.d_w},
                               {"center", vec3_json(p.center)},
                               {"half_u", p.half_u},
                               {"half_v", p.half_v}});
  }
  scene["bundles"] = json::array();
  for (const LineBundleSpec& b : c.scene.bundles) {
    scene["bundles"].push_back({{"dir", vec3_json(b.dir_w.vec())},
                                {"count", b.count},
                                {"region_center", vec3_json(b.region_center)},
                                {"region_half", vec3_json(b.region_half)},
                                {"segment_half_length", b.segment_half_length}});
  }
  scene["points"] = {{"count", c.scene.points.count},
                     {"region_center", vec3_json(c.scene.points.region_center)},
                     {"region_half", vec3_json(c.scene.points.region_half)}};
  j["scene"] = scene;

  json tr;
  tr["kind"] = kind_to_string(c.trajectory.kind);
  tr["frame_count"] = c.trajectory.frame_count;
  tr["frame_rate"] = c.trajectory.frame_rate;
  if (!c.trajectory.waypoints.empty()) {
    tr["waypoints"] = json::array();
    for (const Waypoint& w : c.trajectory.waypoints) {
      tr["waypoints"].push_back({{"position", vec3_json(w.t_wc)},
                                 {"forward", vec3_json(w.r_wc.matrix().col(2))}});
    }
  }
  switch (c.trajectory.kind) {
    case TrajectoryKind::Orbit:
      tr["orbit_center"] = vec3_json(c.trajectory.orbit_center);
      tr["orbit_radius"] = c.trajectory.orbit_radius;
      tr["orbit_revolutions"] = c.trajectory.orbit_revolutions;
      break;
    case TrajectoryKind::Corridor:
      tr["corridor_length"] = c.trajectory.corridor_length;
      tr["corridor_margin"] = c.trajectory.corridor_margin;
      tr["corridor_height"] = c.trajectory.corridor_height;
      break;
    case TrajectoryKind::PureRotation:
      tr["rotation_position"] = vec3_json(c.trajectory.rotation_position);
      tr["rotation_total_deg"] = c.trajectory.rotation_total_deg;
      break;
    case TrajectoryKind::Waypoints:
      break;
  }
  j["trajectory"] = tr;

  j["camera"] = {{"fov_h_deg", c.camera.fov_h_deg},
                 {"fov_v_deg", c.camera.fov_v_deg},
                 {"near", c.camera.near_m},
                 {"far", c.camera.far_m}};
  j["noise"] = {{"dir_sigma_deg", c.noise.dir_sigma_deg},
                {"plane_d_sigma_m", c.noise.plane_d_sigma_m},
                {"point_sigma_m", c.noise.point_sigma_m},
                {"bearing_sigma_px", c.noise.bearing_sigma_px}};
  j["estimator"] = {
      {"th_vd", c.estimator.graph.th_vd},
      {"pd_expiry_keyframes", c.estimator.graph.pd_expiry_keyframes},
      {"min_edge_shared", c.estimator.graph.min_edge_shared},
      {"keyframe_max_gap", c.estimator.keyframe.max_frame_gap},
      {"keyframe_min_ratio", c.estimator.keyframe.min_tracked_ratio},
      {"min_point_overlap", c.estimator.min_point_overlap},
      {"min_fallback_points", c.estimator.min_fallback_points},
      {"weights",
       {{"point", c.estimator.refine.point_weight},
        {"plane", c.estimator.refine.plane_weight},
        {"line", c.estimator.refine.line_weight}}},
      {"refine_max_iterations", c.estimator.refine.max_iterations},
      {"refine_damping", c.estimator.refine.initial_damping}};
  j["eval"] = {{"max_dt", c.eval.max_dt}, {"rpe_deltas", c.eval.rpe_deltas}};
  return j.dump(2);
}

ExperimentConfig load_config_file(const std::string& path) {
  return config_from_json(read_file(path));
}

namespace {

SceneSpec room_scene_spec() {
  auto plane = [](const Vec3& n, double d, const Vec3& center, double hu, double hv) {
    return PlaneSpec{UnitVec3::normalized(n), d, center, hu, hv};
  };
  SceneSpec spec;
  spec.style = SceneStyle::Manhattan;
  spec.planes = {
      plane(Vec3(0, 0, 1), 0.0, Vec3(0, 0, 0), 4.0, 3.0),
      plane(Vec3(0, 0, -1), 3.0, Vec3(0, 0, 3), 4.0, 3.0),
      plane(Vec3(1, 0, 0), 4.0, Vec3(-4, 0, 1.5), 3.0, 1.5),
      plane(Vec3(-1, 0, 0), 4.0, Vec3(4, 0, 1.5), 3.0, 1.5),
      plane(Vec3(0, 1, 0), 3.0, Vec3(0, -3, 1.5), 4.0, 1.5),
      plane(Vec3(0, -1, 0), 3.0, Vec3(0, 3, 1.5), 4.0, 1.5),
  };
  spec.bundles.push_back(
      {UnitVec3::normalized(Vec3(1, 0, 0)), 4, Vec3(0, -2.9, 0.1), Vec3(3, 0.05, 0.05), 2.5});
  spec.bundles.push_back(
      {UnitVec3::normalized(Vec3(0, 1, 0)), 4, Vec3(-3.9, 0, 0.1), Vec3(0.05, 2, 0.05), 2.0});
  spec.bundles.push_back(
      {UnitVec3::normalized(Vec3(0, 0, 1)), 3, Vec3(3.9, 2.9, 1.5), Vec3(0.05, 0.05, 1.2), 1.2});
  spec.points = {150, Vec3(0, 0, 1.5), Vec3(3.6, 2.6, 1.3)};
  return spec;
}

ExperimentConfig manhattan_preset() {
  ExperimentConfig c;
  c.name = "manhattan";
  c.scene = room_scene_spec();
  c.trajectory.kind = TrajectoryKind::Orbit;
  c.trajectory.frame_count = 120;
  c.trajectory.orbit_center = Vec3(0, 0, 1.5);
  c.trajectory.orbit_radius = 1.5;
  c.trajectory.orbit_revolutions = 0.25;
  return c;
}

ExperimentConfig general_preset() {
  auto plane = [](const Vec3& n, const Vec3& center, double hu, double hv) {
    const Vec3 nn = n.normalized();
    return PlaneSpec{UnitVec3::normalized(nn), -nn.dot(center), center, hu, hv};
  };
  ExperimentConfig c;
  c.name = "general";
  c.scene.style = SceneStyle::General;
  // No two normals orthogonal or parallel: a non-Manhattan room.
  c.scene.planes = {
      plane(Vec3(0.05, -0.08, 1.0), Vec3(0, 0, 0), 5.0, 4.0),
      plane(Vec3(1.0, 0.18, 0.05), Vec3(-4, 0, 1.5), 3.0, 1.6),
      plane(Vec3(-0.94, 0.33, 0.08), Vec3(4, 0.5, 1.5), 3.0, 1.6),
      plane(Vec3(0.25, 1.0, 0.12), Vec3(0, -3, 1.5), 4.5, 1.6),
  };
  const double a30 = 30.0 * M_PI / 180.0;
  const double a75 = 75.0 * M_PI / 180.0;
  c.scene.bundles.push_back({UnitVec3::normalized(Vec3(std::cos(a30), std::sin(a30), 0)), 4,
                             Vec3(0, -2.7, 0.2), Vec3(2.5, 0.1, 0.1), 2.0});
  c.scene.bundles.push_back({UnitVec3::normalized(Vec3(std::cos(a75), std::sin(a75), 0)), 3,
                             Vec3(-3.6, 0, 0.2), Vec3(0.15, 1.5, 0.1), 1.6});
  c.scene.bundles.push_back({UnitVec3::normalized(Vec3(0.15, 0.1, 1.0)), 3,
                             Vec3(3.6, 2.5, 1.5), Vec3(0.1, 0.1, 1.2), 1.2});
  c.scene.points = {150, Vec3(0, 0, 1.5), Vec3(3.5, 2.5, 1.3)};
  c.trajectory.kind = TrajectoryKind::Orbit;
  c.trajectory.frame_count = 100;
  c.trajectory.orbit_center = Vec3(0, 0, 1.5);
  c.trajectory.orbit_radius = 1.2;
  c.trajectory.orbit_revolutions = 0.2;
  return c;
}

ExperimentConfig corridor_preset() {
  auto plane = [](const Vec3& n, double d, const Vec3& center, double hu, double hv) {
    return PlaneSpec{UnitVec3::normalized(n), d, center, hu, hv};
  };
  ExperimentConfig c;
  c.name = "corridor";
  c.scene.style = SceneStyle::Manhattan;
  // 20 m corridor along x, 3 m wide, 3 m tall. Extent axes are derived
  // from the normal (z-ish first), so half_u spans height/width and
  // half_v spans the corridor length.
  c.scene.planes = {
      plane(Vec3(0, 1, 0), 1.5, Vec3(10, -1.5, 1.5), 1.5, 11.0),   // left wall
      plane(Vec3(0, -1, 0), 1.5, Vec3(10, 1.5, 1.5), 1.5, 11.0),   // right wall
      plane(Vec3(0, 0, 1), 0.0, Vec3(10, 0, 0), 1.6, 11.0),        // floor
      plane(Vec3(0, 0, -1), 3.0, Vec3(10, 0, 3), 1.6, 11.0),       // ceiling
      plane(Vec3(-1, 0, 0), 21.0, Vec3(21, 0, 1.5), 1.5, 1.6),     // far end wall
      plane(Vec3(1, 0, 0), 1.0, Vec3(-1, 0, 1.5), 1.5, 1.6),       // near end wall
  };
  // Wall-floor and wall-ceiling junction lines running the corridor.
  c.scene.bundles.push_back({UnitVec3::normalized(Vec3(1, 0, 0)), 5, Vec3(10, -1.45, 0.05),
                             Vec3(9.0, 0.02, 0.02), 8.0});
  c.scene.bundles.push_back({UnitVec3::normalized(Vec3(1, 0, 0)), 5, Vec3(10, 1.45, 2.95),
                             Vec3(9.0, 0.02, 0.02), 8.0});
  // Door-frame verticals at the two ends plus side-wall verticals near
  // the far end, which stay in view through the turn.
  c.scene.bundles.push_back({UnitVec3::normalized(Vec3(0, 0, 1)), 3, Vec3(20.6, 0, 1.5),
                             Vec3(0.2, 1.2, 0.05), 1.4});
  c.scene.bundles.push_back({UnitVec3::normalized(Vec3(0, 0, 1)), 3, Vec3(-0.6, 0, 1.5),
                             Vec3(0.2, 1.2, 0.05), 1.4});
  c.scene.bundles.push_back({UnitVec3::normalized(Vec3(0, 0, 1)), 2, Vec3(18.0, -1.43, 1.5),
                             Vec3(0.6, 0.02, 0.05), 1.4});
  c.scene.bundles.push_back({UnitVec3::normalized(Vec3(0, 0, 1)), 2, Vec3(18.0, 1.43, 1.5),
                             Vec3(0.6, 0.02, 0.05), 1.4});
  // Point features cluster around the far end only, beyond the turn
  // point: the forward leg and the turn see them, the return leg sees
  // none, which severs covisibility between the two legs.
  c.scene.points = {120, Vec3(19.9, 0, 1.5), Vec3(0.7, 1.4, 1.2)};
  c.trajectory.kind = TrajectoryKind::Corridor;
  c.trajectory.frame_count = 200;
  c.trajectory.corridor_length = 20.0;
  c.trajectory.corridor_margin = 1.5;
  c.trajectory.corridor_height = 1.5;
  return c;
}

ExperimentConfig pure_rotation_preset() {
  ExperimentConfig c;
  c.name = "pure-rotation";
  c.scene = room_scene_spec();
  c.trajectory.kind = TrajectoryKind::PureRotation;
  c.trajectory.frame_count = 181;  // 2 degrees of yaw per frame
  c.trajectory.rotation_position = Vec3(0.5, -0.3, 1.5);
  c.trajectory.rotation_total_deg = 360.0;
  return c;
}

}  // namespace

ExperimentConfig preset(const std::string& name) {
  if (name == "manhattan") return manhattan_preset();
  if (name == "general") return general_preset();
  if (name == "corridor") return corridor_preset();
  if (name == "pure-rotation") return pure_rotation_preset();
  throw ConfigError("unknown preset '" + name + "' (available: manhattan, general, corridor, "
                    "pure-rotation)");
}

std::vector<std::string> preset_names() {
  return {"manhattan", "general", "corridor", "pure-rotation"};
}

uint64_t fnv1a64(std::string_view data) {
  uint64_t hash = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    hash ^= c;
    hash *= 0x100000001b3ull;
  }
  return hash;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write: " + tmp.string());
    out << content;
    if (!out.good()) throw std::runtime_error("short write: " + tmp.string());
  }
  fs::rename(tmp, target);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string manifest_to_json(const RunManifest& m) {
  json j;
  j["schema_version"] = m.schema_version;
  j["command"] = m.command;
  j["config_hash"] = m.config_hash;
  json outputs = json::object();
  for (const auto& [name, checksum] : m.outputs) outputs[name] = checksum;
  j["outputs"] = outputs;
  j["notes"] = m.notes;
  return j.dump(2);
}

namespace {

const char* kind_str(DirectionKind k) {
  return k == DirectionKind::VanishingDirection ? "vd" : "plane_normal";
}
const char* source_str(ObservationSource s) {
  switch (s) {
    case ObservationSource::LineBundle: return "bundle";
    case ObservationSource::Plane: return "plane";
    case ObservationSource::LoneLine: return "lone";
  }
  return "bundle";
}

DirectionKind kind_parse(const std::string& s, int frame) {
  if (s == "vd") return DirectionKind::VanishingDirection;
  if (s == "plane_normal") return DirectionKind::PlaneNormal;
  throw ConfigError("unknown direction kind '" + s + "' in frame " + std::to_string(frame));
}
ObservationSource source_parse(const std::string& s, int frame) {
  if (s == "bundle") return ObservationSource::LineBundle;
  if (s == "plane") return ObservationSource::Plane;
  if (s == "lone") return ObservationSource::LoneLine;
  throw ConfigError("unknown observation source '" + s + "' in frame " + std::to_string(frame));
}

}  // namespace

std::string observations_to_json(std::span<const FrameObservation> frames) {
  json j;
  j["schema_version"] = 1;
  json arr = json::array();
  for (const FrameObservation& f : frames) {
    json jf;
    jf["index"] = f.frame_index;
    jf["timestamp"] = f.timestamp;
    const UnitQuaternion q = UnitQuaternion::from_rotation(f.r_wc_gt);
    jf["pose_gt"] = {{"t", vec3_json(f.t_wc_gt)}, {"q", {q.qx, q.qy, q.qz, q.qw}}};
    json dirs = json::array();
    for (const DirectionMeasurement& d : f.directions) {
      dirs.push_back({{"dir", vec3_json(d.observation.dir_c.vec())},
                      {"kind", kind_str(d.observation.kind)},
                      {"source", source_str(d.observation.source)},
                      {"truth_id", d.observation.truth_id},
                      {"plane_index", d.plane_index}});
    }
    jf["directions"] = dirs;
    json planes = json::array();
    for (const PlaneMeasurement& p : f.planes) {
      planes.push_back({{"n", vec3_json(p.n_c.vec())}, {"d", p.d_c}, {"truth_id", p.truth_id}});
    }
    jf["planes"] = planes;
    json points = json::array();
    for (const PointFeature& p : f.points) {
      points.push_back(
          {{"id", p.id}, {"p", vec3_json(p.p_c)}, {"bearing", vec3_json(p.bearing.vec())}});
    }
    jf["points"] = points;
    arr.push_back(std::move(jf));
  }
  j["frames"] = arr;
  return j.dump();
}

std::vector<FrameObservation> observations_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("observation file is not valid JSON: ") + e.what());
  }
  if (get<int>(j, "schema_version", "") != 1) {
    throw ConfigError("unsupported observation schema_version");
  }
  std::vector<FrameObservation> frames;
  for (const json& jf : require(j, "frames", "")) {
    FrameObservation f;
    f.frame_index = get<int>(jf, "index", "frames[].");
    f.timestamp = get<double>(jf, "timestamp", "frames[].");
    const json& pose = require(jf, "pose_gt", "frames[].");
    const json& q = require(pose, "q", "frames[].pose_gt.");
    if (!q.is_array() || q.size() != 4) throw ConfigError("bad quaternion in frames[].pose_gt.q");
    f.r_wc_gt = UnitQuaternion{q[3].get<double>(), q[0].get<double>(), q[1].get<double>(),
                               q[2].get<double>()}
                    .to_rotation();
    f.t_wc_gt = get_vec3(pose, "t", "frames[].pose_gt.");
    for (const json& d : require(jf, "directions", "frames[].")) {
      DirectionMeasurement dm;
      dm.observation.dir_c = UnitVec3::normalized(get_vec3(d, "dir", "frames[].directions[]."));
      dm.observation.kind =
          kind_parse(get<std::string>(d, "kind", "frames[].directions[]."), f.frame_index);
      dm.observation.source =
          source_parse(get<std::string>(d, "source", "frames[].directions[]."), f.frame_index);
      dm.observation.truth_id = get<int>(d, "truth_id", "frames[].directions[].");
      dm.plane_index = get<int>(d, "plane_index", "frames[].directions[].");
      f.directions.push_back(dm);
    }
    for (const json& p : require(jf, "planes", "frames[].")) {
      PlaneMeasurement pm;
      pm.n_c = UnitVec3::normalized(get_vec3(p, "n", "frames[].planes[]."));
      pm.d_c = get<double>(p, "d", "frames[].planes[].");
      pm.truth_id = get<int>(p, "truth_id", "frames[].planes[].");
      f.planes.push_back(pm);
    }
    for (const json& p : require(jf, "points", "frames[].")) {
      PointFeature pf;
      pf.id = get<int>(p, "id", "frames[].points[].");
      pf.p_c = get_vec3(p, "p", "frames[].points[].");
      pf.bearing = UnitVec3::normalized(get_vec3(p, "bearing", "frames[].points[]."));
      f.points.push_back(pf);
    }
    frames.push_back(std::move(f));
  }
  return frames;
}

}  // namespace egraph
