#include <CLI11.hpp>
#include <json.hpp>

#include "egraph/config.hpp"
#include "egraph/eval.hpp"
#include "egraph/sweep.hpp"
#include "egraph/tracker.hpp"

#include <cstdlib>
#include <filesystem>
#include <iostream>

namespace {

using namespace egraph;
namespace fs = std::filesystem;

// Relative --out paths land under EGRAPH_OUT_ROOT when it is set.
std::string resolve_out(const std::string& out) {
  const fs::path p(out);
  if (p.is_absolute()) return out;
  if (const char* root = std::getenv("EGRAPH_OUT_ROOT")) {
    return (fs::path(root) / p).string();
  }
  return out;
}

ExperimentConfig resolve_config(const std::string& preset_name, const std::string& config_path,
                                uint64_t seed_override, bool seed_given) {
  if (!preset_name.empty() && !config_path.empty()) {
    throw ConfigError("--preset and --config are mutually exclusive");
  }
  ExperimentConfig cfg =
      !config_path.empty() ? load_config_file(config_path)
                           : preset(preset_name.empty() ? "manhattan" : preset_name);
  if (seed_given) cfg.seed = seed_override;
  return cfg;
}

struct OutputSet {
  std::string dir;
  RunManifest manifest;

  void emit(const std::string& filename, const std::string& content) {
    write_file_atomic((fs::path(dir) / filename).string(), content);
    manifest.outputs.push_back({filename, fnv1a64(content)});
  }
  void finish() {
    write_file_atomic((fs::path(dir) / "manifest.json").string(), manifest_to_json(manifest));
  }
};

int cmd_simulate(const ExperimentConfig& cfg, const std::string& out_dir) {
  const Scene scene = generate_scene(cfg.scene, cfg.seed);
  const auto poses = generate_trajectory(cfg.trajectory);
  const auto frames =
      run_sequence(scene, poses, cfg.camera, cfg.noise, derive_seed(cfg.seed, 0xF0A), false);

  Trajectory gt;
  for (const TimedPose& p : poses) gt.poses.push_back(p);

  OutputSet out{out_dir, {}};
  const std::string config_json = config_to_json(cfg);
  out.manifest.command = "simulate";
  out.manifest.config_hash = fnv1a64(config_json);
  out.emit("config.json", config_json);
  out.emit("observations.json", observations_to_json(frames));
  out.emit("groundtruth.tum", to_tum_string(gt));
  out.finish();
  std::cout << "simulate: " << frames.size() << " frames -> " << out.dir << "\n";
  return 0;
}

int cmd_track(const std::string& obs_path, const ExperimentConfig& cfg,
              const std::string& out_dir) {
  const auto frames = observations_from_json(read_file(obs_path));
  if (frames.empty()) throw std::runtime_error("observation file contains no frames");

  Tracker tracker(cfg.estimator);
  for (const FrameObservation& f : frames) tracker.track(f);

  Trajectory est;
  est.poses = tracker.trajectory();

  nlohmann::json summary;
  summary["schema_version"] = 1;
  summary["frames"] = static_cast<int>(frames.size());
  summary["keyframes"] = static_cast<int>(tracker.graph().keyframes().size());
  summary["edges"] = static_cast<int>(tracker.graph().edges().size());
  nlohmann::json failures = nlohmann::json::array();
  int rotation_failures = 0, translation_failures = 0;
  for (const TrackResult& r : tracker.results()) {
    if (r.failure.empty()) continue;
    failures.push_back({{"frame", r.frame_index}, {"cause", r.failure}});
    if (r.failure == "rotation-unavailable") ++rotation_failures;
    if (r.failure == "translation-degenerate") ++translation_failures;
  }
  summary["failures"] = failures;
  summary["rotation_unavailable_frames"] = rotation_failures;
  summary["translation_degenerate_frames"] = translation_failures;

  OutputSet out{out_dir, {}};
  const std::string config_json = config_to_json(cfg);
  out.manifest.command = "track";
  out.manifest.config_hash = fnv1a64(config_json);
  out.emit("estimate.tum", to_tum_string(est));
  out.emit("egraph.json", tracker.graph().to_json());
  out.emit("tracking.json", summary.dump(2));
  out.finish();
  std::cout << "track: " << frames.size() << " frames, "
            << tracker.graph().keyframes().size() << " keyframes, "
            << tracker.graph().edges().size() << " edges -> " << out.dir << "\n";
  if (rotation_failures + translation_failures > 0) {
    std::cerr << "track: " << rotation_failures << " rotation-unavailable, "
              << translation_failures << " translation-degenerate frames (see tracking.json)\n";
  }
  return 0;
}

int cmd_eval(const std::string& est_path, const std::string& gt_path, double max_dt,
             std::vector<int> deltas, const std::string& align, const std::string& out_dir) {
  if (deltas.empty()) deltas = {1};
  const Trajectory est = read_tum_file(est_path);
  const Trajectory gt = read_tum_file(gt_path);
  const AlignmentMode mode =
      align == "first-frame" ? AlignmentMode::FirstFrame : AlignmentMode::Se3;
  const MetricReport report = evaluate(est, gt, max_dt, deltas, mode);

  OutputSet out{out_dir, {}};
  out.manifest.command = "eval";
  out.manifest.config_hash = fnv1a64(read_file(est_path));
  out.emit("report.json", report_to_json(report));
  out.emit("per_frame.csv", report_to_csv(report));
  out.finish();
  std::cout << "eval: ate_rmse=" << report.ate_rmse_m << " m, are_mean=" << report.are_mean_deg
            << " deg over " << report.paired_frames << " pairs -> " << out.dir << "\n";
  return 0;
}

int cmd_sweep(const ExperimentConfig& cfg, const std::vector<double>& grid, int trials,
              bool serial, const std::string& out_dir) {
  const auto rows = run_sweep(cfg, grid, trials, !serial);
  OutputSet out{out_dir, {}};
  const std::string config_json = config_to_json(cfg);
  out.manifest.command = "sweep";
  out.manifest.config_hash = fnv1a64(config_json);
  out.manifest.notes.push_back("trials per cell: " + std::to_string(trials));
  out.emit("config.json", config_json);
  out.emit("sweep.csv", sweep_to_csv(rows));
  out.finish();
  std::cout << "sweep: " << grid.size() << " cells x " << trials << " trials -> " << out.dir
            << "\n";
  return 0;
}

int cmd_graph_stats(const std::string& graph_path, int covis_min, const std::string& out_dir) {
  const GraphExport g = parse_graph_export(read_file(graph_path));

  std::vector<KeyframeNode> nodes;
  for (const GraphExport::Keyframe& kf : g.keyframes) {
    KeyframeNode node;
    node.id = kf.id;
    node.frame_index = kf.frame_index;
    node.point_ids = kf.point_ids;
    nodes.push_back(std::move(node));
  }
  const auto covis = build_covisibility_graph(nodes, covis_min);

  auto shared_points = [&](int a, int b) {
    int shared = 0;
    for (int pa : nodes[a].point_ids) {
      for (int pb : nodes[b].point_ids) {
        if (pa == pb) {
          ++shared;
          break;
        }
      }
    }
    return shared;
  };

  std::ostringstream csv;
  csv << "graph,a,b,span,shared\n";
  int eg_max_span = 0;
  double eg_span_sum = 0.0;
  bool zero_point_edge = false;
  for (const GraphExport::Edge& e : g.edges) {
    csv << "egraph," << e.a << "," << e.b << "," << (e.b - e.a) << "," << e.shared << "\n";
    eg_max_span = std::max(eg_max_span, e.b - e.a);
    eg_span_sum += e.b - e.a;
    if (shared_points(e.a, e.b) == 0) zero_point_edge = true;
  }
  int cv_max_span = 0;
  double cv_span_sum = 0.0;
  for (const CovisibilityEdge& e : covis) {
    csv << "covisibility," << e.a << "," << e.b << "," << (e.b - e.a) << "," << e.shared_points
        << "\n";
    cv_max_span = std::max(cv_max_span, e.b - e.a);
    cv_span_sum += e.b - e.a;
  }

  nlohmann::json j;
  j["schema_version"] = 1;
  j["keyframes"] = static_cast<int>(g.keyframes.size());
  j["egraph"] = {{"edges", static_cast<int>(g.edges.size())},
                 {"max_span", eg_max_span},
                 {"mean_span", g.edges.empty() ? 0.0 : eg_span_sum / g.edges.size()}};
  j["covisibility"] = {{"edges", static_cast<int>(covis.size())},
                       {"max_span", cv_max_span},
                       {"mean_span", covis.empty() ? 0.0 : cv_span_sum / covis.size()},
                       {"min_shared", covis_min}};
  j["egraph_edge_with_zero_shared_points"] = zero_point_edge;
  j["egraph_max_span_exceeds_covisibility"] = eg_max_span > cv_max_span;

  OutputSet out{out_dir, {}};
  out.manifest.command = "graph-stats";
  out.manifest.config_hash = fnv1a64(read_file(graph_path));
  out.emit("spans.csv", csv.str());
  out.emit("graph_summary.json", j.dump(2));
  out.finish();
  std::cout << "graph-stats: egraph max span " << eg_max_span << ", covisibility max span "
            << cv_max_span << " -> " << out.dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"E-Graph rotation estimation: simulator, tracker, and evaluation tools"};
  app.require_subcommand(1);

  std::string preset_name, config_path, out_dir = "run";
  uint64_t seed = 0;
  bool seed_given = false;

  auto add_config_opts = [&](CLI::App* cmd) {
    cmd->add_option("--preset", preset_name,
                    "built-in experiment preset (manhattan, general, corridor, pure-rotation)");
    cmd->add_option("--config", config_path, "experiment config JSON file");
    cmd->add_option("--seed", seed, "master seed override")->each([&](const std::string&) {
      seed_given = true;
    });
    cmd->add_option("--out", out_dir, "output directory (relative paths land under $EGRAPH_OUT_ROOT)");
  };

  CLI::App* simulate = app.add_subcommand("simulate", "generate observations and ground truth");
  add_config_opts(simulate);

  CLI::App* track = app.add_subcommand("track", "run the E-Graph tracker on an observation file");
  std::string obs_path;
  track->add_option("--obs", obs_path, "observations.json from simulate")->required();
  add_config_opts(track);

  CLI::App* eval_cmd = app.add_subcommand("eval", "compare two TUM trajectories");
  std::string est_path, gt_path, align = "se3";
  double max_dt = 0.02;
  std::vector<int> deltas;
  eval_cmd->add_option("--est", est_path, "estimated trajectory (TUM)")->required();
  eval_cmd->add_option("--gt", gt_path, "ground-truth trajectory (TUM)")->required();
  eval_cmd->add_option("--max-dt", max_dt, "association window in seconds");
  eval_cmd->add_option("--delta", deltas, "RPE frame gaps (repeatable)");
  eval_cmd->add_option("--align", align, "alignment: se3 | first-frame")
      ->check(CLI::IsMember({"se3", "first-frame"}));
  eval_cmd->add_option("--out", out_dir, "output directory");

  CLI::App* sweep_cmd = app.add_subcommand("sweep", "Monte-Carlo noise sweep: egraph vs chaining");
  std::vector<double> grid{0.0, 0.1, 0.2, 0.5};
  int trials = 10;
  bool serial = false;
  sweep_cmd->add_option("--noise-grid", grid, "direction noise sigmas in degrees");
  sweep_cmd->add_option("--trials", trials, "trials per cell")->check(CLI::PositiveNumber);
  sweep_cmd->add_flag("--serial", serial, "disable OpenMP (reference path)");
  add_config_opts(sweep_cmd);

  CLI::App* stats = app.add_subcommand("graph-stats", "span/connectivity report from a graph export");
  std::string graph_path;
  int covis_min = 15;
  stats->add_option("--graph", graph_path, "egraph.json from track")->required();
  stats->add_option("--covis-min", covis_min, "covisibility edge threshold (shared points)");
  stats->add_option("--out", out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // usage problems exit 1, --help exits 0
  }

  try {
    const std::string out = resolve_out(out_dir);
    if (simulate->parsed()) {
      return cmd_simulate(resolve_config(preset_name, config_path, seed, seed_given), out);
    }
    if (track->parsed()) {
      return cmd_track(obs_path, resolve_config(preset_name, config_path, seed, seed_given), out);
    }
    if (eval_cmd->parsed()) {
      return cmd_eval(est_path, gt_path, max_dt, deltas, align, out);
    }
    if (sweep_cmd->parsed()) {
      return cmd_sweep(resolve_config(preset_name, config_path, seed, seed_given), grid, trials,
                       serial, out);
    }
    if (stats->parsed()) {
      return cmd_graph_stats(graph_path, covis_min, out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
