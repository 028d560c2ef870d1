#pragma once

#include "egraph/sim.hpp"
#include "egraph/tracker.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace egraph {

/// Configuration/schema problem; the message carries the offending field
/// path (e.g. "trajectory.frame_count").
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EvalOptions {
  double max_dt = 0.02;
  std::vector<int> rpe_deltas = {1};
};

/// One reproducible experiment: world, camera path, noise, estimator
/// options, and the master seed everything derives from.
struct ExperimentConfig {
  int schema_version = 1;
  std::string name = "experiment";
  uint64_t seed = 1;
  SceneSpec scene;
  TrajectorySpec trajectory;
  CameraModel camera;
  NoiseSpec noise;
  TrackerOptions estimator;
  EvalOptions eval;
};

ExperimentConfig config_from_json(const std::string& text);
std::string config_to_json(const ExperimentConfig& config);
ExperimentConfig load_config_file(const std::string& path);

/// Built-in experiment presets: "manhattan", "general", "corridor",
/// "pure-rotation". Throws ConfigError for unknown names.
ExperimentConfig preset(const std::string& name);
std::vector<std::string> preset_names();

/// FNV-1a 64-bit, stable across platforms; used for manifest checksums.
uint64_t fnv1a64(std::string_view data);

/// Writes through a temp file in the same directory plus rename, so
/// readers never observe partial output.
void write_file_atomic(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

/// Reproducibility record written next to every command's outputs.
struct RunManifest {
  int schema_version = 1;
  std::string command;
  uint64_t config_hash = 0;
  std::vector<std::pair<std::string, uint64_t>> outputs;  // filename -> fnv1a64
  std::vector<std::string> notes;
};
std::string manifest_to_json(const RunManifest& manifest);

/// Observation-file schema (the simulate -> track interface).
std::string observations_to_json(std::span<const FrameObservation> frames);
std::vector<FrameObservation> observations_from_json(const std::string& text);

}  // namespace egraph
