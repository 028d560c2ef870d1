#pragma once

#include "egraph/config.hpp"

#include <span>
#include <string>
#include <vector>

namespace egraph {

/// One aggregate row of a noise sweep: a noise level x estimation method,
/// with median and 90th-percentile ARE/ATE over the trials.
struct SweepRow {
  double dir_sigma_deg = 0.0;
  int trials = 0;
  std::string method;  // "egraph" or "chained"
  double are_median_deg = 0.0;
  double are_q90_deg = 0.0;
  double ate_median_m = 0.0;
  double ate_q90_m = 0.0;
};

/// Monte-Carlo noise sweep over (sigma, trial) cells comparing the graph
/// tracker against frame-to-frame chaining. Deterministic for a fixed
/// config seed; the OpenMP and serial paths produce identical rows.
std::vector<SweepRow> run_sweep(const ExperimentConfig& base, std::span<const double> sigmas,
                                int trials, bool parallel);

std::string sweep_to_csv(std::span<const SweepRow> rows);

}  // namespace egraph
