#pragma once

#include "egraph/observation.hpp"
#include "egraph/pose.hpp"

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace egraph {

struct ParseError : std::runtime_error {
  ParseError(const std::string& what, int line_number)
      : std::runtime_error(what + " (line " + std::to_string(line_number) + ")"),
        line(line_number) {}
  int line = 0;
};

/// Timestamped pose sequence. Timestamps must be strictly increasing.
struct Trajectory {
  std::vector<TimedPose> poses;

  void validate() const;  // throws std::invalid_argument on bad ordering
};

struct PosePair {
  TimedPose est;
  TimedPose gt;
};

/// Greedy nearest-timestamp association within max_dt; every pose is used
/// at most once. Throws std::runtime_error when no pair qualifies.
std::vector<PosePair> associate(const Trajectory& est, const Trajectory& gt, double max_dt);

/// Rigid transform g = R p + t from estimate positions onto ground truth.
struct RigidTransform {
  Rotation r;
  Vec3 t = Vec3::Zero();
};

/// Closed-form SE(3) alignment over the paired positions (no scale).
/// Throws DegeneracyError with fewer than 3 pairs or collinear positions.
RigidTransform align_se3(std::span<const PosePair> pairs);

/// Alternative anchoring: the transform taking the first estimated pose
/// exactly onto the first ground-truth pose.
RigidTransform align_first_frame(std::span<const PosePair> pairs);

/// Root-mean-square position residual after applying the alignment.
double ate_rmse(std::span<const PosePair> pairs, const RigidTransform& alignment);

/// Absolute rotation error statistics: geodesic angle between the aligned
/// estimated rotation (R_align * R_est) and the ground truth, in degrees.
/// Benchmark tools disagree on mean vs RMSE for the reported "average",
/// so both come back.
struct AreResult {
  double mean_deg = 0.0;
  double rmse_deg = 0.0;
};
AreResult are_stats(std::span<const PosePair> pairs, const RigidTransform& alignment);
double are_mean(std::span<const PosePair> pairs, const RigidTransform& alignment);

/// Relative pose error over a fixed pairing gap:
/// RMSE of the translation/rotation parts of
/// (Q_i^-1 Q_{i+d})^-1 (P_i^-1 P_{i+d}). Throws when too short.
struct RpeResult {
  int delta = 1;
  double rmse_m = 0.0;
  double rmse_deg = 0.0;
};
RpeResult rpe(std::span<const PosePair> pairs, int delta);

enum class AlignmentMode { Se3, FirstFrame };

struct MetricReport {
  int paired_frames = 0;
  double ate_rmse_m = 0.0;
  double are_mean_deg = 0.0;
  double are_rmse_deg = 0.0;
  std::vector<RpeResult> rpe_per_delta;
  RigidTransform alignment;
  // Per-frame series, one entry per associated pair.
  std::vector<double> timestamps;
  std::vector<double> trans_err_m;
  std::vector<double> rot_err_deg;
};

MetricReport evaluate(const Trajectory& est, const Trajectory& gt, double max_dt,
                      std::span<const int> deltas, AlignmentMode mode = AlignmentMode::Se3);

/// TUM format: "timestamp tx ty tz qx qy qz qw", '#' comments skipped.
Trajectory read_tum(std::istream& in, const std::string& name = "<stream>");
Trajectory read_tum_file(const std::string& path);
void write_tum(const Trajectory& trajectory, std::ostream& out);
std::string to_tum_string(const Trajectory& trajectory);

std::string report_to_json(const MetricReport& report);
std::string report_to_csv(const MetricReport& report);  // one row per paired frame

}  // namespace egraph
