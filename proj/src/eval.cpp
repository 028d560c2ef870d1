#include "egraph/eval.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace egraph {

void Trajectory::validate() const {
  for (size_t i = 1; i < poses.size(); ++i) {
    if (poses[i].timestamp <= poses[i - 1].timestamp) {
      throw std::invalid_argument("trajectory timestamps are not strictly increasing at index " +
                                  std::to_string(i));
    }
  }
}

std::vector<PosePair> associate(const Trajectory& est, const Trajectory& gt, double max_dt) {
  if (est.poses.empty() || gt.poses.empty()) {
    throw std::runtime_error("associate: empty trajectory");
  }
  struct Candidate {
    double dt;
    size_t i, j;
  };
  std::vector<Candidate> candidates;
  for (size_t i = 0; i < est.poses.size(); ++i) {
    for (size_t j = 0; j < gt.poses.size(); ++j) {
      const double dt = std::abs(est.poses[i].timestamp - gt.poses[j].timestamp);
      if (dt <= max_dt) candidates.push_back({dt, i, j});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    return std::tie(a.dt, a.i, a.j) < std::tie(b.dt, b.i, b.j);
  });

  std::vector<bool> est_used(est.poses.size(), false), gt_used(gt.poses.size(), false);
  std::vector<PosePair> pairs;
  for (const Candidate& c : candidates) {
    if (est_used[c.i] || gt_used[c.j]) continue;
    est_used[c.i] = gt_used[c.j] = true;
    pairs.push_back({est.poses[c.i], gt.poses[c.j]});
  }
  if (pairs.empty()) {
    throw std::runtime_error("associate: no timestamp pairs within max_dt");
  }
  std::sort(pairs.begin(), pairs.end(),
            [](const PosePair& a, const PosePair& b) { return a.est.timestamp < b.est.timestamp; });
  return pairs;
}

RigidTransform align_se3(std::span<const PosePair> pairs) {
  std::vector<PointCorrespondence3D> corrs;
  corrs.reserve(pairs.size());
  for (const PosePair& p : pairs) corrs.push_back({p.est.t_wc, p.gt.t_wc});
  const RelativeMotion m = rigid_from_point_pairs(corrs);
  return RigidTransform{m.rotation, m.translation};
}

RigidTransform align_first_frame(std::span<const PosePair> pairs) {
  if (pairs.empty()) throw std::invalid_argument("align_first_frame: no pairs");
  const Rotation r = pairs[0].gt.r_wc * pairs[0].est.r_wc.inverse();
  return RigidTransform{r, pairs[0].gt.t_wc - r * pairs[0].est.t_wc};
}

double ate_rmse(std::span<const PosePair> pairs, const RigidTransform& alignment) {
  double sq_sum = 0.0;
  for (const PosePair& p : pairs) {
    sq_sum += (p.gt.t_wc - (alignment.r * p.est.t_wc + alignment.t)).squaredNorm();
  }
  return pairs.empty() ? 0.0 : std::sqrt(sq_sum / static_cast<double>(pairs.size()));
}

AreResult are_stats(std::span<const PosePair> pairs, const RigidTransform& alignment) {
  double sum = 0.0, sq_sum = 0.0;
  for (const PosePair& p : pairs) {
    const double deg = angular_distance(alignment.r * p.est.r_wc, p.gt.r_wc) * 180.0 / M_PI;
    sum += deg;
    sq_sum += deg * deg;
  }
  const double n = pairs.empty() ? 1.0 : static_cast<double>(pairs.size());
  return {sum / n, std::sqrt(sq_sum / n)};
}

double are_mean(std::span<const PosePair> pairs, const RigidTransform& alignment) {
  return are_stats(pairs, alignment).mean_deg;
}

namespace {

struct Se3 {
  Rotation r;
  Vec3 t;

  Se3 inverse() const { return {r.inverse(), -(r.inverse() * t)}; }
  Se3 operator*(const Se3& o) const { return {r * o.r, r * o.t + t}; }
};

}  // namespace

RpeResult rpe(std::span<const PosePair> pairs, int delta) {
  if (delta < 1) throw std::invalid_argument("rpe: delta must be >= 1");
  if (static_cast<int>(pairs.size()) <= delta) {
    throw std::runtime_error("rpe: trajectory shorter than the requested delta");
  }
  double trans_sq = 0.0, rot_sq = 0.0;
  int count = 0;
  for (size_t i = 0; i + delta < pairs.size(); ++i) {
    const Se3 q0{pairs[i].gt.r_wc, pairs[i].gt.t_wc};
    const Se3 q1{pairs[i + delta].gt.r_wc, pairs[i + delta].gt.t_wc};
    const Se3 p0{pairs[i].est.r_wc, pairs[i].est.t_wc};
    const Se3 p1{pairs[i + delta].est.r_wc, pairs[i + delta].est.t_wc};
    const Se3 err = (q0.inverse() * q1).inverse() * (p0.inverse() * p1);
    trans_sq += err.t.squaredNorm();
    const double ang = angular_distance(err.r, Rotation::identity());
    rot_sq += ang * ang;
    ++count;
  }
  RpeResult out;
  out.delta = delta;
  out.rmse_m = std::sqrt(trans_sq / count);
  out.rmse_deg = std::sqrt(rot_sq / count) * 180.0 / M_PI;
  return out;
}

MetricReport evaluate(const Trajectory& est, const Trajectory& gt, double max_dt,
                      std::span<const int> deltas, AlignmentMode mode) {
  est.validate();
  gt.validate();
  const std::vector<PosePair> pairs = associate(est, gt, max_dt);
  MetricReport report;
  report.paired_frames = static_cast<int>(pairs.size());
  report.alignment = mode == AlignmentMode::Se3 ? align_se3(pairs) : align_first_frame(pairs);
  report.ate_rmse_m = ate_rmse(pairs, report.alignment);
  const AreResult are = are_stats(pairs, report.alignment);
  report.are_mean_deg = are.mean_deg;
  report.are_rmse_deg = are.rmse_deg;
  for (int d : deltas) {
    if (static_cast<int>(pairs.size()) > d) report.rpe_per_delta.push_back(rpe(pairs, d));
  }
  for (const PosePair& p : pairs) {
    report.timestamps.push_back(p.est.timestamp);
    report.trans_err_m.push_back(
        (p.gt.t_wc - (report.alignment.r * p.est.t_wc + report.alignment.t)).norm());
    report.rot_err_deg.push_back(
        angular_distance(report.alignment.r * p.est.r_wc, p.gt.r_wc) * 180.0 / M_PI);
  }
  return report;
}

Trajectory read_tum(std::istream& in, const std::string& name) {
  Trajectory out;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;

    std::istringstream fields(line);
    double ts, tx, ty, tz, qx, qy, qz, qw;
    if (!(fields >> ts >> tx >> ty >> tz >> qx >> qy >> qz >> qw)) {
      throw ParseError(name + ": malformed TUM pose line", line_number);
    }
    const double norm = std::sqrt(qx * qx + qy * qy + qz * qz + qw * qw);
    if (norm < 1e-6) {
      throw ParseError(name + ": zero quaternion", line_number);
    }
    TimedPose pose;
    pose.timestamp = ts;
    pose.r_wc = UnitQuaternion{qw / norm, qx / norm, qy / norm, qz / norm}.to_rotation();
    pose.t_wc = Vec3(tx, ty, tz);
    if (!out.poses.empty() && pose.timestamp <= out.poses.back().timestamp) {
      throw ParseError(name + ": timestamps not strictly increasing", line_number);
    }
    out.poses.push_back(pose);
  }
  return out;
}

Trajectory read_tum_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trajectory file: " + path);
  return read_tum(in, path);
}

void write_tum(const Trajectory& trajectory, std::ostream& out) {
  char buf[256];
  for (const TimedPose& p : trajectory.poses) {
    const UnitQuaternion q = UnitQuaternion::from_rotation(p.r_wc);
    std::snprintf(buf, sizeof(buf), "%.6f %.12g %.12g %.12g %.12g %.12g %.12g %.12g\n",
                  p.timestamp, p.t_wc.x(), p.t_wc.y(), p.t_wc.z(), q.qx, q.qy, q.qz, q.qw);
    out << buf;
  }
}

std::string to_tum_string(const Trajectory& trajectory) {
  std::ostringstream out;
  write_tum(trajectory, out);
  return out.str();
}

std::string report_to_json(const MetricReport& report) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["paired_frames"] = report.paired_frames;
  j["ate_rmse_m"] = report.ate_rmse_m;
  j["are_mean_deg"] = report.are_mean_deg;
  j["are_rmse_deg"] = report.are_rmse_deg;
  nlohmann::json rpes = nlohmann::json::array();
  for (const RpeResult& r : report.rpe_per_delta) {
    rpes.push_back({{"delta", r.delta}, {"rmse_m", r.rmse_m}, {"rmse_deg", r.rmse_deg}});
  }
  j["rpe"] = rpes;
  const UnitQuaternion q = UnitQuaternion::from_rotation(report.alignment.r);
  j["alignment"] = {{"t", {report.alignment.t.x(), report.alignment.t.y(), report.alignment.t.z()}},
                    {"q", {q.qx, q.qy, q.qz, q.qw}}};
  return j.dump(2);
}

std::string report_to_csv(const MetricReport& report) {
  std::ostringstream out;
  out << "timestamp,trans_err_m,rot_err_deg\n";
  char buf[128];
  for (size_t i = 0; i < report.timestamps.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.6f,%.12g,%.12g\n", report.timestamps[i],
                  report.trans_err_m[i], report.rot_err_deg[i]);
    out << buf;
  }
  return out.str();
}

}  // namespace egraph
