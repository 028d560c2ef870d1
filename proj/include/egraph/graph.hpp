#pragma once

#include "egraph/observation.hpp"
#include "egraph/pose.hpp"

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace egraph {

/// Per-frame signals driving keyframe insertion.
struct FrameStats {
  int frames_since_keyframe = 0;
  double tracked_ratio = 1.0;  // fraction of the last keyframe's features still tracked
  bool new_landmark = false;
};

struct KeyframePolicy {
  int max_frame_gap = 20;
  double min_tracked_ratio = 0.85;
};

/// True iff the frame gap is reached, tracking dropped below the ratio, or
/// a new plane / vanishing direction appeared.
bool should_insert_keyframe(const FrameStats& stats, const KeyframePolicy& policy = {});

/// Sign-corrected camera-frame measurement of a stored landmark: rotating
/// it to the world frame lands on the landmark direction (not its negation).
struct KeyframeMeasurement {
  int landmark_id = -1;
  UnitVec3 dir_c;
};

struct KeyframeNode {
  int id = -1;
  int frame_index = -1;
  Rotation r_wc;
  Vec3 t_wc = Vec3::Zero();
  std::vector<KeyframeMeasurement> measurements;
  std::vector<int> point_ids;  // observed point features, for the covisibility baseline
};

/// Rotation edge between keyframes a < b, supported by >= 2 shared
/// landmarks spanning >= 2 non-parallel directions. r_ab maps b-frame
/// vectors into the a-frame.
struct GraphEdge {
  int a = -1;
  int b = -1;
  std::vector<int> shared_landmarks;
  Rotation r_ab;
  double residual = 0.0;  // mean angular mismatch over the shared pairs, radians

  int span() const { return b - a; }
};

struct CovisibilityEdge {
  int a = -1;
  int b = -1;
  int shared_points = 0;
};

struct GraphStats {
  int keyframe_count = 0;
  int landmark_count = 0;  // vanishing directions + planes + potential directions
  int edge_count = 0;
  int max_span = 0;
  double mean_span = 0.0;
  int connected_components = 0;
  std::map<int, int> support_histogram;  // support_count -> landmark count
};

struct InsertSummary {
  int keyframe_id = -1;
  int matched = 0;
  int fused = 0;
  int new_landmarks = 0;
  int promotions = 0;
  int expired_potentials = 0;
  int degenerate_pairs = 0;  // prior keyframes sharing >= 2 but all parallel
  std::vector<int> new_edges;  // indices into edges()
};

/// The Extensibility Graph: keyframe nodes, landmark nodes (vanishing
/// directions, plane normals, planes, potential directions) and rotation
/// edges between keyframes that share landmarks. Single writer; reads are
/// safe concurrently when nothing mutates.
class EGraph {
 public:
  struct Options {
    double th_vd = kDefaultThVd;
    int pd_expiry_keyframes = 10;
    int min_edge_shared = 2;
    double plane_d_tol = 0.3;  // meters; separates parallel planes by offset
  };

  EGraph() = default;

  /// Anchors the graph at the first frame with an identity pose (the world
  /// frame is the first keyframe). Frame-0 planes and vanishing directions
  /// become landmarks directly; lone line directions become potentials.
  static EGraph init(const FrameObservation& first, const Options& opts);
  static EGraph init(const FrameObservation& first);

  /// Inserts a keyframe: associates observations (Eq.-8-style sign
  /// resolution), fuses matches, promotes potentials, creates landmarks,
  /// and connects edges to every prior keyframe sharing enough landmarks.
  InsertSummary insert_keyframe(const FrameObservation& obs, const Rotation& r_wc,
                                const Vec3& t_wc);

  const std::vector<KeyframeNode>& keyframes() const { return keyframes_; }
  const std::vector<DirectionLandmark>& direction_landmarks() const { return directions_; }
  const std::vector<PlaneLandmark>& plane_landmarks() const { return planes_; }
  const std::vector<PotentialDirection>& potential_directions() const { return potentials_; }
  const std::vector<GraphEdge>& edges() const { return edges_; }
  const Options& options() const { return opts_; }

  const DirectionLandmark* find_direction(int landmark_id) const;
  const PlaneLandmark* find_plane(int plane_id) const;

  /// Best plane landmark for a world-frame Hessian measurement whose
  /// normal already matched the given direction landmark: smallest
  /// sign-aligned |d| mismatch within plane_d_tol, or null.
  const PlaneLandmark* associate_plane(int normal_landmark_id, const UnitVec3& n_w,
                                       double d_w) const;

  /// Fewest-edge rotation between two keyframes (ties broken by summed
  /// edge residual), composed along the path. Empty when disconnected.
  /// The path lists the visited keyframe ids, empty for a == b.
  std::optional<std::pair<Rotation, std::vector<int>>> relative_rotation(int a, int b) const;

  GraphStats stats() const;

  /// JSON export consumed by the graph-stats command.
  std::string to_json() const;

 private:
  explicit EGraph(const Options& opts) : opts_(opts) {}

  void process_observations(const FrameObservation& obs, KeyframeNode& node,
                            InsertSummary& summary);
  void connect_edges(KeyframeNode& node, InsertSummary& summary);

  Options opts_;
  std::vector<KeyframeNode> keyframes_;
  std::vector<DirectionLandmark> directions_;
  std::vector<PlaneLandmark> planes_;
  std::vector<PotentialDirection> potentials_;
  std::vector<GraphEdge> edges_;
  int next_landmark_id_ = 0;
};

/// Conventional covisibility baseline: an edge wherever two keyframes
/// share at least min_shared point features.
std::vector<CovisibilityEdge> build_covisibility_graph(std::span<const KeyframeNode> keyframes,
                                                       int min_shared = 15);

/// Parsed form of the JSON export, enough to rebuild span statistics.
struct GraphExport {
  struct Keyframe {
    int id = -1;
    int frame_index = -1;
    std::vector<int> point_ids;
  };
  struct Edge {
    int a = -1;
    int b = -1;
    int shared = 0;
    double residual = 0.0;
  };
  std::vector<Keyframe> keyframes;
  std::vector<Edge> edges;
};

GraphExport parse_graph_export(const std::string& json_text);

}  // namespace egraph
