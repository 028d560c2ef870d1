#pragma once

#include "egraph/graph.hpp"
#include "egraph/observation.hpp"

#include <map>
#include <span>
#include <string>
#include <vector>

namespace egraph {

struct TrackerOptions {
  EGraph::Options graph;
  KeyframePolicy keyframe;
  RefineOptions refine;
  int min_point_overlap = 2;   // shared point features needed for translation
  int min_fallback_points = 3; // 3D-3D correspondences for the point fallback
};

struct TrackResult {
  int frame_index = -1;
  TimedPose pose;                       // world pose estimate (world = anchor frame)
  bool rotation_from_directions = false;
  bool translation_resolved = false;
  int reference_keyframe = -1;
  int matched_directions = 0;
  bool keyframe_inserted = false;
  std::string failure;  // "", "rotation-unavailable", "translation-degenerate"
};

/// Frame-by-frame tracking pipeline: rotation from direction landmarks via
/// the best reference keyframe, translation from point correspondences
/// against the nearest overlapping frame (planes as a fallback), refinement,
/// and keyframe/graph maintenance. The first tracked frame anchors the
/// world.
class Tracker {
 public:
  Tracker() = default;
  explicit Tracker(const TrackerOptions& opts) : opts_(opts) {}

  TrackResult track(const FrameObservation& obs);

  const EGraph& graph() const { return graph_; }
  const std::vector<TimedPose>& trajectory() const { return trajectory_; }
  const std::vector<TrackResult>& results() const { return results_; }

 private:
  struct DirectionMatch {
    int landmark_id = -1;
    UnitVec3 dir_c;      // sign-corrected camera-frame direction
    int plane_index = -1;
  };

  struct FrameRecord {
    int frame_index = -1;
    TimedPose pose;
    std::map<int, Vec3> points;                  // feature id -> camera-frame position
    std::map<int, PlaneMeasurement> planes;      // plane landmark id -> measurement
    std::vector<DirectionMatch> direction_matches;
  };

  std::vector<DirectionMatch> match_frame(const FrameObservation& obs, const Rotation& prior_r,
                                          const Vec3& prior_t, bool* new_landmark) const;
  const FrameRecord* find_overlap_frame(const FrameObservation& obs) const;

  TrackerOptions opts_;
  EGraph graph_;
  bool initialized_ = false;
  int frames_since_keyframe_ = 0;
  std::vector<FrameRecord> history_;
  std::vector<TimedPose> trajectory_;
  std::vector<TrackResult> results_;
};

/// Frame-to-frame chaining baseline: consecutive relative rotations from
/// directly matched directions and translations from shared points,
/// composed along the sequence. Accumulates drift by construction; used as
/// the comparison method in sweeps.
std::vector<TimedPose> track_frame_to_frame(std::span<const FrameObservation> frames,
                                            double th_vd = kDefaultThVd);

}  // namespace egraph
