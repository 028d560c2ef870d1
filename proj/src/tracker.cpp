#include "egraph/tracker.hpp"

#include <algorithm>
#include <cmath>

namespace egraph {

std::vector<Tracker::DirectionMatch> Tracker::match_frame(const FrameObservation& obs,
                                                          const Rotation& prior_r,
                                                          const Vec3& prior_t,
                                                          bool* new_landmark) const {
  std::vector<DirectionMatch> matches;
  if (new_landmark) *new_landmark = false;

  std::vector<DirectionLandmark> vd_set, pn_set, pd_set;
  for (const DirectionLandmark& lm : graph_.direction_landmarks()) {
    (lm.kind == DirectionKind::VanishingDirection ? vd_set : pn_set).push_back(lm);
  }
  for (const PotentialDirection& pd : graph_.potential_directions()) {
    pd_set.push_back({pd.id, pd.dir_w, 1, DirectionKind::VanishingDirection});
  }

  for (const DirectionMeasurement& dm : obs.directions) {
    const DirectionObservation& o = dm.observation;
    const UnitVec3 dir_w = to_world(o.dir_c, prior_r);
    const auto& candidates = o.kind == DirectionKind::VanishingDirection ? vd_set : pn_set;
    if (auto m = match_direction(dir_w, candidates, opts_.graph.th_vd)) {
      matches.push_back({m->landmark_id, m->sign > 0 ? o.dir_c : -o.dir_c, dm.plane_index});
      if (new_landmark && dm.plane_index >= 0) {
        // A matched normal can still be a new physical plane (parallel
        // wall at a different offset), which counts as a new landmark.
        const PlaneMeasurement& pm = obs.planes[dm.plane_index];
        const UnitVec3 n_w = to_world(pm.n_c, prior_r);
        const double d_w = pm.d_c - n_w.vec().dot(prior_t);
        if (!graph_.associate_plane(m->landmark_id, n_w, d_w)) *new_landmark = true;
      }
      continue;
    }
    if (!new_landmark) continue;
    if (o.kind == DirectionKind::VanishingDirection) {
      // A line matching a stored potential will promote it to a landmark;
      // an unmatched bundle direction becomes one outright. Either way
      // the keyframe policy sees a new landmark. Unmatched lone lines
      // only ever become potentials and do not trigger.
      if (match_direction(dir_w, pd_set, opts_.graph.th_vd) ||
          o.source == ObservationSource::LineBundle) {
        *new_landmark = true;
      }
    } else {
      *new_landmark = true;  // unmatched plane
    }
  }
  return matches;
}

const Tracker::FrameRecord* Tracker::find_overlap_frame(const FrameObservation& obs) const {
  for (auto it = history_.rbegin(); it != history_.rend(); ++it) {
    int shared = 0;
    for (const PointFeature& f : obs.points) {
      if (it->points.count(f.id)) ++shared;
    }
    if (shared >= opts_.min_point_overlap) return &*it;
  }
  return nullptr;
}

TrackResult Tracker::track(const FrameObservation& obs) {
  TrackResult result;
  result.frame_index = obs.frame_index;

  if (!initialized_) {
    graph_ = EGraph::init(obs, opts_.graph);
    initialized_ = true;
    result.pose = {obs.timestamp, Rotation::identity(), Vec3::Zero()};
    result.rotation_from_directions = true;
    result.translation_resolved = true;
    result.reference_keyframe = 0;
    result.keyframe_inserted = true;
  } else {
    const TimedPose& prior = history_.back().pose;
    bool new_landmark = false;
    const std::vector<DirectionMatch> matches =
        match_frame(obs, prior.r_wc, prior.t_wc, &new_landmark);
    result.matched_directions = static_cast<int>(matches.size());

    // --- Rotation from the best reference keyframe -----------------------
    Rotation r_wc = prior.r_wc;
    bool have_rotation = false;
    {
      const KeyframeNode* best = nullptr;
      std::vector<std::pair<const KeyframeMeasurement*, const DirectionMatch*>> best_shared;
      for (const KeyframeNode& kf : graph_.keyframes()) {
        std::vector<std::pair<const KeyframeMeasurement*, const DirectionMatch*>> shared;
        for (const KeyframeMeasurement& m : kf.measurements) {
          for (const DirectionMatch& dm : matches) {
            if (dm.landmark_id == m.landmark_id) shared.push_back({&m, &dm});
          }
        }
        // Most shared landmarks; anchor (lowest id) preferred on ties.
        if (shared.size() > best_shared.size()) {
          best = &kf;
          best_shared = std::move(shared);
        }
      }
      if (best && best_shared.size() >= 2) {
        MatchedDirectionSet pairs;
        for (const auto& [m, dm] : best_shared) pairs.push_back({m->dir_c, dm->dir_c, 1.0});
        try {
          r_wc = best->r_wc * rotation_from_matches(pairs);
          have_rotation = true;
          result.reference_keyframe = best->id;
          result.rotation_from_directions = true;
        } catch (const DegeneracyError&) {
        }
      }
    }

    const FrameRecord* overlap = find_overlap_frame(obs);

    if (!have_rotation) {
      // Point fallback: 3-correspondence rigid alignment against the
      // overlapping frame supplies the full relative motion.
      result.failure = "rotation-unavailable";
      if (overlap) {
        std::vector<PointCorrespondence3D> corrs;
        for (const PointFeature& f : obs.points) {
          const auto it = overlap->points.find(f.id);
          if (it != overlap->points.end()) corrs.push_back({it->second, f.p_c});
        }
        if (static_cast<int>(corrs.size()) >= opts_.min_fallback_points) {
          try {
            const RelativeMotion rel = rigid_from_point_pairs(corrs);  // ref -> cur
            r_wc = overlap->pose.r_wc * rel.rotation.inverse();
            have_rotation = true;
          } catch (const DegeneracyError&) {
          }
        }
      }
    }

    // --- Translation ------------------------------------------------------
    Vec3 t_wc = prior.t_wc;
    bool have_translation = false;
    if (have_rotation && overlap) {
      const Rotation r_cur_ref = r_wc.inverse() * overlap->pose.r_wc;  // ref frame -> cur frame
      TranslationResiduals residuals;
      for (const PointFeature& f : obs.points) {
        const auto it = overlap->points.find(f.id);
        if (it != overlap->points.end()) residuals.points.push_back({it->second, f.p_c});
      }
      for (const DirectionMatch& dm : matches) {
        if (dm.plane_index < 0) continue;
        const PlaneMeasurement& cur = obs.planes[dm.plane_index];
        // Resolve which physical plane this is (parallel planes share the
        // normal landmark); the prior translation is accurate enough for
        // the offset gate.
        const UnitVec3 n_w = to_world(cur.n_c, r_wc);
        const double d_w = cur.d_c - n_w.vec().dot(prior.t_wc);
        const PlaneLandmark* lm = graph_.associate_plane(dm.landmark_id, n_w, d_w);
        if (!lm) continue;
        const auto it = overlap->planes.find(lm->id);
        if (it == overlap->planes.end()) continue;
        residuals.planes.push_back({it->second.n_c, it->second.d_c, cur.n_c, cur.d_c});
      }
      if (!residuals.points.empty()) {
        const Vec3 t_init = translation_from_points(r_cur_ref, residuals.points);
        Vec3 t_rel = t_init;
        try {
          t_rel = refine_translation(r_cur_ref, t_init, residuals, opts_.refine).t;
        } catch (const DegeneracyError&) {
          t_rel = t_init;  // closed form already minimizes the point term
        }
        t_wc = overlap->pose.t_wc - r_wc * t_rel;
        have_translation = true;
      }
    }
    if (have_rotation && !have_translation) {
      // No point overlap anywhere: planes matched against world landmarks
      // still constrain t when three independent normals are in view
      // (the corridor case).
      TranslationResiduals residuals;
      for (const DirectionMatch& dm : matches) {
        if (dm.plane_index < 0) continue;
        const PlaneMeasurement& cur = obs.planes[dm.plane_index];
        const UnitVec3 n_w_meas = to_world(cur.n_c, r_wc);
        const double d_w_meas = cur.d_c - n_w_meas.vec().dot(prior.t_wc);
        const PlaneLandmark* lm = graph_.associate_plane(dm.landmark_id, n_w_meas, d_w_meas);
        if (!lm) continue;
        const double s = n_w_meas.dot(lm->n_w) < 0.0 ? -1.0 : 1.0;
        // k side: the landmark in world coordinates (sign-aligned with the
        // measurement); j side: the camera measurement. The motion mapping
        // world onto camera is (R_wc^T, -R_wc^T t_wc).
        residuals.planes.push_back(
            {s > 0 ? lm->n_w : -lm->n_w, s * lm->d_w, cur.n_c, cur.d_c});
      }
      if (residuals.planes.size() >= 3) {
        try {
          const Rotation r_cw = r_wc.inverse();
          const Vec3 t_cw_init = -(r_cw * t_wc);
          const Vec3 t_cw = refine_translation(r_cw, t_cw_init, residuals, opts_.refine).t;
          t_wc = -(r_wc * t_cw);
          have_translation = true;
        } catch (const DegeneracyError&) {
        }
      }
    }
    if (have_rotation && !have_translation && result.failure.empty()) {
      result.failure = "translation-degenerate";
    }

    result.pose = {obs.timestamp, r_wc, t_wc};
    result.translation_resolved = have_translation;

    // --- Keyframe policy ---------------------------------------------------
    ++frames_since_keyframe_;
    if (have_rotation) {
      const KeyframeNode& last_kf = graph_.keyframes().back();
      int tracked = 0;
      for (const PointFeature& f : obs.points) {
        if (std::find(last_kf.point_ids.begin(), last_kf.point_ids.end(), f.id) !=
            last_kf.point_ids.end()) {
          ++tracked;
        }
      }
      for (const KeyframeMeasurement& m : last_kf.measurements) {
        for (const DirectionMatch& dm : matches) {
          if (dm.landmark_id == m.landmark_id) {
            ++tracked;
            break;
          }
        }
      }
      const int total =
          static_cast<int>(last_kf.point_ids.size() + last_kf.measurements.size());
      FrameStats stats;
      stats.frames_since_keyframe = frames_since_keyframe_;
      stats.tracked_ratio = total > 0 ? static_cast<double>(tracked) / total : 1.0;
      stats.new_landmark = new_landmark;
      if (should_insert_keyframe(stats, opts_.keyframe)) {
        graph_.insert_keyframe(obs, result.pose.r_wc, result.pose.t_wc);
        frames_since_keyframe_ = 0;
        result.keyframe_inserted = true;
      }
    }
  }

  // Record the frame for future overlap search, with matches recomputed
  // against the (possibly grown) landmark set at the final pose.
  FrameRecord record;
  record.frame_index = obs.frame_index;
  record.pose = result.pose;
  for (const PointFeature& f : obs.points) record.points[f.id] = f.p_c;
  record.direction_matches = match_frame(obs, result.pose.r_wc, result.pose.t_wc, nullptr);
  for (const DirectionMatch& dm : record.direction_matches) {
    if (dm.plane_index < 0) continue;
    const PlaneMeasurement& pm = obs.planes[dm.plane_index];
    const UnitVec3 n_w = to_world(pm.n_c, result.pose.r_wc);
    const double d_w = pm.d_c - n_w.vec().dot(result.pose.t_wc);
    if (const PlaneLandmark* lm = graph_.associate_plane(dm.landmark_id, n_w, d_w)) {
      record.planes[lm->id] = pm;  // keyed by the physical plane
    }
  }
  history_.push_back(std::move(record));
  trajectory_.push_back(result.pose);
  results_.push_back(result);
  return results_.back();
}

std::vector<TimedPose> track_frame_to_frame(std::span<const FrameObservation> frames,
                                            double th_vd) {
  std::vector<TimedPose> out;
  if (frames.empty()) return out;
  out.push_back({frames[0].timestamp, Rotation::identity(), Vec3::Zero()});
  const double max_angle = std::acos(1.0 - th_vd);

  for (size_t i = 1; i < frames.size(); ++i) {
    const FrameObservation& prev = frames[i - 1];
    const FrameObservation& cur = frames[i];

    // Direct association between consecutive frames: nearest sign-agnostic
    // angle within the threshold, signs aligned per pair.
    MatchedDirectionSet pairs;
    std::vector<bool> used(cur.directions.size(), false);
    for (const DirectionMeasurement& dp : prev.directions) {
      int best = -1;
      double best_angle = max_angle;
      for (size_t j = 0; j < cur.directions.size(); ++j) {
        if (used[j]) continue;
        if (cur.directions[j].observation.kind != dp.observation.kind) continue;
        const double d = dp.observation.dir_c.dot(cur.directions[j].observation.dir_c);
        const double angle = std::atan2(std::sqrt(std::max(0.0, 1.0 - d * d)), std::abs(d));
        if (angle < best_angle) {
          best_angle = angle;
          best = static_cast<int>(j);
        }
      }
      if (best < 0) continue;
      used[best] = true;
      const UnitVec3& a = dp.observation.dir_c;
      const UnitVec3& b = cur.directions[best].observation.dir_c;
      pairs.push_back({a, a.dot(b) < 0.0 ? -b : b, 1.0});
    }

    Rotation r_rel = Rotation::identity();  // prev <- cur
    bool have_rotation = false;
    if (pairs.size() >= 2) {
      try {
        r_rel = rotation_from_matches(pairs);
        have_rotation = true;
      } catch (const DegeneracyError&) {
      }
    }
    (void)have_rotation;

    std::vector<PointCorrespondence3D> corrs;  // k = cur, j = prev
    for (const PointFeature& fc : cur.points) {
      for (const PointFeature& fp : prev.points) {
        if (fc.id == fp.id) {
          corrs.push_back({fc.p_c, fp.p_c});
          break;
        }
      }
    }
    Vec3 t_rel = Vec3::Zero();  // p_prev = r_rel p_cur + t_rel
    if (!corrs.empty()) t_rel = translation_from_points(r_rel, corrs);

    const TimedPose& last = out.back();
    out.push_back({cur.timestamp, last.r_wc * r_rel, last.r_wc * t_rel + last.t_wc});
  }
  return out;
}

}  // namespace egraph
