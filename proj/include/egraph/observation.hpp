#pragma once

#include "egraph/geom.hpp"
#include "egraph/landmarks.hpp"

#include <vector>

namespace egraph {

/// Camera-frame Hessian plane measurement: n_c . p + d_c = 0 with n_c
/// oriented toward the camera, so d_c is the distance from the camera
/// center to the plane.
struct PlaneMeasurement {
  UnitVec3 n_c;
  double d_c = 0.0;
  int truth_id = -1;  // simulator ground truth; estimators never read it
};

/// Tracked point feature: a stable correspondence id (the descriptor-track
/// analogue), its camera-frame 3D position, and its bearing.
struct PointFeature {
  int id = -1;
  Vec3 p_c = Vec3::Zero();
  UnitVec3 bearing;
};

struct TimedPose {
  double timestamp = 0.0;
  Rotation r_wc;
  Vec3 t_wc = Vec3::Zero();
};

/// Everything one frame measures, with its ground-truth pose attached.
/// Plane-sourced entries of `directions` reference the corresponding
/// PlaneMeasurement through plane_index and share its noisy normal.
struct DirectionMeasurement {
  DirectionObservation observation;
  int plane_index = -1;
};

struct FrameObservation {
  int frame_index = 0;
  double timestamp = 0.0;
  Rotation r_wc_gt;
  Vec3 t_wc_gt = Vec3::Zero();
  std::vector<DirectionMeasurement> directions;
  std::vector<PlaneMeasurement> planes;
  std::vector<PointFeature> points;
};

}  // namespace egraph
