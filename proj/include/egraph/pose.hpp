#pragma once

#include "egraph/geom.hpp"
#include "egraph/landmarks.hpp"

#include <span>
#include <vector>

namespace egraph {

/// Rigid motion between two frames: P_j = R * P_k + t.
struct RelativeMotion {
  Rotation rotation;
  Vec3 translation = Vec3::Zero();

  /// Essential matrix [t]_x R of the motion.
  Mat3 essential() const;
};

struct PointCorrespondence3D {
  Vec3 p_k;  // observed in frame k
  Vec3 p_j;  // the same point observed in frame j
};

struct BearingCorrespondence {
  UnitVec3 x_k;  // normalized image representation in frame k
  UnitVec3 x_j;  // in frame j
};

/// One matched direction pair: the same global direction measured in
/// frame j and frame k. Signs need not be consistent; the solver
/// canonicalizes pairs before use.
struct DirectionPair {
  UnitVec3 dir_j;
  UnitVec3 dir_k;
  double weight = 1.0;
};

using MatchedDirectionSet = std::vector<DirectionPair>;

/// Rotation R mapping k-frame direction vectors onto j-frame ones.
/// Two pairs take the cross-product completion, three independent pairs
/// the Gram-Schmidt path, and larger sets a weighted orthogonal
/// Procrustes fit that coincides with the closed form on exact inputs.
/// Throws DegeneracyError with fewer than 2 non-parallel pairs.
Rotation rotation_from_matches(const MatchedDirectionSet& matches);

/// Least-squares translation with R fixed: mean of (p_j - R p_k).
/// Throws std::invalid_argument on an empty list.
Vec3 translation_from_points(const Rotation& r, std::span<const PointCorrespondence3D> corrs);

/// Translation direction from epipolar constraints x_j^T [t]_x R x_k = 0
/// with R fixed. The sign is resolved by cheirality (positive depths).
/// Throws DegeneracyError when the stacked constraint rows have rank < 2
/// (pure rotation or parallel constraints).
UnitVec3 translation_direction_from_bearings(const Rotation& r,
                                             std::span<const BearingCorrespondence> corrs);

/// Matched Hessian planes: (n_k, d_k) in frame k, (n_j, d_j) in frame j.
struct PlaneCorrespondence {
  UnitVec3 n_k;
  double d_k = 0.0;
  UnitVec3 n_j;
  double d_j = 0.0;
};

/// A frame-k segment matched to an infinite 3D line known in frame j.
struct LineCorrespondence {
  Vec3 endpoint0_k;
  Vec3 endpoint1_k;
  Vec3 point_j;    // any point on the j-frame line
  UnitVec3 dir_j;  // line direction in frame j
};

struct TranslationResiduals {
  std::vector<PointCorrespondence3D> points;
  std::vector<PlaneCorrespondence> planes;
  std::vector<LineCorrespondence> lines;
};

struct RefineOptions {
  int max_iterations = 50;
  double initial_damping = 1e-4;
  double step_tolerance = 1e-10;
  // Information weights per feature class (Lambda blocks).
  double point_weight = 1.0;
  double plane_weight = 1.0;
  double line_weight = 1.0;
};

struct RefineResult {
  Vec3 t = Vec3::Zero();
  double initial_cost = 0.0;
  double final_cost = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Damped Gauss-Newton refinement of t with R fixed over stacked
/// point/plane/line residuals. Never increases the cost. Throws
/// DegeneracyError when the residuals do not constrain all three
/// components of t.
RefineResult refine_translation(const Rotation& r, const Vec3& t_init,
                                const TranslationResiduals& residuals,
                                const RefineOptions& opts = {});

/// Closed-form rigid alignment (Kabsch) from >= 3 non-collinear point
/// pairs: minimizes sum ||p_j - (R p_k + t)||^2 with det(R) = +1.
RelativeMotion rigid_from_point_pairs(std::span<const PointCorrespondence3D> corrs);

}  // namespace egraph
