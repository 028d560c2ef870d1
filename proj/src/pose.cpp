#include "egraph/pose.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace egraph {

namespace {

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

// Best-fit rotation mapping the k-side directions onto the j-side ones:
// SVD of the weighted outer-product sum with determinant correction.
Rotation procrustes(const MatchedDirectionSet& pairs) {
  Mat3 m = Mat3::Zero();
  for (const DirectionPair& p : pairs) {
    m += p.weight * p.dir_j.vec() * p.dir_k.vec().transpose();
  }
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 sv = svd.singularValues();
  if (sv(1) <= kDegenerateSin * sv(0)) {
    throw DegeneracyError("rotation_from_matches: directions span fewer than two dimensions");
  }
  Mat3 d = Mat3::Identity();
  d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  return Rotation::from_matrix(svd.matrixU() * d * svd.matrixV().transpose());
}

// Indices of the two pairs whose j-side directions are farthest from
// parallel. Throws when even the best pair is degenerate.
std::pair<int, int> best_separated_pair(const MatchedDirectionSet& pairs) {
  int ia = -1, ib = -1;
  double best = 0.0;
  for (size_t a = 0; a < pairs.size(); ++a) {
    for (size_t b = a + 1; b < pairs.size(); ++b) {
      const double s = pairs[a].dir_j.cross(pairs[b].dir_j).norm();
      if (s > best) {
        best = s;
        ia = static_cast<int>(a);
        ib = static_cast<int>(b);
      }
    }
  }
  if (best < kDegenerateSin) {
    throw DegeneracyError("rotation_from_matches: fewer than 2 independent directions");
  }
  return {ia, ib};
}

Rotation two_pair_rotation(const DirectionPair& a, const DirectionPair& b) {
  const OrthonormalBasis bj = complete_basis(a.dir_j.vec(), b.dir_j.vec());
  const OrthonormalBasis bk = complete_basis(a.dir_k.vec(), b.dir_k.vec());
  return rotation_from_bases(bj, bk);
}

}  // namespace

Mat3 RelativeMotion::essential() const { return skew(translation) * rotation.matrix(); }

Rotation rotation_from_matches(const MatchedDirectionSet& matches) {
  if (matches.size() < 2) {
    throw DegeneracyError("rotation_from_matches: need at least 2 matched pairs");
  }

  // Canonicalize each pair jointly (the j-side sign applied to both) so the
  // result is invariant to simultaneous sign flips of any pair.
  MatchedDirectionSet pairs;
  pairs.reserve(matches.size());
  for (const DirectionPair& m : matches) {
    auto [cj, s] = canonicalize(m.dir_j);
    pairs.push_back({cj, s < 0 ? -m.dir_k : m.dir_k, m.weight});
  }

  if (pairs.size() == 2) {
    return two_pair_rotation(pairs[0], pairs[1]);
  }
  if (pairs.size() == 3) {
    try {
      const OrthonormalBasis bj =
          gram_schmidt(pairs[0].dir_j.vec(), pairs[1].dir_j.vec(), pairs[2].dir_j.vec());
      const OrthonormalBasis bk =
          gram_schmidt(pairs[0].dir_k.vec(), pairs[1].dir_k.vec(), pairs[2].dir_k.vec());
      return rotation_from_bases(bj, bk);
    } catch (const DegeneracyError&) {
      // Coplanar or partially parallel triple: the two best-separated
      // pairs still determine the rotation.
      auto [a, b] = best_separated_pair(pairs);
      return two_pair_rotation(pairs[a], pairs[b]);
    }
  }
  return procrustes(pairs);
}

Vec3 translation_from_points(const Rotation& r, std::span<const PointCorrespondence3D> corrs) {
  if (corrs.empty()) {
    throw std::invalid_argument("translation_from_points: empty correspondence list");
  }
  Vec3 sum = Vec3::Zero();
  for (const PointCorrespondence3D& c : corrs) {
    sum += c.p_j - r * c.p_k;
  }
  return sum / static_cast<double>(corrs.size());
}

UnitVec3 translation_direction_from_bearings(const Rotation& r,
                                             std::span<const BearingCorrespondence> corrs) {
  if (corrs.size() < 2) {
    throw DegeneracyError("translation_direction_from_bearings: need at least 2 bearing pairs");
  }
  Eigen::MatrixXd rows(corrs.size(), 3);
  for (size_t i = 0; i < corrs.size(); ++i) {
    // x_j . (t x (R x_k)) = 0  =>  ((R x_k) x x_j) . t = 0
    rows.row(i) = (r * corrs[i].x_k.vec()).cross(corrs[i].x_j.vec()).transpose();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(rows, Eigen::ComputeFullV);
  const auto sv = svd.singularValues();
  if (sv(1) <= 1e-9 * std::max(1.0, sv(0))) {
    throw DegeneracyError(
        "translation_direction_from_bearings: epipolar constraint rows are rank deficient "
        "(pure rotation or parallel constraints)");
  }
  Vec3 t = svd.matrixV().col(2);

  // Cheirality: for each pair the null vector of [R x_k | -x_j | t] stacks
  // the depths and the translation scale; a negative scale with positive
  // depths votes for flipping t.
  int flip = 0, keep = 0;
  for (const BearingCorrespondence& c : corrs) {
    Mat3 m;
    m.col(0) = r * c.x_k.vec();
    m.col(1) = -c.x_j.vec();
    m.col(2) = t;
    Eigen::JacobiSVD<Mat3> nsvd(m, Eigen::ComputeFullV);
    Vec3 v = nsvd.matrixV().col(2);
    if (std::abs(v(0)) + std::abs(v(1)) < 1e-12) continue;
    if (v(0) + v(1) < 0.0) v = -v;  // depths positive
    (v(2) < 0.0 ? flip : keep)++;
  }
  if (flip > keep) t = -t;
  return UnitVec3::normalized(t);
}

namespace {

struct NormalEquations {
  double cost = 0.0;
  Mat3 h = Mat3::Zero();
  Vec3 g = Vec3::Zero();
};

NormalEquations accumulate(const Rotation& r, const Vec3& t, const TranslationResiduals& res,
                           const RefineOptions& opts) {
  NormalEquations eq;
  for (const PointCorrespondence3D& c : res.points) {
    const Vec3 e = c.p_j - r * c.p_k - t;  // d e / d t = -I
    eq.cost += opts.point_weight * e.squaredNorm();
    eq.h += opts.point_weight * Mat3::Identity();
    eq.g -= opts.point_weight * e;
  }
  for (const PlaneCorrespondence& c : res.planes) {
    const double en = 1.0 - c.n_j.dot(r * c.n_k);  // independent of t
    const double ed = c.d_j - (c.d_k - c.n_j.vec().dot(t));
    eq.cost += opts.plane_weight * (en * en + ed * ed);
    eq.h += opts.plane_weight * c.n_j.vec() * c.n_j.vec().transpose();
    eq.g += opts.plane_weight * ed * c.n_j.vec();
  }
  for (const LineCorrespondence& c : res.lines) {
    const Mat3 proj = Mat3::Identity() - c.dir_j.vec() * c.dir_j.vec().transpose();
    for (const Vec3& endpoint : {c.endpoint0_k, c.endpoint1_k}) {
      const Vec3 e = proj * (r * endpoint + t - c.point_j);  // d e / d t = proj
      eq.cost += opts.line_weight * e.squaredNorm();
      eq.h += opts.line_weight * proj;  // proj is symmetric idempotent
      eq.g += opts.line_weight * e;
    }
  }
  return eq;
}

}  // namespace

RefineResult refine_translation(const Rotation& r, const Vec3& t_init,
                                const TranslationResiduals& residuals,
                                const RefineOptions& opts) {
  if (residuals.points.empty() && residuals.planes.empty() && residuals.lines.empty()) {
    throw DegeneracyError("refine_translation: all residual sets are empty");
  }

  RefineResult out;
  out.t = t_init;
  NormalEquations eq = accumulate(r, out.t, residuals, opts);
  out.initial_cost = eq.cost;

  Eigen::SelfAdjointEigenSolver<Mat3> eig(eq.h);
  if (eig.eigenvalues()(0) <= 1e-10 * std::max(1.0, eig.eigenvalues()(2))) {
    throw DegeneracyError("refine_translation: residuals do not constrain all of t");
  }

  double damping = opts.initial_damping;
  for (int it = 0; it < opts.max_iterations; ++it) {
    const Vec3 step = (eq.h + damping * Mat3::Identity()).ldlt().solve(-eq.g);
    if (step.norm() < opts.step_tolerance) {
      out.converged = true;
      break;
    }
    const NormalEquations trial = accumulate(r, out.t + step, residuals, opts);
    ++out.iterations;
    if (trial.cost < eq.cost) {
      out.t += step;
      eq = trial;
      damping = std::max(damping / 3.0, 1e-15);
    } else {
      damping *= 10.0;
    }
  }
  out.final_cost = eq.cost;
  return out;
}

RelativeMotion rigid_from_point_pairs(std::span<const PointCorrespondence3D> corrs) {
  if (corrs.size() < 3) {
    throw DegeneracyError("rigid_from_point_pairs: need at least 3 point pairs");
  }
  Vec3 ck = Vec3::Zero(), cj = Vec3::Zero();
  for (const PointCorrespondence3D& c : corrs) {
    ck += c.p_k;
    cj += c.p_j;
  }
  ck /= static_cast<double>(corrs.size());
  cj /= static_cast<double>(corrs.size());

  Mat3 m = Mat3::Zero();
  for (const PointCorrespondence3D& c : corrs) {
    m += (c.p_j - cj) * (c.p_k - ck).transpose();
  }
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 sv = svd.singularValues();
  if (sv(1) <= 1e-12 * std::max(1.0, sv(0))) {
    throw DegeneracyError("rigid_from_point_pairs: points are collinear");
  }
  Mat3 d = Mat3::Identity();
  d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  const Rotation rot = Rotation::from_matrix(svd.matrixU() * d * svd.matrixV().transpose());
  return RelativeMotion{rot, cj - rot * ck};
}

}  // namespace egraph
