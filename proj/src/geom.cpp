#include "egraph/geom.hpp"

#include <Eigen/Dense>

#include <cassert>
#include <cmath>

namespace egraph {

UnitVec3 UnitVec3::normalized(const Vec3& v) {
  const double n = v.norm();
  if (n <= kTinyNorm) {
    throw DegeneracyError("cannot normalize near-zero vector (norm " + std::to_string(n) + ")");
  }
  return UnitVec3(v / n);
}

UnitVec3 UnitVec3::from_unit(const Vec3& v) {
  assert(std::abs(v.norm() - 1.0) <= 1e-6);
  return UnitVec3(v);
}

double UnitVec3::angle_to(const UnitVec3& o) const {
  // atan2 form of arccos(dot): keeps precision near 0 and pi.
  return std::atan2(cross(o).norm(), dot(o));
}

Mat3 OrthonormalBasis::matrix() const {
  Mat3 m;
  m.col(0) = e0.vec();
  m.col(1) = e1.vec();
  m.col(2) = e2.vec();
  return m;
}

bool OrthonormalBasis::is_valid() const {
  if (std::abs(e0.dot(e1)) > kUnitTol) return false;
  if (std::abs(e0.dot(e2)) > kUnitTol) return false;
  if (std::abs(e1.dot(e2)) > kUnitTol) return false;
  return std::abs(matrix().determinant() - 1.0) <= kUnitTol;
}

bool Rotation::is_valid_matrix(const Mat3& m, double tol) {
  const Mat3 gram = m.transpose() * m;
  if (((gram - Mat3::Identity()).array().abs() > tol).any()) return false;
  return std::abs(m.determinant() - 1.0) <= tol;
}

Rotation Rotation::from_matrix(const Mat3& m) {
  if (!is_valid_matrix(m)) {
    throw std::invalid_argument("matrix is not a proper rotation (R^T R != I or det != +1)");
  }
  return Rotation(m);
}

Rotation Rotation::from_matrix_unchecked(const Mat3& m) {
  assert(is_valid_matrix(m, 1e-6));
  return Rotation(m);
}

Rotation Rotation::from_axis_angle(const Vec3& axis, double angle_rad) {
  const UnitVec3 a = UnitVec3::normalized(axis);
  return Rotation(Eigen::AngleAxisd(angle_rad, a.vec()).toRotationMatrix());
}

UnitQuaternion UnitQuaternion::from_rotation(const Rotation& r) {
  Eigen::Quaterniond q(r.matrix());
  q.normalize();
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  return UnitQuaternion{q.w(), q.x(), q.y(), q.z()};
}

Rotation UnitQuaternion::to_rotation() const {
  Eigen::Quaterniond q(qw, qx, qy, qz);
  q.normalize();
  return Rotation::from_matrix_unchecked(q.toRotationMatrix());
}

Vec3 project(const Vec3& u, const Vec3& v) {
  const double uu = u.squaredNorm();
  if (uu <= kTinyNorm * kTinyNorm) {
    throw DegeneracyError("projection axis is degenerate (near-zero norm)");
  }
  return (u.dot(v) / uu) * u;
}

OrthonormalBasis gram_schmidt(const Vec3& v0, const Vec3& v1, const Vec3& v2) {
  const double n0 = v0.norm();
  if (n0 <= kTinyNorm) throw DegeneracyError("gram_schmidt: v0 is degenerate (near-zero norm)");
  const Vec3 u0 = v0;

  const double n1 = v1.norm();
  if (n1 <= kTinyNorm) throw DegeneracyError("gram_schmidt: v1 is degenerate (near-zero norm)");
  const Vec3 u1 = v1 - project(u0, v1);
  // ||u1|| / ||v1|| is the sine of the angle between v1 and span{v0}.
  if (u1.norm() / n1 < kDegenerateSin) {
    throw DegeneracyError("gram_schmidt: v1 is parallel to v0 (angle below threshold)");
  }

  const double n2 = v2.norm();
  if (n2 <= kTinyNorm) throw DegeneracyError("gram_schmidt: v2 is degenerate (near-zero norm)");
  const Vec3 u2 = v2 - project(u0, v2) - project(u1, v2);
  if (u2.norm() / n2 < kDegenerateSin) {
    throw DegeneracyError("gram_schmidt: v2 lies in span{v0, v1} (angle below threshold)");
  }

  const UnitVec3 e0 = UnitVec3::normalized(u0);
  const UnitVec3 e1 = UnitVec3::normalized(u1);
  UnitVec3 e2 = UnitVec3::normalized(u2);

  // A mirrored measurement order yields det -1; flip the last axis to keep
  // the basis right-handed. Direction signs are resolved upstream.
  if (e0.cross(e1).dot(e2.vec()) < 0.0) e2 = -e2;

  return OrthonormalBasis{e0, e1, e2};
}

OrthonormalBasis complete_basis(const Vec3& v0, const Vec3& v1) {
  const double n0 = v0.norm();
  const double n1 = v1.norm();
  if (n0 <= kTinyNorm || n1 <= kTinyNorm) {
    throw DegeneracyError("complete_basis: degenerate input (near-zero norm)");
  }
  if (v0.cross(v1).norm() / (n0 * n1) < kDegenerateSin) {
    throw DegeneracyError("complete_basis: directions are near parallel");
  }
  return gram_schmidt(v0, v1, v0.cross(v1));
}

Rotation rotation_from_bases(const OrthonormalBasis& bj, const OrthonormalBasis& bk) {
  return Rotation::from_matrix(bj.matrix() * bk.matrix().transpose());
}

namespace {

// Normalized column matrix of an orthogonal triple; flips the third column
// of a left-handed triple, matching the Gram-Schmidt handedness fix.
Mat3 orthogonal_triple_matrix(const Vec3 v[3], const char* side) {
  Mat3 m;
  for (int i = 0; i < 3; ++i) {
    const double n = v[i].norm();
    if (n <= kTinyNorm) {
      throw DegeneracyError(std::string("rotation_orthogonal_case: ") + side +
                            " vector " + std::to_string(i) + " is degenerate");
    }
    m.col(i) = v[i] / n;
  }
  constexpr double kOrthoInputTol = 1e-6;
  for (int a = 0; a < 3; ++a) {
    for (int b = a + 1; b < 3; ++b) {
      if (std::abs(m.col(a).dot(m.col(b))) > kOrthoInputTol) {
        throw DegeneracyError(std::string("rotation_orthogonal_case: ") + side +
                              " triple is not orthogonal");
      }
    }
  }
  if (m.determinant() < 0.0) m.col(2) = -m.col(2);
  return m;
}

}  // namespace

Rotation rotation_orthogonal_case(const Vec3 vj[3], const Vec3 vk[3]) {
  const Mat3 mj = orthogonal_triple_matrix(vj, "j");
  const Mat3 mk = orthogonal_triple_matrix(vk, "k");
  return Rotation::from_matrix(mj * mk.transpose());
}

double angular_distance(const Rotation& r1, const Rotation& r2) {
  const Mat3 q = r1.matrix().transpose() * r2.matrix();
  const double c = std::clamp((q.trace() - 1.0) / 2.0, -1.0, 1.0);
  // Evaluating arccos(c) through atan2 keeps full precision near 0, where
  // the bare arccos loses half the significant digits.
  const Vec3 skew(q(2, 1) - q(1, 2), q(0, 2) - q(2, 0), q(1, 0) - q(0, 1));
  const double s = 0.5 * skew.norm();
  return std::atan2(s, c);
}

}  // namespace egraph
