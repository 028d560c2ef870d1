#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <stdexcept>
#include <string>

namespace egraph {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Tolerances used throughout the geometry layer. Double-precision closed
// forms justify the tight values.
inline constexpr double kUnitTol = 1e-9;      // type invariants (unit norm, orthogonality)
inline constexpr double kExactTol = 1e-12;    // checks that hold in exact arithmetic
inline constexpr double kTinyNorm = 1e-12;    // below this a vector is degenerate
inline constexpr double kDegenerateSin = 1e-3; // sine of angle below which directions count as parallel

/// Thrown when inputs are too close to a degenerate configuration
/// (parallel directions, rank-deficient systems, zero-length vectors).
struct DegeneracyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Unit-norm 3D direction. Construct through normalized() unless the value
/// is already known to be unit length.
class UnitVec3 {
 public:
  UnitVec3() : v_(1, 0, 0) {}

  /// Normalizes v. Throws DegeneracyError if ||v|| <= kTinyNorm.
  static UnitVec3 normalized(const Vec3& v);

  /// Trusts the caller that v is unit norm (asserted in debug builds).
  static UnitVec3 from_unit(const Vec3& v);

  const Vec3& vec() const { return v_; }
  double x() const { return v_.x(); }
  double y() const { return v_.y(); }
  double z() const { return v_.z(); }

  UnitVec3 operator-() const { return UnitVec3(-v_); }

  double dot(const UnitVec3& o) const { return v_.dot(o.v_); }
  Vec3 cross(const UnitVec3& o) const { return v_.cross(o.v_); }

  /// Geodesic angle to another direction, in [0, pi].
  double angle_to(const UnitVec3& o) const;

 private:
  explicit UnitVec3(const Vec3& v) : v_(v) {}
  Vec3 v_;
};

/// Right-handed orthonormal basis (e0, e1, e2), det +1. Column order is
/// meaningful: e0 is aligned with the first input of the construction.
struct OrthonormalBasis {
  UnitVec3 e0, e1, e2;

  Mat3 matrix() const;  // columns [e0 e1 e2]

  /// Pairwise dot products within kUnitTol and det +1 within kUnitTol.
  bool is_valid() const;
};

/// Proper rotation (3x3, R^T R = I, det +1).
class Rotation {
 public:
  Rotation() : m_(Mat3::Identity()) {}

  /// Validates the matrix against the Rotation invariants.
  static Rotation from_matrix(const Mat3& m);

  /// Trusts the caller (asserted in debug builds).
  static Rotation from_matrix_unchecked(const Mat3& m);

  static Rotation from_axis_angle(const Vec3& axis, double angle_rad);
  static Rotation identity() { return Rotation(); }

  const Mat3& matrix() const { return m_; }
  Rotation transposed() const { return Rotation(m_.transpose()); }
  Rotation inverse() const { return transposed(); }

  Vec3 operator*(const Vec3& v) const { return m_ * v; }
  UnitVec3 operator*(const UnitVec3& v) const {
    return UnitVec3::from_unit((m_ * v.vec()).normalized());
  }
  Rotation operator*(const Rotation& o) const { return Rotation(m_ * o.m_); }

  static bool is_valid_matrix(const Mat3& m, double tol = kUnitTol);

 private:
  explicit Rotation(const Mat3& m) : m_(m) {}
  Mat3 m_;
};

/// Unit quaternion with canonical sign qw >= 0. Plumbing for trajectory
/// serialization; all internal math stays in matrix form.
struct UnitQuaternion {
  double qw = 1.0, qx = 0.0, qy = 0.0, qz = 0.0;

  static UnitQuaternion from_rotation(const Rotation& r);
  Rotation to_rotation() const;
};

/// Orthogonal projection of v onto span{u}: <u,v>/<u,u> * u.
/// Throws DegeneracyError when ||u|| <= kTinyNorm.
Vec3 project(const Vec3& u, const Vec3& v);

/// Gram-Schmidt orthonormalization of three linearly independent vectors.
/// e0 is parallel to v0 and span{e0,e1} = span{v0,v1}. If the input triple
/// is left-handed the third axis is flipped so the basis has det +1.
/// Throws DegeneracyError naming the vector whose component orthogonal to
/// the span of its predecessors falls below kDegenerateSin.
OrthonormalBasis gram_schmidt(const Vec3& v0, const Vec3& v1, const Vec3& v2);

/// Two-observation completion: identical to gram_schmidt(v0, v1, v0 x v1).
/// Throws DegeneracyError when v0 and v1 are near parallel.
OrthonormalBasis complete_basis(const Vec3& v0, const Vec3& v1);

/// Rotation mapping k-frame coordinates onto j-frame coordinates:
/// R = [e0 e1 e2]_j * [e0 e1 e2]_k^T.
Rotation rotation_from_bases(const OrthonormalBasis& bj, const OrthonormalBasis& bk);

/// Rotation from two matched triples of mutually orthogonal (not
/// necessarily unit) vectors; normalization makes the result invariant to
/// positive rescaling of any input. Throws DegeneracyError when a triple
/// is not orthogonal within tolerance.
Rotation rotation_orthogonal_case(const Vec3 vj[3], const Vec3 vk[3]);

/// Geodesic distance arccos((trace(R1^T R2) - 1)/2), clamped to [0, pi].
double angular_distance(const Rotation& r1, const Rotation& r2);

}  // namespace egraph
