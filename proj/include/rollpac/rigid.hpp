#pragma once

#include <Eigen/Core>
#include <array>
#include <cmath>
#include <stdexcept>

#include "rollpac/dual2.hpp"

namespace rollpac {

// Small fixed-size helpers generic over the scalar type (double or Dual2),
// used by the rolling-body dynamics so the same code serves plain evaluation
// and derivative propagation.

template <class S>
using Vec3T = std::array<S, 3>;
template <class S>
using Vec2T = std::array<S, 2>;
template <class S>
using Mat3T = std::array<S, 9>;  // row-major
template <class S>
using QuatT = std::array<S, 4>;  // (q0, qv)

template <class S>
Vec3T<S> v3(const S& x, const S& y, const S& z) { return {x, y, z}; }

template <class S>
Vec3T<S> add(const Vec3T<S>& a, const Vec3T<S>& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}
template <class S>
Vec3T<S> sub(const Vec3T<S>& a, const Vec3T<S>& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}
template <class S, class T>
Vec3T<S> scale(const T& c, const Vec3T<S>& a) {
  return {c * a[0], c * a[1], c * a[2]};
}
template <class S>
S dot(const Vec3T<S>& a, const Vec3T<S>& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}
template <class S>
Vec3T<S> cross(const Vec3T<S>& a, const Vec3T<S>& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

template <class S>
Vec2T<S> project12(const Vec3T<S>& v) { return {v[0], v[1]}; }

/// Skew matrix of v (the hat map).
template <class S>
Mat3T<S> hat(const Vec3T<S>& v) {
  const S z{0.0};
  return {z, -v[2], v[1], v[2], z, -v[0], -v[1], v[0], z};
}

/// hat(v)*hat(v), the symmetric closed form.
template <class S>
Mat3T<S> hat_sq(const Vec3T<S>& v) {
  const S a = v[0], b = v[1], c = v[2];
  return {-(b * b + c * c), a * b, a * c,
          a * b, -(a * a + c * c), b * c,
          a * c, b * c, -(a * a + b * b)};
}

template <class S>
Mat3T<S> mat_add(const Mat3T<S>& a, const Mat3T<S>& b) {
  Mat3T<S> r;
  for (int i = 0; i < 9; ++i) r[i] = a[i] + b[i];
  return r;
}
template <class S, class T>
Mat3T<S> mat_scale(const T& c, const Mat3T<S>& a) {
  Mat3T<S> r;
  for (int i = 0; i < 9; ++i) r[i] = c * a[i];
  return r;
}
template <class S>
Vec3T<S> mat_vec(const Mat3T<S>& m, const Vec3T<S>& v) {
  return {m[0] * v[0] + m[1] * v[1] + m[2] * v[2],
          m[3] * v[0] + m[4] * v[1] + m[5] * v[2],
          m[6] * v[0] + m[7] * v[1] + m[8] * v[2]};
}

/// Solve the 3x3 system m*x = rhs by Gaussian elimination with partial
/// pivoting on values. Throws if the pivot underflows.
template <class S>
Vec3T<S> solve3(Mat3T<S> m, Vec3T<S> rhs) {
  std::array<int, 3> perm = {0, 1, 2};
  for (int col = 0; col < 3; ++col) {
    int piv = col;
    double best = std::fabs(value_of(m[perm[col] * 3 + col]));
    for (int r = col + 1; r < 3; ++r) {
      const double cand = std::fabs(value_of(m[perm[r] * 3 + col]));
      if (cand > best) { best = cand; piv = r; }
    }
    if (best < 1e-300) throw std::runtime_error("solve3: singular matrix");
    std::swap(perm[col], perm[piv]);
    for (int r = col + 1; r < 3; ++r) {
      const S factor = m[perm[r] * 3 + col] / m[perm[col] * 3 + col];
      for (int c = col; c < 3; ++c) m[perm[r] * 3 + c] -= factor * m[perm[col] * 3 + c];
      rhs[perm[r]] -= factor * rhs[perm[col]];
    }
  }
  Vec3T<S> x;
  for (int row = 2; row >= 0; --row) {
    S acc = rhs[perm[row]];
    for (int c = row + 1; c < 3; ++c) acc -= m[perm[row] * 3 + c] * x[c];
    x[row] = acc / m[perm[row] * 3 + row];
  }
  return x;
}

// Quaternions, (scalar, vector) layout.
template <class S>
QuatT<S> qmul(const QuatT<S>& p, const QuatT<S>& q) {
  return {p[0] * q[0] - p[1] * q[1] - p[2] * q[2] - p[3] * q[3],
          p[0] * q[1] + p[1] * q[0] + p[2] * q[3] - p[3] * q[2],
          p[0] * q[2] - p[1] * q[3] + p[2] * q[0] + p[3] * q[1],
          p[0] * q[3] + p[1] * q[2] - p[2] * q[1] + p[3] * q[0]};
}
template <class S>
QuatT<S> qconj(const QuatT<S>& q) { return {q[0], -q[1], -q[2], -q[3]}; }
template <class S>
S qnorm_sq(const QuatT<S>& q) {
  return q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3];
}
/// v -> quaternion with zero scalar part (the sharp map).
template <class S>
QuatT<S> sharp(const Vec3T<S>& v) { return {S{0.0}, v[0], v[1], v[2]}; }
/// Vector part of a quaternion (the flat map).
template <class S>
Vec3T<S> flat(const QuatT<S>& q) { return {q[1], q[2], q[3]}; }

/// Rotate Y by the versor q via the Euler-Rodrigues formula [q Y# q^-1]b.
/// For unit q the inverse is the conjugate.
template <class S>
Vec3T<S> quat_rotate(const QuatT<S>& q, const Vec3T<S>& Y) {
  return flat(qmul(qmul(q, sharp(Y)), qconj(q)));
}

/// Versor with a unit-norm invariant; wraps the double-valued quaternion.
struct Versor {
  double q0 = 1.0;
  Eigen::Vector3d qv = Eigen::Vector3d::Zero();

  static constexpr double kUnitTol = 1e-9;

  Versor() = default;
  Versor(double w, const Eigen::Vector3d& v) : q0(w), qv(v) {
    if (std::fabs(norm() - 1.0) > kUnitTol) throw std::invalid_argument("Versor: not unit length");
  }
  static Versor axis_angle(const Eigen::Vector3d& axis, double angle) {
    const Eigen::Vector3d u = axis.normalized();
    return Versor(std::cos(0.5 * angle), std::sin(0.5 * angle) * u);
  }
  double norm() const { return std::sqrt(q0 * q0 + qv.squaredNorm()); }
  Versor normalized() const {
    const double n = norm();
    Versor v;
    v.q0 = q0 / n;
    v.qv = qv / n;
    return v;
  }
  QuatT<double> raw() const { return {q0, qv(0), qv(1), qv(2)}; }
};

inline Eigen::Vector3d quat_rotate(const Versor& q, const Eigen::Vector3d& Y) {
  const auto r = quat_rotate<double>(q.raw(), {Y(0), Y(1), Y(2)});
  return Eigen::Vector3d(r[0], r[1], r[2]);
}

/// Right-handed orthonormal basis from a unit vector, branch-safe near
/// n = -e3 (Frisvad). Columns are (n, b2, -b1) so that column 1 is n itself
/// and det = +1.
inline Eigen::Matrix3d frisvad_basis(const Eigen::Vector3d& n) {
  if (std::fabs(n.norm() - 1.0) > 1e-9) throw std::invalid_argument("frisvad_basis: non-unit input");
  Eigen::Vector3d b1, b2;
  if (n.z() < -0.9999999) {
    b1 << 0.0, -1.0, 0.0;
    b2 << -1.0, 0.0, 0.0;
  } else {
    const double a = 1.0 / (1.0 + n.z());
    const double b = -n.x() * n.y() * a;
    b1 << 1.0 - n.x() * n.x() * a, b, -n.x();
    b2 << b, 1.0 - n.y() * n.y() * a, -n.y();
  }
  Eigen::Matrix3d B;
  B.col(0) = n;
  B.col(1) = b2;
  B.col(2) = -b1;
  return B;
}

inline Eigen::Vector3d spherical_to_cartesian(double phi, double theta, double rho) {
  return Eigen::Vector3d(rho * std::cos(theta) * std::cos(phi),
                         rho * std::cos(theta) * std::sin(phi), rho * std::sin(theta));
}

/// A circular rail of given radius; the circle is span{p_axis, q_axis}
/// through zeta(theta) = radius*(cos(theta) p + sin(theta) q).
struct RailSpec {
  double radius = 1.0;
  Eigen::Vector3d p_axis = Eigen::Vector3d(1, 0, 0);
  Eigen::Vector3d q_axis = Eigen::Vector3d(0, 0, 1);

  /// Disk-style rail in the e1-e3 plane: zeta = r [cos t, 0, sin t]^T.
  static RailSpec in_plane(double radius) { return RailSpec{radius, {1, 0, 0}, {0, 0, 1}}; }

  /// Ball rail oriented by the frisvad basis of the unit vector with the
  /// given spherical coordinates: zeta = r B [cos t, 0, sin t]^T.
  static RailSpec frisvad(double radius, double phi, double theta, double rho) {
    const Eigen::Vector3d n = spherical_to_cartesian(phi, theta, rho).normalized();
    const Eigen::Matrix3d B = frisvad_basis(n);
    return RailSpec{radius, B.col(0), B.col(2)};
  }
};

/// zeta(theta), zeta'(theta), zeta''(theta) for a circular rail.
template <class S>
void rail_eval(const RailSpec& rail, const S& theta, Vec3T<S>& zeta, Vec3T<S>& dzeta,
               Vec3T<S>& ddzeta) {
  using std::cos;
  using std::sin;
  const S c = cos(theta), s = sin(theta);
  for (int k = 0; k < 3; ++k) {
    zeta[k] = rail.radius * (c * rail.p_axis(k) + s * rail.q_axis(k));
    dzeta[k] = rail.radius * (c * rail.q_axis(k) - s * rail.p_axis(k));
    ddzeta[k] = -zeta[k];
  }
}

}  // namespace rollpac
