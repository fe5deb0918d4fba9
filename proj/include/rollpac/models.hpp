#pragma once

#include <Eigen/Core>
#include <functional>
#include <span>
#include <vector>

#include "rollpac/rigid.hpp"

namespace rollpac {

// Rolling-disk and rolling-ball dynamics with internal point masses on
// circular rails, plus the contact reaction formulas and validity
// diagnostics. All dynamics are generic over the scalar type.

struct DiskParams {
  double m0 = 4.0;   // disk mass
  double r = 1.0;    // rolling radius
  double d2 = 1.0;   // polar moment of inertia
  double g = 9.81;
  std::vector<RailSpec> rails;
  std::vector<double> masses;          // m_i, one per rail
  Eigen::Vector3d zeta0 = Eigen::Vector3d::Zero();  // CM offset of the disk body
  std::function<double(double)> Fe1;   // external e1 force, null = 0

  double total_mass() const {
    double M = m0;
    for (double m : masses) M += m;
    return M;
  }
  double fe1(double t) const { return Fe1 ? Fe1(t) : 0.0; }
};

struct BallParams {
  double m0 = 4.0;
  double r = 1.0;
  Eigen::Vector3d inertia = Eigen::Vector3d(1, 1, 1);  // principal moments d1,d2,d3
  double g = 9.81;
  std::vector<RailSpec> rails;
  std::vector<double> masses;
  Eigen::Vector3d zeta0 = Eigen::Vector3d::Zero();
  std::function<Eigen::Vector3d(double)> Fe;  // spatial external force at the GC, null = 0

  double total_mass() const {
    double M = m0;
    for (double m : masses) M += m;
    return M;
  }
  Eigen::Vector3d fe(double t) const { return Fe ? Fe(t) : Eigen::Vector3d::Zero(); }
};

struct DiskState {
  Eigen::VectorXd theta, dtheta;  // rail parameters and rates
  double phi = 0.0, dphi = 0.0;
};

template <class S>
struct BallStateT {
  std::array<S, 3> theta, dtheta;
  QuatT<S> q;
  Vec3T<S> omega;
  Vec2T<S> z;
};
using BallState = BallStateT<double>;

template <class S>
struct BallDerivT {
  std::array<S, 3> dtheta, ddtheta;
  QuatT<S> dq;
  Vec3T<S> domega;
  Vec2T<S> dz;
};

struct FeasibilityReport {
  double min_N = 0.0;       // smallest normal force over the trajectory
  double max_ratio = 0.0;   // max |f_s|/N where N > 0
  double min_mu_s = 0.0;    // = max_ratio, the friction coefficient needed
  bool detach_flag = false; // true if N <= 0 anywhere
};

namespace detail {
// Body-frame vector from CP to mass i and the rail kinematics at theta_i.
template <class S>
struct RailKinematics {
  Vec3T<S> zeta, dzeta, ddzeta;
};
}  // namespace detail

/// phi-double-dot for the rolling disk.
template <class S>
S disk_kappa(const DiskParams& P, std::span<const S> theta, std::span<const S> dtheta,
             const S& phi, const S& dphi, std::span<const S> ddtheta, const S& Fe1) {
  using std::cos;
  using std::sin;
  const int n = static_cast<int>(P.rails.size());
  const S sph = sin(phi), cph = cos(phi);
  S num = -P.r * Fe1;
  S den{P.d2};
  // i = 0 term: the disk body itself, zeta constant
  {
    const double z1 = P.zeta0(0), z3 = P.zeta0(2);
    num += P.m0 * ((P.g + P.r * dphi * dphi) * (z3 * sph - z1 * cph));
    den += P.m0 * ((P.r * sph + z1) * (P.r * sph + z1) + (P.r * cph + z3) * (P.r * cph + z3));
  }
  for (int i = 0; i < n; ++i) {
    Vec3T<S> z, dz, ddz;
    rail_eval(P.rails[static_cast<size_t>(i)], theta[static_cast<size_t>(i)], z, dz, ddz);
    const S& td = dtheta[static_cast<size_t>(i)];
    const S& tdd = ddtheta[static_cast<size_t>(i)];
    const S Ki = (P.g + P.r * dphi * dphi) * (z[2] * sph - z[0] * cph) +
                 (P.r * cph + z[2]) * (-2.0 * dphi * td * dz[2] + td * td * ddz[0] + tdd * dz[0]) -
                 (P.r * sph + z[0]) * (2.0 * dphi * td * dz[0] + td * td * ddz[2] + tdd * dz[2]);
    num += P.masses[static_cast<size_t>(i)] * Ki;
    den += P.masses[static_cast<size_t>(i)] *
           ((P.r * sph + z[0]) * (P.r * sph + z[0]) + (P.r * cph + z[2]) * (P.r * cph + z[2]));
  }
  return num / den;
}

/// Spatial e1 position of the disk's GC.
template <class S>
S disk_gc(const DiskParams& P, const S& phi, double z_a, double phi_a) {
  return z_a - P.r * (phi - phi_a);
}

/// Normal force and the e1 friction component, with ddphi supplied.
template <class S>
void disk_reactions_at(const DiskParams& P, std::span<const S> theta, std::span<const S> dtheta,
                       const S& phi, const S& dphi, std::span<const S> ddtheta, const S& ddphi,
                       const S& Fe1, double Fe3, S& N, S& friction_e1) {
  using std::cos;
  using std::sin;
  const S sph = sin(phi), cph = cos(phi);
  const double M = P.total_mass();
  N = S{M * P.g - Fe3};
  friction_e1 = -(M * P.r * ddphi + Fe1);
  auto accumulate = [&](double m, const Vec3T<S>& z, const Vec3T<S>& dz, const Vec3T<S>& ddz,
                        const S& td, const S& tdd) {
    const S A = -ddphi * z[2] - dphi * dphi * z[0] - 2.0 * dphi * td * dz[2] + td * td * ddz[0] +
                tdd * dz[0];
    const S B = ddphi * z[0] - dphi * dphi * z[2] + 2.0 * dphi * td * dz[0] + td * td * ddz[2] +
                tdd * dz[2];
    N += m * (A * sph + B * cph);
    friction_e1 -= m * (-A * cph + B * sph);
  };
  {
    const Vec3T<S> z = {S{P.zeta0(0)}, S{P.zeta0(1)}, S{P.zeta0(2)}};
    const Vec3T<S> zero = {S{0.0}, S{0.0}, S{0.0}};
    accumulate(P.m0, z, zero, zero, S{0.0}, S{0.0});
  }
  for (size_t i = 0; i < P.rails.size(); ++i) {
    Vec3T<S> z, dz, ddz;
    rail_eval(P.rails[i], theta[i], z, dz, ddz);
    accumulate(P.masses[i], z, dz, ddz, dtheta[i], ddtheta[i]);
  }
}

/// Spec-level wrapper: computes ddphi via disk_kappa.
inline void disk_reactions(double t, const DiskState& st, const Eigen::VectorXd& ddtheta,
                           const DiskParams& P, double& N, double& friction_e1) {
  std::vector<double> th(st.theta.data(), st.theta.data() + st.theta.size());
  std::vector<double> td(st.dtheta.data(), st.dtheta.data() + st.dtheta.size());
  std::vector<double> tdd(ddtheta.data(), ddtheta.data() + ddtheta.size());
  const double Fe1 = P.fe1(t);
  const double ddphi = disk_kappa<double>(P, th, td, st.phi, st.dphi, tdd, Fe1);
  disk_reactions_at<double>(P, th, td, st.phi, st.dphi, tdd, ddphi, Fe1, 0.0, N, friction_e1);
}

/// Omega-dot for the rolling ball (the uncontrolled equation of motion with
/// prescribed rail accelerations), plus the full state derivative.
template <class S>
BallDerivT<S> ball_dynamics(const BallParams& P, const BallStateT<S>& st,
                            std::span<const S> ddtheta, const Vec3T<S>& Fe_spatial) {
  const int n = static_cast<int>(P.rails.size());
  const Vec3T<S> e3 = {S{0.0}, S{0.0}, S{1.0}};
  const QuatT<S>& q = st.q;
  const QuatT<S> qc = qconj(q);
  // For a non-unit q (solver iterates drift), q^-1 = conj(q)/|q|^2.
  const S qn2 = qnorm_sq(q);
  const Vec3T<S> Gamma = scale(1.0 / qn2, quat_rotate(qc, e3));
  const Vec3T<S> Gamma_tilde = scale(1.0 / qn2, quat_rotate(qc, Fe_spatial));

  Mat3T<S> A = {-P.inertia(0), S{0.0}, S{0.0}, S{0.0}, -P.inertia(1), S{0.0},
                S{0.0}, S{0.0}, -P.inertia(2)};
  const Vec3T<S> IOm = {P.inertia(0) * st.omega[0], P.inertia(1) * st.omega[1],
                        P.inertia(2) * st.omega[2]};
  Vec3T<S> rhs = add(cross(st.omega, IOm), scale(P.r, cross(Gamma_tilde, Gamma)));

  auto accumulate = [&](double m, const Vec3T<S>& zeta, const Vec3T<S>& dz, const Vec3T<S>& ddz,
                        const S& td, const S& tdd) {
    const Vec3T<S> s = add(scale(P.r, Gamma), zeta);
    A = mat_add(A, mat_scale(m, hat_sq(s)));
    Vec3T<S> inner = scale(P.g, Gamma);
    inner = add(inner, cross(st.omega, add(cross(st.omega, zeta), scale(2.0 * 1.0, scale(td, dz)))));
    inner = add(inner, scale(td * td, ddz));
    inner = add(inner, scale(tdd, dz));
    rhs = add(rhs, scale(m, cross(s, inner)));
  };
  {
    const Vec3T<S> z0 = {S{P.zeta0(0)}, S{P.zeta0(1)}, S{P.zeta0(2)}};
    const Vec3T<S> zero = {S{0.0}, S{0.0}, S{0.0}};
    accumulate(P.m0, z0, zero, zero, S{0.0}, S{0.0});
  }
  for (int i = 0; i < n; ++i) {
    Vec3T<S> z, dz, ddz;
    rail_eval(P.rails[static_cast<size_t>(i)], st.theta[static_cast<size_t>(i)], z, dz, ddz);
    accumulate(P.masses[static_cast<size_t>(i)], z, dz, ddz, st.dtheta[static_cast<size_t>(i)],
               ddtheta[static_cast<size_t>(i)]);
  }

  BallDerivT<S> out;
  out.dtheta = st.dtheta;
  out.ddtheta = {ddtheta[0], ddtheta[1], ddtheta[2]};
  out.domega = solve3(A, rhs);
  const QuatT<S> om_sharp = sharp(st.omega);
  const QuatT<S> qdot = qmul(q, om_sharp);
  out.dq = {0.5 * qdot[0], 0.5 * qdot[1], 0.5 * qdot[2], 0.5 * qdot[3]};
  const Vec3T<S> spatial_omega = scale(1.0 / qn2, quat_rotate(q, st.omega));
  const Vec3T<S> zdot3 = cross(spatial_omega, scale(P.r, e3));
  out.dz = {zdot3[0], zdot3[1]};
  return out;
}

/// Normal force and the planar friction vector for the ball.
template <class S>
void ball_reactions(const BallParams& P, const BallStateT<S>& st, std::span<const S> ddtheta,
                    const Vec3T<S>& Fe_spatial, S& N, Vec2T<S>& friction) {
  const BallDerivT<S> d = ball_dynamics(P, st, ddtheta, Fe_spatial);
  const Vec3T<S> e3 = {S{0.0}, S{0.0}, S{1.0}};
  const QuatT<S> qc = qconj(st.q);
  const S qn2 = qnorm_sq(st.q);
  const Vec3T<S> Gamma = scale(1.0 / qn2, quat_rotate(qc, e3));

  Vec3T<S> body_sum = {S{0.0}, S{0.0}, S{0.0}};
  auto accumulate = [&](double m, const Vec3T<S>& zeta, const Vec3T<S>& dz, const Vec3T<S>& ddz,
                        const S& td, const S& tdd) {
    const Vec3T<S> s = add(scale(P.r, Gamma), zeta);
    Vec3T<S> term = cross(d.domega, s);
    term = add(term, cross(st.omega, add(cross(st.omega, zeta), scale(2.0, scale(td, dz)))));
    term = add(term, scale(td * td, ddz));
    term = add(term, scale(tdd, dz));
    body_sum = add(body_sum, scale(m, term));
  };
  {
    const Vec3T<S> z0 = {S{P.zeta0(0)}, S{P.zeta0(1)}, S{P.zeta0(2)}};
    const Vec3T<S> zero = {S{0.0}, S{0.0}, S{0.0}};
    accumulate(P.m0, z0, zero, zero, S{0.0}, S{0.0});
  }
  for (size_t i = 0; i < P.rails.size(); ++i) {
    Vec3T<S> z, dz, ddz;
    rail_eval(P.rails[i], st.theta[i], z, dz, ddz);
    accumulate(P.masses[i], z, dz, ddz, st.dtheta[i], ddtheta[i]);
  }
  N = P.total_mass() * P.g + dot(body_sum, Gamma) - Fe_spatial[2];
  const Vec3T<S> spatial = scale(1.0 / qn2, quat_rotate(st.q, body_sum));
  friction = {spatial[0] - Fe_spatial[0], spatial[1] - Fe_spatial[1]};
}

/// Total mechanical energy of the ball with frozen masses; conserved when
/// dtheta = ddtheta = 0 and Fe = 0, used as a model-test invariant.
inline double ball_energy(const BallParams& P, const BallState& st) {
  const Eigen::Vector3d om(st.omega[0], st.omega[1], st.omega[2]);
  const auto qc = qconj(st.q);
  const double qn2 = qnorm_sq(st.q);
  const auto g3 = quat_rotate(qc, Vec3T<double>{0, 0, 1});
  const Eigen::Vector3d Gamma(g3[0] / qn2, g3[1] / qn2, g3[2] / qn2);
  double E = 0.5 * om.dot(P.inertia.asDiagonal() * om);
  auto mass_term = [&](double m, const Eigen::Vector3d& zeta) {
    const Eigen::Vector3d s = P.r * Gamma + zeta;
    const Eigen::Vector3d v = om.cross(s);
    E += 0.5 * m * v.squaredNorm() + m * P.g * Gamma.dot(zeta);
  };
  mass_term(P.m0, P.zeta0);
  for (size_t i = 0; i < P.rails.size(); ++i) {
    Vec3T<double> z, dz, ddz;
    rail_eval(P.rails[i], st.theta[i], z, dz, ddz);
    mass_term(P.masses[i], Eigen::Vector3d(z[0], z[1], z[2]));
  }
  return E;
}

/// Classical RK4 step of the frozen-parameter ball state; test utility only.
inline BallState ball_rk4_step(const BallParams& P, const BallState& st,
                               const Eigen::Vector3d& ddtheta, double dt) {
  auto plus = [](const BallState& s, const BallDerivT<double>& d, double h) {
    BallState r = s;
    for (int i = 0; i < 3; ++i) {
      r.theta[i] += h * d.dtheta[i];
      r.dtheta[i] += h * d.ddtheta[i];
      r.omega[i] += h * d.domega[i];
    }
    for (int i = 0; i < 4; ++i) r.q[i] += h * d.dq[i];
    for (int i = 0; i < 2; ++i) r.z[i] += h * d.dz[i];
    return r;
  };
  const Vec3T<double> fe = {0, 0, 0};
  const std::array<double, 3> u = {ddtheta(0), ddtheta(1), ddtheta(2)};
  const auto k1 = ball_dynamics<double>(P, st, u, fe);
  const auto k2 = ball_dynamics<double>(P, plus(st, k1, dt / 2), u, fe);
  const auto k3 = ball_dynamics<double>(P, plus(st, k2, dt / 2), u, fe);
  const auto k4 = ball_dynamics<double>(P, plus(st, k3, dt), u, fe);
  BallState r = st;
  for (int i = 0; i < 3; ++i) {
    r.theta[i] += dt / 6 * (k1.dtheta[i] + 2 * k2.dtheta[i] + 2 * k3.dtheta[i] + k4.dtheta[i]);
    r.dtheta[i] += dt / 6 * (k1.ddtheta[i] + 2 * k2.ddtheta[i] + 2 * k3.ddtheta[i] + k4.ddtheta[i]);
    r.omega[i] += dt / 6 * (k1.domega[i] + 2 * k2.domega[i] + 2 * k3.domega[i] + k4.domega[i]);
  }
  for (int i = 0; i < 4; ++i)
    r.q[i] += dt / 6 * (k1.dq[i] + 2 * k2.dq[i] + 2 * k3.dq[i] + k4.dq[i]);
  for (int i = 0; i < 2; ++i)
    r.z[i] += dt / 6 * (k1.dz[i] + 2 * k2.dz[i] + 2 * k3.dz[i] + k4.dz[i]);
  return r;
}

/// Scan a sampled trajectory of (N, |f_s|) pairs into a validity report.
inline FeasibilityReport feasibility_scan(const std::vector<double>& N,
                                          const std::vector<double>& fs) {
  FeasibilityReport rep;
  rep.min_N = N.empty() ? 0.0 : N[0];
  for (size_t i = 0; i < N.size(); ++i) {
    rep.min_N = std::min(rep.min_N, N[i]);
    if (N[i] > 0.0) rep.max_ratio = std::max(rep.max_ratio, std::fabs(fs[i]) / N[i]);
  }
  rep.min_mu_s = rep.max_ratio;
  rep.detach_flag = rep.min_N <= 0.0;
  return rep;
}

}  // namespace rollpac
