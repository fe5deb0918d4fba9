#pragma once

#include <Eigen/Core>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "rollpac/dual2.hpp"
#include "rollpac/tpbvp.hpp"

namespace rollpac {

// Converts a regular optimal control problem into a normalized TPBVP on
// [0,1] over the expanded dependent variable [x; lam; xi; nu; a; b], with
// all Jacobians assembled from derivatives of L, f, sigma, psi, and the
// endpoint function G = p + xi^T sigma + nu^T psi.

using DualVec = std::vector<Dual2>;

struct OcpDefinition {
  int n = 0, m = 0, k1 = 0, k2 = 0;
  bool a_fixed = true, b_fixed = true;
  double a = 0.0, b = 1.0;  // values when fixed, initial guesses when free

  std::function<Dual2(const Dual2& t, std::span<const Dual2> x, std::span<const Dual2> u,
                      const Dual2& mu)>
      L;
  std::function<DualVec(const Dual2& t, std::span<const Dual2> x, std::span<const Dual2> u,
                        const Dual2& mu)>
      f;
  std::function<DualVec(const Dual2& a, std::span<const Dual2> xa, const Dual2& mu)> sigma;
  std::function<DualVec(const Dual2& b, std::span<const Dual2> xb, const Dual2& mu)> psi;
  // optional endpoint cost p(a, x(a), b, x(b), mu)
  std::function<Dual2(const Dual2& a, std::span<const Dual2> xa, const Dual2& b,
                      std::span<const Dual2> xb, const Dual2& mu)>
      p;
  // optional closed-form control u = pi(t, x, lam, mu)
  std::function<Eigen::VectorXd(double t, const Eigen::VectorXd& x, const Eigen::VectorXd& lam,
                                double mu)>
      analytic_pi;

  void check_dims() const {
    const int lo1 = a_fixed ? 0 : 1, hi1 = a_fixed ? n : n + 1;
    const int lo2 = b_fixed ? 0 : 1, hi2 = b_fixed ? n : n + 1;
    if (k1 < lo1 || k1 > hi1 || k2 < lo2 || k2 > hi2)
      throw std::invalid_argument("OcpDefinition: k1/k2 out of range");
  }
};

struct ControlLaw {
  enum class Mode { Analytic, NewtonRecovered };
  Mode mode = Mode::Analytic;
  int max_iters = 30;
  double tol = 1e-11;
};

struct SingularControlHessian : std::runtime_error {
  SingularControlHessian() : std::runtime_error("H_uu is singular") {}
};
struct ControlNoConvergence : std::runtime_error {
  ControlNoConvergence() : std::runtime_error("control recovery did not converge") {}
};

/// Index layout of the expanded state [x; lam; xi; nu; a?; b?]; fixed
/// endpoint times are not carried as variables.
struct ExpandedLayout {
  int n = 0, k1 = 0, k2 = 0;
  bool a_free = false, b_free = false;

  static ExpandedLayout of(const OcpDefinition& def) {
    return {def.n, def.k1, def.k2, !def.a_fixed, !def.b_fixed};
  }
  int dim() const { return 2 * n + k1 + k2 + (a_free ? 1 : 0) + (b_free ? 1 : 0); }
  int x_off() const { return 0; }
  int lam_off() const { return n; }
  int xi_off() const { return 2 * n; }
  int nu_off() const { return 2 * n + k1; }
  int a_off() const { return 2 * n + k1 + k2; }
  int b_off() const { return 2 * n + k1 + k2 + (a_free ? 1 : 0); }

  double time_a(const OcpDefinition& def, const Eigen::VectorXd& z) const {
    return a_free ? z(a_off()) : def.a;
  }
  double time_b(const OcpDefinition& def, const Eigen::VectorXd& z) const {
    return b_free ? z(b_off()) : def.b;
  }
};

/// Derivatives of H, f, pi, f-hat, H-hat at one (t, x, lam, u, mu) point.
struct PointEval {
  Eigen::VectorXd u, f;
  Eigen::MatrixXd f_x, f_u;
  Eigen::VectorXd f_t, f_mu;
  double H = 0, H_t = 0, H_mu = 0;
  Eigen::VectorXd H_x;
  Eigen::MatrixXd H_xx, H_ux, H_uu;
  Eigen::VectorXd H_xt, H_xmu, H_ut, H_umu;
  Eigen::MatrixXd pi_x, pi_lam;
  Eigen::VectorXd pi_t, pi_mu;
  Eigen::MatrixXd fhat_x, fhat_lam;
  Eigen::VectorXd fhat_t, fhat_mu;
  Eigen::MatrixXd Hhat_xx;
  Eigen::VectorXd Hhat_x, Hhat_xt, Hhat_xmu;
};

double hamiltonian(const OcpDefinition& def, double t, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& lam, const Eigen::VectorXd& u, double mu);

/// Control satisfying H_u = 0: the analytic formula when the law says so,
/// else Newton's method u <- u - H_uu^-1 H_u^T from the warm start.
Eigen::VectorXd resolve_control(const OcpDefinition& def, double t, const Eigen::VectorXd& x,
                                const Eigen::VectorXd& lam, double mu, const ControlLaw& law,
                                const Eigen::VectorXd* warm = nullptr);

/// Full second-order point evaluation; u must already satisfy H_u = 0.
PointEval evaluate_point(const OcpDefinition& def, double t, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& lam, const Eigen::VectorXd& u, double mu);

struct ControlJacobians {
  Eigen::MatrixXd pi_lam, pi_x;
  Eigen::VectorXd pi_t, pi_mu;
};
ControlJacobians control_jacobians(const OcpDefinition& def, double t, const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& lam, double mu, const ControlLaw& law);

struct FhatDerivs {
  Eigen::VectorXd fhat;
  Eigen::MatrixXd fhat_lam, fhat_x;
  Eigen::VectorXd fhat_t, fhat_mu;
};
FhatDerivs fhat_and_derivs(const OcpDefinition& def, double t, const Eigen::VectorXd& x,
                           const Eigen::VectorXd& lam, double mu, const ControlLaw& law);

struct HhatSecondDerivs {
  Eigen::MatrixXd Hxx;
  Eigen::VectorXd Hxt, Hxmu, Hx;
  double Ht = 0, Hmu = 0;
};
HhatSecondDerivs hhat_second_derivs(const OcpDefinition& def, double t, const Eigen::VectorXd& x,
                                    const Eigen::VectorXd& lam, double mu, const ControlLaw& law);

/// Normalized ODE velocity [f-hat T; -H-hat_x^T T; 0] with t(s) = T s + a.
Eigen::VectorXd phi(const OcpDefinition& def, const ControlLaw& law, double s,
                    const Eigen::VectorXd& z, double mu);

struct PhiJacobians {
  Eigen::MatrixXd d_z;
  Eigen::VectorXd d_mu;
};
PhiJacobians phi_jacobians(const OcpDefinition& def, const ControlLaw& law, double s,
                           const Eigen::VectorXd& z, double mu);

/// Normalized two-point boundary condition; constants (xi, nu, a, b) are
/// read from the right endpoint vector z1.
Eigen::VectorXd upsilon(const OcpDefinition& def, const ControlLaw& law,
                        const Eigen::VectorXd& z0, const Eigen::VectorXd& z1, double mu);

struct UpsilonJacobians {
  Eigen::MatrixXd d_z0, d_z1;
  Eigen::VectorXd d_mu;
};
UpsilonJacobians upsilon_jacobians(const OcpDefinition& def, const ControlLaw& law,
                                   const Eigen::VectorXd& z0, const Eigen::VectorXd& z1,
                                   double mu);

/// The assembled TPBVP over the expanded state on [0,1], with the scalar
/// family parameter wired to the continuation parameter mu.
TpbvpProblem build_ocp_tpbvp(const OcpDefinition& def, const ControlLaw& law, double mu);

}  // namespace rollpac
