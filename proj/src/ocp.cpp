#include "rollpac/ocp.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <unordered_map>

namespace rollpac {

namespace {

Eigen::VectorXd values_of(const DualVec& v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i].value();
  return out;
}

// H = L + lam^T f with lam entering as constants.
Dual2 hamiltonian_dual(const OcpDefinition& def, const Dual2& t, std::span<const Dual2> x,
                       const Eigen::VectorXd& lam, std::span<const Dual2> u, const Dual2& mu,
                       DualVec* f_out = nullptr) {
  DualVec f = def.f(t, x, u, mu);
  Dual2 H = def.L(t, x, u, mu);
  for (int i = 0; i < def.n; ++i) H += lam(i) * f[static_cast<size_t>(i)];
  if (f_out) *f_out = std::move(f);
  return H;
}

}  // namespace

double hamiltonian(const OcpDefinition& def, double t, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& lam, const Eigen::VectorXd& u, double mu) {
  const DualVec xd = constants(x), ud = constants(u);
  return hamiltonian_dual(def, Dual2(t), xd, lam, ud, Dual2(mu)).value();
}

Eigen::VectorXd resolve_control(const OcpDefinition& def, double t, const Eigen::VectorXd& x,
                                const Eigen::VectorXd& lam, double mu, const ControlLaw& law,
                                const Eigen::VectorXd* warm) {
  if (law.mode == ControlLaw::Mode::Analytic) {
    if (!def.analytic_pi) throw std::invalid_argument("resolve_control: no analytic pi");
    return def.analytic_pi(t, x, lam, mu);
  }
  Eigen::VectorXd u = (warm && warm->size() == def.m) ? *warm : Eigen::VectorXd::Zero(def.m);
  const DualVec xd = constants(x);
  for (int it = 0; it <= law.max_iters; ++it) {
    ActiveSeeder seeder(def.m, true);
    const DualVec ud = seeder.vector(u);
    const Dual2 H = hamiltonian_dual(def, Dual2(t), xd, lam, ud, Dual2(mu));
    const Eigen::VectorXd Hu = H.gradient(def.m);
    if (Hu.lpNorm<Eigen::Infinity>() <= law.tol) return u;
    if (it == law.max_iters) break;
    const Eigen::MatrixXd Huu = H.hessian(def.m);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(Huu);
    if (!lu.isInvertible()) throw SingularControlHessian();
    u -= lu.solve(Hu);
  }
  throw ControlNoConvergence();
}

PointEval evaluate_point(const OcpDefinition& def, double t, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& lam, const Eigen::VectorXd& u, double mu) {
  const int n = def.n, m = def.m;
  const int k = 1 + n + m + 1;  // actives: [t; x; u; mu]
  ActiveSeeder seeder(k, true);
  const Dual2 td = seeder.scalar(t);
  const DualVec xd = seeder.vector(x);
  const DualVec ud = seeder.vector(u);
  const Dual2 mud = seeder.scalar(mu);

  DualVec fd;
  const Dual2 H = hamiltonian_dual(def, td, xd, lam, ud, mud, &fd);

  PointEval pe;
  pe.u = u;
  pe.f = values_of(fd);
  pe.f_x.resize(n, n);
  pe.f_u.resize(n, m);
  pe.f_t.resize(n);
  pe.f_mu.resize(n);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd g = fd[static_cast<size_t>(i)].gradient(k);
    pe.f_t(i) = g(0);
    pe.f_x.row(i) = g.segment(1, n).transpose();
    pe.f_u.row(i) = g.segment(1 + n, m).transpose();
    pe.f_mu(i) = g(k - 1);
  }

  const Eigen::VectorXd Hg = H.gradient(k);
  const Eigen::MatrixXd Hh = H.hessian(k);
  pe.H = H.value();
  pe.H_t = Hg(0);
  pe.H_x = Hg.segment(1, n);
  pe.H_mu = Hg(k - 1);
  pe.H_xx = Hh.block(1, 1, n, n);
  pe.H_ux = Hh.block(1 + n, 1, m, n);
  pe.H_uu = Hh.block(1 + n, 1 + n, m, m);
  pe.H_xt = Hh.block(1, 0, n, 1);
  pe.H_xmu = Hh.block(1, k - 1, n, 1);
  pe.H_ut = Hh.block(1 + n, 0, m, 1);
  pe.H_umu = Hh.block(1 + n, k - 1, m, 1);

  Eigen::FullPivLU<Eigen::MatrixXd> lu(pe.H_uu);
  if (!lu.isInvertible()) throw SingularControlHessian();
  pe.pi_lam = -lu.solve(pe.f_u.transpose());
  pe.pi_x = -lu.solve(pe.H_ux);
  pe.pi_t = -lu.solve(pe.H_ut);
  pe.pi_mu = -lu.solve(pe.H_umu);

  pe.fhat_lam = pe.f_u * pe.pi_lam;
  pe.fhat_x = pe.f_x + pe.f_u * pe.pi_x;
  pe.fhat_t = pe.f_t + pe.f_u * pe.pi_t;
  pe.fhat_mu = pe.f_mu + pe.f_u * pe.pi_mu;

  pe.Hhat_x = pe.H_x;
  const Eigen::MatrixXd Hxx = pe.H_xx - pe.pi_x.transpose() * pe.H_uu * pe.pi_x;
  pe.Hhat_xx = 0.5 * (Hxx + Hxx.transpose());
  pe.Hhat_xt = pe.H_xt - pe.pi_x.transpose() * pe.H_uu * pe.pi_t;
  pe.Hhat_xmu = pe.H_xmu - pe.pi_x.transpose() * pe.H_uu * pe.pi_mu;
  return pe;
}

ControlJacobians control_jacobians(const OcpDefinition& def, double t, const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& lam, double mu, const ControlLaw& law) {
  const Eigen::VectorXd u = resolve_control(def, t, x, lam, mu, law);
  const PointEval pe = evaluate_point(def, t, x, lam, u, mu);
  return {pe.pi_lam, pe.pi_x, pe.pi_t, pe.pi_mu};
}

FhatDerivs fhat_and_derivs(const OcpDefinition& def, double t, const Eigen::VectorXd& x,
                           const Eigen::VectorXd& lam, double mu, const ControlLaw& law) {
  const Eigen::VectorXd u = resolve_control(def, t, x, lam, mu, law);
  const PointEval pe = evaluate_point(def, t, x, lam, u, mu);
  return {pe.f, pe.fhat_lam, pe.fhat_x, pe.fhat_t, pe.fhat_mu};
}

HhatSecondDerivs hhat_second_derivs(const OcpDefinition& def, double t, const Eigen::VectorXd& x,
                                    const Eigen::VectorXd& lam, double mu, const ControlLaw& law) {
  const Eigen::VectorXd u = resolve_control(def, t, x, lam, mu, law);
  const PointEval pe = evaluate_point(def, t, x, lam, u, mu);
  return {pe.Hhat_xx, pe.Hhat_xt, pe.Hhat_xmu, pe.Hhat_x, pe.H_t, pe.H_mu};
}

namespace {

// Value-and-gradient pass over x only: f values and Hhat_x.
void phi_point(const OcpDefinition& def, double t, const Eigen::VectorXd& x,
               const Eigen::VectorXd& lam, const Eigen::VectorXd& u, double mu,
               Eigen::VectorXd& f_out, Eigen::VectorXd& Hx_out) {
  ActiveSeeder seeder(def.n, false);
  const DualVec xd = seeder.vector(x);
  const DualVec ud = constants(u);
  DualVec fd;
  const Dual2 H = hamiltonian_dual(def, Dual2(t), xd, lam, ud, Dual2(mu), &fd);
  f_out = values_of(fd);
  Hx_out = H.gradient(def.n);
}

struct EndpointTimes {
  double a, b, T;
};

EndpointTimes endpoint_times(const OcpDefinition& def, const ExpandedLayout& lay,
                             const Eigen::VectorXd& z) {
  const double a = lay.time_a(def, z);
  const double b = lay.time_b(def, z);
  if (!(b > a)) throw std::domain_error("ocp: b <= a");
  return {a, b, b - a};
}

// First derivatives of sigma or psi w.r.t. [t_end; x_end; mu].
struct BoundaryFnDerivs {
  Eigen::VectorXd value;
  Eigen::MatrixXd d_x;
  Eigen::VectorXd d_t, d_mu;
};

template <class Fn>
BoundaryFnDerivs boundary_fn_derivs(const Fn& fn, int rows, int n, double t_end,
                                    const Eigen::VectorXd& x_end, double mu) {
  ActiveSeeder seeder(n + 2, false);
  const Dual2 td = seeder.scalar(t_end);
  const DualVec xd = seeder.vector(x_end);
  const Dual2 mud = seeder.scalar(mu);
  const DualVec v = fn(td, xd, mud);
  BoundaryFnDerivs out;
  out.value.resize(rows);
  out.d_x.resize(rows, n);
  out.d_t.resize(rows);
  out.d_mu.resize(rows);
  for (int i = 0; i < rows; ++i) {
    out.value(i) = v[static_cast<size_t>(i)].value();
    const Eigen::VectorXd g = v[static_cast<size_t>(i)].gradient(n + 2);
    out.d_t(i) = g(0);
    out.d_x.row(i) = g.segment(1, n).transpose();
    out.d_mu(i) = g(n + 1);
  }
  return out;
}

// G = p + xi^T sigma + nu^T psi in dual form.
Dual2 endpoint_g(const OcpDefinition& def, const Dual2& a, std::span<const Dual2> xa,
                 const Dual2& b, std::span<const Dual2> xb, std::span<const Dual2> xi,
                 std::span<const Dual2> nu, const Dual2& mu) {
  Dual2 G = def.p ? def.p(a, xa, b, xb, mu) : Dual2(0.0);
  const DualVec sig = def.sigma(a, xa, mu);
  for (int i = 0; i < def.k1; ++i) G += xi[static_cast<size_t>(i)] * sig[static_cast<size_t>(i)];
  const DualVec ps = def.psi(b, xb, mu);
  for (int i = 0; i < def.k2; ++i) G += nu[static_cast<size_t>(i)] * ps[static_cast<size_t>(i)];
  return G;
}

// Derivatives of G over the active layout [a; xa; b; xb; xi; nu; mu].
struct GDerivs {
  double d_a = 0, d_b = 0, d_mu = 0;
  Eigen::VectorXd d_xa, d_xb;
  Eigen::MatrixXd hess;
  int n = 0, k1 = 0, k2 = 0;

  int ia() const { return 0; }
  int ixa() const { return 1; }
  int ib() const { return 1 + n; }
  int ixb() const { return 2 + n; }
  int ixi() const { return 2 + 2 * n; }
  int inu() const { return 2 + 2 * n + k1; }
  int imu() const { return 2 + 2 * n + k1 + k2; }
};

GDerivs endpoint_g_derivs(const OcpDefinition& def, double a, const Eigen::VectorXd& xa, double b,
                          const Eigen::VectorXd& xb, const Eigen::VectorXd& xi,
                          const Eigen::VectorXd& nu, double mu, bool with_hess) {
  const int n = def.n, k1 = def.k1, k2 = def.k2;
  const int k = 2 * n + k1 + k2 + 3;
  ActiveSeeder seeder(k, with_hess);
  const Dual2 ad = seeder.scalar(a);
  const DualVec xad = seeder.vector(xa);
  const Dual2 bd = seeder.scalar(b);
  const DualVec xbd = seeder.vector(xb);
  const DualVec xid = seeder.vector(xi);
  const DualVec nud = seeder.vector(nu);
  const Dual2 mud = seeder.scalar(mu);
  const Dual2 G = endpoint_g(def, ad, xad, bd, xbd, xid, nud, mud);

  GDerivs out;
  out.n = n;
  out.k1 = k1;
  out.k2 = k2;
  const Eigen::VectorXd g = G.gradient(k);
  out.d_a = g(0);
  out.d_xa = g.segment(1, n);
  out.d_b = g(1 + n);
  out.d_xb = g.segment(2 + n, n);
  out.d_mu = g(k - 1);
  if (with_hess) out.hess = G.hessian(k);
  return out;
}

}  // namespace

Eigen::VectorXd phi(const OcpDefinition& def, const ControlLaw& law, double s,
                    const Eigen::VectorXd& z, double mu) {
  const ExpandedLayout lay = ExpandedLayout::of(def);
  const EndpointTimes et = endpoint_times(def, lay, z);
  const double t = et.T * s + et.a;
  const Eigen::VectorXd x = z.segment(lay.x_off(), def.n);
  const Eigen::VectorXd lam = z.segment(lay.lam_off(), def.n);
  const Eigen::VectorXd u = resolve_control(def, t, x, lam, mu, law);
  Eigen::VectorXd f, Hx;
  phi_point(def, t, x, lam, u, mu, f, Hx);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(lay.dim());
  out.segment(lay.x_off(), def.n) = et.T * f;
  out.segment(lay.lam_off(), def.n) = -et.T * Hx;
  return out;
}

PhiJacobians phi_jacobians(const OcpDefinition& def, const ControlLaw& law, double s,
                           const Eigen::VectorXd& z, double mu) {
  const ExpandedLayout lay = ExpandedLayout::of(def);
  const EndpointTimes et = endpoint_times(def, lay, z);
  const double t = et.T * s + et.a;
  const Eigen::VectorXd x = z.segment(lay.x_off(), def.n);
  const Eigen::VectorXd lam = z.segment(lay.lam_off(), def.n);
  const Eigen::VectorXd u = resolve_control(def, t, x, lam, mu, law);
  const PointEval pe = evaluate_point(def, t, x, lam, u, mu);

  const int d = lay.dim(), n = def.n;
  PhiJacobians J;
  J.d_z = Eigen::MatrixXd::Zero(d, d);
  J.d_mu = Eigen::VectorXd::Zero(d);

  J.d_z.block(0, lay.x_off(), n, n) = et.T * pe.fhat_x;
  J.d_z.block(0, lay.lam_off(), n, n) = et.T * pe.fhat_lam;
  J.d_z.block(n, lay.x_off(), n, n) = -et.T * pe.Hhat_xx;
  J.d_z.block(n, lay.lam_off(), n, n) = -et.T * pe.fhat_x.transpose();
  if (lay.a_free) {
    J.d_z.block(0, lay.a_off(), n, 1) = -pe.f + pe.fhat_t * (1.0 - s) * et.T;
    J.d_z.block(n, lay.a_off(), n, 1) = pe.Hhat_x - pe.Hhat_xt * (1.0 - s) * et.T;
  }
  if (lay.b_free) {
    J.d_z.block(0, lay.b_off(), n, 1) = pe.f + pe.fhat_t * s * et.T;
    J.d_z.block(n, lay.b_off(), n, 1) = -pe.Hhat_x - pe.Hhat_xt * s * et.T;
  }
  J.d_mu.segment(0, n) = et.T * pe.fhat_mu;
  J.d_mu.segment(n, n) = -et.T * pe.Hhat_xmu;
  return J;
}

Eigen::VectorXd upsilon(const OcpDefinition& def, const ControlLaw& law,
                        const Eigen::VectorXd& z0, const Eigen::VectorXd& z1, double mu) {
  const ExpandedLayout lay = ExpandedLayout::of(def);
  const EndpointTimes et = endpoint_times(def, lay, z1);  // constants read from z1
  const int n = def.n;
  const Eigen::VectorXd x0 = z0.segment(lay.x_off(), n);
  const Eigen::VectorXd l0 = z0.segment(lay.lam_off(), n);
  const Eigen::VectorXd x1 = z1.segment(lay.x_off(), n);
  const Eigen::VectorXd l1 = z1.segment(lay.lam_off(), n);
  const Eigen::VectorXd xi = z1.segment(lay.xi_off(), def.k1);
  const Eigen::VectorXd nu = z1.segment(lay.nu_off(), def.k2);

  const GDerivs G = endpoint_g_derivs(def, et.a, x0, et.b, x1, xi, nu, mu, false);
  const DualVec x0c = constants(x0), x1c = constants(x1);
  const Eigen::VectorXd sig = values_of(def.sigma(Dual2(et.a), x0c, Dual2(mu)));
  const Eigen::VectorXd ps = values_of(def.psi(Dual2(et.b), x1c, Dual2(mu)));

  Eigen::VectorXd out(lay.dim());
  int r = 0;
  if (lay.a_free) {
    const Eigen::VectorXd ua = resolve_control(def, et.a, x0, l0, mu, law);
    out(r++) = hamiltonian(def, et.a, x0, l0, ua, mu) - G.d_a;
  }
  out.segment(r, n) = l0 + G.d_xa;
  r += n;
  out.segment(r, def.k1) = sig;
  r += def.k1;
  if (lay.b_free) {
    const Eigen::VectorXd ub = resolve_control(def, et.b, x1, l1, mu, law);
    out(r++) = hamiltonian(def, et.b, x1, l1, ub, mu) + G.d_b;
  }
  out.segment(r, n) = l1 - G.d_xb;
  r += n;
  out.segment(r, def.k2) = ps;
  return out;
}

UpsilonJacobians upsilon_jacobians(const OcpDefinition& def, const ControlLaw& law,
                                   const Eigen::VectorXd& z0, const Eigen::VectorXd& z1,
                                   double mu) {
  const ExpandedLayout lay = ExpandedLayout::of(def);
  const EndpointTimes et = endpoint_times(def, lay, z1);
  const int n = def.n, k1 = def.k1, k2 = def.k2, d = lay.dim();
  const Eigen::VectorXd x0 = z0.segment(lay.x_off(), n);
  const Eigen::VectorXd l0 = z0.segment(lay.lam_off(), n);
  const Eigen::VectorXd x1 = z1.segment(lay.x_off(), n);
  const Eigen::VectorXd l1 = z1.segment(lay.lam_off(), n);
  const Eigen::VectorXd xi = z1.segment(lay.xi_off(), k1);
  const Eigen::VectorXd nu = z1.segment(lay.nu_off(), k2);

  const GDerivs G = endpoint_g_derivs(def, et.a, x0, et.b, x1, xi, nu, mu, true);
  const BoundaryFnDerivs sig = boundary_fn_derivs(def.sigma, k1, n, et.a, x0, mu);
  const BoundaryFnDerivs ps = boundary_fn_derivs(def.psi, k2, n, et.b, x1, mu);

  UpsilonJacobians J;
  J.d_z0 = Eigen::MatrixXd::Zero(d, d);
  J.d_z1 = Eigen::MatrixXd::Zero(d, d);
  J.d_mu = Eigen::VectorXd::Zero(d);

  const Eigen::MatrixXd& H = G.hess;
  int r = 0;
  if (lay.a_free) {
    const Eigen::VectorXd ua = resolve_control(def, et.a, x0, l0, mu, law);
    const PointEval pa = evaluate_point(def, et.a, x0, l0, ua, mu);
    J.d_z0.block(r, lay.x_off(), 1, n) = pa.Hhat_x.transpose() - H.block(G.ia(), G.ixa(), 1, n);
    J.d_z0.block(r, lay.lam_off(), 1, n) = pa.f.transpose();
    J.d_z1.block(r, lay.x_off(), 1, n) = -H.block(G.ia(), G.ixb(), 1, n);
    J.d_z1.block(r, lay.xi_off(), 1, k1) = -H.block(G.ia(), G.ixi(), 1, k1);
    J.d_z1.block(r, lay.nu_off(), 1, k2) = -H.block(G.ia(), G.inu(), 1, k2);
    J.d_z1(r, lay.a_off()) = pa.H_t - H(G.ia(), G.ia());
    if (lay.b_free) J.d_z1(r, lay.b_off()) = -H(G.ia(), G.ib());
    J.d_mu(r) = pa.H_mu - H(G.ia(), G.imu());
    ++r;
  }
  // rows lam(0) + G_x(a)^T
  J.d_z0.block(r, lay.x_off(), n, n) = H.block(G.ixa(), G.ixa(), n, n);
  J.d_z0.block(r, lay.lam_off(), n, n) = Eigen::MatrixXd::Identity(n, n);
  J.d_z1.block(r, lay.x_off(), n, n) = H.block(G.ixa(), G.ixb(), n, n);
  J.d_z1.block(r, lay.xi_off(), n, k1) = H.block(G.ixa(), G.ixi(), n, k1);
  J.d_z1.block(r, lay.nu_off(), n, k2) = H.block(G.ixa(), G.inu(), n, k2);
  if (lay.a_free) J.d_z1.block(r, lay.a_off(), n, 1) = H.block(G.ixa(), G.ia(), n, 1);
  if (lay.b_free) J.d_z1.block(r, lay.b_off(), n, 1) = H.block(G.ixa(), G.ib(), n, 1);
  J.d_mu.segment(r, n) = H.block(G.ixa(), G.imu(), n, 1);
  r += n;
  // rows sigma
  J.d_z0.block(r, lay.x_off(), k1, n) = sig.d_x;
  if (lay.a_free) J.d_z1.block(r, lay.a_off(), k1, 1) = sig.d_t;
  J.d_mu.segment(r, k1) = sig.d_mu;
  r += k1;
  if (lay.b_free) {
    const Eigen::VectorXd ub = resolve_control(def, et.b, x1, l1, mu, law);
    const PointEval pb = evaluate_point(def, et.b, x1, l1, ub, mu);
    J.d_z0.block(r, lay.x_off(), 1, n) = H.block(G.ib(), G.ixa(), 1, n);
    J.d_z1.block(r, lay.x_off(), 1, n) = pb.Hhat_x.transpose() + H.block(G.ib(), G.ixb(), 1, n);
    J.d_z1.block(r, lay.lam_off(), 1, n) = pb.f.transpose();
    J.d_z1.block(r, lay.xi_off(), 1, k1) = H.block(G.ib(), G.ixi(), 1, k1);
    J.d_z1.block(r, lay.nu_off(), 1, k2) = H.block(G.ib(), G.inu(), 1, k2);
    if (lay.a_free) J.d_z1(r, lay.a_off()) = H(G.ib(), G.ia());
    J.d_z1(r, lay.b_off()) = pb.H_t + H(G.ib(), G.ib());
    J.d_mu(r) = pb.H_mu + H(G.ib(), G.imu());
    ++r;
  }
  // rows lam(1) - G_x(b)^T
  J.d_z0.block(r, lay.x_off(), n, n) = -H.block(G.ixb(), G.ixa(), n, n);
  J.d_z1.block(r, lay.x_off(), n, n) = -H.block(G.ixb(), G.ixb(), n, n);
  J.d_z1.block(r, lay.lam_off(), n, n) = Eigen::MatrixXd::Identity(n, n);
  J.d_z1.block(r, lay.xi_off(), n, k1) = -H.block(G.ixb(), G.ixi(), n, k1);
  J.d_z1.block(r, lay.nu_off(), n, k2) = -H.block(G.ixb(), G.inu(), n, k2);
  if (lay.a_free) J.d_z1.block(r, lay.a_off(), n, 1) = -H.block(G.ixb(), G.ia(), n, 1);
  if (lay.b_free) J.d_z1.block(r, lay.b_off(), n, 1) = -H.block(G.ixb(), G.ib(), n, 1);
  J.d_mu.segment(r, n) = -H.block(G.ixb(), G.imu(), n, 1);
  r += n;
  // rows psi
  J.d_z1.block(r, lay.x_off(), k2, n) = ps.d_x;
  if (lay.b_free) J.d_z1.block(r, lay.b_off(), k2, 1) = ps.d_t;
  J.d_mu.segment(r, k2) = ps.d_mu;
  return J;
}

namespace {

// per-thread warm-start slots for Newton control recovery, keyed per problem
Eigen::VectorXd* warm_slot(const void* tag) {
  thread_local std::unordered_map<const void*, Eigen::VectorXd> store;
  return &store[tag];
}

}  // namespace

TpbvpProblem build_ocp_tpbvp(const OcpDefinition& def, const ControlLaw& law, double mu) {
  def.check_dims();
  const ExpandedLayout lay = ExpandedLayout::of(def);
  auto tag = std::make_shared<int>(0);

  TpbvpProblem p;
  p.dim = lay.dim();
  p.lam = mu;
  if (law.mode == ControlLaw::Mode::NewtonRecovered) {
    p.F = [def, law, lay, tag](double s, const Eigen::VectorXd& z, double m) {
      const EndpointTimes et = endpoint_times(def, lay, z);
      const double t = et.T * s + et.a;
      const Eigen::VectorXd x = z.segment(0, def.n), lamv = z.segment(def.n, def.n);
      Eigen::VectorXd* slot = warm_slot(tag.get());
      const Eigen::VectorXd u = resolve_control(def, t, x, lamv, m, law, slot);
      *slot = u;
      Eigen::VectorXd f, Hx;
      phi_point(def, t, x, lamv, u, m, f, Hx);
      Eigen::VectorXd out = Eigen::VectorXd::Zero(lay.dim());
      out.segment(0, def.n) = et.T * f;
      out.segment(def.n, def.n) = -et.T * Hx;
      return out;
    };
  } else {
    p.F = [def, law](double s, const Eigen::VectorXd& z, double m) {
      return phi(def, law, s, z, m);
    };
  }
  p.F_y = [def, law](double s, const Eigen::VectorXd& z, double m) {
    return phi_jacobians(def, law, s, z, m).d_z;
  };
  p.F_lam = [def, law](double s, const Eigen::VectorXd& z, double m) {
    return phi_jacobians(def, law, s, z, m).d_mu;
  };
  p.F_y_and_lam = [def, law](double s, const Eigen::VectorXd& z, double m, Eigen::MatrixXd& fy,
                             Eigen::VectorXd& flam) {
    PhiJacobians Jp = phi_jacobians(def, law, s, z, m);
    fy = std::move(Jp.d_z);
    flam = std::move(Jp.d_mu);
  };
  p.G = [def, law](const Eigen::VectorXd& za, const Eigen::VectorXd& zb, double m) {
    return upsilon(def, law, za, zb, m);
  };
  p.G_ya = [def, law](const Eigen::VectorXd& za, const Eigen::VectorXd& zb, double m) {
    return upsilon_jacobians(def, law, za, zb, m).d_z0;
  };
  p.G_yb = [def, law](const Eigen::VectorXd& za, const Eigen::VectorXd& zb, double m) {
    return upsilon_jacobians(def, law, za, zb, m).d_z1;
  };
  p.G_lam = [def, law](const Eigen::VectorXd& za, const Eigen::VectorXd& zb, double m) {
    return upsilon_jacobians(def, law, za, zb, m).d_mu;
  };
  return p;
}

}  // namespace rollpac
