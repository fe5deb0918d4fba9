#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "doctest.h"
#include "rollpac/ocp.hpp"
#include "rollpac/tpbvp.hpp"

using namespace rollpac;

namespace {

// A synthetic regular OCP with time, state-control coupling, and mu
// dependence in dynamics, cost, endpoint cost, and boundary functions.
OcpDefinition synthetic_ocp(bool free_times) {
  OcpDefinition def;
  def.n = 2;
  def.m = 1;
  def.k1 = 2;
  def.k2 = 1;
  def.a_fixed = !free_times;
  def.b_fixed = !free_times;
  def.a = 0.0;
  def.b = 1.0;
  def.L = [](const Dual2& t, std::span<const Dual2> x, std::span<const Dual2> u, const Dual2& mu) {
    return 0.5 * (1.0 + mu) * u[0] * u[0] + 0.5 * x[0] * x[0] * x[1] + 0.3 * x[1] * u[0] +
           0.1 * sin(t) * x[1];
  };
  def.f = [](const Dual2& t, std::span<const Dual2> x, std::span<const Dual2> u, const Dual2& mu) {
    DualVec out(2);
    out[0] = x[1] + mu * sin(x[0]) + 0.1 * t;
    out[1] = u[0] + 0.2 * x[0] * x[1] + 0.05 * mu * t;
    return out;
  };
  def.sigma = [](const Dual2& a, std::span<const Dual2> xa, const Dual2& mu) {
    DualVec out(2);
    out[0] = xa[0] - 1.0 + 0.1 * sin(a) + 0.05 * mu;
    out[1] = xa[1] - 0.5 * a;
    return out;
  };
  def.psi = [](const Dual2& b, std::span<const Dual2> xb, const Dual2& mu) {
    DualVec out(1);
    out[0] = xb[1] - 2.0 + 0.2 * cos(b) + 0.1 * mu;
    return out;
  };
  def.p = [](const Dual2& a, std::span<const Dual2> xa, const Dual2& b, std::span<const Dual2> xb,
             const Dual2& mu) {
    return 0.3 * xb[0] * xb[0] + 0.1 * xa[0] * xb[1] + 0.02 * a * b * mu;
  };
  // H_u = (1+mu) u + 0.3 x2 + lam2 = 0
  def.analytic_pi = [](double, const Eigen::VectorXd& x, const Eigen::VectorXd& lam, double mu) {
    Eigen::VectorXd u(1);
    u(0) = -(0.3 * x(1) + lam(1)) / (1.0 + mu);
    return u;
  };
  return def;
}

Eigen::VectorXd random_z(const ExpandedLayout& lay, std::mt19937& rng) {
  std::uniform_real_distribution<double> dist(-0.7, 0.7);
  Eigen::VectorXd z(lay.dim());
  for (int i = 0; i < z.size(); ++i) z(i) = dist(rng);
  if (lay.a_free) z(lay.a_off()) = 0.1 + 0.2 * std::fabs(dist(rng));
  if (lay.b_free) z(lay.b_off()) = 1.2 + 0.3 * std::fabs(dist(rng));
  return z;
}

void check_phi_jacobians(const OcpDefinition& def, const ControlLaw& law, std::mt19937& rng,
                         double tol) {
  const ExpandedLayout lay = ExpandedLayout::of(def);
  std::uniform_real_distribution<double> sdist(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const double s = sdist(rng);
    const double mu = 0.3 + 0.4 * sdist(rng);
    const Eigen::VectorXd z = random_z(lay, rng);
    const PhiJacobians J = phi_jacobians(def, law, s, z, mu);
    const double scale = 1.0 + J.d_z.cwiseAbs().maxCoeff();
    for (int c = 0; c < lay.dim(); ++c) {
      const double h = 1e-6 * (1.0 + std::fabs(z(c)));
      Eigen::VectorXd zp = z, zm = z;
      zp(c) += h;
      zm(c) -= h;
      const Eigen::VectorXd fd = (phi(def, law, s, zp, mu) - phi(def, law, s, zm, mu)) / (2 * h);
      CHECK((J.d_z.col(c) - fd).lpNorm<Eigen::Infinity>() <= tol * scale);
    }
    const double hmu = 1e-6;
    const Eigen::VectorXd fdmu =
        (phi(def, law, s, z, mu + hmu) - phi(def, law, s, z, mu - hmu)) / (2 * hmu);
    CHECK((J.d_mu - fdmu).lpNorm<Eigen::Infinity>() <= tol * (1.0 + fdmu.lpNorm<Eigen::Infinity>()));
  }
}

void check_upsilon_jacobians(const OcpDefinition& def, const ControlLaw& law, std::mt19937& rng,
                             double tol) {
  const ExpandedLayout lay = ExpandedLayout::of(def);
  std::uniform_real_distribution<double> sdist(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const double mu = 0.3 + 0.4 * sdist(rng);
    Eigen::VectorXd z0 = random_z(lay, rng);
    Eigen::VectorXd z1 = random_z(lay, rng);
    const UpsilonJacobians J = upsilon_jacobians(def, law, z0, z1, mu);
    const double scale =
        1.0 + std::max(J.d_z0.cwiseAbs().maxCoeff(), J.d_z1.cwiseAbs().maxCoeff());
    for (int c = 0; c < lay.dim(); ++c) {
      const double h0 = 1e-6 * (1.0 + std::fabs(z0(c)));
      Eigen::VectorXd zp = z0, zm = z0;
      zp(c) += h0;
      zm(c) -= h0;
      const Eigen::VectorXd fd0 =
          (upsilon(def, law, zp, z1, mu) - upsilon(def, law, zm, z1, mu)) / (2 * h0);
      CHECK((J.d_z0.col(c) - fd0).lpNorm<Eigen::Infinity>() <= tol * scale);

      const double h1 = 1e-6 * (1.0 + std::fabs(z1(c)));
      zp = z1;
      zm = z1;
      zp(c) += h1;
      zm(c) -= h1;
      const Eigen::VectorXd fd1 =
          (upsilon(def, law, z0, zp, mu) - upsilon(def, law, z0, zm, mu)) / (2 * h1);
      CHECK((J.d_z1.col(c) - fd1).lpNorm<Eigen::Infinity>() <= tol * scale);
    }
    const double hmu = 1e-6;
    const Eigen::VectorXd fdmu =
        (upsilon(def, law, z0, z1, mu + hmu) - upsilon(def, law, z0, z1, mu - hmu)) / (2 * hmu);
    CHECK((J.d_mu - fdmu).lpNorm<Eigen::Infinity>() <=
          tol * (1.0 + fdmu.lpNorm<Eigen::Infinity>()));
  }
}

}  // namespace

TEST_CASE("hamiltonian reduces to L and lam^T f") {
  const OcpDefinition def = synthetic_ocp(false);
  const Eigen::Vector2d x(0.4, -0.2);
  const Eigen::VectorXd u = Eigen::VectorXd::Constant(1, 0.7);
  const double t = 0.3, mu = 0.5;
  // lam = 0 -> H = L
  const double H0 = hamiltonian(def, t, x, Eigen::Vector2d::Zero(), u, mu);
  const DualVec xd = constants(x), ud = constants(u);
  const double L = def.L(Dual2(t), xd, ud, Dual2(mu)).value();
  CHECK(H0 == doctest::Approx(L));
  // general lam -> H - L = lam^T f
  const Eigen::Vector2d lam(1.3, -0.4);
  const double H = hamiltonian(def, t, x, lam, u, mu);
  Eigen::Vector2d fval;
  const DualVec fv = def.f(Dual2(t), xd, ud, Dual2(mu));
  fval << fv[0].value(), fv[1].value();
  CHECK(H - L == doctest::Approx(lam.dot(fval)));
}

TEST_CASE("newton control recovery matches the analytic law") {
  const OcpDefinition def = synthetic_ocp(false);
  ControlLaw newton;
  newton.mode = ControlLaw::Mode::NewtonRecovered;
  ControlLaw analytic;
  analytic.mode = ControlLaw::Mode::Analytic;
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int i = 0; i < 20; ++i) {
    const Eigen::Vector2d x(dist(rng), dist(rng)), lam(dist(rng), dist(rng));
    const double t = 0.5 * (dist(rng) + 1.0), mu = 0.4;
    const Eigen::VectorXd un = resolve_control(def, t, x, lam, mu, newton);
    const Eigen::VectorXd ua = resolve_control(def, t, x, lam, mu, analytic);
    CHECK((un - ua).lpNorm<Eigen::Infinity>() <= 1e-9);
    // stationarity at the recovered control
    ActiveSeeder seeder(1, false);
    const DualVec ud = seeder.vector(un);
    const DualVec xd = constants(Eigen::VectorXd(x));
    const Dual2 H = def.L(Dual2(t), xd, ud, Dual2(mu)) +
                    lam(0) * def.f(Dual2(t), xd, ud, Dual2(mu))[0] +
                    lam(1) * def.f(Dual2(t), xd, ud, Dual2(mu))[1];
    CHECK(std::fabs(H.gradient(1)(0)) <= 1e-10);
  }
}

TEST_CASE("control jacobians: quadratic H gives the exact closed form") {
  const OcpDefinition def = synthetic_ocp(false);
  ControlLaw law;
  law.mode = ControlLaw::Mode::NewtonRecovered;
  const Eigen::Vector2d x(0.3, -0.6), lam(0.2, 0.9);
  const double t = 0.4, mu = 0.25;
  const ControlJacobians cj = control_jacobians(def, t, x, lam, mu, law);
  // H_uu = 1+mu, H_ux = [0, 0.3], f_u = [0;1]
  CHECK(cj.pi_lam(0, 0) == doctest::Approx(0.0));
  CHECK(cj.pi_lam(0, 1) == doctest::Approx(-1.0 / (1.0 + mu)));
  CHECK(cj.pi_x(0, 0) == doctest::Approx(0.0));
  CHECK(cj.pi_x(0, 1) == doctest::Approx(-0.3 / (1.0 + mu)));
  CHECK(cj.pi_t(0) == doctest::Approx(0.0));

  // pi_x vs finite differences of the analytic law
  const double h = 1e-6;
  for (int c = 0; c < 2; ++c) {
    Eigen::Vector2d xp = x, xm = x;
    xp(c) += h;
    xm(c) -= h;
    const double fd =
        (def.analytic_pi(t, xp, lam, mu)(0) - def.analytic_pi(t, xm, lam, mu)(0)) / (2 * h);
    CHECK(cj.pi_x(0, c) == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("fhat derivative identities") {
  const OcpDefinition def = synthetic_ocp(false);
  ControlLaw law;
  law.mode = ControlLaw::Mode::Analytic;
  const Eigen::Vector2d x(0.5, 0.1), lam(-0.3, 0.8);
  const double t = 0.6, mu = 0.35;
  const FhatDerivs fh = fhat_and_derivs(def, t, x, lam, mu, law);
  // finite differences of fhat(t,x,lam,mu) = f(t,x,pi(...),mu)
  auto fhat_val = [&](double tt, const Eigen::Vector2d& xx, const Eigen::Vector2d& ll,
                      double mm) {
    const Eigen::VectorXd u = def.analytic_pi(tt, xx, ll, mm);
    const DualVec xd = constants(Eigen::VectorXd(xx)), ud = constants(u);
    const DualVec f = def.f(Dual2(tt), xd, ud, Dual2(mm));
    return Eigen::Vector2d(f[0].value(), f[1].value());
  };
  const double h = 1e-6;
  for (int c = 0; c < 2; ++c) {
    Eigen::Vector2d xp = x, xm = x;
    xp(c) += h;
    xm(c) -= h;
    const Eigen::Vector2d fd = (fhat_val(t, xp, lam, mu) - fhat_val(t, xm, lam, mu)) / (2 * h);
    CHECK((fh.fhat_x.col(c) - fd).lpNorm<Eigen::Infinity>() <= 1e-6 * (1 + fd.norm()));
    Eigen::Vector2d lp = lam, lm = lam;
    lp(c) += h;
    lm(c) -= h;
    const Eigen::Vector2d fdl = (fhat_val(t, x, lp, mu) - fhat_val(t, x, lm, mu)) / (2 * h);
    CHECK((fh.fhat_lam.col(c) - fdl).lpNorm<Eigen::Infinity>() <= 1e-6 * (1 + fdl.norm()));
  }
}

TEST_CASE("hhat second derivatives vs finite differences of Hhat_x") {
  const OcpDefinition def = synthetic_ocp(false);
  ControlLaw law;
  law.mode = ControlLaw::Mode::Analytic;
  const Eigen::Vector2d x(0.2, -0.4), lam(0.7, 0.15);
  const double t = 0.45, mu = 0.3;
  const HhatSecondDerivs hs = hhat_second_derivs(def, t, x, lam, mu, law);
  CHECK((hs.Hxx - hs.Hxx.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
  auto Hhat_x = [&](double tt, const Eigen::Vector2d& xx, double mm) {
    return hhat_second_derivs(def, tt, xx, lam, mm, law).Hx;
  };
  const double h = 1e-5;
  for (int c = 0; c < 2; ++c) {
    Eigen::Vector2d xp = x, xm = x;
    xp(c) += h;
    xm(c) -= h;
    const Eigen::Vector2d fd = (Hhat_x(t, xp, mu) - Hhat_x(t, xm, mu)) / (2 * h);
    CHECK((hs.Hxx.col(c) - fd).lpNorm<Eigen::Infinity>() <= 1e-5 * (1 + fd.norm()));
  }
  const Eigen::Vector2d fdt = (Hhat_x(t + h, x, mu) - Hhat_x(t - h, x, mu)) / (2 * h);
  CHECK((hs.Hxt - fdt).lpNorm<Eigen::Infinity>() <= 1e-5 * (1 + fdt.norm()));
  const Eigen::Vector2d fdmu = (Hhat_x(t, x, mu + h) - Hhat_x(t, x, mu - h)) / (2 * h);
  CHECK((hs.Hxmu - fdmu).lpNorm<Eigen::Infinity>() <= 1e-5 * (1 + fdmu.norm()));
}

TEST_CASE("Hhat_lam equals fhat numerically") {
  const OcpDefinition def = synthetic_ocp(false);
  ControlLaw law;
  law.mode = ControlLaw::Mode::Analytic;
  const Eigen::Vector2d x(0.15, 0.55), lam(0.4, -0.9);
  const double t = 0.7, mu = 0.42;
  const FhatDerivs fh = fhat_and_derivs(def, t, x, lam, mu, law);
  auto Hhat = [&](const Eigen::Vector2d& ll) {
    const Eigen::VectorXd u = def.analytic_pi(t, x, ll, mu);
    return hamiltonian(def, t, x, ll, u, mu);
  };
  const double h = 1e-6;
  for (int c = 0; c < 2; ++c) {
    Eigen::Vector2d lp = lam, lm = lam;
    lp(c) += h;
    lm(c) -= h;
    const double fd = (Hhat(lp) - Hhat(lm)) / (2 * h);
    CHECK(fh.fhat(c) == doctest::Approx(fd).epsilon(1e-7));
  }
}

TEST_CASE("phi jacobians match finite differences (fixed and free time)") {
  std::mt19937 rng(100);
  ControlLaw law;
  law.mode = ControlLaw::Mode::Analytic;
  check_phi_jacobians(synthetic_ocp(false), law, rng, 1e-6);
  check_phi_jacobians(synthetic_ocp(true), law, rng, 1e-6);
  ControlLaw newton;
  newton.mode = ControlLaw::Mode::NewtonRecovered;
  check_phi_jacobians(synthetic_ocp(false), newton, rng, 1e-6);
}

TEST_CASE("upsilon jacobians match finite differences (fixed and free time)") {
  std::mt19937 rng(200);
  ControlLaw law;
  law.mode = ControlLaw::Mode::Analytic;
  check_upsilon_jacobians(synthetic_ocp(false), law, rng, 1e-6);
  check_upsilon_jacobians(synthetic_ocp(true), law, rng, 1e-6);
}

TEST_CASE("constant-block rows of phi vanish and dimensions line up") {
  const OcpDefinition def = synthetic_ocp(false);
  const ExpandedLayout lay = ExpandedLayout::of(def);
  CHECK(lay.dim() == 2 * 2 + 2 + 1);
  ControlLaw law;
  law.mode = ControlLaw::Mode::Analytic;
  std::mt19937 rng(7);
  const Eigen::VectorXd z = random_z(lay, rng);
  const Eigen::VectorXd v = phi(def, law, 0.3, z, 0.4);
  CHECK(v.segment(4, 3).lpNorm<Eigen::Infinity>() == 0.0);
  const PhiJacobians J = phi_jacobians(def, law, 0.3, z, 0.4);
  CHECK(J.d_z.bottomRows(3).lpNorm<Eigen::Infinity>() == 0.0);

  const ExpandedLayout free_lay = ExpandedLayout::of(synthetic_ocp(true));
  CHECK(free_lay.dim() == 2 * 2 + 2 + 1 + 2);
}

TEST_CASE("minimum-effort transfer solves end to end") {
  // n=1: minimize int u^2/2 with x' = u, x(0)=0, x(1)=1 -> x(s)=s, lam=-1
  OcpDefinition def;
  def.n = 1;
  def.m = 1;
  def.k1 = 1;
  def.k2 = 1;
  def.a = 0.0;
  def.b = 1.0;
  def.L = [](const Dual2&, std::span<const Dual2>, std::span<const Dual2> u, const Dual2&) {
    return 0.5 * u[0] * u[0];
  };
  def.f = [](const Dual2&, std::span<const Dual2>, std::span<const Dual2> u, const Dual2&) {
    return DualVec{u[0]};
  };
  def.sigma = [](const Dual2&, std::span<const Dual2> xa, const Dual2&) {
    return DualVec{xa[0]};
  };
  def.psi = [](const Dual2&, std::span<const Dual2> xb, const Dual2&) {
    return DualVec{xb[0] - 1.0};
  };
  ControlLaw law;
  law.mode = ControlLaw::Mode::NewtonRecovered;
  const TpbvpProblem prob = build_ocp_tpbvp(def, law, 0.0);
  CHECK(prob.dim == 4);
  SolverSettings st;
  st.rel_tol = 1e-10;
  const MeshFunction guess = MeshFunction::zero(Eigen::VectorXd::LinSpaced(11, 0, 1), 4);
  const BvpResult r = solve_tpbvp(prob, guess, st);
  REQUIRE(r.ok());
  for (double s = 0; s <= 1.0; s += 0.1) {
    CHECK(std::fabs(r.solution.eval(s)(0) - s) <= 1e-6);
    CHECK(std::fabs(r.solution.eval(s)(1) + 1.0) <= 1e-6);
  }
}
