#include "rollpac/validate.hpp"

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <random>

#include "rollpac/continuation.hpp"
#include "rollpac/models.hpp"
#include "rollpac/ocp.hpp"
#include "rollpac/scenarios.hpp"
#include "rollpac/tpbvp.hpp"

namespace rollpac {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

TpbvpProblem bratu_problem() {
  TpbvpProblem p;
  p.dim = 2;
  p.F = [](double, const Eigen::VectorXd& y, double lam) {
    return Eigen::Vector2d(y(1), -lam * std::exp(y(0))).eval();
  };
  p.F_y = [](double, const Eigen::VectorXd& y, double lam) {
    Eigen::Matrix2d J;
    J << 0, 1, -lam * std::exp(y(0)), 0;
    return Eigen::MatrixXd(J);
  };
  p.F_lam = [](double, const Eigen::VectorXd& y, double) {
    return Eigen::Vector2d(0.0, -std::exp(y(0))).eval();
  };
  p.G = [](const Eigen::VectorXd& ya, const Eigen::VectorXd& yb, double) {
    return Eigen::Vector2d(ya(0), yb(0)).eval();
  };
  p.G_ya = [](const Eigen::VectorXd&, const Eigen::VectorXd&, double) {
    Eigen::Matrix2d J = Eigen::Matrix2d::Zero();
    J(0, 0) = 1;
    return Eigen::MatrixXd(J);
  };
  p.G_yb = [](const Eigen::VectorXd&, const Eigen::VectorXd&, double) {
    Eigen::Matrix2d J = Eigen::Matrix2d::Zero();
    J(1, 0) = 1;
    return Eigen::MatrixXd(J);
  };
  return p;
}

MeshFunction flat_guess(int points, int dim) {
  return MeshFunction::zero(Eigen::VectorXd::LinSpaced(points, 0.0, 1.0), dim);
}

struct ScenarioJacobianCheck {
  double worst_first = 0.0;   // blocks built from first derivatives
  double worst_second = 0.0;  // blocks containing second derivatives of H or G
};

// Central finite differences of phi and upsilon against the assembled
// Jacobians at random expanded states.
ScenarioJacobianCheck check_scenario_jacobians(const OcpDefinition& def, const ControlLaw& law,
                                               double mu_lo, double mu_hi, unsigned rng_seed,
                                               double inject) {
  const ExpandedLayout lay = ExpandedLayout::of(def);
  std::mt19937 rng(rng_seed);
  std::uniform_real_distribution<double> dist(-0.4, 0.4);
  std::uniform_real_distribution<double> sdist(0.0, 1.0);
  ScenarioJacobianCheck out;
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd z(lay.dim()), z1(lay.dim());
    for (int i = 0; i < lay.dim(); ++i) {
      z(i) = dist(rng);
      z1(i) = dist(rng);
    }
    if (def.n == 15) {  // keep the quaternion block away from zero norm
      z(6) += 1.0;
      z1(6) += 1.0;
    }
    const double s = sdist(rng);
    const double mu = mu_lo + (mu_hi - mu_lo) * sdist(rng);

    PhiJacobians J = phi_jacobians(def, law, s, z, mu);
    J.d_z(0, 0) += inject;
    double scale = 1.0 + J.d_z.cwiseAbs().maxCoeff();
    for (int c = 0; c < lay.dim(); ++c) {
      const double h = 1e-6 * (1.0 + std::fabs(z(c)));
      Eigen::VectorXd zp = z, zm = z;
      zp(c) += h;
      zm(c) -= h;
      const Eigen::VectorXd fd = (phi(def, law, s, zp, mu) - phi(def, law, s, zm, mu)) / (2 * h);
      const Eigen::VectorXd err = (J.d_z.col(c) - fd).cwiseAbs() / scale;
      out.worst_first = std::max(out.worst_first, err.segment(0, def.n).maxCoeff());
      out.worst_second = std::max(out.worst_second, err.segment(def.n, def.n).maxCoeff());
    }
    const double hmu = 1e-6;
    const Eigen::VectorXd fdmu =
        (phi(def, law, s, z, mu + hmu) - phi(def, law, s, z, mu - hmu)) / (2 * hmu);
    out.worst_second =
        std::max(out.worst_second, (J.d_mu - fdmu).cwiseAbs().maxCoeff() /
                                       (1.0 + fdmu.lpNorm<Eigen::Infinity>()));

    const UpsilonJacobians U = upsilon_jacobians(def, law, z, z1, mu);
    scale = 1.0 + std::max(U.d_z0.cwiseAbs().maxCoeff(), U.d_z1.cwiseAbs().maxCoeff());
    for (int c = 0; c < lay.dim(); ++c) {
      const double h0 = 1e-6 * (1.0 + std::fabs(z(c)));
      Eigen::VectorXd zp = z, zm = z;
      zp(c) += h0;
      zm(c) -= h0;
      const Eigen::VectorXd fd0 =
          (upsilon(def, law, zp, z1, mu) - upsilon(def, law, zm, z1, mu)) / (2 * h0);
      out.worst_second =
          std::max(out.worst_second, (U.d_z0.col(c) - fd0).cwiseAbs().maxCoeff() / scale);
      const double h1 = 1e-6 * (1.0 + std::fabs(z1(c)));
      Eigen::VectorXd z1p = z1, z1m = z1;
      z1p(c) += h1;
      z1m(c) -= h1;
      const Eigen::VectorXd fd1 =
          (upsilon(def, law, z, z1p, mu) - upsilon(def, law, z, z1m, mu)) / (2 * h1);
      out.worst_second =
          std::max(out.worst_second, (U.d_z1.col(c) - fd1).cwiseAbs().maxCoeff() / scale);
    }
    const Eigen::VectorXd fdu =
        (upsilon(def, law, z, z1, mu + hmu) - upsilon(def, law, z, z1, mu - hmu)) / (2 * hmu);
    out.worst_second =
        std::max(out.worst_second, (U.d_mu - fdu).cwiseAbs().maxCoeff() /
                                       (1.0 + fdu.lpNorm<Eigen::Infinity>()));
  }
  return out;
}

}  // namespace

double bratu_shoot_y1(double p, double lam, int steps) {
  const double h = 1.0 / steps;
  double y = 0.0, v = p;
  for (int i = 0; i < steps; ++i) {
    auto f = [lam](double yy, double vv) { return std::make_pair(vv, -lam * std::exp(yy)); };
    const auto k1 = f(y, v);
    const auto k2 = f(y + h / 2 * k1.first, v + h / 2 * k1.second);
    const auto k3 = f(y + h / 2 * k2.first, v + h / 2 * k2.second);
    const auto k4 = f(y + h * k3.first, v + h * k3.second);
    y += h / 6 * (k1.first + 2 * k2.first + 2 * k3.first + k4.first);
    v += h / 6 * (k1.second + 2 * k2.second + 2 * k3.second + k4.second);
  }
  return y;
}

double bratu_fold_oracle() {
  auto max_shot = [](double lam) {
    double a = 0.0, b = 20.0;
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double fc = bratu_shoot_y1(c, lam), fd = bratu_shoot_y1(d, lam);
    for (int i = 0; i < 60; ++i) {
      if (fc > fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - gr * (b - a);
        fc = bratu_shoot_y1(c, lam);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + gr * (b - a);
        fd = bratu_shoot_y1(d, lam);
      }
    }
    return bratu_shoot_y1(0.5 * (a + b), lam);
  };
  double lo = 3.0, hi = 4.0;
  for (int i = 0; i < 35; ++i) {
    const double mid = 0.5 * (lo + hi);
    (max_shot(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

ValidateReport run_validation(const ValidateOptions& opts) {
  ValidateReport report;
  const auto t_all = Clock::now();
  auto add = [&](const std::string& name, double measured, double bound, Clock::time_point t0,
                 const std::string& detail = "") {
    report.checks.push_back({name, measured <= bound, measured, bound, seconds_since(t0), detail});
  };

  {  // analytic second-order problem
    const auto t0 = Clock::now();
    TpbvpProblem p;
    p.dim = 2;
    p.F = [](double, const Eigen::VectorXd& y, double) {
      return Eigen::Vector2d(y(1), y(0)).eval();
    };
    p.F_y = [](double, const Eigen::VectorXd&, double) {
      Eigen::Matrix2d J;
      J << 0, 1, 1, 0;
      return Eigen::MatrixXd(J);
    };
    p.G = [](const Eigen::VectorXd& ya, const Eigen::VectorXd& yb, double) {
      return Eigen::Vector2d(ya(0), yb(0) - 1.0).eval();
    };
    SolverSettings st;
    st.rel_tol = 1e-8;
    const BvpResult r = solve_tpbvp(p, flat_guess(11, 2), st);
    double err = 1e300;
    if (r.ok()) {
      err = 0.0;
      const double s1 = std::sinh(1.0);
      for (double s = 0.0; s <= 1.0; s += 1.0 / 256)
        err = std::max(err, std::fabs(r.solution.eval(s)(0) - std::sinh(s) / s1));
    }
    add("bvp hyperbolic vs analytic", err, 1e-8, t0);
  }

  {  // linear exponential growth
    const auto t0 = Clock::now();
    TpbvpProblem p;
    p.dim = 1;
    p.F = [](double, const Eigen::VectorXd& y, double) { return (1.0 * y).eval(); };
    p.F_y = [](double, const Eigen::VectorXd&, double) {
      return Eigen::MatrixXd::Ones(1, 1).eval();
    };
    p.G = [](const Eigen::VectorXd& ya, const Eigen::VectorXd&, double) {
      return (ya.array() - 1.0).matrix().eval();
    };
    SolverSettings st;
    st.rel_tol = 1e-9;
    const BvpResult r = solve_linear_tpbvp(p, flat_guess(11, 1), st);
    const double err = r.ok() ? std::fabs(r.solution.eval(1.0)(0) - std::exp(1.0)) : 1e300;
    add("linear bvp exponential", err, 1e-8, t0);
  }

  {  // fold handling by the monotonic sweep
    const auto t0 = Clock::now();
    const double fold = bratu_fold_oracle();
    TpbvpProblem p = bratu_problem();
    p.lam = 0.5;
    SolverSettings st;
    st.rel_tol = 1e-6;
    const BvpResult seed = solve_tpbvp(p, flat_guess(11, 2), st);
    double err = 1e300;
    std::string detail = "fold estimate " + std::to_string(fold);
    if (seed.ok()) {
      SweepSettings sw;
      sw.param_start = 0.5;
      sw.param_max = 4.0;
      sw.initial_step = 0.25;
      sw.min_step = 1e-8;
      const SweepResult r = solve_sweep(bratu_problem(), seed.solution, sw, st);
      if (r.ok() && r.halt == SweepHalt::TurningPoint)
        err = std::fabs(r.solutions.back().first - fold);
    }
    add("bratu sweep halts at the fold", err, 1e-2, t0, detail);
  }

  {  // continuation past the fold, both algorithms
    const auto t0 = Clock::now();
    TpbvpProblem p = bratu_problem();
    p.lam = 1.0;
    SolverSettings st;
    st.rel_tol = 1e-8;
    const BvpResult seed = solve_tpbvp(p, flat_guess(11, 2), st);
    double measured = 1e300;
    if (seed.ok()) {
      const CurvePoint s1{seed.solution, 1.0};
      PacSettings ps;
      ps.J = 8;
      ps.sigma_init = 0.5;
      ps.sigma_max = 1.2;
      ps.sigma_min = 1e-5;
      ps.solver.rel_tol = 1e-8;
      const ContinuationResult a = pac_bvp(bratu_problem(), s1, ps);
      SweepPacSettings s3;
      s3.J = 3;
      s3.sigma_max = {50.0, 4.0, 4.0};
      s3.d = 2;
      s3.solver.rel_tol = 1e-8;
      const ContinuationResult b = pac_s3_bvp(bratu_problem(), s1, s3);
      int post_a = 0, post_b = 0;
      for (size_t i = 1; i < a.solutions.size(); ++i)
        if (a.solutions[i].lam < a.solutions[i - 1].lam) ++post_a;
      for (size_t i = 1; i < b.solutions.size(); ++i)
        if (b.solutions[i].lam < b.solutions[i - 1].lam) ++post_b;
      if (a.ok() && b.ok()) measured = (post_a >= 2 && post_b >= 2) ? 0.0 : 1.0;
    }
    add("both tracers pass the fold", measured, 0.5, t0);
  }

  {  // scenario Jacobian consistency, disk then ball
    ControlLaw law;
    const auto t0 = Clock::now();
    const DiskScenario disk = DiskScenario::paper();
    const ScenarioJacobianCheck d =
        check_scenario_jacobians(disk.ocp(), law, 0.90, 0.95, 11, opts.inject_jacobian_error);
    add("disk jacobians vs finite differences (first order)", d.worst_first, 1e-6, t0);
    add("disk jacobians vs finite differences (second order)", d.worst_second, 1e-5, t0);
    const auto t1 = Clock::now();
    const BallScenario ball = BallScenario::paper(CutoffKind::Relu4);
    const ScenarioJacobianCheck b =
        check_scenario_jacobians(ball.ocp(), law, 0.90, 0.95, 13, opts.inject_jacobian_error);
    add("ball jacobians vs finite differences (first order)", b.worst_first, 1e-6, t1);
    add("ball jacobians vs finite differences (second order)", b.worst_second, 1e-5, t1);
  }

  {  // control-law duality on both scenarios
    const auto t0 = Clock::now();
    ControlLaw analytic;
    ControlLaw newton;
    newton.mode = ControlLaw::Mode::NewtonRecovered;
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> dist(-0.5, 0.5);
    double worst_diff = 0.0, worst_hu = 0.0;
    auto duality = [&](const OcpDefinition& def, double mu) {
      for (int trial = 0; trial < 20; ++trial) {
        Eigen::VectorXd x(def.n), lam(def.n);
        for (int i = 0; i < def.n; ++i) {
          x(i) = dist(rng);
          lam(i) = dist(rng);
        }
        if (def.n == 15) x(6) += 1.0;
        const double t = 0.5 + dist(rng);
        const Eigen::VectorXd ua = resolve_control(def, t, x, lam, mu, analytic);
        const Eigen::VectorXd un = resolve_control(def, t, x, lam, mu, newton);
        worst_diff = std::max(worst_diff, (ua - un).lpNorm<Eigen::Infinity>());
        ActiveSeeder seeder(def.m, false);
        const DualVec ud = seeder.vector(ua);
        const DualVec xd = constants(x);
        Dual2 H = def.L(Dual2(t), xd, ud, Dual2(mu));
        const DualVec fv = def.f(Dual2(t), xd, ud, Dual2(mu));
        for (int i = 0; i < def.n; ++i) H += lam(i) * fv[static_cast<size_t>(i)];
        worst_hu = std::max(worst_hu, H.gradient(def.m).lpNorm<Eigen::Infinity>());
      }
    };
    duality(DiskScenario::paper().ocp(), 0.93);
    duality(BallScenario::paper(CutoffKind::Sigmoid).ocp(), 0.93);
    add("newton-recovered control matches analytic", worst_diff, 1e-9, t0);
    add("control stationarity |H_u| at analytic pi", worst_hu, 1e-10, t0);
  }

  {  // model invariants
    const auto t0 = Clock::now();
    DiskParams disk = DiskScenario::paper().params;
    std::vector<double> th(4, -M_PI / 2), td(4, 0.0), tdd(4, 0.0);
    const double kappa = disk_kappa<double>(disk, th, td, 0.0, 0.0, tdd, 0.0);
    DiskState st;
    st.theta = Eigen::VectorXd::Constant(4, -M_PI / 2);
    st.dtheta = Eigen::VectorXd::Zero(4);
    double N = 0, fric = 0;
    disk_reactions(0.0, st, Eigen::VectorXd::Zero(4), disk, N, fric);
    add("disk equilibrium kappa = 0", std::fabs(kappa), 1e-14, t0);
    add("disk rest N = Mg", std::fabs(N - disk.total_mass() * disk.g), 1e-12, t0);

    const auto t1 = Clock::now();
    const BallScenario bs = BallScenario::paper(CutoffKind::Sigmoid);
    BallState ball_st;
    ball_st.theta = bs.theta_a;
    ball_st.dtheta = {0, 0, 0};
    ball_st.q = {1, 0, 0, 0};
    ball_st.omega = {0.4, 0.7, -0.3};
    ball_st.z = {0, 0};
    const double E0 = ball_energy(bs.params, ball_st);
    BallState cur = ball_st;
    double drift = 0.0, qdrift = 0.0;
    for (int step = 0; step < 5000; ++step) {
      cur = ball_rk4_step(bs.params, cur, Eigen::Vector3d::Zero(), 1e-3);
      if (step % 200 == 199) {
        drift = std::max(drift, std::fabs(ball_energy(bs.params, cur) - E0) / std::fabs(E0));
        qdrift = std::max(qdrift, std::fabs(std::sqrt(qnorm_sq(cur.q)) - 1.0));
      }
    }
    add("frozen-mass ball energy drift", drift, 1e-6, t1);
    add("versor norm drift", qdrift, 1e-9, t1);
  }

  {  // planar equivalence of the two models
    const auto t0 = Clock::now();
    BallParams B;
    B.m0 = 4.0;
    B.r = 1.0;
    B.inertia = Eigen::Vector3d(1, 1, 1);
    B.g = 9.81;
    for (double r : {0.9, 0.5, 0.2}) B.rails.push_back(RailSpec::in_plane(r));
    B.masses = {1.0, 1.5, 0.0};
    DiskParams D;
    D.m0 = B.m0;
    D.r = B.r;
    D.d2 = B.inertia(1);
    D.g = B.g;
    D.rails = {B.rails[0], B.rails[1]};
    D.masses = {1.0, 1.5};
    const double phi = 0.35, dphi = -0.8;
    DiskState ds;
    ds.theta = Eigen::Vector2d(-1.2, 0.4);
    ds.dtheta = Eigen::Vector2d(0.3, -0.6);
    ds.phi = phi;
    ds.dphi = dphi;
    double Nd = 0, fd = 0;
    disk_reactions(0.0, ds, Eigen::Vector2d(0.15, 0.25), D, Nd, fd);
    BallStateT<double> b2;
    b2.theta = {-1.2, 0.4, 0.0};
    b2.dtheta = {0.3, -0.6, 0.0};
    b2.q = {std::cos(phi / 2), 0.0, -std::sin(phi / 2), 0.0};
    b2.omega = {0.0, -dphi, 0.0};
    b2.z = {0.0, 0.0};
    double Nb = 0;
    Vec2T<double> fb;
    const std::array<double, 3> u3 = {0.15, 0.25, 0.0};
    ball_reactions<double>(B, b2, u3, Vec3T<double>{0, 0, 0}, Nb, fb);
    add("disk embedded in ball: N match", std::fabs(Nb - Nd) / (1.0 + std::fabs(Nd)), 1e-9, t0);
  }

  report.total_seconds = seconds_since(t_all);
  return report;
}

}  // namespace rollpac
