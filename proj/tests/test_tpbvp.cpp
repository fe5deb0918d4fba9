#include <Eigen/Dense>
#include <chrono>
#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "rollpac/tpbvp.hpp"

using namespace rollpac;

namespace {

TpbvpProblem sinh_problem() {
  // y'' = y as a first-order system, y1(0)=0, y1(1)=1
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

MeshFunction linear_guess(int n, int dim, double a0, double a1) {
  const Eigen::VectorXd m = Eigen::VectorXd::LinSpaced(n, 0.0, 1.0);
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(n, dim);
  for (int i = 0; i < n; ++i) v(i, 0) = a0 + (a1 - a0) * m(i);
  return MeshFunction(m, v);
}

}  // namespace

TEST_CASE("y''=y against the analytic solution") {
  const auto t0 = std::chrono::steady_clock::now();
  SolverSettings st;
  st.rel_tol = 1e-8;
  const BvpResult r = solve_tpbvp(sinh_problem(), linear_guess(11, 2, 0.0, 1.0), st);
  REQUIRE(r.ok());
  double max_err = 0.0;
  const double s1 = std::sinh(1.0);
  for (double s = 0.0; s <= 1.0; s += 1.0 / 512) {
    max_err = std::max(max_err, std::fabs(r.solution.eval(s)(0) - std::sinh(s) / s1));
  }
  CHECK(max_err <= 1e-8);
  const double ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  CHECK(ms < 1000.0);
}

TEST_CASE("constant problem F=0") {
  TpbvpProblem p;
  p.dim = 1;
  p.F = [](double, const Eigen::VectorXd&, double) { return Eigen::VectorXd::Zero(1).eval(); };
  p.G = [](const Eigen::VectorXd& ya, const Eigen::VectorXd&, double) {
    return (ya.array() - 4.25).matrix().eval();
  };
  const BvpResult r = solve_tpbvp(p, linear_guess(5, 1, 0.0, 0.0), SolverSettings{});
  REQUIRE(r.ok());
  CHECK(r.solution.eval(0.37)(0) == doctest::Approx(4.25));
}

TEST_CASE("bratu lower branch vs shooting oracle") {
  SolverSettings st;
  st.rel_tol = 1e-8;
  TpbvpProblem p = bratu_problem();
  p.lam = 1.0;
  const BvpResult r = solve_tpbvp(p, linear_guess(11, 2, 0.0, 0.0), st);
  REQUIRE(r.ok());
  const double oracle_y05 = oracles::bratu_shoot(oracles::bratu_lower_slope(1.0), 1.0).second;
  CHECK(oracle_y05 == doctest::Approx(0.1405392144).epsilon(1e-6));
  CHECK(std::fabs(r.solution.eval(0.5)(0) - oracle_y05) <= 1e-6);
}

TEST_CASE("accepted solutions satisfy the interpolant residual bound") {
  SolverSettings st;
  st.rel_tol = 1e-8;
  TpbvpProblem p = bratu_problem();
  p.lam = 2.0;
  const BvpResult r = solve_tpbvp(p, linear_guess(11, 2, 0.0, 0.0), st);
  REQUIRE(r.ok());
  const double scale = 1.0 + r.solution.max_abs();
  const Eigen::VectorXd& m = r.solution.mesh();
  double worst = 0.0;
  for (int i = 0; i + 1 < m.size(); ++i) {
    const double s = 0.5 * (m(i) + m(i + 1));
    const Eigen::VectorXd resid =
        r.solution.deriv(s) - p.F(s, r.solution.eval(s), p.lam);
    worst = std::max(worst, resid.lpNorm<Eigen::Infinity>());
  }
  CHECK(worst <= 10.0 * st.rel_tol * scale);
}

TEST_CASE("mesh refinement decreases the error estimate") {
  SolverSettings loose;
  loose.rel_tol = 1e-3;
  loose.initial_mesh_size = 6;
  SolverSettings tight;
  tight.rel_tol = 1e-9;
  tight.initial_mesh_size = 6;
  TpbvpProblem p = bratu_problem();
  p.lam = 3.0;
  const BvpResult coarse = solve_tpbvp(p, linear_guess(6, 2, 0.0, 0.0), loose);
  REQUIRE(coarse.ok());
  const BvpResult fine = solve_tpbvp(p, coarse.solution, tight);
  REQUIRE(fine.ok());
  CHECK(fine.diagnostics.max_error_estimate <= coarse.diagnostics.max_error_estimate);
  CHECK(fine.diagnostics.final_mesh_size >= coarse.diagnostics.final_mesh_size);
}

TEST_CASE("exact and finite-difference jacobians agree") {
  SolverSettings st;
  st.rel_tol = 1e-8;
  TpbvpProblem p = bratu_problem();
  p.lam = 1.5;
  const BvpResult exact = solve_tpbvp(p, linear_guess(11, 2, 0.0, 0.0), st);
  TpbvpProblem pfd = p;
  pfd.F_y = nullptr;
  pfd.G_ya = nullptr;
  pfd.G_yb = nullptr;
  const BvpResult fd = solve_tpbvp(pfd, linear_guess(11, 2, 0.0, 0.0), st);
  REQUIRE(exact.ok());
  REQUIRE(fd.ok());
  double diff = 0.0;
  for (double s = 0; s <= 1.0; s += 0.05)
    diff = std::max(diff, (exact.solution.eval(s) - fd.solution.eval(s)).lpNorm<Eigen::Infinity>());
  CHECK(diff <= st.rel_tol * 100);
}

TEST_CASE("linear solver: exponential growth") {
  TpbvpProblem p;
  p.dim = 1;
  p.F = [](double, const Eigen::VectorXd& y, double) { return (y * 1.0).eval(); };
  p.F_y = [](double, const Eigen::VectorXd&, double) {
    return Eigen::MatrixXd::Ones(1, 1).eval();
  };
  p.G = [](const Eigen::VectorXd& ya, const Eigen::VectorXd&, double) {
    return (ya.array() - 1.0).matrix().eval();
  };
  p.G_ya = [](const Eigen::VectorXd&, const Eigen::VectorXd&, double) {
    return Eigen::MatrixXd::Ones(1, 1).eval();
  };
  p.G_yb = [](const Eigen::VectorXd&, const Eigen::VectorXd&, double) {
    return Eigen::MatrixXd::Zero(1, 1).eval();
  };
  SolverSettings st;
  st.rel_tol = 1e-9;
  const BvpResult r = solve_linear_tpbvp(p, linear_guess(11, 1, 1.0, 2.0), st);
  REQUIRE(r.ok());
  CHECK(std::fabs(r.solution.eval(1.0)(0) - std::exp(1.0)) <= 1e-8);
}

TEST_CASE("linear solver: nonseparated condition y(0)+y(1)=2 with y'=0") {
  TpbvpProblem p;
  p.dim = 1;
  p.F = [](double, const Eigen::VectorXd&, double) { return Eigen::VectorXd::Zero(1).eval(); };
  p.G = [](const Eigen::VectorXd& ya, const Eigen::VectorXd& yb, double) {
    return (ya + yb).unaryExpr([](double v) { return v - 2.0; }).eval();
  };
  const BvpResult r = solve_linear_tpbvp(p, linear_guess(5, 1, 0.0, 0.0), SolverSettings{});
  REQUIRE(r.ok());
  CHECK(r.solution.eval(0.7)(0) == doctest::Approx(1.0));
}

TEST_CASE("sweep halts at the bratu fold") {
  const double fold = oracles::bratu_fold();
  CHECK(fold == doctest::Approx(3.5138307191).epsilon(1e-6));

  SolverSettings st;
  st.rel_tol = 1e-6;
  SweepSettings sw;
  sw.param_start = 0.5;
  sw.param_max = 4.0;
  sw.initial_step = 0.25;
  sw.min_step = 1e-8;
  TpbvpProblem p = bratu_problem();
  p.lam = 0.5;
  SolverSettings st0 = st;
  const BvpResult seed = solve_tpbvp(p, linear_guess(11, 2, 0.0, 0.0), st0);
  REQUIRE(seed.ok());
  const SweepResult r = solve_sweep(bratu_problem(), seed.solution, sw, st);
  REQUIRE(r.ok());
  CHECK(r.halt == SweepHalt::TurningPoint);
  const double last_lam = r.solutions.back().first;
  CHECK(std::fabs(last_lam - fold) <= 1e-2);
  // lambda sequence strictly monotone
  for (size_t i = 1; i < r.solutions.size(); ++i)
    CHECK(r.solutions[i].first > r.solutions[i - 1].first);
}

TEST_CASE("sweep of a family independent of the parameter completes") {
  TpbvpProblem p;
  p.dim = 1;
  p.F = [](double, const Eigen::VectorXd&, double) { return Eigen::VectorXd::Zero(1).eval(); };
  p.G = [](const Eigen::VectorXd& ya, const Eigen::VectorXd&, double) {
    return (ya.array() - 1.0).matrix().eval();
  };
  SweepSettings sw;
  sw.param_start = 0.0;
  sw.param_max = 1.0;
  sw.initial_step = 0.5;
  const SweepResult r = solve_sweep(p, linear_guess(5, 1, 1.0, 1.0), sw, SolverSettings{});
  REQUIRE(r.ok());
  CHECK(r.halt == SweepHalt::Completed);
  CHECK(r.solutions.back().first == doctest::Approx(1.0));
}

TEST_CASE("sweep of y'=lam*y reaches lam=1 with y(1)=e") {
  TpbvpProblem p;
  p.dim = 1;
  p.F = [](double, const Eigen::VectorXd& y, double lam) { return (lam * y).eval(); };
  p.F_y = [](double, const Eigen::VectorXd&, double lam) {
    return (lam * Eigen::MatrixXd::Ones(1, 1)).eval();
  };
  p.G = [](const Eigen::VectorXd& ya, const Eigen::VectorXd&, double) {
    return (ya.array() - 1.0).matrix().eval();
  };
  SweepSettings sw;
  sw.param_start = 0.0;
  sw.param_max = 1.0;
  sw.initial_step = 0.25;
  SolverSettings st;
  st.rel_tol = 1e-8;
  const SweepResult r = solve_sweep(p, linear_guess(11, 1, 1.0, 1.0), sw, st);
  REQUIRE(r.ok());
  CHECK(r.halt == SweepHalt::Completed);
  CHECK(std::fabs(r.solutions.back().second.eval(1.0)(0) - std::exp(1.0)) <= 1e-6);
}
