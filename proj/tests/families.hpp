#pragma once

// Shared TPBVP test families.

#include <Eigen/Dense>
#include <cmath>

#include "rollpac/tpbvp.hpp"

namespace families {

inline rollpac::TpbvpProblem bratu() {
  rollpac::TpbvpProblem p;
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
  p.G_lam = [](const Eigen::VectorXd&, const Eigen::VectorXd&, double) {
    return Eigen::Vector2d(0.0, 0.0).eval();
  };
  return p;
}

// F = 0, G = y(0) - c: the solution is independent of the parameter and the
// solution curve is a line in the lambda direction.
inline rollpac::TpbvpProblem constant_line(double c) {
  rollpac::TpbvpProblem p;
  p.dim = 1;
  p.F = [](double, const Eigen::VectorXd&, double) { return Eigen::VectorXd::Zero(1).eval(); };
  p.F_y = [](double, const Eigen::VectorXd&, double) {
    return Eigen::MatrixXd::Zero(1, 1).eval();
  };
  p.F_lam = [](double, const Eigen::VectorXd&, double) {
    return Eigen::VectorXd::Zero(1).eval();
  };
  p.G = [c](const Eigen::VectorXd& ya, const Eigen::VectorXd&, double) {
    return (ya.array() - c).matrix().eval();
  };
  p.G_ya = [](const Eigen::VectorXd&, const Eigen::VectorXd&, double) {
    return Eigen::MatrixXd::Ones(1, 1).eval();
  };
  p.G_yb = [](const Eigen::VectorXd&, const Eigen::VectorXd&, double) {
    return Eigen::MatrixXd::Zero(1, 1).eval();
  };
  p.G_lam = [](const Eigen::VectorXd&, const Eigen::VectorXd&, double) {
    return Eigen::VectorXd::Zero(1).eval();
  };
  return p;
}

// F = 0, G = y(0) - lam: solution y = lam, a 45-degree line.
inline rollpac::TpbvpProblem diagonal_line() {
  rollpac::TpbvpProblem p = constant_line(0.0);
  p.G = [](const Eigen::VectorXd& ya, const Eigen::VectorXd&, double lam) {
    return (ya.array() - lam).matrix().eval();
  };
  p.G_lam = [](const Eigen::VectorXd&, const Eigen::VectorXd&, double) {
    return (-Eigen::VectorXd::Ones(1)).eval();
  };
  return p;
}

inline rollpac::MeshFunction flat_guess(int points, int dim) {
  return rollpac::MeshFunction::zero(Eigen::VectorXd::LinSpaced(points, 0.0, 1.0), dim);
}

}  // namespace families
