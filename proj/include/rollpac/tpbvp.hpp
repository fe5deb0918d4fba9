#pragma once

#include <Eigen/Core>
#include <functional>
#include <string>
#include <vector>

#include "rollpac/mesh_function.hpp"

namespace rollpac {

/// y' = F(s, y, lambda) on [0,1] with G(y(0), y(1), lambda) = 0.
/// Jacobian callbacks are optional; missing ones fall back to central
/// finite differences inside the solver.
struct TpbvpProblem {
  int dim = 0;
  std::function<Eigen::VectorXd(double s, const Eigen::VectorXd& y, double lam)> F;
  std::function<Eigen::VectorXd(const Eigen::VectorXd& ya, const Eigen::VectorXd& yb, double lam)> G;
  std::function<Eigen::MatrixXd(double s, const Eigen::VectorXd& y, double lam)> F_y;
  std::function<Eigen::VectorXd(double s, const Eigen::VectorXd& y, double lam)> F_lam;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd& ya, const Eigen::VectorXd& yb, double lam)> G_ya;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd& ya, const Eigen::VectorXd& yb, double lam)> G_yb;
  std::function<Eigen::VectorXd(const Eigen::VectorXd& ya, const Eigen::VectorXd& yb, double lam)> G_lam;
  // optional fused Jacobian evaluation, cheaper than F_y plus F_lam when both
  // derive from one underlying pass
  std::function<void(double s, const Eigen::VectorXd& y, double lam, Eigen::MatrixXd& fy,
                     Eigen::VectorXd& flam)>
      F_y_and_lam;
  double lam = 0.0;  // default parameter value
  // per-component weights for the refinement estimate; empty = all ones.
  // Components whose right-hand side is only known to interpolation accuracy
  // (e.g. auxiliary quadrature states) should carry a weight < 1.
  Eigen::VectorXd err_weights;
};

struct SolverSettings {
  double rel_tol = 1e-8;
  int max_newton = 50;
  double damping_factor = 0.5;  // Armijo backtracking scale
  int max_backtracks = 8;
  int max_mesh = 10000;
  int initial_mesh_size = 10;
  int max_mesh_passes = 60;
};

enum class BvpStatus {
  Success,
  NoConvergence,
  MeshOverflow,
  SingularSystem,
};

struct BvpDiagnostics {
  int newton_iterations = 0;
  int mesh_passes = 0;
  int final_mesh_size = 0;
  double max_error_estimate = 0.0;
  double final_residual = 0.0;
  double bc_residual = 0.0;
};

struct BvpResult {
  BvpStatus status = BvpStatus::NoConvergence;
  MeshFunction solution;
  BvpDiagnostics diagnostics;
  bool ok() const { return status == BvpStatus::Success; }
};

/// Collocation solve (4th order Lobatto-IIIA scheme) with damped Newton and
/// adaptive mesh refinement until the residual estimate meets rel_tol.
BvpResult solve_tpbvp(const TpbvpProblem& prob, const MeshFunction& guess,
                      const SolverSettings& settings);

/// Same contract for problems affine in y and the boundary values; converges
/// in one Newton step per mesh. The caller asserts linearity.
BvpResult solve_linear_tpbvp(const TpbvpProblem& prob, const MeshFunction& guess,
                             const SolverSettings& settings);

/// Residual estimate of a solution against the problem, max over intervals.
double estimate_error(const TpbvpProblem& prob, const MeshFunction& sol, double lam);

struct SweepSettings {
  double param_start = 0.0;
  double param_max = 1.0;
  double initial_step = 0.1;
  double min_step = 1e-10;
  double max_step = 1e30;
  double grow_factor = 4.0;
  double shrink_factor = 0.5;
  // intermediate solutions only need to warm-start the next step; the last
  // accepted solution is re-solved at the full tolerance. <= 0 disables.
  double intermediate_rel_tol = -1.0;
};

enum class SweepHalt { Completed, TurningPoint, InitialSolveFailed };

struct SweepResult {
  std::vector<std::pair<double, MeshFunction>> solutions;
  SweepHalt halt = SweepHalt::InitialSolveFailed;
  bool ok() const { return halt != SweepHalt::InitialSolveFailed; }
};

/// Monotonic continuation in the problem parameter from param_start toward
/// param_max; on failure the step is halved, and step underflow is reported
/// as a turning point.
SweepResult solve_sweep(const TpbvpProblem& prob, const MeshFunction& guess,
                        const SweepSettings& sweep, const SolverSettings& settings);

const char* to_string(BvpStatus s);
const char* to_string(SweepHalt h);

}  // namespace rollpac
