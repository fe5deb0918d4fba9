#pragma once

#include <string>
#include <vector>

#include "rollpac/mesh_function.hpp"
#include "rollpac/tpbvp.hpp"

namespace rollpac {

// Predictor-corrector continuation over a TPBVP family in the product space
// L^2([0,1],R^n) x R: an adaptive-steplength tracer with Newton correctors
// orthogonal to the unit tangent, and a sweep variant that advances the
// tangent steplength inside a monotonic continuation solve.

struct PacSettings {
  int J = 10;                  // max accepted steps past the initial solution
  double sigma_init = 0.1;
  double sigma_min = 1e-4;
  double sigma_max = 0.5;
  double sigma_r = 0.25;       // reduction factor on rejection
  double sigma_i = 2.0;        // increase factor on fast convergence
  int K = 5;                   // max Newton corrections per step
  int k_fast = 3;              // fast-convergence threshold
  double gamma = 1e-3;         // corrector convergence threshold
  int d = 1;                   // first-tangent direction, -1 or 1
  bool polish = true;
  SolverSettings solver;
  double tangent_rel_tol = -1.0;  // negative: max(1e-5, 100 * solver.rel_tol)
};

struct SweepPacSettings {
  int J = 1;
  std::vector<double> sigma_max;  // per-step sweep limits, length J
  int d = 1;                      // -2,-1,1,2; +/-2 forces the lambda direction
  SolverSettings solver;
  double sweep_min_step = 1e-8;
  double sweep_initial_step_frac = 0.05;  // first sigma substep as a fraction of sigma_max
  // tangents set directions only, so they are solved at a relaxed tolerance;
  // negative means max(1e-5, 100 * solver.rel_tol)
  double tangent_rel_tol = -1.0;
};

struct TraceEntry {
  int j = 0;
  double lambda = 0.0;
  double sigma = 0.0;
  int corrector_iters = 0;
  double bc_residual = 0.0;
  std::string halt_reason;
};
using ContinuationTrace = std::vector<TraceEntry>;

enum class PacStatus { Completed, StepUnderflow, SolverFailure };

struct ContinuationResult {
  std::vector<CurvePoint> solutions;
  ContinuationTrace trace;
  PacStatus status = PacStatus::Completed;
  bool ok() const { return status == PacStatus::Completed; }
};

/// Linear TPBVP for a tangent at sol with the pseudo-arclength constraint
/// against tan_prev. Unknowns [v; tau; w], dim n+2.
TpbvpProblem build_tangent_problem(const TpbvpProblem& prob, const CurvePoint& sol,
                                   const Tangent& tan_prev);
/// Its paper-prescribed initial guess: (v,tau) = previous tangent, w = running
/// integral of v_prev^T v_prev.
MeshFunction tangent_guess(const Tangent& tan_prev, int dim);

/// Nonlinear TPBVP for a unit tangent (arclength constraint w(1)+tau^2 = 1).
TpbvpProblem build_unit_tangent_problem(const TpbvpProblem& prob, const CurvePoint& sol);

Tangent normalize_tangent(const Tangent& t);
CurvePoint tangent_predictor(const CurvePoint& sol, const Tangent& tan, double sigma);

/// Newton-correction TPBVP about corr; unknowns [dy; dlam; w].
TpbvpProblem build_corrector_problem(const TpbvpProblem& prob, const CurvePoint& corr,
                                     const CurvePoint& pred, const Tangent& tan);

bool convergence_test(const MeshFunction& dy, double dlam, const CurvePoint& pred, double gamma);

/// Full nonlinear polish TPBVP; unknowns [y; lam; w].
TpbvpProblem build_polish_problem(const TpbvpProblem& prob, const CurvePoint& corr_final,
                                  const CurvePoint& pred, const Tangent& tan);

/// Sweep TPBVP, parameterized by the tangent steplength sigma as the family
/// parameter; unknowns [y; lam; w].
TpbvpProblem build_sweep_problem(const TpbvpProblem& prob, const CurvePoint& sol,
                                 const Tangent& tan);

/// Direction fix-up: for j > 1 align with the previous tangent; for j = 1
/// apply d (|d| = 2 forces the sign of tau).
Tangent orient_tangent(const Tangent& tan, const Tangent& tan_prev, int j, int& d);

/// Predictor-corrector continuation (adaptive steplength, Newton correctors).
ContinuationResult pac_bvp(const TpbvpProblem& prob, const CurvePoint& sol1,
                           const PacSettings& settings);

/// Sweep predictor-corrector continuation: per step, a unit tangent is
/// oriented and the steplength swept monotonically up to sigma_max(j).
ContinuationResult pac_s3_bvp(const TpbvpProblem& prob, const CurvePoint& sol1,
                              const SweepPacSettings& settings);

/// Split an (n+2)-dim auxiliary solution [y; lam; w] into a curve point.
CurvePoint strip_auxiliary(const MeshFunction& sol);

}  // namespace rollpac
