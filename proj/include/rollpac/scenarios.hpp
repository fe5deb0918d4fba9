#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

#include "rollpac/continuation.hpp"
#include "rollpac/models.hpp"
#include "rollpac/ocp.hpp"

namespace rollpac {

// The two rolling-body experiments as OcpDefinitions with their homotopy
// schedules, seeding strategy, and per-solution diagnostics.

enum class CutoffKind { Sigmoid, Relu4 };
enum class SeedStrategy { LinearInterp, WeightRampHomotopy };

/// Sinusoidally modulated point-to-point reference for the disk's GC, with
/// sigmoid blends pinning the endpoints.
struct DesiredPath {
  double z_a = 0.0, z_b = 1.0;
  double a = 0.0, b = 12.0;
  double eps = 0.01;
};

template <class S>
S desired_path(const DesiredPath& p, const S& t) {
  using std::sin;
  using std::tanh;
  const auto sigmoid = [&](const S& v) { return 0.5 * (1.0 + tanh(-v / p.eps)); };
  const S w = sigmoid(t - p.a);
  const S y = sigmoid(p.b - t);  // note: S(-t + b)
  const S frac = (t - p.a) / (p.b - p.a);
  const S zt = (p.z_a + (p.z_b - p.z_a) * frac) * sin(4.5 * M_PI * frac);
  return (p.z_a * w + zt * (1.0 - w)) * (1.0 - y) + p.z_b * y;
}

/// A named affine map of the continuation parameter.
struct LinearHomotopy {
  double at_start = 0.0, at_end = 0.0;
  double mu_start = 0.95, mu_end = 1e-5;

  template <class S>
  S operator()(const S& mu) const {
    return at_start + (mu_start - mu) * ((at_end - at_start) / (mu_start - mu_end));
  }
  static LinearHomotopy constant(double v) { return {v, v, 0.95, 1e-5}; }
};

struct ObstacleSpec {
  Eigen::Vector2d center;
  double radius = 0.0;
  LinearHomotopy height;
};

struct DiskScenario {
  DiskParams params;
  Eigen::VectorXd theta_a, dtheta_a, dtheta_b;
  double phi_a = 0.0, z_a = 0.0, dz_a = 0.0, z_b = 1.0, dz_b = 0.0;
  double a = 0.0, b = 12.0;
  Eigen::VectorXd gamma;
  LinearHomotopy alpha{0.1, 5000.0};
  double mu_start = 0.95;
  double path_eps = 0.01;

  static DiskScenario paper();
  DesiredPath path() const { return {z_a, z_b, a, b, path_eps}; }
  int n() const { return 2 * static_cast<int>(params.rails.size()) + 2; }
  int m() const { return static_cast<int>(params.rails.size()); }

  OcpDefinition ocp() const;
  /// Family in a ramp parameter eta on [0,1] scaling the tracking weight and
  /// the endpoint displacement; eta = 0 has the rest state as exact solution
  /// and eta = 1 coincides with ocp() at mu_start.
  OcpDefinition seed_family() const;
};

struct BallScenario {
  BallParams params;
  std::array<double, 3> theta_a{}, dtheta_a{}, omega_a{}, dtheta_b{}, omega_b{};
  Versor q_a;
  Eigen::Vector2d z_a{0, 0}, z_b{1, 1};
  double a = 0.0, b = 5.0;
  LinearHomotopy gamma = LinearHomotopy::constant(10.0);
  std::vector<ObstacleSpec> obstacles;
  CutoffKind cutoff = CutoffKind::Sigmoid;
  double eps = 0.01;
  double mu_start = 0.95;

  static BallScenario paper(CutoffKind cutoff);
  /// The second continuation round: control weights ramp down while the
  /// obstacle heights stay fixed at the value reached by the first round.
  BallScenario control_relax_round(double h_fixed) const;

  int n() const { return 15; }
  int m() const { return 3; }

  OcpDefinition ocp() const;
  OcpDefinition seed_family() const;
};

struct ScenarioOptions {
  std::string name;  // disk-tracking | disk-turning-points | ball-sigmoid | ball-relu
  double rel_tol = -1.0;            // <= 0: scenario default (1e-8 disk, 1e-6 ball)
  std::vector<double> sigma_max;    // empty: the paper schedule
  int steps = -1;                   // <= 0: schedule length
  int d = -2;
  SeedStrategy seed = SeedStrategy::WeightRampHomotopy;
  std::optional<CutoffKind> cutoff;  // ball only; default per scenario
};

struct SolutionMetrics {
  int index = 0;
  int round = 1;
  double mu = 0.0;
  double J = 0.0;               // integral of L over [a,b]
  double tracking_error = 0.0;  // disk: integral of (z - z_d)^2 dt
  double clearance = 0.0;       // ball: min over mesh of min_j(|z-v_j| - rho_j)
  double ups_inf = 0.0;         // boundary-condition residual
  double ham_drift = 0.0;       // relative Hamiltonian variation along the mesh
  FeasibilityReport feasibility;
};

struct ScenarioRun {
  std::string name;
  bool is_ball = false;
  std::vector<CurvePoint> solutions;  // expanded-state curves, lam = mu
  std::vector<int> rounds;            // per solution
  ContinuationTrace trace;
  std::vector<SolutionMetrics> metrics;
  PacStatus status = PacStatus::Completed;
  DiskScenario disk;
  std::vector<BallScenario> ball_rounds;
  bool ok() const { return status == PacStatus::Completed; }
};

/// Build the seed extremal for a scenario problem.
CurvePoint initial_guess(const OcpDefinition& def, const OcpDefinition& seed_def,
                         SeedStrategy strategy, const ControlLaw& law,
                         const SolverSettings& solver, double mu_start);

ScenarioRun run_scenario(const ScenarioOptions& opts);

SolutionMetrics disk_metrics(const DiskScenario& sc, const CurvePoint& sol);
SolutionMetrics ball_metrics(const BallScenario& sc, const CurvePoint& sol);

/// Per-mesh-point trajectory row for archiving.
struct PointOutputs {
  double s = 0.0, t = 0.0;
  Eigen::VectorXd x, lam, xi, nu, u;
  double N = 0.0, fs = 0.0;
};
std::vector<PointOutputs> disk_outputs(const DiskScenario& sc, const CurvePoint& sol);
std::vector<PointOutputs> ball_outputs(const BallScenario& sc, const CurvePoint& sol);

}  // namespace rollpac
