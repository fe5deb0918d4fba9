#pragma once

#include <string>
#include <vector>

namespace rollpac {

// Self-contained oracle suite behind the `validate` command: analytic BVPs,
// the Bratu fold against a dense shooting oracle, Jacobian consistency for
// both scenario problems, control-law duality, and the rolling-body model
// invariants.

struct ValidateOptions {
  double rel_tol = 1e-8;
  // test hook: adds a bias to one assembled Jacobian entry so the finite
  // difference cross-checks must fail
  double inject_jacobian_error = 0.0;
};

struct CheckResult {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double bound = 0.0;
  double seconds = 0.0;
  std::string detail;
};

struct ValidateReport {
  std::vector<CheckResult> checks;
  double total_seconds = 0.0;
  bool all_passed() const {
    for (const auto& c : checks)
      if (!c.passed) return false;
    return true;
  }
};

ValidateReport run_validation(const ValidateOptions& opts);

/// Dense-mesh RK4 shooting value y(1) for y'' = -lam e^y, y(0)=0, y'(0)=p.
double bratu_shoot_y1(double p, double lam, int steps = 4000);
/// Fold location of the Bratu family by bisection over the shooting oracle.
double bratu_fold_oracle();

}  // namespace rollpac
