#include "rollpac/tpbvp.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cmath>
#include <limits>

namespace rollpac {

namespace {

bool trace_enabled() {
  static const bool on = std::getenv("ROLLPAC_TRACE") != nullptr;
  return on;
}

bool trace_newton() {
  static const bool on = []() {
    const char* v = std::getenv("ROLLPAC_TRACE");
    return v && v[0] == '2';
  }();
  return on;
}

constexpr double kInf = std::numeric_limits<double>::infinity();

bool all_finite(const Eigen::VectorXd& v) { return v.allFinite(); }

struct ProblemView {
  const TpbvpProblem& prob;
  double lam;

  Eigen::VectorXd F(double s, const Eigen::VectorXd& y) const { return prob.F(s, y, lam); }
  Eigen::VectorXd G(const Eigen::VectorXd& ya, const Eigen::VectorXd& yb) const {
    return prob.G(ya, yb, lam);
  }

  Eigen::MatrixXd F_y(double s, const Eigen::VectorXd& y) const {
    if (prob.F_y) return prob.F_y(s, y, lam);
    const int d = prob.dim;
    Eigen::MatrixXd J(d, d);
    Eigen::VectorXd yp = y;
    for (int j = 0; j < d; ++j) {
      const double h = 1e-7 * (1.0 + std::fabs(y(j)));
      yp(j) = y(j) + h;
      const Eigen::VectorXd fp = prob.F(s, yp, lam);
      yp(j) = y(j) - h;
      const Eigen::VectorXd fm = prob.F(s, yp, lam);
      yp(j) = y(j);
      J.col(j) = (fp - fm) / (2.0 * h);
    }
    return J;
  }

  Eigen::MatrixXd G_ya(const Eigen::VectorXd& ya, const Eigen::VectorXd& yb) const {
    if (prob.G_ya) return prob.G_ya(ya, yb, lam);
    return fd_boundary(ya, yb, true);
  }
  Eigen::MatrixXd G_yb(const Eigen::VectorXd& ya, const Eigen::VectorXd& yb) const {
    if (prob.G_yb) return prob.G_yb(ya, yb, lam);
    return fd_boundary(ya, yb, false);
  }

private:
  Eigen::MatrixXd fd_boundary(const Eigen::VectorXd& ya, const Eigen::VectorXd& yb,
                              bool wrt_a) const {
    const int d = prob.dim;
    Eigen::MatrixXd J(d, d);
    Eigen::VectorXd v = wrt_a ? ya : yb;
    for (int j = 0; j < d; ++j) {
      const double h = 1e-7 * (1.0 + std::fabs(v(j)));
      const double save = v(j);
      v(j) = save + h;
      const Eigen::VectorXd gp = wrt_a ? prob.G(v, yb, lam) : prob.G(ya, v, lam);
      v(j) = save - h;
      const Eigen::VectorXd gm = wrt_a ? prob.G(v, yb, lam) : prob.G(ya, v, lam);
      v(j) = save;
      J.col(j) = (gp - gm) / (2.0 * h);
    }
    return J;
  }
};

// One-mesh Newton state: node values as a flat vector, plus the per-node and
// midpoint velocity evaluations reused between residual and Jacobian.
struct MeshWork {
  Eigen::VectorXd s;       // mesh, size N
  Eigen::MatrixXd Y;       // N x d
  Eigen::MatrixXd f_node;  // N x d
  Eigen::MatrixXd y_mid;   // (N-1) x d
  Eigen::MatrixXd f_mid;   // (N-1) x d
  Eigen::VectorXd bc;

  int N() const { return static_cast<int>(s.size()); }
};

bool eval_residual(const ProblemView& pv, MeshWork& w, Eigen::VectorXd& R) {
  const int N = w.N();
  const int d = static_cast<int>(w.Y.cols());
  try {
    for (int i = 0; i < N; ++i) {
      const Eigen::VectorXd f = pv.F(w.s(i), w.Y.row(i).transpose());
      if (!all_finite(f)) return false;
      w.f_node.row(i) = f.transpose();
    }
    R.resize(N * d);
    for (int i = 0; i < N - 1; ++i) {
      const double h = w.s(i + 1) - w.s(i);
      w.y_mid.row(i) = 0.5 * (w.Y.row(i) + w.Y.row(i + 1)) -
                       (h / 8.0) * (w.f_node.row(i + 1) - w.f_node.row(i));
      const Eigen::VectorXd fm = pv.F(w.s(i) + 0.5 * h, w.y_mid.row(i).transpose());
      if (!all_finite(fm)) return false;
      w.f_mid.row(i) = fm.transpose();
      R.segment(i * d, d) =
          (w.Y.row(i + 1) - w.Y.row(i) -
           (h / 6.0) * (w.f_node.row(i) + 4.0 * w.f_mid.row(i) + w.f_node.row(i + 1)))
              .transpose();
    }
    w.bc = pv.G(w.Y.row(0).transpose(), w.Y.row(N - 1).transpose());
    if (!all_finite(w.bc)) return false;
    R.segment((N - 1) * d, d) = w.bc;
  } catch (const std::exception&) {
    return false;
  }
  return true;
}

// Newton matrix in the almost-block-bidiagonal layout with full boundary
// rows. The sparsity pattern depends only on (N, d), so it is built once per
// mesh and later iterations overwrite the value array in place.
class AbdJacobian {
public:
  void build_pattern(int N, int d) {
    N_ = N;
    d_ = d;
    J_.resize(N * d, N * d);
    J_.reserve(Eigen::VectorXi::Constant(N * d, 2 * d));
    for (int i = 0; i < N; ++i)
      for (int c = 0; c < d; ++c) {
        const int col = i * d + c;
        if (i >= 1)
          for (int r = 0; r < d; ++r) J_.insert((i - 1) * d + r, col) = 0.0;
        if (i <= N - 2)
          for (int r = 0; r < d; ++r) J_.insert(i * d + r, col) = 0.0;
        if (i == 0 || i == N - 1)
          for (int r = 0; r < d; ++r) J_.insert((N - 1) * d + r, col) = 0.0;
      }
    J_.makeCompressed();
  }

  // value fill in the exact CSC order used by build_pattern
  bool fill(const ProblemView& pv, const MeshWork& w) {
    const int N = N_, d = d_;
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(d, d);
    double* vals = J_.valuePtr();
    size_t k = 0;
    try {
      const Eigen::MatrixXd Ga = pv.G_ya(w.Y.row(0).transpose(), w.Y.row(N - 1).transpose());
      const Eigen::MatrixXd Gb = pv.G_yb(w.Y.row(0).transpose(), w.Y.row(N - 1).transpose());
      if (!Ga.allFinite() || !Gb.allFinite()) return false;
      Eigen::MatrixXd Jn = pv.F_y(w.s(0), w.Y.row(0).transpose());
      Eigen::MatrixXd A(d, d), B_prev(d, d), B(d, d);
      for (int i = 0; i < N; ++i) {
        if (i <= N - 2) {
          const double h = w.s(i + 1) - w.s(i);
          const Eigen::MatrixXd Jnp = pv.F_y(w.s(i + 1), w.Y.row(i + 1).transpose());
          const Eigen::MatrixXd Jm = pv.F_y(w.s(i) + 0.5 * h, w.y_mid.row(i).transpose());
          A = -I - (h / 6.0) * (Jn + 4.0 * Jm * (0.5 * I + (h / 8.0) * Jn));
          B = I - (h / 6.0) * (Jnp + 4.0 * Jm * (0.5 * I - (h / 8.0) * Jnp));
          Jn = Jnp;
        }
        for (int c = 0; c < d; ++c) {
          if (i >= 1)
            for (int r = 0; r < d; ++r) vals[k++] = B_prev(r, c);
          if (i <= N - 2)
            for (int r = 0; r < d; ++r) vals[k++] = A(r, c);
          if (i == 0)
            for (int r = 0; r < d; ++r) vals[k++] = Ga(r, c);
          if (i == N - 1)
            for (int r = 0; r < d; ++r) vals[k++] = Gb(r, c);
        }
        B_prev = B;
      }
    } catch (const std::exception&) {
      return false;
    }
    return static_cast<Eigen::Index>(k) == J_.nonZeros();
  }

  const Eigen::SparseMatrix<double>& matrix() const { return J_; }

private:
  int N_ = 0, d_ = 0;
  Eigen::SparseMatrix<double> J_;
};

// Quartic collocation interpolant on one interval, parameterized by
// xi in [0,1]; collocates the ODE at both ends and the midpoint.
struct IntervalPoly {
  Eigen::VectorXd a, b, c, d, e;  // S(xi) = a + b xi + c xi^2 + d xi^3 + e xi^4

  static IntervalPoly build(const Eigen::VectorXd& y0, const Eigen::VectorXd& y1,
                            const Eigen::VectorXd& ym, const Eigen::VectorXd& g0,
                            const Eigen::VectorXd& g1) {
    IntervalPoly p;
    p.a = y0;
    p.b = g0;
    const Eigen::VectorXd P = y1 - y0 - g0;
    const Eigen::VectorXd Q = ym - y0 - 0.5 * g0;
    const Eigen::VectorXd R = g1 - g0;
    p.c = 16.0 * Q - 5.0 * P + R;
    p.d = 14.0 * P - 3.0 * R - 32.0 * Q;
    p.e = -8.0 * P + 16.0 * Q + 2.0 * R;
    return p;
  }
  Eigen::VectorXd value(double xi) const {
    return a + xi * (b + xi * (c + xi * (d + xi * e)));
  }
  Eigen::VectorXd deriv(double xi) const {
    return b + xi * (2.0 * c + xi * (3.0 * d + xi * 4.0 * e));
  }
};

// Scaled ODE residual of the collocation interpolant, sampled off the
// collocation points.
double interval_estimate(const ProblemView& pv, const MeshWork& w, int i) {
  const double h = w.s(i + 1) - w.s(i);
  const IntervalPoly p = IntervalPoly::build(
      w.Y.row(i).transpose(), w.Y.row(i + 1).transpose(), w.y_mid.row(i).transpose(),
      h * w.f_node.row(i).transpose(), h * w.f_node.row(i + 1).transpose());
  double worst = 0.0;
  for (double xi : {0.25, 0.75}) {
    const Eigen::VectorXd y = p.value(xi);
    Eigen::VectorXd f;
    try {
      f = pv.F(w.s(i) + xi * h, y);
    } catch (const std::exception&) {
      return kInf;
    }
    if (!all_finite(f)) return kInf;
    const Eigen::VectorXd r = p.deriv(xi) / h - f;
    const bool weighted = pv.prob.err_weights.size() == r.size();
    for (int k = 0; k < r.size(); ++k) {
      const double wk = weighted ? pv.prob.err_weights(k) : 1.0;
      worst = std::max(worst, wk * std::fabs(r(k)) / (1.0 + std::fabs(f(k))));
    }
  }
  return worst;
}

enum class NewtonOutcome { Converged, Diverged, Singular };

NewtonOutcome newton_on_mesh(const ProblemView& pv, MeshWork& w, const SolverSettings& st,
                             bool linear, int& iters_used) {
  Eigen::VectorXd R;
  if (!eval_residual(pv, w, R)) return NewtonOutcome::Diverged;
  double rnorm = R.lpNorm<Eigen::Infinity>();
  const int max_it = linear ? 3 : st.max_newton;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  AbdJacobian J;
  J.build_pattern(w.N(), static_cast<int>(w.Y.cols()));
  bool analyzed = false;

  for (int it = 0; it < max_it; ++it) {
    const double scale = 1.0 + w.Y.cwiseAbs().maxCoeff();
    const double tol_r = scale * std::max(1e-12, 1e-3 * st.rel_tol *
                                                      (w.s.tail(w.N() - 1) - w.s.head(w.N() - 1))
                                                          .minCoeff());
    if (rnorm <= tol_r) return NewtonOutcome::Converged;
    ++iters_used;
    if (!J.fill(pv, w)) return NewtonOutcome::Diverged;
    if (!analyzed) {
      lu.analyzePattern(J.matrix());
      analyzed = true;
    }
    lu.factorize(J.matrix());
    if (lu.info() != Eigen::Success) return NewtonOutcome::Singular;
    Eigen::VectorXd delta = lu.solve(-R);
    if (!all_finite(delta)) return NewtonOutcome::Singular;
    // near-singular points (symmetric configurations) blow the step up along
    // an almost-null direction that barely moves the residual; cap it so the
    // line search can still see the productive part
    const double step_cap = 1e2 * scale;
    const double dn = delta.lpNorm<Eigen::Infinity>();
    if (dn > step_cap) delta *= step_cap / dn;

    if (trace_newton())
      std::fprintf(stderr, "  [newton] it=%d N=%d rnorm=%.3e tol=%.3e |delta|=%.3e\n", it, w.N(),
                   rnorm, tol_r, delta.lpNorm<Eigen::Infinity>());
    const Eigen::MatrixXd Y_old = w.Y;
    double alpha = 1.0;
    bool accepted = false;
    for (int bt = 0; bt <= st.max_backtracks; ++bt) {
      w.Y = Y_old;
      for (int i = 0; i < w.N(); ++i)
        w.Y.row(i) += alpha * delta.segment(i * w.Y.cols(), w.Y.cols()).transpose();
      Eigen::VectorXd R_new;
      if (eval_residual(pv, w, R_new)) {
        const double rn = R_new.lpNorm<Eigen::Infinity>();
        if (linear || rn <= (1.0 - 1e-4 * alpha) * rnorm || rn <= tol_r) {
          R = std::move(R_new);
          rnorm = rn;
          accepted = true;
          break;
        }
      }
      alpha *= st.damping_factor;
    }
    if (!accepted) {
      w.Y = Y_old;
      if (trace_newton()) std::fprintf(stderr, "  [newton] line search exhausted\n");
      return NewtonOutcome::Diverged;
    }
  }
  // final residual check after the iteration budget
  const double scale = 1.0 + w.Y.cwiseAbs().maxCoeff();
  const double tol_r = scale * std::max(1e-12, 1e-3 * st.rel_tol *
                                                    (w.s.tail(w.N() - 1) - w.s.head(w.N() - 1))
                                                        .minCoeff());
  return rnorm <= tol_r ? NewtonOutcome::Converged : NewtonOutcome::Diverged;
}

// below this width, interval residual samples are roundoff-dominated and
// further splitting cannot improve them
constexpr double kMinInterval = 1e-7;

Eigen::VectorXd refine_mesh(const MeshWork& w, const std::vector<double>& est, double tol,
                            int max_mesh, bool& overflow, bool& refined_any) {
  std::vector<double> pts;
  pts.reserve(w.s.size() * 2u);
  refined_any = false;
  for (int i = 0; i < w.N() - 1; ++i) {
    pts.push_back(w.s(i));
    const double h_i = w.s(i + 1) - w.s(i);
    if (est[static_cast<size_t>(i)] > tol && h_i > 2.0 * kMinInterval) {
      int parts = static_cast<int>(std::ceil(std::pow(est[static_cast<size_t>(i)] / tol, 0.25)));
      parts = std::clamp(parts, 2, 4);
      const double h = h_i / parts;
      for (int k = 1; k < parts; ++k) pts.push_back(w.s(i) + k * h);
      refined_any = true;
    }
  }
  pts.push_back(w.s(w.N() - 1));
  overflow = static_cast<int>(pts.size()) > max_mesh;
  return Eigen::Map<Eigen::VectorXd>(pts.data(), static_cast<Eigen::Index>(pts.size()));
}

// Candidate coarser mesh: drop interior points whose flanking intervals are
// far below tolerance; alternate points so adjacent removals do not compound.
Eigen::VectorXd coarsen_mesh(const MeshWork& w, const std::vector<double>& est, double tol,
                             bool& removed_any) {
  std::vector<double> pts;
  pts.reserve(w.s.size());
  pts.push_back(w.s(0));
  removed_any = false;
  bool last_removed = false;
  for (int i = 1; i < w.N() - 1; ++i) {
    const double pair_est = std::max(est[static_cast<size_t>(i - 1)], est[static_cast<size_t>(i)]);
    const double merged_h = w.s(i + 1) - pts.back();
    const bool removable =
        !last_removed && pair_est * 16.0 < 0.3 * tol && merged_h <= 0.1;
    if (removable) {
      removed_any = true;
      last_removed = true;
    } else {
      pts.push_back(w.s(i));
      last_removed = false;
    }
  }
  pts.push_back(w.s(w.N() - 1));
  return Eigen::Map<Eigen::VectorXd>(pts.data(), static_cast<Eigen::Index>(pts.size()));
}

// Interpolate the converged collocation solution onto a refined mesh using
// the quartic interpolant per interval.
Eigen::MatrixXd interp_solution(const MeshWork& w, const Eigen::VectorXd& new_mesh) {
  const int d = static_cast<int>(w.Y.cols());
  Eigen::MatrixXd Y(new_mesh.size(), d);
  int iv = 0;
  for (Eigen::Index k = 0; k < new_mesh.size(); ++k) {
    const double s = new_mesh(k);
    while (iv < w.N() - 2 && s >= w.s(iv + 1)) ++iv;
    const double h = w.s(iv + 1) - w.s(iv);
    const IntervalPoly p = IntervalPoly::build(
        w.Y.row(iv).transpose(), w.Y.row(iv + 1).transpose(), w.y_mid.row(iv).transpose(),
        h * w.f_node.row(iv).transpose(), h * w.f_node.row(iv + 1).transpose());
    Y.row(k) = p.value((s - w.s(iv)) / h).transpose();
  }
  return Y;
}

BvpResult solve_impl(const TpbvpProblem& prob, const MeshFunction& guess,
                     const SolverSettings& st, bool linear) {
  const auto t_start = std::chrono::steady_clock::now();
  BvpResult res;
  struct TraceOnExit {
    const BvpResult& r;
    std::chrono::steady_clock::time_point t0;
    double lam;
    bool lin;
    int dim;
    ~TraceOnExit() {
      if (!trace_enabled()) return;
      std::fprintf(stderr,
                   "[tpbvp]%s d=%d lam=%.8g %s mesh=%d iters=%d passes=%d est=%.2e %.2fs\n",
                   lin ? " lin" : "", dim, lam, to_string(r.status),
                   r.diagnostics.final_mesh_size, r.diagnostics.newton_iterations,
                   r.diagnostics.mesh_passes,
                   r.diagnostics.max_error_estimate,
                   std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
      std::fflush(stderr);
    }
  } trace_on_exit{res, t_start, prob.lam, linear, prob.dim};
  if (guess.dim() != prob.dim) throw std::invalid_argument("solve_tpbvp: guess dim mismatch");
  ProblemView pv{prob, prob.lam};

  MeshWork w;
  if (guess.size() >= st.initial_mesh_size) {
    w.s = guess.mesh();
  } else {
    w.s = union_mesh(guess.mesh(),
                     Eigen::VectorXd::LinSpaced(st.initial_mesh_size, 0.0, 1.0));
  }
  const int d = prob.dim;
  w.Y.resize(w.s.size(), d);
  {
    Eigen::VectorXd row(d);
    for (Eigen::Index i = 0; i < w.s.size(); ++i) {
      guess.eval_into(w.s(i), row);
      w.Y.row(i) = row.transpose();
    }
  }

  for (int pass = 0; pass < st.max_mesh_passes; ++pass) {
    w.f_node.resize(w.s.size(), d);
    w.y_mid.resize(w.s.size() - 1, d);
    w.f_mid.resize(w.s.size() - 1, d);
    res.diagnostics.mesh_passes = pass + 1;

    const NewtonOutcome out = newton_on_mesh(pv, w, st, linear, res.diagnostics.newton_iterations);
    if (out == NewtonOutcome::Singular) {
      res.status = BvpStatus::SingularSystem;
      return res;
    }
    if (out == NewtonOutcome::Diverged) {
      res.status = BvpStatus::NoConvergence;
      return res;
    }

    std::vector<double> est(static_cast<size_t>(w.N() - 1));
    double max_est = 0.0;
    for (int i = 0; i < w.N() - 1; ++i) {
      est[static_cast<size_t>(i)] = interval_estimate(pv, w, i);
      max_est = std::max(max_est, est[static_cast<size_t>(i)]);
    }
    res.diagnostics.max_error_estimate = max_est;
    res.diagnostics.final_mesh_size = w.N();
    res.diagnostics.bc_residual = w.bc.lpNorm<Eigen::Infinity>();

    if (max_est <= st.rel_tol) {
      // opportunistic coarsening so warm-started continuation runs do not
      // accumulate stale refinement from earlier solves
      for (int pass = 0; pass < 20; ++pass) {
        bool removed = false;
        const Eigen::VectorXd coarse = coarsen_mesh(w, est, st.rel_tol, removed);
        if (!removed) break;
        MeshWork w2;
        w2.s = coarse;
        w2.Y = interp_solution(w, coarse);
        w2.f_node.resize(coarse.size(), d);
        w2.y_mid.resize(coarse.size() - 1, d);
        w2.f_mid.resize(coarse.size() - 1, d);
        int dummy_iters = 0;
        if (newton_on_mesh(pv, w2, st, linear, dummy_iters) != NewtonOutcome::Converged) break;
        std::vector<double> est2(static_cast<size_t>(w2.N() - 1));
        double max2 = 0.0;
        for (int i = 0; i < w2.N() - 1; ++i) {
          est2[static_cast<size_t>(i)] = interval_estimate(pv, w2, i);
          max2 = std::max(max2, est2[static_cast<size_t>(i)]);
        }
        if (max2 > st.rel_tol) break;
        w = std::move(w2);
        est = std::move(est2);
        res.diagnostics.max_error_estimate = max2;
        res.diagnostics.final_mesh_size = w.N();
      }
      res.status = BvpStatus::Success;
      res.solution = MeshFunction::with_slopes(w.s, w.Y, w.f_node);
      return res;
    }

    bool overflow = false;
    bool refined_any = false;
    const Eigen::VectorXd new_mesh =
        refine_mesh(w, est, st.rel_tol, st.max_mesh, overflow, refined_any);
    if (overflow) {
      res.status = BvpStatus::MeshOverflow;
      res.solution = MeshFunction(w.s, w.Y, guess.interp());
      return res;
    }
    if (!refined_any) {
      // every offending interval is already at the resolution floor
      res.status = BvpStatus::Success;
      res.solution = MeshFunction::with_slopes(w.s, w.Y, w.f_node);
      return res;
    }
    w.Y = interp_solution(w, new_mesh);
    w.s = new_mesh;
  }
  res.status = BvpStatus::NoConvergence;
  return res;
}

}  // namespace

BvpResult solve_tpbvp(const TpbvpProblem& prob, const MeshFunction& guess,
                      const SolverSettings& settings) {
  return solve_impl(prob, guess, settings, false);
}

BvpResult solve_linear_tpbvp(const TpbvpProblem& prob, const MeshFunction& guess,
                             const SolverSettings& settings) {
  return solve_impl(prob, guess, settings, true);
}

double estimate_error(const TpbvpProblem& prob, const MeshFunction& sol, double lam) {
  ProblemView pv{prob, lam};
  MeshWork w;
  w.s = sol.mesh();
  w.Y = sol.values();
  const int d = sol.dim();
  w.f_node.resize(w.s.size(), d);
  w.y_mid.resize(w.s.size() - 1, d);
  w.f_mid.resize(w.s.size() - 1, d);
  Eigen::VectorXd R;
  if (!eval_residual(pv, w, R)) return kInf;
  double max_est = 0.0;
  for (int i = 0; i < w.N() - 1; ++i) max_est = std::max(max_est, interval_estimate(pv, w, i));
  return max_est;
}

SweepResult solve_sweep(const TpbvpProblem& prob, const MeshFunction& guess,
                        const SweepSettings& sweep, const SolverSettings& settings) {
  SweepResult out;
  SolverSettings inter = settings;
  if (sweep.intermediate_rel_tol > 0)
    inter.rel_tol = std::max(settings.rel_tol, sweep.intermediate_rel_tol);
  TpbvpProblem p = prob;
  p.lam = sweep.param_start;
  BvpResult first = solve_tpbvp(p, guess, inter);
  if (!first.ok()) {
    out.halt = SweepHalt::InitialSolveFailed;
    return out;
  }
  out.solutions.emplace_back(sweep.param_start, first.solution);

  // re-solve the accepted endpoint at the requested tolerance when the
  // intermediate steps ran loose
  auto tighten_back = [&]() {
    if (inter.rel_tol <= settings.rel_tol) return;
    p.lam = out.solutions.back().first;
    const BvpResult tight = solve_tpbvp(p, out.solutions.back().second, settings);
    if (tight.ok()) out.solutions.back().second = tight.solution;
  };

  const double dir = sweep.param_max >= sweep.param_start ? 1.0 : -1.0;
  const double span = std::fabs(sweep.param_max - sweep.param_start);
  if (span == 0.0) {
    tighten_back();
    out.halt = SweepHalt::Completed;
    return out;
  }
  double lam = sweep.param_start;
  double step = std::min(sweep.initial_step, std::max(span, sweep.min_step));
  MeshFunction current = first.solution;

  while (true) {
    const double remaining = std::fabs(sweep.param_max - lam);
    if (remaining <= 0.0) {
      tighten_back();
      out.halt = SweepHalt::Completed;
      return out;
    }
    const double trial_step = std::min(step, remaining);
    const double trial = lam + dir * trial_step;
    p.lam = trial;
    BvpResult r = solve_tpbvp(p, current, inter);
    if (r.ok()) {
      lam = trial;
      current = r.solution;
      out.solutions.emplace_back(lam, current);
      if (std::fabs(sweep.param_max - lam) <= 0.0) {
        tighten_back();
        out.halt = SweepHalt::Completed;
        return out;
      }
      step = std::min(step * sweep.grow_factor, sweep.max_step);
    } else {
      step *= sweep.shrink_factor;
      if (step < sweep.min_step) {
        tighten_back();
        out.halt = SweepHalt::TurningPoint;
        return out;
      }
    }
  }
}

const char* to_string(BvpStatus s) {
  switch (s) {
    case BvpStatus::Success: return "Success";
    case BvpStatus::NoConvergence: return "NoConvergence";
    case BvpStatus::MeshOverflow: return "MeshOverflow";
    case BvpStatus::SingularSystem: return "SingularSystem";
  }
  return "?";
}

const char* to_string(SweepHalt h) {
  switch (h) {
    case SweepHalt::Completed: return "Completed";
    case SweepHalt::TurningPoint: return "TurningPoint";
    case SweepHalt::InitialSolveFailed: return "InitialSolveFailed";
  }
  return "?";
}

}  // namespace rollpac
