#include "rollpac/continuation.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>

namespace rollpac {

namespace {

Eigen::VectorXd base_flam(const TpbvpProblem& prob, double s, const Eigen::VectorXd& y,
                          double lam) {
  if (prob.F_lam) return prob.F_lam(s, y, lam);
  const double h = 1e-7 * (1.0 + std::fabs(lam));
  return (prob.F(s, y, lam + h) - prob.F(s, y, lam - h)) / (2.0 * h);
}

Eigen::VectorXd base_glam(const TpbvpProblem& prob, const Eigen::VectorXd& ya,
                          const Eigen::VectorXd& yb, double lam) {
  if (prob.G_lam) return prob.G_lam(ya, yb, lam);
  const double h = 1e-7 * (1.0 + std::fabs(lam));
  return (prob.G(ya, yb, lam + h) - prob.G(ya, yb, lam - h)) / (2.0 * h);
}

// Coefficients of the base problem frozen at a known curve point; the
// linearized sub-problems evaluate them many times at the same s.
struct FrozenCoeffs {
  TpbvpProblem base;
  CurvePoint at;

  FrozenCoeffs(TpbvpProblem b, CurvePoint a) : base(std::move(b)), at(std::move(a)) {}

  struct Entry {
    Eigen::VectorXd y, f, flam, dyds;
    Eigen::MatrixXd fy;
  };

  const Entry& get(double s) const {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(s);
    if (it != cache.end()) return it->second;
    Entry e;
    e.y = at.y.eval(s);
    e.dyds = at.y.deriv(s);
    e.f = base.F(s, e.y, at.lam);
    if (base.F_y_and_lam) {
      base.F_y_and_lam(s, e.y, at.lam, e.fy, e.flam);
    } else {
      e.fy = base.F_y ? base.F_y(s, e.y, at.lam) : fd_fy(s, e.y);
      e.flam = base_flam(base, s, e.y, at.lam);
    }
    return cache.emplace(s, std::move(e)).first->second;
  }

  Eigen::MatrixXd fd_fy(double s, const Eigen::VectorXd& y) const {
    const int d = base.dim;
    Eigen::MatrixXd J(d, d);
    Eigen::VectorXd yp = y;
    for (int j = 0; j < d; ++j) {
      const double h = 1e-7 * (1.0 + std::fabs(y(j)));
      yp(j) = y(j) + h;
      const Eigen::VectorXd fp = base.F(s, yp, at.lam);
      yp(j) = y(j) - h;
      const Eigen::VectorXd fm = base.F(s, yp, at.lam);
      yp(j) = y(j);
      J.col(j) = (fp - fm) / (2.0 * h);
    }
    return J;
  }

private:
  mutable std::map<double, Entry> cache;
  mutable std::mutex mu;
};

struct FrozenBoundary {
  Eigen::MatrixXd g_ya, g_yb;
  Eigen::VectorXd g_lam, g_value;
};

FrozenBoundary freeze_boundary(const TpbvpProblem& prob, const CurvePoint& at) {
  const Eigen::VectorXd ya = at.y.eval(0.0), yb = at.y.eval(1.0);
  FrozenBoundary fb;
  fb.g_value = prob.G(ya, yb, at.lam);
  if (prob.G_ya) {
    fb.g_ya = prob.G_ya(ya, yb, at.lam);
  } else {
    const int d = prob.dim;
    fb.g_ya.resize(d, d);
    Eigen::VectorXd v = ya;
    for (int j = 0; j < d; ++j) {
      const double h = 1e-7 * (1.0 + std::fabs(v(j)));
      const double save = v(j);
      v(j) = save + h;
      const Eigen::VectorXd gp = prob.G(v, yb, at.lam);
      v(j) = save - h;
      const Eigen::VectorXd gm = prob.G(v, yb, at.lam);
      v(j) = save;
      fb.g_ya.col(j) = (gp - gm) / (2.0 * h);
    }
  }
  if (prob.G_yb) {
    fb.g_yb = prob.G_yb(ya, yb, at.lam);
  } else {
    const int d = prob.dim;
    fb.g_yb.resize(d, d);
    Eigen::VectorXd v = yb;
    for (int j = 0; j < d; ++j) {
      const double h = 1e-7 * (1.0 + std::fabs(v(j)));
      const double save = v(j);
      v(j) = save + h;
      const Eigen::VectorXd gp = prob.G(ya, v, at.lam);
      v(j) = save - h;
      const Eigen::VectorXd gm = prob.G(ya, v, at.lam);
      v(j) = save;
      fb.g_yb.col(j) = (gp - gm) / (2.0 * h);
    }
  }
  fb.g_lam = base_glam(prob, ya, yb, at.lam);
  return fb;
}

}  // namespace

CurvePoint strip_auxiliary(const MeshFunction& sol) {
  const int nb = sol.dim() - 2;
  CurvePoint cp;
  cp.y = sol.left_cols(nb);
  cp.lam = sol.values().col(nb).mean();
  return cp;
}

MeshFunction tangent_guess(const Tangent& tan_prev, int dim) {
  const Eigen::VectorXd& m = tan_prev.v.mesh();
  const int nb = dim - 2;
  Eigen::MatrixXd vals(m.size(), dim);
  Eigen::VectorXd vv(m.size());
  Eigen::VectorXd row(nb);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    tan_prev.v.eval_into(m(i), row);
    vals.block(i, 0, 1, nb) = row.transpose();
    vals(i, nb) = tan_prev.tau;
    vv(i) = row.squaredNorm();
  }
  vals.col(nb + 1) = cumtrapz(m, vv);
  return MeshFunction(m, vals);
}

TpbvpProblem build_tangent_problem(const TpbvpProblem& prob, const CurvePoint& sol,
                                   const Tangent& tan_prev) {
  const int nb = prob.dim;
  auto fc = std::make_shared<FrozenCoeffs>(prob, sol);
  const FrozenBoundary fb = freeze_boundary(prob, sol);
  auto vprev = std::make_shared<MeshFunction>(tan_prev.v);
  const double tau_prev = tan_prev.tau;

  TpbvpProblem p;
  p.dim = nb + 2;
  p.err_weights = Eigen::VectorXd::Ones(nb + 2);
  p.err_weights(nb + 1) = 1e-2;  // quadrature state, data only interpolation-accurate
  p.F = [fc, vprev, nb](double s, const Eigen::VectorXd& x, double) {
    const auto& e = fc->get(s);
    Eigen::VectorXd out(nb + 2);
    out.segment(0, nb) = e.fy * x.segment(0, nb) + e.flam * x(nb);
    out(nb) = 0.0;
    out(nb + 1) = vprev->eval(s).dot(x.segment(0, nb));
    return out;
  };
  p.F_y = [fc, vprev, nb](double s, const Eigen::VectorXd&, double) {
    const auto& e = fc->get(s);
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(nb + 2, nb + 2);
    J.block(0, 0, nb, nb) = e.fy;
    J.block(0, nb, nb, 1) = e.flam;
    J.block(nb + 1, 0, 1, nb) = vprev->eval(s).transpose();
    return J;
  };
  p.G = [fb, tau_prev, nb](const Eigen::VectorXd& xa, const Eigen::VectorXd& xb, double) {
    Eigen::VectorXd out(nb + 2);
    out.segment(0, nb) =
        fb.g_ya * xa.segment(0, nb) + fb.g_yb * xb.segment(0, nb) + fb.g_lam * xb(nb);
    out(nb) = xa(nb + 1);
    out(nb + 1) = xb(nb + 1) + tau_prev * xb(nb) - 1.0;
    return out;
  };
  p.G_ya = [fb, nb](const Eigen::VectorXd&, const Eigen::VectorXd&, double) {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(nb + 2, nb + 2);
    J.block(0, 0, nb, nb) = fb.g_ya;
    J(nb, nb + 1) = 1.0;
    return J;
  };
  p.G_yb = [fb, tau_prev, nb](const Eigen::VectorXd&, const Eigen::VectorXd&, double) {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(nb + 2, nb + 2);
    J.block(0, 0, nb, nb) = fb.g_yb;
    J.block(0, nb, nb, 1) = fb.g_lam;
    J(nb, nb + 1) = 0.0;
    J(nb + 1, nb) = tau_prev;
    J(nb + 1, nb + 1) = 1.0;
    return J;
  };
  return p;
}

TpbvpProblem build_unit_tangent_problem(const TpbvpProblem& prob, const CurvePoint& sol) {
  const int nb = prob.dim;
  auto fc = std::make_shared<FrozenCoeffs>(prob, sol);
  const FrozenBoundary fb = freeze_boundary(prob, sol);

  TpbvpProblem p;
  p.dim = nb + 2;
  p.err_weights = Eigen::VectorXd::Ones(nb + 2);
  p.err_weights(nb + 1) = 1e-2;  // quadrature state, data only interpolation-accurate
  p.F = [fc, nb](double s, const Eigen::VectorXd& x, double) {
    const auto& e = fc->get(s);
    Eigen::VectorXd out(nb + 2);
    out.segment(0, nb) = e.fy * x.segment(0, nb) + e.flam * x(nb);
    out(nb) = 0.0;
    out(nb + 1) = x.segment(0, nb).squaredNorm();
    return out;
  };
  p.F_y = [fc, nb](double s, const Eigen::VectorXd& x, double) {
    const auto& e = fc->get(s);
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(nb + 2, nb + 2);
    J.block(0, 0, nb, nb) = e.fy;
    J.block(0, nb, nb, 1) = e.flam;
    J.block(nb + 1, 0, 1, nb) = 2.0 * x.segment(0, nb).transpose();
    return J;
  };
  p.G = [fb, nb](const Eigen::VectorXd& xa, const Eigen::VectorXd& xb, double) {
    Eigen::VectorXd out(nb + 2);
    out.segment(0, nb) =
        fb.g_ya * xa.segment(0, nb) + fb.g_yb * xb.segment(0, nb) + fb.g_lam * xb(nb);
    out(nb) = xa(nb + 1);
    out(nb + 1) = xb(nb + 1) + xb(nb) * xb(nb) - 1.0;
    return out;
  };
  p.G_ya = [fb, nb](const Eigen::VectorXd&, const Eigen::VectorXd&, double) {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(nb + 2, nb + 2);
    J.block(0, 0, nb, nb) = fb.g_ya;
    J(nb, nb + 1) = 1.0;
    return J;
  };
  p.G_yb = [fb, nb](const Eigen::VectorXd&, const Eigen::VectorXd& xb, double) {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(nb + 2, nb + 2);
    J.block(0, 0, nb, nb) = fb.g_yb;
    J.block(0, nb, nb, 1) = fb.g_lam;
    J(nb + 1, nb) = 2.0 * xb(nb);
    J(nb + 1, nb + 1) = 1.0;
    return J;
  };
  return p;
}

Tangent normalize_tangent(const Tangent& t) {
  const double k = norm(t);
  Tangent out;
  out.v = MeshFunction(t.v.mesh(), t.v.values() / k, t.v.interp());
  out.tau = t.tau / k;
  return out;
}

CurvePoint tangent_predictor(const CurvePoint& sol, const Tangent& tan, double sigma) {
  return axpy(sol, sigma, tan);
}

TpbvpProblem build_corrector_problem(const TpbvpProblem& prob, const CurvePoint& corr,
                                     const CurvePoint& pred, const Tangent& tan) {
  (void)pred;  // the corrector offset enters through pac_bvp's accumulation
  const int nb = prob.dim;
  auto fc = std::make_shared<FrozenCoeffs>(prob, corr);
  const FrozenBoundary fb = freeze_boundary(prob, corr);
  auto vj = std::make_shared<MeshFunction>(tan.v);
  const double tau = tan.tau;

  TpbvpProblem p;
  p.dim = nb + 2;
  p.err_weights = Eigen::VectorXd::Ones(nb + 2);
  p.err_weights(nb + 1) = 1e-2;  // quadrature state, data only interpolation-accurate
  p.F = [fc, vj, nb](double s, const Eigen::VectorXd& x, double) {
    const auto& e = fc->get(s);
    Eigen::VectorXd out(nb + 2);
    out.segment(0, nb) = e.fy * x.segment(0, nb) + e.flam * x(nb) - e.dyds + e.f;
    out(nb) = 0.0;
    out(nb + 1) = vj->eval(s).dot(x.segment(0, nb));
    return out;
  };
  p.F_y = [fc, vj, nb](double s, const Eigen::VectorXd&, double) {
    const auto& e = fc->get(s);
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(nb + 2, nb + 2);
    J.block(0, 0, nb, nb) = e.fy;
    J.block(0, nb, nb, 1) = e.flam;
    J.block(nb + 1, 0, 1, nb) = vj->eval(s).transpose();
    return J;
  };
  p.G = [fb, tau, nb](const Eigen::VectorXd& xa, const Eigen::VectorXd& xb, double) {
    Eigen::VectorXd out(nb + 2);
    out.segment(0, nb) = fb.g_ya * xa.segment(0, nb) + fb.g_yb * xb.segment(0, nb) +
                         fb.g_lam * xb(nb) + fb.g_value;
    out(nb) = xa(nb + 1);
    out(nb + 1) = xb(nb + 1) + tau * xb(nb);
    return out;
  };
  p.G_ya = [fb, nb](const Eigen::VectorXd&, const Eigen::VectorXd&, double) {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(nb + 2, nb + 2);
    J.block(0, 0, nb, nb) = fb.g_ya;
    J(nb, nb + 1) = 1.0;
    return J;
  };
  p.G_yb = [fb, tau, nb](const Eigen::VectorXd&, const Eigen::VectorXd&, double) {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(nb + 2, nb + 2);
    J.block(0, 0, nb, nb) = fb.g_yb;
    J.block(0, nb, nb, 1) = fb.g_lam;
    J(nb + 1, nb) = tau;
    J(nb + 1, nb + 1) = 1.0;
    return J;
  };
  return p;
}

bool convergence_test(const MeshFunction& dy, double dlam, const CurvePoint& pred, double gamma) {
  return norm(dy, dlam) / norm(pred) < gamma;
}

namespace {

// Shared structure of the polish and sweep problems: full nonlinear F and G
// plus the w-equation against a fixed offset curve.
TpbvpProblem nonlinear_orthogonality_problem(const TpbvpProblem& prob, const Tangent& tan,
                                             std::shared_ptr<MeshFunction> offset_y,
                                             std::function<double(double)> offset_lam) {
  const int nb = prob.dim;
  auto vj = std::make_shared<MeshFunction>(tan.v);
  const double tau = tan.tau;
  TpbvpProblem base = prob;

  TpbvpProblem p;
  p.dim = nb + 2;
  p.err_weights = Eigen::VectorXd::Ones(nb + 2);
  p.err_weights(nb + 1) = 1e-2;  // quadrature state, data only interpolation-accurate
  p.F = [base, vj, offset_y, nb](double s, const Eigen::VectorXd& x, double sg) {
    (void)sg;
    Eigen::VectorXd out(nb + 2);
    out.segment(0, nb) = base.F(s, x.segment(0, nb), x(nb));
    out(nb) = 0.0;
    out(nb + 1) = vj->eval(s).dot(x.segment(0, nb) - offset_y->eval(s));
    return out;
  };
  p.F_y = [base, vj, nb](double s, const Eigen::VectorXd& x, double) {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(nb + 2, nb + 2);
    const Eigen::VectorXd y = x.segment(0, nb);
    if (base.F_y_and_lam) {
      Eigen::MatrixXd fy;
      Eigen::VectorXd flam;
      base.F_y_and_lam(s, y, x(nb), fy, flam);
      J.block(0, 0, nb, nb) = fy;
      J.block(0, nb, nb, 1) = flam;
    } else {
      if (!base.F_y) throw std::runtime_error("needs F_y");
      J.block(0, 0, nb, nb) = base.F_y(s, y, x(nb));
      J.block(0, nb, nb, 1) = base_flam(base, s, y, x(nb));
    }
    J.block(nb + 1, 0, 1, nb) = vj->eval(s).transpose();
    return J;
  };
  p.G = [base, tau, offset_lam, nb](const Eigen::VectorXd& xa, const Eigen::VectorXd& xb,
                                    double sg) {
    Eigen::VectorXd out(nb + 2);
    out.segment(0, nb) = base.G(xa.segment(0, nb), xb.segment(0, nb), xb(nb));
    out(nb) = xa(nb + 1);
    out(nb + 1) = xb(nb + 1) + tau * (xb(nb) - offset_lam(sg));
    return out;
  };
  p.G_ya = [base, nb](const Eigen::VectorXd& xa, const Eigen::VectorXd& xb, double) {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(nb + 2, nb + 2);
    const Eigen::VectorXd ya = xa.segment(0, nb), yb = xb.segment(0, nb);
    if (base.G_ya) J.block(0, 0, nb, nb) = base.G_ya(ya, yb, xb(nb));
    J(nb, nb + 1) = 1.0;
    return J;
  };
  p.G_yb = [base, tau, nb](const Eigen::VectorXd& xa, const Eigen::VectorXd& xb, double) {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(nb + 2, nb + 2);
    const Eigen::VectorXd ya = xa.segment(0, nb), yb = xb.segment(0, nb);
    if (base.G_yb) J.block(0, 0, nb, nb) = base.G_yb(ya, yb, xb(nb));
    J.block(0, nb, nb, 1) = base_glam(base, ya, yb, xb(nb));
    J(nb + 1, nb) = tau;
    J(nb + 1, nb + 1) = 1.0;
    return J;
  };
  return p;
}

}  // namespace

TpbvpProblem build_polish_problem(const TpbvpProblem& prob, const CurvePoint& corr_final,
                                  const CurvePoint& pred, const Tangent& tan) {
  (void)corr_final;  // enters only through the caller's initial guess
  auto offset_y = std::make_shared<MeshFunction>(pred.y);
  const double lam_pred = pred.lam;
  return nonlinear_orthogonality_problem(prob, tan, offset_y,
                                         [lam_pred](double) { return lam_pred; });
}

TpbvpProblem build_sweep_problem(const TpbvpProblem& prob, const CurvePoint& sol,
                                 const Tangent& tan) {
  // offset (y_j + sigma v_j, lam_j + sigma tau_j) with sigma as the family
  // parameter of the returned problem
  const int nb = prob.dim;
  auto yj = std::make_shared<MeshFunction>(sol.y);
  auto vj = std::make_shared<MeshFunction>(tan.v);
  const double lam_j = sol.lam, tau = tan.tau;
  TpbvpProblem base = prob;

  TpbvpProblem p;
  p.dim = nb + 2;
  p.err_weights = Eigen::VectorXd::Ones(nb + 2);
  p.err_weights(nb + 1) = 1e-2;  // quadrature state, data only interpolation-accurate
  p.F = [base, yj, vj, nb](double s, const Eigen::VectorXd& x, double sg) {
    Eigen::VectorXd out(nb + 2);
    out.segment(0, nb) = base.F(s, x.segment(0, nb), x(nb));
    out(nb) = 0.0;
    out(nb + 1) = vj->eval(s).dot(x.segment(0, nb) - yj->eval(s) - sg * vj->eval(s));
    return out;
  };
  p.F_y = [base, vj, nb](double s, const Eigen::VectorXd& x, double) {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(nb + 2, nb + 2);
    const Eigen::VectorXd y = x.segment(0, nb);
    if (base.F_y_and_lam) {
      Eigen::MatrixXd fy;
      Eigen::VectorXd flam;
      base.F_y_and_lam(s, y, x(nb), fy, flam);
      J.block(0, 0, nb, nb) = fy;
      J.block(0, nb, nb, 1) = flam;
    } else {
      if (!base.F_y) throw std::runtime_error("needs F_y");
      J.block(0, 0, nb, nb) = base.F_y(s, y, x(nb));
      J.block(0, nb, nb, 1) = base_flam(base, s, y, x(nb));
    }
    J.block(nb + 1, 0, 1, nb) = vj->eval(s).transpose();
    return J;
  };
  p.F_lam = [vj, nb](double s, const Eigen::VectorXd&, double) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(nb + 2);
    out(nb + 1) = -vj->eval(s).squaredNorm();
    return out;
  };
  p.G = [base, tau, lam_j, nb](const Eigen::VectorXd& xa, const Eigen::VectorXd& xb, double sg) {
    Eigen::VectorXd out(nb + 2);
    out.segment(0, nb) = base.G(xa.segment(0, nb), xb.segment(0, nb), xb(nb));
    out(nb) = xa(nb + 1);
    out(nb + 1) = xb(nb + 1) + tau * (xb(nb) - lam_j - sg * tau);
    return out;
  };
  p.G_ya = [base, nb](const Eigen::VectorXd& xa, const Eigen::VectorXd& xb, double) {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(nb + 2, nb + 2);
    if (base.G_ya) J.block(0, 0, nb, nb) = base.G_ya(xa.segment(0, nb), xb.segment(0, nb), xb(nb));
    J(nb, nb + 1) = 1.0;
    return J;
  };
  p.G_yb = [base, tau, nb](const Eigen::VectorXd& xa, const Eigen::VectorXd& xb, double) {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(nb + 2, nb + 2);
    const Eigen::VectorXd ya = xa.segment(0, nb), yb = xb.segment(0, nb);
    if (base.G_yb) J.block(0, 0, nb, nb) = base.G_yb(ya, yb, xb(nb));
    J.block(0, nb, nb, 1) = base_glam(base, ya, yb, xb(nb));
    J(nb + 1, nb) = tau;
    J(nb + 1, nb + 1) = 1.0;
    return J;
  };
  p.G_lam = [tau, nb](const Eigen::VectorXd&, const Eigen::VectorXd&, double) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(nb + 2);
    out(nb + 1) = -tau * tau;
    return out;
  };
  return p;
}

Tangent orient_tangent(const Tangent& tan, const Tangent& tan_prev, int j, int& d) {
  double kappa;
  if (j == 1) {
    if ((d == -2 || d == 2) && tan.tau < 0.0) d = -d;
    kappa = static_cast<double>(d);
  } else {
    kappa = inner_product(tan_prev, tan);
  }
  if (kappa >= 0.0) return tan;
  Tangent out;
  out.v = MeshFunction(tan.v.mesh(), -tan.v.values(), tan.v.interp());
  out.tau = -tan.tau;
  return out;
}

namespace {

MeshFunction curve_to_aux(const CurvePoint& cp, double w_fill = 0.0) {
  const Eigen::VectorXd& m = cp.y.mesh();
  Eigen::MatrixXd vals(m.size(), cp.y.dim() + 2);
  vals.leftCols(cp.y.dim()) = cp.y.values();
  vals.col(cp.y.dim()).setConstant(cp.lam);
  vals.col(cp.y.dim() + 1).setConstant(w_fill);
  return MeshFunction(m, vals, cp.y.interp());
}

double bc_residual_of(const TpbvpProblem& prob, const CurvePoint& cp) {
  return prob.G(cp.y.eval(0.0), cp.y.eval(1.0), cp.lam).lpNorm<Eigen::Infinity>();
}

}  // namespace

ContinuationResult pac_bvp(const TpbvpProblem& prob, const CurvePoint& sol1,
                           const PacSettings& settings) {
  ContinuationResult res;
  res.solutions.push_back(sol1);
  double sigma = settings.sigma_init;
  int d = settings.d;
  SolverSettings tangent_solver = settings.solver;
  tangent_solver.rel_tol = settings.tangent_rel_tol > 0
                               ? settings.tangent_rel_tol
                               : std::max(1e-5, 100.0 * settings.solver.rel_tol);

  Tangent tan_prev{MeshFunction::zero(sol1.y.mesh(), prob.dim), 1.0};
  for (int j = 1; j <= settings.J; ++j) {
    const CurvePoint& cur = res.solutions.back();
    const TpbvpProblem tp = build_tangent_problem(prob, cur, tan_prev);
    const BvpResult tr =
        solve_linear_tpbvp(tp, tangent_guess(tan_prev, prob.dim + 2), tangent_solver);
    if (!tr.ok()) {
      res.status = PacStatus::SolverFailure;
      res.trace.push_back({j, cur.lam, sigma, 0, 0.0, "tangent solve failed"});
      return res;
    }
    CurvePoint tan_cp = strip_auxiliary(tr.solution);
    Tangent tan{tan_cp.y, tan_cp.lam};
    double kappa = norm(tan);
    if (j == 1) kappa = (d < 0 ? -1.0 : 1.0) * kappa;
    tan.v = MeshFunction(tan.v.mesh(), tan.v.values() / kappa, tan.v.interp());
    tan.tau /= kappa;

    bool reject = true;
    while (reject) {
      const CurvePoint pred = tangent_predictor(cur, tan, sigma);
      CurvePoint corr = pred;
      for (int k = 1; k <= settings.K; ++k) {
        const TpbvpProblem cp = build_corrector_problem(prob, corr, pred, tan);
        const MeshFunction zero_guess = MeshFunction::zero(corr.y.mesh(), prob.dim + 2);
        const BvpResult cr = solve_linear_tpbvp(cp, zero_guess, settings.solver);
        if (!cr.ok()) break;
        const CurvePoint delta = strip_auxiliary(cr.solution);
        corr = add(corr, delta.y, delta.lam);
        if (convergence_test(delta.y, delta.lam, pred, settings.gamma)) {
          reject = false;
          CurvePoint next = corr;
          if (settings.polish) {
            const TpbvpProblem pp = build_polish_problem(prob, corr, pred, tan);
            const BvpResult pr = solve_tpbvp(pp, curve_to_aux(corr), settings.solver);
            if (pr.ok()) next = strip_auxiliary(pr.solution);
          }
          res.solutions.push_back(next);
          res.trace.push_back({j, next.lam, sigma, k, bc_residual_of(prob, next), "accepted"});
          if (k <= settings.k_fast)
            sigma = std::min(settings.sigma_i * sigma, settings.sigma_max);
          break;
        }
      }
      if (reject) {
        sigma = settings.sigma_r * sigma;
        if (sigma < settings.sigma_min) {
          res.status = PacStatus::StepUnderflow;
          res.trace.push_back({j, cur.lam, sigma, settings.K, 0.0,
                               "tangent steplength too small"});
          return res;
        }
      }
    }
    tan_prev = tan;
  }
  return res;
}

ContinuationResult pac_s3_bvp(const TpbvpProblem& prob, const CurvePoint& sol1,
                              const SweepPacSettings& settings) {
  ContinuationResult res;
  res.solutions.push_back(sol1);
  SolverSettings tangent_solver = settings.solver;
  tangent_solver.rel_tol = settings.tangent_rel_tol > 0
                               ? settings.tangent_rel_tol
                               : std::max(1e-5, 100.0 * settings.solver.rel_tol);
  if (static_cast<int>(settings.sigma_max.size()) < settings.J)
    throw std::invalid_argument("pac_s3_bvp: sigma_max shorter than J");
  int d = settings.d;
  Tangent tan_prev;
  bool have_prev = false;

  for (int j = 1; j <= settings.J; ++j) {
    const CurvePoint& cur = res.solutions.back();
    // Newton on the arclength-normalized tangent problem needs a guess with
    // a nonzero v part; bootstrap it from the linear pseudo-arclength tangent
    // at the current point (referenced against the previous unit tangent).
    const Tangent reference =
        have_prev ? tan_prev : Tangent{MeshFunction::zero(cur.y.mesh(), prob.dim), 1.0};
    Tangent guess_tan;
    {
      const TpbvpProblem lin = build_tangent_problem(prob, cur, reference);
      const BvpResult lr =
          solve_linear_tpbvp(lin, tangent_guess(reference, prob.dim + 2), tangent_solver);
      if (!lr.ok()) {
        res.status = PacStatus::SolverFailure;
        res.trace.push_back({j, cur.lam, 0.0, 0, 0.0, "bootstrap tangent solve failed"});
        return res;
      }
      const CurvePoint lt = strip_auxiliary(lr.solution);
      guess_tan = normalize_tangent(Tangent{lt.y, lt.lam});
    }
    const TpbvpProblem tp = build_unit_tangent_problem(prob, cur);
    const BvpResult tr =
        solve_tpbvp(tp, tangent_guess(guess_tan, prob.dim + 2), tangent_solver);
    if (!tr.ok()) {
      res.status = PacStatus::SolverFailure;
      res.trace.push_back({j, cur.lam, 0.0, 0, 0.0, "unit tangent solve failed"});
      return res;
    }
    const CurvePoint tan_cp = strip_auxiliary(tr.solution);
    Tangent tan{tan_cp.y, tan_cp.lam};
    tan = orient_tangent(tan, have_prev ? tan_prev : Tangent{tan.v, tan.tau}, j, d);

    const double smax = settings.sigma_max[static_cast<size_t>(j - 1)];
    const TpbvpProblem sp = build_sweep_problem(prob, cur, tan);
    SweepSettings sw;
    sw.param_start = 0.0;
    sw.param_max = smax;
    sw.initial_step = settings.sweep_initial_step_frac * smax;
    sw.min_step = std::max(settings.sweep_min_step, 1e-12 * smax);
    sw.intermediate_rel_tol = 100.0 * settings.solver.rel_tol;
    const SweepResult sr = solve_sweep(sp, curve_to_aux(cur), sw, settings.solver);
    if (!sr.ok() || sr.solutions.size() < 2) {
      // could not move at all from the current solution
      res.status = PacStatus::SolverFailure;
      res.trace.push_back({j, cur.lam, 0.0, 0, 0.0, "sweep failed"});
      return res;
    }
    const double sigma_reached = sr.solutions.back().first;
    const CurvePoint next = strip_auxiliary(sr.solutions.back().second);
    res.solutions.push_back(next);
    res.trace.push_back({j, next.lam, sigma_reached, 0, bc_residual_of(prob, next),
                         sr.halt == SweepHalt::Completed ? "completed" : "turning point"});
    tan_prev = tan;
    have_prev = true;
  }
  return res;
}

}  // namespace rollpac
