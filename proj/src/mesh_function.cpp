#include "rollpac/mesh_function.hpp"

#include <algorithm>
#include <cmath>

namespace rollpac {

namespace {

// Fritsch-Carlson shape-preserving node slopes, one column at a time.
Eigen::MatrixXd pchip_slopes(const Eigen::VectorXd& x, const Eigen::MatrixXd& y) {
  const int n = static_cast<int>(x.size());
  const int dim = static_cast<int>(y.cols());
  Eigen::MatrixXd d(n, dim);
  if (n == 2) {
    for (int c = 0; c < dim; ++c) {
      const double s = (y(1, c) - y(0, c)) / (x(1) - x(0));
      d(0, c) = d(1, c) = s;
    }
    return d;
  }
  for (int c = 0; c < dim; ++c) {
    Eigen::VectorXd h(n - 1), del(n - 1);
    for (int i = 0; i < n - 1; ++i) {
      h(i) = x(i + 1) - x(i);
      del(i) = (y(i + 1, c) - y(i, c)) / h(i);
    }
    for (int i = 1; i < n - 1; ++i) {
      if (del(i - 1) * del(i) <= 0.0) {
        d(i, c) = 0.0;
      } else {
        const double w1 = 2.0 * h(i) + h(i - 1);
        const double w2 = h(i) + 2.0 * h(i - 1);
        d(i, c) = (w1 + w2) / (w1 / del(i - 1) + w2 / del(i));
      }
    }
    // one-sided three-point ends, clipped for shape preservation
    auto end_slope = [](double h0, double h1, double d0, double d1) {
      double s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
      if (s * d0 <= 0.0) s = 0.0;
      else if (d0 * d1 < 0.0 && std::fabs(s) > 3.0 * std::fabs(d0)) s = 3.0 * d0;
      return s;
    };
    d(0, c) = end_slope(h(0), h(1), del(0), del(1));
    d(n - 1, c) = end_slope(h(n - 2), h(n - 3), del(n - 2), del(n - 3));
  }
  return d;
}

}  // namespace

MeshFunction::MeshFunction(Eigen::VectorXd mesh, Eigen::MatrixXd values, Interp interp)
    : mesh_(std::move(mesh)), values_(std::move(values)), interp_(interp) {
  if (mesh_.size() < 2) throw std::invalid_argument("MeshFunction: mesh needs at least 2 points");
  if (values_.rows() != mesh_.size())
    throw std::invalid_argument("MeshFunction: values/mesh size mismatch");
  if (values_.cols() < 1) throw std::invalid_argument("MeshFunction: dim must be >= 1");
  for (Eigen::Index i = 0; i + 1 < mesh_.size(); ++i)
    if (!(mesh_(i) < mesh_(i + 1)))
      throw std::invalid_argument("MeshFunction: mesh must be strictly increasing");
  if (interp_ == Interp::Pchip) slopes_ = pchip_slopes(mesh_, values_);
}

MeshFunction MeshFunction::zero(const Eigen::VectorXd& mesh, int dim, Interp interp) {
  return MeshFunction(mesh, Eigen::MatrixXd::Zero(mesh.size(), dim), interp);
}

MeshFunction MeshFunction::constant(const Eigen::VectorXd& mesh, const Eigen::VectorXd& value,
                                    Interp interp) {
  Eigen::MatrixXd v(mesh.size(), value.size());
  v.rowwise() = value.transpose();
  return MeshFunction(mesh, v, interp);
}

MeshFunction MeshFunction::left_cols(int k) const {
  if (interp_ == Interp::Linear) return MeshFunction(mesh_, values_.leftCols(k), interp_);
  return with_slopes(mesh_, values_.leftCols(k), slopes_.leftCols(k));
}

MeshFunction MeshFunction::with_slopes(Eigen::VectorXd mesh, Eigen::MatrixXd values,
                                       Eigen::MatrixXd slopes) {
  MeshFunction f(std::move(mesh), std::move(values), Interp::Pchip);
  if (slopes.rows() != f.values_.rows() || slopes.cols() != f.values_.cols())
    throw std::invalid_argument("MeshFunction: slopes shape mismatch");
  f.slopes_ = std::move(slopes);
  return f;
}

int MeshFunction::find_interval(double s) const {
  const int n = size();
  if (s <= mesh_(0)) return 0;
  if (s >= mesh_(n - 1)) return n - 2;
  const double* begin = mesh_.data();
  const double* it = std::upper_bound(begin, begin + n, s);
  int i = static_cast<int>(it - begin) - 1;
  return std::min(std::max(i, 0), n - 2);
}

void MeshFunction::eval_into(double s, Eigen::Ref<Eigen::VectorXd> out) const {
  const int i = find_interval(s);
  const double h = mesh_(i + 1) - mesh_(i);
  const double t = (s - mesh_(i)) / h;
  if (interp_ == Interp::Linear) {
    out = (1.0 - t) * values_.row(i).transpose() + t * values_.row(i + 1).transpose();
    return;
  }
  const double t2 = t * t, t3 = t2 * t;
  const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
  const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
  out = h00 * values_.row(i).transpose() + (h10 * h) * slopes_.row(i).transpose() +
        h01 * values_.row(i + 1).transpose() + (h11 * h) * slopes_.row(i + 1).transpose();
}

void MeshFunction::deriv_into(double s, Eigen::Ref<Eigen::VectorXd> out) const {
  const int i = find_interval(s);
  const double h = mesh_(i + 1) - mesh_(i);
  const double t = (s - mesh_(i)) / h;
  if (interp_ == Interp::Linear) {
    out = (values_.row(i + 1) - values_.row(i)).transpose() / h;
    return;
  }
  const double t2 = t * t;
  const double d00 = (6 * t2 - 6 * t) / h, d10 = 3 * t2 - 4 * t + 1;
  const double d01 = (-6 * t2 + 6 * t) / h, d11 = 3 * t2 - 2 * t;
  out = d00 * values_.row(i).transpose() + d10 * slopes_.row(i).transpose() +
        d01 * values_.row(i + 1).transpose() + d11 * slopes_.row(i + 1).transpose();
}

Eigen::VectorXd MeshFunction::eval(double s) const {
  Eigen::VectorXd out(dim());
  eval_into(s, out);
  return out;
}

Eigen::VectorXd MeshFunction::deriv(double s) const {
  Eigen::VectorXd out(dim());
  deriv_into(s, out);
  return out;
}

MeshFunction MeshFunction::resample(const Eigen::VectorXd& new_mesh) const {
  Eigen::MatrixXd v(new_mesh.size(), dim());
  Eigen::VectorXd row(dim());
  for (Eigen::Index i = 0; i < new_mesh.size(); ++i) {
    eval_into(new_mesh(i), row);
    v.row(i) = row.transpose();
  }
  return MeshFunction(new_mesh, std::move(v), interp_);
}

Eigen::VectorXd union_mesh(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  std::vector<double> merged;
  merged.reserve(static_cast<size_t>(a.size() + b.size()));
  merged.insert(merged.end(), a.data(), a.data() + a.size());
  merged.insert(merged.end(), b.data(), b.data() + b.size());
  std::sort(merged.begin(), merged.end());
  const double tol = 1e-9;  // near-duplicate points would poison collocation meshes
  std::vector<double> out;
  out.reserve(merged.size());
  for (double s : merged)
    if (out.empty() || s - out.back() > tol) out.push_back(s);
  out.back() = merged.back();  // keep the exact right endpoint
  return Eigen::Map<Eigen::VectorXd>(out.data(), static_cast<Eigen::Index>(out.size()));
}

double trapz(const Eigen::VectorXd& mesh, const Eigen::VectorXd& samples) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i + 1 < mesh.size(); ++i)
    acc += 0.5 * (mesh(i + 1) - mesh(i)) * (samples(i) + samples(i + 1));
  return acc;
}

Eigen::VectorXd cumtrapz(const Eigen::VectorXd& mesh, const Eigen::VectorXd& samples) {
  Eigen::VectorXd out(mesh.size());
  out(0) = 0.0;
  for (Eigen::Index i = 0; i + 1 < mesh.size(); ++i)
    out(i + 1) = out(i) + 0.5 * (mesh(i + 1) - mesh(i)) * (samples(i) + samples(i + 1));
  return out;
}

double inner_product(const MeshFunction& py, double plam, const MeshFunction& qy, double qlam) {
  if (py.dim() != qy.dim()) throw std::invalid_argument("inner_product: dimension mismatch");
  const Eigen::VectorXd m = union_mesh(py.mesh(), qy.mesh());
  Eigen::VectorXd dots(m.size()), pv(py.dim()), qv(qy.dim());
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    py.eval_into(m(i), pv);
    qy.eval_into(m(i), qv);
    dots(i) = pv.dot(qv);
  }
  return trapz(m, dots) + plam * qlam;
}

double inner_product(const CurvePoint& p, const CurvePoint& q) {
  return inner_product(p.y, p.lam, q.y, q.lam);
}
double inner_product(const Tangent& p, const Tangent& q) {
  return inner_product(p.v, p.tau, q.v, q.tau);
}
double inner_product(const Tangent& p, const CurvePoint& q) {
  return inner_product(p.v, p.tau, q.y, q.lam);
}

double norm(const MeshFunction& y, double lam) { return std::sqrt(inner_product(y, lam, y, lam)); }
double norm(const CurvePoint& p) { return norm(p.y, p.lam); }
double norm(const Tangent& p) { return norm(p.v, p.tau); }

CurvePoint axpy(const CurvePoint& p, double sigma, const Tangent& t) {
  if (p.y.dim() != t.v.dim()) throw std::invalid_argument("axpy: dimension mismatch");
  const Eigen::VectorXd m = union_mesh(p.y.mesh(), t.v.mesh());
  Eigen::MatrixXd v(m.size(), p.y.dim());
  Eigen::VectorXd a(p.y.dim()), b(p.y.dim());
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    p.y.eval_into(m(i), a);
    t.v.eval_into(m(i), b);
    v.row(i) = (a + sigma * b).transpose();
  }
  return CurvePoint{MeshFunction(m, std::move(v), p.y.interp()), p.lam + sigma * t.tau};
}

CurvePoint add(const CurvePoint& p, const MeshFunction& dy, double dlam) {
  Tangent t{dy, dlam};
  return axpy(p, 1.0, t);
}

}  // namespace rollpac
