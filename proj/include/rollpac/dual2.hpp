#pragma once

#include <Eigen/Core>
#include <cassert>
#include <cmath>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

namespace rollpac {

namespace detail {

// Thread-local pool of fixed-size Hessian blocks; second-order arithmetic
// churns through temporaries far too quickly for malloc.
class HessPool {
public:
  static constexpr int kBlockDoubles = 64 * 64;

  static double* acquire() {
    auto& self = instance();
    if (self.free_.empty()) {
      self.owned_.push_back(std::make_unique<double[]>(kBlockDoubles));
      return self.owned_.back().get();
    }
    double* p = self.free_.back();
    self.free_.pop_back();
    return p;
  }
  static void release(double* p) {
    if (p) instance().free_.push_back(p);
  }

private:
  static HessPool& instance() {
    thread_local HessPool pool;
    return pool;
  }
  std::vector<std::unique_ptr<double[]>> owned_;
  std::vector<double*> free_;
};

}  // namespace detail

/// Forward-mode scalar carrying a value, a gradient, and (optionally) a
/// Hessian with respect to a set of active variables fixed at seed time.
/// A default-constructed or double-constructed Dual2 is a constant: its
/// gradient and Hessian are empty and treated as zero.
class Dual2 {
public:
  static constexpr int kMaxActive = 64;
  using Grad = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxActive, 1>;
  using HessMap = Eigen::Map<Eigen::MatrixXd>;
  using ConstHessMap = Eigen::Map<const Eigen::MatrixXd>;

  Dual2() = default;
  Dual2(double v) : val_(v) {}  // NOLINT: implicit by design

  Dual2(const Dual2& o) : val_(o.val_), grad_(o.grad_) {
    if (o.hess_) {
      acquire_hess(o.hess_n_);
      std::copy(o.hess_, o.hess_ + hess_n_ * hess_n_, hess_);
    }
  }
  Dual2(Dual2&& o) noexcept : val_(o.val_), grad_(std::move(o.grad_)), hess_(o.hess_),
                              hess_n_(o.hess_n_) {
    o.hess_ = nullptr;
    o.hess_n_ = 0;
  }
  Dual2& operator=(const Dual2& o) {
    if (this == &o) return *this;
    val_ = o.val_;
    grad_ = o.grad_;
    if (o.hess_) {
      acquire_hess(o.hess_n_);
      std::copy(o.hess_, o.hess_ + hess_n_ * hess_n_, hess_);
    } else {
      drop_hess();
    }
    return *this;
  }
  Dual2& operator=(Dual2&& o) noexcept {
    if (this == &o) return *this;
    val_ = o.val_;
    grad_ = std::move(o.grad_);
    std::swap(hess_, o.hess_);
    std::swap(hess_n_, o.hess_n_);
    return *this;
  }
  ~Dual2() { detail::HessPool::release(hess_); }

  /// Seed active variable `index` out of `n_active`, optionally tracking
  /// second derivatives.
  static Dual2 variable(double v, int index, int n_active, bool with_hess) {
    if (n_active > kMaxActive) throw std::invalid_argument("Dual2: too many active variables");
    Dual2 d(v);
    d.grad_.setZero(n_active);
    d.grad_(index) = 1.0;
    if (with_hess) {
      d.acquire_hess(n_active);
      std::fill(d.hess_, d.hess_ + n_active * n_active, 0.0);
    }
    return d;
  }

  double value() const { return val_; }
  bool is_constant() const { return grad_.size() == 0; }
  bool has_hess() const { return hess_ != nullptr; }
  int actives() const { return static_cast<int>(grad_.size()); }

  /// Gradient w.r.t. the active variables; zero vector if constant.
  Grad gradient(int n_active) const {
    if (is_constant()) return Grad::Zero(n_active);
    return grad_;
  }
  const Grad& grad_raw() const { return grad_; }

  /// Hessian w.r.t. the active variables; zero matrix if absent.
  Eigen::MatrixXd hessian(int n_active) const {
    if (!has_hess()) return Eigen::MatrixXd::Zero(n_active, n_active);
    return ConstHessMap(hess_, hess_n_, hess_n_);
  }

  Dual2 operator-() const {
    Dual2 r(-val_);
    r.grad_ = -grad_;
    if (has_hess()) {
      r.acquire_hess(hess_n_);
      r.hess_map() = -hess_map();
    }
    return r;
  }

  friend Dual2 operator+(const Dual2& a, const Dual2& b) {
    Dual2 r(a.val_ + b.val_);
    combine_linear(a, b, 1.0, 1.0, r);
    return r;
  }
  friend Dual2 operator-(const Dual2& a, const Dual2& b) {
    Dual2 r(a.val_ - b.val_);
    combine_linear(a, b, 1.0, -1.0, r);
    return r;
  }

  friend Dual2 operator*(const Dual2& a, const Dual2& b) {
    Dual2 r(a.val_ * b.val_);
    combine_linear(a, b, b.val_, a.val_, r);
    if (!a.is_constant() && !b.is_constant() && r.has_hess()) {
      r.hess_map().noalias() += a.grad_ * b.grad_.transpose();
      r.hess_map().noalias() += b.grad_ * a.grad_.transpose();
    }
    return r;
  }

  friend Dual2 operator/(const Dual2& a, const Dual2& b) {
    const double w = a.val_ / b.val_;
    Dual2 r(w);
    combine_linear(a, b, 1.0 / b.val_, -w / b.val_, r);
    if (!b.is_constant() && r.has_hess()) {
      // w = a/b: w'' = a''/b - w b''/b - (w' b'^T + b' w'^T)/b
      const Grad bg = b.grad_ / b.val_;
      r.hess_map().noalias() -= r.grad_ * bg.transpose();
      r.hess_map().noalias() -= bg * r.grad_.transpose();
    }
    return r;
  }

  friend Dual2 operator+(const Dual2& a, double b) { return a + Dual2(b); }
  friend Dual2 operator+(double a, const Dual2& b) { return Dual2(a) + b; }
  friend Dual2 operator-(const Dual2& a, double b) { return a - Dual2(b); }
  friend Dual2 operator-(double a, const Dual2& b) { return Dual2(a) - b; }
  friend Dual2 operator*(const Dual2& a, double b) { return a * Dual2(b); }
  friend Dual2 operator*(double a, const Dual2& b) { return Dual2(a) * b; }
  friend Dual2 operator/(const Dual2& a, double b) { return a * Dual2(1.0 / b); }
  friend Dual2 operator/(double a, const Dual2& b) { return Dual2(a) / b; }

  Dual2& operator+=(const Dual2& o) { *this = *this + o; return *this; }
  Dual2& operator-=(const Dual2& o) { *this = *this - o; return *this; }
  Dual2& operator*=(const Dual2& o) { *this = *this * o; return *this; }
  Dual2& operator/=(const Dual2& o) { *this = *this / o; return *this; }

  friend bool operator<(const Dual2& a, const Dual2& b) { return a.val_ < b.val_; }
  friend bool operator>(const Dual2& a, const Dual2& b) { return a.val_ > b.val_; }
  friend bool operator<=(const Dual2& a, const Dual2& b) { return a.val_ <= b.val_; }
  friend bool operator>=(const Dual2& a, const Dual2& b) { return a.val_ >= b.val_; }

  /// Chain rule for a unary elementary function with given f(v), f'(v), f''(v).
  static Dual2 chain(const Dual2& u, double f, double fp, double fpp) {
    Dual2 r(f);
    if (u.is_constant()) return r;
    r.grad_ = fp * u.grad_;
    if (u.has_hess()) {
      r.acquire_hess(u.hess_n_);
      r.hess_map() = fp * u.hess_map();
      r.hess_map().noalias() += fpp * (u.grad_ * u.grad_.transpose());
    }
    return r;
  }

private:
  HessMap hess_map() { return HessMap(hess_, hess_n_, hess_n_); }
  ConstHessMap hess_map() const { return ConstHessMap(hess_, hess_n_, hess_n_); }

  void acquire_hess(int n) {
    if (!hess_) hess_ = detail::HessPool::acquire();
    hess_n_ = n;
  }
  void drop_hess() {
    detail::HessPool::release(hess_);
    hess_ = nullptr;
    hess_n_ = 0;
  }

  // r.grad = ca*a.grad + cb*b.grad, r.hess likewise; empty operands are zero.
  static void combine_linear(const Dual2& a, const Dual2& b, double ca, double cb, Dual2& r) {
    if (a.is_constant() && b.is_constant()) return;
    if (a.is_constant()) {
      r.grad_ = cb * b.grad_;
      if (b.has_hess()) {
        r.acquire_hess(b.hess_n_);
        r.hess_map() = cb * b.hess_map();
      }
      return;
    }
    if (b.is_constant()) {
      r.grad_ = ca * a.grad_;
      if (a.has_hess()) {
        r.acquire_hess(a.hess_n_);
        r.hess_map() = ca * a.hess_map();
      }
      return;
    }
    assert(a.grad_.size() == b.grad_.size() && "Dual2: mixed active counts in one tape");
    r.grad_ = ca * a.grad_ + cb * b.grad_;
    if (a.has_hess() || b.has_hess()) {
      if (a.has_hess() && b.has_hess()) {
        r.acquire_hess(a.hess_n_);
        r.hess_map() = ca * a.hess_map() + cb * b.hess_map();
      } else if (a.has_hess()) {
        r.acquire_hess(a.hess_n_);
        r.hess_map() = ca * a.hess_map();
      } else {
        r.acquire_hess(b.hess_n_);
        r.hess_map() = cb * b.hess_map();
      }
    }
  }

  double val_ = 0.0;
  Grad grad_;
  double* hess_ = nullptr;
  int hess_n_ = 0;
};

inline Dual2 sin(const Dual2& u) {
  const double s = std::sin(u.value()), c = std::cos(u.value());
  return Dual2::chain(u, s, c, -s);
}
inline Dual2 cos(const Dual2& u) {
  const double s = std::sin(u.value()), c = std::cos(u.value());
  return Dual2::chain(u, c, -s, -c);
}
inline Dual2 tan(const Dual2& u) {
  const double t = std::tan(u.value()), sec2 = 1.0 + t * t;
  return Dual2::chain(u, t, sec2, 2.0 * t * sec2);
}
inline Dual2 tanh(const Dual2& u) {
  const double t = std::tanh(u.value()), d = 1.0 - t * t;
  return Dual2::chain(u, t, d, -2.0 * t * d);
}
inline Dual2 exp(const Dual2& u) {
  const double e = std::exp(u.value());
  return Dual2::chain(u, e, e, e);
}
inline Dual2 log(const Dual2& u) {
  const double v = u.value();
  return Dual2::chain(u, std::log(v), 1.0 / v, -1.0 / (v * v));
}
inline Dual2 sqrt(const Dual2& u) {
  const double s = std::sqrt(u.value());
  return Dual2::chain(u, s, 0.5 / s, -0.25 / (s * s * s));
}
inline Dual2 pow(const Dual2& u, double e) {
  const double v = u.value();
  return Dual2::chain(u, std::pow(v, e), e * std::pow(v, e - 1.0),
                      e * (e - 1.0) * std::pow(v, e - 2.0));
}
inline Dual2 abs(const Dual2& u) {
  const double sgn = u.value() < 0.0 ? -1.0 : 1.0;
  return Dual2::chain(u, std::fabs(u.value()), sgn, 0.0);
}
/// C^2 cutoff [max{0,v}]^4.
inline Dual2 relu4(const Dual2& u) {
  const double v = u.value();
  if (v <= 0.0) return Dual2::chain(u, 0.0, 0.0, 0.0);
  return Dual2::chain(u, v * v * v * v, 4.0 * v * v * v, 12.0 * v * v);
}
inline double value_of(const Dual2& d) { return d.value(); }
inline double value_of(double d) { return d; }

/// Sequentially assigns active-variable indices across scalars and vectors.
class ActiveSeeder {
public:
  ActiveSeeder(int total, bool with_hess) : total_(total), with_hess_(with_hess) {}

  Dual2 scalar(double v) { return Dual2::variable(v, next_++, total_, with_hess_); }

  std::vector<Dual2> vector(const Eigen::VectorXd& v) {
    std::vector<Dual2> out;
    out.reserve(static_cast<size_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(scalar(v(i)));
    return out;
  }

  int assigned() const { return next_; }
  int total() const { return total_; }

private:
  int total_;
  bool with_hess_;
  int next_ = 0;
};

/// Constant (inactive) lift of a double vector.
inline std::vector<Dual2> constants(const Eigen::VectorXd& v) {
  return std::vector<Dual2>(v.data(), v.data() + v.size());
}

}  // namespace rollpac
