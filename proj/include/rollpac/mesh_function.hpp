#pragma once

#include <Eigen/Core>
#include <stdexcept>

namespace rollpac {

enum class Interp { Pchip, Linear };

/// A vector-valued function on [0,1] sampled on an ordered mesh, with
/// off-mesh evaluation by monotone cubic (pchip) or linear interpolation.
class MeshFunction {
public:
  MeshFunction() = default;
  MeshFunction(Eigen::VectorXd mesh, Eigen::MatrixXd values, Interp interp = Interp::Pchip);

  static MeshFunction zero(const Eigen::VectorXd& mesh, int dim, Interp interp = Interp::Pchip);
  static MeshFunction constant(const Eigen::VectorXd& mesh, const Eigen::VectorXd& value,
                               Interp interp = Interp::Pchip);
  /// Cubic with caller-supplied node derivatives (e.g. ODE velocities from a
  /// collocation solve), fourth-order accurate between nodes.
  static MeshFunction with_slopes(Eigen::VectorXd mesh, Eigen::MatrixXd values,
                                  Eigen::MatrixXd slopes);

  int dim() const { return static_cast<int>(values_.cols()); }
  int size() const { return static_cast<int>(mesh_.size()); }
  const Eigen::VectorXd& mesh() const { return mesh_; }
  const Eigen::MatrixXd& values() const { return values_; }
  Interp interp() const { return interp_; }

  Eigen::VectorXd eval(double s) const;
  Eigen::VectorXd deriv(double s) const;
  void eval_into(double s, Eigen::Ref<Eigen::VectorXd> out) const;
  void deriv_into(double s, Eigen::Ref<Eigen::VectorXd> out) const;

  /// Node slopes used by the cubic evaluation (empty in linear mode).
  const Eigen::MatrixXd& slopes() const { return slopes_; }
  /// Restriction to the leading columns, keeping the interpolant slopes.
  MeshFunction left_cols(int k) const;

  MeshFunction resample(const Eigen::VectorXd& new_mesh) const;
  double max_abs() const { return values_.size() ? values_.cwiseAbs().maxCoeff() : 0.0; }

private:
  int find_interval(double s) const;

  Eigen::VectorXd mesh_;
  Eigen::MatrixXd values_;  // size() x dim()
  Eigen::MatrixXd slopes_;  // node derivatives for cubic evaluation
  Interp interp_ = Interp::Pchip;
};

/// Merge two strictly increasing meshes, deduplicating nearly equal points.
Eigen::VectorXd union_mesh(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Composite trapezoid rule over the sample values.
double trapz(const Eigen::VectorXd& mesh, const Eigen::VectorXd& samples);
/// Running trapezoid integral, first entry 0.
Eigen::VectorXd cumtrapz(const Eigen::VectorXd& mesh, const Eigen::VectorXd& samples);

/// A point (y, lambda) of the product space L^2([0,1],R^n) x R.
struct CurvePoint {
  MeshFunction y;
  double lam = 0.0;
};

/// A tangent (v, tau) in the same product space.
struct Tangent {
  MeshFunction v;
  double tau = 0.0;
};

/// <(y,lam),(q,mu)> = integral of y^T q ds + lam*mu, trapezoid on the union mesh.
double inner_product(const MeshFunction& py, double plam, const MeshFunction& qy, double qlam);
double inner_product(const CurvePoint& p, const CurvePoint& q);
double inner_product(const Tangent& p, const Tangent& q);
double inner_product(const Tangent& p, const CurvePoint& q);

double norm(const MeshFunction& y, double lam);
double norm(const CurvePoint& p);
double norm(const Tangent& p);

/// p + sigma*(v,tau) on the union of both meshes.
CurvePoint axpy(const CurvePoint& p, double sigma, const Tangent& t);
/// p + (dy, dlam) on the union of both meshes.
CurvePoint add(const CurvePoint& p, const MeshFunction& dy, double dlam);

}  // namespace rollpac
