#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "doctest.h"
#include "rollpac/dual2.hpp"
#include "rollpac/mesh_function.hpp"
#include "rollpac/rigid.hpp"

using namespace rollpac;

namespace {

Eigen::VectorXd linspace(int n) { return Eigen::VectorXd::LinSpaced(n, 0.0, 1.0); }

// test function used for derivative cross-checks
Dual2 smooth_fn(std::span<const Dual2> x) {
  using rollpac::cos;
  using rollpac::exp;
  using rollpac::sin;
  using rollpac::sqrt;
  using rollpac::tanh;
  return sin(x[0] * x[1]) + exp(x[2] * 0.3) * cos(x[0]) + tanh(x[1] - x[2]) +
         sqrt(x[0] + 2.0) * x[2] + relu4(x[1] - 0.2) + x[0] * x[1] / (x[2] + 3.0);
}

double smooth_fn_d(const Eigen::Vector3d& v) {
  std::vector<Dual2> x = {Dual2(v(0)), Dual2(v(1)), Dual2(v(2))};
  return smooth_fn(x).value();
}

}  // namespace

TEST_CASE("dual2 gradients and hessians match finite differences") {
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> dist(-0.8, 0.8);
  for (int trial = 0; trial < 25; ++trial) {
    Eigen::Vector3d v(dist(rng), dist(rng), dist(rng));
    ActiveSeeder seeder(3, true);
    std::vector<Dual2> x = seeder.vector(v);
    const Dual2 y = smooth_fn(x);

    const double h = 1e-6;
    for (int i = 0; i < 3; ++i) {
      Eigen::Vector3d vp = v, vm = v;
      vp(i) += h;
      vm(i) -= h;
      const double fd = (smooth_fn_d(vp) - smooth_fn_d(vm)) / (2 * h);
      const double ad = y.gradient(3)(i);
      CHECK(std::fabs(ad - fd) <= 1e-6 * (1.0 + std::fabs(fd)));
    }
    const double h2 = 1e-4;  // wider step: the cross-difference oracle is roundoff-limited
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        Eigen::Vector3d vpp = v, vpm = v, vmp = v, vmm = v;
        vpp(i) += h2; vpp(j) += h2;
        vpm(i) += h2; vpm(j) -= h2;
        vmp(i) -= h2; vmp(j) += h2;
        vmm(i) -= h2; vmm(j) -= h2;
        const double fd =
            (smooth_fn_d(vpp) - smooth_fn_d(vpm) - smooth_fn_d(vmp) + smooth_fn_d(vmm)) /
            (4 * h2 * h2);
        const double ad = y.hessian(3)(i, j);
        CHECK(std::fabs(ad - fd) <= 1e-4 * (1.0 + std::fabs(fd)));
      }
  }
}

TEST_CASE("dual2 hessian is symmetric") {
  ActiveSeeder seeder(3, true);
  std::vector<Dual2> x = seeder.vector(Eigen::Vector3d(0.3, -0.2, 0.7));
  const Dual2 y = smooth_fn(x);
  const Eigen::MatrixXd H = y.hessian(3);
  CHECK((H - H.transpose()).cwiseAbs().maxCoeff() <= 1e-14 * (1.0 + H.cwiseAbs().maxCoeff()));
}

TEST_CASE("inner product examples") {
  const Eigen::VectorXd m = linspace(11);
  const MeshFunction zero = MeshFunction::zero(m, 1);
  CHECK(inner_product(zero, 1.0, zero, 1.0) == doctest::Approx(1.0));

  Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(11, 1);
  const MeshFunction one(m, ones);
  CHECK(inner_product(one, 0.0, one, 0.0) == doctest::Approx(1.0));

  Eigen::MatrixXd id = m;
  const MeshFunction ramp(m, id);
  // integral of s ds = 1/2, plus 2*3
  CHECK(inner_product(ramp, 2.0, one, 3.0) == doctest::Approx(6.5));
}

TEST_CASE("norm examples and homogeneity") {
  const Eigen::VectorXd m = linspace(9);
  const MeshFunction zero = MeshFunction::zero(m, 1);
  CHECK(norm(zero, 1.0) == doctest::Approx(1.0));
  CHECK(norm(zero, -3.0) == doctest::Approx(3.0));
  const MeshFunction one(m, Eigen::MatrixXd::Ones(9, 1));
  CHECK(norm(one, 0.0) == doctest::Approx(1.0));

  std::mt19937 rng(7);
  std::normal_distribution<double> g;
  Eigen::MatrixXd vals(9, 2);
  for (int i = 0; i < 9; ++i) vals.row(i) << g(rng), g(rng);
  const MeshFunction f(m, vals);
  const double alpha = -2.75;
  Eigen::MatrixXd scaled = alpha * vals;
  const MeshFunction fs(m, scaled);
  CHECK(norm(fs, alpha * 0.4) == doctest::Approx(std::fabs(alpha) * norm(f, 0.4)));
}

TEST_CASE("inner product is symmetric bilinear") {
  const Eigen::VectorXd ma = linspace(8);
  const Eigen::VectorXd mb = linspace(13);
  std::mt19937 rng(11);
  std::normal_distribution<double> g;
  Eigen::MatrixXd va(8, 2), vb(13, 2);
  for (int i = 0; i < 8; ++i) va.row(i) << g(rng), g(rng);
  for (int i = 0; i < 13; ++i) vb.row(i) << g(rng), g(rng);
  const MeshFunction fa(ma, va), fb(mb, vb);
  CHECK(inner_product(fa, 1.5, fb, -0.3) == doctest::Approx(inner_product(fb, -0.3, fa, 1.5)));
  // bilinearity in the first slot
  Eigen::MatrixXd v2 = 2.0 * va;
  const MeshFunction fa2(ma, v2);
  CHECK(inner_product(fa2, 3.0, fb, -0.3) ==
        doctest::Approx(2.0 * inner_product(fa, 1.5, fb, -0.3) -
                        2.0 * 1.5 * (-0.3) + 3.0 * (-0.3)));
}

TEST_CASE("hat and hat_sq") {
  const Vec3T<double> e3 = {0, 0, 1};
  const auto h2 = hat_sq(e3);
  CHECK(h2[0] == doctest::Approx(-1));
  CHECK(h2[4] == doctest::Approx(-1));
  CHECK(h2[8] == doctest::Approx(0));
  CHECK(h2[1] == doctest::Approx(0));

  const Vec3T<double> zero = {0, 0, 0};
  for (double c : hat_sq(zero)) CHECK(c == doctest::Approx(0));

  const Vec3T<double> v = {1, 2, 3};
  const auto H = hat(v);
  // product oracle: hat(v)*hat(v)
  const auto HS = hat_sq(v);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) {
      double prod = 0;
      for (int k = 0; k < 3; ++k) prod += H[r * 3 + k] * H[k * 3 + c];
      CHECK(HS[r * 3 + c] == doctest::Approx(prod));
    }
}

TEST_CASE("project12") {
  const Vec3T<double> v = {1, 2, 3};
  auto p = project12(v);
  CHECK(p[0] == 1);
  CHECK(p[1] == 2);
  const Vec3T<double> w = {0, 0, 9};
  auto q = project12(w);
  CHECK(q[0] == 0);
  CHECK(q[1] == 0);
  const Vec3T<double> e2 = {0, 1, 0};
  auto r = project12(e2);
  CHECK(r[0] == 0);
  CHECK(r[1] == 1);
}

TEST_CASE("quat_rotate") {
  const Versor id;
  const Eigen::Vector3d y(0.3, -1.2, 2.0);
  CHECK((quat_rotate(id, y) - y).norm() <= 1e-15);

  const Versor qz = Versor::axis_angle(Eigen::Vector3d(0, 0, 1), M_PI / 2);
  const Eigen::Vector3d e1(1, 0, 0);
  // oracle: the 3x3 rotation matrix
  Eigen::Matrix3d Rz;
  Rz = Eigen::AngleAxisd(M_PI / 2, Eigen::Vector3d::UnitZ());
  CHECK((quat_rotate(qz, e1) - Rz * e1).norm() <= 1e-14);
  CHECK((quat_rotate(qz, e1) - Eigen::Vector3d(0, 1, 0)).norm() <= 1e-14);

  std::mt19937 rng(5);
  std::normal_distribution<double> g;
  for (int i = 0; i < 20; ++i) {
    Eigen::Vector3d axis(g(rng), g(rng), g(rng));
    const Versor q = Versor::axis_angle(axis, g(rng));
    const Eigen::Vector3d v(g(rng), g(rng), g(rng));
    CHECK(quat_rotate(q, v).norm() == doctest::Approx(v.norm()));
  }

  CHECK_THROWS(Versor(1.1, Eigen::Vector3d(0.2, 0, 0)));
}

TEST_CASE("frisvad basis is a rotation, including the singular branch") {
  auto check_rot = [](const Eigen::Vector3d& n) {
    const Eigen::Matrix3d B = frisvad_basis(n);
    CHECK((B.transpose() * B - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(B.determinant() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((B.col(0) - n).norm() <= 1e-12);
  };
  check_rot(Eigen::Vector3d(0, 0, 1));
  check_rot(Eigen::Vector3d(0, 0, -1));
  std::mt19937 rng(17);
  std::normal_distribution<double> g;
  for (int i = 0; i < 30; ++i) {
    Eigen::Vector3d n(g(rng), g(rng), g(rng));
    check_rot(n.normalized());
  }
  CHECK_THROWS(frisvad_basis(Eigen::Vector3d(0, 0, 2)));
}

TEST_CASE("spherical coordinates") {
  CHECK((spherical_to_cartesian(0, 0, 1) - Eigen::Vector3d(1, 0, 0)).norm() <= 1e-15);
  CHECK((spherical_to_cartesian(M_PI / 2, 0, 1) - Eigen::Vector3d(0, 1, 0)).norm() <= 1e-15);
  CHECK((spherical_to_cartesian(M_PI / 4, M_PI / 4, 1) -
         Eigen::Vector3d(0.5, 0.5, std::sqrt(2.0) / 2))
            .norm() <= 1e-15);
}

TEST_CASE("rail evaluation") {
  const RailSpec disk = RailSpec::in_plane(0.9);
  Vec3T<double> z, dz, ddz;
  rail_eval(disk, -M_PI / 2, z, dz, ddz);
  CHECK(z[0] == doctest::Approx(0.0));
  CHECK(z[1] == doctest::Approx(0.0));
  CHECK(z[2] == doctest::Approx(-0.9));

  // ball rail 1: zeta(0) = r * (first column of the frisvad basis)
  const RailSpec ball = RailSpec::frisvad(0.95, 0, 0, 1);
  rail_eval(ball, 0.0, z, dz, ddz);
  const Eigen::Matrix3d B = frisvad_basis(spherical_to_cartesian(0, 0, 1));
  CHECK((Eigen::Vector3d(z[0], z[1], z[2]) - 0.95 * B.col(0)).norm() <= 1e-14);

  std::mt19937 rng(23);
  std::uniform_real_distribution<double> th(-3.0, 3.0);
  for (const RailSpec& rail : {disk, ball, RailSpec::frisvad(0.85, M_PI / 4, M_PI / 4, 1)}) {
    for (int i = 0; i < 10; ++i) {
      const double theta = th(rng);
      rail_eval(rail, theta, z, dz, ddz);
      const double rad = std::sqrt(dot(z, z));
      CHECK(rad == doctest::Approx(rail.radius));
      CHECK(std::fabs(dot(z, dz)) <= 1e-12);
      // zeta'' = -zeta for circular rails
      CHECK(std::fabs(ddz[0] + z[0]) <= 1e-12);
      // derivatives vs finite differences
      const double h = 1e-6;
      Vec3T<double> zp, zm, t1, t2;
      rail_eval(rail, theta + h, zp, t1, t2);
      rail_eval(rail, theta - h, zm, t1, t2);
      for (int k = 0; k < 3; ++k)
        CHECK(std::fabs(dz[k] - (zp[k] - zm[k]) / (2 * h)) <= 1e-8);
    }
  }
}

TEST_CASE("mesh function interpolation and resampling") {
  // pchip reproduces monotone data without overshoot
  Eigen::VectorXd m(5);
  m << 0, 0.25, 0.5, 0.75, 1.0;
  Eigen::MatrixXd v(5, 1);
  v << 0, 0, 0, 1, 1;
  const MeshFunction f(m, v);
  for (double s = 0; s <= 1.0; s += 0.01) {
    const double y = f.eval(s)(0);
    CHECK(y >= -1e-12);
    CHECK(y <= 1.0 + 1e-12);
  }
  // exact at nodes
  for (int i = 0; i < 5; ++i) CHECK(f.eval(m(i))(0) == doctest::Approx(v(i, 0)));

  // derivative of a smooth function via pchip is close on a fine mesh
  const Eigen::VectorXd fine = linspace(201);
  Eigen::MatrixXd sv(201, 1);
  for (int i = 0; i < 201; ++i) sv(i, 0) = std::sin(3.0 * fine(i));
  const MeshFunction s(fine, sv);
  CHECK(std::fabs(s.deriv(0.4)(0) - 3.0 * std::cos(1.2)) <= 1e-3);

  CHECK_THROWS(MeshFunction(Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Zero(3, 1)));
}

TEST_CASE("axpy resamples onto the union mesh") {
  Eigen::VectorXd ma(3), mb(4);
  ma << 0, 0.5, 1;
  mb << 0, 0.3, 0.7, 1;
  Eigen::MatrixXd va(3, 1), vb(4, 1);
  va << 0, 1, 2;  // y = 2s
  vb << 1, 1, 1, 1;
  const CurvePoint p{MeshFunction(ma, va), 1.0};
  const Tangent t{MeshFunction(mb, vb), 0.5};
  const CurvePoint q = axpy(p, 2.0, t);
  CHECK(q.lam == doctest::Approx(2.0));
  CHECK(q.y.size() == 5);
  CHECK(q.y.eval(0.5)(0) == doctest::Approx(3.0));
}
