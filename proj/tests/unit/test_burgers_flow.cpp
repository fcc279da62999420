#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

#include <Eigen/Eigenvalues>

#include "emlab/burgers.hpp"
#include "emlab/decay.hpp"
#include "generators.hpp"

using namespace emlab;

namespace {

Vec3 random_point(gen::Source& src, double r) {
  return Vec3(src.uniform(-r, r), src.uniform(-r, r), src.uniform(-r, r));
}

// Symmetric positive definite matrix with eigenvalues in [lo, hi].
Mat3 random_spd(gen::Source& src, double lo, double hi) {
  Mat3 A;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) A(i, j) = src.uniform(-1, 1);
  const Eigen::HouseholderQR<Mat3> qr(A);
  const Mat3 Q = qr.householderQ();
  const Vec3 ev(src.uniform(lo, hi), src.uniform(lo, hi), src.uniform(lo, hi));
  return Q * ev.asDiagonal() * Q.transpose();
}

// Roots of det(lambda I - A) by Cardano's formula in complex arithmetic.
std::array<std::complex<double>, 3> cubic_eigenvalues(const Mat3& A) {
  using C = std::complex<double>;
  const double tr = A.trace();
  const double c2 = A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0) + A(0, 0) * A(2, 2) - A(0, 2) * A(2, 0) +
                    A(1, 1) * A(2, 2) - A(1, 2) * A(2, 1);
  const double det = A.determinant();
  // lambda = z + tr/3 gives z^3 + p z + q = 0.
  const double p = c2 - tr * tr / 3.0;
  const double q = -2.0 * tr * tr * tr / 27.0 + tr * c2 / 3.0 - det;
  const C disc = std::sqrt(C(q * q / 4.0 + p * p * p / 27.0));
  C u = std::pow(-q / 2.0 + disc, 1.0 / 3.0);
  if (std::abs(u) < 1e-14) u = std::pow(-q / 2.0 - disc, 1.0 / 3.0);
  const C w(-0.5, std::sqrt(3.0) / 2.0);
  std::array<C, 3> out;
  for (int k = 0; k < 3; ++k) {
    const C uk = u * std::pow(w, k);
    out[k] = (std::abs(uk) < 1e-14 ? C(0.0) : uk - p / (3.0 * uk)) + tr / 3.0;
  }
  return out;
}

}  // namespace

TEST_CASE("property: H0 distances agree with a cubic-formula oracle") {
  gen::Source src(5);
  const std::vector<Vec3> cloud{Vec3::Zero()};
  for (int c = 0; c < gen::kCases; ++c) {
    Mat3 M;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) M(i, j) = src.uniform(-2.0, 2.0);
    double expect = std::numeric_limits<double>::infinity();
    for (const auto& l : cubic_eigenvalues(M)) {
      const double d = l.real() <= 0.0 ? std::abs(l.imag()) : std::abs(l);
      expect = std::min(expect, d);
    }
    const auto rep = check_H0(InitialVelocity::affine(M, Vec3::Zero()), 1e-3, cloud);
    CHECK(rep.global_min == doctest::Approx(expect).epsilon(1e-8));
  }
  // Rotation by 90 degrees about z plus a shift: eigenvalues 2 +- i and 2.
  Mat3 R = 2.0 * Mat3::Identity();
  R(0, 1) = -1.0;
  R(1, 0) = 1.0;
  CHECK(check_H0(InitialVelocity::affine(R, Vec3::Zero()), 1.0, cloud).global_min == doctest::Approx(2.0));
}

TEST_CASE("distance to the nonpositive real axis") {
  using C = std::complex<double>;
  CHECK(distance_to_negative_axis(C(-2.0, 0.0)) == 0.0);
  CHECK(distance_to_negative_axis(C(0.0, 0.0)) == 0.0);
  CHECK(distance_to_negative_axis(C(3.0, 0.0)) == doctest::Approx(3.0));
  CHECK(distance_to_negative_axis(C(-1.0, 0.5)) == doctest::Approx(0.5));
  CHECK(distance_to_negative_axis(C(1.0, 1.0)) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("norms of matrices and tensors") {
  Mat3 A = Mat3::Zero();
  A.diagonal() << 3.0, -5.0, 1.0;
  CHECK(operator_norm(A) == doctest::Approx(5.0));
  MatGrad T{Mat3::Identity(), Mat3::Zero(), 2.0 * Mat3::Identity()};
  CHECK(tensor_norm(T) == doctest::Approx(std::sqrt(15.0)));
}

TEST_CASE("initial velocity families") {
  CHECK_THROWS_AS(InitialVelocity::gradient_bump(1.0, 1.0), Error);
  CHECK_THROWS_AS(InitialVelocity::gradient_bump(0.1, 0.0), Error);
  const auto id = InitialVelocity::identity();
  CHECK(id.name() == "identity");
  CHECK((id.value(Vec3(1, 2, 3)) - Vec3(1, 2, 3)).norm() == 0.0);

  // Finite differences of the closed-form bump derivatives.
  const auto bump = InitialVelocity::gradient_bump(0.3, 1.2, Vec3(0.1, -0.2, 0.3));
  gen::Source src(4);
  for (int c = 0; c < 10; ++c) {
    const Vec3 y = random_point(src, 2.0);
    const double h = 1e-5;
    Mat3 fd;
    for (int j = 0; j < 3; ++j) {
      Vec3 e = Vec3::Zero();
      e[j] = h;
      fd.col(j) = (bump.value(y + e) - bump.value(y - e)) / (2 * h);
    }
    CHECK((fd - bump.jacobian(y)).norm() < 1e-9);
    const auto H = bump.hessian(y);
    for (int m = 0; m < 3; ++m) {
      Vec3 e = Vec3::Zero();
      e[m] = h;
      CHECK(((bump.jacobian(y + e) - bump.jacobian(y - e)) / (2 * h) - H[m]).norm() < 1e-9);
    }
  }
}

TEST_CASE("H0 on the three families") {
  gen::Source src(6);
  std::vector<Vec3> cloud;
  for (int i = 0; i < 200; ++i) cloud.push_back(random_point(src, 4.0));
  CHECK(check_H0(InitialVelocity::identity(), 1.0, cloud).pass);
  CHECK(check_H0(InitialVelocity::identity(), 1.0, cloud).global_min == doctest::Approx(1.0));
  const auto bump = check_H0(InitialVelocity::gradient_bump(0.1, 1.0), 0.5, cloud);
  CHECK(bump.pass);
  CHECK(bump.global_min >= 0.9 - 1e-12);
  Mat3 M = Mat3::Identity();
  M(2, 2) = -0.5;
  CHECK_FALSE(check_H0(InitialVelocity::affine(M, Vec3::Zero()), 0.1, cloud).pass);
}

TEST_CASE("identity flow is the self-similar expansion") {
  const FlowEval flow(InitialVelocity::identity());
  gen::Source src(10);
  for (int c = 0; c < gen::kCases; ++c) {
    const double t = src.uniform(0.0, 100.0);
    const Vec3 x = random_point(src, 50.0);
    const auto p = flow.evaluate(t, x);
    CHECK((p.v - x / (1 + t)).norm() <= 1e-13 * (1 + x.norm()));
    CHECK((p.Dv - Mat3::Identity() / (1 + t)).norm() < 1e-14);
    CHECK(p.K.norm() < 1e-12);
  }
}

TEST_CASE("property: affine flows against the closed form") {
  gen::Source src(12);
  for (int c = 0; c < gen::kCases; ++c) {
    const Mat3 M = random_spd(src, 0.2, 3.0);
    const Vec3 c0 = random_point(src, 1.0);
    const FlowEval flow(InitialVelocity::affine(M, c0));
    const double t = src.uniform(0.0, 100.0);
    const Vec3 x = random_point(src, 10.0);
    const Mat3 A = Mat3::Identity() + t * M;
    const Vec3 y = A.lu().solve(x - t * c0);
    CHECK((flow.invert_flow(t, x) - y).norm() <= 1e-10 * (1 + y.norm()));
    CHECK((flow.eval_v(t, x) - (M * y + c0)).norm() <= 1e-10 * (1 + x.norm()));
    const Mat3 Dv = M * A.inverse();
    CHECK((flow.eval_Dv(t, x) - Dv).norm() < 1e-12);
    for (const auto& d : flow.eval_D2v(t, x)) CHECK(d.norm() < 1e-12);
  }
}

TEST_CASE("property: bump flow eigenvalues follow lambda / (1 + t lambda)") {
  const FlowEval flow(InitialVelocity::gradient_bump(0.5, 1.0));
  gen::Source src(13);
  for (int c = 0; c < gen::kCases; ++c) {
    const double t = src.uniform(0.0, 60.0);
    const Vec3 y = random_point(src, 3.0);
    const Vec3 x = flow.forward_flow(t, y);
    const Eigen::SelfAdjointEigenSolver<Mat3> e0(flow.initial().jacobian(y));
    const Eigen::SelfAdjointEigenSolver<Mat3> e1(0.5 * (flow.eval_Dv(t, x) + flow.eval_Dv(t, x).transpose()));
    std::array<double, 3> expect, got;
    for (int i = 0; i < 3; ++i) {
      const double l = e0.eigenvalues()[i];
      expect[i] = l / (1 + t * l);
      got[i] = e1.eigenvalues()[i];
    }
    std::sort(expect.begin(), expect.end());
    std::sort(got.begin(), got.end());
    for (int i = 0; i < 3; ++i) CHECK(got[i] == doctest::Approx(expect[i]).epsilon(1e-10));
  }
}

TEST_CASE("property: K splits Dv") {
  const FlowEval flow(InitialVelocity::gradient_bump(0.2, 0.8, Vec3(0.3, 0.0, -0.1)));
  gen::Source src(14);
  for (int c = 0; c < gen::kCases; ++c) {
    const double t = src.uniform(0.0, 50.0);
    const Vec3 x = random_point(src, 3.0 * (1 + t));
    const Mat3 lhs = flow.eval_Dv(t, x);
    const Mat3 rhs = Mat3::Identity() / (1 + t) + flow.eval_K(t, x) / ((1 + t) * (1 + t));
    CHECK((lhs - rhs).norm() < 1e-13);
    const auto p = flow.evaluate(t, x);
    CHECK((p.Dv - lhs).norm() == 0.0);
    CHECK((flow.forward_flow(t, flow.invert_flow(t, x)) - x).norm() <= 1e-12 * (1 + x.norm()));
  }
}

TEST_CASE("bump flow solves the Burgers system and differentiates consistently") {
  const FlowEval flow(InitialVelocity::gradient_bump(0.1, 1.0));
  gen::Source src(15);
  for (int c = 0; c < 10; ++c) {
    const double t = src.uniform(0.5, 5.0);
    const Vec3 x = random_point(src, 2.0 * (1 + t));
    const double r1 = residual_check(flow, t, x, 1e-2, 1e-2);
    const double r2 = residual_check(flow, t, x, 5e-3, 5e-3);
    CHECK(r1 < 1e-3);
    if (r1 > 1e-9) CHECK(r1 / r2 > 3.0);
    const Mat3 Dv = flow.eval_Dv(t, x);
    CHECK((finite_difference_Dv(flow, t, x, 1e-4) - Dv).norm() < 1e-7);
    const auto D2 = flow.eval_D2v(t, x);
    for (int m = 0; m < 3; ++m) {
      Vec3 e = Vec3::Zero();
      e[m] = 1e-5;
      CHECK(((flow.eval_Dv(t, x + e) - flow.eval_Dv(t, x - e)) / 2e-5 - D2[m]).norm() < 1e-7);
    }
  }
}

TEST_CASE("estimate suite: sup norms follow the expected rates") {
  const FlowEval flow(InitialVelocity::gradient_bump(0.1, 1.0));
  EstimateOptions opt;
  opt.cloud_n = 7;
  const auto grid = GridSpec::make(3, 24, 10.0);
  std::vector<double> times;
  for (int i = 0; i < 10; ++i) times.push_back(std::pow(50.0, i / 9.0));
  const auto rep = estimate_suite(flow, times, grid, opt);
  REQUIRE(rep.rows.size() == times.size());
  const auto slope = [&](const std::string& q) {
    for (const auto& s : rep.slopes)
      if (s.quantity == q) return s.slope;
    FAIL("missing " << q);
    return 0.0;
  };
  CHECK(slope("sup_Dv") == doctest::Approx(-1.0).epsilon(0.02));
  CHECK(slope("sup_D2v") == doctest::Approx(-3.0).epsilon(0.02));
  // The dilation x = (1+t) y makes K a rescaled profile: H^1 grows like (1+t)^{1/2} in 3D.
  CHECK(slope("K_H1") == doctest::Approx(0.5).epsilon(0.05));
  CHECK(slope("K_scaled_H1") == doctest::Approx(-0.5).epsilon(0.05));

  CHECK_THROWS_AS(estimate_suite(flow, times, GridSpec::make(3, 24, 3.0), opt), Error);
}
