// Pressureless Burgers flow solved by straight characteristics.
#pragma once

#include <array>
#include <complex>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "emlab/grid.hpp"

namespace emlab {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
/// d[m] = derivative of a matrix field along coordinate m.
using MatGrad = std::array<Mat3, 3>;

/// Closed-form initial velocity v0 with its first two derivatives.
class InitialVelocity {
 public:
  struct Identity {};
  /// v0(y) = M y + c
  struct Affine {
    Mat3 M;
    Vec3 c;
  };
  /// v0(y) = y + delta grad(psi), psi = w^2 exp(-|y - center|^2 / (2 w^2)).
  /// Hess psi has sup spectral norm 1, so (H0) holds with eps = 1 - delta.
  struct GradientBump {
    double delta;
    double width;
    Vec3 center;
  };

  static InitialVelocity identity() { return InitialVelocity(Identity{}); }
  static InitialVelocity affine(const Mat3& M, const Vec3& c);
  static InitialVelocity gradient_bump(double delta, double width, const Vec3& center = Vec3::Zero());

  Vec3 value(const Vec3& y) const;
  Mat3 jacobian(const Vec3& y) const;
  MatGrad hessian(const Vec3& y) const;

  bool is_identity() const { return std::holds_alternative<Identity>(family_); }
  bool is_affine() const { return std::holds_alternative<Affine>(family_); }
  bool is_bump() const { return std::holds_alternative<GradientBump>(family_); }
  const GradientBump* bump() const { return std::get_if<GradientBump>(&family_); }
  const Affine* affine_part() const { return std::get_if<Affine>(&family_); }
  std::string name() const;

 private:
  using Family = std::variant<Identity, Affine, GradientBump>;
  explicit InitialVelocity(Family f) : family_(std::move(f)) {}
  Family family_;
};

/// Distance of a complex number to the closed negative real half-line.
double distance_to_negative_axis(std::complex<double> lambda);

struct HZeroReport {
  std::vector<double> distances;  // per sample, min over eigenvalues
  double global_min = 0.0;
  double epsilon = 0.0;
  bool pass = false;
};

HZeroReport check_H0(const InitialVelocity& v0, double epsilon, const std::vector<Vec3>& samples);

/// Burgers solution v(t, X(t, y)) = v0(y) with X(t, y) = y + t v0(y).
class FlowEval {
 public:
  explicit FlowEval(InitialVelocity v0, double tolerance = 1e-12, int max_iterations = 60);

  const InitialVelocity& initial() const { return v0_; }

  Vec3 forward_flow(double t, const Vec3& y) const;
  /// Damped Newton solve of x = y + t v0(y); residual <= tol (1 + |x|).
  Vec3 invert_flow(double t, const Vec3& x) const;

  Vec3 eval_v(double t, const Vec3& x) const;
  /// (I + t Dv0)^{-1} Dv0 at the foot of the characteristic.
  Mat3 eval_Dv(double t, const Vec3& x) const;
  /// (1 + t)(I + t Dv0)^{-1}(Dv0 - I), so Dv = I/(1+t) + K/(1+t)^2.
  Mat3 eval_K(double t, const Vec3& x) const;
  /// result[k] = d/dx_k of Dv.
  MatGrad eval_D2v(double t, const Vec3& x) const;

  /// Everything at one point with a single inversion.
  struct Point {
    Vec3 y, v;
    Mat3 Dv, K;
  };
  Point evaluate(double t, const Vec3& x) const;

 private:
  InitialVelocity v0_;
  double tol_;
  int max_iter_;
};

/// |dv/dt + (v.grad)v - curl v x v| at (t, x) by central differences of eval_v.
double residual_check(const FlowEval& flow, double t, const Vec3& x, double dh, double dt);

/// Central-difference Jacobian of eval_v (for order studies).
Mat3 finite_difference_Dv(const FlowEval& flow, double t, const Vec3& x, double dh);

double operator_norm(const Mat3& A);
/// Frobenius norm of the third-order tensor.
double tensor_norm(const MatGrad& T);

struct EstimateRow {
  double t = 0.0;
  double sup_Dv = 0.0;
  double sup_D2v = 0.0;
  double sup_K = 0.0;
  std::vector<double> K_seminorm;        // ||K||_{H^sigma-dot}
  std::vector<double> K_scaled_seminorm; // ||K / (1+t)||_{H^sigma-dot}
  std::vector<double> v_seminorm;        // ||v - x/(1+t)||_{H^sigma-dot}
};

struct SlopeSummary {
  std::string quantity;
  double slope = 0.0;
  double constant = 0.0;
  double reference_slope = 0.0;
};

struct EstimateReport {
  std::vector<double> sigmas;
  std::vector<EstimateRow> rows;
  std::vector<SlopeSummary> slopes;
};

struct EstimateOptions {
  std::vector<double> sigmas{1.0};
  /// Lagrangian sample cloud: cloud_n^3 points spread over cloud_radius.
  int cloud_n = 21;
  double cloud_radius = 4.0;
  /// Grid nodes where K may be nonzero must stay inside this fraction of L.
  double support_fraction = 2.0 / 3.0;
  double support_tolerance = 1e-8;
};

/// Sup norms over a cloud of characteristics and Sobolev seminorms on the
/// grid dilated by (1 + t) (the given grid is the t = 0 reference).
EstimateReport estimate_suite(const FlowEval& flow, const std::vector<double>& times, const GridSpec& grid,
                              const EstimateOptions& opt = {});

void write_estimate_csv(const std::string& path, const EstimateReport& report);

}  // namespace emlab
