// Decay-rate bookkeeping: exponents, power-law fits, envelope checks and the
// admissible (gamma, s) windows.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "emlab/grid.hpp"

namespace emlab {

/// min(1, 3(gamma - 1)/2) - 3/2
double c_gamma(double gamma);
/// c_gamma + s
double c_gamma_s(double gamma, double s);
/// Envelope exponent of the order-sigma norm: 3/2 - sigma - min(1, 3(gamma - 1)/2).
double theoretical_exponent(double gamma, double sigma);

struct Sample {
  double t;
  double value;
};
using Series = std::vector<Sample>;

struct ExponentFit {
  double t0 = 0.0, t1 = 0.0;
  std::size_t samples = 0;
  double slope = 0.0;
  /// value ~ constant (1 + t)^slope
  double constant = 0.0;
  double max_rel_residual = 0.0;
  /// Power law judged a poor model (max relative residual above the threshold).
  bool poor_fit = false;
};

inline constexpr std::size_t kMinFitSamples = 8;
inline constexpr double kPoorFitThreshold = 0.1;

/// Least squares in (log(1+t), log value) over samples with t in [t0, t1].
ExponentFit fit_exponent(const Series& series, double t0, double t1);
/// Default window [max(1, T/5), T] with T the last sample time.
ExponentFit fit_exponent(const Series& series);

struct BoundCheck {
  double exponent = 0.0;
  double anchor_t = 0.0;
  double constant = 0.0;
  double tolerance = 0.05;
  /// min over the tail of 1 - value / envelope (negative when violated).
  double margin = 0.0;
  double worst_t = 0.0;
  bool pass = false;
};

/// C = value(t_a) / (1 + t_a)^e; passes iff value(t) <= C (1+t)^e (1 + tol)
/// for every sample with t >= t_a (up to t_end when given).
BoundCheck bound_check(const Series& series, double exponent, double anchor_t, double tol = 0.05,
                       std::optional<double> t_end = std::nullopt);

struct CompositeCheck {
  /// Smallest C >= 0 with LHS(t) (1+t)^{c_gamma} <= 2 e^{C t/(1+t)} X_s(0).
  double fitted_C = 0.0;
  /// sup_t LHS(t) (1+t)^{c_gamma} / X_s(0).
  double sup_ratio = 0.0;
  double x_s0 = 0.0;
};

/// LHS(t) = sqrt((1+t)^{2s} Xdot_s^2 + Xdot_0^2); the two series share times.
CompositeCheck composite_check(const Series& xdot0, const Series& xdot_s, double s, double gamma);

struct InterpolationReport {
  double s = 0.0;
  /// Largest observed constants of the three inequalities.
  double c_sup = 0.0;
  double c_grad_sup = 0.0;
  double c_below = 0.0;
  std::size_t used = 0;
  std::size_t skipped = 0;
};

/// ||f||_inf <= C X0^{1-3/(2s)} Xs^{3/(2s)},  ||Df||_inf <= C X0^{1-5/(2s)} Xs^{5/(2s)},
/// ||f||_{H^{s-1}-dot} <= C X0^{1/s} Xs^{1-1/s}, with X0 = ||f||_L2, Xs = ||f||_{H^s-dot}.
InterpolationReport interpolation_check(const std::vector<const ScalarField*>& fields, double s);

struct ValidityReport {
  double gamma = 0.0, s = 0.0;
  bool gamma_in_range = false;       // 1 < gamma < 5/3
  double narrow_upper = 0.0;         // 1/2 + 2/(gamma - 1)
  double wide_upper = 0.0;           // 3/2 + 2/(gamma - 1)
  bool narrow_window = false;        // 5/2 < s < narrow_upper
  bool wide_window = false;          // 5/2 < s < wide_upper
  std::optional<int> exceptional_k;  // gamma = 1 + 2/k
  bool exceptional_window = false;   // exceptional k and s > 5/2
  bool discrepancy = false;          // narrow_window != wide_window
};

ValidityReport gamma_s_validity(double gamma, double s);

}  // namespace emlab
