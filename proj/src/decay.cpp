#include "emlab/decay.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "emlab/operators.hpp"
#include "emlab/sobolev.hpp"

namespace emlab {

double c_gamma(double gamma) {
  if (!(gamma > 1.0)) throw Error("c_gamma: gamma must exceed 1");
  return std::min(1.0, 1.5 * (gamma - 1.0)) - 1.5;
}

double c_gamma_s(double gamma, double s) { return c_gamma(gamma) + s; }

double theoretical_exponent(double gamma, double sigma) {
  if (!(gamma > 1.0)) throw Error("theoretical_exponent: gamma must exceed 1");
  return 1.5 - sigma - std::min(1.0, 1.5 * (gamma - 1.0));
}

ExponentFit fit_exponent(const Series& series, double t0, double t1) {
  if (!(t1 > t0) || t0 < 0.0) throw Error("fit_exponent: need 0 <= t0 < t1");
  std::vector<double> xs, ys;
  for (const auto& s : series) {
    if (s.t < t0 || s.t > t1) continue;
    if (!(s.value > 0.0)) throw Error("fit_exponent: non-positive value in the fit window");
    xs.push_back(std::log1p(s.t));
    ys.push_back(std::log(s.value));
  }
  if (xs.size() < kMinFitSamples) throw Error("fit_exponent: fit window holds fewer than 8 samples");

  const double n = static_cast<double>(xs.size());
  const double mx = pairwise_sum(xs) / n;
  const double my = pairwise_sum(ys) / n;
  std::vector<double> sxy(xs.size()), sxx(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy[i] = (xs[i] - mx) * (ys[i] - my);
    sxx[i] = (xs[i] - mx) * (xs[i] - mx);
  }
  const double den = pairwise_sum(sxx);
  if (den == 0.0) throw Error("fit_exponent: all samples share one time");

  ExponentFit fit;
  fit.t0 = t0;
  fit.t1 = t1;
  fit.samples = xs.size();
  fit.slope = pairwise_sum(sxy) / den;
  const double intercept = my - fit.slope * mx;
  fit.constant = std::exp(intercept);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double model = std::exp(intercept + fit.slope * xs[i]);
    const double actual = std::exp(ys[i]);
    fit.max_rel_residual = std::max(fit.max_rel_residual, std::abs(model - actual) / actual);
  }
  fit.poor_fit = fit.max_rel_residual > kPoorFitThreshold;
  return fit;
}

ExponentFit fit_exponent(const Series& series) {
  if (series.empty()) throw Error("fit_exponent: empty series");
  const double T = series.back().t;
  return fit_exponent(series, std::max(1.0, T / 5.0), T);
}

BoundCheck bound_check(const Series& series, double exponent, double anchor_t, double tol,
                       std::optional<double> t_end) {
  const double eps = 1e-12 * std::max(1.0, std::abs(anchor_t));
  const auto anchor = std::find_if(series.begin(), series.end(), [&](const Sample& s) { return s.t >= anchor_t - eps; });
  if (anchor == series.end()) throw Error("bound_check: no samples at or after the anchor time");
  if (!(anchor->value > 0.0)) throw Error("bound_check: anchor value must be positive");

  BoundCheck r;
  r.exponent = exponent;
  r.anchor_t = anchor->t;
  r.tolerance = tol;
  r.constant = anchor->value / std::pow(1.0 + anchor->t, exponent);
  r.margin = std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  for (auto it = anchor; it != series.end(); ++it) {
    if (t_end && it->t > *t_end + eps) break;
    const double envelope = r.constant * std::pow(1.0 + it->t, exponent);
    const double m = 1.0 - it->value / envelope;
    if (m < r.margin) {
      r.margin = m;
      r.worst_t = it->t;
    }
    ++used;
  }
  if (used == 0) throw Error("bound_check: empty tail");
  r.pass = r.margin >= -tol;
  return r;
}

CompositeCheck composite_check(const Series& xdot0, const Series& xdot_s, double s, double gamma) {
  if (xdot0.size() != xdot_s.size() || xdot0.empty()) throw Error("composite_check: series must match and be nonempty");
  const double cg = c_gamma(gamma);
  CompositeCheck r;
  r.x_s0 = inhomogeneous_norm(xdot0.front().value, xdot_s.front().value);
  if (!(r.x_s0 > 0.0)) throw Error("composite_check: initial norm must be positive");
  for (std::size_t i = 0; i < xdot0.size(); ++i) {
    const double t = xdot0[i].t;
    if (std::abs(xdot_s[i].t - t) > 1e-12 * std::max(1.0, t)) throw Error("composite_check: time grids differ");
    const double lhs = inhomogeneous_norm(xdot0[i].value, std::pow(1.0 + t, s) * xdot_s[i].value);
    const double ratio = lhs * std::pow(1.0 + t, cg) / r.x_s0;
    r.sup_ratio = std::max(r.sup_ratio, ratio);
    if (t > 0.0 && ratio > 0.0) r.fitted_C = std::max(r.fitted_C, (1.0 + t) / t * std::log(ratio / 2.0));
  }
  return r;
}

InterpolationReport interpolation_check(const std::vector<const ScalarField*>& fields, double s) {
  if (!(s > 2.5)) throw Error("interpolation_check: s must exceed 5/2");
  InterpolationReport r;
  r.s = s;
  for (const ScalarField* f : fields) {
    const double x0 = l2_norm(*f);
    const double xs = sobolev_seminorm(*f, s);
    if (x0 == 0.0 || xs == 0.0) {
      ++r.skipped;
      continue;
    }
    const auto mix = [&](double a) { return std::pow(x0, 1.0 - a) * std::pow(xs, a); };
    r.c_sup = std::max(r.c_sup, f->max_abs() / mix(1.5 / s));
    r.c_grad_sup = std::max(r.c_grad_sup, grad(*f).max_norm() / mix(2.5 / s));
    r.c_below = std::max(r.c_below, sobolev_seminorm(*f, s - 1.0) / mix(1.0 - 1.0 / s));
    ++r.used;
  }
  return r;
}

ValidityReport gamma_s_validity(double gamma, double s) {
  if (!(gamma > 1.0)) throw Error("gamma_s_validity: gamma must exceed 1");
  ValidityReport r;
  r.gamma = gamma;
  r.s = s;
  r.gamma_in_range = gamma < 5.0 / 3.0;
  r.narrow_upper = 0.5 + 2.0 / (gamma - 1.0);
  r.wide_upper = 1.5 + 2.0 / (gamma - 1.0);
  r.narrow_window = s > 2.5 && s < r.narrow_upper;
  r.wide_window = s > 2.5 && s < r.wide_upper;
  const double k = 2.0 / (gamma - 1.0);
  const double kr = std::round(k);
  if (kr >= 1.0 && std::abs(k - kr) <= 1e-9 * std::max(1.0, k)) {
    r.exceptional_k = static_cast<int>(kr);
    r.exceptional_window = s > 2.5;
  }
  r.discrepancy = r.narrow_window != r.wide_window;
  return r;
}

}  // namespace emlab
