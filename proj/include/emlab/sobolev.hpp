// Homogeneous Sobolev seminorms, the finite-difference (Gagliardo) form, and
// numerical commutator ratios.
#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "emlab/grid.hpp"

namespace emlab {

double l2_norm(const ScalarField& f);
double l2_norm(const VectorField& F);

/// ||f||_{H^sigma-dot} through Parseval with the multiplier |xi|^sigma.
/// sigma = 0 is the full L2 norm (mean included). All resolved modes count;
/// on dealiased fields the modes above the 2/3 cutoff are zero anyway.
double sobolev_seminorm(const ScalarField& f, double sigma);
/// Root-sum-square over the three components.
double sobolev_seminorm(const VectorField& F, double sigma);
/// Seminorm of a tuple of fields (root-sum-square of members).
double sobolev_seminorm(std::span<const ScalarField* const> parts, double sigma);

/// X_sigma = sqrt(Xdot_0^2 + Xdot_sigma^2).
inline double inhomogeneous_norm(double xdot0, double xdot_sigma) {
  return std::sqrt(xdot0 * xdot0 + xdot_sigma * xdot_sigma);
}

/// Constant C(sigma) with  int_R int_R |f(x)-f(y)|^2 / |x-y|^{1+2 sigma}
/// = C(sigma) ||f||^2_{H^sigma-dot}  on the real line.
double gagliardo_constant_1d(double sigma);

/// Finite-difference seminorm of a 1-D field, normalized by
/// gagliardo_constant_1d so it estimates the H^sigma-dot seminorm.
///
/// Double sum over node pairs with the periodized kernel
/// sum_m |z + 2Lm|^{-1-2 sigma}; the excluded diagonal receives the leading
/// zeta-function correction of the |z|^{1-2 sigma} singularity.
double gagliardo_seminorm_1d(const ScalarField& f, double sigma);

struct CommutatorRatios {
  double first_order = 0.0;
  double second_order = 0.0;  // NaN when s <= 1
};

/// [v, L^s] u = v L^s u - L^s (v u), with L^s the |xi|^s multiplier.
ScalarField commutator(const ScalarField& v, const ScalarField& u, double s);

/// Ratios of the commutator norms to the right-hand sides of the first- and
/// second-order Kato-Ponce bounds.
CommutatorRatios commutator_ratio(const ScalarField& v, const ScalarField& u, double s);

/// Random real field whose Fourier content is confined to |mode_a| <= kmax
/// on every active axis; amplitudes decay like 1/(1+|k|^2). Depends only on
/// (dims, half width, kmax, seed), not on n, up to sampling.
ScalarField random_band_limited(const GridSpec& grid, int kmax, std::uint64_t seed);

}  // namespace emlab
