// Spectral differential operators on the periodic box.
#pragma once

#include <functional>

#include "emlab/grid.hpp"
#include "emlab/spectral.hpp"

namespace emlab {

ScalarField partial(const ScalarField& f, int axis);
VectorField grad(const ScalarField& f);
ScalarField div(const VectorField& F);
VectorField curl(const VectorField& F);
/// Full Jacobian: result[i][j] = d_j F_i.
std::array<VectorField, 3> jacobian(const VectorField& F);
/// (a . grad) F for a vector field F.
VectorField advect(const VectorField& a, const VectorField& F);

/// Fourier multiplier |xi|^sigma (homogeneous fractional derivative).
/// The mean mode is kept for sigma == 0 and annihilated for sigma > 0.
ScalarField fractional_op(const ScalarField& f, double sigma);
/// Same multiplier without the sigma >= 0 restriction; the mean mode is
/// always dropped for sigma != 0.
ScalarField fractional_op_signed(const ScalarField& f, double sigma);

/// Applies m(k) to every half-spectrum entry (m indexed by spectral slot).
ScalarField apply_multiplier(const ScalarField& f,
                             const std::function<Complex(std::size_t)>& m);

/// 2/3-rule truncation.
ScalarField dealias(const ScalarField& f);
VectorField dealias(const VectorField& F);

/// Exponential filter exp(-strength (|k|/k_max)^36) per active axis.
ScalarField exp36_filter(const ScalarField& f, double strength);

/// Solves Laplacian(phi) = f for mean-free f (phi mean-free).
ScalarField inverse_laplacian(const ScalarField& f);

/// Removes the gradient part of F (spectral Leray projection).
VectorField leray_project(const VectorField& F);

/// Trigonometric interpolation of f at the points x / factor, evaluated on
/// the same node set: out(x) = f(x / factor). Requires factor >= 1 so every
/// query point stays inside the box.
ScalarField dilate(const ScalarField& f, double factor);
VectorField dilate(const VectorField& F, double factor);

/// Smooth periodic window: 1 where every active |x_a| <= inner, 0 where some
/// |x_a| >= outer.
ScalarField box_window(const GridSpec& grid, double inner, double outer);
/// Exact gradient of box_window.
VectorField box_window_gradient(const GridSpec& grid, double inner, double outer);

/// Largest |f| outside the inner region |x_a| <= inner, over the largest |f|.
double outer_fraction(const ScalarField& f, double inner);

}  // namespace emlab
