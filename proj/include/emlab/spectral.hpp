// Fourier machinery for the periodic box: plans, wavenumber tables, masks.
#pragma once

#include <complex>
#include <memory>
#include <span>
#include <vector>

#include "emlab/grid.hpp"

namespace emlab {

using Complex = std::complex<double>;
/// Half-spectrum of a real field in FFTW r2c layout: (n, ..., n, n/2 + 1).
using Spectrum = std::vector<Complex>;

/// Per-grid FFT plans and multiplier tables.
///
/// Instances are cached per GridSpec (see `of`). Transforms reuse internal
/// buffers, so a workspace must not be shared between threads.
class SpectralWorkspace {
 public:
  explicit SpectralWorkspace(const GridSpec& grid);
  ~SpectralWorkspace();
  SpectralWorkspace(const SpectralWorkspace&) = delete;
  SpectralWorkspace& operator=(const SpectralWorkspace&) = delete;

  static SpectralWorkspace& of(const GridSpec& grid);

  const GridSpec& grid() const { return grid_; }
  std::size_t spectral_size() const { return spectral_size_; }

  /// Unnormalized forward transform.
  Spectrum forward(std::span<const double> values) const;
  Spectrum forward(const ScalarField& f) const { return forward(f.values()); }
  /// Inverse transform including the 1/N normalization.
  ScalarField backward(const Spectrum& s) const;

  /// Signed wavenumber along an axis (1/length); zero on inactive axes.
  std::span<const double> wavenumber(int axis) const { return xi_[axis]; }
  /// As `wavenumber` but with the Nyquist plane zeroed, used for derivatives.
  std::span<const double> derivative_wavenumber(int axis) const { return dxi_[axis]; }
  /// Signed integer mode number along an axis.
  std::span<const int> mode(int axis) const { return mode_[axis]; }
  std::span<const double> magnitude() const { return mag_; }
  /// 1 where every active |mode| < n/3 (2/3 rule), else 0.
  std::span<const unsigned char> dealias_mask() const { return mask_; }
  /// Multiplicity of each half-spectrum entry in the full spectrum (1 or 2).
  std::span<const double> parseval_weight() const { return weight_; }
  /// Largest |xi| seen by derivative operators; the spectral radius of curl.
  double max_derivative_wavenumber() const { return max_dxi_; }
  /// Largest derivative wavenumber along one axis.
  double max_axis_wavenumber() const;

 private:
  struct Plans;

  GridSpec grid_;
  std::size_t spectral_size_ = 0;
  std::array<std::vector<double>, 3> xi_;
  std::array<std::vector<double>, 3> dxi_;
  std::array<std::vector<int>, 3> mode_;
  std::vector<double> mag_;
  std::vector<unsigned char> mask_;
  std::vector<double> weight_;
  double max_dxi_ = 0.0;
  std::unique_ptr<Plans> plans_;
};

/// Full-spectrum sum  sum_k w_k m(k) |c_k|^2 / N  with pairwise reduction.
/// Equals h^{-d} times the squared L2 norm weighted by the multiplier m.
double weighted_spectral_energy(const SpectralWorkspace& ws, const Spectrum& s,
                                std::span<const double> multiplier_sq);

}  // namespace emlab
