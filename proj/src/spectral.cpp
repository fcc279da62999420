#include "emlab/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <numbers>
#include <tuple>

namespace emlab {

struct SpectralWorkspace::Plans {
  double* real = nullptr;
  fftw_complex* cplx = nullptr;
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;

  ~Plans() {
    if (fwd) fftw_destroy_plan(fwd);
    if (bwd) fftw_destroy_plan(bwd);
    if (real) fftw_free(real);
    if (cplx) fftw_free(cplx);
  }
};

SpectralWorkspace::SpectralWorkspace(const GridSpec& grid) : grid_(grid) {
  const int d = grid.dims;
  const int n = grid.n;
  const int nh = n / 2 + 1;
  spectral_size_ = static_cast<std::size_t>(nh);
  for (int a = 0; a < d - 1; ++a) spectral_size_ *= static_cast<std::size_t>(n);

  for (int a = 0; a < 3; ++a) {
    xi_[a].assign(spectral_size_, 0.0);
    dxi_[a].assign(spectral_size_, 0.0);
    mode_[a].assign(spectral_size_, 0);
  }
  mag_.assign(spectral_size_, 0.0);
  mask_.assign(spectral_size_, 1);
  weight_.assign(spectral_size_, 2.0);

  const double unit = std::numbers::pi / grid.half_width;  // 2 pi / period
  for (std::size_t s = 0; s < spectral_size_; ++s) {
    std::size_t rest = s;
    std::array<int, 3> j{0, 0, 0};
    j[d - 1] = static_cast<int>(rest % static_cast<std::size_t>(nh));
    rest /= static_cast<std::size_t>(nh);
    for (int a = d - 2; a >= 0; --a) {
      j[a] = static_cast<int>(rest % static_cast<std::size_t>(n));
      rest /= static_cast<std::size_t>(n);
    }
    double m2 = 0.0, dm2 = 0.0;
    for (int a = 0; a < d; ++a) {
      const int k = (j[a] <= n / 2) ? j[a] : j[a] - n;
      mode_[a][s] = k;
      xi_[a][s] = unit * k;
      dxi_[a][s] = (std::abs(k) == n / 2) ? 0.0 : unit * k;
      m2 += xi_[a][s] * xi_[a][s];
      dm2 += dxi_[a][s] * dxi_[a][s];
      if (3 * std::abs(k) >= n) mask_[s] = 0;
    }
    mag_[s] = std::sqrt(m2);
    max_dxi_ = std::max(max_dxi_, std::sqrt(dm2));
    if (j[d - 1] == 0 || j[d - 1] == n / 2) weight_[s] = 1.0;
  }

  plans_ = std::make_unique<Plans>();
  plans_->real = fftw_alloc_real(grid.size());
  plans_->cplx = fftw_alloc_complex(spectral_size_);
  std::array<int, 3> dimsz{n, n, n};
  // FFTW_ESTIMATE keeps plan selection (and therefore rounding) identical across runs.
  plans_->fwd = fftw_plan_dft_r2c(d, dimsz.data(), plans_->real, plans_->cplx, FFTW_ESTIMATE);
  plans_->bwd = fftw_plan_dft_c2r(d, dimsz.data(), plans_->cplx, plans_->real, FFTW_ESTIMATE);
  if (!plans_->fwd || !plans_->bwd) throw Error("spectral: FFTW plan creation failed");
}

SpectralWorkspace::~SpectralWorkspace() = default;

SpectralWorkspace& SpectralWorkspace::of(const GridSpec& grid) {
  using Key = std::tuple<int, int, double>;
  static std::map<Key, std::unique_ptr<SpectralWorkspace>> cache;
  const Key key{grid.dims, grid.n, grid.half_width};
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, std::make_unique<SpectralWorkspace>(grid)).first;
  return *it->second;
}

double SpectralWorkspace::max_axis_wavenumber() const {
  return std::numbers::pi / grid_.half_width * (grid_.n / 2 - 1);
}

Spectrum SpectralWorkspace::forward(std::span<const double> values) const {
  if (values.size() != grid_.size()) throw Error("spectral forward: size mismatch");
  std::memcpy(plans_->real, values.data(), values.size() * sizeof(double));
  fftw_execute(plans_->fwd);
  Spectrum out(spectral_size_);
  std::memcpy(static_cast<void*>(out.data()), plans_->cplx, spectral_size_ * sizeof(fftw_complex));
  return out;
}

ScalarField SpectralWorkspace::backward(const Spectrum& s) const {
  if (s.size() != spectral_size_) throw Error("spectral backward: size mismatch");
  std::memcpy(plans_->cplx, static_cast<const void*>(s.data()), spectral_size_ * sizeof(fftw_complex));
  fftw_execute(plans_->bwd);
  ScalarField out(grid_);
  const double inv = 1.0 / static_cast<double>(grid_.size());
  auto v = out.values();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = plans_->real[i] * inv;
  return out;
}

double weighted_spectral_energy(const SpectralWorkspace& ws, const Spectrum& s,
                                std::span<const double> multiplier_sq) {
  std::vector<double> terms(s.size());
  const auto w = ws.parseval_weight();
  for (std::size_t k = 0; k < s.size(); ++k) terms[k] = w[k] * multiplier_sq[k] * std::norm(s[k]);
  return pairwise_sum(terms) / static_cast<double>(ws.grid().size());
}

}  // namespace emlab
