#include "emlab/sobolev.hpp"

#include <algorithm>
#include <numbers>
#include <limits>
#include <random>

#include "emlab/operators.hpp"
#include "emlab/spectral.hpp"

namespace emlab {

namespace {

double seminorm_sq(const ScalarField& f, double sigma) {
  const auto& ws = SpectralWorkspace::of(f.grid());
  const auto mag = ws.magnitude();
  std::vector<double> m2(ws.spectral_size());
  for (std::size_t k = 0; k < m2.size(); ++k) {
    if (mag[k] == 0.0)
      m2[k] = (sigma == 0.0) ? 1.0 : 0.0;
    else
      m2[k] = (sigma == 0.0) ? 1.0 : std::pow(mag[k], 2.0 * sigma);
  }
  return f.grid().cell_volume() * weighted_spectral_energy(ws, ws.forward(f), m2);
}

double sup_norm_hessian(const ScalarField& v) {
  const auto g = grad(v);
  const auto H = jacobian(g);
  double m = 0.0;
  for (std::size_t p = 0; p < v.size(); ++p) {
    double acc = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) acc += H[i][j][p] * H[i][j][p];
    m = std::max(m, std::sqrt(acc));
  }
  return m;
}

// Periodized kernel sum_m |z + 2 L m|^{-p}, with an integral tail.
double periodized_kernel(double z, double L, double p) {
  constexpr int kImages = 2000;
  double acc = std::pow(std::abs(z), -p);
  const double P = 2.0 * L;
  for (int m = 1; m <= kImages; ++m) acc += std::pow(P * m + z, -p) + std::pow(P * m - z, -p);
  acc += 2.0 * std::pow(P, -p) * std::pow(kImages + 0.5, 1.0 - p) / (p - 1.0);
  return acc;
}

double uniform_pm1(std::mt19937_64& rng) {
  return 2.0 * static_cast<double>(rng() >> 11) * 0x1.0p-53 - 1.0;
}

}  // namespace

double l2_norm(const ScalarField& f) { return std::sqrt(seminorm_sq(f, 0.0)); }

double l2_norm(const VectorField& F) { return sobolev_seminorm(F, 0.0); }

double sobolev_seminorm(const ScalarField& f, double sigma) {
  return std::sqrt(seminorm_sq(f, sigma));
}

double sobolev_seminorm(const VectorField& F, double sigma) {
  return std::sqrt(seminorm_sq(F[0], sigma) + seminorm_sq(F[1], sigma) + seminorm_sq(F[2], sigma));
}

double sobolev_seminorm(std::span<const ScalarField* const> parts, double sigma) {
  double acc = 0.0;
  for (const ScalarField* f : parts) acc += seminorm_sq(*f, sigma);
  return std::sqrt(acc);
}

double gagliardo_constant_1d(double sigma) {
  return 2.0 * std::numbers::pi / (std::tgamma(1.0 + 2.0 * sigma) * std::sin(std::numbers::pi * sigma));
}

double gagliardo_seminorm_1d(const ScalarField& f, double sigma) {
  const auto& g = f.grid();
  if (g.dims != 1) throw Error("gagliardo_seminorm_1d: needs exactly one active dimension");
  if (!(sigma > 0.0 && sigma < 1.0)) throw Error("gagliardo_seminorm_1d: sigma must lie in (0, 1)");
  const int n = g.n;
  const double h = g.spacing();
  const double p = 1.0 + 2.0 * sigma;

  std::vector<double> kernel(static_cast<std::size_t>(n), 0.0);
  for (int j = 1; j < n; ++j) {
    const int o = (j <= n / 2) ? j : j - n;
    kernel[static_cast<std::size_t>(j)] = periodized_kernel(o * h, g.half_width, p);
  }

  const ScalarField df = partial(f, 0);
  // Leading correction for the |z|^{1-2 sigma} behaviour at the excluded diagonal.
  const double diag = -2.0 * std::riemann_zeta(2.0 * sigma - 1.0) * std::pow(h, 2.0 - 2.0 * sigma);

  std::vector<double> rows(static_cast<std::size_t>(n));
  std::vector<double> terms(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (j == i) {
        terms[static_cast<std::size_t>(j)] = 0.0;
        continue;
      }
      const double d = f[static_cast<std::size_t>(i)] - f[static_cast<std::size_t>(j)];
      terms[static_cast<std::size_t>(j)] = d * d * kernel[static_cast<std::size_t>((j - i + n) % n)];
    }
    const double dfi = df[static_cast<std::size_t>(i)];
    rows[static_cast<std::size_t>(i)] = h * pairwise_sum(terms) + diag * dfi * dfi;
  }
  const double integral = h * pairwise_sum(rows);
  return std::sqrt(std::max(0.0, integral) / gagliardo_constant_1d(sigma));
}

ScalarField commutator(const ScalarField& v, const ScalarField& u, double s) {
  require_same_grid(v.grid(), u.grid(), "commutator");
  ScalarField out = hadamard(v, fractional_op(u, s));
  out -= fractional_op(hadamard(v, u), s);
  return out;
}

CommutatorRatios commutator_ratio(const ScalarField& v, const ScalarField& u, double s) {
  require_same_grid(v.grid(), u.grid(), "commutator_ratio");
  if (!(s > 0.0)) throw Error("commutator_ratio: s must be positive");
  const auto gv = grad(v);
  const double grad_v_sup = gv.max_norm();
  const double u_sup = u.max_abs();
  const bool v_trivial = grad_v_sup == 0.0 && sobolev_seminorm(v, s) == 0.0;
  if (v_trivial && u_sup == 0.0) throw Error("commutator_ratio: both inputs are trivial");

  const ScalarField c = commutator(v, u, s);
  CommutatorRatios r;
  const double den1 = sobolev_seminorm(v, s) * u_sup + grad_v_sup * sobolev_seminorm(u, s - 1.0);
  r.first_order = den1 > 0.0 ? l2_norm(c) / den1 : 0.0;

  if (s > 1.0) {
    // s grad v . L^{s-2} grad u
    ScalarField principal(v.grid());
    const auto gu = grad(u);
    for (int j = 0; j < v.grid().dims; ++j)
      principal += hadamard(gv[j], fractional_op_signed(gu[j], s - 2.0));
    ScalarField rem = c;
    rem.axpy(-s, principal);
    const double den2 = sobolev_seminorm(v, s) * u_sup + sup_norm_hessian(v) * sobolev_seminorm(u, s - 2.0);
    r.second_order = den2 > 0.0 ? l2_norm(rem) / den2 : 0.0;
  } else {
    r.second_order = std::numeric_limits<double>::quiet_NaN();
  }
  return r;
}

ScalarField random_band_limited(const GridSpec& grid, int kmax, std::uint64_t seed) {
  if (kmax < 1) throw Error("random_band_limited: kmax must be >= 1");
  std::mt19937_64 rng(seed);
  struct Mode {
    std::array<int, 3> k;
    double a, b;
  };
  std::vector<Mode> modes;
  const int d = grid.dims;
  std::array<int, 3> k{0, 0, 0};
  const int span = 2 * kmax + 1;
  int total = 1;
  for (int a = 0; a < d; ++a) total *= span;
  for (int idx = 0; idx < total; ++idx) {
    int rest = idx;
    for (int a = d - 1; a >= 0; --a) {
      k[a] = rest % span - kmax;
      rest /= span;
    }
    // Keep one representative of each +-k pair; skip the mean.
    int first = 0;
    for (int a = 0; a < d && first == 0; ++a) first = k[a];
    if (first <= 0) continue;
    double k2 = 0.0;
    for (int a = 0; a < d; ++a) k2 += double(k[a]) * k[a];
    const double amp = 1.0 / (1.0 + k2);
    const double ca = amp * uniform_pm1(rng);
    const double cb = amp * uniform_pm1(rng);
    modes.push_back({k, ca, cb});
  }
  const double unit = std::numbers::pi / grid.half_width;
  return ScalarField::sample(grid, [&](double x, double y, double z) {
    const std::array<double, 3> p{x, y, z};
    double acc = 0.0;
    for (const auto& m : modes) {
      double phase = 0.0;
      for (int a = 0; a < d; ++a) phase += unit * m.k[a] * p[a];
      acc += m.a * std::cos(phase) + m.b * std::sin(phase);
    }
    return acc;
  });
}

}  // namespace emlab
