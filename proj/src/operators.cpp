#include "emlab/operators.hpp"

#include <cmath>
#include <numbers>

namespace emlab {

namespace {

const Complex kI{0.0, 1.0};

// i * xi_a * s, the spectral derivative along one axis.
Spectrum differentiate(const SpectralWorkspace& ws, const Spectrum& s, int axis) {
  Spectrum out(s.size());
  const auto xi = ws.derivative_wavenumber(axis);
  for (std::size_t k = 0; k < s.size(); ++k) out[k] = kI * xi[k] * s[k];
  return out;
}

std::array<Spectrum, 3> forward3(const SpectralWorkspace& ws, const VectorField& F) {
  return {ws.forward(F[0]), ws.forward(F[1]), ws.forward(F[2])};
}

double smooth_step(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / t);
  const double b = std::exp(-1.0 / (1.0 - t));
  return a / (a + b);
}

double smooth_step_slope(double t) {
  if (t <= 0.0 || t >= 1.0) return 0.0;
  const double a = std::exp(-1.0 / t);
  const double b = std::exp(-1.0 / (1.0 - t));
  return a * b * (1.0 / (t * t) + 1.0 / ((1.0 - t) * (1.0 - t))) / ((a + b) * (a + b));
}

}  // namespace

ScalarField partial(const ScalarField& f, int axis) {
  if (axis >= f.grid().dims) return ScalarField(f.grid());
  const auto& ws = SpectralWorkspace::of(f.grid());
  return ws.backward(differentiate(ws, ws.forward(f), axis));
}

VectorField grad(const ScalarField& f) {
  const auto& ws = SpectralWorkspace::of(f.grid());
  const Spectrum s = ws.forward(f);
  VectorField out(f.grid());
  for (int a = 0; a < f.grid().dims; ++a) out[a] = ws.backward(differentiate(ws, s, a));
  return out;
}

ScalarField div(const VectorField& F) {
  const auto& g = F.grid();
  require_same_grid(g, F[1].grid(), "div");
  require_same_grid(g, F[2].grid(), "div");
  const auto& ws = SpectralWorkspace::of(g);
  Spectrum acc(ws.spectral_size(), Complex{0.0, 0.0});
  for (int a = 0; a < g.dims; ++a) {
    const Spectrum s = ws.forward(F[a]);
    const auto xi = ws.derivative_wavenumber(a);
    for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += kI * xi[k] * s[k];
  }
  return ws.backward(acc);
}

VectorField curl(const VectorField& F) {
  const auto& g = F.grid();
  require_same_grid(g, F[1].grid(), "curl");
  require_same_grid(g, F[2].grid(), "curl");
  const auto& ws = SpectralWorkspace::of(g);
  const auto s = forward3(ws, F);
  const auto x0 = ws.derivative_wavenumber(0);
  const auto x1 = ws.derivative_wavenumber(1);
  const auto x2 = ws.derivative_wavenumber(2);
  VectorField out(g);
  Spectrum t(ws.spectral_size());
  for (std::size_t k = 0; k < t.size(); ++k) t[k] = kI * (x1[k] * s[2][k] - x2[k] * s[1][k]);
  out[0] = ws.backward(t);
  for (std::size_t k = 0; k < t.size(); ++k) t[k] = kI * (x2[k] * s[0][k] - x0[k] * s[2][k]);
  out[1] = ws.backward(t);
  for (std::size_t k = 0; k < t.size(); ++k) t[k] = kI * (x0[k] * s[1][k] - x1[k] * s[0][k]);
  out[2] = ws.backward(t);
  return out;
}

std::array<VectorField, 3> jacobian(const VectorField& F) {
  const auto& g = F.grid();
  const auto& ws = SpectralWorkspace::of(g);
  std::array<VectorField, 3> out{VectorField(g), VectorField(g), VectorField(g)};
  for (int i = 0; i < 3; ++i) {
    const Spectrum s = ws.forward(F[i]);
    for (int j = 0; j < g.dims; ++j) out[i][j] = ws.backward(differentiate(ws, s, j));
  }
  return out;
}

VectorField advect(const VectorField& a, const VectorField& F) {
  const auto J = jacobian(F);
  VectorField out(F.grid());
  const int d = F.grid().dims;
  for (int i = 0; i < 3; ++i)
    for (std::size_t p = 0; p < out[i].size(); ++p) {
      double acc = 0.0;
      for (int j = 0; j < d; ++j) acc += a[j][p] * J[i][j][p];
      out[i][p] = acc;
    }
  return out;
}

ScalarField apply_multiplier(const ScalarField& f, const std::function<Complex(std::size_t)>& m) {
  const auto& ws = SpectralWorkspace::of(f.grid());
  Spectrum s = ws.forward(f);
  for (std::size_t k = 0; k < s.size(); ++k) s[k] *= m(k);
  return ws.backward(s);
}

ScalarField fractional_op_signed(const ScalarField& f, double sigma) {
  if (!std::isfinite(sigma)) throw Error("fractional_op: order must be finite");
  const auto& ws = SpectralWorkspace::of(f.grid());
  const auto mag = ws.magnitude();
  Spectrum s = ws.forward(f);
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (mag[k] == 0.0)
      s[k] = (sigma == 0.0) ? s[k] : Complex{0.0, 0.0};
    else if (sigma != 0.0)
      s[k] *= std::pow(mag[k], sigma);
  }
  return ws.backward(s);
}

ScalarField fractional_op(const ScalarField& f, double sigma) {
  if (!(sigma >= 0.0)) throw Error("fractional_op: order must be >= 0");
  return fractional_op_signed(f, sigma);
}

ScalarField dealias(const ScalarField& f) {
  const auto& ws = SpectralWorkspace::of(f.grid());
  Spectrum s = ws.forward(f);
  const auto mask = ws.dealias_mask();
  for (std::size_t k = 0; k < s.size(); ++k)
    if (!mask[k]) s[k] = Complex{0.0, 0.0};
  return ws.backward(s);
}

VectorField dealias(const VectorField& F) {
  return VectorField(dealias(F[0]), dealias(F[1]), dealias(F[2]));
}

ScalarField exp36_filter(const ScalarField& f, double strength) {
  const auto& ws = SpectralWorkspace::of(f.grid());
  const int d = f.grid().dims;
  const double kmax = f.grid().n / 2;
  Spectrum s = ws.forward(f);
  for (std::size_t k = 0; k < s.size(); ++k) {
    double damp = 1.0;
    for (int a = 0; a < d; ++a) damp *= std::exp(-strength * std::pow(std::abs(ws.mode(a)[k]) / kmax, 36));
    s[k] *= damp;
  }
  return ws.backward(s);
}

ScalarField inverse_laplacian(const ScalarField& f) {
  const auto& ws = SpectralWorkspace::of(f.grid());
  const auto mag = ws.magnitude();
  Spectrum s = ws.forward(f);
  const double scale = std::max(1.0, f.max_abs());
  if (std::abs(s[0]) / static_cast<double>(f.size()) > 1e-12 * scale)
    throw Error("inverse_laplacian: source has nonzero mean; the periodic Poisson problem is singular");
  for (std::size_t k = 0; k < s.size(); ++k)
    s[k] = (mag[k] == 0.0) ? Complex{0.0, 0.0} : -s[k] / (mag[k] * mag[k]);
  return ws.backward(s);
}

VectorField leray_project(const VectorField& F) {
  const auto& g = F.grid();
  const auto& ws = SpectralWorkspace::of(g);
  auto s = forward3(ws, F);
  for (std::size_t k = 0; k < ws.spectral_size(); ++k) {
    double k2 = 0.0;
    Complex kdotf{0.0, 0.0};
    for (int a = 0; a < g.dims; ++a) {
      const double x = ws.derivative_wavenumber(a)[k];
      k2 += x * x;
      kdotf += x * s[a][k];
    }
    if (k2 == 0.0) continue;
    for (int a = 0; a < g.dims; ++a) s[a][k] -= ws.derivative_wavenumber(a)[k] * kdotf / k2;
  }
  return VectorField(ws.backward(s[0]), ws.backward(s[1]), ws.backward(s[2]));
}

ScalarField dilate(const ScalarField& f, double factor) {
  if (!(factor >= 1.0)) throw Error("dilate: factor must be >= 1");
  const auto& g = f.grid();
  const int n = g.n;
  const double L = g.half_width;
  // Periodic interpolation kernel of the even-n trigonometric interpolant.
  std::vector<double> T(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i) {
    const double p = g.coord(i) / factor;
    for (int j = 0; j < n; ++j) {
      const double z = std::numbers::pi * (p - g.coord(j)) / L;
      double acc = 1.0 + std::cos(0.5 * n * z);
      for (int k = 1; k < n / 2; ++k) acc += 2.0 * std::cos(k * z);
      T[static_cast<std::size_t>(i) * n + j] = acc / n;
    }
  }
  std::vector<double> cur(f.values().begin(), f.values().end());
  std::vector<double> next(cur.size());
  const std::size_t total = cur.size();
  for (int a = 0; a < g.dims; ++a) {
    std::size_t stride = 1;
    for (int b = a + 1; b < g.dims; ++b) stride *= static_cast<std::size_t>(n);
    const std::size_t block = stride * static_cast<std::size_t>(n);
    for (std::size_t base = 0; base < total; base += block)
      for (std::size_t off = 0; off < stride; ++off)
        for (int i = 0; i < n; ++i) {
          double acc = 0.0;
          for (int j = 0; j < n; ++j)
            acc += T[static_cast<std::size_t>(i) * n + j] * cur[base + off + static_cast<std::size_t>(j) * stride];
          next[base + off + static_cast<std::size_t>(i) * stride] = acc;
        }
    std::swap(cur, next);
  }
  return ScalarField(g, std::move(cur));
}

VectorField dilate(const VectorField& F, double factor) {
  return VectorField(dilate(F[0], factor), dilate(F[1], factor), dilate(F[2], factor));
}

ScalarField box_window(const GridSpec& grid, double inner, double outer) {
  if (!(outer > inner) || inner <= 0.0) throw Error("box_window: need 0 < inner < outer");
  return ScalarField::sample(grid, [&](double x, double y, double z) {
    const std::array<double, 3> p{x, y, z};
    double w = 1.0;
    for (int a = 0; a < grid.dims; ++a) w *= smooth_step((outer - std::abs(p[a])) / (outer - inner));
    return w;
  });
}

VectorField box_window_gradient(const GridSpec& grid, double inner, double outer) {
  if (!(outer > inner) || inner <= 0.0) throw Error("box_window_gradient: need 0 < inner < outer");
  const double width = outer - inner;
  return VectorField::sample(grid, [&](double x, double y, double z) {
    const std::array<double, 3> p{x, y, z};
    std::array<double, 3> step{1.0, 1.0, 1.0}, slope{0.0, 0.0, 0.0};
    for (int a = 0; a < grid.dims; ++a) {
      const double u = (outer - std::abs(p[a])) / width;
      step[a] = smooth_step(u);
      slope[a] = -std::copysign(1.0, p[a]) * smooth_step_slope(u) / width;
    }
    std::array<double, 3> out{0.0, 0.0, 0.0};
    for (int a = 0; a < grid.dims; ++a) {
      out[a] = slope[a];
      for (int b = 0; b < grid.dims; ++b)
        if (b != a) out[a] *= step[b];
    }
    return out;
  });
}

double outer_fraction(const ScalarField& f, double inner) {
  const double total = f.max_abs();
  if (total == 0.0) return 0.0;
  double outside = 0.0;
  const auto& g = f.grid();
  for (std::size_t i = 0; i < f.size(); ++i) {
    const auto p = g.position(i);
    bool out = false;
    for (int a = 0; a < g.dims; ++a) out = out || std::abs(p[a]) > inner;
    if (out) outside = std::max(outside, std::abs(f[i]));
  }
  return outside / total;
}

}  // namespace emlab
