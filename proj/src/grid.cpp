#include "emlab/grid.hpp"

#include <algorithm>
#include <cmath>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace emlab {

namespace {

// Field arithmetic allocates and frees large buffers every step; keep them
// on the heap instead of returning them to the kernel each time.
#if defined(__GLIBC__)
const bool kAllocatorTuned = [] {
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
  return true;
}();
#endif

}  // namespace

namespace {

bool is_smooth_235(int n) {
  for (int p : {2, 3, 5})
    while (n % p == 0) n /= p;
  return n == 1;
}

}  // namespace

GridSpec GridSpec::make(int dims, int n, double half_width) {
  if (dims < 1 || dims > 3) throw Error("grid: active_dims must be 1, 2 or 3");
  if (n < 8 || n % 2 != 0 || !is_smooth_235(n))
    throw Error("grid: n must be even, >= 8 and have only factors 2, 3, 5 (got " +
                std::to_string(n) + ")");
  if (!(half_width > 0.0) || !std::isfinite(half_width))
    throw Error("grid: half width L must be positive and finite");
  return GridSpec{dims, n, half_width};
}

std::size_t GridSpec::size() const {
  std::size_t s = 1;
  for (int a = 0; a < dims; ++a) s *= static_cast<std::size_t>(n);
  return s;
}

double GridSpec::cell_volume() const { return std::pow(spacing(), dims); }

double GridSpec::box_volume() const { return std::pow(2.0 * half_width, dims); }

std::array<int, 3> GridSpec::unflatten(std::size_t flat) const {
  std::array<int, 3> idx{0, 0, 0};
  for (int a = dims - 1; a >= 0; --a) {
    idx[a] = static_cast<int>(flat % static_cast<std::size_t>(n));
    flat /= static_cast<std::size_t>(n);
  }
  return idx;
}

std::array<double, 3> GridSpec::position(std::size_t flat) const {
  const auto idx = unflatten(flat);
  std::array<double, 3> p{0.0, 0.0, 0.0};
  for (int a = 0; a < dims; ++a) p[a] = coord(idx[a]);
  return p;
}

void require_same_grid(const GridSpec& a, const GridSpec& b, const char* where) {
  if (!(a == b)) throw Error(std::string(where) + ": fields live on different grids");
}

ScalarField::ScalarField(const GridSpec& grid, double fill)
    : grid_(grid), values_(grid.size(), fill) {}

ScalarField::ScalarField(const GridSpec& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size()) throw Error("ScalarField: value count does not match grid");
}

ScalarField& ScalarField::operator+=(const ScalarField& o) {
  require_same_grid(grid_, o.grid_, "ScalarField +=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
  return *this;
}

ScalarField& ScalarField::operator-=(const ScalarField& o) {
  require_same_grid(grid_, o.grid_, "ScalarField -=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
  return *this;
}

ScalarField& ScalarField::operator*=(double a) {
  for (double& v : values_) v *= a;
  return *this;
}

void ScalarField::axpy(double a, const ScalarField& x) {
  require_same_grid(grid_, x.grid_, "ScalarField axpy");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += a * x.values_[i];
}

double ScalarField::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

bool ScalarField::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
ScalarField operator*(double a, ScalarField f) { return f *= a; }

ScalarField hadamard(const ScalarField& a, const ScalarField& b) {
  require_same_grid(a.grid(), b.grid(), "hadamard");
  ScalarField out(a.grid());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

VectorField::VectorField(ScalarField x, ScalarField y, ScalarField z)
    : c{std::move(x), std::move(y), std::move(z)} {
  require_same_grid(c[0].grid(), c[1].grid(), "VectorField");
  require_same_grid(c[0].grid(), c[2].grid(), "VectorField");
}

VectorField& VectorField::operator+=(const VectorField& o) {
  for (int k = 0; k < 3; ++k) c[k] += o.c[k];
  return *this;
}

VectorField& VectorField::operator-=(const VectorField& o) {
  for (int k = 0; k < 3; ++k) c[k] -= o.c[k];
  return *this;
}

VectorField& VectorField::operator*=(double a) {
  for (auto& f : c) f *= a;
  return *this;
}

void VectorField::axpy(double a, const VectorField& x) {
  for (int k = 0; k < 3; ++k) c[k].axpy(a, x.c[k]);
}

double VectorField::max_norm() const {
  double m = 0.0;
  for (std::size_t i = 0; i < c[0].size(); ++i)
    m = std::max(m, std::sqrt(c[0][i] * c[0][i] + c[1][i] * c[1][i] + c[2][i] * c[2][i]));
  return m;
}

bool VectorField::all_finite() const {
  return c[0].all_finite() && c[1].all_finite() && c[2].all_finite();
}

VectorField operator+(VectorField a, const VectorField& b) { return a += b; }
VectorField operator-(VectorField a, const VectorField& b) { return a -= b; }
VectorField operator*(double a, VectorField f) { return f *= a; }

ScalarField dot(const VectorField& a, const VectorField& b) {
  require_same_grid(a.grid(), b.grid(), "dot");
  ScalarField out(a.grid());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = a[0][i] * b[0][i] + a[1][i] * b[1][i] + a[2][i] * b[2][i];
  return out;
}

VectorField cross(const VectorField& a, const VectorField& b) {
  require_same_grid(a.grid(), b.grid(), "cross");
  VectorField out(a.grid());
  for (std::size_t i = 0; i < a.grid().size(); ++i) {
    out[0][i] = a[1][i] * b[2][i] - a[2][i] * b[1][i];
    out[1][i] = a[2][i] * b[0][i] - a[0][i] * b[2][i];
    out[2][i] = a[0][i] * b[1][i] - a[1][i] * b[0][i];
  }
  return out;
}

VectorField scale(const ScalarField& s, const VectorField& v) {
  return VectorField(hadamard(s, v[0]), hadamard(s, v[1]), hadamard(s, v[2]));
}

double pairwise_sum(std::span<const double> xs) {
  constexpr std::size_t kLeaf = 32;
  if (xs.size() <= kLeaf) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
  }
  const std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

double integrate(const ScalarField& f) { return f.grid().cell_volume() * pairwise_sum(f.values()); }

}  // namespace emlab
