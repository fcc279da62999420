// Periodic computational box and the sampled fields that live on it.
#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace emlab {

/// Thrown for contract violations and unrecoverable numerical failures.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Periodic box [-L, L)^dims sampled with n points per active axis.
///
/// Fields vary only along the first `dims` coordinates; vector fields still
/// carry three components. Storage is row-major over the active axes, so
/// axis 0 is the slowest index.
struct GridSpec {
  int dims = 1;
  int n = 8;
  double half_width = 1.0;

  /// Validating constructor; n must be even, >= 8 and 2,3,5-smooth.
  static GridSpec make(int dims, int n, double half_width);

  double spacing() const { return 2.0 * half_width / n; }
  std::size_t size() const;
  double cell_volume() const;
  double box_volume() const;
  double coord(int i) const { return -half_width + i * spacing(); }
  /// Active-axis node indices of a flat index (inactive entries are 0).
  std::array<int, 3> unflatten(std::size_t flat) const;
  /// Physical position of a node (inactive coordinates are 0).
  std::array<double, 3> position(std::size_t flat) const;

  bool operator==(const GridSpec&) const = default;
};

void require_same_grid(const GridSpec& a, const GridSpec& b, const char* where);

class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(const GridSpec& grid, double fill = 0.0);
  ScalarField(const GridSpec& grid, std::vector<double> values);

  /// Samples f(x, y, z) at every node.
  template <class F>
  static ScalarField sample(const GridSpec& grid, F&& f) {
    ScalarField out(grid);
    for (std::size_t i = 0; i < out.size(); ++i) {
      const auto p = grid.position(i);
      out.values_[i] = f(p[0], p[1], p[2]);
    }
    return out;
  }

  const GridSpec& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::vector<double>& storage() { return values_; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  ScalarField& operator+=(const ScalarField& o);
  ScalarField& operator-=(const ScalarField& o);
  ScalarField& operator*=(double a);
  /// this += a * x
  void axpy(double a, const ScalarField& x);

  double max_abs() const;
  bool all_finite() const;

 private:
  GridSpec grid_;
  std::vector<double> values_;
};

ScalarField operator+(ScalarField a, const ScalarField& b);
ScalarField operator-(ScalarField a, const ScalarField& b);
ScalarField operator*(double a, ScalarField f);
/// Pointwise product.
ScalarField hadamard(const ScalarField& a, const ScalarField& b);

struct VectorField {
  std::array<ScalarField, 3> c;

  VectorField() = default;
  explicit VectorField(const GridSpec& grid, double fill = 0.0)
      : c{ScalarField(grid, fill), ScalarField(grid, fill), ScalarField(grid, fill)} {}
  VectorField(ScalarField x, ScalarField y, ScalarField z);

  template <class F>
  static VectorField sample(const GridSpec& grid, F&& f) {
    VectorField out(grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const auto p = grid.position(i);
      const std::array<double, 3> v = f(p[0], p[1], p[2]);
      for (int k = 0; k < 3; ++k) out.c[k][i] = v[k];
    }
    return out;
  }

  const GridSpec& grid() const { return c[0].grid(); }
  ScalarField& operator[](int k) { return c[k]; }
  const ScalarField& operator[](int k) const { return c[k]; }

  VectorField& operator+=(const VectorField& o);
  VectorField& operator-=(const VectorField& o);
  VectorField& operator*=(double a);
  void axpy(double a, const VectorField& x);
  /// Largest pointwise Euclidean length.
  double max_norm() const;
  bool all_finite() const;
};

VectorField operator+(VectorField a, const VectorField& b);
VectorField operator-(VectorField a, const VectorField& b);
VectorField operator*(double a, VectorField f);
ScalarField dot(const VectorField& a, const VectorField& b);
VectorField cross(const VectorField& a, const VectorField& b);
VectorField scale(const ScalarField& s, const VectorField& v);

/// Pairwise (tree) summation; fixed association order makes results
/// bit-reproducible.
double pairwise_sum(std::span<const double> xs);

/// Quadrature of f over the box (cell volume times pairwise sum).
double integrate(const ScalarField& f);

}  // namespace emlab
