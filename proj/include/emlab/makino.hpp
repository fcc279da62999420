// Physical state, the Makino sound-speed variable, and constraint-aware
// initial data preparation.
#pragma once

#include <algorithm>
#include <optional>

#include "emlab/grid.hpp"

namespace emlab {

/// Pressure law A rho^gamma and the two field damping rates.
struct SimParams {
  double A = 1.0;
  double gamma = 1.4;
  double alpha1 = 0.0;
  double alpha2 = 0.0;

  double alpha() const { return std::min(alpha1, alpha2); }
  /// 2 sqrt(A gamma) / (gamma - 1)
  double makino_factor() const;
  /// 2 / (gamma - 1), the power taking the Makino variable back to density.
  double density_power() const { return 2.0 / (gamma - 1.0); }
  /// ((gamma - 1) / (2 sqrt(A gamma)))^{2/(gamma-1)}
  double density_coefficient() const;
  void validate() const;
};

/// Roundoff band below zero that is silently clipped to vacuum.
inline constexpr double kClipTolerance = 1e-14;

/// Density -> Makino variable. Values in (-kClipTolerance, 0) are clipped
/// (and counted when `clipped` is given); anything more negative throws.
ScalarField to_makino(const ScalarField& density, const SimParams& p, std::size_t* clipped = nullptr);
ScalarField from_makino(const ScalarField& makino, const SimParams& p, std::size_t* clipped = nullptr);
/// Density reconstruction used inside time stepping: negative Makino values
/// (spectral undershoot near vacuum) map to vacuum and are counted.
ScalarField density_from_makino_clamped(const ScalarField& makino, const SimParams& p,
                                        std::size_t* clipped = nullptr);

ScalarField pressure(const ScalarField& density, const SimParams& p);
/// J = -rho u
VectorField ohm_current(const ScalarField& density, const VectorField& u);
/// rho_tilde = -div E
ScalarField charge_density(const VectorField& E);

/// Physical unknowns at one instant.
struct FluidEMState {
  double t = 0.0;
  ScalarField density;
  VectorField u;
  VectorField E;
  VectorField B;
  std::optional<ScalarField> charge;  // derived from E when present
};

/// L2 norm of the discrete residual of d/dt(density - charge) - alpha1 charge,
/// with a forward difference in time and the trapezoidal average of the charge.
double compatibility_residual(const FluidEMState& before, const FluidEMState& after, double alpha1);

/// Which constraints prepare_data must enforce.
struct DataHypotheses {
  bool magnetic_from_velocity = false;  // B0 = curl u0
  bool project_magnetic = true;         // Leray-project B0 otherwise
  std::optional<ScalarField> charge;    // requested rho_tilde_0 (mean-free)
};

/// Raw initial data in Makino form (rho is the sound-speed variable).
struct RawData {
  ScalarField rho;
  VectorField u;
  VectorField E;
  VectorField B;
};

struct PreparedData {
  RawData fields;
  /// Charge density the fields were built for (equals -div E).
  ScalarField charge;
  /// Factor applied to (rho, u, E, B, charge) to meet the smallness budget.
  double scale = 1.0;
};

/// Imposes div B0 = 0 (projection, or B0 = curl u0), div E0 = -charge via a
/// spectral gradient correction, and optionally rescales everything so that
/// sqrt(Xdot_0^2 + Xdot_s^2) of (rho, u, E, B) equals `budget`.
///
/// Requires the data to be negligible outside the inner 2/3 of the box.
PreparedData prepare_data(RawData raw, const DataHypotheses& hyp,
                          std::optional<double> budget = std::nullopt, double budget_order = 3.0);

/// sqrt(Xdot_0^2 + Xdot_s^2) of the quadruple (rho, u, E, B).
double quadruple_norm(const ScalarField& rho, const VectorField& u, const VectorField& E,
                      const VectorField& B, double s);

}  // namespace emlab
