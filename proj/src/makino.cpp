#include "emlab/makino.hpp"

#include <cmath>

#include "emlab/operators.hpp"
#include "emlab/sobolev.hpp"

namespace emlab {

namespace {

// Largest relative amplitude tolerated outside the inner 2/3 of the box.
constexpr double kSupportTolerance = 1e-4;

double clip_or_throw(double v, std::size_t* clipped, const char* where) {
  if (v >= 0.0) return v;
  if (v > -kClipTolerance) {
    if (clipped) ++*clipped;
    return 0.0;
  }
  throw Error(std::string(where) + ": negative input below the clip tolerance");
}

void check_support(const ScalarField& f, const char* what) {
  const double inner = 2.0 * f.grid().half_width / 3.0;
  if (outer_fraction(f, inner) > kSupportTolerance)
    throw Error(std::string("prepare_data: ") + what + " is not confined to the inner 2/3 of the box");
}

}  // namespace

double SimParams::makino_factor() const { return 2.0 * std::sqrt(A * gamma) / (gamma - 1.0); }

double SimParams::density_coefficient() const { return std::pow(1.0 / makino_factor(), density_power()); }

void SimParams::validate() const {
  if (!(A > 0.0) || !std::isfinite(A)) throw Error("params: A must be positive");
  if (!(gamma > 1.0) || !std::isfinite(gamma)) throw Error("params: gamma must exceed 1");
  if (!(alpha1 >= 0.0) || !(alpha2 >= 0.0)) throw Error("params: damping rates must be >= 0");
}

ScalarField to_makino(const ScalarField& density, const SimParams& p, std::size_t* clipped) {
  p.validate();
  ScalarField out(density.grid());
  const double c = p.makino_factor();
  const double e = 0.5 * (p.gamma - 1.0);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = c * std::pow(clip_or_throw(density[i], clipped, "to_makino"), e);
  return out;
}

ScalarField from_makino(const ScalarField& makino, const SimParams& p, std::size_t* clipped) {
  p.validate();
  ScalarField out(makino.grid());
  const double c = 1.0 / p.makino_factor();
  const double e = p.density_power();
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = std::pow(c * clip_or_throw(makino[i], clipped, "from_makino"), e);
  return out;
}

ScalarField density_from_makino_clamped(const ScalarField& makino, const SimParams& p,
                                        std::size_t* clipped) {
  ScalarField out(makino.grid());
  const double c = 1.0 / p.makino_factor();
  const double e = p.density_power();
  for (std::size_t i = 0; i < out.size(); ++i) {
    double r = makino[i];
    if (r < 0.0) {
      if (clipped && r <= -kClipTolerance) ++*clipped;
      r = 0.0;
    }
    out[i] = std::pow(c * r, e);
  }
  return out;
}

ScalarField pressure(const ScalarField& density, const SimParams& p) {
  ScalarField out(density.grid());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = p.A * std::pow(std::max(density[i], 0.0), p.gamma);
  return out;
}

VectorField ohm_current(const ScalarField& density, const VectorField& u) {
  VectorField J = scale(density, u);
  J *= -1.0;
  return J;
}

ScalarField charge_density(const VectorField& E) { return -1.0 * div(E); }

double compatibility_residual(const FluidEMState& before, const FluidEMState& after, double alpha1) {
  const double dt = after.t - before.t;
  if (!(dt > 0.0)) throw Error("compatibility_residual: snapshots must be ordered with dt > 0");
  const ScalarField q0 = before.charge ? *before.charge : charge_density(before.E);
  const ScalarField q1 = after.charge ? *after.charge : charge_density(after.E);
  ScalarField r = (1.0 / dt) * ((after.density - q1) - (before.density - q0));
  r.axpy(-0.5 * alpha1, q0);
  r.axpy(-0.5 * alpha1, q1);
  return l2_norm(r);
}

double quadruple_norm(const ScalarField& rho, const VectorField& u, const VectorField& E,
                      const VectorField& B, double s) {
  const ScalarField* parts[] = {&rho, &u[0], &u[1], &u[2], &E[0], &E[1], &E[2], &B[0], &B[1], &B[2]};
  return inhomogeneous_norm(sobolev_seminorm(parts, 0.0), sobolev_seminorm(parts, s));
}

PreparedData prepare_data(RawData raw, const DataHypotheses& hyp, std::optional<double> budget,
                          double budget_order) {
  const GridSpec& g = raw.rho.grid();
  for (const ScalarField* f : {&raw.u[0], &raw.E[0], &raw.B[0]}) require_same_grid(g, f->grid(), "prepare_data");
  check_support(raw.rho, "rho");
  for (int k = 0; k < 3; ++k) {
    check_support(raw.u[k], "u");
    check_support(raw.E[k], "E");
    check_support(raw.B[k], "B");
  }

  if (hyp.magnetic_from_velocity)
    raw.B = curl(raw.u);
  else if (hyp.project_magnetic)
    raw.B = leray_project(raw.B);

  ScalarField charge = hyp.charge ? *hyp.charge : charge_density(raw.E);
  if (hyp.charge) {
    require_same_grid(g, hyp.charge->grid(), "prepare_data");
    // grad Lap^{-1}(-charge - div E) fixes div E = -charge.
    ScalarField defect = -1.0 * charge;
    defect -= div(raw.E);
    const double mean = pairwise_sum(defect.values()) / static_cast<double>(defect.size());
    if (std::abs(mean) > 1e-12 * std::max(1.0, defect.max_abs()))
      throw Error("prepare_data: requested charge density has nonzero mean on the periodic box");
    raw.E += grad(inverse_laplacian(defect));
  }

  PreparedData out{std::move(raw), std::move(charge), 1.0};
  if (budget) {
    if (!(*budget > 0.0)) throw Error("prepare_data: smallness budget must be positive");
    const double now = quadruple_norm(out.fields.rho, out.fields.u, out.fields.E, out.fields.B, budget_order);
    if (now == 0.0) throw Error("prepare_data: cannot rescale identically zero data");
    const double c = *budget / now;
    out.fields.rho *= c;
    out.fields.u *= c;
    out.fields.E *= c;
    out.fields.B *= c;
    out.charge *= c;
    out.scale = c;
  }
  return out;
}

}  // namespace emlab
