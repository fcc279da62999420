// Time integration of the symmetrized Euler-Maxwell system and of the
// perturbation system around the expanding Burgers background.
#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "emlab/burgers.hpp"
#include "emlab/grid.hpp"
#include "emlab/makino.hpp"

namespace emlab {

enum class Frame { original, comoving };
enum class HaltReason { completed, support_escape, non_finite, cfl_violation };

const char* to_string(Frame f);
const char* to_string(HaltReason r);
Frame parse_frame(const std::string& s);

struct SchemeConfig {
  /// Fixed step, used when cfl == 0.
  double dt = 1e-3;
  /// When > 0 the step is cfl / (spectral rate of the right-hand side).
  double cfl = 0.0;
  double T = 1.0;
  /// Strength of the order-36 exponential filter; 0 disables it.
  double filter_strength = 0.0;
  Frame frame = Frame::original;
  /// The largest evolved component value outside (1 - margin) L must stay below
  /// support_tolerance times the largest value anywhere.
  double margin = 0.2;
  double support_tolerance = 1e-4;
  /// Order s of the Xdot_s column.
  double sobolev_order = 3.0;
  /// Further Xdot_sigma orders recorded per snapshot.
  std::vector<double> sigmas;
  /// Snapshot cadence in steps; 0 means max(1, floor(T / (200 dt))) for a
  /// fixed step and T/200 in time for an adaptive one.
  int snapshot_every = 0;
  /// Times at which full states are kept (steps are shortened to land on them).
  std::vector<double> capture_times;

  void validate() const;
};

/// One diagnostics snapshot. Norms refer to the Eulerian variable x in both
/// frames.
struct DiagnosticsRecord {
  double t = 0.0;
  double energy = 0.0;
  double dissipation = 0.0;
  double em_sq = 0.0;  // ||E||^2 + ||B||^2
  double divB = 0.0;   // max |div B|
  double Zdiag = 0.0;  // ||B - curl u||_L2
  double compat = std::numeric_limits<double>::quiet_NaN();
  double X0 = 0.0;
  double Xs = 0.0;
  std::vector<double> xdot;  // per SchemeConfig::sigmas
  std::size_t clip_count = 0;
  double support_frac = 0.0;
};

/// Symmetrized unknowns (Makino variable rho) of the full system.
struct FullState {
  double t = 0.0;
  ScalarField rho;
  VectorField u, E, B;

  void axpy(double a, const FullState& d);
  FullState zero_like() const;
};

/// Perturbation (rho, w, e, b) plus the free background fields (ebar, bbar).
/// In the comoving frame the fields are functions of y = x / (1 + t).
struct PerturbationState {
  double t = 0.0;
  ScalarField rho;
  VectorField w, e, b, ebar, bbar;

  void axpy(double a, const PerturbationState& d);
  PerturbationState zero_like() const;
};

/// Evaluates the symmetrized right-hand side. Negative Makino values are
/// treated as vacuum in the current source and counted in `clipped`.
FullState rhs_full(const FullState& s, const SimParams& p, std::size_t* clipped = nullptr);

/// Geometry and background for perturbation runs.
///
/// The background velocity expands along the active axes only, so in
/// reduced dimensions div v = dims / (1 + t). Linear coefficients (y in the
/// comoving frame, v in the original one) are multiplied by a smooth window
/// that is 1 inside (1 - margin) L and vanishes near the box edge.
class PerturbationModel {
 public:
  /// `background` is only used in the original frame (identity by default).
  PerturbationModel(const GridSpec& grid, const SimParams& params, Frame frame, double margin,
                    std::optional<FlowEval> background = std::nullopt);

  const GridSpec& grid() const { return grid_; }
  const SimParams& params() const { return params_; }
  Frame frame() const { return frame_; }

  PerturbationState rhs(const PerturbationState& s, std::size_t* clipped = nullptr) const;
  /// Upper bound of the spectral radius of the linearized right-hand side.
  double rate(const PerturbationState& s) const;

  /// Windowed background velocity and its Jacobian ([i][j] = d_j v_i) at time t
  /// in the original frame.
  struct Background {
    VectorField v;
    std::array<VectorField, 3> Dv;
  };
  const Background& background(double t) const;
  /// Windowed y (comoving frame).
  const VectorField& windowed_position() const { return ywin_; }

 private:
  GridSpec grid_;
  SimParams params_;
  Frame frame_;
  std::optional<FlowEval> flow_;
  ScalarField window_;
  VectorField window_grad_;
  VectorField ywin_;
  mutable std::optional<std::pair<double, Background>> cache_;
};

template <class State>
struct RunResult {
  std::vector<DiagnosticsRecord> records;
  HaltReason reason = HaltReason::completed;
  std::string message;
  double final_time = 0.0;
  long steps = 0;
  State final_state;
  std::vector<State> captured;
  std::size_t clip_count = 0;
  /// Energy removed by the spectral filter (0 when it is off).
  double filter_loss = 0.0;
};

/// Classical four-stage step for any state with axpy/zero_like.
template <class State, class Rhs>
State step_rk4(const State& y, const Rhs& rhs, double dt) {
  const State k1 = rhs(y);
  State s = y;
  s.axpy(0.5 * dt, k1);
  s.t = y.t + 0.5 * dt;
  const State k2 = rhs(s);
  s = y;
  s.axpy(0.5 * dt, k2);
  s.t = y.t + 0.5 * dt;
  const State k3 = rhs(s);
  s = y;
  s.axpy(dt, k3);
  s.t = y.t + dt;
  const State k4 = rhs(s);
  State out = y;
  out.axpy(dt / 6.0, k1);
  out.axpy(dt / 3.0, k2);
  out.axpy(dt / 3.0, k3);
  out.axpy(dt / 6.0, k4);
  out.t = y.t + dt;
  return out;
}

/// Runs the full system. The initial state is dealiased first; the run halts
/// cleanly (partial trajectory, reason set) on support escape, non-finite
/// values or CFL violation.
RunResult<FullState> run_simulation(const FullState& initial, const SimParams& params, const SchemeConfig& cfg);
RunResult<PerturbationState> run_simulation(const PerturbationState& initial, const PerturbationModel& model,
                                            const SchemeConfig& cfg);

/// Energy and dissipation of a full state.
double total_energy(const FullState& s, const SimParams& p);
double dissipation(const FullState& s, const SimParams& p);

struct EnergyResidual {
  std::vector<double> t_mid;
  std::vector<double> residual;
  double max_abs = 0.0;
};

/// r_k = (E_{k+1} - E_k)/dt_snap + (average dissipation over the interval),
/// with the average from a four-point interpolatory quadrature. Needs
/// uniformly spaced snapshots (at least 4).
EnergyResidual energy_identity_residual(const std::vector<DiagnosticsRecord>& records);

struct ConstraintSeries {
  std::vector<double> t, divB, Zdiag, compat;
};
ConstraintSeries constraint_monitors(const std::vector<DiagnosticsRecord>& records);

void write_diagnostics_csv(const std::string& path, const std::vector<DiagnosticsRecord>& records);

/// Comoving-frame fields mapped back to x at time t: f(x) = F(x / (1 + t)).
PerturbationState to_original_frame(const PerturbationState& comoving);

struct FrameCrossCheckOptions {
  double T = 0.5;
  double dt = 0.01;
  double margin = 0.2;
};

struct FrameCrossCheck {
  double residual = 0.0;    // ||original - mapped comoving|| at dt/2
  double reference = 0.0;   // ||original|| at T
  double time_error_comoving = 0.0;
  double time_error_original = 0.0;
  double spatial_floor_comoving = 0.0;
  double spatial_floor_original = 0.0;
  double prediction = 0.0;
  bool pass = false;
};

/// Evolves identical data in both frames (steps dt and dt/2, grids n and 2n)
/// and compares at T. The prediction sums Richardson time-error estimates and
/// the resolution-doubling differences of both frames; pass iff
/// residual <= 10 * prediction.
FrameCrossCheck frame_cross_check(const std::function<PerturbationState(const GridSpec&)>& data,
                                  const GridSpec& grid, const SimParams& params, const FrameCrossCheckOptions& opt);

/// L2 norm of the quadruple (rho, w, e, b).
double perturbation_l2(const PerturbationState& s);
PerturbationState difference(const PerturbationState& a, const PerturbationState& b);

}  // namespace emlab
