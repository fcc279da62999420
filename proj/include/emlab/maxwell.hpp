// Source-free damped Maxwell system: closed-form plane waves and a spectral
// integrating-factor RK4 stepper.
#pragma once

#include <array>
#include <string>
#include <vector>

#include "emlab/grid.hpp"
#include "emlab/spectral.hpp"

namespace emlab {

struct FreeEMState {
  double t = 0.0;
  VectorField E;
  VectorField B;
};

/// e^{-alpha t} times the undamped pair E = p cos(k.x - |k| t),
/// B = (k/|k| x p) cos(k.x - |k| t), with k = (pi/L) mode.
FreeEMState exact_plane_wave(const GridSpec& grid, const std::array<int, 3>& mode,
                             const std::array<double, 3>& polarization, double alpha, double t);

/// Largest stable step: dt max|xi| <= 2.8 (RK4 stability on the imaginary axis).
double maxwell_cfl_limit(const GridSpec& grid);

/// Holds (E, B) in Fourier space so steps need no transforms.
///
/// Damping enters through exact integrating factors (Lawson RK4), so for
/// alpha1 == alpha2 the scheme is e^{-alpha t} times undamped RK4.
class MaxwellPropagator {
 public:
  MaxwellPropagator(const GridSpec& grid, double alpha1, double alpha2);

  void load(const FreeEMState& s);
  FreeEMState state() const;
  double time() const { return t_; }
  /// Throws if dt exceeds maxwell_cfl_limit.
  void step(double dt);

  /// 1/2 (||E||^2 + ||B||^2), and the two squared norms.
  double energy() const;
  double electric_sq() const;
  double magnetic_sq() const;
  double max_div_E() const;
  double max_div_B() const;

 private:
  using Block = std::array<Spectrum, 6>;
  Block apply_curl(const Block& y) const;
  void damp(Block& y, double h) const;
  double norm_sq(int first) const;
  double max_div(int first) const;

  GridSpec grid_;
  const SpectralWorkspace* ws_;
  double alpha1_, alpha2_;
  double t_ = 0.0;
  Block y_;
};

FreeEMState step_maxwell_free(const FreeEMState& state, double dt, double alpha1, double alpha2);

struct FreeEMRecord {
  double t = 0.0;
  double energy = 0.0;
  double electric_sq = 0.0;
  double magnetic_sq = 0.0;
  double div_E = 0.0;
  double div_B = 0.0;
};

/// Fixed-step run; records every `record_every` steps and at the end.
std::vector<FreeEMRecord> run_maxwell_free(const FreeEMState& initial, double dt, double T, double alpha1,
                                           double alpha2, int record_every, FreeEMState* final_state = nullptr);

struct FreeDecayReport {
  double alpha = 0.0;
  bool monotone = false;
  double worst_increase = 0.0;  // largest relative step-to-step increase
  bool equal_damping = false;
  double max_rel_rate_error = 0.0;  // |E(t)/E(0) - e^{-2 alpha t}| / e^{-2 alpha t}
  bool rate_ok = true;              // within tol (equal damping only)
  bool envelope_ok = false;         // ||E||^2 + ||B||^2 <= 2 E(0) e^{-alpha t}
  double envelope_margin = 0.0;
  double log_slope = 0.0;  // least-squares slope of log energy in t
  double final_ratio = 0.0;
  double expected_ratio = 0.0;  // e^{-2 alpha T}
  double max_div_B = 0.0;
  bool pass = false;
};

FreeDecayReport decay_check_free(const std::vector<FreeEMRecord>& trajectory, double alpha1, double alpha2,
                                 double tol = 1e-6);

void write_free_csv(const std::string& path, const std::vector<FreeEMRecord>& trajectory);

}  // namespace emlab
