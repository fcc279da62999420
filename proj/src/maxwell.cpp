#include "emlab/maxwell.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>

namespace emlab {

namespace {

const Complex kI{0.0, 1.0};
constexpr double kStabilityRadius = 2.8;
constexpr double kMonotoneSlack = 1e-12;

void axpy(std::array<Spectrum, 6>& y, double a, const std::array<Spectrum, 6>& x) {
  for (int c = 0; c < 6; ++c)
    for (std::size_t k = 0; k < y[c].size(); ++k) y[c][k] += a * x[c][k];
}

}  // namespace

FreeEMState exact_plane_wave(const GridSpec& grid, const std::array<int, 3>& mode,
                             const std::array<double, 3>& polarization, double alpha, double t) {
  double k2 = 0.0, kp = 0.0, p2 = 0.0;
  for (int a = 0; a < 3; ++a) {
    if (a >= grid.dims && mode[a] != 0) throw Error("exact_plane_wave: mode along an inactive axis");
    if (2 * std::abs(mode[a]) >= grid.n) throw Error("exact_plane_wave: mode not resolved by the grid");
    k2 += double(mode[a]) * mode[a];
    kp += mode[a] * polarization[a];
    p2 += polarization[a] * polarization[a];
  }
  if (k2 == 0.0) throw Error("exact_plane_wave: zero wave vector");
  if (std::abs(kp) > 1e-12 * std::sqrt(k2 * p2)) throw Error("exact_plane_wave: polarization not orthogonal to k");

  const double unit = std::numbers::pi / grid.half_width;
  const double kn = std::sqrt(k2);
  const double omega = unit * kn;
  const std::array<double, 3> bdir{(mode[1] * polarization[2] - mode[2] * polarization[1]) / kn,
                                   (mode[2] * polarization[0] - mode[0] * polarization[2]) / kn,
                                   (mode[0] * polarization[1] - mode[1] * polarization[0]) / kn};
  const double decay = std::exp(-alpha * t);
  const auto wave = [&](const std::array<double, 3>& dir) {
    return VectorField::sample(grid, [&](double x, double y, double z) {
      const double c = decay * std::cos(unit * (mode[0] * x + mode[1] * y + mode[2] * z) - omega * t);
      return std::array<double, 3>{dir[0] * c, dir[1] * c, dir[2] * c};
    });
  };
  return FreeEMState{t, wave(polarization), wave(bdir)};
}

double maxwell_cfl_limit(const GridSpec& grid) {
  return kStabilityRadius / SpectralWorkspace::of(grid).max_derivative_wavenumber();
}

MaxwellPropagator::MaxwellPropagator(const GridSpec& grid, double alpha1, double alpha2)
    : grid_(grid), ws_(&SpectralWorkspace::of(grid)), alpha1_(alpha1), alpha2_(alpha2) {
  if (!(alpha1 >= 0.0) || !(alpha2 >= 0.0)) throw Error("MaxwellPropagator: damping rates must be >= 0");
  for (auto& s : y_) s.assign(ws_->spectral_size(), Complex{0.0, 0.0});
}

void MaxwellPropagator::load(const FreeEMState& s) {
  require_same_grid(grid_, s.E.grid(), "MaxwellPropagator::load");
  require_same_grid(grid_, s.B.grid(), "MaxwellPropagator::load");
  for (int c = 0; c < 3; ++c) {
    y_[c] = ws_->forward(s.E[c]);
    y_[c + 3] = ws_->forward(s.B[c]);
  }
  t_ = s.t;
}

FreeEMState MaxwellPropagator::state() const {
  FreeEMState s{t_, VectorField(grid_), VectorField(grid_)};
  for (int c = 0; c < 3; ++c) {
    s.E[c] = ws_->backward(y_[c]);
    s.B[c] = ws_->backward(y_[c + 3]);
  }
  return s;
}

MaxwellPropagator::Block MaxwellPropagator::apply_curl(const Block& y) const {
  Block out;
  const auto x0 = ws_->derivative_wavenumber(0);
  const auto x1 = ws_->derivative_wavenumber(1);
  const auto x2 = ws_->derivative_wavenumber(2);
  for (auto& s : out) s.resize(ws_->spectral_size());
  for (std::size_t k = 0; k < ws_->spectral_size(); ++k) {
    // dE/dt = curl B, dB/dt = -curl E
    out[0][k] = kI * (x1[k] * y[5][k] - x2[k] * y[4][k]);
    out[1][k] = kI * (x2[k] * y[3][k] - x0[k] * y[5][k]);
    out[2][k] = kI * (x0[k] * y[4][k] - x1[k] * y[3][k]);
    out[3][k] = -kI * (x1[k] * y[2][k] - x2[k] * y[1][k]);
    out[4][k] = -kI * (x2[k] * y[0][k] - x0[k] * y[2][k]);
    out[5][k] = -kI * (x0[k] * y[1][k] - x1[k] * y[0][k]);
  }
  return out;
}

void MaxwellPropagator::damp(Block& y, double h) const {
  const double fe = std::exp(-alpha1_ * h);
  const double fb = std::exp(-alpha2_ * h);
  for (int c = 0; c < 6; ++c) {
    const double f = c < 3 ? fe : fb;
    if (f == 1.0) continue;
    for (auto& v : y[c]) v *= f;
  }
}

void MaxwellPropagator::step(double dt) {
  if (!(dt > 0.0)) throw Error("step_maxwell_free: dt must be positive");
  if (dt > maxwell_cfl_limit(grid_) * (1.0 + 1e-12))
    throw Error("step_maxwell_free: dt violates the CFL bound " + std::to_string(maxwell_cfl_limit(grid_)));

  const Block k1 = apply_curl(y_);
  Block stage = y_;
  axpy(stage, 0.5 * dt, k1);
  damp(stage, 0.5 * dt);
  const Block k2 = apply_curl(stage);

  Block half = y_;
  damp(half, 0.5 * dt);
  stage = half;
  axpy(stage, 0.5 * dt, k2);
  const Block k3 = apply_curl(stage);

  Block k3d = k3;
  damp(k3d, 0.5 * dt);
  stage = y_;
  damp(stage, dt);
  axpy(stage, dt, k3d);
  const Block k4 = apply_curl(stage);

  // y_{n+1} = P(h) y + h/6 [P(h) k1 + 2 P(h/2)(k2 + k3) + k4]
  Block mid = k2;
  axpy(mid, 1.0, k3);
  damp(mid, 0.5 * dt);
  Block k1d = k1;
  damp(k1d, dt);
  damp(y_, dt);
  axpy(y_, dt / 6.0, k1d);
  axpy(y_, dt / 3.0, mid);
  axpy(y_, dt / 6.0, k4);
  t_ += dt;
}

double MaxwellPropagator::norm_sq(int first) const {
  std::vector<double> ones(ws_->spectral_size(), 1.0);
  double acc = 0.0;
  for (int c = first; c < first + 3; ++c) acc += weighted_spectral_energy(*ws_, y_[c], ones);
  return grid_.cell_volume() * acc;
}

double MaxwellPropagator::max_div(int first) const {
  Spectrum d(ws_->spectral_size(), Complex{0.0, 0.0});
  for (int a = 0; a < grid_.dims; ++a) {
    const auto xi = ws_->derivative_wavenumber(a);
    for (std::size_t k = 0; k < d.size(); ++k) d[k] += kI * xi[k] * y_[first + a][k];
  }
  return ws_->backward(d).max_abs();
}

double MaxwellPropagator::electric_sq() const { return norm_sq(0); }
double MaxwellPropagator::magnetic_sq() const { return norm_sq(3); }
double MaxwellPropagator::energy() const { return 0.5 * (electric_sq() + magnetic_sq()); }
double MaxwellPropagator::max_div_E() const { return max_div(0); }
double MaxwellPropagator::max_div_B() const { return max_div(3); }

FreeEMState step_maxwell_free(const FreeEMState& state, double dt, double alpha1, double alpha2) {
  MaxwellPropagator p(state.E.grid(), alpha1, alpha2);
  p.load(state);
  p.step(dt);
  return p.state();
}

std::vector<FreeEMRecord> run_maxwell_free(const FreeEMState& initial, double dt, double T, double alpha1,
                                           double alpha2, int record_every, FreeEMState* final_state) {
  if (!(T >= 0.0) || record_every < 1) throw Error("run_maxwell_free: need T >= 0 and record_every >= 1");
  MaxwellPropagator p(initial.E.grid(), alpha1, alpha2);
  p.load(initial);
  const auto record = [&] {
    return FreeEMRecord{p.time(), p.energy(), p.electric_sq(), p.magnetic_sq(), p.max_div_E(), p.max_div_B()};
  };
  std::vector<FreeEMRecord> out{record()};
  const long steps = std::lround(T / dt);
  if (std::abs(steps * dt - T) > 1e-9 * std::max(1.0, T)) throw Error("run_maxwell_free: T must be a multiple of dt");
  for (long s = 1; s <= steps; ++s) {
    p.step(dt);
    if (s % record_every == 0 || s == steps) out.push_back(record());
  }
  if (final_state) *final_state = p.state();
  return out;
}

FreeDecayReport decay_check_free(const std::vector<FreeEMRecord>& traj, double alpha1, double alpha2, double tol) {
  if (traj.size() < 10) throw Error("decay_check_free: need at least 10 snapshots");
  FreeDecayReport r;
  r.alpha = std::min(alpha1, alpha2);
  r.equal_damping = alpha1 == alpha2;
  const double e0 = traj.front().energy;
  const double t0 = traj.front().t;

  r.monotone = true;
  r.envelope_ok = true;
  r.envelope_margin = 1.0;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const auto& rec = traj[k];
    r.max_div_B = std::max(r.max_div_B, rec.div_B);
    if (k > 0 && e0 > 0.0) {
      const double inc = (rec.energy - traj[k - 1].energy) / e0;
      r.worst_increase = std::max(r.worst_increase, inc);
      if (inc > kMonotoneSlack) r.monotone = false;
    }
    const double dt = rec.t - t0;
    if (e0 > 0.0) {
      const double bound = 2.0 * e0 * std::exp(-r.alpha * dt);
      const double m = 1.0 - (rec.electric_sq + rec.magnetic_sq) / bound;
      r.envelope_margin = std::min(r.envelope_margin, m);
      if (m < -kMonotoneSlack) r.envelope_ok = false;
      if (r.equal_damping) {
        const double expected = std::exp(-2.0 * r.alpha * dt);
        r.max_rel_rate_error = std::max(r.max_rel_rate_error, std::abs(rec.energy / e0 - expected) / expected);
      }
    }
  }
  if (r.equal_damping) r.rate_ok = r.max_rel_rate_error <= tol;

  const double T = traj.back().t - t0;
  r.final_ratio = e0 > 0.0 ? traj.back().energy / e0 : 1.0;
  r.expected_ratio = std::exp(-2.0 * r.alpha * T);

  if (e0 > 0.0) {
    double st = 0.0, sy = 0.0;
    for (const auto& rec : traj) {
      st += rec.t;
      sy += std::log(std::max(rec.energy, 1e-300));
    }
    const double n = static_cast<double>(traj.size());
    const double mt = st / n, my = sy / n;
    double sxy = 0.0, sxx = 0.0;
    for (const auto& rec : traj) {
      sxy += (rec.t - mt) * (std::log(std::max(rec.energy, 1e-300)) - my);
      sxx += (rec.t - mt) * (rec.t - mt);
    }
    r.log_slope = sxx > 0.0 ? sxy / sxx : 0.0;
  }
  r.pass = r.monotone && r.rate_ok && r.envelope_ok;
  return r;
}

void write_free_csv(const std::string& path, const std::vector<FreeEMRecord>& traj) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path + " for writing");
  os << std::setprecision(17) << "t,energy,E_sq,B_sq,divE,divB\n";
  for (const auto& r : traj)
    os << r.t << "," << r.energy << "," << r.electric_sq << "," << r.magnetic_sq << "," << r.div_E << "," << r.div_B
       << "\n";
}

}  // namespace emlab
