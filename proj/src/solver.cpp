#include "emlab/solver.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

#include "emlab/operators.hpp"
#include "emlab/sobolev.hpp"
#include "emlab/spectral.hpp"

namespace emlab {

namespace {

constexpr double kStabilityRadius = 2.8;

using Jacobian = std::array<VectorField, 3>;

void require_finite(const ScalarField& f, const char* term) {
  if (!f.all_finite()) throw Error(std::string("non-finite value in ") + term);
}

void require_finite(const VectorField& f, const char* term) {
  if (!f.all_finite()) throw Error(std::string("non-finite value in ") + term);
}

ScalarField trace(const Jacobian& J, int dims) {
  ScalarField out(J[0].grid());
  for (int a = 0; a < dims; ++a) out += J[a][a];
  return out;
}

VectorField curl_of(const Jacobian& J) {
  return VectorField(J[2][1] - J[1][2], J[0][2] - J[2][0], J[1][0] - J[0][1]);
}

/// (y . grad) b for solenoidal b written as -curl(W x b) - d b + P b, with P
/// keeping the active components. Agrees with transport() where W = y; its
/// divergence is -(d - 1) div b for any W.
VectorField dilation_transport_solenoidal(const VectorField& W, const VectorField& b, int dims) {
  VectorField out = curl(cross(W, b));
  out *= -1.0;
  out.axpy(-(dims - 1.0), b);
  for (int c = dims; c < 3; ++c) out[c] -= b[c];
  return out;
}

/// (a . grad) F given the Jacobian of F.
VectorField transport(const VectorField& a, const Jacobian& J, int dims) {
  VectorField out(a.grid());
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < dims; ++j) out[i] += hadamard(a[j], J[i][j]);
  return out;
}

ScalarField transport(const VectorField& a, const VectorField& grad_f, int dims) {
  ScalarField out(a.grid());
  for (int j = 0; j < dims; ++j) out += hadamard(a[j], grad_f[j]);
  return out;
}

double max_scalar(const ScalarField& f) { return f.max_abs(); }

double integral_sq(const VectorField& F) { return integrate(dot(F, F)); }

/// Largest |f| outside (1 - margin) L relative to the largest |f| anywhere,
/// over all components of a state.
double support_fraction(std::initializer_list<const ScalarField*> fields, double margin) {
  double inside = 0.0, outside = 0.0;
  const GridSpec& g = (*fields.begin())->grid();
  const double inner = (1.0 - margin) * g.half_width;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto p = g.position(i);
    bool out = false;
    for (int a = 0; a < g.dims; ++a) out = out || std::abs(p[a]) > inner;
    double& slot = out ? outside : inside;
    for (const ScalarField* f : fields) slot = std::max(slot, std::abs((*f)[i]));
  }
  const double total = std::max(inside, outside);
  return total > 0.0 ? outside / total : 0.0;
}

double quad_seminorm(const ScalarField& r, const VectorField& u, const VectorField& e, const VectorField& b,
                     double sigma) {
  const ScalarField* parts[] = {&r, &u[0], &u[1], &u[2], &e[0], &e[1], &e[2], &b[0], &b[1], &b[2]};
  return sobolev_seminorm(parts, sigma);
}

ScalarField restrict_to(const ScalarField& fine, const GridSpec& coarse) {
  const GridSpec& g = fine.grid();
  if (g.n != 2 * coarse.n || g.dims != coarse.dims || g.half_width != coarse.half_width)
    throw Error("restrict_to: fine grid must double the coarse one");
  ScalarField out(coarse);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto idx = coarse.unflatten(i);
    std::size_t flat = 0;
    for (int a = 0; a < g.dims; ++a) flat = flat * static_cast<std::size_t>(g.n) + static_cast<std::size_t>(2 * idx[a]);
    out[i] = fine[flat];
  }
  return out;
}

VectorField restrict_to(const VectorField& fine, const GridSpec& coarse) {
  return VectorField(restrict_to(fine[0], coarse), restrict_to(fine[1], coarse), restrict_to(fine[2], coarse));
}

}  // namespace

const char* to_string(Frame f) { return f == Frame::original ? "original" : "comoving"; }

const char* to_string(HaltReason r) {
  switch (r) {
    case HaltReason::completed: return "completed";
    case HaltReason::support_escape: return "support_escape";
    case HaltReason::non_finite: return "non_finite";
    case HaltReason::cfl_violation: return "cfl_violation";
  }
  return "unknown";
}

Frame parse_frame(const std::string& s) {
  if (s == "original") return Frame::original;
  if (s == "comoving") return Frame::comoving;
  throw Error("unknown frame '" + s + "' (expected original or comoving)");
}

void SchemeConfig::validate() const {
  if (!(cfl >= 0.0) || cfl > kStabilityRadius) throw Error("scheme: cfl must lie in [0, 2.8]");
  if (cfl == 0.0 && !(dt > 0.0)) throw Error("scheme: dt must be positive");
  if (!(T > 0.0) || !std::isfinite(T)) throw Error("scheme: T must be positive");
  if (!(filter_strength >= 0.0)) throw Error("scheme: filter strength must be >= 0");
  if (!(margin > 0.0 && margin < 0.5)) throw Error("scheme: margin must lie in (0, 0.5)");
  if (!(support_tolerance > 0.0)) throw Error("scheme: support tolerance must be positive");
  if (!(sobolev_order >= 0.0)) throw Error("scheme: sobolev order must be >= 0");
  for (double s : sigmas)
    if (!(s >= 0.0)) throw Error("scheme: sigma orders must be >= 0");
  if (snapshot_every < 0) throw Error("scheme: snapshot cadence must be >= 0");
  for (double c : capture_times)
    if (!(c > 0.0 && c <= T)) throw Error("scheme: capture times must lie in (0, T]");
}

void FullState::axpy(double a, const FullState& d) {
  rho.axpy(a, d.rho);
  u.axpy(a, d.u);
  E.axpy(a, d.E);
  B.axpy(a, d.B);
}

FullState FullState::zero_like() const {
  const GridSpec& g = rho.grid();
  return FullState{t, ScalarField(g), VectorField(g), VectorField(g), VectorField(g)};
}

void PerturbationState::axpy(double a, const PerturbationState& d) {
  rho.axpy(a, d.rho);
  w.axpy(a, d.w);
  e.axpy(a, d.e);
  b.axpy(a, d.b);
  ebar.axpy(a, d.ebar);
  bbar.axpy(a, d.bbar);
}

PerturbationState PerturbationState::zero_like() const {
  const GridSpec& g = rho.grid();
  return PerturbationState{t, ScalarField(g), VectorField(g), VectorField(g), VectorField(g), VectorField(g),
                           VectorField(g)};
}

// ---------------------------------------------------------------------------
// Full system

FullState rhs_full(const FullState& s, const SimParams& p, std::size_t* clipped) {
  const GridSpec& g = s.rho.grid();
  const int d = g.dims;
  const double gc = 0.5 * (p.gamma - 1.0);

  const VectorField grad_rho = grad(s.rho);
  const Jacobian Ju = jacobian(s.u);
  const ScalarField div_u = trace(Ju, d);
  const ScalarField density = density_from_makino_clamped(s.rho, p, clipped);

  FullState out = s.zero_like();

  ScalarField adv_rho = transport(s.u, grad_rho, d);
  require_finite(adv_rho, "density transport");
  out.rho = -1.0 * adv_rho;
  out.rho.axpy(-gc, hadamard(s.rho, div_u));

  VectorField adv_u = transport(s.u, Ju, d);
  require_finite(adv_u, "velocity transport");
  VectorField lorentz = s.E + cross(s.u, s.B);
  require_finite(lorentz, "Lorentz force");
  out.u = -1.0 * adv_u;
  out.u.axpy(-gc, scale(s.rho, grad_rho));
  out.u -= lorentz;

  VectorField current = scale(density, s.u);
  require_finite(current, "current source");
  out.E = curl(s.B);
  out.E.axpy(-p.alpha1, s.E);
  out.E += current;

  out.B = -1.0 * curl(s.E);
  out.B.axpy(-p.alpha2, s.B);

  out.rho = dealias(out.rho);
  out.u = dealias(out.u);
  out.E = dealias(out.E);
  out.B = dealias(out.B);
  require_finite(out.rho, "density equation");
  require_finite(out.u, "momentum equation");
  require_finite(out.E, "electric field equation");
  require_finite(out.B, "magnetic field equation");
  return out;
}

double total_energy(const FullState& s, const SimParams& p) {
  const ScalarField density = density_from_makino_clamped(s.rho, p);
  ScalarField integrand = 0.5 * hadamard(density, dot(s.u, s.u));
  integrand += (1.0 / (p.gamma - 1.0)) * pressure(density, p);
  integrand.axpy(0.5, dot(s.E, s.E));
  integrand.axpy(0.5, dot(s.B, s.B));
  return integrate(integrand);
}

double dissipation(const FullState& s, const SimParams& p) {
  return p.alpha1 * integral_sq(s.E) + p.alpha2 * integral_sq(s.B);
}

// ---------------------------------------------------------------------------
// Perturbation system

PerturbationModel::PerturbationModel(const GridSpec& grid, const SimParams& params, Frame frame, double margin,
                                     std::optional<FlowEval> background)
    : grid_(grid), params_(params), frame_(frame), flow_(std::move(background)) {
  params_.validate();
  if (!(margin > 0.0 && margin < 0.5)) throw Error("PerturbationModel: margin must lie in (0, 0.5)");
  if (flow_ && !flow_->initial().is_identity()) {
    if (frame_ == Frame::comoving) throw Error("PerturbationModel: the comoving frame needs the identity background");
    if (grid.dims != 3) throw Error("PerturbationModel: non-identity backgrounds need 3 active dimensions");
  }
  const double L = grid.half_width;
  window_ = box_window(grid, (1.0 - margin) * L, (1.0 - 0.25 * margin) * L);
  window_grad_ = box_window_gradient(grid, (1.0 - margin) * L, (1.0 - 0.25 * margin) * L);
  ywin_ = VectorField(grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto pos = grid.position(i);
    for (int a = 0; a < grid.dims; ++a) ywin_[a][i] = window_[i] * pos[a];
  }
}

const PerturbationModel::Background& PerturbationModel::background(double t) const {
  if (cache_ && cache_->first == t) return cache_->second;
  const int d = grid_.dims;
  Background bg{VectorField(grid_), {VectorField(grid_), VectorField(grid_), VectorField(grid_)}};
  const double s = 1.0 / (1.0 + t);
  const bool identity = !flow_ || flow_->initial().is_identity();
  for (std::size_t n = 0; n < grid_.size(); ++n) {
    const auto pos = grid_.position(n);
    const double chi = window_[n];
    Vec3 v;
    Mat3 Dv;
    if (identity) {
      v = Vec3(pos[0], pos[1], pos[2]) * s;
      Dv = Mat3::Zero();
      for (int a = 0; a < d; ++a) Dv(a, a) = s;
    } else {
      const auto p = flow_->evaluate(t, Vec3(pos[0], pos[1], pos[2]));
      v = p.v;
      Dv = p.Dv;
    }
    for (int i = 0; i < d; ++i) {
      bg.v[i][n] = chi * v[i];
      for (int j = 0; j < d; ++j) bg.Dv[i][j][n] = chi * Dv(i, j) + v[i] * window_grad_[j][n];
    }
  }
  cache_.emplace(t, std::move(bg));
  return cache_->second;
}

PerturbationState PerturbationModel::rhs(const PerturbationState& st, std::size_t* clipped) const {
  const int d = grid_.dims;
  const double gc = 0.5 * (params_.gamma - 1.0);
  const double a1 = params_.alpha1, a2 = params_.alpha2;
  const bool comoving = frame_ == Frame::comoving;
  const double s = 1.0 / (1.0 + st.t);
  const bool bg_em = st.ebar.max_norm() > 0.0 || st.bbar.max_norm() > 0.0;

  const VectorField grad_rho = grad(st.rho);
  const Jacobian Jw = jacobian(st.w);
  const ScalarField div_w = trace(Jw, d);
  const ScalarField density = density_from_makino_clamped(st.rho, params_, clipped);
  const VectorField E = st.e + st.ebar;
  const VectorField B = st.b + st.bbar;

  PerturbationState out = st.zero_like();
  const Background* bg = comoving ? nullptr : &background(st.t);
  const VectorField& lin = comoving ? ywin_ : bg->v;
  const VectorField U = lin + st.w;

  // density
  if (comoving) {
    ScalarField adv = transport(st.w, grad_rho, d);
    adv += gc * hadamard(st.rho, div_w);
    require_finite(adv, "density transport");
    out.rho = -s * adv;
    out.rho.axpy(-d * gc * s, st.rho);
  } else {
    ScalarField adv = transport(U, grad_rho, d);
    adv += gc * hadamard(st.rho, div_w + trace(bg->Dv, d));
    require_finite(adv, "density transport");
    out.rho = -1.0 * adv;
  }

  // velocity perturbation
  {
    VectorField adv = transport(comoving ? st.w : U, Jw, d);
    adv += gc * scale(st.rho, grad_rho);
    require_finite(adv, "velocity transport");
    VectorField lorentz = E + cross(U, B);
    require_finite(lorentz, "Lorentz force");
    if (comoving) {
      out.w = -s * adv;
      for (int a = 0; a < d; ++a) out.w[a].axpy(-s, st.w[a]);
    } else {
      out.w = -1.0 * adv;
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) out.w[i] -= hadamard(bg->Dv[i][j], st.w[j]);
    }
    out.w -= lorentz;
  }

  // Maxwell pairs: de = curl b (+ y.grad e) ..., scaled by s in the comoving frame
  const auto maxwell = [&](const VectorField& ef, const VectorField& bf, VectorField& de, VectorField& db) {
    const Jacobian Je = jacobian(ef);
    const Jacobian Jb = jacobian(bf);
    if (comoving) {
      de = s * (transport(ywin_, Je, d) + curl_of(Jb));
      db = s * (dilation_transport_solenoidal(ywin_, bf, d) - curl_of(Je));
    } else {
      de = curl_of(Jb);
      db = -1.0 * curl_of(Je);
    }
    de.axpy(-a1, ef);
    db.axpy(-a2, bf);
  };
  maxwell(st.e, st.b, out.e, out.b);
  VectorField current = scale(density, U);
  require_finite(current, "current source");
  out.e += current;
  if (bg_em) maxwell(st.ebar, st.bbar, out.ebar, out.bbar);

  out.rho = dealias(out.rho);
  out.w = dealias(out.w);
  out.e = dealias(out.e);
  out.b = dealias(out.b);
  if (bg_em) {
    out.ebar = dealias(out.ebar);
    out.bbar = dealias(out.bbar);
  }
  require_finite(out.rho, "density equation");
  require_finite(out.w, "velocity equation");
  require_finite(out.e, "electric field equation");
  require_finite(out.b, "magnetic field equation");
  return out;
}

double PerturbationModel::rate(const PerturbationState& st) const {
  const double xi = SpectralWorkspace::of(grid_).max_derivative_wavenumber();
  const double gc = 0.5 * (params_.gamma - 1.0);
  const double damping = std::max(params_.alpha1, params_.alpha2);
  if (frame_ == Frame::comoving) {
    const double s = 1.0 / (1.0 + st.t);
    const double speed = (ywin_ + st.w).max_norm() + gc * max_scalar(st.rho) + 1.0;
    return s * xi * speed + s * (grid_.dims * gc + 1.0) + damping;
  }
  const auto& bg = background(st.t);
  double dv = 0.0;
  for (int i = 0; i < 3; ++i) dv = std::max(dv, bg.Dv[i].max_norm());
  const double speed = (bg.v + st.w).max_norm() + gc * max_scalar(st.rho) + 1.0;
  return xi * speed + grid_.dims * dv + damping;
}

// ---------------------------------------------------------------------------
// Run loop

namespace {

double full_rate(const FullState& s, const SimParams& p) {
  const double xi = SpectralWorkspace::of(s.rho.grid()).max_derivative_wavenumber();
  const double speed = std::max(s.u.max_norm() + 0.5 * (p.gamma - 1.0) * s.rho.max_abs(), 1.0);
  return xi * speed + std::max(p.alpha1, p.alpha2);
}

struct FullOps {
  const SimParams& p;
  const SchemeConfig& cfg;
  std::size_t* clipped;

  FullState rhs(const FullState& s) const { return rhs_full(s, p, clipped); }
  double rate(const FullState& s) const { return full_rate(s, p); }
  void dealias_state(FullState& s) const {
    s.rho = dealias(s.rho);
    s.u = dealias(s.u);
    s.E = dealias(s.E);
    s.B = dealias(s.B);
  }
  double energy(const FullState& s) const { return total_energy(s, p); }
  void filter(FullState& s) const {
    const double k = cfg.filter_strength;
    s.rho = exp36_filter(s.rho, k);
    for (int c = 0; c < 3; ++c) {
      s.u[c] = exp36_filter(s.u[c], k);
      s.E[c] = exp36_filter(s.E[c], k);
      s.B[c] = exp36_filter(s.B[c], k);
    }
  }
  bool finite(const FullState& s) const {
    return s.rho.all_finite() && s.u.all_finite() && s.E.all_finite() && s.B.all_finite();
  }
  DiagnosticsRecord record(const FullState& s, const FullState* prev) const {
    DiagnosticsRecord r;
    r.t = s.t;
    r.energy = total_energy(s, p);
    r.dissipation = dissipation(s, p);
    r.em_sq = integral_sq(s.E) + integral_sq(s.B);
    r.divB = div(s.B).max_abs();
    r.Zdiag = l2_norm(s.B - curl(s.u));
    if (prev) {
      const FluidEMState before{prev->t, density_from_makino_clamped(prev->rho, p), prev->u, prev->E, prev->B, {}};
      const FluidEMState after{s.t, density_from_makino_clamped(s.rho, p), s.u, s.E, s.B, {}};
      r.compat = compatibility_residual(before, after, p.alpha1);
    }
    r.X0 = quad_seminorm(s.rho, s.u, s.E, s.B, 0.0);
    r.Xs = quad_seminorm(s.rho, s.u, s.E, s.B, cfg.sobolev_order);
    for (double sg : cfg.sigmas) r.xdot.push_back(quad_seminorm(s.rho, s.u, s.E, s.B, sg));
    r.support_frac = support_fraction({&s.rho, &s.u[0], &s.u[1], &s.u[2], &s.E[0], &s.E[1], &s.E[2], &s.B[0],
                                       &s.B[1], &s.B[2]},
                                      cfg.margin);
    return r;
  }
};

double perturbation_energy(const PerturbationState& s, const PerturbationModel& m, double* diss) {
  const SimParams& p = m.params();
  const GridSpec& g = m.grid();
  const bool comoving = m.frame() == Frame::comoving;
  const double jac = comoving ? std::pow(1.0 + s.t, g.dims) : 1.0;
  const VectorField U = (comoving ? m.windowed_position() : m.background(s.t).v) + s.w;
  const VectorField E = s.e + s.ebar;
  const VectorField B = s.b + s.bbar;
  const ScalarField density = density_from_makino_clamped(s.rho, p);
  ScalarField integrand = 0.5 * hadamard(density, dot(U, U));
  integrand += (1.0 / (p.gamma - 1.0)) * pressure(density, p);
  integrand.axpy(0.5, dot(E, E));
  integrand.axpy(0.5, dot(B, B));
  if (diss) *diss = jac * (p.alpha1 * integral_sq(E) + p.alpha2 * integral_sq(B));
  return jac * integrate(integrand);
}

struct PerturbationOps {
  const PerturbationModel& m;
  const SchemeConfig& cfg;
  std::size_t* clipped;

  PerturbationState rhs(const PerturbationState& s) const { return m.rhs(s, clipped); }
  double rate(const PerturbationState& s) const { return m.rate(s); }
  void dealias_state(PerturbationState& s) const {
    s.rho = dealias(s.rho);
    s.w = dealias(s.w);
    s.e = dealias(s.e);
    s.b = dealias(s.b);
    s.ebar = dealias(s.ebar);
    s.bbar = dealias(s.bbar);
  }
  double energy(const PerturbationState& s) const { return perturbation_energy(s, m, nullptr); }
  void filter(PerturbationState& s) const {
    const double k = cfg.filter_strength;
    s.rho = exp36_filter(s.rho, k);
    for (int c = 0; c < 3; ++c) {
      s.w[c] = exp36_filter(s.w[c], k);
      s.e[c] = exp36_filter(s.e[c], k);
      s.b[c] = exp36_filter(s.b[c], k);
      s.ebar[c] = exp36_filter(s.ebar[c], k);
      s.bbar[c] = exp36_filter(s.bbar[c], k);
    }
  }
  bool finite(const PerturbationState& s) const {
    return s.rho.all_finite() && s.w.all_finite() && s.e.all_finite() && s.b.all_finite() && s.ebar.all_finite() &&
           s.bbar.all_finite();
  }
  DiagnosticsRecord record(const PerturbationState& s, const PerturbationState* prev) const {
    const SimParams& p = m.params();
    const int d = m.grid().dims;
    const bool comoving = m.frame() == Frame::comoving;
    const double sc = 1.0 / (1.0 + s.t);
    const VectorField B = s.b + s.bbar;
    DiagnosticsRecord r;
    r.t = s.t;
    r.energy = perturbation_energy(s, m, &r.dissipation);
    const double jac = comoving ? std::pow(1.0 + s.t, d) : 1.0;
    r.em_sq = jac * (integral_sq(s.e + s.ebar) + integral_sq(B));
    if (comoving) {
      r.divB = sc * div(B).max_abs();
      r.Zdiag = std::sqrt(jac) * l2_norm(B - sc * curl(s.w));
    } else {
      r.divB = div(B).max_abs();
      r.Zdiag = l2_norm(B - curl(s.w));
      if (prev) {
        const FluidEMState before{prev->t, density_from_makino_clamped(prev->rho, p), prev->w, prev->e + prev->ebar,
                                  prev->b + prev->bbar, {}};
        const FluidEMState after{s.t, density_from_makino_clamped(s.rho, p), s.w, s.e + s.ebar, B, {}};
        r.compat = compatibility_residual(before, after, p.alpha1);
      }
    }
    // Comoving seminorms convert to x through (1+t)^{d/2 - sigma}.
    const auto xdot = [&](double sigma) {
      const double f = comoving ? std::pow(1.0 + s.t, 0.5 * d - sigma) : 1.0;
      return f * quad_seminorm(s.rho, s.w, s.e, s.b, sigma);
    };
    r.X0 = xdot(0.0);
    r.Xs = xdot(cfg.sobolev_order);
    for (double sg : cfg.sigmas) r.xdot.push_back(xdot(sg));
    r.support_frac = support_fraction({&s.rho, &s.w[0], &s.w[1], &s.w[2], &s.e[0], &s.e[1], &s.e[2], &s.b[0],
                                       &s.b[1], &s.b[2], &s.ebar[0], &s.ebar[1], &s.ebar[2], &s.bbar[0],
                                       &s.bbar[1], &s.bbar[2]},
                                      cfg.margin);
    return r;
  }
};

template <class State, class Ops>
RunResult<State> run_loop(State y, const SchemeConfig& cfg, const Ops& ops, std::size_t& clipped) {
  cfg.validate();
  RunResult<State> res;
  ops.dealias_state(y);

  const auto halt = [&](HaltReason why, std::string msg) {
    res.reason = why;
    res.message = std::move(msg);
  };

  res.records.push_back(ops.record(y, nullptr));
  State prev = y;
  if (res.records.back().support_frac > cfg.support_tolerance) {
    halt(HaltReason::support_escape, "initial data not confined to the inner box");
    res.final_time = y.t;
    res.final_state = std::move(y);
    return res;
  }

  const bool fixed = cfg.cfl == 0.0;
  const double t_end = y.t + cfg.T;
  int every = cfg.snapshot_every;
  if (every == 0 && fixed) every = std::max(1, static_cast<int>(std::floor(cfg.T / (200.0 * cfg.dt) + 1e-9)));
  const double snap_dt = cfg.T / 200.0;
  double next_snap = y.t + snap_dt;
  std::vector<double> captures;
  for (double c : cfg.capture_times) captures.push_back(y.t + c);
  std::sort(captures.begin(), captures.end());
  std::size_t ci = 0;

  const auto rhs = [&](const State& s) { return ops.rhs(s); };
  const auto near = [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); };

  while (y.t < t_end && !near(y.t, t_end)) {
    const double rate = ops.rate(y);
    double h = fixed ? cfg.dt : cfg.cfl / rate;
    if (fixed && h * rate > kStabilityRadius) {
      halt(HaltReason::cfl_violation, "dt * spectral rate = " + std::to_string(h * rate) + " exceeds 2.8");
      break;
    }
    double target = t_end;
    if (!fixed && cfg.snapshot_every == 0) target = std::min(target, next_snap);
    if (ci < captures.size()) target = std::min(target, captures[ci]);
    bool lands = false;
    if (y.t + h >= target - 1e-9 * h) {
      h = target - y.t;
      lands = true;
    }

    try {
      y = step_rk4(y, rhs, h);
    } catch (const Error& e) {
      halt(HaltReason::non_finite, e.what());
      break;
    }
    if (lands) y.t = target;
    ++res.steps;

    if (cfg.filter_strength > 0.0) {
      const double before = ops.energy(y);
      ops.filter(y);
      res.filter_loss += before - ops.energy(y);
    }
    if (!ops.finite(y)) {
      halt(HaltReason::non_finite, "non-finite state after step " + std::to_string(res.steps));
      break;
    }
    if (ci < captures.size() && near(y.t, captures[ci])) {
      res.captured.push_back(y);
      ++ci;
    }

    const bool done = near(y.t, t_end);
    bool snap = done;
    if (fixed || cfg.snapshot_every > 0) {
      snap = snap || res.steps % every == 0;
    } else if (near(y.t, next_snap)) {
      snap = true;
      next_snap += snap_dt;
    }
    if (snap) {
      DiagnosticsRecord rec = ops.record(y, &prev);
      rec.clip_count = clipped;
      const bool escaped = rec.support_frac > cfg.support_tolerance;
      res.records.push_back(std::move(rec));
      prev = y;
      if (escaped) {
        halt(HaltReason::support_escape, "fields reached the outer margin at t = " + std::to_string(y.t));
        break;
      }
    }
  }
  res.clip_count = clipped;
  res.final_time = y.t;
  res.final_state = std::move(y);
  return res;
}

}  // namespace

RunResult<FullState> run_simulation(const FullState& initial, const SimParams& params, const SchemeConfig& cfg) {
  params.validate();
  std::size_t clipped = 0;
  const FullOps ops{params, cfg, &clipped};
  return run_loop(initial, cfg, ops, clipped);
}

RunResult<PerturbationState> run_simulation(const PerturbationState& initial, const PerturbationModel& model,
                                            const SchemeConfig& cfg) {
  if (cfg.frame != model.frame()) throw Error("run_simulation: scheme frame differs from the model frame");
  std::size_t clipped = 0;
  const PerturbationOps ops{model, cfg, &clipped};
  return run_loop(initial, cfg, ops, clipped);
}

// ---------------------------------------------------------------------------
// Post-processing

EnergyResidual energy_identity_residual(const std::vector<DiagnosticsRecord>& rec) {
  EnergyResidual out;
  const std::size_t m = rec.size();
  if (m < 4) throw Error("energy_identity_residual: need at least 4 snapshots");
  const double h = rec[1].t - rec[0].t;
  if (!(h > 0.0)) throw Error("energy_identity_residual: snapshots must be increasing in time");
  for (std::size_t k = 1; k < m; ++k)
    if (std::abs((rec[k].t - rec[k - 1].t) - h) > 1e-9 * h)
      throw Error("energy_identity_residual: snapshots must be uniformly spaced");

  const auto D = [&](std::size_t k) { return rec[k].dissipation; };
  for (std::size_t k = 0; k + 1 < m; ++k) {
    // Mean of D over [t_k, t_{k+1}] from the cubic through four neighbouring samples.
    double mean;
    if (k == 0)
      mean = (9.0 * D(0) + 19.0 * D(1) - 5.0 * D(2) + D(3)) / 24.0;
    else if (k + 2 == m)
      mean = (D(m - 4) - 5.0 * D(m - 3) + 19.0 * D(m - 2) + 9.0 * D(m - 1)) / 24.0;
    else
      mean = (-D(k - 1) + 13.0 * D(k) + 13.0 * D(k + 1) - D(k + 2)) / 24.0;
    const double r = (rec[k + 1].energy - rec[k].energy) / h + mean;
    out.t_mid.push_back(0.5 * (rec[k].t + rec[k + 1].t));
    out.residual.push_back(r);
    out.max_abs = std::max(out.max_abs, std::abs(r));
  }
  return out;
}

ConstraintSeries constraint_monitors(const std::vector<DiagnosticsRecord>& records) {
  ConstraintSeries s;
  for (const auto& r : records) {
    s.t.push_back(r.t);
    s.divB.push_back(r.divB);
    s.Zdiag.push_back(r.Zdiag);
    s.compat.push_back(r.compat);
  }
  return s;
}

void write_diagnostics_csv(const std::string& path, const std::vector<DiagnosticsRecord>& records) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path + " for writing");
  os << std::setprecision(17) << "t,energy,dissipation,divB,Zdiag,compat,X0,Xs,clip_count,support_frac\n";
  for (const auto& r : records)
    os << r.t << "," << r.energy << "," << r.dissipation << "," << r.divB << "," << r.Zdiag << "," << r.compat << ","
       << r.X0 << "," << r.Xs << "," << r.clip_count << "," << r.support_frac << "\n";
}

PerturbationState to_original_frame(const PerturbationState& c) {
  const double f = 1.0 + c.t;
  return PerturbationState{c.t,          dilate(c.rho, f),  dilate(c.w, f),   dilate(c.e, f),
                           dilate(c.b, f), dilate(c.ebar, f), dilate(c.bbar, f)};
}

PerturbationState difference(const PerturbationState& a, const PerturbationState& b) {
  PerturbationState d = a;
  d.axpy(-1.0, b);
  return d;
}

double perturbation_l2(const PerturbationState& s) { return quad_seminorm(s.rho, s.w, s.e, s.b, 0.0); }

FrameCrossCheck frame_cross_check(const std::function<PerturbationState(const GridSpec&)>& data,
                                  const GridSpec& grid, const SimParams& params, const FrameCrossCheckOptions& opt) {
  const auto run = [&](const GridSpec& g, Frame f, double dt) {
    const PerturbationModel model(g, params, f, opt.margin);
    SchemeConfig cfg;
    cfg.dt = dt;
    cfg.T = opt.T;
    cfg.frame = f;
    cfg.margin = opt.margin;
    cfg.snapshot_every = std::numeric_limits<int>::max();
    auto res = run_simulation(data(g), model, cfg);
    if (res.reason != HaltReason::completed)
      throw Error(std::string("frame_cross_check: ") + to_string(f) + " run halted: " + res.message);
    return f == Frame::comoving ? to_original_frame(res.final_state) : res.final_state;
  };
  const auto restrict_state = [&](const PerturbationState& s) {
    return PerturbationState{s.t, restrict_to(s.rho, grid), restrict_to(s.w, grid), restrict_to(s.e, grid),
                             restrict_to(s.b, grid), restrict_to(s.ebar, grid), restrict_to(s.bbar, grid)};
  };

  const GridSpec fine = GridSpec::make(grid.dims, 2 * grid.n, grid.half_width);
  const double h = opt.dt, h2 = 0.5 * opt.dt;
  const auto c1 = run(grid, Frame::comoving, h);
  const auto c2 = run(grid, Frame::comoving, h2);
  const auto c3 = restrict_state(run(fine, Frame::comoving, h2));
  const auto o1 = run(grid, Frame::original, h);
  const auto o2 = run(grid, Frame::original, h2);
  const auto o3 = restrict_state(run(fine, Frame::original, h2));

  FrameCrossCheck r;
  r.residual = perturbation_l2(difference(o2, c2));
  r.reference = perturbation_l2(o2);
  // Error of the dt/2 run is about |F_dt - F_dt/2| / (2^4 - 1) for a fourth-order scheme.
  r.time_error_comoving = perturbation_l2(difference(c1, c2)) / 15.0;
  r.time_error_original = perturbation_l2(difference(o1, o2)) / 15.0;
  r.spatial_floor_comoving = perturbation_l2(difference(c2, c3));
  r.spatial_floor_original = perturbation_l2(difference(o2, o3));
  r.prediction =
      r.time_error_comoving + r.time_error_original + r.spatial_floor_comoving + r.spatial_floor_original;
  r.pass = r.residual <= 10.0 * r.prediction;
  return r;
}

}  // namespace emlab
