#include <doctest.h>

#include <cmath>
#include <numbers>

#include "emlab/initial_data.hpp"
#include "emlab/maxwell.hpp"
#include "emlab/operators.hpp"
#include "emlab/solver.hpp"
#include "emlab/sobolev.hpp"
#include "generators.hpp"

using namespace emlab;

namespace {

SimParams params(double a1, double a2, double A = 1.0) {
  SimParams p;
  p.A = A;
  p.gamma = 1.4;
  p.alpha1 = a1;
  p.alpha2 = a2;
  return p;
}

struct AnalyticState {
  gen::TrigPoly rho;
  std::array<gen::TrigPoly, 3> u, E, B;
  double offset = 3.0;
};

AnalyticState random_analytic(gen::Source& src, const GridSpec& g) {
  const auto tp = [&] { return gen::trig_poly(src, g, 1, 2, false); };
  return {tp(), {tp(), tp(), tp()}, {tp(), tp(), tp()}, {tp(), tp(), tp()}};
}

FullState sample(const GridSpec& g, const AnalyticState& a) {
  ScalarField rho = gen::sample(g, a.rho);
  for (auto& v : rho.values()) v += a.offset;
  return FullState{0.0, rho, gen::sample(g, a.u), gen::sample(g, a.E), gen::sample(g, a.B)};
}

// Pointwise right-hand side from analytic derivatives.
FullState rhs_oracle(const GridSpec& g, const AnalyticState& a, const SimParams& p) {
  FullState out{0.0, ScalarField(g), VectorField(g), VectorField(g), VectorField(g)};
  const double gc = 0.5 * (p.gamma - 1.0);
  const double coef = std::pow((p.gamma - 1.0) / (2.0 * std::sqrt(p.A * p.gamma)), 2.0 / (p.gamma - 1.0));
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto x = g.position(i);
    const auto at = [&](const gen::TrigPoly& f) { return f(x[0], x[1], x[2]); };
    const auto d = [&](const gen::TrigPoly& f, int ax) { return f.derivative(ax, x[0], x[1], x[2]); };
    const double r = at(a.rho) + a.offset;
    double u[3], E[3], B[3];
    for (int k = 0; k < 3; ++k) {
      u[k] = at(a.u[k]);
      E[k] = at(a.E[k]);
      B[k] = at(a.B[k]);
    }
    double divu = 0.0, ugr = 0.0;
    for (int k = 0; k < 3; ++k) {
      divu += d(a.u[k], k);
      ugr += u[k] * d(a.rho, k);
    }
    out.rho[i] = -ugr - gc * r * divu;
    const double uxB[3] = {u[1] * B[2] - u[2] * B[1], u[2] * B[0] - u[0] * B[2], u[0] * B[1] - u[1] * B[0]};
    const double curlB[3] = {d(a.B[2], 1) - d(a.B[1], 2), d(a.B[0], 2) - d(a.B[2], 0), d(a.B[1], 0) - d(a.B[0], 1)};
    const double curlE[3] = {d(a.E[2], 1) - d(a.E[1], 2), d(a.E[0], 2) - d(a.E[2], 0), d(a.E[1], 0) - d(a.E[0], 1)};
    const double density = coef * std::pow(r, 2.0 / (p.gamma - 1.0));
    for (int k = 0; k < 3; ++k) {
      double adv = 0.0;
      for (int j = 0; j < 3; ++j) adv += u[j] * d(a.u[k], j);
      out.u[k][i] = -adv - gc * r * d(a.rho, k) - E[k] - uxB[k];
      out.E[k][i] = curlB[k] - p.alpha1 * E[k] + density * u[k];
      out.B[k][i] = -curlE[k] - p.alpha2 * B[k];
    }
  }
  return out;
}

double full_diff(const FullState& a, const FullState& b) {
  return std::max({gen::max_diff(a.rho, b.rho), gen::max_diff(a.u, b.u), gen::max_diff(a.E, b.E),
                   gen::max_diff(a.B, b.B)});
}

FullState vacuum_plane_wave(const GridSpec& g) {
  const auto w = exact_plane_wave(g, {1, 2, 0}, {2.0, -1.0, 0.5}, 0.0, 0.0);
  return FullState{0.0, ScalarField(g), VectorField(g), w.E, w.B};
}

SchemeConfig fixed(double dt, double T, int every = 1) {
  SchemeConfig c;
  c.dt = dt;
  c.T = T;
  c.snapshot_every = every;
  c.support_tolerance = 1.0;
  return c;
}

}  // namespace

TEST_CASE("scheme configuration validation and frame names") {
  SchemeConfig c;
  CHECK_NOTHROW(c.validate());
  c.dt = 0.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = SchemeConfig{};
  c.cfl = 3.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = SchemeConfig{};
  c.T = -1.0;
  CHECK_THROWS_AS(c.validate(), Error);
  CHECK(parse_frame("comoving") == Frame::comoving);
  CHECK(parse_frame("original") == Frame::original);
  CHECK_THROWS_AS(parse_frame("lab"), Error);
  CHECK(std::string(to_string(HaltReason::support_escape)) == "support_escape");
}

TEST_CASE("zero state has zero right-hand side") {
  const auto g = GridSpec::make(3, 16, 2.0);
  const FullState z{0.0, ScalarField(g), VectorField(g), VectorField(g), VectorField(g)};
  const auto r = rhs_full(z, params(0.5, 0.5));
  CHECK(full_diff(r, z) == 0.0);
  for (Frame f : {Frame::original, Frame::comoving}) {
    const PerturbationModel m(g, params(0.5, 0.5), f, 0.2);
    const PerturbationState pz{0.3, ScalarField(g), VectorField(g), VectorField(g), VectorField(g),
                               VectorField(g), VectorField(g)};
    const auto pr = m.rhs(pz);
    CHECK(pr.rho.max_abs() == 0.0);
    CHECK(pr.w.max_norm() == 0.0);
    CHECK(pr.e.max_norm() == 0.0);
    CHECK(pr.b.max_norm() == 0.0);
  }
}

TEST_CASE("property: full right-hand side against pointwise evaluation") {
  gen::Source src(77);
  for (int c = 0; c < 10; ++c) {
    const auto g = GridSpec::make(2, 32, src.uniform(1.0, 3.0));
    const auto a = random_analytic(src, g);
    const auto p = params(src.uniform(0, 1), src.uniform(0, 1), src.uniform(0.05, 2.0));
    const auto got = rhs_full(sample(g, a), p);
    const auto want = rhs_oracle(g, a, p);
    const double scale = 1.0 + want.u.max_norm() + want.E.max_norm() + want.rho.max_abs();
    CHECK(full_diff(got, want) <= 1e-11 * scale);
  }
}

TEST_CASE("vacuum plane wave: right-hand side and trajectory match free Maxwell") {
  const auto g = GridSpec::make(3, 16, std::numbers::pi);
  const auto p = params(0.5, 0.3);
  const auto s = vacuum_plane_wave(g);
  const auto r = rhs_full(s, p);
  const auto Bdot = -1.0 * curl(s.E) - 0.3 * s.B;
  const auto Edot = curl(s.B) - 0.5 * s.E;
  CHECK(gen::max_diff(r.E, Edot) <= 1e-12);
  CHECK(gen::max_diff(r.B, Bdot) <= 1e-12);

  const auto res = run_simulation(s, p, fixed(0.01, 0.5, 10));
  REQUIRE(res.reason == HaltReason::completed);
  FreeEMState free_final;
  run_maxwell_free(FreeEMState{0.0, s.E, s.B}, 0.01, 0.5, 0.5, 0.3, 50, &free_final);
  CHECK(gen::max_diff(res.final_state.E, free_final.E) <= 1e-8);
  CHECK(gen::max_diff(res.final_state.B, free_final.B) <= 1e-8);
  // Vacuum invariance: the density variable never leaves zero.
  CHECK(res.final_state.rho.max_abs() == 0.0);
  for (const auto& rec : res.records) CHECK(rec.divB <= 1e-10);
}

TEST_CASE("full system converges at fourth order in time") {
  const auto g = GridSpec::make(2, 32, std::numbers::pi);
  gen::Source src(5);
  const auto a = random_analytic(src, g);
  auto s = sample(g, a);
  s.u *= 0.2;
  const auto p = params(0.5, 0.5, 0.1);
  const auto final_at = [&](double dt) {
    auto res = run_simulation(s, p, fixed(dt, 0.4, 1000));
    REQUIRE(res.reason == HaltReason::completed);
    return res.final_state;
  };
  const auto f1 = final_at(0.02), f2 = final_at(0.01), f3 = final_at(0.005);
  const double d1 = full_diff(f1, f2), d2 = full_diff(f2, f3);
  CHECK(std::log2(d1 / d2) == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("runs are bit-identical") {
  const auto g = GridSpec::make(2, 32, std::numbers::pi);
  gen::Source src(9);
  const auto s = sample(g, random_analytic(src, g));
  const auto p = params(0.5, 0.5, 0.1);
  const auto r1 = run_simulation(s, p, fixed(0.01, 0.2, 2));
  const auto r2 = run_simulation(s, p, fixed(0.01, 0.2, 2));
  REQUIRE(r1.records.size() == r2.records.size());
  for (std::size_t k = 0; k < r1.records.size(); ++k) {
    CHECK(r1.records[k].energy == r2.records[k].energy);
    CHECK(r1.records[k].Xs == r2.records[k].Xs);
  }
  CHECK(full_diff(r1.final_state, r2.final_state) == 0.0);
}

TEST_CASE("energy never increases and matches the dissipation") {
  const auto g = GridSpec::make(2, 32, std::numbers::pi);
  gen::Source src(19);
  auto s = sample(g, random_analytic(src, g));
  s.u *= 0.1;
  const auto p = params(0.6, 0.4, 0.1);
  const double e0 = total_energy(s, p);
  const auto res = run_simulation(s, p, fixed(0.005, 0.4, 4));
  REQUIRE(res.reason == HaltReason::completed);
  for (std::size_t k = 1; k < res.records.size(); ++k)
    CHECK(res.records[k].energy <= res.records[k - 1].energy);
  CHECK(res.records[0].energy == doctest::Approx(e0).epsilon(1e-6));
  const auto resid = energy_identity_residual(res.records);
  // Above the time-discretization error the residual is a spatial floor (unchanged when dt halves).
  CHECK(resid.max_abs <= 1e-5 * res.records[0].dissipation);
}

TEST_CASE("magnetic field stays the curl of the velocity without magnetic damping") {
  const auto g = GridSpec::make(3, 32, 7.2);
  DataFamily fam{"gaussian-bump", {{"rho_amp", 0.5}, {"grad_amp", 0.1}, {"swirl_amp", 0.1}, {"e_amp", 0.05},
                                   {"width", 1.0}}};
  DataHypotheses h;
  h.magnetic_from_velocity = true;
  const auto d = prepare_data(generate_data(g, fam), h);
  const FullState s{0.0, d.fields.rho, d.fields.u, d.fields.E, d.fields.B};
  auto cfg = fixed(0.05, 0.5, 2);
  const auto res = run_simulation(s, params(0.5, 0.0, 0.1), cfg);
  REQUIRE(res.reason == HaltReason::completed);
  for (const auto& r : res.records) CHECK(r.Zdiag <= 1e-6);
}

TEST_CASE("energy residual of exact series") {
  // E' = -D with D cubic: the four-point rule is exact.
  std::vector<DiagnosticsRecord> recs;
  for (int k = 0; k <= 10; ++k) {
    DiagnosticsRecord r;
    r.t = 0.1 * k;
    r.dissipation = 1.0 + r.t - 2.0 * r.t * r.t + 0.5 * r.t * r.t * r.t;
    r.energy = 5.0 - (r.t + 0.5 * r.t * r.t - 2.0 / 3.0 * r.t * r.t * r.t + 0.125 * r.t * r.t * r.t * r.t);
    recs.push_back(r);
  }
  CHECK(energy_identity_residual(recs).max_abs < 1e-13);

  // Smooth series: fourth-order convergence of the residual.
  const auto series = [](int m) {
    std::vector<DiagnosticsRecord> out;
    for (int k = 0; k <= m; ++k) {
      DiagnosticsRecord r;
      r.t = 2.0 * k / m;
      r.energy = std::exp(-r.t) + std::sin(r.t);
      r.dissipation = std::exp(-r.t) - std::cos(r.t);
      out.push_back(r);
    }
    return out;
  };
  const double r1 = energy_identity_residual(series(20)).max_abs;
  const double r2 = energy_identity_residual(series(40)).max_abs;
  CHECK(std::log2(r1 / r2) == doctest::Approx(4.0).epsilon(0.1));

  recs.resize(3);
  CHECK_THROWS_AS(energy_identity_residual(recs), Error);
  auto uneven = series(10);
  uneven[4].t += 0.01;
  CHECK_THROWS_AS(energy_identity_residual(uneven), Error);
}

TEST_CASE("runs halt cleanly") {
  const auto g = GridSpec::make(2, 32, 2.0);
  const auto p = params(0.5, 0.5);
  SUBCASE("step too large") {
    const auto res = run_simulation(vacuum_plane_wave(GridSpec::make(3, 16, std::numbers::pi)), p, fixed(1.0, 2.0));
    CHECK(res.reason == HaltReason::cfl_violation);
    CHECK(res.steps == 0);
  }
  SUBCASE("data at the box edge") {
    FullState s{0.0, ScalarField(g, 1.0), VectorField(g), VectorField(g), VectorField(g)};
    SchemeConfig c = fixed(0.01, 0.1);
    c.support_tolerance = 1e-4;
    const auto res = run_simulation(s, p, c);
    CHECK(res.reason == HaltReason::support_escape);
    CHECK(res.records.size() == 1);
  }
  SUBCASE("non-finite data") {
    FullState s{0.0, ScalarField(g), VectorField(g), VectorField(g), VectorField(g)};
    s.E[0][5] = std::numeric_limits<double>::quiet_NaN();
    const auto res = run_simulation(s, p, fixed(0.01, 0.1));
    CHECK(res.reason == HaltReason::non_finite);
  }
}

TEST_CASE("perturbation system around the expansion, original frame") {
  const auto g = GridSpec::make(3, 64, 8.0);
  const auto p = params(0.5, 0.5, 1.0);
  DataFamily fam{"gaussian-bump", {{"rho_amp", 0.0}, {"grad_amp", 0.05}, {"swirl_amp", 0.05},
                                   {"e_amp", 0.05}, {"b_amp", 0.05}, {"width", 1.0}}};
  const auto d = prepare_data(generate_data(g, fam), DataHypotheses{});
  const double t = 0.3, s = 1.0 / (1.0 + t);
  const PerturbationModel model(g, p, Frame::original, 0.2);
  const PerturbationState ps{t, d.fields.rho, d.fields.u, d.fields.E, d.fields.B, VectorField(g), VectorField(g)};
  const auto pr = model.rhs(ps);

  const auto& bg = model.background(t);
  const auto Jw = jacobian(d.fields.u);
  const auto& w = d.fields.u;
  const auto& E = d.fields.E;
  const auto& B = d.fields.B;
  // Inside the window v = s x and Dv = s I, so w_t = -(U.grad) w - s w - E - U x B with U = s x + w.
  double worst_w = 0.0, worst_bg = 0.0;
  for (std::size_t n = 0; n < g.size(); ++n) {
    const auto x = g.position(n);
    if (std::max({std::abs(x[0]), std::abs(x[1]), std::abs(x[2])}) > 4.0) continue;
    double U[3];
    for (int k = 0; k < 3; ++k) U[k] = s * x[k] + w[k][n];
    const double UxB[3] = {U[1] * B[2][n] - U[2] * B[1][n], U[2] * B[0][n] - U[0] * B[2][n],
                           U[0] * B[1][n] - U[1] * B[0][n]};
    for (int i = 0; i < 3; ++i) {
      double adv = 0.0;
      for (int j = 0; j < 3; ++j) adv += U[j] * Jw[i][j][n];
      const double want = -adv - s * w[i][n] - E[i][n] - UxB[i];
      worst_w = std::max(worst_w, std::abs(pr.w[i][n] - want));
      worst_bg = std::max(worst_bg, std::abs(bg.v[i][n] - s * x[i]));
      for (int j = 0; j < 3; ++j) worst_bg = std::max(worst_bg, std::abs(bg.Dv[i][j][n] - (i == j ? s : 0.0)));
    }
  }
  CHECK(worst_bg <= 1e-14);
  CHECK(worst_w <= 1e-8);
  // Vacuum fluid: no current, so the field equations are free Maxwell.
  CHECK(gen::max_diff(pr.e, curl(B) - 0.5 * E) <= 1e-12);
  CHECK(gen::max_diff(pr.b, -1.0 * curl(E) - 0.5 * B) <= 1e-12);
  CHECK(pr.rho.max_abs() == 0.0);
}

TEST_CASE("frame cross-check on a small vacuum-fluid problem") {
  const auto g = GridSpec::make(2, 64, 10.0);
  DataFamily fam{"gaussian-bump", {{"rho_amp", 0.0}, {"grad_amp", 0.05}, {"swirl_amp", 0.05},
                                   {"e_amp", 0.02}, {"width", 1.2}}};
  DataHypotheses h;
  h.magnetic_from_velocity = true;
  const auto data = [&](const GridSpec& grid) {
    const auto d = prepare_data(generate_data(grid, fam), h);
    return PerturbationState{0.0, d.fields.rho, d.fields.u, d.fields.E, d.fields.B, VectorField(grid),
                             VectorField(grid)};
  };
  const auto fc = frame_cross_check(data, g, params(0.5, 0.5), {0.2, 0.005, 0.2});
  CHECK(fc.pass);
  CHECK(fc.residual <= 1e-3 * fc.reference);
}

TEST_CASE("comoving magnetic transport keeps div b at roundoff") {
  const auto g = GridSpec::make(3, 64, 4.0);
  const auto p = params(0.0, 0.0);
  const PerturbationModel m(g, p, Frame::comoving, 0.2);
  // b = curl(phi e_z) for a Gaussian phi.
  const auto field = [&](double cx, double w) {
    const auto phi = ScalarField::sample(g, [&](double x, double y, double z) {
      return std::exp(-((x - cx) * (x - cx) + y * y + z * z) / (2 * w * w));
    });
    return curl(VectorField(ScalarField(g), ScalarField(g), phi));
  };
  const auto state = [&](const VectorField& b) {
    return PerturbationState{0.0, ScalarField(g), VectorField(g), VectorField(g), b, VectorField(g), VectorField(g)};
  };

  SUBCASE("inside the window it is the dilation transport") {
    const auto b = field(0.0, 0.45);
    const auto r = m.rhs(state(b));
    const auto J = jacobian(b);
    VectorField expect(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const auto x = g.position(i);
      for (int c = 0; c < 3; ++c)
        for (int j = 0; j < 3; ++j) expect[c][i] += x[j] * J[c][j][i];
    }
    CHECK(gen::max_diff(r.b, dealias(expect)) <= 1e-9 * b.max_norm());
  }
  SUBCASE("in the window's transition zone") {
    const auto b = field(2.9, 0.4);
    const auto r = m.rhs(state(b));
    CHECK(div(b).max_abs() <= 1e-12 * b.max_norm());
    CHECK(div(r.b).max_abs() <= 1e-11 * b.max_norm());
  }
}
