#include <doctest.h>

#include <cmath>
#include <numbers>

#include "emlab/maxwell.hpp"
#include "emlab/operators.hpp"
#include "emlab/sobolev.hpp"
#include "generators.hpp"

using namespace emlab;

namespace {

// Independent plane wave: k = (pi/L) m, B = k_hat x p, both times cos(k.x - |k| t) e^{-alpha t}.
FreeEMState plane_wave_oracle(const GridSpec& g, std::array<int, 3> m, std::array<double, 3> p, double alpha,
                              double t) {
  const double s = std::numbers::pi / g.half_width;
  const double k[3] = {s * m[0], s * m[1], s * m[2]};
  const double kn = std::sqrt(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]);
  const double q[3] = {(k[1] * p[2] - k[2] * p[1]) / kn, (k[2] * p[0] - k[0] * p[2]) / kn,
                       (k[0] * p[1] - k[1] * p[0]) / kn};
  FreeEMState out{t, VectorField(g), VectorField(g)};
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto x = g.position(i);
    const double phase = std::cos(k[0] * x[0] + k[1] * x[1] + k[2] * x[2] - kn * t) * std::exp(-alpha * t);
    for (int a = 0; a < 3; ++a) {
      out.E[a][i] = p[a] * phase;
      out.B[a][i] = q[a] * phase;
    }
  }
  return out;
}

double state_error(const FreeEMState& a, const FreeEMState& b) {
  return std::max(gen::max_diff(a.E, b.E), gen::max_diff(a.B, b.B));
}

}  // namespace

TEST_CASE("closed-form plane wave matches the oracle") {
  const auto g = GridSpec::make(3, 16, std::numbers::pi);
  for (double t : {0.0, 0.7, 3.1}) {
    const auto w = exact_plane_wave(g, {1, 2, 0}, {2.0, -1.0, 0.5}, 0.5, t);
    CHECK(state_error(w, plane_wave_oracle(g, {1, 2, 0}, {2.0, -1.0, 0.5}, 0.5, t)) < 1e-13);
    CHECK(div(w.E).max_abs() < 1e-12);
    CHECK(div(w.B).max_abs() < 1e-12);
  }
}

TEST_CASE("propagator follows the plane wave at fourth order") {
  const auto g = GridSpec::make(3, 16, std::numbers::pi);
  const std::array<int, 3> m{1, 2, 0};
  const std::array<double, 3> p{2.0, -1.0, 0.5};
  const double alpha = 0.5, T = 1.0;
  const auto run = [&](double dt) {
    MaxwellPropagator prop(g, alpha, alpha);
    prop.load(exact_plane_wave(g, m, p, alpha, 0.0));
    const int steps = static_cast<int>(std::lround(T / dt));
    for (int i = 0; i < steps; ++i) prop.step(dt);
    CHECK(prop.time() == doctest::Approx(T));
    return state_error(prop.state(), plane_wave_oracle(g, m, p, alpha, T));
  };
  const double e1 = run(0.02), e2 = run(0.01);
  CHECK(e1 < 1e-5);
  CHECK(std::log2(e1 / e2) == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("equal damping: energy ratio is e^{-2 alpha t}") {
  const auto g = GridSpec::make(3, 16, std::numbers::pi);
  const auto w = exact_plane_wave(g, {1, 1, 1}, {1.0, -1.0, 0.0}, 0.0, 0.0);
  const auto traj = run_maxwell_free(w, 1e-3, 1.0, 0.8, 0.8, 100);
  REQUIRE(traj.size() == 11);
  for (const auto& r : traj)
    CHECK(r.energy / traj.front().energy == doctest::Approx(std::exp(-1.6 * r.t)).epsilon(1e-9));
  const auto rep = decay_check_free(traj, 0.8, 0.8, 1e-6);
  CHECK(rep.pass);
  CHECK(rep.equal_damping);
  CHECK(rep.monotone);
  CHECK(rep.envelope_ok);
  CHECK(rep.log_slope == doctest::Approx(-1.6).epsilon(1e-6));
}

TEST_CASE("property: random solenoidal data keeps div B and loses energy") {
  gen::Source src(21);
  for (int c = 0; c < 6; ++c) {
    const auto g = GridSpec::make(3, 16, src.uniform(1.0, 4.0));
    const auto field = [&] {
      return leray_project(gen::sample(g, std::array<gen::TrigPoly, 3>{gen::trig_poly(src, g, 4, 3),
                                                                      gen::trig_poly(src, g, 4, 3),
                                                                      gen::trig_poly(src, g, 4, 3)}));
    };
    const double a1 = src.uniform(0.0, 1.0), a2 = src.uniform(0.0, 1.0);
    FreeEMState s{0.0, field(), field()};
    const double dt = 0.5 * maxwell_cfl_limit(g);
    const auto traj = run_maxwell_free(s, dt, 40 * dt, a1, a2, 1);
    for (std::size_t k = 1; k < traj.size(); ++k) {
      CHECK(traj[k].energy <= traj[k - 1].energy * (1 + 1e-14));
      CHECK(traj[k].div_B < 1e-11);
    }
  }
}

TEST_CASE("vacuum stays vacuum and the step limit is enforced") {
  const auto g = GridSpec::make(2, 16, 1.0);
  MaxwellPropagator prop(g, 0.3, 0.1);
  prop.load(FreeEMState{0.0, VectorField(g), VectorField(g)});
  prop.step(0.01);
  CHECK(prop.energy() == 0.0);
  const double lim = maxwell_cfl_limit(g);
  CHECK(lim * SpectralWorkspace::of(g).max_derivative_wavenumber() == doctest::Approx(2.8));
  CHECK_THROWS_AS(prop.step(1.01 * lim), Error);
}

TEST_CASE("single free step equals one propagator step") {
  const auto g = GridSpec::make(3, 16, 2.0);
  const auto w = exact_plane_wave(g, {0, 1, 2}, {1.0, 0.0, 0.0}, 0.0, 0.0);
  MaxwellPropagator prop(g, 0.4, 0.2);
  prop.load(w);
  prop.step(0.01);
  CHECK(state_error(prop.state(), step_maxwell_free(w, 0.01, 0.4, 0.2)) == 0.0);
}

TEST_CASE("energy bookkeeping of the propagator") {
  const auto g = GridSpec::make(1, 32, std::numbers::pi);
  const auto E = VectorField(ScalarField(g), ScalarField::sample(g, [](double x, double, double) { return std::cos(x); }),
                             ScalarField(g));
  MaxwellPropagator prop(g, 0.0, 0.0);
  prop.load(FreeEMState{0.0, E, VectorField(g)});
  CHECK(prop.electric_sq() == doctest::Approx(std::numbers::pi));
  CHECK(prop.magnetic_sq() == 0.0);
  CHECK(prop.energy() == doctest::Approx(0.5 * std::numbers::pi));
}

TEST_CASE("decay check flags growth and short series") {
  std::vector<FreeEMRecord> traj;
  for (int k = 0; k < 12; ++k) {
    const double e = std::exp(-0.1 * k) * (k == 6 ? 1.5 : 1.0);
    traj.push_back({0.1 * k, e, e, e, 0.0, 0.0});
  }
  const auto rep = decay_check_free(traj, 0.5, 0.5);
  CHECK_FALSE(rep.monotone);
  CHECK_FALSE(rep.pass);
  CHECK(rep.worst_increase == doctest::Approx(1.5 * std::exp(-0.6) - std::exp(-0.5)));
  traj.resize(3);
  CHECK_THROWS_AS(decay_check_free(traj, 0.5, 0.5), Error);
}
