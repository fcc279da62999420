#include <doctest.h>

#include <cmath>
#include <numbers>

#include "emlab/initial_data.hpp"
#include "emlab/makino.hpp"
#include "emlab/operators.hpp"
#include "emlab/sobolev.hpp"
#include "generators.hpp"

using namespace emlab;

namespace {

SimParams params(double A, double gamma) {
  SimParams p;
  p.A = A;
  p.gamma = gamma;
  p.alpha1 = 0.5;
  p.alpha2 = 0.5;
  return p;
}

ScalarField gaussian(const GridSpec& g, double amp, double w) {
  return ScalarField::sample(g, [&](double x, double y, double z) {
    return amp * std::exp(-(x * x + y * y + z * z) / (2 * w * w));
  });
}

}  // namespace

TEST_CASE("parameter validation") {
  CHECK_NOTHROW(params(1.0, 1.4).validate());
  CHECK_THROWS_AS(params(0.0, 1.4).validate(), Error);
  CHECK_THROWS_AS(params(1.0, 1.0).validate(), Error);
  SimParams p = params(1.0, 1.4);
  p.alpha1 = -0.1;
  CHECK_THROWS_AS(p.validate(), Error);
}

TEST_CASE("Makino constants for gamma = 1.4, A = 1") {
  const auto p = params(1.0, 1.4);
  CHECK(p.makino_factor() == doctest::Approx(2.0 * std::sqrt(1.4) / 0.4).epsilon(1e-15));
  CHECK(p.density_power() == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(p.density_coefficient() == doctest::Approx(std::pow(0.4 / (2.0 * std::sqrt(1.4)), 5.0)).epsilon(1e-14));
  CHECK(p.alpha() == 0.5);
}

TEST_CASE("property: Makino variable round trip and pointwise formula") {
  gen::Source src(17);
  const auto g = GridSpec::make(1, 32, 2.0);
  for (int c = 0; c < gen::kCases; ++c) {
    const auto p = params(src.uniform(0.1, 3.0), src.uniform(1.05, 1.66));
    std::vector<double> vals(g.size());
    for (auto& v : vals) v = src.coin() ? 0.0 : src.uniform(0.0, 5.0);
    const ScalarField density(g, vals);
    const auto rho = to_makino(density, p);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double expect = 2.0 * std::sqrt(p.A * p.gamma) / (p.gamma - 1.0) * std::pow(vals[i], 0.5 * (p.gamma - 1.0));
      CHECK(rho[i] == doctest::Approx(expect).epsilon(1e-13));
    }
    const auto back = from_makino(rho, p);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(back[i] == doctest::Approx(vals[i]).epsilon(1e-12));
  }
}

TEST_CASE("negative roundoff is clipped and counted, real negatives throw") {
  const auto g = GridSpec::make(1, 8, 1.0);
  const auto p = params(1.0, 1.4);
  ScalarField d(g, 1.0);
  d[2] = -5e-15;
  d[5] = -1e-16;
  std::size_t clipped = 0;
  const auto rho = to_makino(d, p, &clipped);
  CHECK(clipped == 2);
  CHECK(rho[2] == 0.0);
  d[3] = -1e-6;
  CHECK_THROWS_AS(to_makino(d, p), Error);

  ScalarField m(g, 0.5);
  m[1] = -0.2;
  clipped = 0;
  const auto dens = density_from_makino_clamped(m, p, &clipped);
  CHECK(clipped == 1);
  CHECK(dens[1] == 0.0);
  CHECK(dens[0] == doctest::Approx(p.density_coefficient() * std::pow(0.5, 5.0)));
}

TEST_CASE("pressure, Ohm current and charge") {
  const auto g = GridSpec::make(1, 32, std::numbers::pi);
  const auto p = params(2.0, 1.4);
  const ScalarField d(g, 3.0);
  CHECK(pressure(d, p)[4] == doctest::Approx(2.0 * std::pow(3.0, 1.4)));
  const VectorField u(g, 0.5);
  const auto J = ohm_current(d, u);
  CHECK(J[1][7] == doctest::Approx(-1.5));
  const auto E = VectorField(ScalarField::sample(g, [](double x, double, double) { return std::sin(x); }),
                             ScalarField(g), ScalarField(g));
  const auto q = charge_density(E);
  const auto expect = ScalarField::sample(g, [](double x, double, double) { return -std::cos(x); });
  CHECK(gen::max_diff(q, expect) < 1e-13);
}

TEST_CASE("compatibility residual: consistent pair and a known defect") {
  const auto g = GridSpec::make(1, 32, std::numbers::pi);
  const double a1 = 0.7, dt = 0.1;
  const auto Ecomp = [&](double a) {
    return VectorField(ScalarField::sample(g, [&](double x, double, double) { return a * std::sin(x); }),
                       ScalarField(g), ScalarField(g));
  };
  FluidEMState s0{0.0, ScalarField(g, 1.0), VectorField(g), Ecomp(1.0), VectorField(g), std::nullopt};
  FluidEMState s1{dt, ScalarField(g), VectorField(g), Ecomp(0.9), VectorField(g), std::nullopt};
  // charge = -a cos x; density_1 = density_0 + (q1 - q0) + dt a1 (q0 + q1) / 2
  const double q0 = -1.0, q1 = -0.9;
  const double coef = (q1 - q0) + dt * a1 * 0.5 * (q0 + q1);
  s1.density = ScalarField::sample(g, [&](double x, double, double) { return 1.0 + coef * std::cos(x); });
  CHECK(compatibility_residual(s0, s1, a1) < 1e-12);

  const double delta = 1e-3;
  s1.density += ScalarField::sample(g, [&](double x, double, double) { return delta * std::cos(2 * x); });
  CHECK(compatibility_residual(s0, s1, a1) == doctest::Approx(delta * std::sqrt(std::numbers::pi) / dt).epsilon(1e-9));

  s1.t = 0.0;
  CHECK_THROWS_AS(compatibility_residual(s0, s1, a1), Error);
}

TEST_CASE("prepare_data imposes the constraints") {
  const auto g = GridSpec::make(3, 32, 7.2);
  DataFamily fam{"gaussian-bump", {{"rho_amp", 1.0}, {"grad_amp", 0.3}, {"swirl_amp", 0.2},
                                   {"e_amp", 0.1}, {"b_amp", 0.1}, {"width", 1.0}}};
  const RawData raw = generate_data(g, fam);

  SUBCASE("projected magnetic field") {
    const auto d = prepare_data(raw, DataHypotheses{});
    CHECK(div(d.fields.B).max_abs() < 1e-12);
    CHECK(gen::max_diff(charge_density(d.fields.E), d.charge) < 1e-14);
    CHECK(d.scale == 1.0);
  }
  SUBCASE("magnetic field from velocity") {
    DataHypotheses h;
    h.magnetic_from_velocity = true;
    const auto d = prepare_data(raw, h);
    CHECK(gen::max_diff(d.fields.B, curl(d.fields.u)) == 0.0);
  }
  SUBCASE("requested charge") {
    DataHypotheses h;
    h.charge = ScalarField::sample(g, [](double x, double y, double z) {
      const double r2 = x * x + y * y + z * z;
      return (r2 - 3.0) * std::exp(-r2 / 2);  // Laplacian of a gaussian: mean free
    });
    const auto d = prepare_data(raw, h);
    CHECK(gen::max_diff(charge_density(d.fields.E), *h.charge) < 1e-8);
    DataHypotheses bad;
    bad.charge = ScalarField(g, 1.0);
    CHECK_THROWS_AS(prepare_data(raw, bad), Error);
  }
  SUBCASE("budget rescaling") {
    const auto d = prepare_data(raw, DataHypotheses{}, 1e-2, 3.0);
    const auto& f = d.fields;
    CHECK(quadruple_norm(f.rho, f.u, f.E, f.B, 3.0) == doctest::Approx(1e-2).epsilon(1e-12));
    const auto ref = prepare_data(raw, DataHypotheses{});
    CHECK(f.rho[1234] == doctest::Approx(d.scale * ref.fields.rho[1234]));
    CHECK_THROWS_AS(prepare_data(raw, DataHypotheses{}, -1.0), Error);
  }
}

TEST_CASE("prepare_data rejects data reaching the box edge") {
  const auto g = GridSpec::make(2, 32, 3.0);
  RawData raw{gaussian(g, 1.0, 1.0), VectorField(g), VectorField(g), VectorField(g)};
  CHECK_THROWS_AS(prepare_data(raw, DataHypotheses{}), Error);
  raw.rho = gaussian(g, 1.0, 0.25);
  CHECK_NOTHROW(prepare_data(raw, DataHypotheses{}));
}

TEST_CASE("quadruple norm of a single scalar mode") {
  const auto g = GridSpec::make(1, 32, std::numbers::pi);
  const auto rho = ScalarField::sample(g, [](double x, double, double) { return std::cos(3 * x); });
  const VectorField zero(g);
  // Xdot_0 = sqrt(pi), Xdot_2 = 9 sqrt(pi)
  CHECK(quadruple_norm(rho, zero, zero, zero, 2.0) == doctest::Approx(std::sqrt(82.0 * std::numbers::pi)));
}
