#include "emlab/initial_data.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "emlab/operators.hpp"

namespace emlab {

namespace {

const std::map<std::string, std::vector<std::string>>& registry() {
  static const std::map<std::string, std::vector<std::string>> r{
      {"gaussian-bump", {"rho_amp", "grad_amp", "swirl_amp", "e_amp", "b_amp", "width", "cx", "cy", "cz"}},
      {"ring-current", {"rho_amp", "u_amp", "e_amp", "width"}},
      {"plane-wave", {"kx", "ky", "kz", "px", "py", "pz", "amp"}},
  };
  return r;
}

class Params {
 public:
  Params(const DataFamily& f) : p_(f.params) {
    const auto& allowed = family_parameters(f.name);
    for (const auto& [k, v] : p_) {
      if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
        throw Error("data family '" + f.name + "': unknown parameter '" + k + "'");
      if (!std::isfinite(v)) throw Error("data family '" + f.name + "': parameter '" + k + "' is not finite");
    }
  }
  double get(const std::string& k, double fallback) const {
    const auto it = p_.find(k);
    return it == p_.end() ? fallback : it->second;
  }

 private:
  const ParamMap& p_;
};

ScalarField gaussian(const GridSpec& g, double width, std::array<double, 3> c) {
  if (!(width > 0.0)) throw Error("data family: width must be positive");
  return ScalarField::sample(g, [&](double x, double y, double z) {
    const double r2 = (x - c[0]) * (x - c[0]) + (y - c[1]) * (y - c[1]) + (z - c[2]) * (z - c[2]);
    return std::exp(-r2 / (2.0 * width * width));
  });
}

RawData gaussian_bump(const GridSpec& g, const Params& p) {
  const double w = p.get("width", 1.0);
  const ScalarField bump = gaussian(g, w, {p.get("cx", 0.0), p.get("cy", 0.0), p.get("cz", 0.0)});
  const ScalarField psi = w * bump;
  RawData d{p.get("rho_amp", 0.1) * bump, VectorField(g), VectorField(g), VectorField(g)};

  if (const double a = p.get("grad_amp", 0.0); a != 0.0) d.u.axpy(-a, grad(psi));
  if (const double a = p.get("swirl_amp", 0.0); a != 0.0)
    d.u.axpy(a, curl(VectorField(ScalarField(g), ScalarField(g), psi)));
  if (const double a = p.get("e_amp", 0.0); a != 0.0) d.E = a * curl(VectorField(psi, psi, psi));
  if (const double a = p.get("b_amp", 0.0); a != 0.0)
    d.B = a * curl(VectorField(ScalarField(g), psi, ScalarField(g)));
  return d;
}

RawData ring_current(const GridSpec& g, const Params& p) {
  const double w = p.get("width", 1.0);
  const ScalarField bump = gaussian(g, w, {0.0, 0.0, 0.0});
  const auto azimuthal = [&](double amp) {
    return VectorField::sample(g, [&](double x, double y, double z) {
      const double s = amp * std::exp(-(x * x + y * y + z * z) / (2.0 * w * w)) / w;
      return std::array<double, 3>{-y * s, x * s, 0.0};
    });
  };
  return RawData{p.get("rho_amp", 0.1) * bump, azimuthal(p.get("u_amp", 0.1)), azimuthal(p.get("e_amp", 0.0)),
                 VectorField(g)};
}

RawData plane_wave(const GridSpec& g, const Params& p) {
  const std::array<double, 3> k{p.get("kx", 1.0), p.get("ky", 0.0), p.get("kz", 0.0)};
  const std::array<double, 3> pol{p.get("px", 0.0), p.get("py", 1.0), p.get("pz", 0.0)};
  const double amp = p.get("amp", 1.0);
  double k2 = 0.0, kp = 0.0;
  for (int a = 0; a < 3; ++a) {
    if (k[a] != std::round(k[a])) throw Error("plane-wave: mode numbers must be integers");
    if (a >= g.dims && k[a] != 0.0) throw Error("plane-wave: mode along an inactive axis");
    if (std::abs(k[a]) >= g.n / 2) throw Error("plane-wave: mode is not resolved by the grid");
    k2 += k[a] * k[a];
    kp += k[a] * pol[a];
  }
  if (k2 == 0.0) throw Error("plane-wave: zero wave vector");
  if (std::abs(kp) > 1e-12 * std::sqrt(k2)) throw Error("plane-wave: polarization must be orthogonal to k");
  const double kn = std::sqrt(k2);
  const std::array<double, 3> bdir{(k[1] * pol[2] - k[2] * pol[1]) / kn, (k[2] * pol[0] - k[0] * pol[2]) / kn,
                                   (k[0] * pol[1] - k[1] * pol[0]) / kn};
  const double unit = std::numbers::pi / g.half_width;
  const auto wave = [&](std::array<double, 3> dir) {
    return VectorField::sample(g, [&](double x, double y, double z) {
      const double c = amp * std::cos(unit * (k[0] * x + k[1] * y + k[2] * z));
      return std::array<double, 3>{dir[0] * c, dir[1] * c, dir[2] * c};
    });
  };
  return RawData{ScalarField(g), VectorField(g), wave(pol), wave(bdir)};
}

}  // namespace

const std::vector<std::string>& family_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [k, v] : registry()) out.push_back(k);
    return out;
  }();
  return names;
}

const std::vector<std::string>& family_parameters(const std::string& family) {
  const auto it = registry().find(family);
  if (it == registry().end()) throw Error("unknown data family '" + family + "'");
  return it->second;
}

RawData generate_data(const GridSpec& grid, const DataFamily& family) {
  const Params p(family);
  if (family.name == "gaussian-bump") return gaussian_bump(grid, p);
  if (family.name == "ring-current") return ring_current(grid, p);
  return plane_wave(grid, p);
}

}  // namespace emlab
