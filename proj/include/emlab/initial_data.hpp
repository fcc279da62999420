// Named generators for initial data.
#pragma once

#include <map>
#include <string>
#include <vector>

#include "emlab/grid.hpp"
#include "emlab/makino.hpp"

namespace emlab {

using ParamMap = std::map<std::string, double>;

/// Generator families and their parameters (defaults in brackets).
///
/// gaussian-bump
///   rho_amp [0.1]   peak of the Makino variable, Gaussian profile
///   grad_amp [0]    velocity -grad of a Gaussian potential (irrotational)
///   swirl_amp [0]   velocity curl of (0, 0, Gaussian) (divergence-free)
///   e_amp [0]       E = curl of (Gaussian, Gaussian, Gaussian) (divergence-free)
///   b_amp [0]       B = curl of (0, Gaussian, 0) before any H4 override
///   width [1]       common Gaussian width
///   cx, cy, cz [0]  centre
///
/// ring-current
///   rho_amp [0.1]   Gaussian Makino variable
///   u_amp [0.1]     azimuthal velocity (-y, x, 0) g about the z axis
///   e_amp [0]       azimuthal electric field of the same shape
///   width [1]
///
/// plane-wave  (vacuum, not compactly supported)
///   kx, ky, kz [1, 0, 0]   integer mode numbers
///   px, py, pz [0, 1, 0]   electric polarization, must be orthogonal to k
///   amp [1]
struct DataFamily {
  std::string name;
  ParamMap params;
};

const std::vector<std::string>& family_names();
/// Accepted parameter names of a family; throws for unknown families.
const std::vector<std::string>& family_parameters(const std::string& family);

/// Samples a family on `grid`. Unknown families or parameters throw.
RawData generate_data(const GridSpec& grid, const DataFamily& family);

}  // namespace emlab
