// Flat binary field files and CSV line slices.
//
// Binary layout (all little-endian):
//   char[4]  magic "EMLF"
//   int32    n
//   float64  L (half width)
//   int32    active_dims
//   int32    component count (1 for scalar, 3 for vector)
//   float64  values, component-major, each component row-major over the
//            active axes (axis 0 slowest)
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "emlab/grid.hpp"

namespace emlab {

void write_fields(std::ostream& os, std::span<const ScalarField* const> components);
std::vector<ScalarField> read_fields(std::istream& is);

void save_field(const std::string& path, const ScalarField& f);
void save_field(const std::string& path, const VectorField& F);
std::vector<ScalarField> load_fields(const std::string& path);

/// CSV of the line through the box centre along axis 0: columns x, then one
/// column per component.
void write_line_csv(std::ostream& os, std::span<const ScalarField* const> components,
                    std::span<const std::string> names);

}  // namespace emlab
