#include "emlab/field_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <ostream>

namespace emlab {

namespace {

static_assert(std::endian::native == std::endian::little, "field files assume a little-endian host");

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw Error("read_fields: truncated file");
  return v;
}

constexpr char kMagic[4] = {'E', 'M', 'L', 'F'};

}  // namespace

void write_fields(std::ostream& os, std::span<const ScalarField* const> components) {
  if (components.empty()) throw Error("write_fields: nothing to write");
  const GridSpec& g = components[0]->grid();
  for (const auto* c : components) require_same_grid(g, c->grid(), "write_fields");
  os.write(kMagic, 4);
  put<std::int32_t>(os, g.n);
  put<double>(os, g.half_width);
  put<std::int32_t>(os, g.dims);
  put<std::int32_t>(os, static_cast<std::int32_t>(components.size()));
  for (const auto* c : components)
    os.write(reinterpret_cast<const char*>(c->values().data()),
             static_cast<std::streamsize>(c->size() * sizeof(double)));
  if (!os) throw Error("write_fields: stream error");
}

std::vector<ScalarField> read_fields(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) throw Error("read_fields: bad magic");
  const int n = get<std::int32_t>(is);
  const double L = get<double>(is);
  const int dims = get<std::int32_t>(is);
  const int count = get<std::int32_t>(is);
  const GridSpec g = GridSpec::make(dims, n, L);
  if (count < 1 || count > 64) throw Error("read_fields: implausible component count");
  std::vector<ScalarField> out;
  for (int c = 0; c < count; ++c) {
    std::vector<double> v(g.size());
    is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
    if (!is) throw Error("read_fields: truncated data");
    out.emplace_back(g, std::move(v));
  }
  return out;
}

void save_field(const std::string& path, const ScalarField& f) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("save_field: cannot open " + path);
  const ScalarField* parts[] = {&f};
  write_fields(os, parts);
}

void save_field(const std::string& path, const VectorField& F) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("save_field: cannot open " + path);
  const ScalarField* parts[] = {&F[0], &F[1], &F[2]};
  write_fields(os, parts);
}

std::vector<ScalarField> load_fields(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("load_fields: cannot open " + path);
  return read_fields(is);
}

void write_line_csv(std::ostream& os, std::span<const ScalarField* const> components,
                    std::span<const std::string> names) {
  if (components.empty() || names.size() != components.size())
    throw Error("write_line_csv: need one name per component");
  const GridSpec& g = components[0]->grid();
  os << "x";
  for (const auto& nm : names) os << ',' << nm;
  os << '\n' << std::setprecision(17);
  // Centre index on the trailing active axes; walk axis 0.
  std::size_t stride = 1, offset = 0;
  for (int a = g.dims - 1; a >= 1; --a) {
    offset += static_cast<std::size_t>(g.n / 2) * stride;
    stride *= static_cast<std::size_t>(g.n);
  }
  for (int i = 0; i < g.n; ++i) {
    const std::size_t p = offset + static_cast<std::size_t>(i) * stride;
    os << g.coord(i);
    for (const auto* c : components) os << ',' << (*c)[p];
    os << '\n';
  }
}

}  // namespace emlab
