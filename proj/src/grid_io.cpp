#include "gmcf/grid_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace gmcf {

Grid::Grid(std::vector<std::uint64_t> ext, double h, Vec org, double fill)
    : dim(static_cast<int>(ext.size())), extents(std::move(ext)), spacing(h), origin(std::move(org)) {
  std::size_t total = 1;
  for (auto e : extents) total *= e;
  values.assign(total, fill);
}

std::size_t Grid::flat(const std::vector<std::int64_t>& index) const {
  std::size_t f = 0;
  for (int k = 0; k < dim; ++k) f = f * extents[k] + static_cast<std::size_t>(index[k]);
  return f;
}

std::vector<std::int64_t> Grid::unflatten(std::size_t flat_index) const {
  std::vector<std::int64_t> index(dim);
  for (int k = dim - 1; k >= 0; --k) {
    index[k] = static_cast<std::int64_t>(flat_index % extents[k]);
    flat_index /= extents[k];
  }
  return index;
}

Vec Grid::node(std::size_t flat_index) const {
  const auto index = unflatten(flat_index);
  Vec x(dim);
  for (int k = 0; k < dim; ++k) x[k] = origin[k] + static_cast<double>(index[k]) * spacing;
  return x;
}

Vec Grid::upper() const {
  Vec x(dim);
  for (int k = 0; k < dim; ++k) x[k] = origin[k] + static_cast<double>(extents[k] - 1) * spacing;
  return x;
}

namespace {

static_assert(std::endian::native == std::endian::little, "grid dumps assume a little-endian host");

template <typename T>
void put(std::ostream& out, T value) {
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  out.write(bytes.data(), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  std::array<char, sizeof(T)> bytes;
  if (!in.read(bytes.data(), sizeof(T))) throw Error(ErrorCode::kIo, "truncated grid dump");
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

}  // namespace

void write_grid(std::ostream& out, const Grid& grid) {
  out.write("GMCF", 4);
  put<std::uint32_t>(out, kGridFormatVersion);
  put<std::uint8_t>(out, static_cast<std::uint8_t>(grid.dim));
  for (auto e : grid.extents) put<std::uint64_t>(out, e);
  put<double>(out, grid.spacing);
  for (int k = 0; k < grid.dim; ++k) put<double>(out, grid.origin[k]);
  for (double v : grid.values) put<double>(out, v);
}

Grid read_grid(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "GMCF", 4) != 0)
    throw Error(ErrorCode::kIo, "bad grid dump magic");
  const auto version = get<std::uint32_t>(in);
  if (version != kGridFormatVersion)
    throw Error(ErrorCode::kIo, "unsupported grid dump version " + std::to_string(version));
  const int dim = get<std::uint8_t>(in);
  if (dim < 1 || dim > 3) throw Error(ErrorCode::kIo, "grid dump dimension out of range");
  std::vector<std::uint64_t> extents(dim);
  for (auto& e : extents) e = get<std::uint64_t>(in);
  const double spacing = get<double>(in);
  Vec origin(dim);
  for (int k = 0; k < dim; ++k) origin[k] = get<double>(in);
  Grid grid(extents, spacing, origin);
  for (auto& v : grid.values) v = get<double>(in);
  return grid;
}

void write_grid_file(const std::string& path, const Grid& grid) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path);
  write_grid(out, grid);
}

Grid read_grid_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  return read_grid(in);
}

}  // namespace gmcf
