#pragma once

#include "gmcf/common.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace gmcf {

/// Uniformly spaced samples over an axis-aligned box. Node i along axis k sits
/// at origin[k] + i * spacing. Values are stored row-major: the last axis
/// varies fastest.
struct Grid {
  int dim = 0;
  std::vector<std::uint64_t> extents;
  double spacing = 0.0;
  Vec origin;
  std::vector<double> values;

  Grid() = default;
  Grid(std::vector<std::uint64_t> extents, double spacing, Vec origin, double fill = 0.0);

  std::size_t size() const { return values.size(); }
  std::size_t flat(const std::vector<std::int64_t>& index) const;
  std::vector<std::int64_t> unflatten(std::size_t flat_index) const;
  Vec node(std::size_t flat_index) const;
  Vec upper() const;
};

/// Binary dump: "GMCF", u32 version, u8 dim, u64 extent per axis, f64 spacing,
/// f64 origin per axis, then the f64 values. All little-endian.
inline constexpr std::uint32_t kGridFormatVersion = 1;

void write_grid(std::ostream& out, const Grid& grid);
Grid read_grid(std::istream& in);
void write_grid_file(const std::string& path, const Grid& grid);
Grid read_grid_file(const std::string& path);

}  // namespace gmcf
