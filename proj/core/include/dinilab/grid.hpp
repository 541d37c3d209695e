#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace dinilab {

/// Axis-aligned box [lo_0, hi_0] x ... x [lo_{N-1}, hi_{N-1}]; the face x_{N-1} = lo is
/// the degeneracy face.
struct Box {
  std::vector<double> lo;
  std::vector<double> hi;

  int dim() const noexcept { return static_cast<int>(lo.size()); }
  double extent(int d) const { return hi[static_cast<std::size_t>(d)] - lo[static_cast<std::size_t>(d)]; }
  double volume() const;
  void validate() const;
};

/// Tensor-grid scalar field, row-major (last axis fastest), nodes include the box boundary.
struct GridField {
  std::vector<int> shape;
  std::vector<double> spacing;
  std::vector<double> origin;
  std::vector<double> values;

  static GridField on_box(const Box& box, const std::vector<int>& nodes, double fill = 0.0);

  int dim() const noexcept { return static_cast<int>(shape.size()); }
  std::size_t size() const noexcept { return values.size(); }
  std::vector<std::ptrdiff_t> strides() const;
  Box box() const;

  /// Multi-index of a linear node index.
  void unravel(std::size_t idx, std::span<int> out) const;
  std::size_t ravel(std::span<const int> ijk) const;
  /// Physical coordinates of a node.
  void coords(std::size_t idx, std::span<double> x) const;
  bool on_boundary(std::size_t idx) const;

  bool same_grid(const GridField& other) const;
};

/// Multilinear interpolation; throws DomainError for points outside the box.
std::vector<double> probe(const GridField& field, const std::vector<std::vector<double>>& points);
double probe(const GridField& field, std::span<const double> point);

/// Writes <base>.bin (little-endian float64, row-major) and <base>.json (shape, spacing, box).
void write_field(const GridField& field, const std::string& base);
GridField read_field(const std::string& base);

}  // namespace dinilab
