#include "dinilab/grid.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "dinilab/errors.hpp"

namespace dinilab {

double Box::volume() const {
  double v = 1.0;
  for (int d = 0; d < dim(); ++d) v *= extent(d);
  return v;
}

void Box::validate() const {
  if (lo.empty() || lo.size() != hi.size()) throw ArgumentError("box: lo/hi dimension mismatch");
  for (std::size_t d = 0; d < lo.size(); ++d)
    if (!(hi[d] > lo[d]) || !std::isfinite(lo[d]) || !std::isfinite(hi[d]))
      throw ArgumentError("box: need lo < hi on every axis");
}

GridField GridField::on_box(const Box& box, const std::vector<int>& nodes, double fill) {
  box.validate();
  if (nodes.size() != box.lo.size()) throw ArgumentError("grid: node counts do not match box dimension");
  GridField g;
  g.shape = nodes;
  g.origin = box.lo;
  std::size_t n = 1;
  for (std::size_t d = 0; d < nodes.size(); ++d) {
    if (nodes[d] < 2) throw ArgumentError("grid: need at least 2 nodes per axis");
    g.spacing.push_back((box.hi[d] - box.lo[d]) / (nodes[d] - 1));
    n *= static_cast<std::size_t>(nodes[d]);
  }
  g.values.assign(n, fill);
  return g;
}

std::vector<std::ptrdiff_t> GridField::strides() const {
  std::vector<std::ptrdiff_t> s(shape.size());
  std::ptrdiff_t acc = 1;
  for (int d = dim() - 1; d >= 0; --d) {
    s[static_cast<std::size_t>(d)] = acc;
    acc *= shape[static_cast<std::size_t>(d)];
  }
  return s;
}

Box GridField::box() const {
  Box b;
  b.lo = origin;
  b.hi.resize(origin.size());
  for (std::size_t d = 0; d < origin.size(); ++d) b.hi[d] = origin[d] + spacing[d] * (shape[d] - 1);
  return b;
}

void GridField::unravel(std::size_t idx, std::span<int> out) const {
  for (int d = dim() - 1; d >= 0; --d) {
    const auto n = static_cast<std::size_t>(shape[static_cast<std::size_t>(d)]);
    out[static_cast<std::size_t>(d)] = static_cast<int>(idx % n);
    idx /= n;
  }
}

std::size_t GridField::ravel(std::span<const int> ijk) const {
  std::size_t idx = 0;
  for (std::size_t d = 0; d < shape.size(); ++d) idx = idx * static_cast<std::size_t>(shape[d]) + static_cast<std::size_t>(ijk[d]);
  return idx;
}

void GridField::coords(std::size_t idx, std::span<double> x) const {
  for (int d = dim() - 1; d >= 0; --d) {
    const auto dd = static_cast<std::size_t>(d);
    const auto n = static_cast<std::size_t>(shape[dd]);
    x[dd] = origin[dd] + spacing[dd] * static_cast<double>(idx % n);
    idx /= n;
  }
}

bool GridField::on_boundary(std::size_t idx) const {
  for (int d = dim() - 1; d >= 0; --d) {
    const auto n = static_cast<std::size_t>(shape[static_cast<std::size_t>(d)]);
    const std::size_t i = idx % n;
    if (i == 0 || i == n - 1) return true;
    idx /= n;
  }
  return false;
}

bool GridField::same_grid(const GridField& o) const {
  return shape == o.shape && spacing == o.spacing && origin == o.origin;
}

double probe(const GridField& f, std::span<const double> point) {
  const int N = f.dim();
  if (static_cast<int>(point.size()) != N) throw ArgumentError("probe: point has wrong dimension");
  std::vector<int> base(static_cast<std::size_t>(N));
  std::vector<double> t(static_cast<std::size_t>(N));
  for (int d = 0; d < N; ++d) {
    const auto dd = static_cast<std::size_t>(d);
    const double u = (point[dd] - f.origin[dd]) / f.spacing[dd];
    const double umax = f.shape[dd] - 1;
    // tolerate rounding at the faces
    if (!(u >= -1e-9) || !(u <= umax + 1e-9)) throw DomainError("probe: point outside the box");
    double fl = std::floor(u);
    if (fl >= umax) fl = umax - 1;
    if (fl < 0) fl = 0;
    base[dd] = static_cast<int>(fl);
    t[dd] = std::clamp(u - fl, 0.0, 1.0);
  }
  const auto st = f.strides();
  std::size_t b = f.ravel(base);
  double acc = 0.0;
  for (unsigned corner = 0; corner < (1u << N); ++corner) {
    double w = 1.0;
    std::ptrdiff_t off = 0;
    for (int d = 0; d < N; ++d) {
      const auto dd = static_cast<std::size_t>(d);
      const bool up = (corner >> d) & 1u;
      w *= up ? t[dd] : 1.0 - t[dd];
      if (up) off += st[dd];
    }
    // skip zero-weight corners: exact node values, no reads past the last node
    if (w != 0.0) acc += w * f.values[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(b) + off)];
  }
  return acc;
}

std::vector<double> probe(const GridField& f, const std::vector<std::vector<double>>& points) {
  std::vector<double> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(probe(f, p));
  return out;
}

void write_field(const GridField& f, const std::string& base) {
  static_assert(std::endian::native == std::endian::little, "binary field format assumes little-endian hosts");
  std::ofstream bin(base + ".bin", std::ios::binary);
  if (!bin) throw ArgumentError("write_field: cannot open " + base + ".bin");
  bin.write(reinterpret_cast<const char*>(f.values.data()), static_cast<std::streamsize>(f.values.size() * sizeof(double)));
  const Box b = f.box();
  nlohmann::json side = {{"format", "float64-le"},
                         {"order", "row-major, last axis fastest"},
                         {"shape", f.shape},
                         {"spacing", f.spacing},
                         {"box", {{"lo", b.lo}, {"hi", b.hi}}}};
  std::ofstream js(base + ".json");
  js << side.dump(2) << '\n';
}

GridField read_field(const std::string& base) {
  std::ifstream js(base + ".json");
  if (!js) throw ArgumentError("read_field: cannot open " + base + ".json");
  nlohmann::json side;
  js >> side;
  GridField f;
  f.shape = side.at("shape").get<std::vector<int>>();
  f.spacing = side.at("spacing").get<std::vector<double>>();
  f.origin = side.at("box").at("lo").get<std::vector<double>>();
  std::size_t n = 1;
  for (int s : f.shape) n *= static_cast<std::size_t>(s);
  f.values.resize(n);
  std::ifstream bin(base + ".bin", std::ios::binary);
  if (!bin) throw ArgumentError("read_field: cannot open " + base + ".bin");
  bin.read(reinterpret_cast<char*>(f.values.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (bin.gcount() != static_cast<std::streamsize>(n * sizeof(double))) throw ArgumentError("read_field: short file");
  return f;
}

}  // namespace dinilab
