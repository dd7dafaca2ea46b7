#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rdspot/errors.hpp"

namespace rdspot {

/// Geometry of a periodic rectangular surface discretised into nx by ny cells.
/// ny == 1 selects a one-dimensional ring.
struct GridSpec {
  int nx = 256;
  int ny = 256;
  double lx = 2.5;
  double ly = 2.5;

  double hx() const { return lx / nx; }
  double hy() const { return ly / ny; }
  std::size_t size() const {
    return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny);
  }
  bool one_dimensional() const { return ny == 1; }
  double cell_area() const { return hx() * hy(); }

  void validate() const {
    if (nx < 3) throw ConfigError("grid: nx must be >= 3");
    if (ny < 1) throw ConfigError("grid: ny must be >= 1");
    if (!(lx > 0.0) || !(ly > 0.0) || !std::isfinite(lx) || !std::isfinite(ly))
      throw ConfigError("grid: lx and ly must be positive and finite");
    if (!(hx() > 0.0) || !(hy() > 0.0) || !std::isfinite(hx()) ||
        !std::isfinite(hy()))
      throw ConfigError("grid: cell spacing must be positive and finite");
  }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Wraps a coordinate into [0, length).
inline double wrap_coord(double x, double length) {
  double r = std::fmod(x, length);
  if (r < 0.0) r += length;
  if (r >= length) r -= length;
  return r;
}

/// Signed minimum-image displacement from `from` to `to` on a ring of `length`.
inline double periodic_delta(double from, double to, double length) {
  double d = std::fmod(to - from, length);
  if (d > 0.5 * length) d -= length;
  if (d < -0.5 * length) d += length;
  return d;
}

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }

/// Minimum-image distance on the torus described by `spec`. In 1-D mode
/// the y component is ignored.
inline Vec2 periodic_displacement(const GridSpec& spec, Vec2 from, Vec2 to) {
  Vec2 d{periodic_delta(from.x, to.x, spec.lx), 0.0};
  if (!spec.one_dimensional()) d.y = periodic_delta(from.y, to.y, spec.ly);
  return d;
}

inline double periodic_distance(const GridSpec& spec, Vec2 a, Vec2 b) {
  return norm(periodic_displacement(spec, a, b));
}

/// Row-major scalar field, x fastest.
class Field {
 public:
  Field() = default;
  explicit Field(GridSpec spec, double value = 0.0)
      : spec_(spec), values_(spec.size(), value) {}
  Field(GridSpec spec, std::vector<double> values)
      : spec_(spec), values_(std::move(values)) {
    if (values_.size() != spec_.size())
      throw StructuralError("field: value count does not match grid");
  }

  const GridSpec& spec() const { return spec_; }
  std::size_t size() const { return values_.size(); }

  double& operator()(int i, int j) { return values_[index(i, j)]; }
  double operator()(int i, int j) const { return values_[index(i, j)]; }
  double& operator[](std::size_t n) { return values_[n]; }
  double operator[](std::size_t n) const { return values_[n]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::vector<double>& storage() { return values_; }

  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(spec_.nx) +
           static_cast<std::size_t>(i);
  }

  Vec2 cell_center(int i, int j) const {
    return {(i + 0.5) * spec_.hx(), (j + 0.5) * spec_.hy()};
  }

  friend bool operator==(const Field&, const Field&) = default;

 private:
  GridSpec spec_;
  std::vector<double> values_;
};

inline void require_same_grid(const Field& a, const Field& b,
                              const char* what) {
  if (!(a.spec() == b.spec()))
    throw StructuralError(std::string(what) + ": fields are on different grids");
}

namespace detail {

// Five-point periodic stencil for row j, written into out[0..nx).
// Shared by laplacian() and the integrator so both agree bit for bit.
template <bool WithY>
void laplacian_row_impl(const double* row, const double* down, const double* up,
                        double* out, int nx, double inv_hx2, double inv_hy2) {
  auto at = [&](int i, double left, double right) {
    const double c = row[i];
    double v = (left + right - 2.0 * c) * inv_hx2;
    if constexpr (WithY) v += (down[i] + up[i] - 2.0 * c) * inv_hy2;
    return v;
  };
  out[0] = at(0, row[nx - 1], row[1]);
  for (int i = 1; i < nx - 1; ++i) {
    const double c = row[i];
    double v = (row[i - 1] + row[i + 1] - 2.0 * c) * inv_hx2;
    if constexpr (WithY) v += (down[i] + up[i] - 2.0 * c) * inv_hy2;
    out[i] = v;
  }
  out[nx - 1] = at(nx - 1, row[nx - 2], row[0]);
}

inline void laplacian_row(const double* row, const double* down, const double* up,
                          double* out, int nx, double inv_hx2, double inv_hy2,
                          bool with_y) {
  if (with_y)
    laplacian_row_impl<true>(row, down, up, out, nx, inv_hx2, inv_hy2);
  else
    laplacian_row_impl<false>(row, down, up, out, nx, inv_hx2, inv_hy2);
}

}  // namespace detail

/// Discrete periodic Laplacian (5-point stencil).
inline Field laplacian(const Field& f) {
  const GridSpec& g = f.spec();
  Field out(g);
  const double inv_hx2 = 1.0 / (g.hx() * g.hx());
  const double inv_hy2 = 1.0 / (g.hy() * g.hy());
  const bool with_y = !g.one_dimensional();
  const double* v = f.values().data();
  for (int j = 0; j < g.ny; ++j) {
    const int jd = j == 0 ? g.ny - 1 : j - 1;
    const int ju = j == g.ny - 1 ? 0 : j + 1;
    detail::laplacian_row(v + f.index(0, j), v + f.index(0, jd),
                          v + f.index(0, ju), out.values().data() + f.index(0, j),
                          g.nx, inv_hx2, inv_hy2, with_y);
  }
  return out;
}

/// Neumaier-compensated sum in storage order.
inline double compensated_sum(std::span<const double> xs) {
  double sum = 0.0;
  double comp = 0.0;
  for (double x : xs) {
    const double t = sum + x;
    if (std::fabs(sum) >= std::fabs(x))
      comp += (sum - t) + x;
    else
      comp += (x - t) + sum;
    sum = t;
  }
  return sum + comp;
}

/// Integral of the field over the surface.
inline double total_mass(const Field& f) {
  return compensated_sum(f.values()) * f.spec().hx() * f.spec().hy();
}

}  // namespace rdspot
