#pragma once

#include <array>
#include <cmath>
#include <tuple>
#include <utility>
#include <vector>

#include "rdspot/errors.hpp"
#include "rdspot/grid.hpp"

namespace rdspot {

// Autocatalysis A + 2B -> 3B runs at unit rate in every variant.

struct GrayScottParams {
  double d_a = 2e-5;
  double d_b = 1e-5;
  double r = 0.04;  // feed
  double k = 0.06;  // decay of B

  void validate() const {
    if (!(d_a > 0 && d_b > 0 && r > 0 && k > 0))
      throw ConfigError("gray-scott parameters must all be > 0");
  }
  friend bool operator==(const GrayScottParams&, const GrayScottParams&) = default;
};

/// Gray-Scott with an immobile waste product P that inhibits autocatalysis by
/// a factor exp(-w p).
struct WasteParams {
  GrayScottParams base{2e-5, 1e-5, 0.032, 0.0942};
  double w = 0.015;
  double k_p = 0.0002;

  void validate() const {
    base.validate();
    if (!(w >= 0)) throw ConfigError("waste parameter w must be >= 0");
    if (!(k_p > 0)) throw ConfigError("waste parameter k_p must be > 0");
  }
  friend bool operator==(const WasteParams&, const WasteParams&) = default;
};

/// Gray-Scott plus a secondary autocatalyst C that feeds on B
/// (B -> P at k1, B + 2C -> 3C at k2, C -> P at k3).
struct TailParams {
  double d_a = 2e-5;
  double d_b = 1e-5;
  double d_c = 1e-6;
  double r = 0.0347;
  double k1 = 0.2;
  double k2 = 0.8;
  double k3 = 0.005;

  void validate() const {
    if (!(d_a > 0 && d_b > 0 && d_c > 0 && r > 0 && k1 > 0 && k2 > 0 && k3 > 0))
      throw ConfigError("tail parameters must all be > 0");
  }
  friend bool operator==(const TailParams&, const TailParams&) = default;
};

namespace rates {

struct AB {
  double a;
  double b;
};
struct ABX {
  double a;
  double b;
  double x;
};

inline AB gray_scott(double a, double b, const GrayScottParams& p) {
  const double auto_cat = a * b * b;
  return {-auto_cat + p.r * (1.0 - a), auto_cat - p.k * b};
}

inline ABX waste(double a, double b, double w, const WasteParams& p) {
  const double auto_cat = std::exp(-p.w * w) * a * b * b;
  return {-auto_cat + p.base.r * (1.0 - a), auto_cat - p.base.k * b,
          p.base.k * b - p.k_p * w};
}

inline ABX tail(double a, double b, double c, const TailParams& p) {
  const double auto_cat = a * b * b;
  const double predation = p.k2 * b * c * c;
  return {-auto_cat + p.r * (1.0 - a), auto_cat - p.k1 * b - predation,
          predation - p.k3 * c};
}

}  // namespace rates

inline std::pair<Field, Field> react_gs(const Field& a, const Field& b,
                                        const GrayScottParams& p) {
  require_same_grid(a, b, "react_gs");
  Field da(a.spec()), db(a.spec());
  for (std::size_t n = 0; n < a.size(); ++n) {
    const auto d = rates::gray_scott(a[n], b[n], p);
    da[n] = d.a;
    db[n] = d.b;
  }
  return {std::move(da), std::move(db)};
}

inline std::tuple<Field, Field, Field> react_waste(const Field& a,
                                                   const Field& b,
                                                   const Field& w,
                                                   const WasteParams& p) {
  require_same_grid(a, b, "react_waste");
  require_same_grid(a, w, "react_waste");
  Field da(a.spec()), db(a.spec()), dw(a.spec());
  for (std::size_t n = 0; n < a.size(); ++n) {
    const auto d = rates::waste(a[n], b[n], w[n], p);
    da[n] = d.a;
    db[n] = d.b;
    dw[n] = d.x;
  }
  return {std::move(da), std::move(db), std::move(dw)};
}

inline std::tuple<Field, Field, Field> react_tail(const Field& a,
                                                  const Field& b,
                                                  const Field& c,
                                                  const TailParams& p) {
  require_same_grid(a, b, "react_tail");
  require_same_grid(a, c, "react_tail");
  Field da(a.spec()), db(a.spec()), dc(a.spec());
  for (std::size_t n = 0; n < a.size(); ++n) {
    const auto d = rates::tail(a[n], b[n], c[n], p);
    da[n] = d.a;
    db[n] = d.b;
    dc[n] = d.x;
  }
  return {std::move(da), std::move(db), std::move(dc)};
}

struct FixedPoint {
  double a;
  double b;
};

/// Spatially uniform steady states of the Gray-Scott kinetics.
///
/// The trivial state (1, 0) always exists. Non-trivial states satisfy
/// k b^2 - r b + r k = 0 with a = k / b and exist when r >= 4 k^2.
/// Returned in increasing b.
inline std::vector<FixedPoint> homogeneous_fixed_points(const GrayScottParams& p) {
  std::vector<FixedPoint> out{{1.0, 0.0}};
  const double disc = p.r * p.r - 4.0 * p.k * p.k * p.r;
  if (disc < 0.0) return out;
  const double sq = std::sqrt(disc);
  // Stable form of the quadratic roots: b_lo * b_hi = r, so avoid cancellation.
  const double b_hi = (p.r + sq) / (2.0 * p.k);
  const double b_lo = p.r / b_hi;
  out.push_back({p.k / b_lo, b_lo});
  if (disc > 0.0) out.push_back({p.k / b_hi, b_hi});
  return out;
}

}  // namespace rdspot
