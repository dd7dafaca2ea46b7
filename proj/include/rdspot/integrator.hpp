#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rdspot/errors.hpp"
#include "rdspot/grid.hpp"
#include "rdspot/kinetics.hpp"
#include "rdspot/rng.hpp"
#include "rdspot/snapshot.hpp"

namespace rdspot {

enum class Variant { gs, waste, tail };
enum class Species { A, B, C, P };

using ModelParams = std::variant<GrayScottParams, WasteParams, TailParams>;

inline std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::gs: return "gs";
    case Variant::waste: return "waste";
    case Variant::tail: return "tail";
  }
  return "?";
}

inline Variant parse_variant(std::string_view s) {
  if (s == "gs") return Variant::gs;
  if (s == "waste") return Variant::waste;
  if (s == "tail") return Variant::tail;
  throw ConfigError("unknown variant '" + std::string(s) + "'");
}

inline std::string_view species_name(Species s) {
  switch (s) {
    case Species::A: return "a";
    case Species::B: return "b";
    case Species::C: return "c";
    case Species::P: return "p";
  }
  return "?";
}

inline Species parse_species(std::string_view s) {
  if (s == "a" || s == "A") return Species::A;
  if (s == "b" || s == "B") return Species::B;
  if (s == "c" || s == "C") return Species::C;
  if (s == "p" || s == "P") return Species::P;
  throw ConfigError("unknown species '" + std::string(s) + "'");
}

inline Variant variant_of(const ModelParams& p) {
  return static_cast<Variant>(p.index());
}

/// Species carried by each variant, in snapshot table order.
inline std::vector<Species> species_of(Variant v) {
  switch (v) {
    case Variant::gs: return {Species::A, Species::B};
    case Variant::waste: return {Species::A, Species::B, Species::P};
    case Variant::tail: return {Species::A, Species::B, Species::C};
  }
  return {};
}

inline double max_diffusion(const ModelParams& params) {
  return std::visit(
      [](const auto& p) -> double {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, GrayScottParams>) return std::max(p.d_a, p.d_b);
        else if constexpr (std::is_same_v<P, WasteParams>)
          return std::max(p.base.d_a, p.base.d_b);
        else return std::max({p.d_a, p.d_b, p.d_c});
      },
      params);
}

/// Explicit-Euler stability number dt * D_max * (2/hx^2 + 2/hy^2); must be < 1.
inline double cfl_number(const GridSpec& g, const ModelParams& params, double dt) {
  double s = 2.0 / (g.hx() * g.hx());
  if (!g.one_dimensional()) s += 2.0 / (g.hy() * g.hy());
  return dt * max_diffusion(params) * s;
}

inline void check_cfl(const GridSpec& g, const ModelParams& params, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be positive");
  const double c = cfl_number(g, params, dt);
  if (!(c < 1.0))
    throw ConfigError("CFL condition violated: dt*D*(2/hx^2+2/hy^2) = " +
                      std::to_string(c) + " >= 1");
}

inline void validate_params(const ModelParams& params) {
  std::visit([](const auto& p) { p.validate(); }, params);
}

struct SeedPatch {
  Vec2 center{1.25, 1.25};
  double half_width = 0.1;
  double a = 0.5;
  double b = 0.25;
  double c = 0.0;
};

struct InitSpec {
  enum class Kind { square_seed, uniform_noise, from_snapshot };
  Kind kind = Kind::square_seed;
  // square_seed: every patch is painted; uniform_noise: the first patch's
  // levels cover the whole surface.
  std::vector<SeedPatch> patches{SeedPatch{}};
  double noise_amplitude = 0.01;
  std::uint64_t rng_seed = 1;
  std::string snapshot_path;
};

/// Full integrator state. Time is derived as step_count * dt.
class SimState {
 public:
  GridSpec grid;
  ModelParams params;
  double dt = 1.0;
  CounterRng rng;
  std::int64_t step_count = 0;
  Field a;
  Field b;
  std::optional<Field> c;
  std::optional<Field> p;
  // Diagnostics: cells clamped to zero, cumulative and in the last step.
  std::uint64_t clamped_total = 0;
  std::uint64_t clamped_last = 0;

  Variant variant() const { return variant_of(params); }
  double t() const { return static_cast<double>(step_count) * dt; }

  bool has(Species s) const {
    switch (s) {
      case Species::A:
      case Species::B: return true;
      case Species::C: return c.has_value();
      case Species::P: return p.has_value();
    }
    return false;
  }

  Field& field(Species s) {
    switch (s) {
      case Species::A: return a;
      case Species::B: return b;
      case Species::C:
        if (c) return *c;
        break;
      case Species::P:
        if (p) return *p;
        break;
    }
    throw ConfigError("species " + std::string(species_name(s)) +
                      " is not part of the " + std::string(to_string(variant())) +
                      " variant");
  }
  const Field& field(Species s) const { return const_cast<SimState*>(this)->field(s); }

  std::vector<Species> species() const { return species_of(variant()); }

  /// Replace params or dt while running; re-checks stability.
  void reconfigure(const ModelParams& next, double next_dt) {
    if (variant_of(next) != variant())
      throw ConfigError("cannot change model variant of a running state");
    validate_params(next);
    check_cfl(grid, next, next_dt);
    // Time must stay an exact multiple of the step.
    const double t_now = t();
    const auto n = static_cast<std::int64_t>(std::llround(t_now / next_dt));
    if (static_cast<double>(n) * next_dt != t_now)
      throw ConfigError("dt change would make t a non-multiple of dt");
    params = next;
    dt = next_dt;
    step_count = n;
  }

  bool same_physics(const SimState& o) const {
    return grid == o.grid && params == o.params && dt == o.dt &&
           step_count == o.step_count && a == o.a && b == o.b && c == o.c &&
           p == o.p;
  }

  struct Scratch {
    std::vector<double> next_a, next_b, next_x, lap;
  };
  Scratch scratch;  // reusable step buffers, not part of the state
};

inline Snapshot to_snapshot(const SimState& s) {
  Snapshot snap;
  snap.t = s.t();
  snap.nx = s.grid.nx;
  snap.ny = s.grid.ny;
  for (Species sp : s.species()) {
    snap.names.emplace_back(species_name(sp));
    const auto v = s.field(sp).values();
    snap.fields.emplace_back(v.begin(), v.end());
  }
  return snap;
}

namespace detail {

inline bool patch_fits(const GridSpec& g, const SeedPatch& p) {
  const bool x_ok = p.center.x - p.half_width >= 0.0 && p.center.x + p.half_width <= g.lx;
  const bool y_ok = g.one_dimensional() ||
                    (p.center.y - p.half_width >= 0.0 && p.center.y + p.half_width <= g.ly);
  return p.half_width > 0.0 && x_ok && y_ok;
}

inline bool in_patch(const GridSpec& g, const SeedPatch& p, Vec2 cell) {
  if (std::fabs(cell.x - p.center.x) > p.half_width) return false;
  return g.one_dimensional() || std::fabs(cell.y - p.center.y) <= p.half_width;
}

}  // namespace detail

/// Builds the initial state. Background is a = 1, b = c = p = 0; seeded cells
/// take the patch levels times (1 + amplitude * u), u uniform in [-1, 1).
inline SimState init(const GridSpec& grid, const InitSpec& init_spec,
                     const ModelParams& params, double dt) {
  grid.validate();
  validate_params(params);
  check_cfl(grid, params, dt);
  if (!(init_spec.noise_amplitude >= 0.0 && init_spec.noise_amplitude <= 0.1))
    throw ConfigError("init: noise_amplitude must lie in [0, 0.1]");

  SimState s;
  s.grid = grid;
  s.params = params;
  s.dt = dt;
  s.rng = CounterRng(init_spec.rng_seed);
  s.a = Field(grid, 1.0);
  s.b = Field(grid, 0.0);
  const Variant v = variant_of(params);
  if (v == Variant::waste) s.p = Field(grid, 0.0);
  if (v == Variant::tail) s.c = Field(grid, 0.0);

  if (init_spec.kind == InitSpec::Kind::from_snapshot) {
    const Snapshot snap = read_snapshot_file(init_spec.snapshot_path);
    if (snap.nx != grid.nx || snap.ny != grid.ny)
      throw ConfigError("init: snapshot grid does not match configured grid");
    for (Species sp : s.species()) {
      const auto it = std::find(snap.names.begin(), snap.names.end(), species_name(sp));
      if (it == snap.names.end())
        throw ConfigError("init: snapshot lacks species " + std::string(species_name(sp)));
      s.field(sp) = Field(grid, snap.fields[static_cast<std::size_t>(it - snap.names.begin())]);
    }
    const auto n = static_cast<std::int64_t>(std::llround(snap.t / dt));
    if (static_cast<double>(n) * dt != snap.t)
      throw ConfigError("init: snapshot time is not a multiple of dt");
    s.step_count = n;
    return s;
  }

  if (init_spec.patches.empty()) throw ConfigError("init: at least one seed patch required");
  const double amp = init_spec.noise_amplitude;
  constexpr std::uint64_t kInitStream = 0;
  auto paint = [&](std::size_t n, const SeedPatch& patch) {
    auto noisy = [&](double level, std::uint64_t slot) {
      if (amp == 0.0) return level;
      const double u = s.rng.uniform_at(kInitStream, n * 4 + slot);
      return level * (1.0 + amp * (2.0 * u - 1.0));
    };
    s.a[n] = noisy(patch.a, 0);
    s.b[n] = noisy(patch.b, 1);
    if (s.c) (*s.c)[n] = noisy(patch.c, 2);
  };

  if (init_spec.kind == InitSpec::Kind::uniform_noise) {
    for (std::size_t n = 0; n < grid.size(); ++n) paint(n, init_spec.patches.front());
    return s;
  }
  for (const auto& patch : init_spec.patches)
    if (!detail::patch_fits(grid, patch)) throw ConfigError("init: seed region outside domain");
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) {
      const Vec2 cc = s.a.cell_center(i, j);
      // Later patches win where patches overlap.
      const SeedPatch* hit = nullptr;
      for (const auto& patch : init_spec.patches)
        if (detail::in_patch(grid, patch, cc)) hit = &patch;
      if (hit) paint(s.a.index(i, j), *hit);
    }
  return s;
}

/// Concentrations below this are stored as exactly zero.
inline constexpr double kUnderflowFloor = 1e-100;

namespace detail {

// Negative results are clamped (and counted); positive results below
// kUnderflowFloor are flushed to zero so no subnormal enters the arithmetic.
// Integer bit tricks keep the row loops vectorisable: the sign bit counts
// negatives, and adding one to an all-ones exponent carries into bit 63 for
// Inf and NaN.
struct RowTally {
  std::uint64_t negative = 0;
  std::uint64_t non_finite = 0;
};

inline double clamp_count(double x, RowTally& tally) {
  constexpr std::uint64_t kExp = 0x7ffULL << 52;
  const auto bits = std::bit_cast<std::uint64_t>(x);
  tally.negative += bits >> 63;
  tally.non_finite |= ((bits & kExp) + (1ULL << 52)) >> 63;
  // -Inf passes through so the divergence scan can find it.
  return (x < kUnderflowFloor && x >= std::numeric_limits<double>::lowest()) ? 0.0 : x;
}

inline void gs_row(RowTally& clamped, int nx, const double* __restrict A,
                   const double* __restrict B,
                            const double* __restrict la, const double* __restrict lb,
                            double* __restrict na, double* __restrict nb,
                            const GrayScottParams& p, double dt) {
  const double d_a = p.d_a, d_b = p.d_b, r = p.r, k = p.k;
  for (int i = 0; i < nx; ++i) {
    const double a = A[i], b = B[i];
    const double ab2 = a * b * b;
    na[i] = clamp_count(a + dt * (d_a * la[i] + (-ab2 + r * (1.0 - a))), clamped);
    nb[i] = clamp_count(b + dt * (d_b * lb[i] + (ab2 - k * b)), clamped);
  }
}

inline void waste_row(RowTally& clamped, int nx, const double* __restrict A, const double* __restrict B,
                               const double* __restrict W, const double* __restrict la,
                               const double* __restrict lb, double* __restrict na,
                               double* __restrict nb, double* __restrict nw,
                               const WasteParams& p, double dt) {
  for (int i = 0; i < nx; ++i) {
    const auto rt = rates::waste(A[i], B[i], W[i], p);
    na[i] = clamp_count(A[i] + dt * (p.base.d_a * la[i] + rt.a), clamped);
    nb[i] = clamp_count(B[i] + dt * (p.base.d_b * lb[i] + rt.b), clamped);
    nw[i] = clamp_count(W[i] + dt * rt.x, clamped);
  }
}

inline void tail_row(RowTally& clamped, int nx, const double* __restrict A, const double* __restrict B,
                              const double* __restrict C, const double* __restrict la,
                              const double* __restrict lb, const double* __restrict lc,
                              double* __restrict na, double* __restrict nb,
                              double* __restrict nc, const TailParams& p, double dt) {
  const double d_a = p.d_a, d_b = p.d_b, d_c = p.d_c, r = p.r, k1 = p.k1, k2 = p.k2,
               k3 = p.k3;
  for (int i = 0; i < nx; ++i) {
    const double a = A[i], b = B[i], c = C[i];
    const double ab2 = a * b * b;
    const double pred = k2 * b * c * c;
    na[i] = clamp_count(a + dt * (d_a * la[i] + (-ab2 + r * (1.0 - a))), clamped);
    nb[i] = clamp_count(b + dt * (d_b * lb[i] + (ab2 - k1 * b - pred)), clamped);
    nc[i] = clamp_count(c + dt * (d_c * lc[i] + (pred - k3 * c)), clamped);
  }
}

}  // namespace detail

/// One forward-Euler step of diffusion plus reaction. Negative results are
/// clamped to zero and counted. Throws DivergenceError if any value becomes
/// non-finite; the state is left at the previous step in that case.
inline void step(SimState& s) {
  const GridSpec& g = s.grid;
  const int nx = g.nx;
  const int ny = g.ny;
  const std::size_t cells = g.size();
  const double inv_hx2 = 1.0 / (g.hx() * g.hx());
  const double inv_hy2 = 1.0 / (g.hy() * g.hy());
  const bool with_y = !g.one_dimensional();
  const double dt = s.dt;
  const Variant v = s.variant();
  const bool third = v != Variant::gs;
  Field* xf = v == Variant::waste ? &*s.p : v == Variant::tail ? &*s.c : nullptr;

  auto& sc = s.scratch;
  sc.next_a.resize(cells);
  sc.next_b.resize(cells);
  if (third) sc.next_x.resize(cells);
  sc.lap.resize(3 * static_cast<std::size_t>(nx));
  double* la = sc.lap.data();
  double* lb = la + nx;
  double* lx = lb + nx;

  const double* A = s.a.values().data();
  const double* B = s.b.values().data();
  const double* X = xf ? xf->values().data() : nullptr;

  detail::RowTally tally;
  for (int j = 0; j < ny; ++j) {
    const std::size_t row = static_cast<std::size_t>(j) * nx;
    const std::size_t down = static_cast<std::size_t>(j == 0 ? ny - 1 : j - 1) * nx;
    const std::size_t up = static_cast<std::size_t>(j == ny - 1 ? 0 : j + 1) * nx;
    detail::laplacian_row(A + row, A + down, A + up, la, nx, inv_hx2, inv_hy2, with_y);
    detail::laplacian_row(B + row, B + down, B + up, lb, nx, inv_hx2, inv_hy2, with_y);
    switch (v) {
      case Variant::gs:
        detail::gs_row(tally, nx, A + row, B + row, la, lb, sc.next_a.data() + row,
                                  sc.next_b.data() + row, std::get<GrayScottParams>(s.params), dt);
        break;
      case Variant::waste:
        detail::waste_row(tally, nx, A + row, B + row, X + row, la, lb,
                                     sc.next_a.data() + row, sc.next_b.data() + row,
                                     sc.next_x.data() + row, std::get<WasteParams>(s.params), dt);
        break;
      case Variant::tail:
        detail::laplacian_row(X + row, X + down, X + up, lx, nx, inv_hx2, inv_hy2, with_y);
        detail::tail_row(tally, nx, A + row, B + row, X + row, la, lb, lx,
                                    sc.next_a.data() + row, sc.next_b.data() + row,
                                    sc.next_x.data() + row, std::get<TailParams>(s.params), dt);
        break;
    }
  }

  if (tally.non_finite) {
    auto scan = [&](const std::vector<double>& f, Species sp) {
      for (std::size_t n = 0; n < cells; ++n)
        if (!std::isfinite(f[n]))
          throw DivergenceError(static_cast<double>(s.step_count + 1) * dt, n,
                                std::string(species_name(sp)));
    };
    scan(sc.next_a, Species::A);
    scan(sc.next_b, Species::B);
    if (third) scan(sc.next_x, v == Variant::waste ? Species::P : Species::C);
  }

  std::swap(s.a.storage(), sc.next_a);
  std::swap(s.b.storage(), sc.next_b);
  if (third) std::swap(xf->storage(), sc.next_x);
  ++s.step_count;
  s.clamped_last = tally.negative;
  s.clamped_total += tally.negative;
}

/// Observer hook for run(). Called when step_count is a multiple of
/// period_steps: `events` before the step, `analysis` and `output` after it.
struct Observer {
  enum class Phase { events, analysis, output };
  Phase phase = Phase::analysis;
  std::int64_t period_steps = 1;
  std::function<void(SimState&)> fn;
  std::function<void()> flush;
};

inline std::int64_t steps_until(const SimState& s, double t_end) {
  const double span = t_end - s.t();
  if (span < 0.0) throw ConfigError("run: t_end precedes current time");
  const double n = std::round(span / s.dt);
  const double tol = 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::fabs(t_end));
  if (std::fabs(n * s.dt - span) > tol)
    throw ConfigError("run: t_end - t is not a multiple of dt");
  return static_cast<std::int64_t>(n);
}

inline void run(SimState& s, double t_end, std::vector<Observer>& observers) {
  const std::int64_t n = steps_until(s, t_end);
  auto fire = [&](Observer::Phase phase) {
    for (auto& o : observers)
      if (o.phase == phase && o.period_steps > 0 && s.step_count % o.period_steps == 0)
        o.fn(s);
  };
  try {
    for (std::int64_t k = 0; k < n; ++k) {
      fire(Observer::Phase::events);
      step(s);
      fire(Observer::Phase::analysis);
      fire(Observer::Phase::output);
    }
  } catch (...) {
    for (auto& o : observers)
      if (o.flush) o.flush();
    throw;
  }
}

inline void run(SimState& s, double t_end) {
  std::vector<Observer> none;
  run(s, t_end, none);
}

}  // namespace rdspot
