#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "rdspot/errors.hpp"
#include "rdspot/grid.hpp"
#include "rdspot/integrator.hpp"

namespace rdspot {

/// A local source (rate > 0) or sink (rate < 0) of one species over a
/// uniform disc.
struct PipetteAction {
  Vec2 position;
  Species species = Species::A;
  double rate = 0.5;     // concentration per unit time
  double radius = 0.05;  // distance units

  void validate() const {
    if (!(radius > 0.0) || !std::isfinite(radius))
      throw ConfigError("pipette: radius must be > 0");
    if (!(std::fabs(rate) < 10.0)) throw ConfigError("pipette: |rate| must be < 10");
    if (species == Species::P) throw ConfigError("pipette: species must be one of A, B, C");
    if (!std::isfinite(position.x) || !std::isfinite(position.y))
      throw ConfigError("pipette: position must be finite");
  }
};

/// Adds rate*dt to every cell whose centre lies within the disc (periodic
/// distance), clamping at zero. Returns the number of cells touched.
inline std::size_t apply_pipette(SimState& s, const PipetteAction& act, double dt) {
  act.validate();
  if (!s.has(act.species))
    throw ConfigError("pipette: species " + std::string(species_name(act.species)) +
                      " is not part of the " + std::string(to_string(s.variant())) + " variant");
  Field& f = s.field(act.species);
  const GridSpec& g = s.grid;
  const Vec2 pos{wrap_coord(act.position.x, g.lx),
                 g.one_dimensional() ? 0.5 * g.hy() : wrap_coord(act.position.y, g.ly)};
  const double delta = act.rate * dt;
  const int rx = std::min(g.nx / 2, static_cast<int>(std::ceil(act.radius / g.hx())) + 1);
  const int ry = g.one_dimensional()
                     ? 0
                     : std::min(g.ny / 2, static_cast<int>(std::ceil(act.radius / g.hy())) + 1);
  const int ci = static_cast<int>(std::floor(pos.x / g.hx()));
  const int cj = g.one_dimensional() ? 0 : static_cast<int>(std::floor(pos.y / g.hy()));
  // Visit each cell once even when the window wraps onto itself.
  std::vector<std::size_t> hit;
  for (int dj = -ry; dj <= ry; ++dj)
    for (int di = -rx; di <= rx; ++di) {
      const int i = ((ci + di) % g.nx + g.nx) % g.nx;
      const int j = ((cj + dj) % g.ny + g.ny) % g.ny;
      if (periodic_distance(g, pos, f.cell_center(i, j)) <= act.radius) hit.push_back(f.index(i, j));
    }
  std::sort(hit.begin(), hit.end());
  hit.erase(std::unique(hit.begin(), hit.end()), hit.end());
  if (delta == 0.0) return hit.size();
  for (std::size_t n : hit) {
    const double v = f[n] + delta;
    f[n] = v < 0.0 ? 0.0 : v;
  }
  return hit.size();
}

/// Periodic clearing of food (species A) in a random square.
struct CataclysmSpec {
  double region_side = 0.5;
  double period = 1000.0;
  // Sub-rectangle [x0, x1) x [y0, y1); the whole square stays inside it.
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;
  std::uint64_t stream = 7;

  void validate(const GridSpec& g, double dt) const {
    if (!(region_side > 0.0)) throw ConfigError("cataclysm: region_side must be > 0");
    if (!(x1 > x0) || !(y1 > y0) || x0 < 0.0 || y0 < 0.0 || x1 > g.lx || y1 > g.ly)
      throw ConfigError("cataclysm: zone must be a non-empty sub-rectangle of the domain");
    if (region_side > x1 - x0 || region_side > y1 - y0)
      throw ConfigError("cataclysm: region_side exceeds zone extents");
    const double m = period / dt;
    if (!(period > 0.0) || std::fabs(m - std::round(m)) > 1e-9 * m)
      throw ConfigError("cataclysm: period must be a positive multiple of dt");
  }
};

/// Centre of cataclysm number `index`; a pure function of (seed, stream, index).
inline Vec2 cataclysm_center(const SimState& s, const CataclysmSpec& spec, std::uint64_t index) {
  const double half = 0.5 * spec.region_side;
  const double ux = s.rng.uniform_at(spec.stream, 2 * index);
  const double uy = s.rng.uniform_at(spec.stream, 2 * index + 1);
  return {spec.x0 + half + ux * (spec.x1 - spec.x0 - spec.region_side),
          spec.y0 + half + uy * (spec.y1 - spec.y0 - spec.region_side)};
}

/// Sets a to zero in the side x side square centred on `c` (periodic wrap).
/// Returns the number of cells cleared.
inline std::size_t clear_square(SimState& s, Vec2 c, double side) {
  if (!(side > 0.0)) throw ConfigError("cataclysm: side must be > 0");
  const GridSpec& g = s.grid;
  const double half = 0.5 * side;
  std::size_t n = 0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const Vec2 d = periodic_displacement(g, c, s.a.cell_center(i, j));
      if (std::fabs(d.x) <= half && (g.one_dimensional() || std::fabs(d.y) <= half)) {
        s.a(i, j) = 0.0;
        ++n;
      }
    }
  return n;
}

/// Cataclysm number `index`: clears food in a region_side square drawn
/// inside the zone. Returns the square's centre.
inline Vec2 apply_cataclysm(SimState& s, const CataclysmSpec& spec, std::uint64_t index) {
  const Vec2 c = cataclysm_center(s, spec, index);
  clear_square(s, c, spec.region_side);
  return c;
}

/// Cataclysm instance for the current time, counting from t = period.
inline Vec2 apply_cataclysm(SimState& s, const CataclysmSpec& spec) {
  const auto index = static_cast<std::uint64_t>(std::llround(s.t() / spec.period));
  return apply_cataclysm(s, spec, index);
}

/// A pipette held for `duration`, optionally dragged in a straight line to `to`.
struct PipetteStroke {
  PipetteAction action;
  double duration = 0.0;
  std::optional<Vec2> to;

  Vec2 position_at(double fraction) const {
    if (!to) return action.position;
    return {action.position.x + (to->x - action.position.x) * fraction,
            action.position.y + (to->y - action.position.y) * fraction};
  }
};

struct ScheduledEvent {
  double t = 0.0;
  std::variant<PipetteStroke, CataclysmSpec> action;
};

/// Timed external interventions. Strokes act on every step in
/// [t, t + duration); cataclysm entries fire once at their time.
struct EventSchedule {
  std::vector<ScheduledEvent> events;

  void validate(const GridSpec& g, double dt) const {
    double prev = -std::numeric_limits<double>::infinity();
    for (const auto& e : events) {
      if (e.t < prev) throw ConfigError("schedule: event times must be non-decreasing");
      prev = e.t;
      const double m = e.t / dt;
      if (e.t < 0.0 || std::fabs(m - std::round(m)) > 1e-9 * std::max(1.0, m))
        throw ConfigError("schedule: event times must be multiples of dt");
      if (const auto* p = std::get_if<PipetteStroke>(&e.action)) {
        p->action.validate();
        if (!(p->duration >= 0.0)) throw ConfigError("schedule: stroke duration must be >= 0");
      } else {
        std::get<CataclysmSpec>(e.action).validate(g, dt);
      }
    }
  }

  /// Expands a periodic cataclysm into entries at period, 2 period, ... < t_end.
  void add_cataclysms(const CataclysmSpec& spec, double t_start, double t_end) {
    std::vector<ScheduledEvent> more;
    for (long n = 1;; ++n) {
      const double t = static_cast<double>(n) * spec.period;
      if (t >= t_end) break;
      if (t > t_start) more.push_back({t, spec});
    }
    events.insert(events.end(), more.begin(), more.end());
    std::stable_sort(events.begin(), events.end(),
                     [](const ScheduledEvent& a, const ScheduledEvent& b) { return a.t < b.t; });
  }
};

/// Applies scheduled events to a state; meant to run as an `events`-phase
/// observer every step.
class ScheduleApplier {
 public:
  explicit ScheduleApplier(EventSchedule schedule) : schedule_(std::move(schedule)) {}

  void operator()(SimState& s) {
    const std::int64_t now = s.step_count;
    for (const auto& e : schedule_.events) {
      const auto start = static_cast<std::int64_t>(std::llround(e.t / s.dt));
      if (const auto* p = std::get_if<PipetteStroke>(&e.action)) {
        const auto len = static_cast<std::int64_t>(std::llround(p->duration / s.dt));
        if (now < start || now >= start + len) continue;
        PipetteAction act = p->action;
        act.position = p->position_at(static_cast<double>(now - start) / static_cast<double>(len));
        apply_pipette(s, act, s.dt);
      } else if (now == start) {
        const auto& spec = std::get<CataclysmSpec>(e.action);
        centers_.push_back(apply_cataclysm(s, spec));
      }
    }
  }

  const std::vector<Vec2>& cataclysm_centers() const { return centers_; }
  const EventSchedule& schedule() const { return schedule_; }

 private:
  EventSchedule schedule_;
  std::vector<Vec2> centers_;
};

}  // namespace rdspot
