#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "rdspot/grid.hpp"
#include "rdspot/integrator.hpp"

namespace rdspot {

class AnalysisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SpotConfig {
  double b_threshold = 0.1;
  int min_area_cells = 4;
  // c is integrated within this distance of the centroid.
  double tail_radius = 0.08;
  // Tailed when tail_mass >= tail_mass_fraction * median spot b-mass of the
  // frame, unless an absolute threshold is given.
  double tail_mass_fraction = 0.1;
  std::optional<double> tail_mass_threshold;
};

struct Spot {
  int id = 0;
  Vec2 centroid;
  double area = 0.0;
  int cells = 0;
  double peak_b = 0.0;
  double b_mass = 0.0;
  double tail_mass = 0.0;
  bool tailed = false;
};

inline double effective_radius(const GridSpec& g, const Spot& s) {
  if (g.one_dimensional()) return 0.5 * s.cells * g.hx();
  return std::sqrt(s.area / std::numbers::pi);
}

/// Connected components of {b >= threshold} under 4-connectivity with
/// periodic wrap. Returns a label per cell, -1 for background.
inline std::vector<int> label_components(const Field& b, double threshold,
                                         int* count = nullptr) {
  const GridSpec& g = b.spec();
  std::vector<int> label(g.size(), -1);
  std::vector<int> queue;
  int next = 0;
  for (std::size_t start = 0; start < g.size(); ++start) {
    if (label[start] >= 0 || !(b[start] >= threshold)) continue;
    label[start] = next;
    queue.assign(1, static_cast<int>(start));
    for (std::size_t q = 0; q < queue.size(); ++q) {
      const int n = queue[q];
      const int i = n % g.nx;
      const int j = n / g.nx;
      int nbrs[4];
      int cnt = 0;
      nbrs[cnt++] = j * g.nx + (i == 0 ? g.nx - 1 : i - 1);
      nbrs[cnt++] = j * g.nx + (i == g.nx - 1 ? 0 : i + 1);
      if (!g.one_dimensional()) {
        nbrs[cnt++] = (j == 0 ? g.ny - 1 : j - 1) * g.nx + i;
        nbrs[cnt++] = (j == g.ny - 1 ? 0 : j + 1) * g.nx + i;
      }
      for (int k = 0; k < cnt; ++k) {
        const int m = nbrs[k];
        if (label[m] < 0 && b[m] >= threshold) {
          label[m] = next;
          queue.push_back(m);
        }
      }
    }
    ++next;
  }
  if (count) *count = next;
  return label;
}

namespace detail {

// Weighted centroid of one component. Cells are unwrapped by walking the
// component from its first cell; a component that closes on itself around
// the torus falls back to a circular mean per axis.
// ui must hold the "unvisited" sentinel for every cell of the component on
// entry; it is restored before returning.
inline Vec2 component_centroid(const Field& b, const std::vector<int>& label, int id,
                               const std::vector<int>& cells_of, std::vector<long>& ui,
                               std::vector<long>& uj) {
  const GridSpec& g = b.spec();
  struct Restore {
    std::vector<long>& ui;
    const std::vector<int>& cells;
    ~Restore() {
      for (int n : cells) ui[n] = std::numeric_limits<long>::min();
    }
  } restore{ui, cells_of};
  std::vector<int> queue{cells_of.front()};
  ui[cells_of.front()] = cells_of.front() % g.nx;
  uj[cells_of.front()] = cells_of.front() / g.nx;
  bool wraps = false;
  for (std::size_t q = 0; q < queue.size(); ++q) {
    const int n = queue[q];
    const int i = n % g.nx;
    const int j = n / g.nx;
    struct Step { int m; long di; long dj; };
    Step steps[4];
    int cnt = 0;
    steps[cnt++] = {j * g.nx + (i == 0 ? g.nx - 1 : i - 1), -1, 0};
    steps[cnt++] = {j * g.nx + (i == g.nx - 1 ? 0 : i + 1), 1, 0};
    if (!g.one_dimensional()) {
      steps[cnt++] = {(j == 0 ? g.ny - 1 : j - 1) * g.nx + i, 0, -1};
      steps[cnt++] = {(j == g.ny - 1 ? 0 : j + 1) * g.nx + i, 0, 1};
    }
    for (int k = 0; k < cnt; ++k) {
      const int m = steps[k].m;
      if (label[m] != id) continue;
      const long ni = ui[n] + steps[k].di;
      const long nj = uj[n] + steps[k].dj;
      if (ui[m] == std::numeric_limits<long>::min()) {
        ui[m] = ni;
        uj[m] = nj;
        queue.push_back(m);
      } else if (ui[m] != ni || uj[m] != nj) {
        wraps = true;
      }
    }
  }
  const double hx = g.hx();
  const double hy = g.hy();
  double w = 0.0;
  if (!wraps) {
    double sx = 0.0, sy = 0.0;
    for (int n : cells_of) {
      w += b[n];
      sx += b[n] * (ui[n] + 0.5) * hx;
      sy += b[n] * (uj[n] + 0.5) * hy;
    }
    return {wrap_coord(sx / w, g.lx), g.one_dimensional() ? 0.5 * hy : wrap_coord(sy / w, g.ly)};
  }
  double cx = 0.0, sx = 0.0, cy = 0.0, sy = 0.0;
  for (int n : cells_of) {
    const double ax = 2.0 * std::numbers::pi * ((n % g.nx) + 0.5) / g.nx;
    const double ay = 2.0 * std::numbers::pi * ((n / g.nx) + 0.5) / g.ny;
    cx += b[n] * std::cos(ax);
    sx += b[n] * std::sin(ax);
    cy += b[n] * std::cos(ay);
    sy += b[n] * std::sin(ay);
  }
  auto angle_to = [](double c, double s, double length) {
    return wrap_coord(std::atan2(s, c) / (2.0 * std::numbers::pi) * length, length);
  };
  return {angle_to(cx, sx, g.lx), g.one_dimensional() ? 0.5 * hy : angle_to(cy, sy, g.ly)};
}

// Integral of f over cells whose centres lie within radius of p.
inline double disc_integral(const Field& f, Vec2 p, double radius) {
  const GridSpec& g = f.spec();
  const int rx = std::min(g.nx / 2, static_cast<int>(std::ceil(radius / g.hx())) + 1);
  const int ry = g.one_dimensional()
                     ? 0
                     : std::min(g.ny / 2, static_cast<int>(std::ceil(radius / g.hy())) + 1);
  const int ci = static_cast<int>(std::floor(p.x / g.hx()));
  const int cj = g.one_dimensional() ? 0 : static_cast<int>(std::floor(p.y / g.hy()));
  double sum = 0.0;
  for (int dj = -ry; dj <= ry; ++dj)
    for (int di = -rx; di <= rx; ++di) {
      const int i = ((ci + di) % g.nx + g.nx) % g.nx;
      const int j = ((cj + dj) % g.ny + g.ny) % g.ny;
      if (periodic_distance(g, p, f.cell_center(i, j)) <= radius) sum += f(i, j);
    }
  return sum * g.cell_area();
}

}  // namespace detail

/// Spots are thresholded components of b. If c is given, each spot's nearby
/// c mass decides whether it carries a tail.
inline std::vector<Spot> detect_spots(const Field& b, const Field* c, const SpotConfig& cfg) {
  if (c) require_same_grid(b, *c, "detect_spots");
  const GridSpec& g = b.spec();
  int count = 0;
  const auto label = label_components(b, cfg.b_threshold, &count);
  std::vector<std::vector<int>> members(static_cast<std::size_t>(count));
  for (std::size_t n = 0; n < label.size(); ++n)
    if (label[n] >= 0) members[label[n]].push_back(static_cast<int>(n));

  std::vector<Spot> spots;
  std::vector<long> ui(g.size(), std::numeric_limits<long>::min());
  std::vector<long> uj(g.size(), 0);
  for (int id = 0; id < count; ++id) {
    const auto& cells = members[id];
    if (static_cast<int>(cells.size()) < cfg.min_area_cells) continue;
    Spot s;
    s.id = static_cast<int>(spots.size());
    s.cells = static_cast<int>(cells.size());
    s.area = s.cells * g.cell_area();
    double mass = 0.0;
    for (int n : cells) {
      s.peak_b = std::max(s.peak_b, b[n]);
      mass += b[n];
    }
    s.b_mass = mass * g.cell_area();
    s.centroid = detail::component_centroid(b, label, id, cells, ui, uj);
    if (c) s.tail_mass = detail::disc_integral(*c, s.centroid, cfg.tail_radius);
    spots.push_back(s);
  }
  if (c && !spots.empty()) {
    double threshold;
    if (cfg.tail_mass_threshold) {
      threshold = *cfg.tail_mass_threshold;
    } else {
      std::vector<double> masses;
      for (const auto& s : spots) masses.push_back(s.b_mass);
      std::sort(masses.begin(), masses.end());
      const std::size_t m = masses.size();
      const double median = m % 2 ? masses[m / 2] : 0.5 * (masses[m / 2 - 1] + masses[m / 2]);
      threshold = cfg.tail_mass_fraction * median;
    }
    for (auto& s : spots) s.tailed = s.tail_mass >= threshold && s.tail_mass > 0.0;
  }
  return spots;
}

// ---------------------------------------------------------------------------
// Tracking and lineage

struct TrackPoint {
  double t = 0.0;
  Spot spot;
  Vec2 unwrapped;  // centroid on the covering plane
};

struct Track {
  enum class End { alive, died, divided, merged };

  int id = 0;
  std::vector<TrackPoint> points;
  double birth = 0.0;
  std::optional<double> death;  // time the track stopped (any reason)
  std::optional<int> parent;
  End end = End::alive;

  const TrackPoint& last() const { return points.back(); }
  double span() const { return points.back().t - points.front().t; }
  double tailed_fraction() const {
    if (points.empty()) return 0.0;
    int n = 0;
    for (const auto& p : points) n += p.spot.tailed;
    return static_cast<double>(n) / static_cast<double>(points.size());
  }
};

struct LineageEvent {
  enum class Kind { birth, death, division, merge, tail_gain, tail_loss };
  double t = 0.0;
  Kind kind = Kind::birth;
  std::vector<int> participants;

  friend bool operator==(const LineageEvent&, const LineageEvent&) = default;
};

inline std::string_view to_string(LineageEvent::Kind k) {
  switch (k) {
    case LineageEvent::Kind::birth: return "birth";
    case LineageEvent::Kind::death: return "death";
    case LineageEvent::Kind::division: return "division";
    case LineageEvent::Kind::merge: return "merge";
    case LineageEvent::Kind::tail_gain: return "tail_gain";
    case LineageEvent::Kind::tail_loss: return "tail_loss";
  }
  return "?";
}

struct TrackerConfig {
  // Largest centroid displacement accepted between consecutive frames.
  double max_step = 0.05;
  // A new spot counts as "near" a previous one for division or merge when
  // within max(max_step, near_factor * effective radius of the previous spot).
  double near_factor = 3.0;
};

/// Serial fold over analysis frames that maintains tracks and emits lineage
/// events.
class Tracker {
 public:
  Tracker(GridSpec grid, TrackerConfig cfg) : grid_(grid), cfg_(cfg) {}

  const std::vector<Track>& tracks() const { return tracks_; }
  const std::vector<LineageEvent>& events() const { return events_; }
  std::size_t alive_count() const { return alive_.size(); }
  const std::vector<int>& alive() const { return alive_; }
  const TrackerConfig& config() const { return cfg_; }

  /// Adds one frame; returns the events it produced.
  std::vector<LineageEvent> update(double t, const std::vector<Spot>& spots) {
    std::vector<LineageEvent> out;
    const std::size_t n_prev = alive_.size();
    const std::size_t n_cur = spots.size();

    struct Pair {
      double d;
      int track;
      std::size_t prev;
      std::size_t cur;
    };
    std::vector<Pair> pairs;
    for (std::size_t p = 0; p < n_prev; ++p) {
      const Track& tr = tracks_[alive_[p]];
      for (std::size_t c = 0; c < n_cur; ++c) {
        const double d = periodic_distance(grid_, tr.last().spot.centroid, spots[c].centroid);
        if (d <= cfg_.max_step) pairs.push_back({d, tr.id, p, c});
      }
    }
    std::sort(pairs.begin(), pairs.end(), [](const Pair& x, const Pair& y) {
      return std::tie(x.d, x.track, x.cur) < std::tie(y.d, y.track, y.cur);
    });
    std::vector<int> match_of_prev(n_prev, -1);
    std::vector<int> match_of_cur(n_cur, -1);
    for (const auto& pr : pairs) {
      if (match_of_prev[pr.prev] >= 0 || match_of_cur[pr.cur] >= 0) continue;
      match_of_prev[pr.prev] = static_cast<int>(pr.cur);
      match_of_cur[pr.cur] = static_cast<int>(pr.prev);
    }

    auto near = [&](std::size_t p, std::size_t c) {
      const Spot& old = tracks_[alive_[p]].last().spot;
      const double reach = std::max(cfg_.max_step, cfg_.near_factor * effective_radius(grid_, old));
      return periodic_distance(grid_, old.centroid, spots[c].centroid) <= reach;
    };
    auto prev_near_cur = [&](std::size_t c) {
      std::vector<std::size_t> v;
      for (std::size_t p = 0; p < n_prev; ++p)
        if (near(p, c)) v.push_back(p);
      return v;
    };
    auto cur_near_prev = [&](std::size_t p) {
      std::vector<std::size_t> v;
      for (std::size_t c = 0; c < n_cur; ++c)
        if (near(p, c)) v.push_back(c);
      return v;
    };

    // Divisions: an unmatched new spot close to exactly one previous spot
    // whose matched successor shrank.
    std::vector<int> division_partner(n_prev, -1);
    for (std::size_t c = 0; c < n_cur; ++c) {
      if (match_of_cur[c] >= 0) continue;
      const auto near = prev_near_cur(c);
      if (near.size() != 1) continue;
      const std::size_t p = near.front();
      if (match_of_prev[p] < 0 || division_partner[p] >= 0) continue;
      const Track& tr = tracks_[alive_[p]];
      if (spots[match_of_prev[p]].area < tr.last().spot.area)
        division_partner[p] = static_cast<int>(c);
    }
    // Merges: an unmatched previous spot close to a new spot that grew and
    // already continues another track.
    std::vector<int> merged_into(n_prev, -1);
    std::vector<int> merge_partner_of_cur(n_cur, -1);
    for (std::size_t p = 0; p < n_prev; ++p) {
      if (match_of_prev[p] >= 0) continue;
      for (std::size_t c : cur_near_prev(p)) {
        const int q = match_of_cur[c];
        if (q < 0 || merge_partner_of_cur[c] >= 0 || division_partner[q] >= 0) continue;
        if (spots[c].area > tracks_[alive_[q]].last().spot.area) {
          merged_into[p] = static_cast<int>(c);
          merge_partner_of_cur[c] = static_cast<int>(p);
          break;
        }
      }
    }

    std::vector<int> next_alive;
    std::vector<bool> cur_claimed(n_cur, false);
    for (std::size_t p = 0; p < n_prev; ++p) {
      const int tid = alive_[p];
      if (match_of_prev[p] < 0) {
        if (merged_into[p] >= 0) continue;  // handled with its partner below
        close(tid, t, Track::End::died);
        out.push_back({t, LineageEvent::Kind::death, {tid}});
        continue;
      }
      const std::size_t c = static_cast<std::size_t>(match_of_prev[p]);
      if (division_partner[p] >= 0) {
        const std::size_t c2 = static_cast<std::size_t>(division_partner[p]);
        close(tid, t, Track::End::divided);
        const int k1 = open(t, spots[c], tid, tid);
        const int k2 = open(t, spots[c2], tid, tid);
        cur_claimed[c] = cur_claimed[c2] = true;
        next_alive.push_back(k1);
        next_alive.push_back(k2);
        out.push_back({t, LineageEvent::Kind::division, {tid, k1, k2}});
        continue;
      }
      if (merge_partner_of_cur[c] >= 0) {
        const int other = alive_[static_cast<std::size_t>(merge_partner_of_cur[c])];
        close(tid, t, Track::End::merged);
        close(other, t, Track::End::merged);
        const int k = open(t, spots[c], std::nullopt, tid);
        cur_claimed[c] = true;
        next_alive.push_back(k);
        const int lo = std::min(tid, other);
        const int hi = std::max(tid, other);
        out.push_back({t, LineageEvent::Kind::merge, {lo, hi, k}});
        continue;
      }
      Track& tr = tracks_[tid];
      const bool was_tailed = tr.last().spot.tailed;
      const Vec2 d = periodic_displacement(grid_, tr.last().spot.centroid, spots[c].centroid);
      tr.points.push_back({t, spots[c], {tr.last().unwrapped.x + d.x, tr.last().unwrapped.y + d.y}});
      cur_claimed[c] = true;
      next_alive.push_back(tid);
      if (spots[c].tailed != was_tailed)
        out.push_back({t, spots[c].tailed ? LineageEvent::Kind::tail_gain
                                          : LineageEvent::Kind::tail_loss,
                       {tid}});
    }
    for (std::size_t c = 0; c < n_cur; ++c) {
      if (cur_claimed[c]) continue;
      const int k = open(t, spots[c], std::nullopt, std::nullopt);
      next_alive.push_back(k);
      out.push_back({t, LineageEvent::Kind::birth, {k}});
    }
    std::sort(next_alive.begin(), next_alive.end());
    alive_ = std::move(next_alive);
    events_.insert(events_.end(), out.begin(), out.end());
    return out;
  }

 private:
  void close(int tid, double t, Track::End why) {
    tracks_[tid].death = t;
    tracks_[tid].end = why;
  }

  // New track; `origin` continues the unwrapped path of an ancestor.
  int open(double t, const Spot& s, std::optional<int> parent, std::optional<int> origin) {
    Track tr;
    tr.id = static_cast<int>(tracks_.size());
    tr.birth = t;
    tr.parent = parent;
    Vec2 start = s.centroid;
    if (origin) {
      const TrackPoint& from = tracks_[*origin].last();
      const Vec2 d = periodic_displacement(grid_, from.spot.centroid, s.centroid);
      start = {from.unwrapped.x + d.x, from.unwrapped.y + d.y};
    }
    tr.points.push_back({t, s, start});
    tracks_.push_back(std::move(tr));
    return tracks_.back().id;
  }

  GridSpec grid_;
  TrackerConfig cfg_;
  std::vector<Track> tracks_;
  std::vector<int> alive_;
  std::vector<LineageEvent> events_;
};

/// Mean speed over all sliding windows of the given length. Frames are
/// assumed evenly spaced.
inline double velocity(const Track& track, double window) {
  if (track.points.size() < 2 || !(window > 0.0))
    throw AnalysisError("velocity: track too short");
  const double eps = 1e-9 * std::max(1.0, window);
  if (track.span() + eps < window) throw AnalysisError("velocity: track too short");
  double sum = 0.0;
  int n = 0;
  std::size_t j = 0;
  for (std::size_t i = 0; i < track.points.size(); ++i) {
    const double target = track.points[i].t + window;
    while (j < track.points.size() && track.points[j].t < target - eps) ++j;
    if (j >= track.points.size()) break;
    if (std::fabs(track.points[j].t - target) > eps) continue;
    const auto& p0 = track.points[i].unwrapped;
    const auto& p1 = track.points[j].unwrapped;
    sum += std::hypot(p1.x - p0.x, p1.y - p0.y) / window;
    ++n;
  }
  if (n == 0) throw AnalysisError("velocity: no complete window on track");
  return sum / n;
}

/// Net unwrapped displacement from first to any later frame, maximised.
inline double max_displacement(const Track& track) {
  double best = 0.0;
  const Vec2 o = track.points.front().unwrapped;
  for (const auto& p : track.points)
    best = std::max(best, std::hypot(p.unwrapped.x - o.x, p.unwrapped.y - o.y));
  return best;
}

struct RadialProfile {
  std::vector<double> radius;  // bin centres
  std::vector<std::pair<Species, std::vector<double>>> values;

  const std::vector<double>& of(Species s) const {
    for (const auto& [sp, v] : values)
      if (sp == s) return v;
    throw AnalysisError("radial_profile: species not present");
  }
};

/// Azimuthal average of each species around a spot centroid out to three
/// effective radii. Empty bins are NaN.
inline RadialProfile radial_profile(const SimState& s, const Spot& spot, int n_bins) {
  if (n_bins < 1) throw AnalysisError("radial_profile: n_bins must be >= 1");
  const GridSpec& g = s.grid;
  const double r_max = 3.0 * effective_radius(g, spot);
  const double width = r_max / n_bins;
  RadialProfile out;
  for (int k = 0; k < n_bins; ++k) out.radius.push_back((k + 0.5) * width);
  std::vector<int> counts(static_cast<std::size_t>(n_bins), 0);
  const auto species = s.species();
  std::vector<std::vector<double>> sums(species.size(), std::vector<double>(n_bins, 0.0));
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const double r = periodic_distance(g, spot.centroid, s.a.cell_center(i, j));
      if (!(r < r_max)) continue;
      const int bin = std::min(n_bins - 1, static_cast<int>(r / width));
      ++counts[bin];
      for (std::size_t q = 0; q < species.size(); ++q)
        sums[q][bin] += s.field(species[q])(i, j);
    }
  for (std::size_t q = 0; q < species.size(); ++q) {
    for (int k = 0; k < n_bins; ++k)
      sums[q][k] = counts[k] ? sums[q][k] / counts[k] : std::numeric_limits<double>::quiet_NaN();
    out.values.emplace_back(species[q], std::move(sums[q]));
  }
  return out;
}

struct HeredityStats {
  std::optional<double> p_tail_inherit;  // empty when no tailed parent divided
  int divisions = 0;
  int tailed_parent_divisions = 0;
  int children_of_tailed = 0;
  int tailed_children_of_tailed = 0;
};

inline HeredityStats heredity_stats(const std::vector<LineageEvent>& events,
                                    const std::vector<Track>& tracks) {
  HeredityStats h;
  auto find = [&](int id) -> const Track& {
    if (id >= 0 && static_cast<std::size_t>(id) < tracks.size() && tracks[id].id == id)
      return tracks[id];
    for (const auto& t : tracks)
      if (t.id == id) return t;
    throw AnalysisError("heredity_stats: unknown track id " + std::to_string(id));
  };
  for (const auto& e : events) {
    if (e.kind != LineageEvent::Kind::division) continue;
    ++h.divisions;
    if (!find(e.participants[0]).last().spot.tailed) continue;
    ++h.tailed_parent_divisions;
    for (std::size_t k = 1; k < e.participants.size(); ++k) {
      ++h.children_of_tailed;
      h.tailed_children_of_tailed += find(e.participants[k]).points.front().spot.tailed;
    }
  }
  if (h.children_of_tailed > 0)
    h.p_tail_inherit = static_cast<double>(h.tailed_children_of_tailed) / h.children_of_tailed;
  return h;
}

struct Zone {
  std::string name;
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;  // [x0, x1) x [y0, y1)

  bool contains(Vec2 p) const { return p.x >= x0 && p.x < x1 && p.y >= y0 && p.y < y1; }
};

struct AnalysisFrame {
  double t = 0.0;
  std::vector<Spot> spots;
  std::vector<double> masses;  // per species, state order
};

struct PopulationRow {
  double t = 0.0;
  int n_spots = 0;
  int n_tailed = 0;
  std::vector<int> zone_spots;
  std::vector<int> zone_tailed;
};

inline std::vector<PopulationRow> population_series(const std::vector<AnalysisFrame>& frames,
                                                    const std::vector<Zone>& zones = {}) {
  std::vector<PopulationRow> out;
  for (const auto& f : frames) {
    PopulationRow row;
    row.t = f.t;
    row.zone_spots.assign(zones.size(), 0);
    row.zone_tailed.assign(zones.size(), 0);
    for (const auto& s : f.spots) {
      ++row.n_spots;
      row.n_tailed += s.tailed;
      for (std::size_t z = 0; z < zones.size(); ++z)
        if (zones[z].contains(s.centroid)) {
          ++row.zone_spots[z];
          row.zone_tailed[z] += s.tailed;
        }
    }
    out.push_back(std::move(row));
  }
  return out;
}

/// Number of strict local maxima of a series (plateaus count once).
inline int count_local_maxima(const std::vector<double>& xs) {
  int n = 0;
  std::size_t i = 1;
  while (i + 1 < xs.size()) {
    if (xs[i] > xs[i - 1]) {
      std::size_t j = i;
      while (j + 1 < xs.size() && xs[j + 1] == xs[i]) ++j;
      if (j + 1 < xs.size() && xs[j + 1] < xs[i]) ++n;
      i = j + 1;
    } else {
      ++i;
    }
  }
  return n;
}

}  // namespace rdspot
