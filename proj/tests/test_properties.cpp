// Randomised checks of invariants that should hold for any input.
#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>

#include "rdspot/analysis.hpp"
#include "rdspot/config.hpp"
#include "rdspot/experiments.hpp"
#include "rdspot/integrator.hpp"
#include "rdspot/kinetics.hpp"

using namespace rdspot;

namespace {

Field random_field(GridSpec g, std::mt19937_64& gen, double lo = -1, double hi = 1) {
  std::uniform_real_distribution<double> u(lo, hi);
  Field f(g);
  for (auto& v : f.values()) v = u(gen);
  return f;
}

GridSpec random_grid(std::mt19937_64& gen) {
  std::uniform_int_distribution<int> n(3, 40);
  std::uniform_real_distribution<double> l(0.1, 4.0);
  const int ny = gen() % 5 == 0 ? 1 : n(gen);
  return {n(gen), ny, l(gen), l(gen)};
}

Field shifted(const Field& f, int dx, int dy) {
  const GridSpec& g = f.spec();
  Field out(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) out((i + dx) % g.nx, (j + dy) % g.ny) = f(i, j);
  return out;
}

// A GS state with several spots, computed once.
const SimState& spotty_state() {
  static const SimState s = [] {
    RunConfig c = preset("custom");
    c.grid = {96, 96, 1.25, 1.25};
    c.params = GrayScottParams{2e-5, 1e-5, 0.0133, 0.064};
    c.init.patches = {SeedPatch{{0.4, 0.5}, 0.1, 0.5, 0.25, 0}, SeedPatch{{0.9, 0.8}, 0.08, 0.5, 0.25, 0}};
    SimState st = init(c.grid, c.init, c.params, c.dt);
    run(st, 1000.0);
    return st;
  }();
  return s;
}

}  // namespace

TEST(Properties, LaplacianConservesFlux) {
  std::mt19937_64 gen(1);
  for (int trial = 0; trial < 100; ++trial) {
    const GridSpec g = random_grid(gen);
    const Field f = random_field(g, gen);
    const Field lap = laplacian(f);
    double sum = 0, abs_f = 0;
    for (std::size_t n = 0; n < g.size(); ++n) {
      sum += lap[n];
      abs_f += std::fabs(f[n]);
    }
    const double scale = 1.0 / (g.hx() * g.hx()) + (g.one_dimensional() ? 0.0 : 1.0 / (g.hy() * g.hy()));
    ASSERT_LE(std::fabs(sum), 1e-10 * abs_f * scale) << trial;
  }
}

TEST(Properties, LaplacianIsLinear) {
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> c(-3, 3);
  for (int trial = 0; trial < 100; ++trial) {
    const GridSpec g = random_grid(gen);
    const Field f = random_field(g, gen), h = random_field(g, gen);
    const double al = c(gen), be = c(gen);
    Field mix(g);
    for (std::size_t n = 0; n < g.size(); ++n) mix[n] = al * f[n] + be * h[n];
    const Field lf = laplacian(f), lh = laplacian(h), lm = laplacian(mix);
    const double scale = 1.0 / (g.hx() * g.hx()) + 1.0 / (g.hy() * g.hy());
    for (std::size_t n = 0; n < g.size(); ++n)
      ASSERT_NEAR(lm[n], al * lf[n] + be * lh[n], 1e-12 * scale * 8) << trial;
  }
}

TEST(Properties, LaplacianCommutesWithShifts) {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 100; ++trial) {
    const GridSpec g = random_grid(gen);
    const Field f = random_field(g, gen);
    const int dx = static_cast<int>(gen() % g.nx), dy = static_cast<int>(gen() % g.ny);
    const Field a = laplacian(shifted(f, dx, dy)), b = shifted(laplacian(f), dx, dy);
    for (std::size_t n = 0; n < g.size(); ++n) ASSERT_EQ(a[n], b[n]) << trial;
  }
}

TEST(Properties, ReactionsArePointwise) {
  std::mt19937_64 gen(4);
  const GridSpec g{17, 9, 1, 1};
  const Field a = random_field(g, gen, 0, 1), b = random_field(g, gen, 0, 1), c = random_field(g, gen, 0, 1);
  std::vector<std::size_t> perm(g.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), gen);
  auto permute = [&](const Field& f) {
    Field o(g);
    for (std::size_t n = 0; n < g.size(); ++n) o[perm[n]] = f[n];
    return o;
  };
  const Field pa = permute(a), pb = permute(b), pc = permute(c);
  {
    auto [x, y] = react_gs(a, b, GrayScottParams{});
    auto [px, py] = react_gs(pa, pb, GrayScottParams{});
    for (std::size_t n = 0; n < g.size(); ++n) {
      ASSERT_EQ(px[perm[n]], x[n]);
      ASSERT_EQ(py[perm[n]], y[n]);
    }
  }
  {
    auto [x, y, z] = react_tail(a, b, c, TailParams{});
    auto [px, py, pz] = react_tail(pa, pb, pc, TailParams{});
    for (std::size_t n = 0; n < g.size(); ++n) ASSERT_TRUE(px[perm[n]] == x[n] && py[perm[n]] == y[n] && pz[perm[n]] == z[n]);
  }
  {
    auto [x, y, z] = react_waste(a, b, c, WasteParams{});
    auto [px, py, pz] = react_waste(pa, pb, pc, WasteParams{});
    for (std::size_t n = 0; n < g.size(); ++n) ASSERT_TRUE(px[perm[n]] == x[n] && py[perm[n]] == y[n] && pz[perm[n]] == z[n]);
  }
}

TEST(Properties, WasteWithoutInhibitionEqualsGrayScottEverywhere) {
  std::mt19937_64 gen(5);
  const GridSpec g{23, 11, 1, 1};
  WasteParams wp;
  wp.w = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const Field a = random_field(g, gen), b = random_field(g, gen), c = random_field(g, gen, 0, 5);
    auto [ga, gb] = react_gs(a, b, wp.base);
    auto [wa, wb, wc] = react_waste(a, b, c, wp);
    for (std::size_t n = 0; n < g.size(); ++n) ASSERT_TRUE(ga[n] == wa[n] && gb[n] == wb[n]);
  }
}

TEST(Properties, TrivialStateAttractsSmallPerturbations) {
  std::mt19937_64 gen(6);
  std::uniform_real_distribution<double> u(-1e-6, 1e-6), up(0, 1e-6);
  const GridSpec g{32, 32, 2.0, 2.0};
  for (const ModelParams& p : {ModelParams{GrayScottParams{}}, ModelParams{TailParams{}}, ModelParams{WasteParams{}}}) {
    InitSpec is;
    const double dt = std::holds_alternative<WasteParams>(p) ? 0.5 : 1.0;
    SimState s = init(g, is, p, dt);
    for (auto& v : s.a.values()) v = 1.0 + u(gen);
    for (auto& v : s.b.values()) v = up(gen);
    if (s.c)
      for (auto& v : s.c->values()) v = up(gen);
    for (int k = 0; k < 1000; ++k) step(s);
    for (std::size_t n = 0; n < g.size(); ++n) {
      ASSERT_NEAR(s.a[n], 1.0, 1e-9);
      ASSERT_NEAR(s.b[n], 0.0, 1e-9);
    }
  }
}

TEST(Properties, ClampingIsRareInHealthyRuns) {
  RunConfig c = preset("custom");
  c.grid = {96, 96, 1.25, 1.25};
  c.params = GrayScottParams{2e-5, 1e-5, 0.0133, 0.064};
  c.init.patches = {SeedPatch{{0.4, 0.5}, 0.1, 0.5, 0.25, 0}};
  SimState s = init(c.grid, c.init, c.params, c.dt);
  run(s, 2000.0);
  EXPECT_LT(static_cast<double>(s.clamped_total) / (2000.0 * static_cast<double>(c.grid.size())), 1e-4);
}

TEST(Properties, SpotDetectionCommutesWithShifts) {
  const SimState& s = spotty_state();
  const GridSpec& g = s.grid;
  const SpotConfig sc;
  const auto base = detect_spots(s.b, nullptr, sc);
  ASSERT_GE(base.size(), 2u);
  std::mt19937_64 gen(7);
  for (int trial = 0; trial < 10; ++trial) {
    const int dx = static_cast<int>(gen() % g.nx), dy = static_cast<int>(gen() % g.ny);
    const auto moved = detect_spots(shifted(s.b, dx, dy), nullptr, sc);
    ASSERT_EQ(moved.size(), base.size());
    for (const Spot& sp : base) {
      const Vec2 expect{wrap_coord(sp.centroid.x + dx * g.hx(), g.lx), wrap_coord(sp.centroid.y + dy * g.hy(), g.ly)};
      const auto it = std::find_if(moved.begin(), moved.end(),
                                   [&](const Spot& m) { return periodic_distance(g, m.centroid, expect) < 1e-9; });
      ASSERT_NE(it, moved.end()) << trial;
      EXPECT_EQ(it->cells, sp.cells);
      EXPECT_NEAR(it->b_mass, sp.b_mass, 1e-12);
    }
  }
}

TEST(Properties, TrackBookkeepingBalances) {
  // Random spot populations with drift, splits, fusions, births and deaths.
  std::mt19937_64 gen(8);
  const GridSpec g{64, 64, 1.0, 1.0};
  std::uniform_real_distribution<double> pos(0, 1), jig(-0.02, 0.02);
  for (int trial = 0; trial < 50; ++trial) {
    Tracker tr(g, TrackerConfig{});
    std::vector<Vec2> pts;
    for (int n = 0; n < 6; ++n) pts.push_back({pos(gen), pos(gen)});
    for (int frame = 0; frame < 40; ++frame) {
      std::vector<Spot> spots;
      for (const auto& p : pts) {
        Spot s;
        s.centroid = p;
        s.area = 0.002;
        s.cells = 8;
        spots.push_back(s);
      }
      const std::size_t before = tr.alive_count();
      const auto ev = tr.update(frame * 10.0, spots);
      long delta = 0;
      for (const auto& e : ev) {
        switch (e.kind) {
          case LineageEvent::Kind::birth: ++delta; break;
          case LineageEvent::Kind::division: ++delta; break;
          case LineageEvent::Kind::death: --delta; break;
          case LineageEvent::Kind::merge: --delta; break;
          default: break;
        }
        if (e.kind == LineageEvent::Kind::division) ASSERT_EQ(e.participants.size(), 3u);
        if (e.kind == LineageEvent::Kind::merge) ASSERT_EQ(e.participants.size(), 3u);
      }
      ASSERT_EQ(static_cast<long>(tr.alive_count()) - static_cast<long>(before), delta) << trial << ":" << frame;
      ASSERT_EQ(tr.alive_count(), spots.size());
      // Evolve the population.
      std::vector<Vec2> next;
      for (const auto& p : pts) {
        const auto r = gen() % 20;
        if (r == 0) continue;  // dies
        const Vec2 q{wrap_coord(p.x + jig(gen), 1.0), wrap_coord(p.y + jig(gen), 1.0)};
        next.push_back(q);
        if (r == 1) next.push_back({wrap_coord(q.x + 0.03, 1.0), q.y});  // splits
      }
      if (gen() % 10 == 0) next.push_back({pos(gen), pos(gen)});
      pts = next;
    }
    for (const Track& t : tr.tracks()) {
      for (std::size_t k = 1; k < t.points.size(); ++k)
        ASSERT_LE(periodic_distance(g, t.points[k - 1].spot.centroid, t.points[k].spot.centroid),
                  tr.config().max_step + 1e-12);
      if (t.span() >= 10.0) ASSERT_LE(velocity(t, 10.0), tr.config().max_step / 10.0 + 1e-12);
    }
    const HeredityStats h = heredity_stats(tr.events(), tr.tracks());
    if (h.p_tail_inherit) ASSERT_TRUE(*h.p_tail_inherit >= 0 && *h.p_tail_inherit <= 1);
  }
}

TEST(Properties, TrackBookkeepingBalancesOnSimulation) {
  RunConfig c = preset("custom");
  c.grid = {96, 96, 1.25, 1.25};
  c.params = GrayScottParams{2e-5, 1e-5, 0.0167, 0.066};
  c.init.patches = {SeedPatch{{0.4, 0.5}, 0.1, 0.5, 0.25, 0}, SeedPatch{{0.9, 0.8}, 0.08, 0.5, 0.25, 0}};
  SimState s = init(c.grid, c.init, c.params, c.dt);
  Tracker tr(c.grid, TrackerConfig{});
  int events = 0;
  for (int f = 0; f <= 60; ++f) {
    if (f) run(s, f * 50.0);
    const std::size_t before = tr.alive_count();
    const auto ev = tr.update(s.t(), detect_spots(s.b, nullptr, SpotConfig{}));
    long delta = 0;
    for (const auto& e : ev) {
      delta += e.kind == LineageEvent::Kind::birth || e.kind == LineageEvent::Kind::division;
      delta -= e.kind == LineageEvent::Kind::death || e.kind == LineageEvent::Kind::merge;
    }
    events += static_cast<int>(ev.size());
    ASSERT_EQ(static_cast<long>(tr.alive_count()) - static_cast<long>(before), delta) << f;
  }
  EXPECT_GT(events, 2);
}

TEST(Properties, ZonesPartitionTheSpotCount) {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> pos(0, 2);
  const std::vector<Zone> zones{{"left", 0, 0, 1, 2}, {"right", 1, 0, 2, 2}};
  std::vector<AnalysisFrame> frames;
  for (int f = 0; f < 100; ++f) {
    AnalysisFrame fr;
    fr.t = f;
    const int n = static_cast<int>(gen() % 30);
    for (int k = 0; k < n; ++k) {
      Spot s;
      s.centroid = {f == 0 && k == 0 ? 1.0 : pos(gen), pos(gen)};  // one on the seam
      s.tailed = gen() % 2;
      fr.spots.push_back(s);
    }
    frames.push_back(fr);
  }
  for (const auto& row : population_series(frames, zones)) {
    EXPECT_EQ(row.zone_spots[0] + row.zone_spots[1], row.n_spots);
    EXPECT_EQ(row.zone_tailed[0] + row.zone_tailed[1], row.n_tailed);
  }
}

TEST(Properties, StepIsAPureFunctionOfState) {
  // Stepping a copy never depends on anything but the state itself.
  std::mt19937_64 gen(10);
  const GridSpec g{40, 24, 1.0, 0.6};
  for (const ModelParams& p : {ModelParams{GrayScottParams{}}, ModelParams{TailParams{}}, ModelParams{WasteParams{}}}) {
    InitSpec is;
    is.patches = {SeedPatch{{0.5, 0.3}, 0.1, 0.5, 0.25, 0}};
    SimState s = init(g, is, p, 0.5);
    s.a = random_field(g, gen, 0, 1);
    s.b = random_field(g, gen, 0, 0.5);
    if (s.c) *s.c = random_field(g, gen, 0, 0.5);
    SimState t = s;
    for (int k = 0; k < 50; ++k) {
      step(s);
      step(t);
    }
    ASSERT_TRUE(s.same_physics(t));
  }
}
