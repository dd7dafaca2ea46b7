#include <gtest/gtest.h>

#include <map>
#include <numeric>
#include <random>
#include <set>

#include "rdspot/analysis.hpp"

using namespace rdspot;

namespace {

void paint_disc(Field& f, Vec2 c, double r, double v) {
  const GridSpec& g = f.spec();
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      if (periodic_distance(g, c, f.cell_center(i, j)) <= r) f(i, j) = v;
}

// Union-find over the thresholded set, merging right and down neighbours
// with wraparound.
std::vector<int> union_find_labels(const Field& b, double thr) {
  const GridSpec& g = b.spec();
  std::vector<int> parent(g.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  auto unite = [&](int x, int y) { parent[find(x)] = find(y); };
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const int n = j * g.nx + i;
      if (!(b[n] >= thr)) continue;
      const int r = j * g.nx + (i + 1) % g.nx;
      const int d = ((j + 1) % g.ny) * g.nx + i;
      if (b[r] >= thr) unite(n, r);
      if (g.ny > 1 && b[d] >= thr) unite(n, d);
    }
  std::vector<int> out(g.size(), -1);
  for (std::size_t n = 0; n < g.size(); ++n)
    if (b[n] >= thr) out[n] = find(static_cast<int>(n));
  return out;
}

bool same_partition(const std::vector<int>& x, const std::vector<int>& y) {
  if (x.size() != y.size()) return false;
  std::map<int, int> fwd, back;
  for (std::size_t n = 0; n < x.size(); ++n) {
    if ((x[n] < 0) != (y[n] < 0)) return false;
    if (x[n] < 0) continue;
    auto [it, fresh] = fwd.emplace(x[n], y[n]);
    if (!fresh && it->second != y[n]) return false;
    auto [jt, fresh2] = back.emplace(y[n], x[n]);
    if (!fresh2 && jt->second != x[n]) return false;
  }
  return true;
}

Spot spot_at(double x, double y, double area, bool tailed = false) {
  Spot s;
  s.centroid = {x, y};
  s.area = area;
  s.cells = 10;
  s.b_mass = area * 0.3;
  s.tailed = tailed;
  return s;
}

std::vector<LineageEvent::Kind> kinds(const std::vector<LineageEvent>& ev) {
  std::vector<LineageEvent::Kind> k;
  for (const auto& e : ev) k.push_back(e.kind);
  return k;
}

const GridSpec kG{128, 128, 2.0, 2.0};

}  // namespace

TEST(Components, MatchUnionFindOracleOnRandomFields) {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 40; ++trial) {
    GridSpec g{10 + trial % 13, trial % 5 == 0 ? 1 : 7 + trial % 11, 1.0, 1.0};
    Field b(g);
    for (auto& v : b.values()) v = u(gen);
    const double thr = 0.3 + 0.4 * u(gen);
    int count = 0;
    const auto got = label_components(b, thr, &count);
    const auto want = union_find_labels(b, thr);
    ASSERT_TRUE(same_partition(got, want)) << trial;
    std::set<int> roots(want.begin(), want.end());
    roots.erase(-1);
    EXPECT_EQ(count, static_cast<int>(roots.size()));
  }
}

TEST(Spots, SeamSpotIsOneSpotWithWrappedCentroid) {
  Field b(kG);
  paint_disc(b, {0.0, 0.0}, 0.1, 0.4);
  const auto spots = detect_spots(b, nullptr, SpotConfig{});
  ASSERT_EQ(spots.size(), 1u);
  const Spot& s = spots[0];
  EXPECT_LT(periodic_distance(kG, s.centroid, {0.0, 0.0}), 1e-9);
  EXPECT_GE(s.centroid.x, 0.0);
  EXPECT_LT(s.centroid.x, kG.lx);
  int cells = 0;
  for (double v : b.values()) cells += v > 0;
  EXPECT_EQ(s.cells, cells);
  EXPECT_DOUBLE_EQ(s.area, cells * kG.hx() * kG.hy());
  EXPECT_NEAR(s.b_mass, total_mass(b), 1e-14);
  EXPECT_EQ(s.peak_b, 0.4);
  EXPECT_NEAR(effective_radius(kG, s), 0.1, 0.01);
}

TEST(Spots, WeightedCentroidMatchesDirectAverage) {
  Field b(kG);
  std::mt19937_64 gen(6);
  std::uniform_real_distribution<double> u(0.2, 0.6);
  double w = 0, sx = 0, sy = 0;
  for (int j = 40; j < 50; ++j)
    for (int i = 70; i < 77; ++i) {
      b(i, j) = u(gen);
      const Vec2 c = b.cell_center(i, j);
      w += b(i, j);
      sx += b(i, j) * c.x;
      sy += b(i, j) * c.y;
    }
  const auto spots = detect_spots(b, nullptr, SpotConfig{});
  ASSERT_EQ(spots.size(), 1u);
  EXPECT_NEAR(spots[0].centroid.x, sx / w, 1e-12);
  EXPECT_NEAR(spots[0].centroid.y, sy / w, 1e-12);
}

TEST(Spots, TorusWrappingBandUsesCircularMean) {
  Field b(kG);
  for (int i = 0; i < kG.nx; ++i) b(i, 20) = b(i, 21) = 0.5;
  const auto spots = detect_spots(b, nullptr, SpotConfig{});
  ASSERT_EQ(spots.size(), 1u);
  EXPECT_NEAR(spots[0].centroid.y, 21 * kG.hy(), 1e-12);
}

TEST(Spots, SmallComponentsAreFiltered) {
  Field b(kG);
  b(5, 5) = b(6, 5) = b(5, 6) = 0.5;  // 3 cells
  paint_disc(b, {1.0, 1.0}, 0.05, 0.5);
  const auto spots = detect_spots(b, nullptr, SpotConfig{});
  ASSERT_EQ(spots.size(), 1u);
  EXPECT_NEAR(spots[0].centroid.x, 1.0, 0.01);
  SpotConfig loose;
  loose.min_area_cells = 1;
  EXPECT_EQ(detect_spots(b, nullptr, loose).size(), 2u);
}

TEST(Spots, DiagonalNeighboursAreSeparateSpots) {
  Field b(GridSpec{8, 8, 1.0, 1.0});
  b(1, 1) = b(2, 2) = 0.5;
  int n = 0;
  label_components(b, 0.1, &n);
  EXPECT_EQ(n, 2);
}

TEST(Spots, TailClassification) {
  Field b(kG), c(kG);
  paint_disc(b, {0.5, 0.5}, 0.06, 0.4);
  paint_disc(b, {1.5, 1.5}, 0.06, 0.4);
  paint_disc(c, {0.54, 0.5}, 0.03, 0.3);  // tail trailing the first spot
  const auto spots = detect_spots(b, &c, SpotConfig{});
  ASSERT_EQ(spots.size(), 2u);
  const Spot& s0 = spots[0].centroid.x < 1.0 ? spots[0] : spots[1];
  const Spot& s1 = spots[0].centroid.x < 1.0 ? spots[1] : spots[0];
  EXPECT_TRUE(s0.tailed);
  EXPECT_FALSE(s1.tailed);
  EXPECT_NEAR(s0.tail_mass, total_mass(c), 1e-14);  // whole tail within 0.08
  EXPECT_EQ(s1.tail_mass, 0.0);
  SpotConfig absolute;
  absolute.tail_mass_threshold = 1.0;
  for (const auto& s : detect_spots(b, &c, absolute)) EXPECT_FALSE(s.tailed);
}

TEST(Tracker, ContinuationAcrossSeamAccumulatesUnwrappedPath) {
  Tracker tr(kG, TrackerConfig{});
  double x = 1.9;
  for (int f = 0; f < 10; ++f) {
    const auto ev = tr.update(f * 100.0, {spot_at(wrap_coord(x, 2.0), 1.0, 0.01)});
    if (f == 0) EXPECT_EQ(kinds(ev), std::vector{LineageEvent::Kind::birth});
    else EXPECT_TRUE(ev.empty());
    x += 0.03;
  }
  ASSERT_EQ(tr.tracks().size(), 1u);
  const Track& t = tr.tracks()[0];
  EXPECT_EQ(t.points.size(), 10u);
  EXPECT_NEAR(t.last().unwrapped.x - t.points.front().unwrapped.x, 0.27, 1e-12);
  EXPECT_NEAR(velocity(t, 300.0), 0.03 / 100.0, 1e-15);
  EXPECT_NEAR(max_displacement(t), 0.27, 1e-12);
}

TEST(Tracker, DeathAndBirth) {
  Tracker tr(kG, TrackerConfig{});
  tr.update(0, {spot_at(0.5, 0.5, 0.01)});
  auto ev = tr.update(1, {spot_at(1.5, 1.5, 0.01)});
  EXPECT_EQ(kinds(ev), (std::vector{LineageEvent::Kind::death, LineageEvent::Kind::birth}));
  EXPECT_EQ(tr.tracks()[0].end, Track::End::died);
  EXPECT_EQ(*tr.tracks()[0].death, 1.0);
  EXPECT_EQ(tr.alive(), std::vector<int>{1});
}

TEST(Tracker, Division) {
  Tracker tr(kG, TrackerConfig{});
  tr.update(0, {spot_at(1.0, 1.0, 0.012)});
  auto ev = tr.update(100, {spot_at(0.98, 1.0, 0.006), spot_at(1.07, 1.0, 0.006)});
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].kind, LineageEvent::Kind::division);
  EXPECT_EQ(ev[0].participants, (std::vector<int>{0, 1, 2}));
  EXPECT_EQ(tr.tracks()[0].end, Track::End::divided);
  EXPECT_EQ(*tr.tracks()[1].parent, 0);
  EXPECT_EQ(*tr.tracks()[2].parent, 0);
  // Children inherit the parent's unwrapped frame.
  EXPECT_NEAR(tr.tracks()[2].points[0].unwrapped.x, 1.07, 1e-12);
}

TEST(Tracker, UnrelatedNewSpotIsABirthNotDivision) {
  Tracker tr(kG, TrackerConfig{});
  tr.update(0, {spot_at(1.0, 1.0, 0.012)});
  auto ev = tr.update(100, {spot_at(0.98, 1.0, 0.006), spot_at(1.6, 1.0, 0.006)});
  EXPECT_EQ(kinds(ev), std::vector{LineageEvent::Kind::birth});
}

TEST(Tracker, Merge) {
  Tracker tr(kG, TrackerConfig{});
  tr.update(0, {spot_at(1.0, 1.0, 0.006), spot_at(1.08, 1.0, 0.006)});
  auto ev = tr.update(100, {spot_at(1.03, 1.0, 0.011)});
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].kind, LineageEvent::Kind::merge);
  EXPECT_EQ(ev[0].participants, (std::vector<int>{0, 1, 2}));
  EXPECT_EQ(tr.tracks()[0].end, Track::End::merged);
  EXPECT_EQ(tr.tracks()[1].end, Track::End::merged);
  EXPECT_FALSE(tr.tracks()[2].parent.has_value());
}

TEST(Tracker, TailGainAndLoss) {
  Tracker tr(kG, TrackerConfig{});
  tr.update(0, {spot_at(1.0, 1.0, 0.01, false)});
  auto e1 = tr.update(1, {spot_at(1.01, 1.0, 0.01, true)});
  auto e2 = tr.update(2, {spot_at(1.02, 1.0, 0.01, true)});
  auto e3 = tr.update(3, {spot_at(1.03, 1.0, 0.01, false)});
  EXPECT_EQ(kinds(e1), std::vector{LineageEvent::Kind::tail_gain});
  EXPECT_TRUE(e2.empty());
  EXPECT_EQ(kinds(e3), std::vector{LineageEvent::Kind::tail_loss});
  EXPECT_DOUBLE_EQ(tr.tracks()[0].tailed_fraction(), 0.5);
}

TEST(Tracker, MatchingPrefersNearestPairs) {
  Tracker tr(kG, TrackerConfig{});
  tr.update(0, {spot_at(1.0, 1.0, 0.005), spot_at(1.06, 1.0, 0.005)});
  tr.update(1, {spot_at(1.065, 1.0, 0.005), spot_at(1.01, 1.0, 0.005)});
  EXPECT_NEAR(tr.tracks()[0].last().spot.centroid.x, 1.01, 1e-15);
  EXPECT_NEAR(tr.tracks()[1].last().spot.centroid.x, 1.065, 1e-15);
  EXPECT_EQ(tr.events().size(), 2u);  // just the two births
}

TEST(Velocity, WindowsAndErrors) {
  Track t;
  for (int k = 0; k <= 10; ++k) {
    TrackPoint p;
    p.t = k * 10.0;
    // Back-and-forth path: the 20-window sees zero net motion.
    p.unwrapped = {k % 2 ? 0.1 : 0.0, 0.0};
    t.points.push_back(p);
  }
  EXPECT_NEAR(velocity(t, 10.0), 0.01, 1e-15);
  EXPECT_NEAR(velocity(t, 20.0), 0.0, 1e-15);
  EXPECT_THROW(velocity(t, 200.0), AnalysisError);
  EXPECT_THROW(velocity(t, 15.0), AnalysisError);
  EXPECT_NEAR(max_displacement(t), 0.1, 1e-15);
}

TEST(Heredity, CountsTailedChildren) {
  Tracker tr(kG, TrackerConfig{});
  tr.update(0, {spot_at(0.5, 0.5, 0.012, true), spot_at(1.5, 1.5, 0.012, false)});
  tr.update(1, {spot_at(0.49, 0.5, 0.006, true), spot_at(0.57, 0.5, 0.006, false),
                spot_at(1.49, 1.5, 0.006, false), spot_at(1.57, 1.5, 0.006, false)});
  const auto h = heredity_stats(tr.events(), tr.tracks());
  EXPECT_EQ(h.divisions, 2);
  EXPECT_EQ(h.tailed_parent_divisions, 1);
  EXPECT_EQ(h.children_of_tailed, 2);
  EXPECT_EQ(h.tailed_children_of_tailed, 1);
  ASSERT_TRUE(h.p_tail_inherit.has_value());
  EXPECT_DOUBLE_EQ(*h.p_tail_inherit, 0.5);
  EXPECT_FALSE(heredity_stats({}, {}).p_tail_inherit.has_value());
}

TEST(Population, ZoneCounts) {
  AnalysisFrame f;
  f.t = 5;
  f.spots = {spot_at(0.5, 0.5, 0.01, true), spot_at(1.5, 0.5, 0.01, true), spot_at(1.2, 1.9, 0.01, false)};
  const std::vector<Zone> zones{{"left", 0, 0, 1, 2}, {"right", 1, 0, 2, 2}};
  const auto rows = population_series({f}, zones);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].n_spots, 3);
  EXPECT_EQ(rows[0].n_tailed, 2);
  EXPECT_EQ(rows[0].zone_spots, (std::vector<int>{1, 2}));
  EXPECT_EQ(rows[0].zone_tailed, (std::vector<int>{1, 1}));
}

TEST(LocalMaxima, Cases) {
  EXPECT_EQ(count_local_maxima({}), 0);
  EXPECT_EQ(count_local_maxima({1, 2, 3}), 0);
  EXPECT_EQ(count_local_maxima({1, 3, 1, 4, 2}), 2);
  EXPECT_EQ(count_local_maxima({1, 3, 3, 3, 1}), 1);
  EXPECT_EQ(count_local_maxima({1, 3, 3, 4, 1}), 1);
  EXPECT_EQ(count_local_maxima({3, 1, 2, 2}), 0);
}

TEST(RadialProfile, UniformFieldsGiveFlatProfiles) {
  InitSpec is;
  is.kind = InitSpec::Kind::uniform_noise;
  is.noise_amplitude = 0;
  is.patches = {SeedPatch{{0, 0}, 0.1, 0.7, 0.2, 0}};
  auto s = init(kG, is, GrayScottParams{}, 1.0);
  const auto prof = radial_profile(s, spot_at(0.01, 1.99, 0.01), 5);
  ASSERT_EQ(prof.radius.size(), 5u);
  for (double v : prof.of(Species::A)) EXPECT_NEAR(v, 0.7, 1e-12);
  for (double v : prof.of(Species::B)) EXPECT_NEAR(v, 0.2, 1e-12);
  EXPECT_THROW(prof.of(Species::C), AnalysisError);
}
