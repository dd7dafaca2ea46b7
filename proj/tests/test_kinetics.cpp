#include <gtest/gtest.h>

#include <random>

#include "rdspot/kinetics.hpp"

using namespace rdspot;

TEST(Kinetics, TrivialStateIsStationary) {
  const auto d = rates::gray_scott(1.0, 0.0, GrayScottParams{});
  EXPECT_EQ(d.a, 0.0);
  EXPECT_EQ(d.b, 0.0);
  const auto t = rates::tail(1.0, 0.0, 0.0, TailParams{});
  EXPECT_EQ(t.a, 0.0);
  EXPECT_EQ(t.b, 0.0);
  EXPECT_EQ(t.x, 0.0);
  const auto w = rates::waste(1.0, 0.0, 0.0, WasteParams{});
  EXPECT_EQ(w.a, 0.0);
  EXPECT_EQ(w.b, 0.0);
  EXPECT_EQ(w.x, 0.0);
}

TEST(Kinetics, GrayScottHandValues) {
  // a = 0.5, b = 0.25, r = 0.04, k = 0.06:
  // ab^2 = 0.03125; da = -0.03125 + 0.02 = -0.01125; db = 0.03125 - 0.015 = 0.01625
  const auto d = rates::gray_scott(0.5, 0.25, GrayScottParams{});
  EXPECT_NEAR(d.a, -0.01125, 1e-16);
  EXPECT_NEAR(d.b, 0.01625, 1e-16);
}

TEST(Kinetics, FixedPointsForDefaultParameters) {
  const auto fps = homogeneous_fixed_points(GrayScottParams{2e-5, 1e-5, 0.04, 0.06});
  ASSERT_EQ(fps.size(), 3u);
  EXPECT_EQ(fps[0].a, 1.0);
  EXPECT_EQ(fps[0].b, 0.0);
  EXPECT_NEAR(fps[1].a, 0.9, 1e-12);
  EXPECT_NEAR(fps[1].b, 0.06 / 0.9, 1e-12);
  EXPECT_NEAR(fps[2].a, 0.1, 1e-12);
  EXPECT_NEAR(fps[2].b, 0.6, 1e-12);
}

TEST(Kinetics, FixedPointsSatisfyRateEquationsBySubstitution) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> ur(0.001, 0.1), uk(0.01, 0.1);
  int nontrivial = 0;
  for (int n = 0; n < 2000; ++n) {
    GrayScottParams p{2e-5, 1e-5, ur(gen), uk(gen)};
    for (const auto& fp : homogeneous_fixed_points(p)) {
      const auto d = rates::gray_scott(fp.a, fp.b, p);
      ASSERT_NEAR(d.a, 0.0, 1e-12);
      ASSERT_NEAR(d.b, 0.0, 1e-12);
      nontrivial += fp.b > 0;
    }
  }
  EXPECT_GT(nontrivial, 0);
}

TEST(Kinetics, NoNontrivialPointBelowSaddleNode) {
  // r < 4k^2: only the trivial state.
  EXPECT_EQ(homogeneous_fixed_points(GrayScottParams{2e-5, 1e-5, 0.001, 0.06}).size(), 1u);
  // r = 4k^2 exactly: a double root.
  const double k = 0.0625;
  const auto fps = homogeneous_fixed_points(GrayScottParams{2e-5, 1e-5, 4 * k * k, k});
  ASSERT_EQ(fps.size(), 2u);
  EXPECT_NEAR(fps[1].a, 0.5, 1e-12);
}

TEST(Kinetics, FieldRatesMatchScalarOracle) {
  GridSpec g{16, 8, 1.0, 0.5};
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Field a(g), b(g), c(g);
  for (std::size_t n = 0; n < g.size(); ++n) {
    a[n] = u(gen);
    b[n] = u(gen);
    c[n] = u(gen);
  }
  GrayScottParams gp;
  auto [da, db] = react_gs(a, b, gp);
  TailParams tp;
  auto [ta, tb, tc] = react_tail(a, b, c, tp);
  WasteParams wp;
  auto [wa, wb, wc] = react_waste(a, b, c, wp);
  for (std::size_t n = 0; n < g.size(); ++n) {
    const double A = a[n], B = b[n], C = c[n];
    EXPECT_EQ(da[n], -A * B * B + gp.r * (1 - A));
    EXPECT_EQ(db[n], A * B * B - gp.k * B);
    EXPECT_NEAR(tb[n], A * B * B - tp.k1 * B - tp.k2 * B * C * C, 1e-15);
    EXPECT_NEAR(tc[n], tp.k2 * B * C * C - tp.k3 * C, 1e-15);
    EXPECT_NEAR(ta[n], -A * B * B + tp.r * (1 - A), 1e-15);
    const double inhib = std::exp(-wp.w * C) * A * B * B;
    EXPECT_NEAR(wa[n], -inhib + wp.base.r * (1 - A), 1e-15);
    EXPECT_NEAR(wb[n], inhib - wp.base.k * B, 1e-15);
    EXPECT_NEAR(wc[n], wp.base.k * B - wp.k_p * C, 1e-15);
  }
}

TEST(Kinetics, TailBudgetPredationCancels) {
  GridSpec g{32, 32, 2.0, 2.0};
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Field a(g), b(g), c(g);
  for (std::size_t n = 0; n < g.size(); ++n) {
    a[n] = u(gen);
    b[n] = u(gen);
    c[n] = u(gen);
  }
  TailParams tp;
  auto [da, db, dc] = react_tail(a, b, c, tp);
  for (std::size_t n = 0; n < g.size(); ++n)
    ASSERT_NEAR(db[n] + dc[n], a[n] * b[n] * b[n] - tp.k1 * b[n] - tp.k3 * c[n], 1e-14);
}

TEST(Kinetics, WasteWithZeroInhibitionReducesToGrayScott) {
  WasteParams wp;
  wp.w = 0.0;
  const auto w = rates::waste(0.4, 0.3, 5.0, wp);
  const auto g = rates::gray_scott(0.4, 0.3, wp.base);
  EXPECT_EQ(w.a, g.a);
  EXPECT_EQ(w.b, g.b);
}

TEST(Kinetics, ReactRejectsMismatchedGrids) {
  Field a(GridSpec{4, 4, 1, 1}), b(GridSpec{4, 2, 1, 1});
  EXPECT_THROW(react_gs(a, b, GrayScottParams{}), StructuralError);
}

TEST(Kinetics, ParamValidation) {
  EXPECT_THROW((GrayScottParams{0, 1e-5, 0.04, 0.06}).validate(), ConfigError);
  TailParams tp;
  tp.k2 = -1;
  EXPECT_THROW(tp.validate(), ConfigError);
  WasteParams wp;
  wp.k_p = 0;
  EXPECT_THROW(wp.validate(), ConfigError);
}
