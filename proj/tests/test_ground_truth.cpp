#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "ipp/ground_truth.hpp"
#include "support.hpp"

using namespace ipp;
using ipp::test::map_from;
using ipp::test::open_map;

TEST(GroundTruth, DeterministicPerSeed) {
  const auto m = open_map(20, 15, 0.225);
  const auto a = GroundTruth::generate(m, 42);
  const auto b = GroundTruth::generate(m, 42);
  const auto c = GroundTruth::generate(m, 43);
  EXPECT_EQ(a.water_values(), b.water_values());
  EXPECT_NE(a.water_values(), c.water_values());
  EXPECT_EQ(a.peaks().size(), 5u);
}

TEST(GroundTruth, NormalizedRangeOverWater) {
  const auto m = map_from({"0111100", "1111111", "1100111", "0111110"}, 0.5);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto g = GroundTruth::generate(m, seed);
    const auto v = g.water_values();
    EXPECT_DOUBLE_EQ(*std::min_element(v.begin(), v.end()), 0.0);
    EXPECT_DOUBLE_EQ(*std::max_element(v.begin(), v.end()), 1.0);
    for (const auto& p : g.peak_locations()) EXPECT_TRUE(m->navigable(p));
  }
}

TEST(GroundTruth, SinglePeakMaximumAtItsCenter) {
  const auto m = open_map(12, 9, 0.3);
  ShekelConfig cfg;
  cfg.n_peaks = 1;
  const auto g = GroundTruth::generate(m, 7, cfg);
  const Position c = g.peak_locations()[0];
  EXPECT_DOUBLE_EQ(g.evaluate(c), 1.0);
  const auto v = g.water_values();
  const auto best = std::max_element(v.begin(), v.end()) - v.begin();
  EXPECT_EQ(m->water_centers()[static_cast<std::size_t>(best)], c);
}

TEST(GroundTruth, FarFromPeaksNearZero) {
  const auto m = open_map(200, 1, 0.225);
  ShekelConfig cfg;
  cfg.n_peaks = 1;
  cfg.sharpness_min = cfg.sharpness_max = 0.15;
  const auto g = GroundTruth::generate(m, 3, cfg);
  const double px = g.peak_locations()[0].x;
  const Position far{px < 22.5 ? 44.9 : 0.05, 0.1};
  EXPECT_LT(g.evaluate(far), 0.01);
}

TEST(GroundTruth, MatchesDirectFormula) {
  const auto m = open_map(10, 10, 0.5);
  const auto g = GroundTruth::generate(m, 11);
  const Position a = g.peaks()[0].center, b = g.peaks()[1].center;
  const Position mid{(a.x + b.x) / 2, (a.y + b.y) / 2};
  double f = 0.0;
  for (const auto& pk : g.peaks()) {
    f += 1.0 / (pk.sharpness + std::pow(mid.x - pk.center.x, 2) + std::pow(mid.y - pk.center.y, 2));
  }
  EXPECT_NEAR(g.raw(mid), f, 1e-12);
  EXPECT_NEAR(g.evaluate(mid), std::clamp((f - g.norm_min()) / (g.norm_max() - g.norm_min()), 0.0, 1.0), 1e-12);
}

TEST(GroundTruth, EvaluateOnLandThrows) {
  const auto m = map_from({"10", "11"}, 1.0);
  const auto g = GroundTruth::generate(m, 1);
  EXPECT_THROW(g.evaluate(m->center(Cell{0, 1})), std::invalid_argument);
}

TEST(Advance, ZeroSpeedIsIdentity) {
  const auto m = open_map(10, 10, 0.225);
  const auto g = GroundTruth::generate(m, 5);
  const auto h = g.advance(20, 0.0);
  EXPECT_EQ(g.peak_locations(), h.peak_locations());
  EXPECT_EQ(g.water_values(), h.water_values());
}

TEST(Advance, StepsAreClippedAndDeterministic) {
  const auto m = open_map(30, 24, 0.225);
  const double v = 0.4;
  const double vmax_km = v * m->cell_size();
  auto g = GroundTruth::generate(m, 8);
  auto g2 = GroundTruth::generate(m, 8);
  const auto start = g.peak_locations();
  for (int s = 0; s < 200; ++s) {
    const auto before = g.peak_locations();
    g = g.advance(1, v);
    g2 = g2.advance(1, v);
    const auto after = g.peak_locations();
    for (std::size_t k = 0; k < after.size(); ++k) {
      // Reflection can only shorten the displacement.
      EXPECT_LE(distance(before[k], after[k]), vmax_km + 1e-12);
      EXPECT_GE(after[k].x, 0.0);
      EXPECT_LE(after[k].x, 30 * 0.225);
      EXPECT_GE(after[k].y, 0.0);
      EXPECT_LE(after[k].y, 24 * 0.225);
    }
  }
  EXPECT_EQ(g.peak_locations(), g2.peak_locations());
  const auto end = g.peak_locations();
  for (std::size_t k = 0; k < end.size(); ++k) EXPECT_LE(distance(start[k], end[k]), 200 * vmax_km + 1e-9);
}

TEST(Advance, ComposesOverTheSameStream) {
  const auto m = open_map(20, 20, 0.225);
  const auto g = GroundTruth::generate(m, 21);
  const auto once = g.advance(17, 0.4);
  const auto twice = g.advance(5, 0.4).advance(12, 0.4);
  EXPECT_EQ(once.peak_locations(), twice.peak_locations());
  EXPECT_EQ(once.water_values(), twice.water_values());
}
