#include <gtest/gtest.h>

#include <cmath>

#include "embedcast/errors.hpp"
#include "embedcast/metrics.hpp"
#include "embedcast/random.hpp"

using namespace embedcast;
using namespace embedcast::metrics;

namespace {

Grid random_grid(std::size_t rows, std::size_t cols, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  Rng rng(seed);
  Grid g(rows, cols);
  for (double& v : g.values()) v = lo + (hi - lo) * rng.uniform();
  return g;
}

FeatureParams random_params(Rng& rng) {
  return {static_cast<std::size_t>(rng.uniform_int(0, 6)), static_cast<std::size_t>(rng.uniform_int(0, 9)),
          static_cast<std::size_t>(rng.uniform_int(1, 12)), static_cast<std::size_t>(rng.uniform_int(1, 40))};
}

}  // namespace

TEST(Ssim, IdentityIsExactlyOne) {
  for (std::uint64_t s = 1; s <= 20; ++s) {
    const Grid g = random_grid(10 + s, 8 + s % 5, s, -50.0, 50.0);
    EXPECT_EQ(ssim(g, g), 1.0);
  }
  const Grid constant(9, 9);
  EXPECT_EQ(ssim(constant, constant), 1.0);
}

TEST(Ssim, SymmetricProperty) {
  for (std::uint64_t s = 1; s <= 50; ++s) {
    const Grid a = random_grid(12, 15, s);
    const Grid b = random_grid(12, 15, s + 500, -2.0, 3.0);
    EXPECT_NEAR(ssim(a, b), ssim(b, a), 1e-12);
  }
}

TEST(Ssim, BoundedProperty) {
  for (std::uint64_t s = 1; s <= 50; ++s) {
    // Mirror about a common offset: luminance stays near 1, structure flips sign.
    const Grid a = random_grid(9, 11, s, 9.0, 11.0);
    Grid b = a;
    for (double& v : b.values()) v = 20.0 - v;
    const double v1 = ssim(a, random_grid(9, 11, s + 1));
    const double v2 = ssim(a, b);
    EXPECT_LE(std::abs(v1), 1.0);
    EXPECT_LE(std::abs(v2), 1.0);
    EXPECT_LT(v2, 0.0);
  }
}

TEST(Ssim, MeanShiftReducesIndex) {
  const Grid g = random_grid(16, 16, 3);
  Grid shifted = g;
  for (double& v : shifted.values()) v += 100.0;
  const double value = ssim(g, shifted);
  EXPECT_LT(value, 1.0);
  EXPECT_LT(value, 0.1);  // luminance term dominates
}

TEST(Ssim, SingleWindowMatchesDirectFormula) {
  const Grid a = random_grid(8, 8, 11, 0.0, 5.0);
  const Grid b = random_grid(8, 8, 12, -1.0, 4.0);
  // Independent two-pass evaluation of the closed form over the one window.
  double lo = a(0, 0), hi = a(0, 0);
  for (double v : a.values()) lo = std::min(lo, v), hi = std::max(hi, v);
  for (double v : b.values()) lo = std::min(lo, v), hi = std::max(hi, v);
  const double R = hi - lo, C1 = (0.01 * R) * (0.01 * R), C2 = (0.03 * R) * (0.03 * R);
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < 64; ++i) ma += a.values()[i], mb += b.values()[i];
  ma /= 64;
  mb /= 64;
  double va = 0, vb = 0, cab = 0;
  for (std::size_t i = 0; i < 64; ++i) {
    va += (a.values()[i] - ma) * (a.values()[i] - ma);
    vb += (b.values()[i] - mb) * (b.values()[i] - mb);
    cab += (a.values()[i] - ma) * (b.values()[i] - mb);
  }
  va /= 64;
  vb /= 64;
  cab /= 64;
  const double expected = ((2 * ma * mb + C1) * (2 * cab + C2)) / ((ma * ma + mb * mb + C1) * (va + vb + C2));
  EXPECT_NEAR(ssim(a, b), expected, 1e-12);
}

TEST(Ssim, WindowOneIsPerPixelLuminance) {
  const Grid a(1, 2, std::vector<double>{1.0, 3.0});
  const Grid b(1, 2, std::vector<double>{1.0, 1.0});
  SSIMConfig c;
  c.window = 1;
  const double C1 = (0.01 * 2) * (0.01 * 2);
  const double expected = 0.5 * (1.0 + (2 * 3.0 + C1) / (9.0 + 1.0 + C1));
  EXPECT_NEAR(ssim(a, b, c), expected, 1e-15);
}

TEST(Ssim, Errors) {
  EXPECT_THROW(ssim(Grid(8, 8), Grid(8, 9)), ContractError);
  EXPECT_THROW(ssim(Grid(7, 20), Grid(7, 20)), ContractError);
  SSIMConfig c;
  c.window = 0;
  EXPECT_THROW(ssim(Grid(8, 8), Grid(8, 8), c), InvalidConfig);
  c.window = 8;
  c.k1 = 0.0;
  EXPECT_THROW(ssim(Grid(8, 8), Grid(8, 8), c), InvalidConfig);
}

TEST(Distance, Examples) {
  const FeatureParams star{1, 3, 2, 3};
  EXPECT_EQ(distance_euclidean(star, star), 0.0);
  EXPECT_EQ(distance_euclidean(FeatureParams{2, 3, 2, 3}, star), 1.0);
  EXPECT_EQ(distance_euclidean(FeatureParams{0, 0, 1, 1}, star), std::sqrt(15.0));
  EXPECT_EQ(distance_manhattan(star, star), 0.0);
  EXPECT_EQ(distance_manhattan(FeatureParams{0, 0, 1, 1}, star), 7.0);
}

TEST(Distance, MetricProperties) {
  Rng rng(77);
  for (int t = 0; t < 500; ++t) {
    const auto p = random_params(rng), q = random_params(rng), r = random_params(rng);
    for (auto d : {distance_euclidean, distance_manhattan}) {
      EXPECT_EQ(d(p, q), d(q, p));
      EXPECT_EQ(d(p, q) == 0.0, p == q);
      EXPECT_LE(d(p, r), d(p, q) + d(q, r) + 1e-12);
    }
    EXPECT_GE(distance_manhattan(p, q), distance_euclidean(p, q));
  }
}
