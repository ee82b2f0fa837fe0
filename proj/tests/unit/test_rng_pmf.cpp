#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <stdexcept>

#include "latrade/pmf.hpp"
#include "latrade/rng.hpp"

using namespace latrade;

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
  Rng c(42), d(42);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(c.normal(0, 1), d.normal(0, 1));
}

TEST(Rng, UniformStaysInRange) {
  Rng r(7);
  for (int i = 0; i < 100000; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    const double v = r.uniform(-3.0, 5.0);
    ASSERT_GE(v, -3.0);
    ASSERT_LT(v, 5.0);
  }
  EXPECT_EQ(r.uniform(2.5, 2.5), 2.5);
}

TEST(Rng, UniformIntCoversClosedRange) {
  Rng r(9);
  std::set<std::int64_t> seen;
  for (int i = 0; i < 20000; ++i) {
    const auto x = r.uniform_int(50, 60);
    ASSERT_GE(x, 50);
    ASSERT_LE(x, 60);
    seen.insert(x);
  }
  EXPECT_EQ(seen.size(), 11u);
  EXPECT_EQ(r.uniform_int(4, 4), 4);
  EXPECT_THROW(r.index(0), std::invalid_argument);
}

TEST(Rng, NormalMoments) {
  Rng r(11);
  const int n = 200000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal(3.0, 2.0);
    s += x;
    s2 += x * x;
  }
  const double mean = s / n;
  const double var = s2 / n - mean * mean;
  // 5 sigma bands on the sample mean and variance
  EXPECT_NEAR(mean, 3.0, 5 * 2.0 / std::sqrt(n));
  EXPECT_NEAR(var, 4.0, 5 * 4.0 * std::sqrt(2.0 / n));
}

TEST(Rng, DerivedSeedsDiffer) {
  std::set<std::uint64_t> seeds;
  for (std::uint64_t k = 0; k < 100; ++k) {
    seeds.insert(derive_seed(1, k));
    seeds.insert(derive_seed(1, "demand", k));
    seeds.insert(derive_seed(1, "profiles", k));
  }
  EXPECT_EQ(seeds.size(), 300u);
  EXPECT_EQ(derive_seed(5, "x", 3), derive_seed(5, "x", 3));
  EXPECT_NE(derive_seed(5, "x", 3), derive_seed(6, "x", 3));
}

TEST(UsagePmf, PointMass) {
  const UsagePmf p = UsagePmf::point(12);
  EXPECT_EQ(p.lowest(), 12);
  EXPECT_EQ(p.highest(), 12);
  EXPECT_DOUBLE_EQ(p.at(12), 1.0);
  EXPECT_DOUBLE_EQ(p.at(11), 0.0);
  EXPECT_DOUBLE_EQ(p.mean(), 12.0);
}

TEST(UsagePmf, RejectsBadInput) {
  EXPECT_THROW(UsagePmf(-1, {1.0}), std::invalid_argument);
  EXPECT_THROW(UsagePmf(0, {0.5, 0.4}), std::invalid_argument);
  EXPECT_THROW(UsagePmf(0, {1.5, -0.5}), std::invalid_argument);
  EXPECT_THROW(UsagePmf(0, {}), std::invalid_argument);
  EXPECT_THROW(UsagePmf(0, {NAN, 1.0}), std::invalid_argument);
  EXPECT_NO_THROW(UsagePmf(0, {0.5, 0.5 + 1e-12}));
}

TEST(UsagePmf, MeanOfThreeOutcomes) {
  const UsagePmf p(9, {1.0 / 3, 1.0 / 3, 1.0 / 3});
  EXPECT_NEAR(p.mean(), 10.0, 1e-12);
  EXPECT_NEAR(p.total(), 1.0, 1e-12);
}
