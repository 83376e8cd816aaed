#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "featdistill/rng.hpp"

using namespace featdistill;

TEST(SplitMix64, MatchesPublishedReferenceOutputs) {
  // Reference stream of the SplitMix64 generator seeded with 0.
  SeededRng rng(0);
  EXPECT_EQ(rng.next_u64(), 0xE220A8397B1DCDAFULL);
  EXPECT_EQ(rng.next_u64(), 0x6E789E6AA1B965F4ULL);
  EXPECT_EQ(rng.next_u64(), 0x06C45D188009454FULL);
}

TEST(SeededRng, SameSeedSameStream) {
  SeededRng a(42), b(42), c(43);
  bool differs = false;
  for (int i = 0; i < 1000; ++i) {
    const auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    differs = differs || x != c.next_u64();
  }
  EXPECT_TRUE(differs);
}

TEST(SeededRng, UniformMomentsAndRange) {
  SeededRng rng(7);
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
    sq += u * u;
  }
  EXPECT_NEAR(sum / n, 0.5, 0.005);
  EXPECT_NEAR(sq / n - (sum / n) * (sum / n), 1.0 / 12.0, 0.002);
}

TEST(SeededRng, NormalMoments) {
  SeededRng rng(11);
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sq / n, 1.0, 0.02);
}

TEST(SeededRng, BelowAndUniformIntStayInRange) {
  SeededRng rng(3);
  std::set<std::int64_t> seen;
  for (int i = 0; i < 5000; ++i) {
    EXPECT_LT(rng.below(7), 7u);
    const auto v = rng.uniform_int(1, 5);
    EXPECT_GE(v, 1);
    EXPECT_LE(v, 5);
    seen.insert(v);
  }
  EXPECT_EQ(seen.size(), 5u);
}

TEST(SeededRng, PoissonMeanMatchesLambda) {
  for (double lambda : {0.5, 4.0, 80.0}) {
    SeededRng rng(static_cast<std::uint64_t>(lambda * 10));
    double sum = 0.0;
    const int n = 50000;
    for (int i = 0; i < n; ++i) sum += static_cast<double>(rng.poisson(lambda));
    EXPECT_NEAR(sum / n, lambda, 4.0 * std::sqrt(lambda / n) + 0.01) << lambda;
  }
}

TEST(Mix64, ChildrenAreDistinctAndStable) {
  std::set<std::uint64_t> seeds;
  for (std::uint64_t i = 0; i < 1000; ++i) seeds.insert(mix64(99, i));
  EXPECT_EQ(seeds.size(), 1000u);
  EXPECT_EQ(SeededRng(5).child(3).next_u64(), SeededRng(mix64(5, 3)).next_u64());
}
