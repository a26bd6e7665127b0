#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "dadagger/error.hpp"
#include "dadagger/random.hpp"
#include "dadagger/uncertainty.hpp"

namespace dadagger {
namespace {

std::vector<double> random_scores(std::size_t n, std::uint64_t seed, int levels = 0) {
  Rng rng(seed);
  std::vector<double> s(n);
  for (double& v : s) {
    v = levels > 0 ? static_cast<double>(rng.below(static_cast<std::uint64_t>(levels)))
                   : rng.uniform();
  }
  return s;
}

TEST(Disagreement, IdenticalSamplesGiveZero) {
  const std::vector<Action> s(7, Action{0.3, -0.2, 0.9});
  EXPECT_EQ(disagreement(s), 0.0);
  EXPECT_EQ(disagreement(std::vector<Action>{{1.5, 2.5}}), 0.0);
}

TEST(Disagreement, PopulationVarianceSummedOverDims) {
  EXPECT_DOUBLE_EQ(disagreement(std::vector<Action>{{0.0}, {2.0}}), 1.0);
  EXPECT_DOUBLE_EQ(disagreement(std::vector<Action>{{0.0, 0.0}, {2.0, 4.0}}), 5.0);
}

TEST(Disagreement, RejectsBadInput) {
  EXPECT_THROW(disagreement(std::vector<Action>{}), InputError);
  EXPECT_THROW(disagreement(std::vector<Action>{{1.0, 2.0}, {1.0}}), InputError);
}

TEST(Disagreement, PermutationInvariantAndQuadraticInScale) {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Action> s(2 + rng.below(10), Action(3));
    for (auto& a : s) {
      for (double& v : a) v = rng.uniform(-1, 1);
    }
    const double d = disagreement(s);
    EXPECT_GE(d, 0.0);
    std::vector<Action> shuffled = s;
    std::reverse(shuffled.begin(), shuffled.end());
    std::rotate(shuffled.begin(), shuffled.begin() + 1, shuffled.end());
    EXPECT_NEAR(disagreement(shuffled), d, 1e-12 * std::max(1.0, d));
    const double c = rng.uniform(-3, 3);
    std::vector<Action> scaled = s;
    for (auto& a : scaled) {
      for (double& v : a) v *= c;
    }
    EXPECT_NEAR(disagreement(scaled), c * c * d, 1e-12 * std::max(1.0, c * c * d));
  }
}

TEST(SelectTopAlpha, Examples) {
  const std::vector<double> s{0.5, 0.1, 0.9, 0.3};
  EXPECT_EQ(select_top_alpha(s, 0.5), (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(select_top_alpha(s, 1.0), (std::vector<std::size_t>{0, 1, 2, 3}));
  EXPECT_EQ(select_top_alpha(std::vector<double>(4, 0.7), 0.5),
            (std::vector<std::size_t>{0, 1}));
  EXPECT_TRUE(select_top_alpha(s, 0.0).empty());
  EXPECT_TRUE(select_top_alpha(std::vector<double>{}, 0.4).empty());
}

TEST(SelectTopAlpha, AlphaOutOfRange) {
  const std::vector<double> s{1.0, 2.0};
  EXPECT_THROW(select_top_alpha(s, 1.5), ConfigError);
  EXPECT_THROW(select_top_alpha(s, -0.1), ConfigError);
  EXPECT_THROW(select_random(2, 1.01, 0), ConfigError);
}

TEST(QueryBudget, CeilWithoutFloatNoise) {
  EXPECT_EQ(query_budget(500, 0.2), 100u);
  EXPECT_EQ(query_budget(10, 0.3), 3u);  // 0.3 * 10 is 3.0000000000000004
  EXPECT_EQ(query_budget(10, 0.7), 7u);
  EXPECT_EQ(query_budget(7, 0.1), 1u);
  EXPECT_EQ(query_budget(1, 1e-9), 1u);
  EXPECT_EQ(query_budget(0, 0.5), 0u);
  EXPECT_EQ(query_budget(1250, 0.1), 125u);
  EXPECT_EQ(query_budget(1251, 0.1), 126u);
}

TEST(SelectTopAlpha, SizeDominanceAndOrder) {
  Rng rng(9);
  const double alphas[] = {0.05, 0.1, 0.2, 0.33, 0.4, 0.5, 0.9, 1.0};
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(60);
    const auto s = random_scores(n, 100 + trial, trial % 2 ? 4 : 0);
    for (double a : alphas) {
      const auto sel = select_top_alpha(s, a);
      ASSERT_EQ(sel.size(), query_budget(n, a));
      ASSERT_EQ(sel.size(), static_cast<std::size_t>(std::ceil(a * n - 1e-9)));
      ASSERT_TRUE(std::is_sorted(sel.begin(), sel.end()));
      const std::set<std::size_t> kept(sel.begin(), sel.end());
      ASSERT_EQ(kept.size(), sel.size());
      double min_kept = INFINITY;
      for (std::size_t i : sel) min_kept = std::min(min_kept, s[i]);
      for (std::size_t i = 0; i < n; ++i) {
        if (!kept.count(i)) ASSERT_GE(min_kept, s[i]);
      }
    }
  }
}

TEST(SelectTopAlpha, PermutationEquivariantForDistinctScores) {
  Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 5 + rng.below(40);
    const auto s = random_scores(n, 500 + trial);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
    std::vector<double> permuted(n);
    for (std::size_t i = 0; i < n; ++i) permuted[i] = s[perm[i]];

    std::set<std::size_t> mapped;
    for (std::size_t i : select_top_alpha(permuted, 0.3)) mapped.insert(perm[i]);
    const auto direct = select_top_alpha(s, 0.3);
    EXPECT_EQ(mapped, std::set<std::size_t>(direct.begin(), direct.end()));
  }
}

TEST(SelectRandom, Examples) {
  EXPECT_EQ(select_random(5, 1.0, 3), (std::vector<std::size_t>{0, 1, 2, 3, 4}));
  EXPECT_TRUE(select_random(5, 0.0, 3).empty());
  const auto sel = select_random(10, 0.3, 42);
  ASSERT_EQ(sel.size(), 3u);
  EXPECT_TRUE(std::is_sorted(sel.begin(), sel.end()));
  EXPECT_EQ(std::set<std::size_t>(sel.begin(), sel.end()).size(), 3u);
  for (std::size_t i : sel) EXPECT_LT(i, 10u);
  EXPECT_EQ(select_random(10, 0.3, 42), sel);
}

TEST(SelectRandom, CoversAllIndicesAcrossSeeds) {
  std::vector<int> hits(20, 0);
  for (std::uint64_t seed = 0; seed < 400; ++seed) {
    for (std::size_t i : select_random(20, 0.1, seed)) ++hits[i];
  }
  // 800 draws over 20 slots: each slot expects 40.
  for (int h : hits) {
    EXPECT_GT(h, 15);
    EXPECT_LT(h, 70);
  }
}

}  // namespace
}  // namespace dadagger
