#include "condprob/bounds.hpp"

#include <random>
#include <vector>

#include <gtest/gtest.h>

namespace condprob {
namespace {

TEST(EstimateBounds, IdenticalFactorsGiveZeroEverywhere) {
  std::vector<double> p{0.3, 0.8, 0.5};
  auto r = check_estimate_bounds(p, p);
  EXPECT_DOUBLE_EQ(r.lhs, 0.0);
  EXPECT_DOUBLE_EQ(r.slab_bound, 0.0);
  EXPECT_DOUBLE_EQ(r.sum_bound, 0.0);
  EXPECT_TRUE(r.all_hold);
}

TEST(EstimateBounds, SingleFactorIsTightEverywhere) {
  std::vector<double> p{0.2}, q{0.7};
  auto r = check_estimate_bounds(p, q);
  EXPECT_DOUBLE_EQ(r.lhs, 0.5);
  EXPECT_DOUBLE_EQ(r.slab_bound, 0.5);
  EXPECT_DOUBLE_EQ(r.sum_bound, 0.5);
  EXPECT_DOUBLE_EQ(r.thm_bound, 0.25);
  EXPECT_TRUE(r.all_hold);
}

TEST(EstimateBounds, EmptyPathIsDegenerate) {
  auto r = check_estimate_bounds({}, {});
  EXPECT_DOUBLE_EQ(r.lhs, 0.0);
  EXPECT_TRUE(r.all_hold);
}

TEST(EstimateBounds, RejectsBadInput) {
  std::vector<double> p{0.5}, q{0.5, 0.5}, bad{1.5};
  EXPECT_THROW(check_estimate_bounds(p, q), ConfigError);
  EXPECT_THROW(check_estimate_bounds(p, bad), ConfigError);
}

TEST(EstimateBounds, RandomizedChainNeverBreaks) {
  std::mt19937_64 rng(20240613);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> depth(1, 20);
  for (int trial = 0; trial < 10000; trial++) {
    int d = depth(rng);
    std::vector<double> p(d), q(d);
    for (int i = 0; i < d; i++) {
      p[i] = unit(rng);
      q[i] = unit(rng);
    }
    auto r = check_estimate_bounds(p, q);
    ASSERT_TRUE(r.all_hold) << "trial " << trial << " lhs=" << r.lhs
                            << " slab=" << r.slab_bound
                            << " sum=" << r.sum_bound;
  }
}

// Near-identical factor lists exercise the bound chain where both sides of
// the inequalities almost coincide.
TEST(EstimateBounds, NearTightInstancesStillHold) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> tiny(-1e-9, 1e-9);
  for (int trial = 0; trial < 2000; trial++) {
    int d = 1 + int(rng() % 8);
    std::vector<double> p(d), q(d);
    for (int i = 0; i < d; i++) {
      p[i] = unit(rng);
      q[i] = std::clamp(p[i] + tiny(rng), 0.0, 1.0);
    }
    ASSERT_TRUE(check_estimate_bounds(p, q).all_hold);
  }
}

}  // namespace
}  // namespace condprob
