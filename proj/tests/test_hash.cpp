#include "condprob/hashing.hpp"

#include <cmath>
#include <string>
#include <vector>

#include <gtest/gtest.h>

namespace condprob {
namespace {

TEST(HashFeature, DeterministicAcrossCalls) {
  for (const char* tok : {"a", "w1", "some_longer_token", "\xc3\xa9"}) {
    EXPECT_EQ(hash_feature(tok, 18), hash_feature(tok, 18)) << tok;
  }
}

TEST(HashFeature, StaysInRangeAndSkipsBias) {
  for (uint32_t bits : {1u, 2u, 18u, 31u}) {
    for (int i = 0; i < 1000; i++) {
      uint64_t h = hash_feature("tok" + std::to_string(i), bits);
      EXPECT_LT(h, uint64_t{1} << bits);
      EXPECT_NE(h, kBiasIndex);
    }
  }
}

TEST(HashFeature, SeedChangesIndices) {
  int moved = 0;
  for (int i = 0; i < 100; i++) {
    std::string t = "tok" + std::to_string(i);
    if (hash_feature(t, 18, 1) != hash_feature(t, 18, 2)) moved++;
  }
  EXPECT_GT(moved, 90);
}

TEST(HashFeature, RejectsBadBits) {
  EXPECT_THROW(hash_feature("a", 0), ConfigError);
  EXPECT_THROW(hash_feature("a", 32), ConfigError);
}

// Chi-square occupancy test against the uniform distribution over the
// 2^18 - 1 usable buckets: the statistic has mean B-1 and variance
// 2(B-1), so a healthy hash lands within 5 standard deviations.
TEST(HashFeature, UniformOccupancyChiSquare) {
  const uint32_t bits = 18;
  const size_t buckets = (size_t{1} << bits) - 1;
  const size_t n = 100000;
  std::vector<uint32_t> load(buckets + 1, 0);
  for (size_t i = 0; i < n; i++) {
    load[hash_feature("token_" + std::to_string(i), bits)]++;
  }
  EXPECT_EQ(load[kBiasIndex], 0u);
  const double expected = double(n) / double(buckets);
  double chi2 = 0;
  for (size_t b = 1; b <= buckets; b++) {
    double d = load[b] - expected;
    chi2 += d * d / expected;
  }
  double dof = double(buckets - 1);
  EXPECT_NEAR(chi2, dof, 5.0 * std::sqrt(2.0 * dof));
}

}  // namespace
}  // namespace condprob
