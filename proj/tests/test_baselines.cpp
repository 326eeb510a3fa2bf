#include "condprob/baselines.hpp"

#include <memory>

#include <gtest/gtest.h>

namespace condprob {
namespace {

SparseVector bias_only() { return SparseVector{{{kBiasIndex, 1.0}}}; }

SparseVector with_feature(uint64_t idx) {
  SparseVector x{{{kBiasIndex, 1.0}, {idx, 1.0}}};
  return x;
}

TEST(Ova, FirstExampleCreatesOneRegressor) {
  auto a = std::make_shared<WeightArena>(4);
  OvaModel m(a);
  m.learn(bias_only(), "a");
  EXPECT_EQ(m.label_count(), 1u);
  EXPECT_EQ(a->total_updates(), 1u);
  EXPECT_GT(m.predict_prob(bias_only(), "a"), 0.5);  // trained toward 1
}

TEST(Ova, EveryKnownLabelUpdatesPerExample) {
  auto a = std::make_shared<WeightArena>(4);
  OvaModel m(a);
  m.learn(bias_only(), "a");
  m.learn(bias_only(), "b");
  m.learn(bias_only(), "c");
  uint64_t before = a->total_updates();
  m.learn(bias_only(), "a");
  EXPECT_EQ(a->total_updates() - before, 3u);  // all three known labels
}

TEST(Ova, PerExampleCostGrowsLinearly) {
  auto a = std::make_shared<WeightArena>(4);
  OvaModel m(a);
  uint64_t prev = 0;
  for (int i = 0; i < 50; i++) {
    m.learn(bias_only(), "l" + std::to_string(i));
    uint64_t now = a->total_updates();
    EXPECT_EQ(now - prev, uint64_t(i + 1));  // touches every label seen
    prev = now;
  }
}

TEST(Ova, PredictionIsTheLabelsOwnRegressor) {
  auto a = std::make_shared<WeightArena>(4);
  OvaModel m(a);
  SparseVector x = with_feature(3);
  for (int i = 0; i < 30; i++) {
    m.learn(x, "hot");
    m.learn(with_feature(5), "cold");
  }
  EXPECT_GT(m.predict_prob(x, "hot"), 0.8);
  EXPECT_LT(m.predict_prob(x, "cold"), 0.3);
  EXPECT_DOUBLE_EQ(m.predict_prob(x, "never"), 0.0);
}

TEST(Table, UnseenContextScoresZero) {
  TableModel t;
  EXPECT_DOUBLE_EQ(t.predict_prob(bias_only(), "a"), 0.0);
}

TEST(Table, EmpiricalFrequencies) {
  TableModel t;
  SparseVector ctx = with_feature(7);
  t.learn(ctx, "a");
  t.learn(ctx, "a");
  t.learn(ctx, "b");
  t.learn(ctx, "c");
  EXPECT_DOUBLE_EQ(t.predict_prob(ctx, "a"), 0.5);
  EXPECT_DOUBLE_EQ(t.predict_prob(ctx, "b"), 0.25);
  EXPECT_DOUBLE_EQ(t.predict_prob(ctx, "missing"), 0.0);
  // A different context is independent.
  EXPECT_DOUBLE_EQ(t.predict_prob(with_feature(9), "a"), 0.0);
}

TEST(Table, SeenLabelsSumToOnePerContext) {
  TableModel t;
  SparseVector ctx = with_feature(2);
  const char* labs[] = {"a", "b", "b", "c", "a", "a"};
  for (const char* y : labs) t.learn(ctx, y);
  double sum = t.predict_prob(ctx, "a") + t.predict_prob(ctx, "b") +
               t.predict_prob(ctx, "c");
  EXPECT_DOUBLE_EQ(sum, 1.0);
}

}  // namespace
}  // namespace condprob
