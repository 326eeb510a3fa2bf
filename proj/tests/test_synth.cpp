#include "condprob/synth.hpp"

#include <sstream>

#include <gtest/gtest.h>

#include "condprob/eval.hpp"

namespace condprob {
namespace {

TEST(Synth, GroundTruthIsNormalizedAndDeterministic) {
  SynthConfig cfg;
  cfg.labels = 100;
  cfg.contexts = 20;
  cfg.clusters = 5;
  cfg.support = 4;
  cfg.seed = 7;
  GroundTruth a = make_ground_truth(cfg);
  GroundTruth b = make_ground_truth(cfg);
  ASSERT_EQ(a.contexts.size(), 20u);
  double ctx_mass = 0;
  for (size_t i = 0; i < a.contexts.size(); i++) {
    ctx_mass += a.contexts[i].p;
    double label_mass = 0;
    for (const auto& [label, p] : a.contexts[i].labels) label_mass += p;
    EXPECT_NEAR(label_mass, 1.0, 1e-12);
    EXPECT_EQ(a.contexts[i].tokens, b.contexts[i].tokens);
    EXPECT_EQ(a.contexts[i].labels, b.contexts[i].labels);
  }
  EXPECT_NEAR(ctx_mass, 1.0, 1e-12);
}

TEST(Synth, ExamplesAreDeterministicPerSeed) {
  SynthConfig cfg;
  cfg.labels = 50;
  cfg.contexts = 10;
  cfg.clusters = 5;
  cfg.seed = 3;
  GroundTruth truth = make_ground_truth(cfg);
  std::ostringstream s1, s2, s3;
  write_examples(s1, truth, 200, 11);
  write_examples(s2, truth, 200, 11);
  write_examples(s3, truth, 200, 12);
  EXPECT_EQ(s1.str(), s2.str());
  EXPECT_NE(s1.str(), s3.str());
}

TEST(Synth, TruthJsonRoundTrips) {
  SynthConfig cfg;
  cfg.labels = 30;
  cfg.contexts = 6;
  cfg.clusters = 3;
  cfg.support = 3;
  GroundTruth truth = make_ground_truth(cfg);
  std::stringstream buf;
  write_truth(buf, truth);
  GroundTruth back = read_truth(buf);
  ASSERT_EQ(back.contexts.size(), truth.contexts.size());
  for (size_t i = 0; i < truth.contexts.size(); i++) {
    EXPECT_DOUBLE_EQ(back.contexts[i].p, truth.contexts[i].p);
    EXPECT_EQ(back.contexts[i].tokens, truth.contexts[i].tokens);
    EXPECT_EQ(back.contexts[i].labels, truth.contexts[i].labels);
  }
}

// One-hot conditionals: the best-possible reference memorizes the stream
// perfectly.
TEST(Synth, OneHotConditionalsAreMemorizable) {
  SynthConfig cfg;
  cfg.labels = 40;
  cfg.contexts = 10;
  cfg.clusters = 10;
  cfg.support = 1;
  GroundTruth truth = make_ground_truth(cfg);
  std::stringstream data;
  write_examples(data, truth, 300, 5);
  std::vector<Example> examples;
  std::string line;
  size_t line_no = 0;
  while (std::getline(data, line)) {
    examples.push_back(parse_example(line, 12, kDefaultHashSeed, ++line_no));
  }
  VectorSource src(std::move(examples));
  EXPECT_DOUBLE_EQ(best_possible(src).mean_loss, 0.0);
}

// Uniform conditionals over 4 labels: the best observable loss is
// (1 - 1/4)^2 in expectation; with enough samples the empirical table
// lands close.
TEST(Synth, UniformConditionalLossNearTheoreticalFloor) {
  SynthConfig cfg;
  cfg.labels = 4;
  cfg.contexts = 1;
  cfg.clusters = 1;
  cfg.support = 4;
  cfg.uniform_conditional = true;
  GroundTruth truth = make_ground_truth(cfg);
  ASSERT_EQ(truth.contexts[0].labels.size(), 4u);
  for (const auto& [label, p] : truth.contexts[0].labels) {
    EXPECT_DOUBLE_EQ(p, 0.25);
  }
  std::stringstream data;
  write_examples(data, truth, 20000, 5);
  std::vector<Example> examples;
  std::string line;
  size_t line_no = 0;
  while (std::getline(data, line)) {
    examples.push_back(parse_example(line, 12, kDefaultHashSeed, ++line_no));
  }
  VectorSource src(std::move(examples));
  EXPECT_NEAR(best_possible(src).mean_loss, 0.5625, 0.01);
}

TEST(Synth, TrueRegretOfTheOracleIsZero) {
  SynthConfig cfg;
  cfg.labels = 60;
  cfg.contexts = 12;
  cfg.clusters = 4;
  GroundTruth truth = make_ground_truth(cfg);
  // Perfect predictor: look the pair up in the truth itself.
  double r = true_regret(truth, 12, kDefaultHashSeed,
                         [&](const SparseVector& x, const LabelToken& y) {
                           for (const auto& ctx : truth.contexts) {
                             SparseVector cx =
                                 context_vector(ctx, 12, kDefaultHashSeed);
                             if (cx.entries == x.entries) {
                               for (const auto& [label, p] : ctx.labels) {
                                 if (label == y) return p;
                               }
                             }
                           }
                           return 0.0;
                         });
  EXPECT_NEAR(r, 0.0, 1e-18);
  // The zero predictor pays sum p(ctx) * sum p^3.
  double zero = true_regret(truth, 12, kDefaultHashSeed,
                            [](const SparseVector&, const LabelToken&) {
                              return 0.0;
                            });
  double want = 0;
  for (const auto& ctx : truth.contexts) {
    for (const auto& [label, p] : ctx.labels) want += ctx.p * p * p * p;
  }
  EXPECT_NEAR(zero, want, 1e-15);
}

TEST(Synth, RejectsBadConfig) {
  SynthConfig cfg;
  cfg.labels = 0;
  EXPECT_THROW(make_ground_truth(cfg), ConfigError);
  SynthConfig cfg2;
  cfg2.shared_tokens = 99;
  cfg2.tokens_per_context = 3;
  EXPECT_THROW(make_ground_truth(cfg2), ConfigError);
}

}  // namespace
}  // namespace condprob
