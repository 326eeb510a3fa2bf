#include "condprob/eval.hpp"

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

namespace condprob {
namespace {

// Constant predictor for harness tests; counts learn calls.
struct StubModel {
  double value;
  int learned = 0;
  double predict_prob(const SparseVector&, const LabelToken&) const {
    return value;
  }
  void learn(const SparseVector&, const LabelToken&) { learned++; }
};

std::vector<Example> stream(size_t m) {
  std::vector<Example> out;
  for (size_t i = 0; i < m; i++) {
    out.push_back({SparseVector{{{kBiasIndex, 1.0}}}, "y"});
  }
  return out;
}

TEST(Evaluate, PerfectAndHopelessPredictors) {
  StubModel perfect{1.0};
  VectorSource s1(stream(50));
  EXPECT_DOUBLE_EQ(
      evaluate(perfect, s1, EvalMode::kProgressive).mean_loss, 0.0);

  StubModel hopeless{0.0};
  VectorSource s2(stream(50));
  EXPECT_DOUBLE_EQ(
      evaluate(hopeless, s2, EvalMode::kProgressive).mean_loss, 1.0);
}

TEST(Evaluate, UniformPredictorLoss) {
  for (double k : {2.0, 4.0, 10.0}) {
    StubModel uniform{1.0 / k};
    VectorSource s(stream(32));
    double want = (1.0 - 1.0 / k) * (1.0 - 1.0 / k);
    EXPECT_DOUBLE_EQ(evaluate(uniform, s, EvalMode::kHoldout).mean_loss, want);
  }
}

TEST(Evaluate, HoldoutNeverTrains) {
  StubModel m{0.5};
  VectorSource s(stream(20));
  evaluate(m, s, EvalMode::kHoldout);
  EXPECT_EQ(m.learned, 0);
  s.rewind();
  evaluate(m, s, EvalMode::kProgressive);
  EXPECT_EQ(m.learned, 20);
}

TEST(Evaluate, EmptyStreamIsFlagged) {
  StubModel m{0.5};
  VectorSource s(stream(0));
  auto r = evaluate(m, s, EvalMode::kProgressive);
  EXPECT_EQ(r.m, 0u);
  EXPECT_FALSE(r.loss_defined);
  EXPECT_TRUE(std::isnan(r.mean_loss));
}

TEST(Evaluate, ReportEchoesConfiguration) {
  StubModel m{0.25};
  VectorSource s(stream(100));
  auto r = evaluate(m, s, EvalMode::kProgressive, 0.1, "stub eta0=0.1");
  EXPECT_EQ(r.delta, 0.1);
  EXPECT_DOUBLE_EQ(r.ci_halfwidth, hoeffding_halfwidth(100, 0.1));
  EXPECT_EQ(r.model_config, "stub eta0=0.1");
  auto line = format_report_line(r);
  EXPECT_NE(line.find("mode=progressive"), std::string::npos);
  EXPECT_NE(line.find("m=100"), std::string::npos);
  EXPECT_NE(line.find("delta=0.1"), std::string::npos);
}

// A frozen model scores identically under both modes: progressive
// validation only differs when training changes the model.
TEST(Evaluate, ProgressiveEqualsHoldoutWithoutUpdates) {
  struct Frozen {
    double predict_prob(const SparseVector&, const LabelToken& y) const {
      return y == "y" ? 0.7 : 0.1;
    }
    void learn(const SparseVector&, const LabelToken&) {}
  } model;
  VectorSource a(stream(64)), b(stream(64));
  auto progressive = evaluate(model, a, EvalMode::kProgressive);
  auto holdout = evaluate(model, b, EvalMode::kHoldout);
  EXPECT_EQ(progressive.mean_loss, holdout.mean_loss);
  EXPECT_EQ(progressive.m, holdout.m);
}

TEST(Evaluate, ReportsAreReproducible) {
  auto run = [] {
    StubModel m{0.3};
    VectorSource s(stream(500));
    return evaluate(m, s, EvalMode::kProgressive, 0.05, "stub");
  };
  auto r1 = run(), r2 = run();
  EXPECT_EQ(r1.mean_loss, r2.mean_loss);  // bit-identical accumulation
  EXPECT_EQ(r1.m, r2.m);
  EXPECT_EQ(r1.ci_halfwidth, r2.ci_halfwidth);
  EXPECT_EQ(r1.equiv_labels, r2.equiv_labels);
}

TEST(Hoeffding, FormulaAndLimits) {
  EXPECT_NEAR(hoeffding_halfwidth(20000, 0.05), 0.0096, 5e-5);
  EXPECT_LT(hoeffding_halfwidth(100000000, 0.05), 1e-3);
  EXPECT_GT(hoeffding_halfwidth(10, 0.05), hoeffding_halfwidth(1000, 0.05));
  EXPECT_THROW(hoeffding_halfwidth(100, 2.0), ConfigError);
  EXPECT_THROW(hoeffding_halfwidth(100, 0.0), ConfigError);
  EXPECT_THROW(hoeffding_halfwidth(0, 0.05), ConfigError);
}

TEST(EquivalentLabels, KnownMappings) {
  EXPECT_NEAR(equivalent_labels(0.812), 10.11, 0.01);
  EXPECT_NEAR(equivalent_labels(0.7742), 8.32, 0.01);
  EXPECT_NEAR(equivalent_labels(0.7725), 8.25, 0.01);
  EXPECT_NEAR(equivalent_labels(0.7632), 7.91, 0.01);
  EXPECT_NEAR(equivalent_labels(0.665), 5.42, 0.01);
  EXPECT_DOUBLE_EQ(equivalent_labels(0.25), 2.0);
  EXPECT_THROW(equivalent_labels(1.0), ConfigError);
  EXPECT_THROW(equivalent_labels(-0.1), ConfigError);
}

// equivalent_labels inverts the uniform predictor's loss curve.
TEST(EquivalentLabels, InverseOfUniformLoss) {
  for (double loss : {0.01, 0.25, 0.5, 0.9, 0.99}) {
    double k = equivalent_labels(loss);
    EXPECT_NEAR((1.0 - 1.0 / k) * (1.0 - 1.0 / k), loss, 1e-12);
  }
}

TEST(BestPossible, MemorizationIsPerfect) {
  // Every (context, label) pair unique: each prediction is count 1 of 1.
  std::vector<Example> data;
  for (int i = 0; i < 10; i++) {
    SparseVector x{{{kBiasIndex, 1.0}, {uint64_t(i + 1), 1.0}}};
    data.push_back({x, "l" + std::to_string(i)});
  }
  VectorSource s(data);
  auto r = best_possible(s);
  EXPECT_DOUBLE_EQ(r.mean_loss, 0.0);
}

TEST(BestPossible, FiftyFiftyContextCostsAQuarter) {
  std::vector<Example> data;
  SparseVector ctx{{{kBiasIndex, 1.0}, {4, 1.0}}};
  data.push_back({ctx, "a"});
  data.push_back({ctx, "b"});
  data.push_back({ctx, "a"});
  data.push_back({ctx, "b"});
  VectorSource s(data);
  auto r = best_possible(s);
  EXPECT_DOUBLE_EQ(r.mean_loss, 0.25);
  EXPECT_EQ(r.mode, EvalMode::kHoldout);
}

}  // namespace
}  // namespace condprob
