#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "condprob/baselines.hpp"
#include "condprob/data.hpp"
#include "condprob/error.hpp"

namespace condprob {

enum class EvalMode : uint8_t {
  kProgressive,  // score each example before training on it
  kHoldout,      // score only; the model stays frozen
};

inline const char* to_string(EvalMode m) {
  return m == EvalMode::kProgressive ? "progressive" : "holdout";
}

// Half-width of a (1-delta) confidence interval for the mean of m
// observations bounded in [0, 1]: sqrt(ln(2/delta) / (2m)).
inline double hoeffding_halfwidth(uint64_t m, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
  if (m < 1) throw ConfigError("need at least one observation");
  return std::sqrt(std::log(2.0 / delta) / (2.0 * double(m)));
}

// Number of labels for which the uniform predictor has the given squared
// loss: solves (1 - 1/k)^2 = loss.
inline double equivalent_labels(double loss) {
  if (!(loss >= 0.0 && loss < 1.0)) throw ConfigError("loss must lie in [0, 1)");
  return 1.0 / (1.0 - std::sqrt(loss));
}

struct EvalReport {
  EvalMode mode = EvalMode::kProgressive;
  uint64_t m = 0;
  bool loss_defined = false;  // false on an empty stream
  double mean_loss = 0;
  double delta = 0.05;
  double ci_halfwidth = 0;
  double equiv_labels = 0;  // NaN when mean_loss is 1 or undefined
  double wall_time_sec = 0;
  std::string model_config;
};

// Scores a stream with observable squared loss (1 - f(x, y))^2, predicting
// before any training step. Progressive mode keeps learning through the
// stream; holdout never trains.
template <class Model, class Source>
EvalReport evaluate(Model& model, Source& source, EvalMode mode,
                    double delta = 0.05, std::string model_config = "") {
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
  auto t0 = std::chrono::steady_clock::now();
  EvalReport r;
  r.mode = mode;
  r.delta = delta;
  r.model_config = std::move(model_config);
  double loss_sum = 0;
  while (auto ex = source.next()) {
    double f = model.predict_prob(ex->x, ex->y);
    loss_sum += (1.0 - f) * (1.0 - f);
    if (mode == EvalMode::kProgressive) model.learn(ex->x, ex->y);
    r.m++;
  }
  r.wall_time_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  if (r.m == 0) {
    r.mean_loss = std::nan("");
    r.equiv_labels = std::nan("");
    r.ci_halfwidth = std::nan("");
    return r;
  }
  r.loss_defined = true;
  r.mean_loss = loss_sum / double(r.m);
  r.ci_halfwidth = hoeffding_halfwidth(r.m, delta);
  r.equiv_labels =
      r.mean_loss < 1.0 ? equivalent_labels(r.mean_loss) : std::nan("");
  return r;
}

// Unachievable reference: fit the empirical-frequency table on the scored
// stream itself, then score it frozen on that same stream.
template <class Source>
EvalReport best_possible(Source& source, double delta = 0.05) {
  TableModel table;
  while (auto ex = source.next()) table.learn(ex->x, ex->y);
  source.rewind();
  return evaluate(table, source, EvalMode::kHoldout, delta, "best-possible");
}

// One machine-readable record per evaluation, `key=value` fields separated
// by single spaces.
inline std::string format_report_line(const EvalReport& r) {
  std::ostringstream out;
  out.precision(17);
  out << "mode=" << to_string(r.mode) << " m=" << r.m;
  out << " mean_loss=";
  if (r.loss_defined) out << r.mean_loss; else out << "undefined";
  out << " ci=" << r.ci_halfwidth << " delta=" << r.delta
      << " equivalent_labels=" << r.equiv_labels
      << " wall_time=" << r.wall_time_sec << " model=" << r.model_config;
  return out.str();
}

}  // namespace condprob
