#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "condprob/bounds.hpp"
#include "condprob/data.hpp"
#include "condprob/error.hpp"
#include "condprob/pecoc.hpp"
#include "condprob/regressor.hpp"

namespace condprob {

inline bool is_power_of_two(size_t v) { return v >= 1 && (v & (v - 1)) == 0; }

// Exact log_k n for n a power of k.
inline uint32_t levels_for(size_t n, size_t k) {
  uint32_t levels = 0;
  size_t acc = 1;
  while (acc < n) {
    acc *= k;
    levels++;
  }
  if (acc != n) throw ConfigError("n must be a power of k");
  return levels;
}

// Squared-loss multiplier of the k-way construction on n labels:
//   4 (log_k n)^2 ((k-1)/k)^2.
// k = 2 recovers the binary tree's depth-squared multiplier; k = n gives
// the flat-code multiplier approaching 4.
inline double bound_ratio(size_t n, size_t k) {
  if (!is_power_of_two(k) || k < 2) throw ConfigError("k must be a power of two >= 2");
  double depth = levels_for(n, k);
  double ratio = double(k - 1) / double(k);
  return 4.0 * depth * depth * ratio * ratio;
}

struct CurveRow {
  size_t k;
  double multiplier;
  size_t regressors_per_example;  // (k-1) * log_k n
};

// Computation/regret trade-off rows for every valid k on n labels.
inline std::vector<CurveRow> tradeoff_curve(size_t n) {
  if (!is_power_of_two(n) || n < 2) throw ConfigError("n must be a power of two >= 2");
  std::vector<CurveRow> rows;
  for (size_t k = 2; k <= n; k *= 2) {
    size_t acc = 1;
    while (acc < n) acc *= k;
    if (acc != n) continue;  // n must be a power of k
    uint32_t d = levels_for(n, k);
    rows.push_back({k, bound_ratio(n, k), (k - 1) * d});
  }
  return rows;
}

// Complete k-way label tree with a (k-1)-regressor code estimator at every
// internal node, predicting the child subsets conditioned on reaching the
// node. Leaves hold labels in input order; slots past the label count are
// dummies. The label estimate is the product of clamped per-node child
// estimates along the path, so k = 2 behaves like the binary tree and a
// single level (k = n) is flat PECOC.
class KWayTree {
 public:
  static KWayTree build(const std::vector<LabelToken>& labels, size_t k,
                        std::shared_ptr<WeightArena> arena) {
    if (!is_power_of_two(k) || k < 2) {
      throw ConfigError("k must be a power of two >= 2");
    }
    if (labels.empty()) throw ConfigError("need at least one label");
    KWayTree t;
    t.k_ = k;
    t.levels_ = 1;
    t.n_slots_ = k;
    while (t.n_slots_ < labels.size()) {
      t.n_slots_ *= k;
      t.levels_++;
    }
    t.code_ = CodeMatrix::build(k);
    t.arena_ = std::move(arena);
    size_t internal = (t.n_slots_ - 1) / (k - 1);  // sum of k^l, l < levels
    t.node_rows_.resize(internal);
    for (auto& rows : t.node_rows_) {
      rows.reserve(k - 1);
      for (size_t i = 1; i < k; i++) rows.push_back(t.arena_->create());
    }
    t.leaf_labels_ = labels;
    for (size_t j = 0; j < labels.size(); j++) {
      if (!t.leaf_of_.emplace(labels[j], j).second) {
        throw ConfigError("duplicate label '" + labels[j] + "'");
      }
    }
    return t;
  }

  size_t k() const { return k_; }
  uint32_t levels() const { return levels_; }
  size_t leaf_slots() const { return n_slots_; }
  size_t internal_count() const { return node_rows_.size(); }
  size_t label_count() const { return leaf_labels_.size(); }
  const CodeMatrix& code() const { return code_; }
  const WeightArena& arena() const { return *arena_; }
  std::shared_ptr<WeightArena> arena_ptr() const { return arena_; }
  const std::vector<LabelToken>& leaf_labels() const { return leaf_labels_; }
  const std::vector<RegressorId>& node_regressors(size_t node) const {
    return node_rows_[node];
  }

  bool contains(const LabelToken& y) const { return leaf_of_.count(y) > 0; }

  // Internal-node index at `level` on the path to leaf `leaf`, plus the
  // child digit taken there. Nodes are numbered breadth-first.
  size_t node_at(uint32_t level, size_t leaf) const {
    size_t width = pow_k(levels_ - level);
    return (pow_k(level) - 1) / (k_ - 1) + leaf / width;
  }
  size_t child_digit(uint32_t level, size_t leaf) const {
    return (leaf / pow_k(levels_ - level - 1)) % k_;
  }

  // Trains each path node's code rows with the next child's column bits.
  // Unseen labels take over a dummy leaf on first sight, as the flat code
  // does with its columns; a full tree has no room left.
  void learn(const SparseVector& x, const LabelToken& y) {
    auto it = leaf_of_.find(y);
    size_t leaf;
    if (it != leaf_of_.end()) {
      leaf = it->second;
    } else {
      if (leaf_labels_.size() >= n_slots_) {
        throw CapacityError("tree has " + std::to_string(n_slots_) +
                            " leaf slots; no room for label '" + y + "'");
      }
      leaf = leaf_labels_.size();
      leaf_labels_.push_back(y);
      leaf_of_.emplace(y, leaf);
    }
    for (uint32_t level = 0; level < levels_; level++) {
      const auto& rows = node_rows_[node_at(level, leaf)];
      size_t digit = child_digit(level, leaf);
      for (size_t i = 1; i < k_; i++) {
        arena_->update(rows[i - 1], x, double(code_.at(i, digit)));
      }
    }
  }

  // Raw per-node estimate of one child; may leave [0, 1].
  double node_estimate_raw(size_t node, const SparseVector& x,
                           size_t child) const {
    const auto& rows = node_rows_[node];
    return code_estimate(code_, child, [&](size_t i) {
      return arena_->predict(rows[i - 1], x);
    });
  }

  // Product of clamped node estimates along the path; unseen labels and
  // dummy slots score 0.
  double predict_prob(const SparseVector& x, const LabelToken& y) const {
    auto it = leaf_of_.find(y);
    if (it == leaf_of_.end()) return 0.0;
    size_t leaf = it->second;
    double prob = 1.0;
    for (uint32_t level = 0; level < levels_; level++) {
      double est =
          node_estimate_raw(node_at(level, leaf), x, child_digit(level, leaf));
      prob *= std::clamp(est, 0.0, 1.0);
    }
    return prob;
  }

 private:
  size_t pow_k(uint32_t e) const {
    size_t v = 1;
    while (e--) v *= k_;
    return v;
  }

  size_t k_ = 0;
  uint32_t levels_ = 0;
  size_t n_slots_ = 0;
  CodeMatrix code_;
  std::shared_ptr<WeightArena> arena_;
  std::vector<std::vector<RegressorId>> node_rows_;
  std::vector<LabelToken> leaf_labels_;
  std::unordered_map<LabelToken, size_t> leaf_of_;
};

// Composed regret check on a complete k-way tree over `dist` (one entry
// per leaf, all positive so every node conditional is defined). `outputs`
// holds, for each level on the path to leaf y, the k-1 non-trivial row
// outputs at that node. The composed estimate clamps each node estimate
// into [0, 1] before multiplying (clamping never moves an estimate away
// from its true conditional); `clamped` counts how often that fired.
struct Thm2Check {
  double lhs = 0;
  double bound = 0;
  bool holds = false;
  size_t clamped = 0;
};

inline Thm2Check check_kway_regret(
    std::span<const double> dist,
    const std::vector<std::vector<double>>& outputs, size_t y) {
  const size_t n = dist.size();
  const uint32_t levels = static_cast<uint32_t>(outputs.size());
  if (levels == 0) throw ConfigError("need at least one level of outputs");
  const size_t k = outputs[0].size() + 1;
  if (!is_power_of_two(k) || k < 2) throw ConfigError("k must be a power of two >= 2");
  if (levels_for(n, k) != levels) throw ConfigError("level count must be log_k n");
  if (y >= n) throw ConfigError("label index out of range");
  double mass = 0;
  for (double p : dist) {
    if (!(p > 0)) throw ConfigError("distribution entries must be positive");
    mass += p;
  }
  if (std::abs(mass - 1.0) > 1e-9) throw ConfigError("distribution must sum to 1");

  CodeMatrix code = CodeMatrix::build(k);
  Thm2Check r;
  double est = 1.0;
  double sq_err_sum = 0;
  size_t width = n;  // leaves under a node at the current level
  size_t base = 0;   // first leaf under that node
  for (uint32_t level = 0; level < levels; level++) {
    if (outputs[level].size() != k - 1) {
      throw ConfigError("each level needs k-1 outputs");
    }
    size_t child_width = width / k;
    size_t digit = (y - base) / child_width;
    // Child masses conditioned on reaching this node.
    double node_mass = 0;
    for (size_t j = base; j < base + width; j++) node_mass += dist[j];
    std::vector<double> child_cond(k);
    for (size_t c = 0; c < k; c++) {
      double m = 0;
      for (size_t j = 0; j < child_width; j++) m += dist[base + c * child_width + j];
      child_cond[c] = m / node_mass;
    }
    for (size_t i = 1; i < k; i++) {
      double subset_p = 0;
      for (size_t c = 0; c < k; c++) {
        if (code.at(i, c)) subset_p += child_cond[c];
      }
      double err = outputs[level][i - 1] - subset_p;
      sq_err_sum += err * err;
    }
    double node_est = code_estimate(
        code, digit, [&](size_t i) { return outputs[level][i - 1]; });
    double clamped = std::clamp(node_est, 0.0, 1.0);
    if (clamped != node_est) r.clamped++;
    est *= clamped;
    base += digit * child_width;
    width = child_width;
  }
  double p_y = dist[y];
  // Marginal of y given the chain rule over positive-mass nodes.
  r.lhs = (est - p_y) * (est - p_y);
  double eps2 = sq_err_sum / double((k - 1) * levels);
  r.bound = bound_ratio(n, k) * eps2;
  r.holds = leq_fp(r.lhs, r.bound);
  return r;
}

}  // namespace condprob
