#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "condprob/data.hpp"
#include "condprob/regressor.hpp"

namespace condprob {

// One-against-all: one regressor per label seen, every known regressor
// updated on every example (target 1 for the true label, 0 otherwise).
// Deliberately linear-time in the number of labels; the foil for the
// logarithmic-time methods.
class OvaModel {
 public:
  explicit OvaModel(std::shared_ptr<WeightArena> arena)
      : arena_(std::move(arena)) {}

  size_t label_count() const { return order_.size(); }
  const WeightArena& arena() const { return *arena_; }
  std::shared_ptr<WeightArena> arena_ptr() const { return arena_; }
  const std::vector<LabelToken>& labels() const { return order_; }
  bool contains(const LabelToken& y) const { return regressors_.count(y) > 0; }

  void learn(const SparseVector& x, const LabelToken& y) {
    if (!regressors_.count(y)) {
      regressors_.emplace(y, arena_->create());
      order_.push_back(y);
    }
    for (const LabelToken& c : order_) {
      arena_->update(regressors_[c], x, c == y ? 1.0 : 0.0);
    }
  }

  double predict_prob(const SparseVector& x, const LabelToken& y) const {
    auto it = regressors_.find(y);
    if (it == regressors_.end()) return 0.0;
    return arena_->predict(it->second, x);
  }

  void restore(const LabelToken& y, RegressorId id) {
    regressors_.emplace(y, id);
    order_.push_back(y);
  }

 private:
  std::shared_ptr<WeightArena> arena_;
  std::unordered_map<LabelToken, RegressorId> regressors_;
  std::vector<LabelToken> order_;
};

// Empirical-frequency predictor keyed by the fingerprint of the whole
// feature vector: counts[(context, y)] / totals[context]. Exact conditional
// frequencies of the training stream, no generalization across contexts.
class TableModel {
 public:
  void learn(const SparseVector& x, const LabelToken& y) {
    uint64_t c = context_key(x);
    counts_[c][y]++;
    totals_[c]++;
  }

  double predict_prob(const SparseVector& x, const LabelToken& y) const {
    uint64_t c = context_key(x);
    auto t = totals_.find(c);
    if (t == totals_.end()) return 0.0;
    auto row = counts_.find(c);
    auto cell = row->second.find(y);
    if (cell == row->second.end()) return 0.0;
    return double(cell->second) / double(t->second);
  }

  uint64_t total(const SparseVector& x) const {
    auto t = totals_.find(context_key(x));
    return t == totals_.end() ? 0 : t->second;
  }

  size_t context_count() const { return totals_.size(); }

  const std::unordered_map<uint64_t, std::unordered_map<LabelToken, uint64_t>>&
  counts() const {
    return counts_;
  }

  void restore(uint64_t context, const LabelToken& y, uint64_t count) {
    counts_[context][y] += count;
    totals_[context] += count;
  }

 private:
  std::unordered_map<uint64_t, std::unordered_map<LabelToken, uint64_t>> counts_;
  std::unordered_map<uint64_t, uint64_t> totals_;
};

}  // namespace condprob
