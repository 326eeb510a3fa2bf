#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "condprob/data.hpp"
#include "condprob/error.hpp"

namespace condprob {

using RegressorId = uint32_t;

// Learning-rate schedule for stochastic gradient descent on squared loss:
// eta_t = eta0 / (1 + decay * t), t counting completed updates.
struct LearnRate {
  double eta0 = 0.1;
  double decay = 0.0;
};

// Owns the weights of every regressor in one model. Each regressor is a
// dense slice of 2^bits doubles so that it can be cloned (the online tree
// duplicates a node's regressor when it splits a leaf). A fresh regressor
// has all feature weights zero and the bias weight at 0.5, so it predicts
// 0.5 on any input carrying the constant feature.
//
// predict is const and safe under concurrent readers; update requires
// exclusive access to the regressor (training is single-writer).
class WeightArena {
 public:
  explicit WeightArena(uint32_t bits, LearnRate lr = {})
      : bits_(bits), dim_(uint64_t{1} << bits), lr_(lr) {
    if (bits < 1 || bits > 31) {
      throw ConfigError("weight arena bits must be in [1, 31]");
    }
  }

  uint32_t bits() const { return bits_; }
  size_t dim() const { return dim_; }
  const LearnRate& learn_rate() const { return lr_; }
  size_t regressor_count() const { return counts_.size(); }

  RegressorId create() {
    RegressorId id = static_cast<RegressorId>(counts_.size());
    weights_.resize(weights_.size() + dim_, 0.0);
    weights_[size_t{id} * dim_ + kBiasIndex] = 0.5;
    counts_.push_back(0);
    return id;
  }

  RegressorId clone(RegressorId src) {
    RegressorId id = static_cast<RegressorId>(counts_.size());
    weights_.resize(weights_.size() + dim_, 0.0);
    std::copy_n(weights_.begin() + static_cast<ptrdiff_t>(size_t{src} * dim_),
                dim_,
                weights_.begin() + static_cast<ptrdiff_t>(size_t{id} * dim_));
    counts_.push_back(counts_[src]);
    return id;
  }

  // clamp(w . x, 0, 1)
  double predict(RegressorId id, const SparseVector& x) const {
    const double* w = &weights_[size_t{id} * dim_];
    double dot = 0.0;
    for (const auto& [idx, val] : x.entries) dot += w[idx] * val;
    return std::clamp(dot, 0.0, 1.0);
  }

  // w += eta_t * (target - predict(x)) * x
  void update(RegressorId id, const SparseVector& x, double target) {
    const double eta = lr_.eta0 / (1.0 + lr_.decay * double(counts_[id]));
    const double step = eta * (target - predict(id, x));
    double* w = &weights_[size_t{id} * dim_];
    for (const auto& [idx, val] : x.entries) w[idx] += step * val;
    counts_[id]++;
    total_updates_++;
  }

  uint64_t update_count(RegressorId id) const { return counts_[id]; }
  void set_update_count(RegressorId id, uint64_t n) { counts_[id] = n; }

  // Cumulative update calls across all regressors; lets callers count how
  // many regressors an algorithm touches per example.
  uint64_t total_updates() const { return total_updates_; }

  std::span<double> weights(RegressorId id) {
    return {&weights_[size_t{id} * dim_], dim_};
  }
  std::span<const double> weights(RegressorId id) const {
    return {&weights_[size_t{id} * dim_], dim_};
  }

 private:
  uint32_t bits_;
  size_t dim_;
  LearnRate lr_;
  std::vector<double> weights_;
  std::vector<uint64_t> counts_;
  uint64_t total_updates_ = 0;
};

}  // namespace condprob
