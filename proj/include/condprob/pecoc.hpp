#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "condprob/bounds.hpp"
#include "condprob/data.hpp"
#include "condprob/error.hpp"
#include "condprob/regressor.hpp"

namespace condprob {

// Square binary code of size 2^t built by the doubling recursion
//   C_2 = [[1,1],[1,0]],   C_2m = [[C_m, C_m], [C_m, 1-C_m]].
// Row 0 is all ones (the trivial subset), every other row has exactly half
// ones, and any two distinct columns differ in exactly half the rows.
// Column j is label slot j; row i defines the subset {j : C(i,j) = 1}.
class CodeMatrix {
 public:
  static CodeMatrix build(size_t n_labels) {
    if (n_labels < 2) throw ConfigError("code needs at least 2 label slots");
    uint32_t t = 1;
    while ((size_t{1} << t) < n_labels) t++;
    size_t size = size_t{1} << t;
    CodeMatrix c;
    c.t_ = t;
    c.size_ = size;
    c.bits_.assign(size * size, 0);
    c.bits_[0 * size + 0] = 1;
    c.bits_[0 * size + 1] = 1;
    c.bits_[1 * size + 0] = 1;
    for (size_t m = 2; m < size; m *= 2) {
      for (size_t i = 0; i < m; i++) {
        for (size_t j = 0; j < m; j++) {
          uint8_t v = c.bits_[i * size + j];
          c.bits_[i * size + (j + m)] = v;
          c.bits_[(i + m) * size + j] = v;
          c.bits_[(i + m) * size + (j + m)] = uint8_t(1 - v);
        }
      }
    }
    return c;
  }

  // Arbitrary square 0/1 matrix, for experimentation and tests. Built codes
  // are the only ones with the Hadamard guarantees.
  static CodeMatrix from_rows(const std::vector<std::vector<uint8_t>>& rows) {
    CodeMatrix c;
    c.size_ = rows.size();
    c.t_ = 0;
    c.bits_.reserve(c.size_ * c.size_);
    for (const auto& row : rows) {
      if (row.size() != c.size_) throw ConfigError("code matrix must be square");
      for (uint8_t v : row) c.bits_.push_back(v ? 1 : 0);
    }
    return c;
  }

  size_t size() const { return size_; }
  uint32_t t() const { return t_; }
  uint8_t at(size_t row, size_t col) const { return bits_[row * size_ + col]; }

 private:
  uint32_t t_ = 0;
  size_t size_ = 0;
  std::vector<uint8_t> bits_;
};

// Probability estimate for the label in column `col` given one output per
// row (output(i) for rows 1..size-1; row 0 is the trivial subset and always
// contributes 1):  2 * mean_i [ C(i,col) r_i + (1 - C(i,col)) (1 - r_i) ] - 1.
// The raw value can leave [0, 1] when the outputs are inexact.
template <class F>
double code_estimate(const CodeMatrix& code, size_t col, F&& output) {
  double acc = 1.0;  // trivial row
  for (size_t i = 1; i < code.size(); i++) {
    double r = output(i);
    acc += code.at(i, col) ? r : 1.0 - r;
  }
  return 2.0 * acc / double(code.size()) - 1.0;
}

// Flat PECOC: one regressor per non-trivial code row, each learning the
// probability that the true label's column is in its subset. Fixed
// capacity: label slots are assigned on first sight and run out.
class PecocModel {
 public:
  PecocModel(size_t n_labels, std::shared_ptr<WeightArena> arena)
      : code_(CodeMatrix::build(n_labels)), arena_(std::move(arena)) {
    rows_.reserve(code_.size() - 1);
    for (size_t i = 1; i < code_.size(); i++) rows_.push_back(arena_->create());
  }

  const CodeMatrix& code() const { return code_; }
  size_t slots() const { return code_.size(); }
  size_t label_count() const { return columns_.size(); }
  const WeightArena& arena() const { return *arena_; }
  std::shared_ptr<WeightArena> arena_ptr() const { return arena_; }
  RegressorId row_regressor(size_t row) const { return rows_[row - 1]; }

  bool contains(const LabelToken& y) const { return columns_.count(y) > 0; }

  size_t column_of(const LabelToken& y) const {
    auto it = columns_.find(y);
    if (it == columns_.end()) throw NotFoundError("unknown label '" + y + "'");
    return it->second;
  }

  // Trains every non-trivial row regressor with that row's membership bit
  // for y's column.
  void learn(const SparseVector& x, const LabelToken& y) {
    size_t col = assign_column(y);
    for (size_t i = 1; i < code_.size(); i++) {
      arena_->update(rows_[i - 1], x, double(code_.at(i, col)));
    }
  }

  // Raw estimate; may leave [0, 1]. Throws for labels without a column.
  double estimate_raw(const SparseVector& x, const LabelToken& y) const {
    size_t col = column_of(y);
    return code_estimate(code_, col, [&](size_t i) {
      return arena_->predict(rows_[i - 1], x);
    });
  }

  // Clamped estimate used for scoring; unseen labels score 0.
  double predict_prob(const SparseVector& x, const LabelToken& y) const {
    auto it = columns_.find(y);
    if (it == columns_.end()) return 0.0;
    double raw = code_estimate(code_, it->second, [&](size_t i) {
      return arena_->predict(rows_[i - 1], x);
    });
    return std::clamp(raw, 0.0, 1.0);
  }

  std::vector<std::pair<LabelToken, size_t>> column_assignments() const {
    std::vector<std::pair<LabelToken, size_t>> out(columns_.begin(),
                                                   columns_.end());
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.second < b.second; });
    return out;
  }

  void restore_column(const LabelToken& y, size_t col) {
    columns_[y] = col;
    next_column_ = std::max(next_column_, col + 1);
  }

 private:
  size_t assign_column(const LabelToken& y) {
    auto it = columns_.find(y);
    if (it != columns_.end()) return it->second;
    if (next_column_ >= code_.size()) {
      throw CapacityError("code has " + std::to_string(code_.size()) +
                          " slots; no room for label '" + y + "'");
    }
    return columns_[y] = next_column_++;
  }

  CodeMatrix code_;
  std::shared_ptr<WeightArena> arena_;
  std::vector<RegressorId> rows_;
  std::unordered_map<LabelToken, size_t> columns_;
  size_t next_column_ = 0;
};

// Single-estimate regret check: with per-row outputs r_i (row 0 pinned to
// the exact value 1), the squared error of the code estimate is bounded by
// 4 ((n-1)/n)^2 times the mean squared row error over the n-1 non-trivial
// rows. Row errors are measured against the true subset probabilities under
// `dist`; rows not containing y are complemented first, which leaves the
// squared error unchanged.
struct RegretCheck {
  double lhs = 0;
  double bound = 0;
  bool holds = false;
};

inline RegretCheck check_pecoc_regret(std::span<const double> dist,
                                      std::span<const double> outputs,
                                      size_t y) {
  const size_t n = dist.size();
  if (n < 2 || (n & (n - 1)) != 0) {
    throw ConfigError("distribution size must be a power of two >= 2");
  }
  if (outputs.size() != n - 1) {
    throw ConfigError("need one output per non-trivial row");
  }
  if (y >= n) throw ConfigError("label index out of range");
  double mass = 0;
  for (double p : dist) {
    if (!(p >= 0 && p <= 1)) throw ConfigError("distribution entries in [0,1]");
    mass += p;
  }
  if (std::abs(mass - 1.0) > 1e-9) throw ConfigError("distribution must sum to 1");

  CodeMatrix code = CodeMatrix::build(n);
  double est = code_estimate(code, y,
                             [&](size_t i) { return outputs[i - 1]; });
  RegretCheck r;
  r.lhs = (est - dist[y]) * (est - dist[y]);
  double mse = 0;
  for (size_t i = 1; i < n; i++) {
    double subset_p = 0;
    for (size_t j = 0; j < n; j++) {
      if (code.at(i, j)) subset_p += dist[j];
    }
    double err = outputs[i - 1] - subset_p;  // complement-invariant squared
    mse += err * err;
  }
  mse /= double(n - 1);
  double ratio = double(n - 1) / double(n);
  r.bound = 4.0 * ratio * ratio * mse;
  r.holds = leq_fp(r.lhs, r.bound);
  return r;
}

}  // namespace condprob
