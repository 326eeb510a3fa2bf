#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "condprob/error.hpp"
#include "condprob/hashing.hpp"

namespace condprob {

// External label name. Opaque text: never parsed as a number, so the label
// set can grow without any advance knowledge of its size.
using LabelToken = std::string;

// Hashed sparse feature vector. Canonical form: entries sorted by strictly
// increasing index, duplicate indices summed, all values finite. Entry
// (kBiasIndex, 1.0) is the constant feature.
struct SparseVector {
  std::vector<std::pair<uint64_t, double>> entries;
};

struct Example {
  SparseVector x;
  LabelToken y;
};

// Sorts and merges duplicate indices in place. Idempotent.
inline void canonicalize(SparseVector& v) {
  auto& e = v.entries;
  std::sort(e.begin(), e.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  size_t out = 0;
  for (size_t i = 0; i < e.size();) {
    uint64_t idx = e[i].first;
    double sum = 0;
    while (i < e.size() && e[i].first == idx) sum += e[i++].second;
    e[out++] = {idx, sum};
  }
  e.resize(out);
}

inline bool is_canonical(const SparseVector& v, uint32_t bits) {
  const uint64_t limit = uint64_t{1} << bits;
  uint64_t prev = 0;
  bool first = true;
  for (const auto& [idx, val] : v.entries) {
    if (!first && idx <= prev) return false;
    if (idx >= limit || !std::isfinite(val)) return false;
    prev = idx;
    first = false;
  }
  return true;
}

// 64-bit fingerprint of a canonical vector (indices and values). Used as the
// context key of the table baseline.
inline uint64_t context_key(const SparseVector& v) {
  uint64_t h = 0x2545f4914f6cdd1dull;
  for (const auto& [idx, val] : v.entries) {
    h = mix64(h ^ mix64(idx));
    h = mix64(h ^ std::bit_cast<uint64_t>(val));
  }
  return h;
}

namespace detail {

inline bool parse_value(std::string_view text, double& out) {
  try {
    size_t used = 0;
    out = std::stod(std::string(text), &used);
    return used == text.size();
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace detail

// Parses one `<label> <feat>[:<value>] ...` line into an Example. Features
// are hashed into [1, 2^bits); the bias entry is appended; duplicate hashed
// indices have their values summed. Pure in (line, bits, seed).
inline Example parse_example(std::string_view line, uint32_t bits,
                             uint64_t seed = kDefaultHashSeed,
                             size_t line_no = 0) {
  Example ex;
  size_t pos = 0;
  auto next_token = [&]() -> std::string_view {
    while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) pos++;
    size_t start = pos;
    while (pos < line.size() && line[pos] != ' ' && line[pos] != '\t') pos++;
    return line.substr(start, pos - start);
  };

  std::string_view label = next_token();
  if (label.empty()) throw ParseError("missing label", line_no);
  ex.y = LabelToken(label);

  for (std::string_view tok = next_token(); !tok.empty(); tok = next_token()) {
    double value = 1.0;
    std::string_view name = tok;
    if (size_t colon = tok.rfind(':'); colon != std::string_view::npos) {
      name = tok.substr(0, colon);
      std::string_view text = tok.substr(colon + 1);
      if (name.empty() || text.empty() || !detail::parse_value(text, value)) {
        throw ParseError("malformed feature '" + std::string(tok) + "'",
                         line_no);
      }
    }
    if (!std::isfinite(value)) {
      throw ParseError("non-finite value in '" + std::string(tok) + "'",
                       line_no);
    }
    ex.x.entries.emplace_back(hash_feature(name, bits, seed), value);
  }
  ex.x.entries.emplace_back(kBiasIndex, 1.0);
  canonicalize(ex.x);
  return ex;
}

// Streams examples from a file, one per line, UTF-8. Lines whose first
// character is '#' are comments. Parse errors carry the 1-based line number.
class FileSource {
 public:
  FileSource(const std::string& path, uint32_t bits,
             uint64_t seed = kDefaultHashSeed)
      : in_(path), path_(path), bits_(bits), seed_(seed) {
    if (!in_) throw ParseError("cannot open '" + path + "'");
  }

  std::optional<Example> next() {
    std::string line;
    while (std::getline(in_, line)) {
      line_no_++;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty() && line.front() == '#') continue;
      return parse_example(line, bits_, seed_, line_no_);
    }
    return std::nullopt;
  }

  void rewind() {
    in_.clear();
    in_.seekg(0);
    line_no_ = 0;
  }

  size_t line_no() const { return line_no_; }

 private:
  std::ifstream in_;
  std::string path_;
  uint32_t bits_;
  uint64_t seed_;
  size_t line_no_ = 0;
};

// In-memory example source with the same interface.
class VectorSource {
 public:
  explicit VectorSource(std::vector<Example> examples)
      : examples_(std::move(examples)) {}

  std::optional<Example> next() {
    if (pos_ >= examples_.size()) return std::nullopt;
    return examples_[pos_++];
  }

  void rewind() { pos_ = 0; }

 private:
  std::vector<Example> examples_;
  size_t pos_ = 0;
};

}  // namespace condprob
