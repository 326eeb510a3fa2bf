#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <numeric>
#include <ostream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "condprob/data.hpp"
#include "condprob/error.hpp"

namespace condprob {

// Finitely supported P(x) * P(y|x) mixture with the ground truth kept
// alongside the sampled examples, so the true squared-loss regret is
// computable. Contexts carry cluster-shared tokens plus context-unique
// tokens; conditionals are supported on a handful of labels from the
// context's cluster.
struct SynthConfig {
  size_t labels = 1000;
  size_t contexts = 100;
  size_t clusters = 10;
  size_t support = 8;             // labels with positive mass per context
  size_t tokens_per_context = 10;
  size_t shared_tokens = 4;       // of tokens_per_context, from the cluster
  double zipf = 1.0;              // context popularity skew; 0 = uniform
  bool uniform_conditional = false;  // else geometric weights
  uint64_t seed = 1;
};

struct ContextSpec {
  double p = 0;                               // P(context)
  std::vector<std::string> tokens;            // feature tokens, value 1
  std::vector<std::pair<LabelToken, double>> labels;  // P(y | context)
};

struct GroundTruth {
  uint64_t seed = 0;
  std::vector<ContextSpec> contexts;
};

inline GroundTruth make_ground_truth(const SynthConfig& cfg) {
  if (cfg.labels < 1 || cfg.contexts < 1 || cfg.clusters < 1 ||
      cfg.support < 1 || cfg.tokens_per_context < 1 ||
      cfg.shared_tokens > cfg.tokens_per_context || cfg.zipf < 0 ||
      cfg.clusters > cfg.labels) {
    throw ConfigError("invalid synthetic-data configuration");
  }
  GroundTruth truth;
  truth.seed = cfg.seed;
  truth.contexts.resize(cfg.contexts);

  // Popularity: p_i proportional to 1 / (i+1)^zipf.
  double mass = 0;
  for (size_t i = 0; i < cfg.contexts; i++) {
    truth.contexts[i].p = 1.0 / std::pow(double(i + 1), cfg.zipf);
    mass += truth.contexts[i].p;
  }
  for (auto& ctx : truth.contexts) ctx.p /= mass;

  std::mt19937_64 rng(cfg.seed);
  for (size_t i = 0; i < cfg.contexts; i++) {
    ContextSpec& ctx = truth.contexts[i];
    size_t cluster = i % cfg.clusters;
    for (size_t t = 0; t < cfg.shared_tokens; t++) {
      ctx.tokens.push_back("g" + std::to_string(cluster) + "_t" +
                           std::to_string(t));
    }
    for (size_t t = cfg.shared_tokens; t < cfg.tokens_per_context; t++) {
      ctx.tokens.push_back("u" + std::to_string(i) + "_t" + std::to_string(t));
    }

    // Support: distinct labels from the cluster's pool {j : j % clusters ==
    // cluster}, weighted geometrically unless uniform.
    size_t pool = cfg.labels / cfg.clusters +
                  (cluster < cfg.labels % cfg.clusters ? 1 : 0);
    size_t take = std::min(cfg.support, pool);
    std::vector<size_t> picks;
    picks.reserve(take);
    while (picks.size() < take) {
      size_t offset = rng() % pool;
      size_t label = cluster + offset * cfg.clusters;
      bool dup = false;
      for (size_t p : picks) dup |= p == label;
      if (!dup) picks.push_back(label);
    }
    double total = 0;
    for (size_t r = 0; r < take; r++) {
      double w = cfg.uniform_conditional ? 1.0 : std::pow(0.5, double(r));
      total += w;
      ctx.labels.emplace_back("L" + std::to_string(picks[r]), w);
    }
    for (auto& [label, w] : ctx.labels) w /= total;
  }
  return truth;
}

inline SparseVector context_vector(const ContextSpec& ctx, uint32_t bits,
                                   uint64_t hash_seed = kDefaultHashSeed) {
  SparseVector x;
  for (const auto& tok : ctx.tokens) {
    x.entries.emplace_back(hash_feature(tok, bits, hash_seed), 1.0);
  }
  x.entries.emplace_back(kBiasIndex, 1.0);
  canonicalize(x);
  return x;
}

// Samples `count` examples in the line format, one per line.
inline void write_examples(std::ostream& out, const GroundTruth& truth,
                           size_t count, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> ctx_cdf;
  ctx_cdf.reserve(truth.contexts.size());
  double acc = 0;
  for (const auto& ctx : truth.contexts) ctx_cdf.push_back(acc += ctx.p);

  for (size_t i = 0; i < count; i++) {
    double u = unit(rng) * acc;
    size_t c = size_t(std::lower_bound(ctx_cdf.begin(), ctx_cdf.end(), u) -
                      ctx_cdf.begin());
    if (c >= truth.contexts.size()) c = truth.contexts.size() - 1;
    const ContextSpec& ctx = truth.contexts[c];
    double v = unit(rng);
    size_t pick = ctx.labels.size() - 1;
    double run = 0;
    for (size_t j = 0; j < ctx.labels.size(); j++) {
      run += ctx.labels[j].second;
      if (v <= run) {
        pick = j;
        break;
      }
    }
    out << ctx.labels[pick].first;
    for (const auto& tok : ctx.tokens) out << ' ' << tok;
    out << '\n';
  }
}

inline void write_truth(std::ostream& out, const GroundTruth& truth) {
  nlohmann::json j;
  j["seed"] = truth.seed;
  auto& contexts = j["contexts"] = nlohmann::json::array();
  for (const auto& ctx : truth.contexts) {
    nlohmann::json c;
    c["p"] = ctx.p;
    c["tokens"] = ctx.tokens;
    auto& labels = c["labels"] = nlohmann::json::array();
    for (const auto& [label, p] : ctx.labels) {
      labels.push_back({label, p});
    }
    contexts.push_back(std::move(c));
  }
  out << j.dump() << '\n';
}

inline GroundTruth read_truth(std::istream& in) {
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad ground-truth file: ") + e.what());
  }
  GroundTruth truth;
  truth.seed = j.at("seed").get<uint64_t>();
  for (const auto& c : j.at("contexts")) {
    ContextSpec ctx;
    ctx.p = c.at("p").get<double>();
    ctx.tokens = c.at("tokens").get<std::vector<std::string>>();
    for (const auto& cell : c.at("labels")) {
      ctx.labels.emplace_back(cell.at(0).get<std::string>(),
                              cell.at(1).get<double>());
    }
    truth.contexts.push_back(std::move(ctx));
  }
  return truth;
}

// True expected squared regret E_{(x,y)~P} (P(y|x) - Q(y|x))^2, computable
// because the mixture is finitely supported. `predict` receives the hashed
// context vector and the label.
inline double true_regret(
    const GroundTruth& truth, uint32_t bits, uint64_t hash_seed,
    const std::function<double(const SparseVector&, const LabelToken&)>&
        predict) {
  double regret = 0;
  for (const auto& ctx : truth.contexts) {
    SparseVector x = context_vector(ctx, bits, hash_seed);
    for (const auto& [label, p] : ctx.labels) {
      double d = p - predict(x, label);
      regret += ctx.p * p * d * d;
    }
  }
  return regret;
}

}  // namespace condprob
