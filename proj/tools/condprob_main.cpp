// condprob: conditional probability estimation over large, growing label
// sets. Subcommands: train, eval, verify-bounds, synth.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include <CLI11.hpp>

#include "condprob/condprob.hpp"

namespace {

using namespace condprob;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitBoundViolation = 3;

struct RunConfig {
  std::string method = "cpt-online";
  std::string train_path, test_path, model_path, report_path;
  double alpha = 0.5;
  bool alpha_given = false;
  size_t k = 2;
  bool k_given = false;
  uint32_t bits = 18;
  double eta0 = 0.1;
  double decay = 0.0;
  size_t passes = 1;
  double delta = 0.05;
  uint64_t seed = 1;
  size_t label_capacity = 0;  // 0 = scan the training file
  bool frozen = false;
  bool with_best_possible = false;
};

// Bare model names resolve against CONDPROB_MODEL_DIR when it is set.
std::string resolve_model_path(const std::string& path) {
  const char* dir = std::getenv("CONDPROB_MODEL_DIR");
  if (dir && *dir && !path.empty() && path.find('/') == std::string::npos) {
    return std::string(dir) + "/" + path;
  }
  return path;
}

std::vector<LabelToken> scan_labels(const std::string& path, uint32_t bits,
                                    uint64_t seed) {
  FileSource src(path, bits, seed);
  std::vector<LabelToken> order;
  std::unordered_map<LabelToken, bool> seen;
  while (auto ex = src.next()) {
    if (seen.emplace(ex->y, true).second) order.push_back(ex->y);
  }
  return order;
}

std::string describe(const ModelHeader& h) {
  std::ostringstream out;
  out << "method=" << to_string(h.method) << " bits=" << h.bits
      << " eta0=" << h.eta0 << " decay=" << h.decay << " seed=" << h.hash_seed;
  if (h.method == Method::kCptOnline) out << " alpha=" << h.alpha;
  if (h.method == Method::kCpecoc) out << " k=" << h.k;
  return out.str();
}

void append_report(const std::string& path, const EvalReport& report) {
  if (path.empty()) return;
  std::ofstream out(path, std::ios::app);
  if (!out) throw ParseError("cannot write report file '" + path + "'");
  out << format_report_line(report) << '\n';
}

template <class Model, class TrainFn>
size_t stream_passes(const RunConfig& cfg, Model& model, TrainFn&& step) {
  size_t examples = 0;
  for (size_t pass = 0; pass < cfg.passes; pass++) {
    FileSource src(cfg.train_path, cfg.bits, cfg.seed);
    while (auto ex = src.next()) {
      step(model, *ex);
      examples++;
    }
  }
  return examples;
}

int run_train(const RunConfig& cfg) {
  Method method = method_from_string(cfg.method);
  if (cfg.alpha_given && method != Method::kCptOnline &&
      method != Method::kCptStatic) {
    throw ConfigError("--alpha only applies to cpt-online and cpt-static");
  }
  if (cfg.k_given && method != Method::kCpecoc) {
    throw ConfigError("--k only applies to cpecoc");
  }
  if (cfg.label_capacity && method != Method::kPecoc &&
      method != Method::kCpecoc) {
    throw ConfigError("--labels only applies to pecoc and cpecoc");
  }
  if (cfg.passes < 1) throw ConfigError("passes must be >= 1");

  ModelHeader header;
  header.method = method;
  header.hash_seed = cfg.seed;
  header.bits = cfg.bits;
  header.eta0 = cfg.eta0;
  header.decay = cfg.decay;
  header.alpha = method == Method::kCptBalanced ? 1.0 : cfg.alpha;
  header.k = uint32_t(cfg.k);
  LearnRate lr{cfg.eta0, cfg.decay};

  const std::string model_path = resolve_model_path(cfg.model_path);
  auto t0 = std::chrono::steady_clock::now();

  auto finish = [&](auto& model, const WeightArena* arena, size_t labels,
                    size_t examples) {
    double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    std::printf("trained %s\n", describe(header).c_str());
    std::printf("  examples: %zu (passes=%zu)\n", examples, cfg.passes);
    std::printf("  labels: %zu\n", labels);
    std::printf("  examples/sec: %.0f\n",
                secs > 0 ? double(examples) / secs : 0.0);
    if (arena && examples > 0) {
      std::printf("  regressor updates/example: %.2f\n",
                  double(arena->total_updates()) / double(examples));
    }
    if (!model_path.empty()) {
      save_model_file(model_path, header, model);
      std::printf("  model: %s\n", model_path.c_str());
    }
  };

  switch (method) {
    case Method::kCptOnline:
    case Method::kCptRandom:
    case Method::kCptBalanced: {
      auto arena = std::make_shared<WeightArena>(cfg.bits, lr);
      Tree tree(arena, header.alpha,
                method == Method::kCptRandom ? Tree::Rule::kRandomCoin
                                             : Tree::Rule::kObjective,
                cfg.seed);
      size_t n = stream_passes(
          cfg, tree, [](Tree& t, const Example& ex) { t.learn(ex.x, ex.y); });
      auto ds = tree.depth_stats();
      finish(tree, arena.get(), tree.label_count(), n);
      std::printf("  nodes: %zu  max depth: %zu  disagreements: %llu\n",
                  tree.node_count(), ds.max_depth,
                  (unsigned long long)tree.disagreements());
      break;
    }
    case Method::kCptStatic: {
      auto labels = scan_labels(cfg.train_path, cfg.bits, cfg.seed);
      if (labels.empty()) throw ParseError("empty training file");
      auto arena = std::make_shared<WeightArena>(cfg.bits, lr);
      Tree tree = Tree::build(labels, arena, header.alpha);
      size_t n = stream_passes(cfg, tree, [](Tree& t, const Example& ex) {
        t.train_seen(ex.x, ex.y);
      });
      auto ds = tree.depth_stats();
      finish(tree, arena.get(), tree.label_count(), n);
      std::printf("  nodes: %zu  max depth: %zu\n", tree.node_count(),
                  ds.max_depth);
      break;
    }
    case Method::kPecoc: {
      size_t capacity = cfg.label_capacity;
      if (capacity == 0) {
        capacity = scan_labels(cfg.train_path, cfg.bits, cfg.seed).size();
      }
      if (capacity < 2) throw ConfigError("pecoc needs at least 2 labels");
      auto arena = std::make_shared<WeightArena>(cfg.bits, lr);
      PecocModel model(capacity, arena);
      size_t n = stream_passes(cfg, model,
                               [](PecocModel& m, const Example& ex) {
                                 m.learn(ex.x, ex.y);
                               });
      finish(model, arena.get(), model.label_count(), n);
      std::printf("  code size: %zu\n", model.slots());
      break;
    }
    case Method::kCpecoc: {
      auto labels = scan_labels(cfg.train_path, cfg.bits, cfg.seed);
      for (size_t i = labels.size(); i < cfg.label_capacity; i++) {
        labels.push_back("__slot" + std::to_string(i));
      }
      if (labels.empty()) throw ParseError("empty training file");
      auto arena = std::make_shared<WeightArena>(cfg.bits, lr);
      KWayTree tree = KWayTree::build(labels, cfg.k, arena);
      size_t n = stream_passes(cfg, tree, [](KWayTree& t, const Example& ex) {
        t.learn(ex.x, ex.y);
      });
      finish(tree, arena.get(), tree.label_count(), n);
      std::printf("  k: %zu  levels: %u  leaf slots: %zu\n", tree.k(),
                  tree.levels(), tree.leaf_slots());
      break;
    }
    case Method::kOva: {
      auto arena = std::make_shared<WeightArena>(cfg.bits, lr);
      OvaModel model(arena);
      size_t n = stream_passes(cfg, model, [](OvaModel& m, const Example& ex) {
        m.learn(ex.x, ex.y);
      });
      finish(model, arena.get(), model.label_count(), n);
      break;
    }
    case Method::kTable: {
      TableModel model;
      size_t n = stream_passes(cfg, model,
                               [](TableModel& m, const Example& ex) {
                                 m.learn(ex.x, ex.y);
                               });
      finish(model, nullptr, model.context_count(), n);
      break;
    }
  }
  return kExitOk;
}

int run_eval(const RunConfig& cfg) {
  LoadedModel loaded = load_model_file(resolve_model_path(cfg.model_path));
  FileSource src(cfg.test_path, loaded.header.bits, loaded.header.hash_seed);
  EvalMode mode = cfg.frozen ? EvalMode::kHoldout : EvalMode::kProgressive;
  EvalReport report = std::visit(
      [&](auto& model) {
        return evaluate(model, src, mode, cfg.delta, describe(loaded.header));
      },
      loaded.model);
  std::printf("%s\n", format_report_line(report).c_str());
  if (report.loss_defined) {
    std::printf("squared loss %.4f +/- %.4f (delta=%.3g, m=%llu)\n",
                report.mean_loss, report.ci_halfwidth, report.delta,
                (unsigned long long)report.m);
    if (!std::isnan(report.equiv_labels)) {
      std::printf("equivalent labels %.2f\n", report.equiv_labels);
    }
  } else {
    std::printf("empty test stream; loss undefined\n");
  }
  append_report(cfg.report_path, report);
  if (cfg.with_best_possible) {
    FileSource again(cfg.test_path, loaded.header.bits,
                     loaded.header.hash_seed);
    EvalReport best = best_possible(again, cfg.delta);
    std::printf("%s\n", format_report_line(best).c_str());
    append_report(cfg.report_path, best);
  }
  return kExitOk;
}

struct VerifyStats {
  size_t suites = 0;
  size_t violations = 0;
  void suite(const char* name, size_t trials, size_t bad) {
    suites++;
    violations += bad;
    if (bad == 0) {
      std::printf("ok   %-16s (%zu checks)\n", name, trials);
    } else {
      std::printf("FAIL %-16s (%zu violations in %zu checks)\n", name, bad,
                  trials);
    }
  }
};

int run_verify(uint64_t seed, size_t trials, size_t curve_n) {
  if (trials == 0) {
    std::printf("warning: trials=0, suites pass vacuously\n");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  VerifyStats stats;

  {  // Product-estimate bounds on random factor lists.
    size_t bad = 0;
    for (size_t i = 0; i < trials; i++) {
      size_t d = 1 + rng() % 20;
      std::vector<double> p(d), q(d);
      for (size_t j = 0; j < d; j++) {
        p[j] = unit(rng);
        q[j] = unit(rng);
      }
      bad += !check_estimate_bounds(p, q).all_hold;
    }
    stats.suite("product-bounds", trials, bad);
  }

  {  // Code-estimate regret on random distributions and outputs.
    size_t total = 0, bad = 0;
    for (size_t n : {2u, 4u, 8u, 16u}) {
      for (size_t i = 0; i < trials / 4; i++) {
        std::vector<double> dist(n);
        double mass = 0;
        for (auto& v : dist) mass += v = unit(rng) + 1e-9;
        for (auto& v : dist) v /= mass;
        std::vector<double> out(n - 1);
        for (auto& v : out) v = unit(rng);
        bad += !check_pecoc_regret(dist, out, rng() % n).holds;
        total++;
      }
    }
    stats.suite("code-regret", total, bad);
  }

  {  // Composed k-way regret at n = 16.
    size_t total = 0, bad = 0;
    const size_t n = 16;
    for (size_t k : {2u, 4u, 16u}) {
      uint32_t levels = levels_for(n, k);
      for (size_t i = 0; i < trials / 3; i++) {
        std::vector<double> dist(n);
        double mass = 0;
        for (auto& v : dist) mass += v = unit(rng) + 1e-9;
        for (auto& v : dist) v /= mass;
        std::vector<std::vector<double>> outputs(levels,
                                                 std::vector<double>(k - 1));
        for (auto& level : outputs) {
          for (auto& v : level) v = unit(rng);
        }
        bad += !check_kway_regret(dist, outputs, rng() % n).holds;
        total++;
      }
    }
    stats.suite("kway-regret", total, bad);
  }

  {  // Online build: per-side caps, depth bound, disagreement accounting.
    size_t checks = 0, bad = 0;
    const size_t n = std::min<size_t>(std::max<size_t>(trials, 2), 20000);
    for (double alpha : {0.1, 0.5, 1.0}) {
      double k = kappa(alpha);
      for (bool constant_x : {false, true}) {
        auto arena = std::make_shared<WeightArena>(4, LearnRate{});
        Tree tree(arena, alpha);
        for (size_t i = 0; i < n; i++) {
          SparseVector x{{{kBiasIndex, 1.0}}};
          if (!constant_x) {
            x.entries.emplace_back(1 + rng() % 15, 1.0);
            canonicalize(x);
          }
          NodeId leaf = tree.insert_new(x, "l" + std::to_string(i));
          for (NodeId id = tree.node(leaf).parent; id != kNoNode;
               id = tree.node(id).parent) {
            const auto& nd = tree.node(id);
            uint64_t big = std::max(nd.leaves_left, nd.leaves_right);
            checks++;
            bad += double(big) >
                   subtree_cap(nd.leaves_left + nd.leaves_right, k) + 1e-9;
          }
        }
        auto ds = tree.depth_stats();
        checks += 2;
        bad += double(ds.max_depth) > depth_bound(n, alpha) + 1e-9;
        bad += tree.disagreements() > ds.total_leaf_depth;
      }
    }
    stats.suite("online-depth", checks, bad);
  }

  if (curve_n) {
    auto rows = tradeoff_curve(curve_n);
    size_t bad = 0;
    std::printf("k\tmultiplier\tregressors_per_example\n");
    for (size_t i = 0; i < rows.size(); i++) {
      std::printf("%zu\t%.6f\t%zu\n", rows[i].k, rows[i].multiplier,
                  rows[i].regressors_per_example);
      if (i > 0) bad += rows[i].multiplier >= rows[i - 1].multiplier;
    }
    stats.suite("tradeoff-curve", rows.size(), bad);
  }

  if (stats.violations > 0) {
    std::printf("bound violations detected\n");
    return kExitBoundViolation;
  }
  std::printf("all %zu suites passed\n", stats.suites);
  return kExitOk;
}

int run_synth(const SynthConfig& synth, const std::string& prefix,
              size_t examples, size_t test_examples) {
  GroundTruth truth = make_ground_truth(synth);
  {
    std::ofstream out(prefix + ".train");
    if (!out) throw ParseError("cannot write '" + prefix + ".train'");
    write_examples(out, truth, examples, synth.seed * 2654435761ull + 1);
  }
  {
    std::ofstream out(prefix + ".test");
    if (!out) throw ParseError("cannot write '" + prefix + ".test'");
    write_examples(out, truth, test_examples, synth.seed * 2654435761ull + 2);
  }
  {
    std::ofstream out(prefix + ".truth.json");
    if (!out) throw ParseError("cannot write '" + prefix + ".truth.json'");
    write_truth(out, truth);
  }
  std::printf(
      "wrote %s.{train,test,truth.json}: %zu contexts, %zu labels, "
      "%zu train / %zu test examples\n",
      prefix.c_str(), synth.contexts, synth.labels, examples, test_examples);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"conditional probability estimation over large label sets"};
  app.require_subcommand(1);

  RunConfig cfg;

  auto* train = app.add_subcommand("train", "train a model on a stream");
  train->add_option("--method", cfg.method,
                    "cpt-online|cpt-random|cpt-balanced|cpt-static|pecoc|"
                    "cpecoc|ova|table");
  train->add_option("--train", cfg.train_path, "training file")->required();
  train->add_option("--model", cfg.model_path, "output model file");
  train->add_option("--alpha", cfg.alpha, "routing trade-off in (0,1]")
      ->check(CLI::Range(1e-9, 1.0));
  train->add_option("--k", cfg.k, "fan-out for cpecoc (power of two)");
  train->add_option("--bits", cfg.bits, "hashed feature-space width")
      ->check(CLI::Range(1, 31));
  train->add_option("--eta0", cfg.eta0, "initial learning rate");
  train->add_option("--decay", cfg.decay, "learning-rate decay");
  train->add_option("--passes", cfg.passes, "passes over the training file");
  train->add_option("--seed", cfg.seed, "hash / coin seed");
  train->add_option("--labels", cfg.label_capacity,
                    "label capacity for pecoc/cpecoc (default: scan)");

  auto* eval = app.add_subcommand("eval", "score a model on a stream");
  eval->add_option("--model", cfg.model_path, "model file")->required();
  eval->add_option("--test", cfg.test_path, "test file")->required();
  eval->add_flag("--frozen", cfg.frozen,
                 "holdout scoring without continued training");
  eval->add_option("--delta", cfg.delta, "confidence parameter")
      ->check(CLI::Range(1e-9, 0.999999));
  eval->add_option("--report", cfg.report_path, "append a report record");
  eval->add_flag("--best-possible", cfg.with_best_possible,
                 "also report the test-set empirical-frequency reference");

  uint64_t verify_seed = 1;
  size_t verify_trials = 20000;
  size_t curve_n = 0;
  auto* verify = app.add_subcommand("verify-bounds",
                                    "randomized checks of every guarantee");
  verify->add_option("--seed", verify_seed, "rng seed");
  verify->add_option("--trials", verify_trials, "instances per suite");
  verify->add_option("--curve", curve_n,
                     "emit the computation/regret trade-off rows for n");

  SynthConfig synth;
  std::string synth_prefix = "synth";
  size_t synth_examples = 100000;
  size_t synth_test = 10000;
  auto* synth_cmd =
      app.add_subcommand("synth", "generate data with known ground truth");
  synth_cmd->add_option("--out", synth_prefix, "output path prefix");
  synth_cmd->add_option("--labels", synth.labels, "label count");
  synth_cmd->add_option("--contexts", synth.contexts, "context count");
  synth_cmd->add_option("--clusters", synth.clusters, "label/context clusters");
  synth_cmd->add_option("--support", synth.support, "labels per context");
  synth_cmd->add_option("--tokens", synth.tokens_per_context,
                        "feature tokens per context");
  synth_cmd->add_option("--shared-tokens", synth.shared_tokens,
                        "cluster-shared tokens per context");
  synth_cmd->add_option("--zipf", synth.zipf, "context popularity skew");
  synth_cmd->add_flag("--uniform-conditional", synth.uniform_conditional,
                      "uniform instead of geometric conditionals");
  synth_cmd->add_option("--examples", synth_examples, "training examples");
  synth_cmd->add_option("--test-examples", synth_test, "test examples");
  synth_cmd->add_option("--seed", synth.seed, "generator seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    cfg.alpha_given = train->count("--alpha") > 0;
    cfg.k_given = train->count("--k") > 0;
    if (train->parsed()) return run_train(cfg);
    if (eval->parsed()) return run_eval(cfg);
    if (verify->parsed())
      return run_verify(verify_seed, verify_trials, curve_n);
    if (synth_cmd->parsed()) {
      return run_synth(synth, synth_prefix, synth_examples, synth_test);
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kExitData;
  } catch (const NotFoundError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kExitData;
  } catch (const CapacityError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kExitData;
  }
  return kExitUsage;
}
