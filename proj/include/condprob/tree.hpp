#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "condprob/data.hpp"
#include "condprob/error.hpp"
#include "condprob/hashing.hpp"
#include "condprob/regressor.hpp"

namespace condprob {

using NodeId = uint32_t;
inline constexpr NodeId kNoNode = UINT32_MAX;

// Direction convention throughout: 1 = right, 0 = left. A node regressor
// estimates the probability that the true label lies in its RIGHT subtree,
// so an output above 1/2 favors the right child.
struct PathStep {
  NodeId node;
  int direction;  // 0 left, 1 right
};

// Routing score for inserting a new label at a node with prediction p and
// L / R leaves on each side. Positive means route right: the first term
// follows the regressor's preference, the second pushes toward the lighter
// subtree. alpha = 1 ignores the regressor entirely, alpha -> 0 ignores
// balance. Ties (score exactly 0) route left.
inline double obj(double p, uint64_t leaves_left, uint64_t leaves_right,
                  double alpha) {
  return (1.0 - alpha) * 2.0 * (p - 0.5) +
         alpha * std::log2(double(leaves_left) / double(leaves_right));
}

// Maximum asymptotic fraction of leaves on either side of any node built
// with a given alpha: 1/2 at alpha = 1, approaching 1 as alpha -> 0.
inline double kappa(double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw ConfigError("alpha must lie in (0, 1]");
  }
  return 1.0 / (1.0 + std::exp2(1.0 - 1.0 / alpha));
}

// Leaf-count cap per side after any insertion sequence. The cap is attained
// with equality at routing ties (e.g. the third leaf under any node at
// alpha = 1), so callers should test with <=.
inline double subtree_cap(uint64_t n_leaves, double kappa_value) {
  return kappa_value * double(n_leaves) + (1.0 - kappa_value);
}

// Depth guarantee for trees built with a given alpha on n labels.
inline double depth_bound(size_t n_labels, double alpha) {
  return std::log(double(n_labels)) / std::log(1.0 / kappa(alpha)) + 2.0;
}

inline double binary_entropy(double k) {
  if (k <= 0.0 || k >= 1.0) throw ConfigError("entropy argument in (0,1)");
  return -k * std::log(k) - (1.0 - k) * std::log(1.0 - k);
}

// Total-leaf-depth bound n log n / H(kappa) for trees in which every node
// satisfies L, R <= kappa * N. Natural logs on both sides.
inline double total_depth_bound(size_t n_labels, double kappa_value) {
  return double(n_labels) * std::log(double(n_labels)) /
         binary_entropy(kappa_value);
}

struct DepthStats {
  size_t max_depth = 0;
  uint64_t total_leaf_depth = 0;
  // (L, R, N) per internal node.
  std::vector<std::array<uint64_t, 3>> node_loads;
};

// Binary label tree with one regressor per node (leaves included). Leaves
// correspond one-to-one with the labels seen. The probability estimate for
// a label multiplies, along its root-to-leaf path, the regressor output
// when stepping right and its complement when stepping left.
class Tree {
 public:
  // How insert_new picks a direction at internal nodes: the objective rule
  // above, or a seeded fair coin (the "random tree" baseline). The balanced
  // variant is the objective rule with alpha = 1.
  enum class Rule : uint8_t { kObjective = 0, kRandomCoin = 1 };

  struct Node {
    NodeId parent = kNoNode;
    NodeId left = kNoNode;
    NodeId right = kNoNode;
    RegressorId reg = 0;
    uint64_t leaves_left = 0;
    uint64_t leaves_right = 0;
    LabelToken label;  // leaves only
    bool is_leaf() const { return left == kNoNode; }
  };

  Tree(std::shared_ptr<WeightArena> arena, double alpha,
       Rule rule = Rule::kObjective, uint64_t coin_seed = 0)
      : arena_(std::move(arena)),
        alpha_(alpha),
        kappa_(kappa(alpha)),
        rule_(rule),
        coin_seed_(coin_seed),
        coin_(coin_seed) {}

  // Builds a fixed tree over the given labels. left_count(n) picks how many
  // of n leaves go to the left subtree (in [1, n-1]); the default splits
  // evenly. Labels keep their input order left to right.
  static Tree build(const std::vector<LabelToken>& labels,
                    std::shared_ptr<WeightArena> arena, double alpha,
                    const std::function<size_t(size_t)>& left_count = nullptr) {
    if (labels.empty()) throw ConfigError("cannot build a tree with no labels");
    Tree t(std::move(arena), alpha);
    struct Span {
      size_t lo, hi;  // half-open label range
      NodeId parent;
      bool as_left;
    };
    std::vector<Span> stack{{0, labels.size(), kNoNode, false}};
    while (!stack.empty()) {
      auto [lo, hi, parent, as_left] = stack.back();
      stack.pop_back();
      size_t n = hi - lo;
      NodeId id = t.new_node(parent);
      if (parent != kNoNode) {
        (as_left ? t.nodes_[parent].left : t.nodes_[parent].right) = id;
      } else {
        t.root_ = id;
      }
      if (n == 1) {
        t.set_leaf_label(id, labels[lo]);
        continue;
      }
      size_t nl = left_count ? left_count(n) : (n + 1) / 2;
      if (nl < 1 || nl >= n) throw ConfigError("left_count out of range");
      t.nodes_[id].leaves_left = nl;
      t.nodes_[id].leaves_right = n - nl;
      // Push right first so the left span is processed first (stable ids).
      stack.push_back({lo + nl, hi, id, false});
      stack.push_back({lo, lo + nl, id, true});
    }
    return t;
  }

  const WeightArena& arena() const { return *arena_; }
  WeightArena& arena() { return *arena_; }
  std::shared_ptr<WeightArena> arena_ptr() const { return arena_; }
  double alpha() const { return alpha_; }
  Rule rule() const { return rule_; }
  uint64_t coin_seed() const { return coin_seed_; }
  uint64_t coins_drawn() const { return coins_drawn_; }
  uint64_t disagreements() const { return disagreements_; }
  size_t label_count() const { return label_index_.size(); }
  size_t node_count() const { return nodes_.size(); }
  NodeId root() const { return root_; }
  const Node& node(NodeId id) const { return nodes_[id]; }
  const std::vector<Node>& nodes() const { return nodes_; }
  bool contains(const LabelToken& y) const { return label_index_.count(y) > 0; }

  NodeId leaf_of(const LabelToken& y) const {
    auto it = label_index_.find(y);
    if (it == label_index_.end()) throw NotFoundError("unknown label '" + y + "'");
    return it->second;
  }

  // Marks the tree read-only; predict_q is then safe for any number of
  // concurrent readers.
  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }

  // Root-to-leaf internal-node steps for a seen label. Empty when the root
  // itself is the leaf.
  std::vector<PathStep> path(const LabelToken& y) const {
    NodeId id = leaf_of(y);
    std::vector<PathStep> steps;
    while (nodes_[id].parent != kNoNode) {
      NodeId up = nodes_[id].parent;
      steps.push_back({up, nodes_[up].right == id ? 1 : 0});
      id = up;
    }
    std::reverse(steps.begin(), steps.end());
    return steps;
  }

  // Product along the path of node_q(i) for right steps and 1 - node_q(i)
  // for left steps; node_q supplies each node's right-subtree probability.
  // Unseen labels score 0 (an empty tree has no paths at all).
  template <class F>
  double path_product(const LabelToken& y, F&& node_q) const {
    auto it = label_index_.find(y);
    if (it == label_index_.end()) return 0.0;
    double prob = 1.0;
    NodeId id = it->second;
    // Walk up; the product is order-insensitive.
    while (nodes_[id].parent != kNoNode) {
      NodeId up = nodes_[id].parent;
      double q = node_q(up);
      prob *= (nodes_[up].right == id) ? q : 1.0 - q;
      id = up;
    }
    return prob;
  }

  double predict_q(const SparseVector& x, const LabelToken& y) const {
    return path_product(
        y, [&](NodeId id) { return arena_->predict(nodes_[id].reg, x); });
  }

  // Estimator-contract name shared by every model type.
  double predict_prob(const SparseVector& x, const LabelToken& y) const {
    return predict_q(x, y);
  }

  // One training step for a label already in the tree: every path regressor
  // learns its step direction and the leaf regressor learns 0. Structure
  // and leaf counts do not change.
  void train_seen(const SparseVector& x, const LabelToken& y) {
    check_writable();
    NodeId leaf = leaf_of(y);
    for (NodeId id = leaf; nodes_[id].parent != kNoNode;) {
      NodeId up = nodes_[id].parent;
      arena_->update(nodes_[up].reg, x, nodes_[up].right == id ? 1.0 : 0.0);
      id = up;
    }
    arena_->update(nodes_[leaf].reg, x, 0.0);
  }

  // Inserts an unseen label. Descends by the routing rule, training each
  // node with the chosen direction and bumping its leaf count; the reached
  // leaf splits into [copy of itself | new label], the copy keeping a clone
  // of the regressor, and the split node then learns (x, 1). Counts one
  // disagreement per node routed against the regressor's preference.
  NodeId insert_new(const SparseVector& x, const LabelToken& y) {
    check_writable();
    if (label_index_.count(y)) {
      throw ConfigError("label '" + y + "' already present");
    }
    if (root_ == kNoNode) {
      root_ = new_node(kNoNode);
      set_leaf_label(root_, y);
      return root_;
    }
    NodeId id = root_;
    while (!nodes_[id].is_leaf()) {
      double p = arena_->predict(nodes_[id].reg, x);
      int c;
      if (rule_ == Rule::kRandomCoin) {
        c = int(coin_() & 1);
        coins_drawn_++;
      } else {
        c = obj(p, nodes_[id].leaves_left, nodes_[id].leaves_right, alpha_) > 0
                ? 1
                : 0;
      }
      if ((p > 0.5 && c == 0) || (p <= 0.5 && c == 1)) disagreements_++;
      arena_->update(nodes_[id].reg, x, double(c));
      if (c == 1) {
        nodes_[id].leaves_right++;
        id = nodes_[id].right;
      } else {
        nodes_[id].leaves_left++;
        id = nodes_[id].left;
      }
    }
    // Split: the old leaf's label and a clone of its regressor move to the
    // new left child; the new label goes right with a fresh regressor
    // trained once on (x, 0); the node itself then learns (x, 1).
    NodeId left = raw_node(id);
    nodes_[left].reg = arena_->clone(nodes_[id].reg);
    set_leaf_label(left, nodes_[id].label);
    NodeId right = new_node(id);
    set_leaf_label(right, y);
    arena_->update(nodes_[right].reg, x, 0.0);

    nodes_[id].label.clear();
    nodes_[id].left = left;
    nodes_[id].right = right;
    nodes_[id].leaves_left = 1;
    nodes_[id].leaves_right = 1;
    arena_->update(nodes_[id].reg, x, 1.0);
    return right;
  }

  // Online training step: route to train_seen or insert_new.
  void learn(const SparseVector& x, const LabelToken& y) {
    if (label_index_.count(y)) {
      train_seen(x, y);
    } else {
      insert_new(x, y);
    }
  }

  DepthStats depth_stats() const {
    DepthStats s;
    if (root_ == kNoNode) return s;
    std::vector<std::pair<NodeId, size_t>> stack{{root_, 0}};
    while (!stack.empty()) {
      auto [id, depth] = stack.back();
      stack.pop_back();
      const Node& n = nodes_[id];
      if (n.is_leaf()) {
        s.max_depth = std::max(s.max_depth, depth);
        s.total_leaf_depth += depth;
        continue;
      }
      s.node_loads.push_back(
          {n.leaves_left, n.leaves_right, n.leaves_left + n.leaves_right});
      stack.push_back({n.left, depth + 1});
      stack.push_back({n.right, depth + 1});
    }
    return s;
  }

  // Fingerprint of structure, labels and counts (not weights); unchanged by
  // train_seen.
  uint64_t structure_signature() const {
    uint64_t h = mix64(root_ == kNoNode ? 0 : root_ + 1);
    for (const Node& n : nodes_) {
      h = mix64(h ^ mix64(n.left) ^ (mix64(n.right) << 1));
      h = mix64(h ^ n.leaves_left ^ mix64(n.leaves_right));
      h = mix64(h ^ hash_bytes(n.label, 0));
    }
    return h;
  }

  // Reassembles a tree from serialized parts; validates the leaf/label
  // bijection.
  static Tree from_parts(std::shared_ptr<WeightArena> arena, double alpha,
                         Rule rule, uint64_t coin_seed, uint64_t coins_drawn,
                         uint64_t disagreements, NodeId root,
                         std::vector<Node> nodes) {
    Tree t(std::move(arena), alpha, rule, coin_seed);
    t.coin_.discard(coins_drawn);
    t.coins_drawn_ = coins_drawn;
    t.disagreements_ = disagreements;
    t.root_ = root;
    t.nodes_ = std::move(nodes);
    for (NodeId id = 0; id < t.nodes_.size(); id++) {
      if (t.nodes_[id].is_leaf()) {
        if (t.nodes_[id].label.empty() ||
            !t.label_index_.emplace(t.nodes_[id].label, id).second) {
          throw ParseError("corrupt tree: leaf labels are not a bijection");
        }
      }
    }
    return t;
  }

 private:
  NodeId raw_node(NodeId parent) {
    NodeId id = static_cast<NodeId>(nodes_.size());
    nodes_.emplace_back();
    nodes_[id].parent = parent;
    return id;
  }

  NodeId new_node(NodeId parent) {
    NodeId id = raw_node(parent);
    nodes_[id].reg = arena_->create();
    return id;
  }

  void set_leaf_label(NodeId id, const LabelToken& y) {
    nodes_[id].label = y;
    label_index_[y] = id;
  }

  void check_writable() const {
    if (frozen_) throw ConfigError("tree is frozen");
  }

  std::shared_ptr<WeightArena> arena_;
  double alpha_;
  double kappa_;
  Rule rule_;
  uint64_t coin_seed_;
  std::mt19937_64 coin_;
  uint64_t coins_drawn_ = 0;
  uint64_t disagreements_ = 0;
  bool frozen_ = false;
  NodeId root_ = kNoNode;
  std::vector<Node> nodes_;
  std::unordered_map<LabelToken, NodeId> label_index_;
};

// Fixed-tree training: every example updates its path regressors with the
// step directions plus the leaf with 0, repeated for the given number of
// passes. All dataset labels must already be in the tree.
inline void batch_train(Tree& tree, const std::vector<Example>& dataset,
                        size_t passes = 1) {
  for (const Example& ex : dataset) {
    if (!tree.contains(ex.y)) {
      throw NotFoundError("dataset label '" + ex.y + "' missing from tree");
    }
  }
  for (size_t p = 0; p < passes; p++) {
    for (const Example& ex : dataset) tree.train_seen(ex.x, ex.y);
  }
}

}  // namespace condprob
