#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <fstream>
#include <istream>
#include <memory>
#include <ostream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "condprob/baselines.hpp"
#include "condprob/error.hpp"
#include "condprob/kway.hpp"
#include "condprob/pecoc.hpp"
#include "condprob/regressor.hpp"
#include "condprob/tree.hpp"

namespace condprob {

enum class Method : uint8_t {
  kCptOnline = 1,
  kCptRandom = 2,
  kCptBalanced = 3,
  kCptStatic = 4,
  kPecoc = 5,
  kCpecoc = 6,
  kOva = 7,
  kTable = 8,
};

inline const char* to_string(Method m) {
  switch (m) {
    case Method::kCptOnline: return "cpt-online";
    case Method::kCptRandom: return "cpt-random";
    case Method::kCptBalanced: return "cpt-balanced";
    case Method::kCptStatic: return "cpt-static";
    case Method::kPecoc: return "pecoc";
    case Method::kCpecoc: return "cpecoc";
    case Method::kOva: return "ova";
    case Method::kTable: return "table";
  }
  return "?";
}

inline Method method_from_string(const std::string& s) {
  for (Method m : {Method::kCptOnline, Method::kCptRandom, Method::kCptBalanced,
                   Method::kCptStatic, Method::kPecoc, Method::kCpecoc,
                   Method::kOva, Method::kTable}) {
    if (s == to_string(m)) return m;
  }
  throw ConfigError("unknown method '" + s + "'");
}

// Self-describing versioned binary container; one format for every method.
// Every field needed to reproduce predictions (hash seed, bits, learning
// rates, method parameters, weights) is stored, so load(save(M)) predicts
// bit-for-bit like M.
struct ModelHeader {
  Method method = Method::kCptOnline;
  uint64_t hash_seed = kDefaultHashSeed;
  uint32_t bits = 18;
  double eta0 = 0.1;
  double decay = 0.0;
  double alpha = 0.5;
  uint32_t k = 2;
};

namespace io {

inline constexpr char kMagic[8] = {'C', 'P', 'R', 'B', 'M', 'D', 'L', '1'};
inline constexpr uint32_t kVersion = 1;

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}
  void u8(uint8_t v) { out_.put(char(v)); }
  void u32(uint32_t v) {
    for (int i = 0; i < 4; i++) out_.put(char(v >> (8 * i)));
  }
  void u64(uint64_t v) {
    for (int i = 0; i < 8; i++) out_.put(char(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<uint64_t>(v)); }
  void str(const std::string& s) {
    u32(uint32_t(s.size()));
    out_.write(s.data(), std::streamsize(s.size()));
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}
  uint8_t u8() { return uint8_t(get()); }
  uint32_t u32() {
    uint32_t v = 0;
    for (int i = 0; i < 4; i++) v |= uint32_t(get()) << (8 * i);
    return v;
  }
  uint64_t u64() {
    uint64_t v = 0;
    for (int i = 0; i < 8; i++) v |= uint64_t(get()) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    uint32_t n = u32();
    std::string s(n, '\0');
    if (n && !in_.read(s.data(), n)) throw ParseError("truncated model file");
    return s;
  }

 private:
  int get() {
    int c = in_.get();
    if (c == EOF) throw ParseError("truncated model file");
    return c;
  }
  std::istream& in_;
};

// Weight blocks keep only the non-zero entries of each regressor slice.
inline void write_arena(Writer& w, const WeightArena& arena) {
  w.u32(arena.bits());
  w.u64(arena.regressor_count());
  for (size_t id = 0; id < arena.regressor_count(); id++) {
    auto slice = arena.weights(RegressorId(id));
    w.u64(arena.update_count(RegressorId(id)));
    uint64_t nnz = 0;
    for (double v : slice) nnz += v != 0.0;
    w.u64(nnz);
    for (size_t i = 0; i < slice.size(); i++) {
      if (slice[i] != 0.0) {
        w.u64(i);
        w.f64(slice[i]);
      }
    }
  }
}

// Restores weights into an arena whose regressors were already created (in
// the same deterministic order as at save time).
inline void read_arena(Reader& r, WeightArena& arena) {
  if (r.u32() != arena.bits()) throw ParseError("arena bits mismatch");
  uint64_t count = r.u64();
  if (count != arena.regressor_count()) {
    throw ParseError("arena regressor count mismatch");
  }
  for (size_t id = 0; id < count; id++) {
    auto slice = arena.weights(RegressorId(id));
    std::fill(slice.begin(), slice.end(), 0.0);
    arena.set_update_count(RegressorId(id), r.u64());
    uint64_t nnz = r.u64();
    for (uint64_t i = 0; i < nnz; i++) {
      uint64_t idx = r.u64();
      if (idx >= slice.size()) throw ParseError("weight index out of range");
      slice[idx] = r.f64();
    }
  }
}

inline void write_header(Writer& w, const ModelHeader& h) {
  for (char c : kMagic) w.u8(uint8_t(c));
  w.u32(kVersion);
  w.u8(uint8_t(h.method));
  w.u64(h.hash_seed);
  w.u32(h.bits);
  w.f64(h.eta0);
  w.f64(h.decay);
  w.f64(h.alpha);
  w.u32(h.k);
}

inline ModelHeader read_header(Reader& r) {
  for (char c : kMagic) {
    if (r.u8() != uint8_t(c)) throw ParseError("not a model file (bad magic)");
  }
  if (r.u32() != kVersion) throw ParseError("unsupported model version");
  ModelHeader h;
  h.method = Method(r.u8());
  h.hash_seed = r.u64();
  h.bits = r.u32();
  h.eta0 = r.f64();
  h.decay = r.f64();
  h.alpha = r.f64();
  h.k = r.u32();
  return h;
}

}  // namespace io

inline void save_model(std::ostream& out, const ModelHeader& h, const Tree& t) {
  io::Writer w(out);
  io::write_header(w, h);
  w.u8(uint8_t(t.rule()));
  w.u64(t.coin_seed());
  w.u64(t.coins_drawn());
  w.u64(t.disagreements());
  w.u32(t.root());
  w.u64(t.node_count());
  for (const auto& n : t.nodes()) {
    w.u32(n.parent);
    w.u32(n.left);
    w.u32(n.right);
    w.u32(n.reg);
    w.u64(n.leaves_left);
    w.u64(n.leaves_right);
    w.str(n.label);
  }
  io::write_arena(w, t.arena());
}

inline void save_model(std::ostream& out, const ModelHeader& h,
                       const PecocModel& m) {
  io::Writer w(out);
  io::write_header(w, h);
  w.u64(m.slots());
  auto cols = m.column_assignments();
  w.u64(cols.size());
  for (const auto& [label, col] : cols) {
    w.str(label);
    w.u64(col);
  }
  io::write_arena(w, m.arena());
}

inline void save_model(std::ostream& out, const ModelHeader& h,
                       const KWayTree& t) {
  io::Writer w(out);
  io::write_header(w, h);
  w.u64(t.k());
  w.u64(t.label_count());
  for (const auto& label : t.leaf_labels()) w.str(label);
  io::write_arena(w, t.arena());
}

inline void save_model(std::ostream& out, const ModelHeader& h,
                       const OvaModel& m) {
  io::Writer w(out);
  io::write_header(w, h);
  w.u64(m.label_count());
  for (const auto& label : m.labels()) w.str(label);  // creation order
  io::write_arena(w, m.arena());
}

inline void save_model(std::ostream& out, const ModelHeader& h,
                       const TableModel& m) {
  io::Writer w(out);
  io::write_header(w, h);
  std::vector<uint64_t> keys;
  keys.reserve(m.counts().size());
  for (const auto& [key, row] : m.counts()) keys.push_back(key);
  std::sort(keys.begin(), keys.end());
  w.u64(keys.size());
  for (uint64_t key : keys) {
    const auto& row = m.counts().at(key);
    std::vector<std::pair<LabelToken, uint64_t>> cells(row.begin(), row.end());
    std::sort(cells.begin(), cells.end());
    w.u64(key);
    w.u64(cells.size());
    for (const auto& [label, count] : cells) {
      w.str(label);
      w.u64(count);
    }
  }
}

using AnyModel = std::variant<Tree, PecocModel, KWayTree, OvaModel, TableModel>;

struct LoadedModel {
  ModelHeader header;
  AnyModel model;
};

inline LoadedModel load_model(std::istream& in) {
  io::Reader r(in);
  ModelHeader h = io::read_header(r);
  LearnRate lr{h.eta0, h.decay};
  switch (h.method) {
    case Method::kCptOnline:
    case Method::kCptRandom:
    case Method::kCptBalanced:
    case Method::kCptStatic: {
      auto rule = Tree::Rule(r.u8());
      uint64_t coin_seed = r.u64();
      uint64_t coins_drawn = r.u64();
      uint64_t disagreements = r.u64();
      NodeId root = r.u32();
      uint64_t count = r.u64();
      std::vector<Tree::Node> nodes(count);
      for (auto& n : nodes) {
        n.parent = r.u32();
        n.left = r.u32();
        n.right = r.u32();
        n.reg = r.u32();
        n.leaves_left = r.u64();
        n.leaves_right = r.u64();
        n.label = r.str();
      }
      auto arena = std::make_shared<WeightArena>(h.bits, lr);
      for (uint64_t i = 0; i < count; i++) arena->create();
      io::read_arena(r, *arena);
      Tree t = Tree::from_parts(arena, h.alpha, rule, coin_seed, coins_drawn,
                                disagreements, root, std::move(nodes));
      return {h, AnyModel(std::in_place_type<Tree>, std::move(t))};
    }
    case Method::kPecoc: {
      uint64_t slots = r.u64();
      auto arena = std::make_shared<WeightArena>(h.bits, lr);
      PecocModel m(slots, arena);
      uint64_t labels = r.u64();
      for (uint64_t i = 0; i < labels; i++) {
        std::string label = r.str();
        m.restore_column(label, r.u64());
      }
      io::read_arena(r, *arena);
      return {h, AnyModel(std::in_place_type<PecocModel>, std::move(m))};
    }
    case Method::kCpecoc: {
      uint64_t k = r.u64();
      uint64_t labels = r.u64();
      std::vector<LabelToken> order(labels);
      for (auto& label : order) label = r.str();
      auto arena = std::make_shared<WeightArena>(h.bits, lr);
      KWayTree t = KWayTree::build(order, k, arena);
      io::read_arena(r, *arena);
      return {h, AnyModel(std::in_place_type<KWayTree>, std::move(t))};
    }
    case Method::kOva: {
      uint64_t labels = r.u64();
      auto arena = std::make_shared<WeightArena>(h.bits, lr);
      OvaModel m(arena);
      for (uint64_t i = 0; i < labels; i++) {
        m.restore(r.str(), arena->create());
      }
      io::read_arena(r, *arena);
      return {h, AnyModel(std::in_place_type<OvaModel>, std::move(m))};
    }
    case Method::kTable: {
      TableModel m;
      uint64_t contexts = r.u64();
      for (uint64_t i = 0; i < contexts; i++) {
        uint64_t key = r.u64();
        uint64_t cells = r.u64();
        for (uint64_t c = 0; c < cells; c++) {
          std::string label = r.str();
          m.restore(key, label, r.u64());
        }
      }
      return {h, AnyModel(std::in_place_type<TableModel>, std::move(m))};
    }
  }
  throw ParseError("unknown method tag in model file");
}

template <class Model>
void save_model_file(const std::string& path, const ModelHeader& h,
                     const Model& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write '" + path + "'");
  save_model(out, h, m);
  if (!out) throw ParseError("failed writing '" + path + "'");
}

inline LoadedModel load_model_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'");
  return load_model(in);
}

}  // namespace condprob
