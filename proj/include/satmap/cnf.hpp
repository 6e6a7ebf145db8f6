#pragma once

#include <cstdlib>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "satmap/arch.hpp"
#include "satmap/common.hpp"
#include "satmap/dfg.hpp"
#include "satmap/scheduler.hpp"

namespace satmap {

// Placement literal: node `node` runs on `pe` at kernel slot `slot` of fold `label`.
struct VarKey {
  int node = 0;
  int pe = 0;
  int slot = 0;
  int label = 0;

  int time(int ii) const { return label * ii + slot; }
  auto operator<=>(const VarKey&) const = default;
};

// CNF over variables 1..var_count. Variables 1..mapping_var_count() are placement
// literals described by keys(); any further variables are encoding auxiliaries.
class CnfFormula {
 public:
  CnfFormula() = default;
  explicit CnfFormula(int var_count) : var_count_(var_count) {}

  int var_count() const { return var_count_; }
  std::size_t clause_count() const { return starts_.size(); }

  std::span<const int> clause(std::size_t i) const {
    const std::size_t b = starts_[i];
    const std::size_t e = i + 1 < starts_.size() ? starts_[i + 1] : lits_.size();
    return {lits_.data() + b, e - b};
  }

  void add_clause(std::span<const int> lits) {
    if (lits.empty()) throw InvalidInput("empty clause");
    for (int l : lits)
      if (l == 0 || std::abs(l) > var_count_)
        throw InvalidInput("clause literal " + std::to_string(l) + " outside 1.." + std::to_string(var_count_));
    starts_.push_back(lits_.size());
    lits_.insert(lits_.end(), lits.begin(), lits.end());
  }
  void add_clause(std::initializer_list<int> lits) { add_clause(std::span<const int>(lits.begin(), lits.size())); }

  int new_var() { return ++var_count_; }

  // Placement variable bookkeeping.
  int add_mapping_var(const VarKey& key) {
    if (var_count_ != static_cast<int>(keys_.size()))
      throw InvalidInput("placement variables must precede auxiliary variables");
    keys_.push_back(key);
    index_.emplace(key, ++var_count_);
    return var_count_;
  }
  int mapping_var_count() const { return static_cast<int>(keys_.size()); }
  const std::vector<VarKey>& keys() const { return keys_; }
  const VarKey& key_of(int var) const { return keys_.at(static_cast<std::size_t>(var - 1)); }
  int var_of(const VarKey& key) const {
    auto it = index_.find(key);
    return it == index_.end() ? 0 : it->second;
  }

  int ii = 0;  // iteration interval the placement variables refer to (0 for hand-built formulas)

  // Every clause is satisfied by `model` (model[v] for v in 1..var_count; index 0 unused).
  bool satisfied_by(const std::vector<bool>& model) const {
    if (static_cast<int>(model.size()) < var_count_ + 1) return false;
    for (std::size_t i = 0; i < clause_count(); ++i) {
      bool sat = false;
      for (int l : clause(i))
        if (model[std::abs(l)] == (l > 0)) {
          sat = true;
          break;
        }
      if (!sat) return false;
    }
    return true;
  }

 private:
  int var_count_ = 0;
  std::vector<int> lits_;
  std::vector<std::size_t> starts_;
  std::vector<VarKey> keys_;
  std::map<VarKey, int> index_;
};

// ---------------------------------------------------------------------------
// DIMACS
// ---------------------------------------------------------------------------

inline void emit_dimacs(const CnfFormula& f, std::ostream& os) {
  for (int v = 1; v <= f.mapping_var_count(); ++v) {
    const auto& k = f.key_of(v);
    os << "c var " << v << " = n" << k.node << " p" << k.pe << " s" << k.slot << " l" << k.label << "\n";
  }
  os << "p cnf " << f.var_count() << " " << f.clause_count() << "\n";
  for (std::size_t i = 0; i < f.clause_count(); ++i) {
    for (int l : f.clause(i)) os << l << " ";
    os << "0\n";
  }
  if (!os) throw Error("failed writing DIMACS output");
}

inline std::string to_dimacs(const CnfFormula& f) {
  std::ostringstream os;
  emit_dimacs(f, os);
  return os.str();
}

// Reads DIMACS CNF. Variable-map comments written by emit_dimacs are restored.
inline CnfFormula parse_dimacs(std::istream& is) {
  std::string line;
  std::vector<std::pair<int, VarKey>> keyed;
  long declared_vars = -1, declared_clauses = -1;
  std::vector<std::vector<int>> clauses;
  std::vector<int> current;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == 'c') {
      int v;
      VarKey k;
      if (std::sscanf(line.c_str(), "c var %d = n%d p%d s%d l%d", &v, &k.node, &k.pe, &k.slot, &k.label) == 5)
        keyed.emplace_back(v, k);
      continue;
    }
    if (line[0] == 'p') {
      std::istringstream ls(line);
      std::string p, cnf;
      if (!(ls >> p >> cnf >> declared_vars >> declared_clauses) || cnf != "cnf" || declared_vars < 0 ||
          declared_clauses < 0)
        throw ParseError("bad DIMACS header: " + line);
      continue;
    }
    if (declared_vars < 0) throw ParseError("DIMACS clause before header");
    std::istringstream ls(line);
    long lit;
    while (ls >> lit) {
      if (lit == 0) {
        clauses.push_back(std::move(current));
        current.clear();
      } else {
        if (std::labs(lit) > declared_vars) throw ParseError("DIMACS literal out of range: " + std::to_string(lit));
        current.push_back(static_cast<int>(lit));
      }
    }
    if (!ls.eof()) throw ParseError("bad DIMACS clause line: " + line);
  }
  if (declared_vars < 0) throw ParseError("missing DIMACS header");
  if (!current.empty()) throw ParseError("unterminated DIMACS clause");
  if (static_cast<long>(clauses.size()) != declared_clauses) throw ParseError("DIMACS clause count mismatch");

  CnfFormula f;
  std::sort(keyed.begin(), keyed.end());
  for (std::size_t i = 0; i < keyed.size(); ++i) {
    if (keyed[i].first != static_cast<int>(i) + 1) throw ParseError("DIMACS variable map is not contiguous");
    f.add_mapping_var(keyed[i].second);
  }
  while (f.var_count() < declared_vars) f.new_var();
  for (const auto& c : clauses) f.add_clause(c);
  return f;
}

// ---------------------------------------------------------------------------
// Placement encoding
// ---------------------------------------------------------------------------

enum class AmoEncoding {
  Pairwise,    // ¬x ∨ ¬y for every pair
  Sequential,  // order-based auxiliary chain, used for groups larger than kSequentialThreshold
};

class CnfEncoder {
 public:
  static constexpr std::size_t kSequentialThreshold = 16;
  // About 1 GB of clause storage; pairwise C2/C3 grow quadratically with the grid and window sizes.
  static constexpr std::size_t kDefaultClauseLimit = 40'000'000;

  CnfEncoder(const DataFlowGraph& g, const CgraArchitecture& a, const KernelMobilitySchedule& kms,
             AmoEncoding amo = AmoEncoding::Pairwise, Deadline deadline = Deadline::never(),
             std::size_t clause_limit = kDefaultClauseLimit)
      : g_(g), a_(a), kms_(kms), amo_(amo), deadline_(deadline), clause_limit_(clause_limit), adjacency_(a) {
    if (kms.node_count() != g.node_count()) throw InvalidInput("schedule and graph disagree on node count");
  }

  // One variable per (node, candidate, pe), ordered by node, label, slot, pe.
  void enumerate_variables() {
    f_ = CnfFormula();
    f_.ii = kms_.ii;
    node_vars_.assign(g_.nodes.size(), {});
    for (int n = 0; n < g_.node_count(); ++n) {
      if (kms_.candidates[n].empty()) throw InvalidInput("node " + std::to_string(n) + " has no schedule candidates");
      for (const auto& c : kms_.candidates[n])
        for (int p = 0; p < a_.pe_count(); ++p) node_vars_[n].push_back(f_.add_mapping_var({n, p, c.slot, c.label}));
    }
  }

  // Exactly one placement per node.
  void encode_c1() {
    for (const auto& vars : node_vars_) {
      f_.add_clause(vars);
      at_most_one(vars);
    }
  }

  // At most one node per (pe, kernel slot), across all iteration labels.
  void encode_c2() {
    std::vector<std::vector<int>> cell(static_cast<std::size_t>(a_.pe_count() * kms_.ii));
    for (int v = 1; v <= f_.mapping_var_count(); ++v) {
      const auto& k = f_.key_of(v);
      cell[k.pe * kms_.ii + k.slot].push_back(v);
    }
    for (const auto& lits : cell) {
      if (use_sequential(lits.size())) {
        sequential_amo(lits);
        continue;
      }
      for (std::size_t i = 0; i < lits.size(); ++i)
        for (std::size_t j = i + 1; j < lits.size(); ++j)
          if (f_.key_of(lits[i]).node != f_.key_of(lits[j]).node) add_binary(-lits[i], -lits[j]);
    }
  }

  // Producer/consumer pairs must sit on neighbour-or-self PEs with the consumer firing
  // strictly after the producer: t_v + d * ii > t_u. One conflict clause per violating
  // pair of placements; parallel edges between the same nodes share their clauses.
  void encode_c3() {
    struct Link {
      int fwd = -1;  // min distance of edges a -> b, -1 if none
      int bwd = -1;  // min distance of edges b -> a
    };
    std::map<std::pair<int, int>, Link> links;
    auto merge = [](int& slot, int d) { slot = slot < 0 ? d : std::min(slot, d); };
    for (const auto& e : g_.edges) {
      if (e.src == e.dst) {
        // A node always shares its own placement; only the timing side can fail.
        if (e.distance == 0)
          for (int v : node_vars_[e.src]) f_.add_clause({-v});
        continue;
      }
      auto& link = links[{std::min(e.src, e.dst), std::max(e.src, e.dst)}];
      merge(e.src < e.dst ? link.fwd : link.bwd, e.distance);
    }
    const int ii = kms_.ii;
    for (const auto& [pair, link] : links) {
      const auto [a, b] = pair;
      for (int va : node_vars_[a]) {
        const auto& ka = f_.key_of(va);
        const int ta = ka.time(ii);
        for (int vb : node_vars_[b]) {
          const auto& kb = f_.key_of(vb);
          const int tb = kb.time(ii);
          bool conflict = !adjacency_.reaches(ka.pe, kb.pe);
          if (link.fwd >= 0 && tb + link.fwd * ii <= ta) conflict = true;
          if (link.bwd >= 0 && ta + link.bwd * ii <= tb) conflict = true;
          if (conflict) add_binary(-va, -vb);
        }
      }
    }
  }

  CnfFormula encode_all() {
    enumerate_variables();
    encode_c1();
    encode_c2();
    encode_c3();
    return f_;
  }

  const CnfFormula& formula() const { return f_; }
  CnfFormula& formula() { return f_; }
  const std::vector<int>& node_vars(int node) const { return node_vars_[node]; }

 private:
  bool use_sequential(std::size_t k) const { return amo_ == AmoEncoding::Sequential && k > kSequentialThreshold; }

  void add_binary(int x, int y) {
    if (f_.clause_count() >= clause_limit_)
      throw ResourceLimitError("CNF encoding exceeds the clause limit of " + std::to_string(clause_limit_) +
                               " at ii=" + std::to_string(kms_.ii));
    f_.add_clause({x, y});
    if ((f_.clause_count() & 0xffff) == 0) deadline_.check("CNF encoding");
  }

  void at_most_one(const std::vector<int>& lits) {
    if (use_sequential(lits.size())) {
      sequential_amo(lits);
      return;
    }
    for (std::size_t i = 0; i < lits.size(); ++i)
      for (std::size_t j = i + 1; j < lits.size(); ++j) add_binary(-lits[i], -lits[j]);
  }

  // s_i means "some literal among the first i+1 is true".
  void sequential_amo(const std::vector<int>& lits) {
    const std::size_t k = lits.size();
    if (k < 2) return;
    std::vector<int> s(k - 1);
    for (auto& v : s) v = f_.new_var();
    add_binary(-lits[0], s[0]);
    for (std::size_t i = 1; i + 1 < k; ++i) {
      add_binary(-lits[i], s[i]);
      add_binary(-s[i - 1], s[i]);
      add_binary(-lits[i], -s[i - 1]);
    }
    add_binary(-lits[k - 1], -s[k - 2]);
  }

  const DataFlowGraph& g_;
  const CgraArchitecture& a_;
  const KernelMobilitySchedule& kms_;
  AmoEncoding amo_;
  Deadline deadline_;
  std::size_t clause_limit_;
  Adjacency adjacency_;
  CnfFormula f_;
  std::vector<std::vector<int>> node_vars_;
};

inline CnfFormula encode_all(const DataFlowGraph& g, const CgraArchitecture& a, const KernelMobilitySchedule& kms,
                             AmoEncoding amo = AmoEncoding::Pairwise, Deadline deadline = Deadline::never(),
                             std::size_t clause_limit = CnfEncoder::kDefaultClauseLimit) {
  return CnfEncoder(g, a, kms, amo, deadline, clause_limit).encode_all();
}

}  // namespace satmap
