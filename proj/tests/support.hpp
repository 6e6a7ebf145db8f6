#pragma once

// Test-only generators and independent oracles. Nothing here calls into the code paths
// it is used to check.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <vector>

#include "satmap/satmap.hpp"

namespace satmap::fixtures {

// Fixed reconstruction of the 11-node loop with a two-node, distance-1 recurrence (5 <-> 6).
inline DataFlowGraph recurrence_graph_11() {
  DataFlowGraph g;
  const int a = g.add_node(OpKind::Input, std::nullopt, 0);
  const int b = g.add_node(OpKind::Input, std::nullopt, 1);
  const int k3 = g.add_node(OpKind::Const, 3);
  const int mul = g.add_node(OpKind::Mul);
  const int add = g.add_node(OpKind::Add);
  const int acc = g.add_node(OpKind::Add);
  const int mix = g.add_node(OpKind::Xor);
  const int k85 = g.add_node(OpKind::Const, 85);
  const int shl = g.add_node(OpKind::Shl);
  const int k1 = g.add_node(OpKind::Const, 1);
  const int out = g.add_node(OpKind::Output, std::nullopt, 0);
  g.add_edge(a, mul, 0);
  g.add_edge(k3, mul, 1);
  g.add_edge(mul, add, 0);
  g.add_edge(b, add, 1);
  g.add_edge(add, acc, 0);
  g.add_edge(mix, acc, 1, 1, {0});
  g.add_edge(acc, mix, 0);
  g.add_edge(k85, mix, 1);
  g.add_edge(mix, shl, 0);
  g.add_edge(k1, shl, 1);
  g.add_edge(shl, out, 0);
  return g;
}

// input -> add(prev) -> output, i.e. a running sum.
inline DataFlowGraph accumulator_graph(std::int32_t init = 0) {
  DataFlowGraph g;
  const int in = g.add_node(OpKind::Input, std::nullopt, 0);
  const int add = g.add_node(OpKind::Add);
  const int out = g.add_node(OpKind::Output, std::nullopt, 0);
  g.add_edge(in, add, 0);
  g.add_edge(add, add, 1, 1, {init});
  g.add_edge(add, out, 0);
  return g;
}

struct RandomDfgOptions {
  int min_nodes = 3;
  int max_nodes = 7;
  double loop_carried_probability = 0.25;
  int max_distance = 2;
};

// Valid random DFG: distance-0 edges only run from lower to higher ids (acyclic);
// loop-carried edges may point anywhere, including self-loops.
inline DataFlowGraph random_dfg(std::mt19937_64& rng, const RandomDfgOptions& opt = {}) {
  std::uniform_int_distribution<int> size(opt.min_nodes, opt.max_nodes);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int n = size(rng);
  const OpKind binary[] = {OpKind::Add, OpKind::Sub, OpKind::Mul, OpKind::And,
                           OpKind::Or,  OpKind::Xor, OpKind::Shl, OpKind::Shr};
  DataFlowGraph g;
  int outputs = 0;
  for (int v = 0; v < n; ++v) {
    const double r = unit(rng);
    if (v == 0 || r < 0.2) {
      if (unit(rng) < 0.6) g.add_node(OpKind::Input, std::nullopt, static_cast<int>(rng() % 2));
      else g.add_node(OpKind::Const, static_cast<std::int32_t>(rng() % 64) - 16);
    } else if (r < 0.35) {
      g.add_node(OpKind::Output, std::nullopt, outputs++);
    } else {
      g.add_node(binary[rng() % 8]);
    }
  }
  std::uniform_int_distribution<int> dist(1, opt.max_distance);
  for (int v = 0; v < n; ++v) {
    for (int k = 0; k < op_arity(g.nodes[v].op); ++k) {
      if (v == 0 || unit(rng) < opt.loop_carried_probability) {
        const int d = dist(rng);
        std::vector<std::int32_t> init;
        for (int i = 0; i < d; ++i) init.push_back(static_cast<std::int32_t>(rng()));
        g.add_edge(static_cast<int>(rng() % n), v, k, d, init);
      } else {
        g.add_edge(static_cast<int>(rng() % v), v, k, 0);
      }
    }
  }
  return g;
}

inline Streams random_inputs(const DataFlowGraph& g, int iterations, std::mt19937_64& rng) {
  Streams in;
  for (const auto& node : g.nodes) {
    if (node.op != OpKind::Input || in.count(*node.stream)) continue;
    for (int i = 0; i < iterations; ++i) in[*node.stream].push_back(static_cast<std::int32_t>(rng()));
  }
  return in;
}

// Exhaustive satisfiability over all 2^n assignments (n <= ~22).
inline std::optional<std::vector<bool>> enumerate_models(const CnfFormula& f, bool count_all = false,
                                                         std::uint64_t* count = nullptr) {
  const int n = f.var_count();
  std::optional<std::vector<bool>> first;
  std::uint64_t found = 0;
  std::vector<bool> model(static_cast<std::size_t>(n) + 1, false);
  for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << n); ++bits) {
    for (int v = 1; v <= n; ++v) model[v] = (bits >> (v - 1)) & 1u;
    bool ok = true;
    for (std::size_t c = 0; c < f.clause_count() && ok; ++c) {
      bool sat = false;
      for (int l : f.clause(c))
        if (model[std::abs(l)] == (l > 0)) sat = true;
      ok = sat;
    }
    if (!ok) continue;
    ++found;
    if (!first) first = model;
    if (!count_all) break;
  }
  if (count) *count = found;
  return first;
}

// max over elementary cycles of ceil(length / distance), 1 if acyclic. Cycles are
// enumerated as edge sequences starting at their smallest node.
inline int rec_ii_by_cycle_enumeration(const DataFlowGraph& g) {
  const int n = g.node_count();
  int best = 1;
  std::vector<bool> on_path(static_cast<std::size_t>(n), false);
  std::function<void(int, int, int, int)> dfs = [&](int start, int v, int length, int distance) {
    for (const auto& e : g.edges) {
      if (e.src != v || e.dst < start) continue;
      if (e.dst == start) {
        const int l = length + 1, d = distance + e.distance;
        best = std::max(best, (l + d - 1) / d);
        continue;
      }
      if (on_path[e.dst]) continue;
      on_path[e.dst] = true;
      dfs(start, e.dst, length + 1, distance + e.distance);
      on_path[e.dst] = false;
    }
  };
  for (int s = 0; s < n; ++s) {
    on_path[s] = true;
    dfs(s, s, 0, 0);
    on_path[s] = false;
  }
  return best;
}

// Register pressure by unrolling: materialize every instance of every value over enough
// iterations that a window of ii absolute cycles is entirely steady state, then count
// instances live at each cycle.
inline std::vector<std::vector<int>> unrolled_pressure(const std::vector<ValueLifetime>& lifetimes, int pe_count,
                                                       int ii, int max_label) {
  int max_span = 0, max_birth = 0;
  for (const auto& lt : lifetimes) {
    max_span = std::max(max_span, lt.span);
    max_birth = std::max(max_birth, lt.birth);
  }
  const int iterations = max_label + (max_span + ii - 1) / ii + 2 + (max_birth + max_span) / ii + 2;
  const int window_start = ((max_birth + max_span) / ii + 1) * ii;
  std::vector<std::vector<int>> pressure(static_cast<std::size_t>(pe_count), std::vector<int>(static_cast<std::size_t>(ii), 0));
  for (int c = window_start; c < window_start + ii; ++c) {
    for (const auto& lt : lifetimes)
      for (int k = 0; k < iterations; ++k) {
        const int b = lt.birth + k * ii;
        if (b <= c && c < b + lt.span) ++pressure[lt.pe][c % ii];
      }
  }
  return pressure;
}

}  // namespace satmap::fixtures
