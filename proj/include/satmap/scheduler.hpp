#pragma once

#include <algorithm>
#include <cstdint>
#include <ostream>
#include <queue>
#include <vector>

#include "satmap/arch.hpp"
#include "satmap/common.hpp"
#include "satmap/dfg.hpp"

namespace satmap {

// ---------------------------------------------------------------------------
// ASAP / ALAP over distance-0 edges (unit latency)
// ---------------------------------------------------------------------------

// Kahn order over distance-0 edges; throws if they contain a cycle.
inline std::vector<int> topological_order(const DataFlowGraph& g) {
  const int n = g.node_count();
  std::vector<int> indegree(n, 0);
  std::vector<std::vector<int>> succ(n);
  for (const auto& e : g.edges) {
    if (e.distance != 0) continue;
    succ[e.src].push_back(e.dst);
    ++indegree[e.dst];
  }
  std::priority_queue<int, std::vector<int>, std::greater<>> ready;
  for (int v = 0; v < n; ++v)
    if (indegree[v] == 0) ready.push(v);
  std::vector<int> order;
  while (!ready.empty()) {
    const int v = ready.top();
    ready.pop();
    order.push_back(v);
    for (int w : succ[v])
      if (--indegree[w] == 0) ready.push(w);
  }
  if (static_cast<int>(order.size()) != n) throw InvalidInput("distance-0 edges form a cycle");
  return order;
}

inline std::vector<int> compute_asap(const DataFlowGraph& g) {
  std::vector<int> asap(g.nodes.size(), 0);
  std::vector<std::vector<int>> pred(g.nodes.size());
  for (const auto& e : g.edges)
    if (e.distance == 0) pred[e.dst].push_back(e.src);
  for (int v : topological_order(g))
    for (int u : pred[v]) asap[v] = std::max(asap[v], asap[u] + 1);
  return asap;
}

// Number of schedule levels: 1 + max ASAP (0 for the empty graph).
inline int critical_path_length(const DataFlowGraph& g) {
  const auto asap = compute_asap(g);
  return asap.empty() ? 0 : 1 + *std::max_element(asap.begin(), asap.end());
}

inline std::vector<int> compute_alap(const DataFlowGraph& g, int horizon) {
  std::vector<int> alap(g.nodes.size(), horizon - 1);
  std::vector<std::vector<int>> succ(g.nodes.size());
  for (const auto& e : g.edges)
    if (e.distance == 0) succ[e.src].push_back(e.dst);
  auto order = topological_order(g);
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    for (int w : succ[*it]) alap[*it] = std::min(alap[*it], alap[w] - 1);
  const auto asap = compute_asap(g);
  for (std::size_t v = 0; v < alap.size(); ++v)
    if (alap[v] < asap[v])
      throw InvalidInput("schedule horizon " + std::to_string(horizon) + " is shorter than the critical path");
  return alap;
}

// ---------------------------------------------------------------------------
// Lower bounds on the iteration interval
// ---------------------------------------------------------------------------

struct IiBounds {
  int res_ii = 1;
  int rec_ii = 1;
  int m_ii = 1;

  bool operator==(const IiBounds&) const = default;
};

inline int compute_res_ii(const DataFlowGraph& g, const CgraArchitecture& a) {
  return std::max<int>(1, static_cast<int>(ceil_div(g.node_count(), a.pe_count())));
}

namespace detail {

// True if some cycle has positive total weight sum(1 - ii * distance) (Bellman-Ford, longest paths).
inline bool has_positive_cycle(const DataFlowGraph& g, int ii) {
  const int n = g.node_count();
  std::vector<std::int64_t> dist(n, 0);
  for (int round = 0; round <= n; ++round) {
    bool changed = false;
    for (const auto& e : g.edges) {
      const std::int64_t w = 1 - static_cast<std::int64_t>(ii) * e.distance;
      if (dist[e.src] + w > dist[e.dst]) {
        dist[e.dst] = dist[e.src] + w;
        changed = true;
      }
    }
    if (!changed) return false;
  }
  return true;
}

}  // namespace detail

// Smallest II with no positive cycle under edge weights (1 - II * distance); equals
// max over elementary cycles of ceil(length / distance), or 1 when acyclic.
inline int compute_rec_ii(const DataFlowGraph& g) {
  if (!detail::zero_distance_cycles(g).empty()) throw InvalidInput("cycle with total distance 0");
  const int limit = std::max(1, g.node_count());
  for (int ii = 1; ii <= limit; ++ii)
    if (!detail::has_positive_cycle(g, ii)) return ii;
  // An elementary cycle has at most N edges and distance >= 1, so ii = N always suffices.
  throw InvalidInput("recurrence bound search did not converge");
}

inline IiBounds compute_mii(const DataFlowGraph& g, const CgraArchitecture& a) {
  IiBounds b;
  b.res_ii = compute_res_ii(g, a);
  b.rec_ii = compute_rec_ii(g);
  b.m_ii = std::max(b.res_ii, b.rec_ii);
  return b;
}

// ---------------------------------------------------------------------------
// Mobility schedule and its fold
// ---------------------------------------------------------------------------

struct MobilitySchedule {
  int horizon = 0;  // cycles 0..horizon-1
  std::vector<int> asap;
  std::vector<int> alap;

  int node_count() const { return static_cast<int>(asap.size()); }
  int width(int n) const { return alap[n] - asap[n] + 1; }
};

inline MobilitySchedule build_mobility(const DataFlowGraph& g, int extra_slack) {
  if (extra_slack < 0) throw InvalidInput("extra slack must be non-negative");
  MobilitySchedule ms;
  ms.asap = compute_asap(g);
  ms.horizon = critical_path_length(g) + extra_slack;
  ms.alap = compute_alap(g, ms.horizon);
  return ms;
}

// A kernel placement candidate: slot within the kernel, and the fold it came from.
struct KmsCandidate {
  int slot = 0;
  int label = 0;

  int time(int ii) const { return label * ii + slot; }
  auto operator<=>(const KmsCandidate&) const = default;
};

struct KernelMobilitySchedule {
  int ii = 1;
  int max_label = 0;
  // Per node, candidates ordered by (label, slot), i.e. by absolute time.
  std::vector<std::vector<KmsCandidate>> candidates;

  int node_count() const { return static_cast<int>(candidates.size()); }
};

inline KernelMobilitySchedule build_kms(const MobilitySchedule& ms, int ii) {
  if (ii < 1) throw InvalidInput("II must be positive");
  KernelMobilitySchedule kms;
  kms.ii = ii;
  kms.max_label = ms.horizon > 0 ? static_cast<int>(ceil_div(ms.horizon, ii)) - 1 : 0;
  kms.candidates.resize(ms.asap.size());
  for (std::size_t n = 0; n < ms.asap.size(); ++n)
    for (int t = ms.asap[n]; t <= ms.alap[n]; ++t) kms.candidates[n].push_back({t % ii, t / ii});
  return kms;
}

// Default per-II slack: one full extra fold.
inline int default_slack(int ii) { return ii - 1; }

// Node x candidate table, plus a slot-by-label grid listing which nodes may occupy each cell.
inline void dump_kms(const KernelMobilitySchedule& kms, std::ostream& os) {
  os << "# kms ii=" << kms.ii << " max_label=" << kms.max_label << "\n";
  for (int n = 0; n < kms.node_count(); ++n) {
    os << "n" << n << ":";
    for (const auto& c : kms.candidates[n]) os << " (s" << c.slot << ",l" << c.label << ")";
    os << "\n";
  }
  os << "# slot | label 0.." << kms.max_label << "\n";
  for (int s = 0; s < kms.ii; ++s) {
    os << "s" << s << " |";
    for (int l = 0; l <= kms.max_label; ++l) {
      std::string cell;
      for (int n = 0; n < kms.node_count(); ++n)
        for (const auto& c : kms.candidates[n])
          if (c.slot == s && c.label == l) cell += (cell.empty() ? "" : ",") + std::to_string(n);
      os << " " << (cell.empty() ? "." : cell) << " |";
    }
    os << "\n";
  }
}

}  // namespace satmap
