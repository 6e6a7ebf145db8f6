#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "satmap/arch.hpp"
#include "satmap/common.hpp"
#include "satmap/dfg.hpp"
#include "satmap/mapping.hpp"
#include "satmap/regalloc.hpp"
#include "satmap/scheduler.hpp"

namespace satmap {

// ---------------------------------------------------------------------------
// Placement rules, restated without any CNF machinery
// ---------------------------------------------------------------------------

struct MappingViolation {
  enum class Kind { Unassigned, OutOfRange, Occupancy, Adjacency, Timing };
  Kind kind;
  int a = -1;  // node (producer for edge rules)
  int b = -1;  // second node (consumer / co-occupant)

  bool operator==(const MappingViolation&) const = default;

  std::string describe() const {
    std::ostringstream os;
    switch (kind) {
      case Kind::Unassigned: os << "unassigned(" << a << ")"; break;
      case Kind::OutOfRange: os << "out-of-range(" << a << ")"; break;
      case Kind::Occupancy: os << "occupancy(" << a << "," << b << ")"; break;
      case Kind::Adjacency: os << "adjacency(" << a << "," << b << ")"; break;
      case Kind::Timing: os << "timing(" << a << "," << b << ")"; break;
    }
    return os.str();
  }
};

inline std::string describe(const std::vector<MappingViolation>& vs) {
  std::string s;
  for (const auto& v : vs) s += (s.empty() ? "" : "; ") + v.describe();
  return s;
}

inline std::vector<MappingViolation> check_mapping(const DataFlowGraph& g, const CgraArchitecture& a, const Mapping& m) {
  using K = MappingViolation::Kind;
  std::vector<MappingViolation> out;
  const int n = g.node_count();
  if (m.ii < 1) {
    for (int v = 0; v < n; ++v) out.push_back({K::OutOfRange, v});
    return out;
  }
  std::vector<bool> usable(static_cast<std::size_t>(n), false);
  for (int v = 0; v < n; ++v) {
    if (v >= static_cast<int>(m.assignment.size()) || !m.assignment[v]) {
      out.push_back({K::Unassigned, v});
      continue;
    }
    const auto& p = *m.assignment[v];
    if (p.pe < 0 || p.pe >= a.pe_count() || p.slot < 0 || p.slot >= m.ii || p.label < 0) {
      out.push_back({K::OutOfRange, v});
      continue;
    }
    usable[v] = true;
  }
  for (int v = n; v < static_cast<int>(m.assignment.size()); ++v)
    if (m.assignment[v]) out.push_back({K::OutOfRange, v});

  std::map<std::pair<int, int>, int> occupant;
  for (int v = 0; v < n; ++v) {
    if (!usable[v]) continue;
    const auto& p = *m.assignment[v];
    auto [it, fresh] = occupant.emplace(std::pair(p.pe, p.slot), v);
    if (!fresh) out.push_back({K::Occupancy, it->second, v});
  }

  const auto adj = Adjacency(a);
  for (const auto& e : g.edges) {
    if (!usable[e.src] || !usable[e.dst]) continue;
    const auto& pu = *m.assignment[e.src];
    const auto& pv = *m.assignment[e.dst];
    if (!adj.reaches(pu.pe, pv.pe)) out.push_back({K::Adjacency, e.src, e.dst});
    if (pv.time(m.ii) + e.distance * m.ii <= pu.time(m.ii)) out.push_back({K::Timing, e.src, e.dst});
  }
  std::sort(out.begin(), out.end(), [](const MappingViolation& x, const MappingViolation& y) {
    return std::tie(x.a, x.b, x.kind) < std::tie(y.a, y.b, y.kind);
  });
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Functional semantics
// ---------------------------------------------------------------------------

using Streams = std::map<int, std::vector<std::int32_t>>;

class SimulationError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline std::int32_t read_input(const Streams& inputs, int stream, int iteration) {
  auto it = inputs.find(stream);
  if (it == inputs.end() || static_cast<int>(it->second.size()) <= iteration)
    throw SimulationError("input stream " + std::to_string(stream) + " is shorter than the iteration count");
  return it->second[iteration];
}

inline void check_inits(const DataFlowGraph& g) {
  for (const auto& e : g.edges)
    if (e.distance > 0 && static_cast<int>(e.init.size()) < e.distance)
      throw SimulationError("loop-carried edge " + std::to_string(e.src) + "->" + std::to_string(e.dst) +
                            " lacks initial values");
}

}  // namespace detail

// Reference semantics: evaluate iteration after iteration in dependence order.
// Output streams collect, per iteration, one value per output node in node-id order.
inline Streams interpret_dfg(const DataFlowGraph& g, int iterations, const Streams& inputs) {
  detail::check_inits(g);
  const int n = g.node_count();
  const auto order = topological_order(g);
  std::vector<std::vector<const DfgEdge*>> operands(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) operands[v] = g.operands_of(v);

  // values[i % window][v]: the last `window` iterations.
  const int window = g.max_distance() + 1;
  std::vector<std::vector<std::int32_t>> values(static_cast<std::size_t>(window), std::vector<std::int32_t>(n, 0));
  Streams out;
  for (const auto& node : g.nodes)
    if (node.op == OpKind::Output) out[*node.stream];

  for (int i = 0; i < iterations; ++i) {
    auto& cur = values[i % window];
    for (int v : order) {
      const auto& node = g.nodes[v];
      auto operand = [&](int k) -> std::int32_t {
        const DfgEdge* e = operands[v][k];
        if (i < e->distance) return e->init[i];
        return values[(i - e->distance) % window][e->src];
      };
      switch (node.op) {
        case OpKind::Const: cur[v] = *node.imm; break;
        case OpKind::Input: cur[v] = detail::read_input(inputs, *node.stream, i); break;
        case OpKind::Output: cur[v] = operand(0); break;
        default: cur[v] = apply_op(node.op, operand(0), operand(1));
      }
    }
    for (const auto& node : g.nodes)
      if (node.op == OpKind::Output) out[*node.stream].push_back(cur[node.id]);
  }
  return out;
}

struct SimTrace {
  Streams outputs;
  int iterations = 0;
  int cycles = 0;
  std::vector<std::vector<int>> activity;  // [cycle][pe] -> node id or -1
  std::vector<int> peak_registers;         // per PE
};

// Cycle-accurate execution of the modulo schedule: instance (n, i) fires at
// t_n + i * ii on n's PE. Within a cycle all reads happen before registers are
// released and before results are written. Each value instance is held in a register of
// its producer's PE from its firing cycle until its last consumer fires; reads from
// another PE must come from a neighbour.
inline SimTrace simulate(const DataFlowGraph& g, const CgraArchitecture& a, const Mapping& m, int iterations,
                         const Streams& inputs) {
  if (iterations < 1) throw InvalidInput("iteration count must be positive");
  if (auto vs = check_mapping(g, a, m); !vs.empty()) throw InvalidInput("cannot simulate an invalid mapping: " + describe(vs));
  detail::check_inits(g);

  const int n = g.node_count();
  const int ii = m.ii;
  const auto lifetimes = compute_lifetimes(g, m);
  const Adjacency adj(a);
  std::vector<std::vector<const DfgEdge*>> operands(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) operands[v] = g.operands_of(v);

  struct Instance {
    int node, iteration, cycle;
  };
  std::vector<Instance> firing;
  for (int v = 0; v < n; ++v)
    for (int i = 0; i < iterations; ++i) firing.push_back({v, i, m.time(v) + i * ii});
  std::stable_sort(firing.begin(), firing.end(), [](const Instance& x, const Instance& y) { return x.cycle < y.cycle; });

  SimTrace trace;
  trace.iterations = iterations;
  int last_cycle = 0;
  for (const auto& lt : lifetimes) last_cycle = std::max(last_cycle, lt.birth + (iterations - 1) * ii);
  trace.cycles = last_cycle + 1;
  trace.activity.assign(static_cast<std::size_t>(trace.cycles), std::vector<int>(static_cast<std::size_t>(a.pe_count()), -1));
  trace.peak_registers.assign(static_cast<std::size_t>(a.pe_count()), 0);

  // Register files: slot holds (node, iteration) or (-1, -1).
  using Tag = std::pair<int, int>;
  std::vector<std::vector<Tag>> regs(static_cast<std::size_t>(a.pe_count()),
                                     std::vector<Tag>(static_cast<std::size_t>(a.registers_per_pe), Tag{-1, -1}));
  std::vector<std::vector<std::int32_t>> reg_values(static_cast<std::size_t>(a.pe_count()),
                                                    std::vector<std::int32_t>(static_cast<std::size_t>(a.registers_per_pe), 0));
  std::map<Tag, int> where;  // live instance -> register index on its producer's PE
  std::multimap<int, Tag> releases;  // death cycle -> instance

  std::map<std::pair<int, int>, std::int32_t> out_values;  // (iteration, output node) -> value

  std::size_t next = 0;
  while (next < firing.size()) {
    const int cycle = firing[next].cycle;
    std::size_t end = next;
    while (end < firing.size() && firing[end].cycle == cycle) ++end;

    std::vector<std::int32_t> results;
    for (std::size_t k = next; k < end; ++k) {
      const auto& inst = firing[k];
      const auto& node = g.nodes[inst.node];
      const int pe = m.at(inst.node).pe;
      trace.activity[cycle][pe] = inst.node;
      auto operand = [&](int idx) -> std::int32_t {
        const DfgEdge* e = operands[inst.node][idx];
        const int src_iter = inst.iteration - e->distance;
        if (src_iter < 0) return e->init[inst.iteration];
        const int src_pe = m.at(e->src).pe;
        if (!adj.reaches(src_pe, pe))
          throw SimulationError("node " + std::to_string(inst.node) + " cannot reach PE " + std::to_string(src_pe));
        auto it = where.find({e->src, src_iter});
        if (it == where.end())
          throw SimulationError("value of node " + std::to_string(e->src) + " iteration " + std::to_string(src_iter) +
                                " is not live at cycle " + std::to_string(cycle));
        if (regs[src_pe][it->second] != Tag{e->src, src_iter})
          throw SimulationError("register overwritten before its last read");
        return reg_values[src_pe][it->second];
      };
      std::int32_t r = 0;
      switch (node.op) {
        case OpKind::Const: r = *node.imm; break;
        case OpKind::Input: r = detail::read_input(inputs, *node.stream, inst.iteration); break;
        case OpKind::Output: r = operand(0); break;
        default: r = apply_op(node.op, operand(0), operand(1));
      }
      results.push_back(r);
      if (node.op == OpKind::Output) out_values[{inst.iteration, inst.node}] = r;
    }

    for (auto it = releases.begin(); it != releases.end() && it->first <= cycle;) {
      const Tag tag = it->second;
      const int pe = m.at(tag.first).pe;
      regs[pe][where.at(tag)] = Tag{-1, -1};
      where.erase(tag);
      it = releases.erase(it);
    }

    for (std::size_t k = next; k < end; ++k) {
      const auto& inst = firing[k];
      const auto& lt = lifetimes[inst.node];
      if (lt.span <= 0) continue;
      auto& file = regs[lt.pe];
      auto free_reg = std::find(file.begin(), file.end(), Tag{-1, -1});
      if (free_reg == file.end())
        throw SimulationError("register file of PE " + std::to_string(lt.pe) + " overflows at cycle " +
                              std::to_string(cycle));
      *free_reg = Tag{inst.node, inst.iteration};
      const int idx = static_cast<int>(free_reg - file.begin());
      reg_values[lt.pe][idx] = results[k - next];
      where[{inst.node, inst.iteration}] = idx;
      releases.emplace(cycle + lt.span, Tag{inst.node, inst.iteration});
      const int used = static_cast<int>(std::count_if(file.begin(), file.end(), [](const Tag& t) { return t.first >= 0; }));
      trace.peak_registers[lt.pe] = std::max(trace.peak_registers[lt.pe], used);
    }
    next = end;
  }

  for (const auto& node : g.nodes)
    if (node.op == OpKind::Output) trace.outputs[*node.stream];
  for (int i = 0; i < iterations; ++i)
    for (const auto& node : g.nodes)
      if (node.op == OpKind::Output) trace.outputs[*node.stream].push_back(out_values.at({i, node.id}));
  return trace;
}

// One block per cycle, PE grid rows x cols, "." for idle PEs.
inline void render_trace(const SimTrace& trace, const CgraArchitecture& a, const Mapping& m, std::ostream& os) {
  os << "# trace: time runs downward, one " << a.rows << "x" << a.cols
     << " block per cycle, cell = node id firing on that PE or '.'; ii=" << m.ii << "\n";
  for (int c = 0; c < trace.cycles; ++c) {
    os << "cycle " << c << "\n";
    for (int r = 0; r < a.rows; ++r) {
      for (int col = 0; col < a.cols; ++col) {
        const int v = trace.activity[c][a.pe_at(r, col)];
        os << (col ? " " : "  ") << (v < 0 ? std::string(".") : std::to_string(v));
      }
      os << "\n";
    }
  }
}

// Kernel view: slot x PE grid of the mapping itself.
inline void render_kernel(const Mapping& m, const CgraArchitecture& a, std::ostream& os) {
  os << "# kernel: one " << a.rows << "x" << a.cols << " block per slot, cell = node@label or '.'\n";
  for (int s = 0; s < m.ii; ++s) {
    os << "slot " << s << "\n";
    for (int r = 0; r < a.rows; ++r) {
      for (int c = 0; c < a.cols; ++c) {
        std::string cell = ".";
        for (std::size_t v = 0; v < m.assignment.size(); ++v)
          if (m.assignment[v] && m.assignment[v]->pe == a.pe_at(r, c) && m.assignment[v]->slot == s)
            cell = std::to_string(v) + "@" + std::to_string(m.assignment[v]->label);
        os << (c ? " " : "  ") << cell;
      }
      os << "\n";
    }
  }
}

// ---------------------------------------------------------------------------
// Exhaustive minimal-II oracle
// ---------------------------------------------------------------------------

struct OracleOptions {
  int node_cap = 8;
  std::function<int(int)> slack = default_slack;  // per-II mobility slack
  bool check_registers = false;                   // also require a register-feasible witness
};

// Depth-first search over the KMS candidate space at one II, under the same placement
// rules as the encoder. The first node (in dependence order) is restricted to one PE per
// orbit of the grid's automorphism group.
inline std::optional<Mapping> brute_force_at_ii(const DataFlowGraph& g, const CgraArchitecture& a, int ii,
                                                const OracleOptions& opts = {}) {
  const int n = g.node_count();
  if (n > opts.node_cap)
    throw InvalidInput("oracle cap exceeded: " + std::to_string(n) + " nodes > " + std::to_string(opts.node_cap));
  const auto kms = build_kms(build_mobility(g, opts.slack(ii)), ii);
  const auto order = topological_order(g);
  const Adjacency adj(a);
  const auto reps = orbit_representatives(a);
  std::vector<int> all_pes(static_cast<std::size_t>(a.pe_count()));
  for (int p = 0; p < a.pe_count(); ++p) all_pes[p] = p;

  Mapping m;
  m.ii = ii;
  m.assignment.assign(static_cast<std::size_t>(n), std::nullopt);
  std::vector<char> busy(static_cast<std::size_t>(a.pe_count() * ii), 0);

  auto consistent = [&](int v) {
    for (const auto& e : g.edges) {
      if (e.src != v && e.dst != v) continue;
      if (!m.assignment[e.src] || !m.assignment[e.dst]) continue;
      const auto& pu = *m.assignment[e.src];
      const auto& pw = *m.assignment[e.dst];
      if (!adj.reaches(pu.pe, pw.pe)) return false;
      if (pw.time(ii) + e.distance * ii <= pu.time(ii)) return false;
    }
    return true;
  };

  std::function<bool(std::size_t)> place = [&](std::size_t depth) -> bool {
    if (depth == order.size()) return !opts.check_registers || check_register_pressure(g, a, m).ok;
    const int v = order[depth];
    const auto& pes = depth == 0 ? reps : all_pes;
    for (const auto& c : kms.candidates[v])
      for (int p : pes) {
        char& cell = busy[p * ii + c.slot];
        if (cell) continue;
        m.assignment[v] = Placement{p, c.slot, c.label};
        if (consistent(v)) {
          cell = 1;
          if (place(depth + 1)) return true;
          cell = 0;
        }
        m.assignment[v].reset();
      }
    return false;
  };
  if (n == 0 || place(0)) return m;
  return std::nullopt;
}

inline std::optional<std::pair<int, Mapping>> brute_force_min_ii(const DataFlowGraph& g, const CgraArchitecture& a,
                                                                 int ii_max, const OracleOptions& opts = {}) {
  if (g.node_count() > opts.node_cap)
    throw InvalidInput("oracle cap exceeded: " + std::to_string(g.node_count()) + " nodes > " +
                       std::to_string(opts.node_cap));
  for (int ii = compute_mii(g, a).m_ii; ii <= ii_max; ++ii)
    if (auto m = brute_force_at_ii(g, a, ii, opts)) return std::pair(ii, std::move(*m));
  return std::nullopt;
}

}  // namespace satmap
