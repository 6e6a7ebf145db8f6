#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "satmap/common.hpp"

namespace satmap {

enum class OpKind { Const, Input, Output, Add, Sub, Mul, And, Or, Xor, Shl, Shr };

inline constexpr std::string_view op_name(OpKind op) {
  switch (op) {
    case OpKind::Const: return "const";
    case OpKind::Input: return "input";
    case OpKind::Output: return "output";
    case OpKind::Add: return "add";
    case OpKind::Sub: return "sub";
    case OpKind::Mul: return "mul";
    case OpKind::And: return "and";
    case OpKind::Or: return "or";
    case OpKind::Xor: return "xor";
    case OpKind::Shl: return "shl";
    case OpKind::Shr: return "shr";
  }
  return "?";
}

inline std::optional<OpKind> op_from_name(std::string_view name) {
  for (OpKind op : {OpKind::Const, OpKind::Input, OpKind::Output, OpKind::Add, OpKind::Sub, OpKind::Mul,
                    OpKind::And, OpKind::Or, OpKind::Xor, OpKind::Shl, OpKind::Shr}) {
    if (op_name(op) == name) return op;
  }
  return std::nullopt;
}

// Number of data operands an operation consumes.
inline constexpr int op_arity(OpKind op) {
  switch (op) {
    case OpKind::Const:
    case OpKind::Input: return 0;
    case OpKind::Output: return 1;
    default: return 2;
  }
}

// 32-bit two's-complement evaluation with wrapping; shift amounts are taken mod 32.
// Shr is a logical shift.
inline std::int32_t apply_op(OpKind op, std::int32_t a, std::int32_t b) {
  const auto ua = static_cast<std::uint32_t>(a);
  const auto ub = static_cast<std::uint32_t>(b);
  std::uint32_t r = 0;
  switch (op) {
    case OpKind::Add: r = ua + ub; break;
    case OpKind::Sub: r = ua - ub; break;
    case OpKind::Mul: r = ua * ub; break;
    case OpKind::And: r = ua & ub; break;
    case OpKind::Or: r = ua | ub; break;
    case OpKind::Xor: r = ua ^ ub; break;
    case OpKind::Shl: r = ua << (ub & 31u); break;
    case OpKind::Shr: r = ua >> (ub & 31u); break;
    case OpKind::Output: r = ua; break;
    case OpKind::Const:
    case OpKind::Input: throw InvalidInput("apply_op called on a source operation");
  }
  return static_cast<std::int32_t>(r);
}

struct DfgNode {
  int id = 0;
  OpKind op = OpKind::Const;
  std::optional<std::int32_t> imm;  // const only
  std::optional<int> stream;        // input/output only

  bool operator==(const DfgNode&) const = default;
};

// distance 0: intra-iteration dependency. distance >= 1: loop-carried, with one initial
// value per carried instance (init[i] is the operand seen by iteration i < distance).
struct DfgEdge {
  int src = 0;
  int dst = 0;
  int operand = 0;
  int distance = 0;
  std::vector<std::int32_t> init;

  bool operator==(const DfgEdge&) const = default;
};

struct DataFlowGraph {
  std::vector<DfgNode> nodes;
  std::vector<DfgEdge> edges;

  int node_count() const { return static_cast<int>(nodes.size()); }

  int add_node(OpKind op, std::optional<std::int32_t> imm = std::nullopt, std::optional<int> stream = std::nullopt) {
    const int id = node_count();
    if (op == OpKind::Const && !imm) imm = 0;
    if ((op == OpKind::Input || op == OpKind::Output) && !stream) stream = 0;
    nodes.push_back(DfgNode{id, op, imm, stream});
    return id;
  }

  // Loop-carried edges without explicit init values get zeros.
  void add_edge(int src, int dst, int operand, int distance = 0, std::vector<std::int32_t> init = {}) {
    if (distance > 0 && init.empty()) init.assign(static_cast<std::size_t>(distance), 0);
    edges.push_back(DfgEdge{src, dst, operand, distance, std::move(init)});
  }

  // Incoming edges of `node`, ordered by operand index.
  std::vector<const DfgEdge*> operands_of(int node) const {
    std::vector<const DfgEdge*> out;
    for (const auto& e : edges)
      if (e.dst == node) out.push_back(&e);
    std::sort(out.begin(), out.end(), [](const DfgEdge* a, const DfgEdge* b) { return a->operand < b->operand; });
    return out;
  }

  int max_distance() const {
    int d = 0;
    for (const auto& e : edges) d = std::max(d, e.distance);
    return d;
  }

  bool operator==(const DataFlowGraph&) const = default;
};

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

struct DfgViolation {
  enum class Kind {
    NonDenseId,
    UnknownNode,
    BadOperandIndex,
    NegativeDistance,
    DuplicateOperand,
    MissingOperand,
    MissingImmediate,
    MissingStream,
    BadInitLength,
    ZeroDistanceCycle,
  };
  Kind kind;
  int node = -1;           // offending node (consumer for operand problems)
  int slot = -1;           // operand slot, when relevant
  int edge = -1;           // index into DataFlowGraph::edges, when relevant
  std::vector<int> cycle;  // members of a zero-distance strongly connected component

  bool operator==(const DfgViolation&) const = default;

  std::string describe() const {
    std::ostringstream os;
    switch (kind) {
      case Kind::NonDenseId: os << "non-dense-id(index=" << node << ")"; break;
      case Kind::UnknownNode: os << "unknown-node(edge=" << edge << ")"; break;
      case Kind::BadOperandIndex: os << "bad-operand-index(node=" << node << ", slot=" << slot << ")"; break;
      case Kind::NegativeDistance: os << "negative-distance(edge=" << edge << ")"; break;
      case Kind::DuplicateOperand: os << "duplicate-operand(node=" << node << ", slot=" << slot << ")"; break;
      case Kind::MissingOperand: os << "missing-operand(node=" << node << ", slot=" << slot << ")"; break;
      case Kind::MissingImmediate: os << "missing-immediate(node=" << node << ")"; break;
      case Kind::MissingStream: os << "missing-stream(node=" << node << ")"; break;
      case Kind::BadInitLength: os << "bad-init-length(edge=" << edge << ")"; break;
      case Kind::ZeroDistanceCycle: {
        os << "zero-distance-cycle([";
        for (std::size_t i = 0; i < cycle.size(); ++i) os << (i ? "," : "") << cycle[i];
        os << "])";
        break;
      }
    }
    return os.str();
  }
};

namespace detail {

// Tarjan SCC over distance-0 edges. Returns components that contain a cycle
// (size > 1, or a distance-0 self-loop), each sorted ascending.
inline std::vector<std::vector<int>> zero_distance_cycles(const DataFlowGraph& g) {
  const int n = g.node_count();
  std::vector<std::vector<int>> succ(static_cast<std::size_t>(n));
  std::vector<bool> self_loop(static_cast<std::size_t>(n), false);
  for (const auto& e : g.edges) {
    if (e.distance != 0 || e.src < 0 || e.src >= n || e.dst < 0 || e.dst >= n) continue;
    succ[e.src].push_back(e.dst);
    if (e.src == e.dst) self_loop[e.src] = true;
  }

  std::vector<int> index(n, -1), low(n, 0), stack;
  std::vector<bool> on_stack(n, false);
  std::vector<std::vector<int>> out;
  int counter = 0;

  // Iterative DFS; frames are (node, next successor position).
  for (int root = 0; root < n; ++root) {
    if (index[root] != -1) continue;
    std::vector<std::pair<int, std::size_t>> frames{{root, 0}};
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!frames.empty()) {
      auto& [v, pos] = frames.back();
      if (pos < succ[v].size()) {
        const int w = succ[v][pos++];
        if (index[w] == -1) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = true;
          frames.emplace_back(w, 0);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      if (low[v] == index[v]) {
        std::vector<int> comp;
        int w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp.push_back(w);
        } while (w != v);
        if (comp.size() > 1 || self_loop[v]) {
          std::sort(comp.begin(), comp.end());
          out.push_back(std::move(comp));
        }
      }
      const int done = v;
      frames.pop_back();
      if (!frames.empty()) low[frames.back().first] = std::min(low[frames.back().first], low[done]);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detail

// Every violated structural invariant, ordered by offending node id (edge index for
// edge-only problems, which sort first).
inline std::vector<DfgViolation> validate_dfg(const DataFlowGraph& g) {
  using K = DfgViolation::Kind;
  std::vector<DfgViolation> out;
  auto issue = [](K kind, int node = -1, int slot = -1, int edge = -1) { return DfgViolation{kind, node, slot, edge, {}}; };
  const int n = g.node_count();

  for (int i = 0; i < n; ++i) {
    const auto& node = g.nodes[i];
    if (node.id != i) out.push_back(issue(K::NonDenseId, i));
    if (node.op == OpKind::Const && !node.imm) out.push_back(issue(K::MissingImmediate, i));
    if ((node.op == OpKind::Input || node.op == OpKind::Output) && !node.stream) out.push_back(issue(K::MissingStream, i));
  }

  std::map<std::pair<int, int>, int> fed;  // (dst, operand) -> edge count
  for (int ei = 0; ei < static_cast<int>(g.edges.size()); ++ei) {
    const auto& e = g.edges[ei];
    if (e.src < 0 || e.src >= n || e.dst < 0 || e.dst >= n) {
      out.push_back(issue(K::UnknownNode, -1, -1, ei));
      continue;
    }
    if (e.distance < 0) {
      out.push_back(issue(K::NegativeDistance, e.dst, -1, ei));
      continue;
    }
    if (e.distance > 0 && static_cast<int>(e.init.size()) != e.distance) out.push_back(issue(K::BadInitLength, e.dst, e.operand, ei));
    if (e.operand < 0 || e.operand >= op_arity(g.nodes[e.dst].op)) {
      out.push_back(issue(K::BadOperandIndex, e.dst, e.operand, ei));
      continue;
    }
    if (++fed[{e.dst, e.operand}] == 2) out.push_back(issue(K::DuplicateOperand, e.dst, e.operand, ei));
  }

  for (int i = 0; i < n; ++i) {
    for (int s = 0; s < op_arity(g.nodes[i].op); ++s)
      if (!fed.count({i, s})) out.push_back(issue(K::MissingOperand, i, s));
  }

  for (auto& comp : detail::zero_distance_cycles(g)) {
    out.push_back(DfgViolation{K::ZeroDistanceCycle, comp.front(), -1, -1, std::move(comp)});
  }

  std::stable_sort(out.begin(), out.end(), [](const DfgViolation& a, const DfgViolation& b) {
    return std::pair(a.node, a.edge) < std::pair(b.node, b.edge);
  });
  return out;
}

inline std::string describe(const std::vector<DfgViolation>& vs) {
  std::string s;
  for (const auto& v : vs) s += (s.empty() ? "" : "; ") + v.describe();
  return s;
}

// ---------------------------------------------------------------------------
// Document format
// ---------------------------------------------------------------------------

// Parses the JSON DFG document. Node ids may be any distinct non-negative integers;
// they are renumbered 0..N-1 in ascending order of the original id.
inline DataFlowGraph parse_dfg(std::string_view text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError("DFG syntax error at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("nodes") || !doc["nodes"].is_array())
    throw ParseError("DFG document must be an object with a \"nodes\" array");

  auto get_int = [](const json& obj, const char* key, const char* what) -> std::int64_t {
    if (!obj.is_object() || !obj.contains(key) || !obj[key].is_number_integer())
      throw ParseError(std::string(what) + " is missing integer field \"" + key + "\"");
    return obj[key].get<std::int64_t>();
  };

  std::map<std::int64_t, DfgNode> by_id;
  for (const auto& jn : doc["nodes"]) {
    const auto id = get_int(jn, "id", "node");
    if (id < 0) throw ParseError("negative node id " + std::to_string(id));
    if (!jn.contains("op") || !jn["op"].is_string()) throw ParseError("node " + std::to_string(id) + " is missing \"op\"");
    const auto op = op_from_name(jn["op"].get<std::string>());
    if (!op) throw ParseError("node " + std::to_string(id) + " has unknown op \"" + jn["op"].get<std::string>() + "\"");
    DfgNode node{static_cast<int>(id), *op, std::nullopt, std::nullopt};
    if (jn.contains("imm")) {
      const auto imm = get_int(jn, "imm", "node");
      if (imm < INT32_MIN || imm > static_cast<std::int64_t>(UINT32_MAX))
        throw ParseError("node " + std::to_string(id) + " immediate does not fit 32 bits");
      node.imm = static_cast<std::int32_t>(static_cast<std::uint32_t>(imm));
    }
    if (jn.contains("stream")) {
      const auto s = get_int(jn, "stream", "node");
      if (s < 0) throw ParseError("node " + std::to_string(id) + " has negative stream id");
      node.stream = static_cast<int>(s);
    }
    if (node.op == OpKind::Const && !node.imm) throw ParseError("const node " + std::to_string(id) + " has no \"imm\"");
    if ((node.op == OpKind::Input || node.op == OpKind::Output) && !node.stream) node.stream = 0;
    if (!by_id.emplace(id, node).second) throw ParseError("duplicate node id " + std::to_string(id));
  }

  std::map<std::int64_t, int> dense;
  DataFlowGraph g;
  for (auto& [orig, node] : by_id) {
    node.id = static_cast<int>(dense.size());
    dense[orig] = node.id;
    g.nodes.push_back(node);
  }
  auto remap = [&](std::int64_t id) {
    auto it = dense.find(id);
    if (it == dense.end()) throw ParseError("edge references unknown node " + std::to_string(id));
    return it->second;
  };

  std::map<std::tuple<int, int, int>, std::size_t> edge_index;
  std::set<std::pair<int, int>> fed;
  if (doc.contains("edges")) {
    if (!doc["edges"].is_array()) throw ParseError("\"edges\" must be an array");
    for (const auto& je : doc["edges"]) {
      DfgEdge e;
      e.src = remap(get_int(je, "src", "edge"));
      e.dst = remap(get_int(je, "dst", "edge"));
      e.operand = static_cast<int>(get_int(je, "operand", "edge"));
      e.distance = je.contains("distance") ? static_cast<int>(get_int(je, "distance", "edge")) : 0;
      if (e.distance < 0) throw ParseError("edge has negative distance");
      if (!fed.emplace(e.dst, e.operand).second)
        throw ParseError("operand slot " + std::to_string(e.operand) + " of node " + std::to_string(e.dst) + " fed twice");
      edge_index[{e.src, e.dst, e.operand}] = g.edges.size();
      g.edges.push_back(std::move(e));
    }
  }
  if (doc.contains("init")) {
    if (!doc["init"].is_array()) throw ParseError("\"init\" must be an array");
    for (const auto& ji : doc["init"]) {
      if (!ji.is_object() || !ji.contains("edge") || !ji["edge"].is_array() || ji["edge"].size() != 3 ||
          !ji.contains("values") || !ji["values"].is_array())
        throw ParseError("init entry must be {\"edge\": [src,dst,operand], \"values\": [...]}");
      const auto key = std::make_tuple(remap(ji["edge"][0].get<std::int64_t>()), remap(ji["edge"][1].get<std::int64_t>()),
                                       ji["edge"][2].get<int>());
      auto it = edge_index.find(key);
      if (it == edge_index.end()) throw ParseError("init entry references an edge that does not exist");
      auto& e = g.edges[it->second];
      e.init.clear();
      for (const auto& v : ji["values"]) {
        if (!v.is_number_integer()) throw ParseError("init values must be integers");
        e.init.push_back(static_cast<std::int32_t>(static_cast<std::uint32_t>(v.get<std::int64_t>())));
      }
    }
  }

  if (auto vs = validate_dfg(g); !vs.empty()) throw ParseError("invalid DFG: " + describe(vs));
  return g;
}

inline std::string serialize_dfg(const DataFlowGraph& g) {
  using nlohmann::json;
  json doc{{"nodes", json::array()}, {"edges", json::array()}, {"init", json::array()}};
  for (const auto& n : g.nodes) {
    json jn{{"id", n.id}, {"op", std::string(op_name(n.op))}};
    if (n.imm) jn["imm"] = *n.imm;
    if (n.stream) jn["stream"] = *n.stream;
    doc["nodes"].push_back(std::move(jn));
  }
  for (const auto& e : g.edges) {
    doc["edges"].push_back({{"src", e.src}, {"dst", e.dst}, {"operand", e.operand}, {"distance", e.distance}});
    if (e.distance > 0) doc["init"].push_back({{"edge", {e.src, e.dst, e.operand}}, {"values", e.init}});
  }
  return doc.dump(2) + "\n";
}

// Graphviz description: one node per line, one edge per line. Loop-carried edges are red.
inline void export_graph_description(const DataFlowGraph& g, std::ostream& os) {
  os << "digraph dfg {\n";
  for (const auto& n : g.nodes) {
    os << "  n" << n.id << " [label=\"" << n.id << ": " << op_name(n.op);
    if (n.imm) os << " " << *n.imm;
    if (n.stream) os << " s" << *n.stream;
    os << "\"];\n";
  }
  for (const auto& e : g.edges) {
    os << "  n" << e.src << " -> n" << e.dst << " [label=\"op" << e.operand;
    if (e.distance) os << " d" << e.distance << "\", color=red];\n";
    else os << "\"];\n";
  }
  os << "}\n";
}

}  // namespace satmap
