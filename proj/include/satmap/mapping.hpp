#pragma once

#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "satmap/arch.hpp"
#include "satmap/common.hpp"
#include "satmap/dfg.hpp"

namespace satmap {

struct Placement {
  int pe = 0;
  int slot = 0;
  int label = 0;

  int time(int ii) const { return label * ii + slot; }
  bool operator==(const Placement&) const = default;
};

// Space-time mapping of every DFG node at a fixed II. Nodes missing from the
// assignment are represented by std::nullopt.
struct Mapping {
  int ii = 1;
  std::vector<std::optional<Placement>> assignment;
  std::string fingerprint;

  bool total() const {
    for (const auto& p : assignment)
      if (!p) return false;
    return true;
  }
  const Placement& at(int node) const {
    if (node < 0 || node >= static_cast<int>(assignment.size()) || !assignment[node])
      throw InvalidInput("mapping has no placement for node " + std::to_string(node));
    return *assignment[node];
  }
  int time(int node) const { return at(node).time(ii); }

  bool operator==(const Mapping&) const = default;
};

// Identifies the (DFG, architecture) pair a mapping was produced for.
inline std::string input_fingerprint(const DataFlowGraph& g, const CgraArchitecture& a) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << fnv1a(serialize_arch(a), fnv1a(serialize_dfg(g)));
  return os.str();
}

inline nlohmann::json mapping_to_json(const Mapping& m) {
  nlohmann::json doc{{"ii", m.ii}, {"assignment", nlohmann::json::array()}};
  for (std::size_t n = 0; n < m.assignment.size(); ++n) {
    if (!m.assignment[n]) continue;
    const auto& p = *m.assignment[n];
    doc["assignment"].push_back({{"node", n}, {"pe", p.pe}, {"slot", p.slot}, {"label", p.label}});
  }
  if (!m.fingerprint.empty()) doc["fingerprint"] = m.fingerprint;
  return doc;
}

// `node_count` sizes the assignment; unmentioned nodes stay unassigned.
inline Mapping parse_mapping(std::string_view text, int node_count) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError("mapping syntax error at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("ii") || !doc["ii"].is_number_integer() || !doc.contains("assignment") ||
      !doc["assignment"].is_array())
    throw ParseError("mapping document needs integer \"ii\" and an \"assignment\" array");
  Mapping m;
  m.ii = doc["ii"].get<int>();
  if (m.ii < 1) throw ParseError("mapping II must be positive");
  m.assignment.assign(static_cast<std::size_t>(node_count), std::nullopt);
  for (const auto& ja : doc["assignment"]) {
    for (const char* key : {"node", "pe", "slot", "label"})
      if (!ja.contains(key) || !ja[key].is_number_integer())
        throw ParseError(std::string("assignment entry is missing integer \"") + key + "\"");
    const int node = ja["node"].get<int>();
    if (node < 0 || node >= node_count) throw ParseError("assignment names unknown node " + std::to_string(node));
    if (m.assignment[node]) throw ParseError("node " + std::to_string(node) + " assigned twice");
    m.assignment[node] = Placement{ja["pe"].get<int>(), ja["slot"].get<int>(), ja["label"].get<int>()};
  }
  if (doc.contains("fingerprint") && doc["fingerprint"].is_string()) m.fingerprint = doc["fingerprint"].get<std::string>();
  return m;
}

}  // namespace satmap
