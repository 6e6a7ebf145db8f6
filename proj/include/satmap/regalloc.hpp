#pragma once

#include <algorithm>
#include <vector>

#include <json.hpp>

#include "satmap/arch.hpp"
#include "satmap/dfg.hpp"
#include "satmap/mapping.hpp"

namespace satmap {

// A value occupies one register of its producer's PE over [birth, death) in absolute
// schedule time; the next iteration's instance starts ii cycles later.
struct ValueLifetime {
  int producer = 0;
  int pe = 0;
  int birth = 0;
  int death = 0;
  int span = 0;

  bool operator==(const ValueLifetime&) const = default;
};

// One lifetime per node. Nodes without consumers get span 0 and never hold a register.
inline std::vector<ValueLifetime> compute_lifetimes(const DataFlowGraph& g, const Mapping& m) {
  std::vector<ValueLifetime> out;
  out.reserve(g.nodes.size());
  for (int n = 0; n < g.node_count(); ++n) {
    const int t = m.time(n);
    out.push_back({n, m.at(n).pe, t, t, 0});
  }
  for (const auto& e : g.edges) {
    auto& lt = out[e.src];
    lt.death = std::max(lt.death, m.time(e.dst) + e.distance * m.ii);
  }
  for (auto& lt : out) lt.span = lt.death - lt.birth;
  return out;
}

// Live instances of one value at kernel slot `slot` in the steady state.
inline int instances_live_at(const ValueLifetime& lt, int slot, int ii) {
  const int offset = static_cast<int>(pos_mod(slot - lt.birth, ii));
  if (lt.span <= offset) return 0;
  return (lt.span - 1 - offset) / ii + 1;
}

struct PressureViolation {
  int pe = 0;
  int slot = 0;
  int pressure = 0;
  int capacity = 0;

  bool operator==(const PressureViolation&) const = default;
};

struct PressureReport {
  bool ok = true;
  int ii = 1;
  std::vector<std::vector<int>> pressure;  // [pe][slot]
  std::vector<PressureViolation> violations;

  int max_pressure() const {
    int best = 0;
    for (const auto& row : pressure)
      for (int p : row) best = std::max(best, p);
    return best;
  }
};

// MaxLive per (PE, kernel slot) against registers_per_pe.
inline PressureReport check_register_pressure(const std::vector<ValueLifetime>& lifetimes, const CgraArchitecture& a,
                                              int ii) {
  PressureReport r;
  r.ii = ii;
  r.pressure.assign(static_cast<std::size_t>(a.pe_count()), std::vector<int>(static_cast<std::size_t>(ii), 0));
  for (const auto& lt : lifetimes) {
    if (lt.span <= 0) continue;
    for (int s = 0; s < ii; ++s) r.pressure[lt.pe][s] += instances_live_at(lt, s, ii);
  }
  for (int p = 0; p < a.pe_count(); ++p)
    for (int s = 0; s < ii; ++s)
      if (r.pressure[p][s] > a.registers_per_pe) r.violations.push_back({p, s, r.pressure[p][s], a.registers_per_pe});
  r.ok = r.violations.empty();
  return r;
}

inline PressureReport check_register_pressure(const DataFlowGraph& g, const CgraArchitecture& a, const Mapping& m) {
  return check_register_pressure(compute_lifetimes(g, m), a, m.ii);
}

inline nlohmann::json pressure_to_json(const PressureReport& r) {
  nlohmann::json doc{{"ok", r.ok}, {"max_pressure", r.max_pressure()}, {"per_slot_pressure", r.pressure}};
  doc["violations"] = nlohmann::json::array();
  for (const auto& v : r.violations)
    doc["violations"].push_back({{"pe", v.pe}, {"slot", v.slot}, {"pressure", v.pressure}, {"capacity", v.capacity}});
  return doc;
}

}  // namespace satmap
