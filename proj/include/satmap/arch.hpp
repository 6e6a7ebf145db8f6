#pragma once

#include <algorithm>
#include <deque>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "satmap/common.hpp"

namespace satmap {

enum class Topology { Mesh2d, Torus2d };

inline std::string_view topology_name(Topology t) { return t == Topology::Mesh2d ? "mesh2d" : "torus2d"; }

// Rectangular PE grid. PE ids are row-major: pe = row * cols + col.
struct CgraArchitecture {
  int rows = 1;
  int cols = 1;
  Topology topology = Topology::Mesh2d;
  int registers_per_pe = 4;

  int pe_count() const { return rows * cols; }
  int row_of(int pe) const { return pe / cols; }
  int col_of(int pe) const { return pe % cols; }
  int pe_at(int row, int col) const { return row * cols + col; }

  bool operator==(const CgraArchitecture&) const = default;
};

inline void validate_arch(const CgraArchitecture& a) {
  if (a.rows <= 0 || a.cols <= 0)
    throw InvalidInput("architecture dimensions must be positive (got " + std::to_string(a.rows) + "x" +
                       std::to_string(a.cols) + ")");
  if (a.registers_per_pe <= 0) throw InvalidInput("registers_per_pe must be positive");
}

inline CgraArchitecture make_arch(int rows, int cols, Topology topology = Topology::Mesh2d, int registers = 4) {
  CgraArchitecture a{rows, cols, topology, registers};
  validate_arch(a);
  return a;
}

inline CgraArchitecture parse_arch(std::string_view text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError("architecture syntax error at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  if (!doc.is_object()) throw ParseError("architecture document must be an object");
  auto get_int = [&](const char* key, std::optional<int> fallback) -> int {
    if (!doc.contains(key)) {
      if (fallback) return *fallback;
      throw ParseError(std::string("architecture is missing \"") + key + "\"");
    }
    if (!doc[key].is_number_integer()) throw ParseError(std::string("\"") + key + "\" must be an integer");
    return doc[key].get<int>();
  };
  CgraArchitecture a;
  a.rows = get_int("rows", std::nullopt);
  a.cols = get_int("cols", std::nullopt);
  a.registers_per_pe = get_int("registers_per_pe", 4);
  if (doc.contains("topology")) {
    if (!doc["topology"].is_string()) throw ParseError("\"topology\" must be a string");
    const auto tag = doc["topology"].get<std::string>();
    if (tag == "mesh2d") a.topology = Topology::Mesh2d;
    else if (tag == "torus2d") a.topology = Topology::Torus2d;
    else throw ParseError("unknown topology \"" + tag + "\"");
  }
  try {
    validate_arch(a);
  } catch (const InvalidInput& e) {
    throw ParseError(e.what());
  }
  return a;
}

inline std::string serialize_arch(const CgraArchitecture& a) {
  nlohmann::json doc{{"rows", a.rows},
                     {"cols", a.cols},
                     {"topology", std::string(topology_name(a.topology))},
                     {"registers_per_pe", a.registers_per_pe}};
  return doc.dump() + "\n";
}

inline void check_pe(const CgraArchitecture& a, int pe) {
  if (pe < 0 || pe >= a.pe_count())
    throw InvalidInput("PE " + std::to_string(pe) + " out of range for " + std::to_string(a.pe_count()) + " PEs");
}

// N/S/E/W neighbours, sorted, excluding `pe` itself. Torus wraparound duplicates collapse.
inline std::vector<int> neighbors(const CgraArchitecture& a, int pe) {
  check_pe(a, pe);
  const int r = a.row_of(pe), c = a.col_of(pe);
  std::set<int> out;
  const int dr[] = {-1, 1, 0, 0};
  const int dc[] = {0, 0, -1, 1};
  for (int k = 0; k < 4; ++k) {
    int nr = r + dr[k], nc = c + dc[k];
    if (a.topology == Topology::Torus2d) {
      nr = static_cast<int>(pos_mod(nr, a.rows));
      nc = static_cast<int>(pos_mod(nc, a.cols));
    } else if (nr < 0 || nr >= a.rows || nc < 0 || nc >= a.cols) {
      continue;
    }
    const int q = a.pe_at(nr, nc);
    if (q != pe) out.insert(q);
  }
  return {out.begin(), out.end()};
}

// Dense adjacency-or-self matrix, the relation producer/consumer placement is checked against.
class Adjacency {
 public:
  explicit Adjacency(const CgraArchitecture& a) : n_(a.pe_count()), reach_(static_cast<std::size_t>(n_ * n_), false) {
    for (int p = 0; p < n_; ++p) {
      reach_[p * n_ + p] = true;
      for (int q : neighbors(a, p)) reach_[p * n_ + q] = true;
    }
  }
  bool reaches(int producer_pe, int consumer_pe) const { return reach_[producer_pe * n_ + consumer_pe]; }

 private:
  int n_;
  std::vector<bool> reach_;
};

// PEs within `hops` steps of `pe`, including `pe`. Sorted.
inline std::vector<int> reachable_set(const CgraArchitecture& a, int pe, int hops) {
  check_pe(a, pe);
  if (hops < 0) throw InvalidInput("hop count must be non-negative");
  std::vector<int> dist(static_cast<std::size_t>(a.pe_count()), -1);
  std::deque<int> queue{pe};
  dist[pe] = 0;
  while (!queue.empty()) {
    const int p = queue.front();
    queue.pop_front();
    if (dist[p] == hops) continue;
    for (int q : neighbors(a, p)) {
      if (dist[q] != -1) continue;
      dist[q] = dist[p] + 1;
      queue.push_back(q);
    }
  }
  std::vector<int> out;
  for (int p = 0; p < a.pe_count(); ++p)
    if (dist[p] != -1) out.push_back(p);
  return out;
}

// Longest shortest-path hop count over all PE pairs.
inline int diameter(const CgraArchitecture& a) {
  if (a.topology == Topology::Torus2d) return a.rows / 2 + a.cols / 2;
  return (a.rows - 1) + (a.cols - 1);
}

// Grid automorphisms that preserve the neighbour relation. Each entry maps pe -> pe.
// Mesh: the dihedral symmetries of the rectangle (of the square when rows == cols).
// Torus: those combined with all cyclic translations.
inline std::vector<std::vector<int>> grid_automorphisms(const CgraArchitecture& a) {
  std::vector<std::vector<int>> out;
  const int R = a.rows, C = a.cols;
  const bool square = R == C;
  const int shifts_r = a.topology == Topology::Torus2d ? R : 1;
  const int shifts_c = a.topology == Topology::Torus2d ? C : 1;
  for (int transpose = 0; transpose <= (square ? 1 : 0); ++transpose)
    for (int flip_r = 0; flip_r <= 1; ++flip_r)
      for (int flip_c = 0; flip_c <= 1; ++flip_c)
        for (int sr = 0; sr < shifts_r; ++sr)
          for (int sc = 0; sc < shifts_c; ++sc) {
            std::vector<int> perm(static_cast<std::size_t>(a.pe_count()));
            for (int r = 0; r < R; ++r)
              for (int c = 0; c < C; ++c) {
                int nr = flip_r ? R - 1 - r : r;
                int nc = flip_c ? C - 1 - c : c;
                nr = (nr + sr) % R;
                nc = (nc + sc) % C;
                if (transpose) std::swap(nr, nc);
                perm[a.pe_at(r, c)] = a.pe_at(nr, nc);
              }
            out.push_back(std::move(perm));
          }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// Smallest PE of each orbit under grid_automorphisms.
inline std::vector<int> orbit_representatives(const CgraArchitecture& a) {
  const auto autos = grid_automorphisms(a);
  std::vector<int> out;
  for (int p = 0; p < a.pe_count(); ++p) {
    bool smallest = true;
    for (const auto& perm : autos)
      if (perm[p] < p) smallest = false;
    if (smallest) out.push_back(p);
  }
  return out;
}

}  // namespace satmap
