#pragma once

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "satmap/cnf.hpp"
#include "satmap/common.hpp"

namespace satmap {

enum class SolveStatus { Sat, Unsat, Timeout };

inline const char* status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::Sat: return "sat";
    case SolveStatus::Unsat: return "unsat";
    case SolveStatus::Timeout: return "timeout";
  }
  return "?";
}

struct SolveStats {
  std::uint64_t decisions = 0;
  std::uint64_t conflicts = 0;
  std::uint64_t propagations = 0;
  std::uint64_t restarts = 0;
  double wall_seconds = 0;
};

struct SolveOutcome {
  SolveStatus status = SolveStatus::Timeout;
  std::optional<std::vector<bool>> assignment;  // index 1..var_count, present iff sat
  SolveStats stats;
};

struct SolverOptions {
  std::optional<std::uint64_t> seed;  // randomized initial activities and phases when set
  int restart_base = 64;              // conflicts per Luby unit
  double var_decay = 0.95;
  double clause_decay = 0.999;
};

// Luby sequence 1,1,2,1,1,2,4,... (0-based index).
inline std::uint64_t luby(std::uint64_t i) {
  std::uint64_t size = 1, seq = 0;
  while (size < i + 1) {
    ++seq;
    size = 2 * size + 1;
  }
  while (size - 1 != i) {
    size = (size - 1) >> 1;
    --seq;
    i = i % size;
  }
  return std::uint64_t{1} << seq;
}

// Conflict-driven clause learning: two watched literals with blockers, first-UIP
// learning with local minimization, VSIDS branching, phase saving, Luby restarts and
// activity-based learnt clause reduction.
class CdclSolver {
 public:
  explicit CdclSolver(const CnfFormula& f, SolverOptions opts = {}) : f_(f), opts_(opts) {
    const int n = f.var_count();
    val_.assign(2 * static_cast<std::size_t>(n), 0);
    level_.assign(n, 0);
    reason_.assign(n, kNoReason);
    activity_.assign(n, 0.0);
    phase_.assign(n, 1);  // 1 = negative literal first
    seen_.assign(n, 0);
    watches_.resize(2 * static_cast<std::size_t>(n));
    heap_pos_.assign(n, -1);
    if (opts_.seed) {
      std::mt19937_64 rng(*opts_.seed);
      std::uniform_real_distribution<double> jitter(0.0, 1e-5);
      for (int v = 0; v < n; ++v) {
        activity_[v] = jitter(rng);
        phase_[v] = static_cast<std::int8_t>(rng() & 1u);
      }
    }
    for (int v = 0; v < n; ++v) heap_insert(v);
  }

  SolveOutcome solve(Deadline deadline = Deadline::never()) {
    const auto start = std::chrono::steady_clock::now();
    SolveOutcome out;
    out.status = load_clauses(deadline) ? search(deadline) : SolveStatus::Timeout;
    if (out.status == SolveStatus::Sat) {
      std::vector<bool> model(static_cast<std::size_t>(f_.var_count()) + 1, false);
      for (int v = 0; v < f_.var_count(); ++v) model[v + 1] = val_[2 * v] == 1;
      if (!f_.satisfied_by(model)) throw IntegrityError("embedded solver produced a model that violates the formula");
      out.assignment = std::move(model);
    }
    stats_.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.stats = stats_;
    return out;
  }

 private:
  using Lit = int;  // 2 * var + (negated ? 1 : 0), var 0-based
  static constexpr int kNoReason = -1;

  struct Clause {
    std::vector<Lit> lits;
    bool learnt = false;
    bool deleted = false;
    double activity = 0;
    int lbd = 0;
  };
  struct Watcher {
    int cref;
    Lit blocker;
  };

  static Lit from_dimacs(int l) { return l > 0 ? 2 * (l - 1) : 2 * (-l - 1) + 1; }
  static int var(Lit l) { return l >> 1; }

  std::int8_t value(Lit l) const { return val_[l]; }
  int decision_level() const { return static_cast<int>(trail_lim_.size()); }

  // Loads the formula on first use; false if the deadline expires first.
  bool load_clauses(const Deadline& deadline) {
    std::vector<Lit> c;
    for (; loaded_ < f_.clause_count() && !unsat_; ++loaded_) {
      if ((loaded_ & 0xffff) == 0xffff && deadline.expired()) return false;
      const std::size_t i = loaded_;
      c.clear();
      for (int l : f_.clause(i)) {
        if (l == 0 || std::abs(l) > f_.var_count()) throw InvalidInput("malformed clause literal " + std::to_string(l));
        c.push_back(from_dimacs(l));
      }
      std::sort(c.begin(), c.end());
      c.erase(std::unique(c.begin(), c.end()), c.end());
      bool tautology = false;
      for (std::size_t k = 1; k < c.size(); ++k)
        if (c[k] == (c[k - 1] ^ 1)) tautology = true;
      if (tautology) continue;
      add_clause(c, false);
    }
    return true;
  }

  // Adds an original or learnt clause. Learnt clauses must be asserting with c[0] the UIP.
  int add_clause(const std::vector<Lit>& c, bool learnt) {
    if (c.size() == 1) {
      if (value(c[0]) == -1) unsat_ = true;
      else if (value(c[0]) == 0) enqueue(c[0], kNoReason);
      return kNoReason;
    }
    const int cref = static_cast<int>(clauses_.size());
    clauses_.push_back(Clause{c, learnt, false, 0, 0});
    watches_[c[0] ^ 1].push_back({cref, c[1]});
    watches_[c[1] ^ 1].push_back({cref, c[0]});
    return cref;
  }

  void enqueue(Lit l, int reason) {
    val_[l] = 1;
    val_[l ^ 1] = -1;
    level_[var(l)] = decision_level();
    reason_[var(l)] = reason;
    trail_.push_back(l);
  }

  int propagate() {
    int conflict = kNoReason;
    while (qhead_ < trail_.size() && conflict == kNoReason) {
      const Lit p = trail_[qhead_++];
      const Lit false_lit = p ^ 1;
      auto& ws = watches_[p];
      std::size_t i = 0, j = 0;
      ++stats_.propagations;
      while (i < ws.size()) {
        const Watcher w = ws[i++];
        if (value(w.blocker) == 1) {
          ws[j++] = w;
          continue;
        }
        Clause& c = clauses_[w.cref];
        if (c.deleted) continue;
        if (c.lits[0] == false_lit) std::swap(c.lits[0], c.lits[1]);
        const Lit first = c.lits[0];
        const Watcher nw{w.cref, first};
        if (first != w.blocker && value(first) == 1) {
          ws[j++] = nw;
          continue;
        }
        bool moved = false;
        for (std::size_t k = 2; k < c.lits.size(); ++k) {
          if (value(c.lits[k]) != -1) {
            std::swap(c.lits[1], c.lits[k]);
            watches_[c.lits[1] ^ 1].push_back(nw);
            moved = true;
            break;
          }
        }
        if (moved) continue;
        ws[j++] = nw;
        if (value(first) == -1) {
          conflict = w.cref;
          while (i < ws.size()) ws[j++] = ws[i++];
        } else {
          enqueue(first, w.cref);
        }
      }
      ws.resize(j);
    }
    return conflict;
  }

  void bump_var(int v) {
    if ((activity_[v] += var_inc_) > 1e100) {
      for (auto& a : activity_) a *= 1e-100;
      var_inc_ *= 1e-100;
    }
    if (heap_pos_[v] >= 0) heap_up(heap_pos_[v]);
  }

  void bump_clause(Clause& c) {
    if ((c.activity += cla_inc_) > 1e20) {
      for (auto& cl : clauses_)
        if (cl.learnt) cl.activity *= 1e-20;
      cla_inc_ *= 1e-20;
    }
  }

  // First-UIP analysis. Returns the learnt clause (asserting literal first) and backjump level.
  std::pair<std::vector<Lit>, int> analyze(int conflict) {
    std::vector<Lit> learnt{0};
    int path = 0;
    Lit p = -1;
    std::size_t idx = trail_.size();
    int cref = conflict;
    do {
      Clause& c = clauses_[cref];
      if (c.learnt) bump_clause(c);
      for (std::size_t k = (p == -1 ? 0 : 1); k < c.lits.size(); ++k) {
        const Lit q = c.lits[k];
        const int v = var(q);
        if (seen_[v] || level_[v] == 0) continue;
        seen_[v] = 1;
        bump_var(v);
        if (level_[v] >= decision_level()) ++path;
        else learnt.push_back(q);
      }
      while (!seen_[var(trail_[--idx])]) {
      }
      p = trail_[idx];
      cref = reason_[var(p)];
      seen_[var(p)] = 0;
      --path;
    } while (path > 0);
    learnt[0] = p ^ 1;

    // Local minimization: drop literals implied by other literals of the clause.
    std::vector<Lit> kept{learnt[0]};
    for (std::size_t k = 1; k < learnt.size(); ++k) {
      const int r = reason_[var(learnt[k])];
      bool redundant = r != kNoReason;
      if (redundant)
        for (Lit q : clauses_[r].lits) {
          if (var(q) == var(learnt[k])) continue;
          if (!seen_[var(q)] && level_[var(q)] > 0) {
            redundant = false;
            break;
          }
        }
      if (!redundant) kept.push_back(learnt[k]);
    }
    for (std::size_t k = 1; k < learnt.size(); ++k) seen_[var(learnt[k])] = 0;

    int back = 0;
    if (kept.size() > 1) {
      std::size_t best = 1;
      for (std::size_t k = 2; k < kept.size(); ++k)
        if (level_[var(kept[k])] > level_[var(kept[best])]) best = k;
      std::swap(kept[1], kept[best]);
      back = level_[var(kept[1])];
    }
    return {std::move(kept), back};
  }

  int compute_lbd(const std::vector<Lit>& c) {
    std::vector<int> levels;
    for (Lit l : c) levels.push_back(level_[var(l)]);
    std::sort(levels.begin(), levels.end());
    return static_cast<int>(std::unique(levels.begin(), levels.end()) - levels.begin());
  }

  void cancel_until(int level) {
    if (decision_level() <= level) return;
    for (std::size_t i = trail_.size(); i-- > static_cast<std::size_t>(trail_lim_[level]);) {
      const Lit l = trail_[i];
      const int v = var(l);
      phase_[v] = static_cast<std::int8_t>(l & 1);
      val_[l] = val_[l ^ 1] = 0;
      reason_[v] = kNoReason;
      if (heap_pos_[v] < 0) heap_insert(v);
    }
    trail_.resize(static_cast<std::size_t>(trail_lim_[level]));
    trail_lim_.resize(static_cast<std::size_t>(level));
    qhead_ = trail_.size();
  }

  bool locked(int cref) const {
    const Clause& c = clauses_[cref];
    return reason_[var(c.lits[0])] == cref && value(c.lits[0]) == 1;
  }

  void reduce_db() {
    std::vector<int> cand;
    for (int i = 0; i < static_cast<int>(clauses_.size()); ++i) {
      const Clause& c = clauses_[i];
      if (c.learnt && !c.deleted && c.lbd > 2 && !locked(i)) cand.push_back(i);
    }
    std::sort(cand.begin(), cand.end(),
              [&](int a, int b) { return clauses_[a].activity < clauses_[b].activity; });
    for (std::size_t k = 0; k < cand.size() / 2; ++k) {
      Clause& c = clauses_[cand[k]];
      c.deleted = true;
      c.lits.clear();
      c.lits.shrink_to_fit();
      --learnt_count_;
    }
  }

  SolveStatus search(const Deadline& deadline) {
    if (unsat_ || propagate() != kNoReason) return SolveStatus::Unsat;
    std::uint64_t restart_index = 0;
    std::uint64_t conflicts_until_restart = opts_.restart_base * luby(restart_index);
    double max_learnts = std::max(1000.0, static_cast<double>(clauses_.size()) / 3.0);
    std::uint64_t ticks = 0;

    for (;;) {
      if ((++ticks & 255) == 0 && deadline.expired()) return SolveStatus::Timeout;
      const int conflict = propagate();
      if (conflict != kNoReason) {
        ++stats_.conflicts;
        if (decision_level() == 0) return SolveStatus::Unsat;
        auto [learnt, back] = analyze(conflict);
        cancel_until(back);
        if (learnt.size() == 1) {
          enqueue(learnt[0], kNoReason);
        } else {
          const int lbd = compute_lbd(learnt);
          const int cref = add_clause(learnt, true);
          clauses_[cref].lbd = lbd;
          bump_clause(clauses_[cref]);
          ++learnt_count_;
          enqueue(learnt[0], cref);
        }
        var_inc_ /= opts_.var_decay;
        cla_inc_ /= opts_.clause_decay;
        if (--conflicts_until_restart == 0) {
          ++stats_.restarts;
          cancel_until(0);
          conflicts_until_restart = opts_.restart_base * luby(++restart_index);
          max_learnts *= 1.05;
        }
        continue;
      }
      if (learnt_count_ >= max_learnts) reduce_db();

      int next = -1;
      while (!heap_.empty()) {
        const int v = heap_pop();
        if (val_[2 * v] == 0) {
          next = v;
          break;
        }
      }
      if (next == -1) return SolveStatus::Sat;
      ++stats_.decisions;
      trail_lim_.push_back(static_cast<int>(trail_.size()));
      enqueue(2 * next + phase_[next], kNoReason);
    }
  }

  // Max-heap on activity.
  bool heap_less(int a, int b) const { return activity_[a] > activity_[b] || (activity_[a] == activity_[b] && a < b); }
  void heap_insert(int v) {
    heap_pos_[v] = static_cast<int>(heap_.size());
    heap_.push_back(v);
    heap_up(heap_pos_[v]);
  }
  void heap_up(int i) {
    const int v = heap_[i];
    while (i > 0) {
      const int parent = (i - 1) / 2;
      if (!heap_less(v, heap_[parent])) break;
      heap_[i] = heap_[parent];
      heap_pos_[heap_[i]] = i;
      i = parent;
    }
    heap_[i] = v;
    heap_pos_[v] = i;
  }
  void heap_down(int i) {
    const int v = heap_[i];
    const int n = static_cast<int>(heap_.size());
    for (;;) {
      int child = 2 * i + 1;
      if (child >= n) break;
      if (child + 1 < n && heap_less(heap_[child + 1], heap_[child])) ++child;
      if (!heap_less(heap_[child], v)) break;
      heap_[i] = heap_[child];
      heap_pos_[heap_[i]] = i;
      i = child;
    }
    heap_[i] = v;
    heap_pos_[v] = i;
  }
  int heap_pop() {
    const int top = heap_[0];
    heap_pos_[top] = -1;
    const int last = heap_.back();
    heap_.pop_back();
    if (!heap_.empty()) {
      heap_[0] = last;
      heap_pos_[last] = 0;
      heap_down(0);
    }
    return top;
  }

  const CnfFormula& f_;
  SolverOptions opts_;
  bool unsat_ = false;
  std::vector<Clause> clauses_;
  std::vector<std::vector<Watcher>> watches_;
  std::vector<std::int8_t> val_;  // per literal: 1 true, -1 false, 0 unassigned
  std::vector<int> level_;
  std::vector<int> reason_;
  std::vector<double> activity_;
  std::vector<std::int8_t> phase_;
  std::vector<char> seen_;
  std::vector<Lit> trail_;
  std::vector<int> trail_lim_;
  std::size_t qhead_ = 0;
  std::vector<int> heap_;
  std::vector<int> heap_pos_;
  std::size_t loaded_ = 0;
  double var_inc_ = 1.0;
  double cla_inc_ = 1.0;
  double learnt_count_ = 0;
  SolveStats stats_;
};

inline SolveOutcome solve(const CnfFormula& f, Deadline deadline = Deadline::never(), SolverOptions opts = {}) {
  return CdclSolver(f, opts).solve(deadline);
}

// ---------------------------------------------------------------------------
// External solvers
// ---------------------------------------------------------------------------

// Parses the competition output dialect ("s ..." status line, "v ..." value lines) and
// re-verifies any model against `f`.
inline SolveOutcome parse_solver_output(const std::string& text, const CnfFormula& f) {
  std::istringstream is(text);
  std::string line;
  std::optional<SolveStatus> status;
  std::vector<bool> model(static_cast<std::size_t>(f.var_count()) + 1, false);
  for (std::size_t lineno = 1; std::getline(is, line); ++lineno) {
    if (line.empty() || line[0] == 'c') continue;
    if (line.rfind("s ", 0) == 0) {
      const auto word = line.substr(2);
      if (word == "SATISFIABLE") status = SolveStatus::Sat;
      else if (word == "UNSATISFIABLE") status = SolveStatus::Unsat;
      else if (word == "UNKNOWN") status = SolveStatus::Timeout;
      else throw IntegrityError("unparsable solver status line " + std::to_string(lineno) + ": " + line);
      continue;
    }
    if (line.rfind("v ", 0) == 0) {
      std::istringstream ls(line.substr(2));
      long lit;
      while (ls >> lit) {
        if (lit == 0) continue;
        if (std::labs(lit) > f.var_count()) throw IntegrityError("solver value out of range: " + std::to_string(lit));
        model[std::labs(lit)] = lit > 0;
      }
      if (!ls.eof()) throw IntegrityError("unparsable solver value line " + std::to_string(lineno));
      continue;
    }
    throw IntegrityError("unparsable solver output line " + std::to_string(lineno) + ": " + line);
  }
  if (!status) throw IntegrityError("solver output has no status line");
  SolveOutcome out;
  out.status = *status;
  if (out.status == SolveStatus::Sat) {
    if (!f.satisfied_by(model)) throw IntegrityError("external solver model violates the formula");
    out.assignment = std::move(model);
  }
  return out;
}

namespace detail {

inline std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "'\\''";
    else out += c;
  }
  return out + "'";
}

}  // namespace detail

// Runs `solver_cmd` with "{}" replaced by the quoted DIMACS path, bounded by the deadline.
inline SolveOutcome solve_external(const std::string& dimacs_path, const std::string& solver_cmd,
                                   Deadline deadline = Deadline::never()) {
  std::ifstream in(dimacs_path);
  if (!in) throw Error("cannot open DIMACS file " + dimacs_path);
  const CnfFormula f = parse_dimacs(in);

  const auto pos = solver_cmd.find("{}");
  if (pos == std::string::npos) throw InvalidInput("solver command template has no {} placeholder");
  std::string cmd = solver_cmd;
  cmd.replace(pos, 2, detail::shell_quote(dimacs_path));
  if (deadline.bounded()) {
    const double secs = std::max(0.01, deadline.remaining_seconds());
    std::ostringstream wrapped;
    wrapped << "timeout -s KILL " << secs << " sh -c " << detail::shell_quote(cmd);
    cmd = wrapped.str();
  }
  cmd += " 2>/dev/null";

  const auto start = std::chrono::steady_clock::now();
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) throw Error("failed to launch solver: " + solver_cmd);
  std::string output;
  char buf[4096];
  std::size_t got;
  while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0) output.append(buf, got);
  const int rc = pclose(pipe);
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const bool killed = deadline.expired() || (WIFEXITED(rc) && (WEXITSTATUS(rc) == 124 || WEXITSTATUS(rc) == 137));
  if (output.find("s ") == std::string::npos) {
    if (killed) {
      SolveOutcome out;
      out.status = SolveStatus::Timeout;
      out.stats.wall_seconds = elapsed;
      return out;
    }
    if (rc != 0 && output.empty())
      throw Error("solver process failed (status " + std::to_string(rc) + "): " + solver_cmd);
  }
  auto out = parse_solver_output(output, f);
  out.stats.wall_seconds = elapsed;
  return out;
}

// Writes the competition output dialect for an outcome.
inline void write_solver_output(const SolveOutcome& out, std::ostream& os) {
  switch (out.status) {
    case SolveStatus::Sat: {
      os << "s SATISFIABLE\nv";
      const auto& m = *out.assignment;
      for (std::size_t v = 1; v < m.size(); ++v) os << " " << (m[v] ? "" : "-") << v;
      os << " 0\n";
      break;
    }
    case SolveStatus::Unsat: os << "s UNSATISFIABLE\n"; break;
    case SolveStatus::Timeout: os << "s UNKNOWN\n"; break;
  }
}

// ---------------------------------------------------------------------------
// Model blocking
// ---------------------------------------------------------------------------

// Copy of `f` plus a clause excluding the projection of `model` onto `projection`
// (the variables assigned true there are negated). Defaults to the placement variables,
// or every variable for formulas without placement keys.
inline CnfFormula add_blocking_clause(const CnfFormula& f, const std::vector<bool>& model,
                                      std::span<const int> projection = {}) {
  std::vector<int> all;
  if (projection.empty()) {
    const int upto = f.mapping_var_count() > 0 ? f.mapping_var_count() : f.var_count();
    for (int v = 1; v <= upto; ++v) all.push_back(v);
    projection = all;
  }
  std::vector<int> clause;
  for (int v : projection)
    if (v >= 1 && static_cast<std::size_t>(v) < model.size() && model[v]) clause.push_back(-v);
  if (clause.empty()) throw InvalidInput("blocking clause projection is empty");
  CnfFormula out = f;
  out.add_clause(clause);
  return out;
}

}  // namespace satmap
