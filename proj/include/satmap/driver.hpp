#pragma once

#include <chrono>
#include <cstdio>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "satmap/arch.hpp"
#include "satmap/cnf.hpp"
#include "satmap/common.hpp"
#include "satmap/dfg.hpp"
#include "satmap/mapping.hpp"
#include "satmap/regalloc.hpp"
#include "satmap/sat.hpp"
#include "satmap/scheduler.hpp"
#include "satmap/verifier.hpp"

namespace satmap {

struct DriverConfig {
  std::optional<int> ii_start;     // default: mII
  int ii_max = 50;
  double timeout_total = 4000.0;   // seconds, shared by all II attempts
  std::optional<int> fixed_slack;  // default: ii - 1 per attempt
  int regalloc_retries = 0;        // block-and-resolve attempts after a register failure
  std::optional<std::string> solver_cmd;  // external solver template with "{}"; embedded when empty
  std::optional<std::uint64_t> seed;
  AmoEncoding amo = AmoEncoding::Pairwise;
  std::size_t clause_limit = CnfEncoder::kDefaultClauseLimit;  // per-II encoding ceiling
  std::optional<std::filesystem::path> emit_cnf_dir;
  std::ostream* log = nullptr;  // key=value records

  int slack_for(int ii) const { return fixed_slack ? *fixed_slack : default_slack(ii); }
};

inline void validate_config(const DriverConfig& cfg) {
  if (cfg.ii_start && *cfg.ii_start < 1) throw InvalidInput("ii_start must be >= 1");
  if (cfg.ii_max < 1) throw InvalidInput("ii_max must be >= 1");
  if (cfg.ii_start && cfg.ii_max < *cfg.ii_start) throw InvalidInput("ii_max must be >= ii_start");
  if (cfg.timeout_total <= 0) throw InvalidInput("timeout must be positive");
  if (cfg.fixed_slack && *cfg.fixed_slack < 0) throw InvalidInput("slack must be non-negative");
  if (cfg.regalloc_retries < 0) throw InvalidInput("regalloc_retries must be non-negative");
  if (cfg.clause_limit == 0) throw InvalidInput("clause_limit must be positive");
}

enum class CompileOutcome { Mapped, NoMappingUpToIiMax, TimedOut };

inline const char* outcome_name(CompileOutcome o) {
  switch (o) {
    case CompileOutcome::Mapped: return "mapped";
    case CompileOutcome::NoMappingUpToIiMax: return "no_mapping_up_to_ii_max";
    case CompileOutcome::TimedOut: return "timed_out";
  }
  return "?";
}

struct AttemptLog {
  int ii = 0;
  SolveStatus status = SolveStatus::Timeout;
  std::optional<bool> regalloc_ok;  // set when the solver returned a model
  int models_tried = 0;
  double seconds = 0;
  int vars = 0;
  std::size_t clauses = 0;
};

struct CompileResult {
  CompileOutcome outcome = CompileOutcome::NoMappingUpToIiMax;
  IiBounds bounds;
  std::optional<Mapping> mapping;
  std::optional<PressureReport> registers;
  std::vector<AttemptLog> attempts;
  double seconds = 0;
};

// Reads the placement chosen by a model: the unique true placement literal per node.
inline Mapping decode_mapping(const CnfFormula& f, const SolveOutcome& outcome, const KernelMobilitySchedule& kms) {
  if (outcome.status != SolveStatus::Sat || !outcome.assignment) throw InvalidInput("decode requires a satisfying model");
  const auto& model = *outcome.assignment;
  Mapping m;
  m.ii = kms.ii;
  m.assignment.assign(static_cast<std::size_t>(kms.node_count()), std::nullopt);
  for (int v = 1; v <= f.mapping_var_count(); ++v) {
    if (static_cast<std::size_t>(v) >= model.size() || !model[v]) continue;
    const auto& k = f.key_of(v);
    if (k.node < 0 || k.node >= kms.node_count()) throw IntegrityError("model names unknown node " + std::to_string(k.node));
    if (m.assignment[k.node]) throw IntegrityError("node " + std::to_string(k.node) + " has several true placement literals");
    m.assignment[k.node] = Placement{k.pe, k.slot, k.label};
  }
  for (int n = 0; n < kms.node_count(); ++n)
    if (!m.assignment[n]) throw IntegrityError("node " + std::to_string(n) + " has no true placement literal");
  return m;
}

namespace detail {

inline void log_record(const DriverConfig& cfg, const std::string& record) {
  if (cfg.log) *cfg.log << record << "\n" << std::flush;
}

inline SolveOutcome run_solver(const CnfFormula& f, const DriverConfig& cfg, const Deadline& deadline, int ii,
                               int round) {
  if (!cfg.solver_cmd) {
    SolverOptions opts;
    opts.seed = cfg.seed;
    return solve(f, deadline, opts);
  }
  std::filesystem::path path;
  bool temporary = false;
  if (cfg.emit_cnf_dir) {
    path = *cfg.emit_cnf_dir / ("ii_" + std::to_string(ii) + "_r" + std::to_string(round) + ".cnf");
  } else {
    path = std::filesystem::temp_directory_path() /
           ("satmap_" + std::to_string(::getpid()) + "_" + std::to_string(ii) + "_" + std::to_string(round) + ".cnf");
    temporary = true;
  }
  {
    std::ofstream os(path);
    if (!os) throw Error("cannot write " + path.string());
    emit_dimacs(f, os);
  }
  if (deadline.expired()) {
    if (temporary) std::filesystem::remove(path);
    throw TimeoutError("time budget exhausted during DIMACS export");
  }
  auto out = solve_external(path.string(), *cfg.solver_cmd, deadline);
  if (temporary) std::filesystem::remove(path);
  return out;
}

}  // namespace detail

// Ascending II search: schedule, encode, solve, decode, verify, check registers.
inline CompileResult run_toolchain(const DataFlowGraph& g, const CgraArchitecture& a, const DriverConfig& cfg = {}) {
  validate_config(cfg);
  validate_arch(a);
  if (auto vs = validate_dfg(g); !vs.empty()) throw InvalidInput("invalid DFG: " + describe(vs));

  const auto start = std::chrono::steady_clock::now();
  const Deadline deadline = Deadline::after(cfg.timeout_total);
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };

  CompileResult result;
  result.bounds = compute_mii(g, a);
  detail::log_record(cfg, "event=bounds res_ii=" + std::to_string(result.bounds.res_ii) +
                              " rec_ii=" + std::to_string(result.bounds.rec_ii) +
                              " m_ii=" + std::to_string(result.bounds.m_ii));
  if (cfg.emit_cnf_dir) std::filesystem::create_directories(*cfg.emit_cnf_dir);

  const int first = std::max(cfg.ii_start.value_or(result.bounds.m_ii), result.bounds.m_ii);
  auto finish = [&](CompileOutcome o) {
    result.outcome = o;
    result.seconds = elapsed();
    detail::log_record(cfg, std::string("event=done outcome=") + outcome_name(o) +
                                " ii=" + (result.mapping ? std::to_string(result.mapping->ii) : std::string("-")) +
                                " seconds=" + std::to_string(result.seconds));
    return result;
  };

  for (int ii = first; ii <= cfg.ii_max; ++ii) {
    if (deadline.expired()) return finish(CompileOutcome::TimedOut);
    const auto attempt_start = std::chrono::steady_clock::now();
    AttemptLog log;
    log.ii = ii;
    auto record = [&] {
      log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - attempt_start).count();
      result.attempts.push_back(log);
      detail::log_record(cfg, "event=attempt ii=" + std::to_string(ii) + " status=" + status_name(log.status) +
                                  " regalloc=" +
                                  (log.regalloc_ok ? (*log.regalloc_ok ? "ok" : "fail") : std::string("-")) +
                                  " models=" + std::to_string(log.models_tried) + " vars=" + std::to_string(log.vars) +
                                  " clauses=" + std::to_string(log.clauses) + " seconds=" + std::to_string(log.seconds));
    };

    try {
      const auto kms = build_kms(build_mobility(g, cfg.slack_for(ii)), ii);
      CnfFormula f = encode_all(g, a, kms, cfg.amo, deadline, cfg.clause_limit);
      log.vars = f.var_count();
      log.clauses = f.clause_count();
      if (cfg.emit_cnf_dir && !cfg.solver_cmd) {
        std::ofstream os(*cfg.emit_cnf_dir / ("ii_" + std::to_string(ii) + ".cnf"));
        emit_dimacs(f, os);
      }

      for (int round = 0; round <= cfg.regalloc_retries; ++round) {
        const auto outcome = detail::run_solver(f, cfg, deadline, ii, round);
        log.status = outcome.status;
        if (outcome.status != SolveStatus::Sat) break;
        ++log.models_tried;
        Mapping m = decode_mapping(f, outcome, kms);
        if (auto vs = check_mapping(g, a, m); !vs.empty())
          throw IntegrityError("solver model at ii=" + std::to_string(ii) + " fails the checker: " + describe(vs));
        auto report = check_register_pressure(g, a, m);
        log.regalloc_ok = report.ok;
        if (report.ok) {
          m.fingerprint = input_fingerprint(g, a);
          result.mapping = std::move(m);
          result.registers = std::move(report);
          record();
          return finish(CompileOutcome::Mapped);
        }
        if (round < cfg.regalloc_retries) f = add_blocking_clause(f, *outcome.assignment);
      }
    } catch (const TimeoutError&) {
      log.status = SolveStatus::Timeout;
    }
    record();
    if (log.status == SolveStatus::Timeout) return finish(CompileOutcome::TimedOut);
  }
  return finish(CompileOutcome::NoMappingUpToIiMax);
}

// Mapping document including the register report.
inline std::string mapping_document(const Mapping& m, const std::optional<PressureReport>& registers) {
  auto doc = mapping_to_json(m);
  if (registers) doc["register_report"] = pressure_to_json(*registers);
  return doc.dump(2) + "\n";
}

}  // namespace satmap
