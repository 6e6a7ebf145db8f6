// satmap: command-line front end for the CGRA mapper.
//
//   satmap map   --dfg F --arch F [options]   compile; exit 0 mapped, 2 no mapping, 3 timeout, 1 error
//   satmap check --dfg F --arch F --mapping F checker + register report + simulator differential
//   satmap mii   --dfg F --arch F             print res_ii / rec_ii / m_ii
//   satmap kms   --dfg F --ii N [--slack N]   dump the kernel mobility schedule
//   satmap cnf   --dfg F --arch F --ii N      DIMACS encoding for one II
//   satmap solve FILE                         embedded solver, competition output format
//   satmap graph --dfg F                      graph description for visualization

#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "satmap/satmap.hpp"

namespace {

constexpr int kExitMapped = 0;
constexpr int kExitError = 1;
constexpr int kExitNoMapping = 2;
constexpr int kExitTimeout = 3;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw satmap::Error("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Deterministic input streams for simulation runs.
satmap::Streams make_inputs(const satmap::DataFlowGraph& g, int iterations, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  satmap::Streams in;
  for (const auto& n : g.nodes) {
    if (n.op != satmap::OpKind::Input || in.count(*n.stream)) continue;
    auto& s = in[*n.stream];
    for (int i = 0; i < iterations; ++i) s.push_back(static_cast<std::int32_t>(rng()));
  }
  return in;
}

void print_streams(const satmap::Streams& s, std::ostream& os) {
  for (const auto& [stream, values] : s) {
    os << "stream=" << stream << " values=";
    for (std::size_t i = 0; i < values.size(); ++i) os << (i ? "," : "") << values[i];
    os << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SAT-based modulo-scheduling mapper for CGRAs"};
  app.require_subcommand(1);

  std::string dfg_path, arch_path, mapping_path, out_path, slack = "auto", solver = "embedded", amo = "pairwise";
  std::string emit_cnf, dimacs_path;
  int ii_start = 0, ii_max = 50, ii = 1, regalloc_retries = 0, iterations = 8;
  std::size_t max_clauses = satmap::CnfEncoder::kDefaultClauseLimit;
  double timeout = 4000;
  std::uint64_t seed = 0;
  bool emit_trace = false;

  auto* map = app.add_subcommand("map", "find the lowest-II mapping");
  map->add_option("--dfg", dfg_path, "DFG document")->required();
  map->add_option("--arch", arch_path, "architecture document")->required();
  map->add_option("--ii-start", ii_start, "first II to try (default: mII)");
  map->add_option("--ii-max", ii_max, "largest II to try")->capture_default_str();
  map->add_option("--timeout", timeout, "total time budget in seconds")->capture_default_str();
  map->add_option("--slack", slack, "mobility slack: auto (ii-1) or a fixed count")->capture_default_str();
  map->add_option("--solver", solver, "embedded | cmd:<template with {}>")->capture_default_str();
  auto* seed_opt = map->add_option("--seed", seed, "randomize solver tie-breaking");
  map->add_option("--regalloc-retries", regalloc_retries, "block-and-resolve retries after a register failure");
  map->add_option("--max-clauses", max_clauses, "per-II CNF size ceiling")->capture_default_str();
  map->add_option("--amo", amo, "at-most-one encoding: pairwise | sequential")->capture_default_str();
  map->add_option("--emit-cnf", emit_cnf, "directory for per-II DIMACS files");
  map->add_flag("--emit-trace", emit_trace, "print the kernel and a simulated trace");
  map->add_option("--iterations", iterations, "iterations for --emit-trace")->capture_default_str();
  map->add_option("-o,--output", out_path, "mapping document path (default: stdout)");

  auto* check = app.add_subcommand("check", "validate a mapping");
  check->add_option("--dfg", dfg_path)->required();
  check->add_option("--arch", arch_path)->required();
  check->add_option("--mapping", mapping_path)->required();
  check->add_option("--iterations", iterations, "simulated iterations")->capture_default_str();

  auto* mii = app.add_subcommand("mii", "print the II lower bounds");
  mii->add_option("--dfg", dfg_path)->required();
  mii->add_option("--arch", arch_path)->required();

  auto* kms = app.add_subcommand("kms", "dump the kernel mobility schedule");
  kms->add_option("--dfg", dfg_path)->required();
  kms->add_option("--ii", ii)->required();
  kms->add_option("--slack", slack)->capture_default_str();

  auto* cnf = app.add_subcommand("cnf", "emit the DIMACS encoding for one II");
  cnf->add_option("--dfg", dfg_path)->required();
  cnf->add_option("--arch", arch_path)->required();
  cnf->add_option("--ii", ii)->required();
  cnf->add_option("--slack", slack)->capture_default_str();
  cnf->add_option("--amo", amo)->capture_default_str();

  auto* solve = app.add_subcommand("solve", "solve a DIMACS file with the embedded solver");
  solve->add_option("file", dimacs_path)->required();
  solve->add_option("--timeout", timeout)->capture_default_str();

  auto* graph = app.add_subcommand("graph", "print the DFG as a graph description");
  graph->add_option("--dfg", dfg_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitError;
  }

  auto slack_value = [&](int for_ii) -> int {
    if (slack == "auto") return satmap::default_slack(for_ii);
    return std::stoi(slack);
  };
  auto amo_value = [&] {
    if (amo == "pairwise") return satmap::AmoEncoding::Pairwise;
    if (amo == "sequential") return satmap::AmoEncoding::Sequential;
    throw satmap::InvalidInput("unknown --amo value " + amo);
  };

  try {
    if (*map) {
      const auto g = satmap::parse_dfg(read_file(dfg_path));
      const auto a = satmap::parse_arch(read_file(arch_path));
      satmap::DriverConfig cfg;
      if (ii_start > 0) cfg.ii_start = ii_start;
      cfg.ii_max = ii_max;
      cfg.timeout_total = timeout;
      if (slack != "auto") cfg.fixed_slack = std::stoi(slack);
      if (solver.rfind("cmd:", 0) == 0) cfg.solver_cmd = solver.substr(4);
      else if (solver != "embedded") throw satmap::InvalidInput("unknown --solver value " + solver);
      if (*seed_opt) cfg.seed = seed;
      cfg.regalloc_retries = regalloc_retries;
      cfg.clause_limit = max_clauses;
      cfg.amo = amo_value();
      if (!emit_cnf.empty()) cfg.emit_cnf_dir = emit_cnf;
      cfg.log = &std::cerr;

      const auto result = satmap::run_toolchain(g, a, cfg);
      if (result.outcome == satmap::CompileOutcome::TimedOut) return kExitTimeout;
      if (result.outcome == satmap::CompileOutcome::NoMappingUpToIiMax) return kExitNoMapping;

      const auto doc = satmap::mapping_document(*result.mapping, result.registers);
      if (out_path.empty()) {
        std::cout << doc;
      } else {
        std::ofstream os(out_path);
        if (!(os << doc)) throw satmap::Error("cannot write " + out_path);
      }
      if (emit_trace) {
        satmap::render_kernel(*result.mapping, a, std::cout);
        const auto trace = satmap::simulate(g, a, *result.mapping, iterations, make_inputs(g, iterations, 1));
        satmap::render_trace(trace, a, *result.mapping, std::cout);
        print_streams(trace.outputs, std::cout);
      }
      return kExitMapped;
    }

    if (*check) {
      const auto g = satmap::parse_dfg(read_file(dfg_path));
      const auto a = satmap::parse_arch(read_file(arch_path));
      const auto m = satmap::parse_mapping(read_file(mapping_path), g.node_count());
      if (!m.fingerprint.empty() && m.fingerprint != satmap::input_fingerprint(g, a))
        std::cout << "warning=fingerprint-mismatch\n";
      const auto violations = satmap::check_mapping(g, a, m);
      std::cout << "checker violations=" << violations.size();
      if (!violations.empty()) std::cout << " detail=\"" << satmap::describe(violations) << "\"";
      std::cout << "\n";
      if (!violations.empty()) return kExitError;
      const auto report = satmap::check_register_pressure(g, a, m);
      std::cout << "regalloc ok=" << (report.ok ? "true" : "false") << " max_pressure=" << report.max_pressure()
                << " capacity=" << a.registers_per_pe << "\n";
      if (!report.ok) return kExitError;
      const auto inputs = make_inputs(g, iterations, 1);
      const auto trace = satmap::simulate(g, a, m, iterations, inputs);
      const bool same = trace.outputs == satmap::interpret_dfg(g, iterations, inputs);
      std::cout << "simulation iterations=" << iterations << " cycles=" << trace.cycles
                << " matches_interpreter=" << (same ? "true" : "false") << "\n";
      return same ? 0 : kExitError;
    }

    if (*mii) {
      const auto g = satmap::parse_dfg(read_file(dfg_path));
      const auto a = satmap::parse_arch(read_file(arch_path));
      const auto b = satmap::compute_mii(g, a);
      std::cout << "res_ii=" << b.res_ii << " rec_ii=" << b.rec_ii << " m_ii=" << b.m_ii << "\n";
      return 0;
    }

    if (*kms) {
      const auto g = satmap::parse_dfg(read_file(dfg_path));
      satmap::dump_kms(satmap::build_kms(satmap::build_mobility(g, slack_value(ii)), ii), std::cout);
      return 0;
    }

    if (*cnf) {
      const auto g = satmap::parse_dfg(read_file(dfg_path));
      const auto a = satmap::parse_arch(read_file(arch_path));
      const auto k = satmap::build_kms(satmap::build_mobility(g, slack_value(ii)), ii);
      satmap::emit_dimacs(satmap::encode_all(g, a, k, amo_value()), std::cout);
      return 0;
    }

    if (*solve) {
      std::ifstream in(dimacs_path);
      if (!in) throw satmap::Error("cannot open " + dimacs_path);
      const auto f = satmap::parse_dimacs(in);
      const auto out = satmap::solve(f, satmap::Deadline::after(timeout));
      satmap::write_solver_output(out, std::cout);
      return out.status == satmap::SolveStatus::Sat ? 10 : out.status == satmap::SolveStatus::Unsat ? 20 : 0;
    }

    if (*graph) {
      satmap::export_graph_description(satmap::parse_dfg(read_file(dfg_path)), std::cout);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
