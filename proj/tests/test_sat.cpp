#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>

#include "satmap/sat.hpp"
#include "support.hpp"

using namespace satmap;

namespace {

CnfFormula pigeonhole(int pigeons, int holes) {
  CnfFormula f(pigeons * holes);
  auto x = [&](int p, int h) { return p * holes + h + 1; };
  for (int p = 0; p < pigeons; ++p) {
    std::vector<int> alo;
    for (int h = 0; h < holes; ++h) alo.push_back(x(p, h));
    f.add_clause(alo);
    for (int h = 0; h < holes; ++h)
      for (int k = h + 1; k < holes; ++k) f.add_clause({-x(p, h), -x(p, k)});
  }
  for (int h = 0; h < holes; ++h)
    for (int p = 0; p < pigeons; ++p)
      for (int q = p + 1; q < pigeons; ++q) f.add_clause({-x(p, h), -x(q, h)});
  return f;
}

CnfFormula random_ksat(std::mt19937_64& rng, int vars, int clauses, int width) {
  CnfFormula f(vars);
  for (int c = 0; c < clauses; ++c) {
    std::vector<int> lits;
    const int w = 1 + static_cast<int>(rng() % width);
    for (int k = 0; k < w; ++k) {
      const int v = 1 + static_cast<int>(rng() % vars);
      lits.push_back(rng() & 1 ? v : -v);
    }
    f.add_clause(lits);
  }
  return f;
}

std::filesystem::path write_temp(const std::string& name, const std::string& text) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream(path) << text;
  return path;
}

}  // namespace

TEST(Solve, UnitPropagation) {
  CnfFormula f(2);
  f.add_clause({1});
  f.add_clause({-1, 2});
  const auto out = solve(f);
  ASSERT_EQ(out.status, SolveStatus::Sat);
  EXPECT_TRUE((*out.assignment)[1]);
  EXPECT_TRUE((*out.assignment)[2]);
}

TEST(Solve, Contradiction) {
  CnfFormula f(1);
  f.add_clause({1});
  f.add_clause({-1});
  EXPECT_EQ(solve(f).status, SolveStatus::Unsat);
}

TEST(Solve, Pigeonhole) {
  EXPECT_EQ(solve(pigeonhole(3, 2)).status, SolveStatus::Unsat);
  EXPECT_EQ(solve(pigeonhole(3, 3)).status, SolveStatus::Sat);
  EXPECT_EQ(solve(pigeonhole(7, 6)).status, SolveStatus::Unsat);
}

TEST(Solve, TautologiesAndDuplicates) {
  CnfFormula f(2);
  f.add_clause({1, -1});
  f.add_clause({2, 2});
  const auto out = solve(f);
  ASSERT_EQ(out.status, SolveStatus::Sat);
  EXPECT_TRUE((*out.assignment)[2]);
}

TEST(Solve, EmptyFormulaIsSat) {
  EXPECT_EQ(solve(CnfFormula()).status, SolveStatus::Sat);
  EXPECT_EQ(solve(CnfFormula(3)).status, SolveStatus::Sat);
}

TEST(Solve, TimesOut) {
  const auto out = solve(pigeonhole(12, 11), Deadline::after(0.05));
  EXPECT_EQ(out.status, SolveStatus::Timeout);
  EXPECT_FALSE(out.assignment.has_value());
}

TEST(Solve, SeededRunsAreDeterministic) {
  std::mt19937_64 rng(5);
  const auto f = random_ksat(rng, 60, 240, 3);
  SolverOptions opts;
  opts.seed = 17;
  const auto a = solve(f, Deadline::never(), opts);
  const auto b = solve(f, Deadline::never(), opts);
  EXPECT_EQ(a.status, b.status);
  EXPECT_EQ(a.assignment, b.assignment);
  EXPECT_EQ(solve(f).assignment, solve(f).assignment);
}

TEST(Luby, Sequence) {
  const std::uint64_t expected[] = {1, 1, 2, 1, 1, 2, 4, 1, 1, 2, 1, 1, 2, 4, 8};
  for (std::uint64_t i = 0; i < 15; ++i) EXPECT_EQ(luby(i), expected[i]);
}

TEST(SolveProperty, AgreesWithExhaustiveEnumeration) {
  std::mt19937_64 rng(41);
  int sat = 0, unsat = 0;
  for (int trial = 0; trial < 600; ++trial) {
    const int vars = 1 + static_cast<int>(rng() % (trial < 560 ? 14 : 20));
    const int clauses = 1 + static_cast<int>(rng() % (5 * vars));
    const auto f = random_ksat(rng, vars, clauses, 3);
    const auto out = solve(f);
    const bool expected = fixtures::enumerate_models(f).has_value();
    ASSERT_EQ(out.status == SolveStatus::Sat, expected) << to_dimacs(f);
    if (expected) {
      EXPECT_TRUE(f.satisfied_by(*out.assignment));
    }
    (expected ? sat : unsat)++;
  }
  EXPECT_GT(sat, 100);
  EXPECT_GT(unsat, 100);
}

TEST(BlockingClause, Examples) {
  CnfFormula one(1);
  auto blocked = add_blocking_clause(one, {false, true});
  ASSERT_EQ(blocked.clause_count(), 1u);
  EXPECT_EQ(std::vector<int>(blocked.clause(0).begin(), blocked.clause(0).end()), std::vector<int>{-1});

  CnfFormula two(2);
  blocked = add_blocking_clause(two, {false, true, true});
  EXPECT_EQ(std::vector<int>(blocked.clause(0).begin(), blocked.clause(0).end()), (std::vector<int>{-1, -2}));

  CnfFormula single(1);
  single.add_clause({1});
  const auto out = solve(single);
  EXPECT_EQ(solve(add_blocking_clause(single, *out.assignment)).status, SolveStatus::Unsat);

  EXPECT_THROW(add_blocking_clause(one, {false, false}), InvalidInput);
}

TEST(BlockingClause, EnumeratesEveryModel) {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 40; ++trial) {
    auto f = random_ksat(rng, 8, 14, 3);
    std::uint64_t expected = 0;
    fixtures::enumerate_models(f, true, &expected);
    std::uint64_t found = 0;
    for (;;) {
      const auto out = solve(f);
      if (out.status != SolveStatus::Sat) break;
      ++found;
      // a full-assignment block; the all-false model is blocked by a positive clause
      std::vector<int> clause;
      for (int v = 1; v <= f.var_count(); ++v) clause.push_back((*out.assignment)[v] ? -v : v);
      f.add_clause(clause);
    }
    EXPECT_EQ(found, expected);
  }
}

TEST(SolverOutput, ParsesAndVerifies) {
  CnfFormula f(2);
  f.add_clause({1});
  f.add_clause({-1, 2});
  auto out = parse_solver_output("c hello\ns SATISFIABLE\nv 1 2\nv 0\n", f);
  EXPECT_EQ(out.status, SolveStatus::Sat);
  EXPECT_EQ(parse_solver_output("s UNSATISFIABLE\n", f).status, SolveStatus::Unsat);
  EXPECT_THROW(parse_solver_output("s SATISFIABLE\nv -1 2 0\n", f), IntegrityError);
  EXPECT_THROW(parse_solver_output("garbage\n", f), IntegrityError);
  EXPECT_THROW(parse_solver_output("", f), IntegrityError);

  std::ostringstream os;
  write_solver_output(out, os);
  EXPECT_EQ(os.str(), "s SATISFIABLE\nv 1 2 0\n");
}

TEST(SolveExternal, ShellSolvers) {
  CnfFormula unit(1);
  unit.add_clause({1});
  const auto unit_path = write_temp("satmap_test_unit.cnf", to_dimacs(unit));
  auto out = solve_external(unit_path.string(), "printf 's SATISFIABLE\\nv 1 0\\n' # {}");
  ASSERT_EQ(out.status, SolveStatus::Sat);
  EXPECT_TRUE((*out.assignment)[1]);

  CnfFormula contra(1);
  contra.add_clause({1});
  contra.add_clause({-1});
  const auto contra_path = write_temp("satmap_test_contra.cnf", to_dimacs(contra));
  EXPECT_EQ(solve_external(contra_path.string(), "echo 's UNSATISFIABLE' # {}").status, SolveStatus::Unsat);

  EXPECT_THROW(solve_external(unit_path.string(), "echo garbage # {}"), IntegrityError);
  // a lying solver is caught by re-verification
  EXPECT_THROW(solve_external(contra_path.string(), "printf 's SATISFIABLE\\nv 1 0\\n' # {}"), IntegrityError);
  EXPECT_THROW(solve_external(unit_path.string(), "true"), InvalidInput);
  EXPECT_THROW(solve_external(unit_path.string(), "exit 3 # {}"), Error);
  EXPECT_EQ(solve_external(unit_path.string(), "sleep 5 # {}", Deadline::after(0.2)).status, SolveStatus::Timeout);
}

#ifdef SATMAP_CLI_PATH
TEST(SolveExternal, CliSolverAgreesWithEmbedded) {
  std::mt19937_64 rng(47);
  for (int trial = 0; trial < 30; ++trial) {
    const auto f = random_ksat(rng, 12, 50, 3);
    const auto path = write_temp("satmap_test_agree.cnf", to_dimacs(f));
    const auto ext = solve_external(path.string(), std::string(SATMAP_CLI_PATH) + " solve {}");
    EXPECT_EQ(ext.status, solve(f).status);
  }
}
#endif

#ifdef SATMAP_PYSAT_SOLVER
namespace {

bool pysat_available() {
  static const bool ok = std::system("python3 -c 'import pysat' >/dev/null 2>&1") == 0;
  return ok;
}

std::string pysat_command() { return std::string("python3 ") + SATMAP_PYSAT_SOLVER + " {}"; }

}  // namespace

// Independent reference solver on formulas too large to enumerate.
TEST(SolveProperty, AgreesWithMiniSat) {
  if (!pysat_available()) GTEST_SKIP() << "python-sat not installed";
  std::mt19937_64 rng(49);
  int sat = 0, unsat = 0;
  for (int trial = 0; trial < 80; ++trial) {
    const int vars = 40 + static_cast<int>(rng() % 80);
    const int clauses = static_cast<int>(vars * (3.9 + 0.6 * (rng() % 1000) / 1000.0));
    CnfFormula f(vars);
    for (int c = 0; c < clauses; ++c) {
      std::vector<int> lits;
      for (int k = 0; k < 3; ++k) {
        const int v = 1 + static_cast<int>(rng() % vars);
        lits.push_back(rng() & 1 ? v : -v);
      }
      f.add_clause(lits);
    }
    const auto path = write_temp("satmap_test_minisat.cnf", to_dimacs(f));
    const auto reference = solve_external(path.string(), pysat_command());
    const auto out = solve(f);
    ASSERT_EQ(out.status, reference.status) << to_dimacs(f);
    (out.status == SolveStatus::Sat ? sat : unsat)++;
  }
  EXPECT_GT(sat, 10);
  EXPECT_GT(unsat, 10);
}

TEST(SolveProperty, MappingEncodingsAgreeWithMiniSat) {
  if (!pysat_available()) GTEST_SKIP() << "python-sat not installed";
  std::mt19937_64 rng(50);
  fixtures::RandomDfgOptions opt;
  opt.min_nodes = 6;
  opt.max_nodes = 12;
  for (int trial = 0; trial < 30; ++trial) {
    const auto g = fixtures::random_dfg(rng, opt);
    const auto a = make_arch(2 + static_cast<int>(rng() % 2), 2);
    const int ii = compute_mii(g, a).m_ii + static_cast<int>(rng() % 2) - 1;
    if (ii < 1) continue;
    const auto f = encode_all(g, a, build_kms(build_mobility(g, default_slack(ii)), ii));
    const auto path = write_temp("satmap_test_minisat_map.cnf", to_dimacs(f));
    EXPECT_EQ(solve(f).status, solve_external(path.string(), pysat_command()).status) << serialize_dfg(g);
  }
}
#endif
