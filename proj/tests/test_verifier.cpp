#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "satmap/cnf.hpp"
#include "satmap/driver.hpp"
#include "satmap/verifier.hpp"
#include "support.hpp"

using namespace satmap;

namespace {

using K = MappingViolation::Kind;

Mapping place(int ii, std::vector<Placement> ps) {
  Mapping m;
  m.ii = ii;
  for (const auto& p : ps) m.assignment.push_back(p);
  return m;
}

DataFlowGraph chain2() {
  DataFlowGraph g;
  g.add_node(OpKind::Input, std::nullopt, 0);
  g.add_node(OpKind::Output, std::nullopt, 0);
  g.add_edge(0, 1, 0);
  return g;
}

}  // namespace

TEST(CheckMapping, Examples) {
  const auto a = make_arch(2, 2);
  const auto g = chain2();
  EXPECT_TRUE(check_mapping(g, a, place(1, {{0, 0, 0}, {1, 0, 1}})).empty());
  // same PE is always reachable
  EXPECT_TRUE(check_mapping(g, a, place(2, {{0, 0, 0}, {0, 1, 0}})).empty());

  auto vs = check_mapping(g, a, place(1, {{0, 0, 0}, {3, 0, 1}}));
  ASSERT_EQ(vs.size(), 1u);
  EXPECT_EQ(vs[0].describe(), "adjacency(0,1)");

  vs = check_mapping(g, a, place(2, {{0, 1, 0}, {1, 1, 0}}));
  ASSERT_EQ(vs.size(), 1u);
  EXPECT_EQ(vs[0].kind, K::Timing);

  vs = check_mapping(g, a, place(2, {{0, 1, 0}, {0, 1, 1}}));
  ASSERT_EQ(vs.size(), 1u);
  EXPECT_EQ(vs[0].describe(), "occupancy(0,1)");

  Mapping partial = place(1, {{0, 0, 0}});
  partial.assignment.push_back(std::nullopt);
  vs = check_mapping(g, a, partial);
  ASSERT_EQ(vs.size(), 1u);
  EXPECT_EQ(vs[0].kind, K::Unassigned);

  vs = check_mapping(g, a, place(1, {{0, 0, 0}, {9, 0, 1}}));
  ASSERT_FALSE(vs.empty());
  EXPECT_EQ(vs[0].kind, K::OutOfRange);
  vs = check_mapping(g, a, place(1, {{0, 0, 0}, {1, 2, 1}}));
  ASSERT_FALSE(vs.empty());
  EXPECT_EQ(vs[0].kind, K::OutOfRange);
}

TEST(CheckMapping, LoopCarriedTiming) {
  // self edge d1 at ii 1 is fine; accumulator chain needs the output after the add
  const auto g = fixtures::accumulator_graph();
  const auto a = make_arch(1, 3);
  EXPECT_TRUE(check_mapping(g, a, place(1, {{0, 0, 0}, {1, 0, 1}, {2, 0, 2}})).empty());
  // a d1 back edge 1 -> 0 consumed at the same time slot in the next iteration
  DataFlowGraph h;
  h.add_node(OpKind::Output);
  h.add_node(OpKind::Output);
  h.add_edge(0, 1, 0);
  h.add_edge(1, 0, 0, 1, {0});
  EXPECT_TRUE(check_mapping(h, a, place(2, {{0, 0, 0}, {0, 1, 0}})).empty());
  const auto vs = check_mapping(h, a, place(1, {{0, 0, 0}, {1, 0, 1}}));
  ASSERT_EQ(vs.size(), 1u);
  EXPECT_EQ(vs[0].describe(), "timing(1,0)");
}

TEST(Interpreter, Examples) {
  EXPECT_EQ(interpret_dfg(fixtures::accumulator_graph(), 3, {{0, {1, 2, 3}}}), (Streams{{0, {1, 3, 6}}}));
  EXPECT_EQ(interpret_dfg(fixtures::accumulator_graph(10), 2, {{0, {1, 2}}}), (Streams{{0, {11, 13}}}));
  EXPECT_EQ(interpret_dfg(chain2(), 2, {{0, {7, 8}}}), (Streams{{0, {7, 8}}}));
  EXPECT_THROW(interpret_dfg(chain2(), 3, {{0, {7, 8}}}), SimulationError);
}

TEST(Simulate, MatchesInterpreterOnExamples) {
  const auto g = fixtures::accumulator_graph();
  const auto a = make_arch(1, 3);
  const auto m = place(1, {{0, 0, 0}, {1, 0, 1}, {2, 0, 2}});
  const auto trace = simulate(g, a, m, 4, {{0, {1, 2, 3, 4}}});
  EXPECT_EQ(trace.outputs, (Streams{{0, {1, 3, 6, 10}}}));
  EXPECT_EQ(trace.cycles, 6);
  EXPECT_EQ(trace.activity[2], (std::vector<int>{0, 1, 2}));

  std::ostringstream os;
  render_trace(trace, a, m, os);
  EXPECT_NE(os.str().find("cycle 5"), std::string::npos);
  std::ostringstream ks;
  render_kernel(m, a, ks);
  EXPECT_NE(ks.str().find("0@0"), std::string::npos);
}

TEST(Simulate, RejectsRegisterOverflowAndInvalidMappings) {
  // one register per PE, but the input value stays live for two cycles while a new one is born
  DataFlowGraph g = chain2();
  const auto a = make_arch(1, 2, Topology::Mesh2d, 1);
  EXPECT_THROW(simulate(g, a, place(1, {{0, 0, 0}, {1, 0, 2}}), 3, {{0, {1, 2, 3}}}), SimulationError);
  EXPECT_NO_THROW(simulate(g, a, place(1, {{0, 0, 0}, {1, 0, 1}}), 3, {{0, {1, 2, 3}}}));
  EXPECT_THROW(simulate(g, a, place(1, {{0, 0, 0}, {0, 0, 1}}), 3, {{0, {1, 2, 3}}}), InvalidInput);
  EXPECT_THROW(simulate(g, a, place(1, {{0, 0, 0}, {1, 0, 1}}), 0, {}), InvalidInput);
}

TEST(VerifierProperty, SimulationMatchesInterpreter) {
  std::mt19937_64 rng(61);
  const CgraArchitecture archs[] = {make_arch(2, 2), make_arch(1, 3), make_arch(3, 3, Topology::Torus2d)};
  int simulated = 0;
  for (int trial = 0; trial < 150; ++trial) {
    const auto g = fixtures::random_dfg(rng);
    const auto& a = archs[trial % 3];
    DriverConfig cfg;
    cfg.ii_max = 12;
    const auto r = run_toolchain(g, a, cfg);
    if (r.outcome != CompileOutcome::Mapped) continue;
    ASSERT_TRUE(check_mapping(g, a, *r.mapping).empty());
    for (int iterations : {1, 3, 7}) {
      const auto inputs = fixtures::random_inputs(g, iterations, rng);
      ASSERT_EQ(simulate(g, a, *r.mapping, iterations, inputs).outputs, interpret_dfg(g, iterations, inputs))
          << serialize_dfg(g);
      ++simulated;
    }
  }
  EXPECT_GT(simulated, 300);
}

TEST(VerifierProperty, CorruptedMappingIsUnsatWhenForced) {
  // Pinning a checker-rejected placement as unit clauses must make the encoding unsat.
  std::mt19937_64 rng(62);
  const auto a = make_arch(2, 2);
  int checked = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const auto g = fixtures::random_dfg(rng);
    const auto r = run_toolchain(g, a);
    if (r.outcome != CompileOutcome::Mapped) continue;
    const int ii = r.mapping->ii;
    const auto kms = build_kms(build_mobility(g, default_slack(ii)), ii);
    auto f = encode_all(g, a, kms);
    auto m = *r.mapping;
    // move one node to another candidate inside its window; keep it only if the checker objects
    const int v = static_cast<int>(rng() % g.node_count());
    bool corrupted = false;
    for (const auto& c : kms.candidates[v]) {
      for (int pe = 0; pe < a.pe_count() && !corrupted; ++pe) {
        auto trial_m = m;
        trial_m.assignment[v] = Placement{pe, c.slot, c.label};
        if (!check_mapping(g, a, trial_m).empty()) {
          m = trial_m;
          corrupted = true;
        }
      }
      if (corrupted) break;
    }
    if (!corrupted) continue;
    for (int n = 0; n < g.node_count(); ++n) {
      const auto& p = *m.assignment[n];
      f.add_clause({f.var_of({n, p.pe, p.slot, p.label})});
    }
    EXPECT_EQ(solve(f).status, SolveStatus::Unsat);
    ++checked;
  }
  EXPECT_GT(checked, 20);
}

TEST(Oracle, Examples) {
  DataFlowGraph one;
  one.add_node(OpKind::Input, std::nullopt, 0);
  auto r = brute_force_min_ii(one, make_arch(1, 1), 4);
  ASSERT_TRUE(r);
  EXPECT_EQ(r->first, 1);

  DataFlowGraph five;
  for (int i = 0; i < 5; ++i) five.add_node(OpKind::Input, std::nullopt, 0);
  r = brute_force_min_ii(five, make_arch(2, 2), 4);
  ASSERT_TRUE(r);
  EXPECT_EQ(r->first, 2);
  EXPECT_TRUE(check_mapping(five, make_arch(2, 2), r->second).empty());

  DataFlowGraph big;
  for (int i = 0; i < 9; ++i) big.add_node(OpKind::Input, std::nullopt, 0);
  EXPECT_THROW(brute_force_min_ii(big, make_arch(2, 2), 4), InvalidInput);

  // two-node chain on a single PE needs two slots
  r = brute_force_min_ii(chain2(), make_arch(1, 1), 4);
  ASSERT_TRUE(r);
  EXPECT_EQ(r->first, 2);
}
