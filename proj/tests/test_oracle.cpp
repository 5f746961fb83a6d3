#include <cmath>
#include <map>
#include <random>

#include "catch2/catch_amalgamated.hpp"
#include "reach/config.hpp"
#include "reach/oracle.hpp"
#include "reach/spanning.hpp"

using namespace reach;

namespace {
FiniteSystem four_state() {
  FiniteSystem sys({"q0", "q1", "q2", "q3"}, {"a", "b"});
  sys.add_transition(0, 0, 1);
  sys.add_transition(0, 1, 3);
  sys.add_transition(2, 1, 1);
  sys.add_transition(2, 0, 3);
  return sys;
}
}  // namespace

TEST_CASE("four-state system: exact entropy and witness") {
  FiniteSystem sys = four_state();
  ReachSpec spec{{0, 1, 2}, {1}};
  OracleResult res = exact_entropy(sys, spec);
  REQUIRE(res.entropy == Catch::Approx(1.0));
  REQUIRE_FALSE(res.trivial);
  // the minimal witness splits {0} and {2} with distinct inputs
  REQUIRE(res.witness_family.elements.size() == 2);
  std::map<StateSet, InputId> g;
  for (std::size_t i = 0; i < res.witness_family.elements.size(); ++i)
    g[res.witness_family.elements[i]] = res.witness_inputs[i];
  REQUIRE(g.count({0}) == 1);
  REQUIRE(g.count({2}) == 1);
  REQUIRE(g[{0}] == sys.input_id("a"));
  REQUIRE(g[{2}] == sys.input_id("b"));
  VerifyReport rep = verify_spanning_set(sys, spec, res.witness_family, res.witness_inputs);
  REQUIRE(rep.ok);
}

TEST_CASE("single-input convergence is detected as trivial") {
  FiniteSystem sys({"s0", "s1", "t"}, {"a", "b"});
  sys.add_transition(0, 0, 1);
  sys.add_transition(1, 0, 2);
  sys.add_transition(0, 1, 0);  // b only loops
  ReachSpec spec{{0, 1, 2}, {2}};
  OracleResult res = exact_entropy(sys, spec);
  REQUIRE(res.trivial);
  REQUIRE(res.entropy == 0.0);
  REQUIRE(res.trivial_input == sys.input_id("a"));
}

TEST_CASE("trivial detection requires convergence, not mere progress") {
  // under a alone, s1 oscillates back to s0: not trivial; splitting is needed
  FiniteSystem sys({"s0", "s1", "t"}, {"a", "b"});
  sys.add_transition(0, 0, 1);
  sys.add_transition(1, 0, 0);
  sys.add_transition(1, 1, 2);
  sys.add_transition(0, 1, 0);
  ReachSpec spec{{0, 1, 2}, {2}};
  OracleResult res = exact_entropy(sys, spec);
  REQUIRE_FALSE(res.trivial);
  REQUIRE(res.entropy == Catch::Approx(1.0));
}

TEST_CASE("Q equal to T needs no transmission") {
  FiniteSystem sys({"t0", "t1"}, {"a"});
  sys.add_transition(0, 0, 1);
  ReachSpec spec{{0, 1}, {0, 1}};
  OracleResult res = exact_entropy(sys, spec);
  REQUIRE(res.entropy == 0.0);
  REQUIRE(res.witness_family.sequences ==
          std::vector<std::vector<std::int32_t>>({{kTargetNode}}));
}

TEST_CASE("unreachable targets yield an infinite entropy") {
  FiniteSystem sys({"s0", "t"}, {"a"});
  sys.add_transition(0, 0, 0);  // stuck forever
  ReachSpec spec{{0, 1}, {1}};
  OracleResult res = exact_entropy(sys, spec);
  REQUIRE(std::isinf(res.entropy));
  REQUIRE_FALSE(res.trivial);
}

TEST_CASE("state cap guards the exponential search") {
  std::vector<std::string> names;
  for (int i = 0; i < 10; ++i) names.push_back("s" + std::to_string(i));
  FiniteSystem sys(names, {"a"});
  for (int i = 0; i < 9; ++i) sys.add_transition(i, 0, 9);
  ReachSpec spec;
  for (int i = 0; i < 10; ++i) spec.q_states.push_back(i);
  spec.t_states = {9};
  REQUIRE_THROWS_AS(exact_entropy(sys, spec), DomainError);
  OracleOptions opts;
  opts.state_cap = 9;
  OracleResult res = exact_entropy(sys, spec, opts);
  REQUIRE(res.entropy == 0.0);  // one shared input converges: trivial
}

TEST_CASE("two-region example needs one bit") {
  ProblemConfig cfg = load_problem(std::string(REACH_CONFIG_DIR "/example2.toml"));
  GridAbstraction abs = build_abstraction(cfg);
  OracleResult res = exact_entropy(abs.materialized_system(), abs.materialized_spec());
  REQUIRE_FALSE(res.trivial);
  REQUIRE(res.entropy == Catch::Approx(1.0));
  VerifyReport rep = verify_spanning_set(abs.materialized_system(), abs.materialized_spec(),
                                         res.witness_family, res.witness_inputs);
  REQUIRE(rep.ok);
}

TEST_CASE("oracle value is a lower bound for the pipeline bound on random systems") {
  std::mt19937_64 rng(4242);
  std::uniform_int_distribution<int> ns(3, 5), deg(0, 2), coin(0, 1);
  int checked = 0;
  for (int trial = 0; trial < 60; ++trial) {
    int n = ns(rng);
    std::vector<std::string> states;
    for (int i = 0; i < n; ++i) states.push_back("s" + std::to_string(i));
    FiniteSystem sys(states, {"u0", "u1"});
    std::uniform_int_distribution<int> pick(0, n - 1);
    /* reachable by construction, and no single input works everywhere */
    std::vector<int> chain(static_cast<std::size_t>(n), 0);
    chain[0] = coin(rng);
    chain[1] = 1 - chain[0];
    for (int s = 2; s < n; ++s) chain[static_cast<std::size_t>(s)] = coin(rng);
    for (int s = 0; s + 1 < n; ++s)
      sys.add_transition(s, chain[static_cast<std::size_t>(s)], s + 1);
    sys.add_transition(0, 1 - chain[0], 0);
    sys.add_transition(1, 1 - chain[1], 1);
    for (int s = 0; s < n; ++s)
      for (int u = 0; u < 2; ++u) {
        int d = deg(rng);
        for (int e = 0; e < d; ++e) {
          int y = pick(rng);
          if (y == s && s <= 1) continue;
          sys.add_transition(s, u, y);
        }
      }
    ReachSpec spec;
    for (int s = 0; s < n; ++s) spec.q_states.push_back(s);
    spec.t_states = {static_cast<StateId>(n - 1)};
    OracleResult res = exact_entropy(sys, spec);
    if (std::isinf(res.entropy) || res.search_truncated) continue;
    ++checked;
    if (res.entropy == 0.0) continue;
    VerifyReport rep = verify_spanning_set(sys, spec, res.witness_family, res.witness_inputs);
    REQUIRE(rep.ok);
    REQUIRE(spanning_value(res.witness_family).value == Catch::Approx(res.entropy));
  }
  REQUIRE(checked >= 20);
}
