#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "catch2/catch_amalgamated.hpp"
#include "reach/abstraction.hpp"
#include "reach/coder.hpp"
#include "reach/config.hpp"
#include "reach/oracle.hpp"

using namespace reach;

namespace {
std::string cfg_path(const char* name) { return std::string(REACH_CONFIG_DIR "/") + name; }

FiniteSystem four_state() {
  FiniteSystem sys({"q0", "q1", "q2", "q3"}, {"a", "b"});
  sys.add_transition(0, 0, 1);
  sys.add_transition(0, 1, 3);
  sys.add_transition(2, 1, 1);
  sys.add_transition(2, 0, 3);
  return sys;
}

/* family {A1 T, A2 T, T} over the cover {A1 = {0}, A2 = {2}} */
SpanningSet four_state_family() {
  SpanningSet r;
  r.elements = {{0}, {2}};
  r.sequences = {{0, kTargetNode}, {1, kTargetNode}, {kTargetNode}};
  return r;
}
}  // namespace

TEST_CASE("four-state coder: symbol log and rate") {
  FiniteSystem sys = four_state();
  ReachSpec spec{{0, 1, 2}, {1}};
  CoderController h =
      build_coder_controller(four_state_family(), {sys.input_id("a"), sys.input_id("b")});
  REQUIRE(h.allowed_after({}) == std::vector<std::int32_t>({0, 1}));
  REQUIRE(h.element_input == std::vector<InputId>({sys.input_id("a"), sys.input_id("b")}));

  SymbolLog log = enumerate_symbol_sequences(sys, spec, h);
  REQUIRE_FALSE(log.truncated);
  /* the pure-silent sequence comes from initial states already in T */
  std::vector<std::vector<std::int32_t>> want = {
      {kTargetNode}, {0, kTargetNode}, {1, kTargetNode}};
  REQUIRE(log.z_hat == want);
  REQUIRE(log.groups.at({0}) == StateSet({0}));
  REQUIRE(log.groups.at({1}) == StateSet({2}));
  REQUIRE(log.prefix_successors.at({}) == std::set<std::int32_t>({0, 1}));
  REQUIRE(transmission_rate(log) == 1.0);
}

TEST_CASE("four-state coder: trace reconstruction closes the loop") {
  FiniteSystem sys = four_state();
  ReachSpec spec{{0, 1, 2}, {1}};
  CoderController h =
      build_coder_controller(four_state_family(), {sys.input_id("a"), sys.input_id("b")});
  SymbolLog log = enumerate_symbol_sequences(sys, spec, h);

  ReconstructedFamily rec = spanning_set_from_traces(log, h);
  REQUIRE(rec.family.elements == std::vector<StateSet>({{0}, {2}}));
  VerifyReport rep = verify_spanning_set(sys, spec, rec.family, rec.element_input);
  REQUIRE(rep.ok);
  SpanningValue val = spanning_value(rec.family);
  REQUIRE(val.root_count == 2);
  REQUIRE(val.value == 1.0);  // equals R(H) and h(Q,T)
}

TEST_CASE("four-state trajectories reach the target") {
  FiniteSystem sys = four_state();
  ReachSpec spec{{0, 1, 2}, {1}};
  CoderController h =
      build_coder_controller(four_state_family(), {sys.input_id("a"), sys.input_id("b")});
  std::mt19937_64 rng(7);
  for (StateId x0 : {0, 1, 2}) {
    FiniteRun run = run_trajectory(sys, spec, h, x0, 3, rng);
    REQUIRE(run.reached_target);
    REQUIRE(run.symbols.back() == kTargetNode);
    REQUIRE(run.states.size() <= 3);  // non-target groups + 1 steps
  }
  FiniteRun run = run_trajectory(sys, spec, h, 0, 3, rng);
  REQUIRE(run.symbols == std::vector<std::int32_t>({0, kTargetNode}));
  REQUIRE(run.inputs == std::vector<InputId>({sys.input_id("a")}));
  REQUIRE(run.states == std::vector<StateId>({0, 1}));
}

TEST_CASE("trivial coder transmits nothing") {
  FiniteSystem sys({"s0", "t"}, {"u"});
  sys.add_transition(0, 0, 1);
  sys.add_transition(1, 0, 1);
  ReachSpec spec{{0, 1}, {1}};
  SpanningSet triv;
  triv.sequences = {{kTargetNode}};
  CoderController h = build_coder_controller(triv, {});
  REQUIRE(h.fixed_input == 0);
  REQUIRE(h.allowed_after({}).empty());

  SymbolLog log = enumerate_symbol_sequences(sys, spec, h);
  REQUIRE_FALSE(log.truncated);
  REQUIRE(log.z_hat == std::vector<std::vector<std::int32_t>>({{kTargetNode}}));
  REQUIRE(transmission_rate(log) == 0.0);

  ReconstructedFamily rec = spanning_set_from_traces(log, h);
  REQUIRE(rec.family.elements.empty());
  REQUIRE(rec.family.sequences == triv.sequences);

  std::mt19937_64 rng(3);
  FiniteRun run = run_trajectory(sys, spec, h, 0, 4, rng);
  REQUIRE(run.reached_target);
  REQUIRE(run.symbols == std::vector<std::int32_t>({kTargetNode}));
  REQUIRE(run.inputs == std::vector<InputId>({0}));
}

TEST_CASE("trivial coder on a divergent loop reports non-termination") {
  FiniteSystem sys({"s0", "t"}, {"u"});
  sys.add_transition(0, 0, 0);  // never reaches t
  sys.add_transition(1, 0, 1);
  ReachSpec spec{{0, 1}, {1}};
  SpanningSet triv;
  triv.sequences = {{kTargetNode}};
  CoderController h = build_coder_controller(triv, {});
  SymbolLog log = enumerate_symbol_sequences(sys, spec, h, 64);
  REQUIRE(log.truncated);
}

TEST_CASE("two-region example coder") {
  ProblemConfig cfg = load_problem(cfg_path("example2.toml"));
  GridAbstraction abs = build_abstraction(cfg);
  const FiniteSystem& sys = abs.materialized_system();
  const ReachSpec& spec = abs.materialized_spec();

  /* A1 = region 0 under 0.75, A2 = region 1 under -0.5 */
  SpanningSet r;
  r.elements = {{0}, {1}};
  r.sequences = {{0, 1, kTargetNode}, {1, kTargetNode}, {kTargetNode}};
  std::vector<InputId> g = {1, 0};
  REQUIRE(verify_spanning_set(sys, spec, r, g).ok);

  CoderController h = build_coder_controller(r, g);
  SymbolLog log = enumerate_symbol_sequences(sys, spec, h);
  std::vector<std::vector<std::int32_t>> want = {
      {kTargetNode}, {0, 1, kTargetNode}, {1, kTargetNode}};
  REQUIRE(log.z_hat == want);
  double rate = transmission_rate(log);
  REQUIRE(rate == 1.0);  // max{(1+0)/2, 1/1}

  ReconstructedFamily rec = spanning_set_from_traces(log, h);
  REQUIRE(verify_spanning_set(sys, spec, rec.family, rec.element_input).ok);
  REQUIRE(spanning_value(rec.family).value == rate);
}

TEST_CASE("overlapping cover: tie-breaks never exceed the family value") {
  FiniteSystem sys({"s0", "s1", "t"}, {"u"});
  sys.add_transition(0, 0, 2);
  sys.add_transition(1, 0, 2);
  ReachSpec spec{{0, 1, 2}, {2}};
  SpanningSet r;
  r.elements = {{0, 1}, {1}};  // state 1 sits in both
  r.sequences = {{0, kTargetNode}, {1, kTargetNode}, {kTargetNode}};
  REQUIRE(verify_spanning_set(sys, spec, r, {0, 0}).ok);
  double family_value = spanning_value(r).value;
  REQUIRE(family_value == 1.0);

  /* deterministic pick routes everything through the first element */
  CoderController det = build_coder_controller(r, {0, 0});
  SymbolLog dlog = enumerate_symbol_sequences(sys, spec, det);
  REQUIRE(transmission_rate(dlog) == 0.0);

  bool saw_branch = false;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    CoderOptions opts;
    opts.random_tiebreak = true;
    opts.seed = seed;
    CoderController h = build_coder_controller(r, {0, 0}, opts);
    SymbolLog log = enumerate_symbol_sequences(sys, spec, h);
    double rate = transmission_rate(log);
    REQUIRE(rate <= family_value + 1e-12);
    ReconstructedFamily rec = spanning_set_from_traces(log, h);
    REQUIRE(verify_spanning_set(sys, spec, rec.family, rec.element_input).ok);
    REQUIRE(spanning_value(rec.family).value == Catch::Approx(rate).margin(1e-12));
    if (rate == 1.0) saw_branch = true;
  }
  REQUIRE(saw_branch);
}

TEST_CASE("construction rejects ill-formed requests") {
  SpanningSet r;
  r.elements = {{0}, {0}};  // same element set, conflicting inputs
  r.sequences = {{0, kTargetNode}, {1, kTargetNode}};
  REQUIRE_THROWS_AS(build_coder_controller(r, {0, 1}), ConfigError);

  CoderController h = build_coder_controller(four_state_family(), {0, 1});
  REQUIRE_THROWS_AS(h.allowed_after({99}), GraphError);
}

TEST_CASE("node budget flags truncation") {
  FiniteSystem sys = four_state();
  ReachSpec spec{{0, 1, 2}, {1}};
  CoderController h = build_coder_controller(four_state_family(), {0, 1});
  SymbolLog log = enumerate_symbol_sequences(sys, spec, h, 1);
  REQUIRE(log.truncated);
}

TEST_CASE("oracle witnesses keep the data-rate sandwich tight") {
  std::mt19937_64 rng(9001);
  std::uniform_int_distribution<int> ns(3, 5), deg(0, 2), coin(0, 1);
  int checked = 0;
  for (int trial = 0; trial < 120; ++trial) {
    int n = ns(rng);
    std::vector<std::string> states;
    for (int i = 0; i < n; ++i) states.push_back("s" + std::to_string(i));
    FiniteSystem sys(states, {"u0", "u1"});
    std::uniform_int_distribution<int> pick(0, n - 1);
    /* forward chain keeps T reachable; states 0 and 1 each stall one of the
     * two inputs, so no single fixed input serves all of Q */
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
          if (y == s && s <= 1) continue;  // keep the stalls one-sided
          sys.add_transition(s, u, y);
        }
      }
    ReachSpec spec;
    for (int s = 0; s < n; ++s) spec.q_states.push_back(s);
    spec.t_states = {static_cast<StateId>(n - 1)};

    OracleResult res = exact_entropy(sys, spec);
    if (std::isinf(res.entropy) || res.search_truncated || res.entropy == 0.0) continue;
    ++checked;

    CoderController h = build_coder_controller(res.witness_family, res.witness_inputs);
    SymbolLog log = enumerate_symbol_sequences(sys, spec, h);
    REQUIRE_FALSE(log.truncated);
    double rate = transmission_rate(log);
    REQUIRE(rate <= res.entropy + 1e-9);  // R(H) <= N(R)
    REQUIRE(res.entropy <= rate + 1e-9);  // h <= R(H), so equality throughout

    ReconstructedFamily rec = spanning_set_from_traces(log, h);
    REQUIRE(verify_spanning_set(sys, spec, rec.family, rec.element_input).ok);
    REQUIRE(spanning_value(rec.family).value == Catch::Approx(rate).margin(1e-9));

    std::size_t tmax = 1;
    for (const auto& seq : res.witness_family.sequences) tmax = std::max(tmax, seq.size());
    for (StateId x0 : spec.q_states) {
      FiniteRun run = run_trajectory(sys, spec, h, x0, tmax + 1, rng);
      REQUIRE(run.reached_target);
      REQUIRE(run.states.size() <= tmax + 1);
    }
  }
  REQUIRE(checked >= 15);
}
