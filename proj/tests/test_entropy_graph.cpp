#include <cmath>
#include <random>
#include <functional>
#include <set>
#include <sstream>

#include "catch2/catch_amalgamated.hpp"
#include "reach/entropy_graph.hpp"
#include "reach/spanning.hpp"

using namespace reach;

namespace {

/* random DAG over n groups in which every node reaches T; edges only go
 * upward in id order, so acyclicity holds by construction */
CoarseDMap random_dag(std::mt19937_64& rng, int n) {
  CoarseDMap d;
  d.successors.resize(static_cast<std::size_t>(n));
  std::uniform_int_distribution<int> coin(0, 99);
  for (int i = 0; i < n; ++i) {
    std::vector<std::int32_t> succ;
    for (int j = i + 1; j < n; ++j)
      if (coin(rng) < 35) succ.push_back(j);
    bool to_t = coin(rng) < 40 || succ.empty() || i == n - 1;
    if (to_t) succ.insert(succ.begin(), kTargetNode);
    d.successors[static_cast<std::size_t>(i)] = std::move(succ);
  }
  return d;
}

/* direct path enumeration; mirrors the B(alpha) definition without the DP */
struct PathOracle {
  double best = -1.0;
  std::vector<double> values;  // value per enumerated root->T path
  std::vector<std::vector<std::int32_t>> paths;
};

PathOracle enumerate_paths(const ClosedLoopGraph& g, WeightMode mode) {
  PathOracle out;
  const auto& w = g.weights(mode);
  double root_bits = log2_count(g.num_nodes());
  std::vector<std::int32_t> cur;
  std::function<void(GroupId)> dfs = [&](GroupId v) {
    cur.push_back(v);
    if (g.to_target[static_cast<std::size_t>(v)]) {
      double acc = 0.0;
      for (std::size_t i = 0; i + 1 < cur.size(); ++i)
        acc += w[static_cast<std::size_t>(cur[i])];
      double val = (acc + root_bits) / static_cast<double>(cur.size());
      out.values.push_back(val);
      out.paths.push_back(cur);
      out.best = std::max(out.best, val);
    }
    for (GroupId nx : g.adj[static_cast<std::size_t>(v)]) dfs(nx);
    cur.pop_back();
  };
  for (std::size_t r = 0; r < g.num_nodes(); ++r) dfs(static_cast<GroupId>(r));
  return out;
}

}  // namespace

TEST_CASE("path DP equals exhaustive enumeration on random DAGs") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> size(1, 12);
  for (int trial = 0; trial < 500; ++trial) {
    CoarseDMap d = random_dag(rng, size(rng));
    ClosedLoopGraph g = build_graph(d);
    for (WeightMode mode : {WeightMode::kIncludeTarget, WeightMode::kExcludeTarget}) {
      PathValue dp = max_path_value(g, mode);
      PathOracle ex = enumerate_paths(g, mode);
      REQUIRE(std::abs(dp.value - ex.best) <= 1e-12);
      // the witness revalidates against the raw weights
      double acc = 0.0;
      std::size_t steps = 0;
      for (std::int32_t node : dp.witness) {
        if (node == kTargetNode) break;
        ++steps;
      }
      REQUIRE(steps == dp.length);
      for (std::size_t i = 0; i + 2 < dp.witness.size(); ++i)
        acc += g.weights(mode)[static_cast<std::size_t>(dp.witness[i])];
      double direct = (acc + log2_count(g.num_nodes())) / static_cast<double>(dp.length);
      REQUIRE(std::abs(direct - dp.value) <= 1e-12);
    }
  }
}

TEST_CASE("one-step sequences pin the maximum at log2 of the group count") {
  // some group always maps straight into T, so the value log2(#groups)/1 is
  // always attained and no path can exceed it in either weight mode
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> size(1, 12);
  for (int trial = 0; trial < 200; ++trial) {
    ClosedLoopGraph g = build_graph(random_dag(rng, size(rng)));
    double expect = log2_count(g.num_nodes());
    REQUIRE(std::abs(max_path_value(g, WeightMode::kIncludeTarget).value - expect) <= 1e-12);
    REQUIRE(std::abs(max_path_value(g, WeightMode::kExcludeTarget).value - expect) <= 1e-12);
  }
}

TEST_CASE("exclude-target weights never exceed include-target weights") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    ClosedLoopGraph g = build_graph(random_dag(rng, 10));
    for (std::size_t i = 0; i < g.num_nodes(); ++i) {
      REQUIRE(g.weight_exclude[i] <= g.weight_include[i] + 1e-15);
      std::size_t deg = g.adj[i].size() + (g.to_target[i] ? 1u : 0u);
      REQUIRE(g.weight_include[i] == Catch::Approx(log2_count(deg)));
    }
  }
}

TEST_CASE("hand-checked graphs") {
  // two groups, both straight into T
  CoarseDMap d;
  d.successors = {{kTargetNode}, {kTargetNode}};
  ClosedLoopGraph g = build_graph(d);
  REQUIRE(max_path_value(g, WeightMode::kIncludeTarget).value == Catch::Approx(1.0));
  REQUIRE(max_path_value(g, WeightMode::kExcludeTarget).value == Catch::Approx(1.0));

  // chain with a shortcut: g0 -> {g1, T}, g1 -> {T}
  d.successors = {{kTargetNode, 1}, {kTargetNode}};
  g = build_graph(d);
  REQUIRE(g.weight_include[0] == Catch::Approx(1.0));
  REQUIRE(g.weight_exclude[0] == Catch::Approx(0.0));
  PathValue inc = max_path_value(g, WeightMode::kIncludeTarget);
  REQUIRE(inc.value == Catch::Approx(1.0));
  REQUIRE(inc.length == 1);  // ties resolve to the shortest witness
  REQUIRE(inc.witness == std::vector<std::int32_t>({0, kTargetNode}));
}

TEST_CASE("cyclic group graphs are rejected with a witness") {
  CoarseDMap d;
  d.successors = {{1}, {0, kTargetNode}};
  ClosedLoopGraph g = build_graph(d);
  AcyclicityReport rep = check_acyclic(g);
  REQUIRE_FALSE(rep.acyclic);
  REQUIRE_FALSE(rep.cycle.empty());
  REQUIRE_THROWS_AS(max_path_value(g, WeightMode::kIncludeTarget), GraphError);
}

TEST_CASE("groups that reach nothing are rejected") {
  CoarseDMap d;
  d.successors = {{kTargetNode}, {}};
  REQUIRE_THROWS_AS(build_graph(d), GraphError);
}

TEST_CASE("spanning enumeration lists the trivial sequence and every path") {
  CoarseDMap d;
  d.successors = {{kTargetNode, 1}, {kTargetNode}};
  ClosedLoopGraph g = build_graph(d);
  SpanningEnumeration en = enumerate_spanning_set(g, 100);
  REQUIRE_FALSE(en.overflow);
  std::set<std::vector<std::int32_t>> seqs(en.sequences.begin(), en.sequences.end());
  REQUIRE(seqs.count({kTargetNode}) == 1);
  REQUIRE(seqs.count({0, kTargetNode}) == 1);
  REQUIRE(seqs.count({0, 1, kTargetNode}) == 1);
  REQUIRE(seqs.count({1, kTargetNode}) == 1);
  REQUIRE(en.sequences.size() == 4);
}

TEST_CASE("spanning enumeration overflow clears the partial result") {
  std::mt19937_64 rng(3);
  CoarseDMap d = random_dag(rng, 12);
  ClosedLoopGraph g = build_graph(d);
  SpanningEnumeration full = enumerate_spanning_set(g, 1u << 20);
  if (full.sequences.size() > 2) {
    SpanningEnumeration clipped = enumerate_spanning_set(g, full.sequences.size() - 2);
    REQUIRE(clipped.overflow);
    REQUIRE(clipped.sequences.empty());
  }
}

TEST_CASE("enumerated families evaluate like the exhaustive exclude values") {
  // spanning_value counts non-target continuations per prefix, which on a
  // full enumeration equals the exclude-target edge weighting
  std::mt19937_64 rng(12345);
  std::uniform_int_distribution<int> size(1, 9);
  for (int trial = 0; trial < 100; ++trial) {
    ClosedLoopGraph g = build_graph(random_dag(rng, size(rng)));
    SpanningEnumeration en = enumerate_spanning_set(g, 1u << 18);
    if (en.overflow) continue;
    SpanningSet fam;
    for (std::size_t i = 0; i < g.num_nodes(); ++i)
      fam.elements.push_back({static_cast<StateId>(i)});
    fam.sequences = en.sequences;
    SpanningValue sv = spanning_value(fam);
    PathOracle ex = enumerate_paths(g, WeightMode::kExcludeTarget);
    REQUIRE(std::abs(sv.value - ex.best) <= 1e-12);
    REQUIRE(sv.root_count == g.num_nodes());
  }
}

TEST_CASE("dot export shape") {
  CoarseDMap d;
  d.successors = {{kTargetNode, 1}, {kTargetNode}};
  ClosedLoopGraph g = build_graph(d);
  std::ostringstream os;
  export_dot(os, g);
  std::string s = os.str();
  REQUIRE(s.find("digraph") != std::string::npos);
  REQUIRE(s.find("T") != std::string::npos);
  REQUIRE(s.find("g0") != std::string::npos);
  REQUIRE(s.find("g0 -> g1") != std::string::npos);
}
