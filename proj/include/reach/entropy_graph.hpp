/* entropy_graph.hpp: weighted closed-loop group graph and the path value
 * N(R) = max over root->target paths of
 *        (log2 #roots + sum of node weights before the last group) / steps.
 * Node weights: log2 of the successor count, with or without the target. */
#ifndef REACH_ENTROPY_GRAPH_HPP_
#define REACH_ENTROPY_GRAPH_HPP_

#include <iomanip>
#include <ostream>
#include <string>
#include <vector>

#include "reach/coarsening.hpp"
#include "reach/core.hpp"

namespace reach {

enum class WeightMode { kIncludeTarget, kExcludeTarget };

inline const char* weight_mode_name(WeightMode m) {
  return m == WeightMode::kIncludeTarget ? "include-target" : "exclude-target";
}

struct ClosedLoopGraph {
  std::vector<std::vector<GroupId>> adj;  // non-target successor groups, sorted
  std::vector<char> to_target;            // group has an edge into T
  std::vector<double> weight_include;     // log2 #D(g)
  std::vector<double> weight_exclude;     // log2 #(D(g) \ {T})
  std::size_t num_nodes() const { return adj.size(); }
  const std::vector<double>& weights(WeightMode m) const {
    return m == WeightMode::kIncludeTarget ? weight_include : weight_exclude;
  }
};

inline ClosedLoopGraph build_graph(const CoarseDMap& d) {
  ClosedLoopGraph g;
  const std::size_t n = d.successors.size();
  g.adj.resize(n);
  g.to_target.assign(n, 0);
  g.weight_include.resize(n);
  g.weight_exclude.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t deg = d.successors[i].size();
    if (deg == 0) throw GraphError("closed-loop graph: group without successors");
    for (std::int32_t v : d.successors[i]) {
      if (v == kTargetNode) g.to_target[i] = 1;
      else g.adj[i].push_back(v);
    }
    g.weight_include[i] = log2_count(deg);
    g.weight_exclude[i] = g.adj[i].empty() ? 0.0 : log2_count(g.adj[i].size());
  }
  return g;
}

struct AcyclicityReport {
  bool acyclic = false;
  std::vector<GroupId> topo_order;  // valid when acyclic
  std::vector<GroupId> cycle;       // witness otherwise
};

inline AcyclicityReport check_acyclic(const ClosedLoopGraph& g) {
  AcyclicityReport rep;
  const std::size_t n = g.num_nodes();
  std::vector<std::size_t> indeg(n, 0);
  for (const auto& succ : g.adj)
    for (GroupId v : succ) ++indeg[static_cast<std::size_t>(v)];
  std::vector<GroupId> stack;
  for (std::size_t i = 0; i < n; ++i)
    if (indeg[i] == 0) stack.push_back(static_cast<GroupId>(i));
  while (!stack.empty()) {
    /* smallest id first keeps the order reproducible */
    auto it = std::min_element(stack.begin(), stack.end());
    GroupId u = *it;
    stack.erase(it);
    rep.topo_order.push_back(u);
    for (GroupId v : g.adj[static_cast<std::size_t>(u)])
      if (--indeg[static_cast<std::size_t>(v)] == 0) stack.push_back(v);
  }
  if (rep.topo_order.size() == n) {
    rep.acyclic = true;
    return rep;
  }
  /* walk the leftover subgraph until a node repeats */
  std::vector<char> leftover(n, 1);
  for (GroupId u : rep.topo_order) leftover[static_cast<std::size_t>(u)] = 0;
  GroupId start = -1;
  for (std::size_t i = 0; i < n; ++i)
    if (leftover[i]) {
      start = static_cast<GroupId>(i);
      break;
    }
  std::vector<GroupId> walk;
  std::vector<std::int32_t> seen_at(n, -1);
  GroupId cur = start;
  for (;;) {
    if (seen_at[static_cast<std::size_t>(cur)] >= 0) {
      auto from = static_cast<std::size_t>(seen_at[static_cast<std::size_t>(cur)]);
      rep.cycle.assign(walk.begin() + static_cast<std::ptrdiff_t>(from), walk.end());
      break;
    }
    seen_at[static_cast<std::size_t>(cur)] = static_cast<std::int32_t>(walk.size());
    walk.push_back(cur);
    GroupId next = -1;
    for (GroupId v : g.adj[static_cast<std::size_t>(cur)])
      if (leftover[static_cast<std::size_t>(v)]) {
        next = v;
        break;
      }
    if (next < 0) throw GraphError("cycle search lost its trail");
    cur = next;
  }
  rep.topo_order.clear();
  return rep;
}

struct PathValue {
  double value = 0.0;
  std::vector<std::int32_t> witness;  // groups then kTargetNode
  std::size_t length = 0;             // steps (path nodes before T)
};

/* length-indexed DP.  best[L][n]: largest weight sum over paths of L steps
 * from n to T, counting the weights of the first L-1 nodes. */
inline PathValue max_path_value(const ClosedLoopGraph& g, WeightMode mode) {
  const std::size_t n = g.num_nodes();
  if (n == 0) throw GraphError("max path value on an empty graph");
  if (n > 2048) throw GraphError("group graph too large for the dense path table");
  AcyclicityReport ac = check_acyclic(g);
  if (!ac.acyclic) throw GraphError("max path value needs an acyclic group graph");
  const std::vector<double>& w = g.weights(mode);
  const double kNone = -kInf;
  const double root_bits = log2_count(n);

  std::vector<std::vector<double>> best(n + 1, std::vector<double>(n, kNone));
  for (std::size_t i = 0; i < n; ++i)
    if (g.to_target[i]) best[1][i] = 0.0;
  for (std::size_t len = 2; len <= n; ++len)
    for (std::size_t i = 0; i < n; ++i) {
      double b = kNone;
      for (GroupId v : g.adj[i]) {
        double s = best[len - 1][static_cast<std::size_t>(v)];
        if (s != kNone && (s > b)) b = s;
      }
      if (b != kNone) best[len][i] = w[i] + b;
    }

  /* every node must root at least one path, so #R0 equals the node count */
  for (std::size_t i = 0; i < n; ++i) {
    bool roots = false;
    for (std::size_t len = 1; len <= n && !roots; ++len) roots = best[len][i] != kNone;
    if (!roots) throw GraphError("group " + std::to_string(i) + " roots no target path");
  }

  PathValue out;
  out.value = -1.0;
  std::size_t at_node = 0;
  for (std::size_t len = 1; len <= n; ++len)
    for (std::size_t i = 0; i < n; ++i) {
      if (best[len][i] == kNone) continue;
      double val = (best[len][i] + root_bits) / static_cast<double>(len);
      /* strict improvement; exact ties keep the earlier (shorter, smaller
       * id) candidate, so the scan order pins the witness */
      if (val > out.value) {
        out.value = val;
        out.length = len;
        at_node = i;
      }
    }
  if (out.value < 0.0) throw GraphError("no path reaches the target");

  /* reconstruct and revalidate the witness */
  std::vector<std::int32_t> path;
  std::size_t cur = at_node;
  std::size_t len = out.length;
  double acc = 0.0;
  while (len > 1) {
    path.push_back(static_cast<std::int32_t>(cur));
    acc += w[cur];
    std::size_t next = n;
    for (GroupId v : g.adj[cur]) {
      double s = best[len - 1][static_cast<std::size_t>(v)];
      if (s == kNone) continue;
      if (next == n || s > best[len - 1][next] + 1e-12) next = static_cast<std::size_t>(v);
    }
    if (next == n) throw GraphError("witness reconstruction failed");
    cur = next;
    --len;
  }
  path.push_back(static_cast<std::int32_t>(cur));
  path.push_back(kTargetNode);
  if (!g.to_target[cur]) throw GraphError("witness path does not end at the target");
  double direct = (acc + root_bits) / static_cast<double>(out.length);
  if (std::abs(direct - out.value) > 1e-12)
    throw GraphError("witness value recomputation mismatch");
  out.witness = std::move(path);
  return out;
}

struct SpanningEnumeration {
  std::vector<std::vector<std::int32_t>> sequences;  // group ids, then kTargetNode
  bool overflow = false;
};

/* all root->T paths (roots = every group) plus the trivial (T) sequence */
inline SpanningEnumeration enumerate_spanning_set(const ClosedLoopGraph& g, std::size_t limit) {
  SpanningEnumeration out;
  out.sequences.push_back({kTargetNode});
  std::vector<std::int32_t> cur;
  std::function<bool(GroupId)> dfs = [&](GroupId node) -> bool {
    if (out.sequences.size() > limit) {
      out.overflow = true;
      return false;
    }
    cur.push_back(node);
    auto i = static_cast<std::size_t>(node);
    if (g.to_target[i]) {
      auto seq = cur;
      seq.push_back(kTargetNode);
      out.sequences.push_back(std::move(seq));
    }
    for (GroupId v : g.adj[i])
      if (!dfs(v)) {
        cur.pop_back();
        return false;
      }
    cur.pop_back();
    return true;
  };
  for (std::size_t r = 0; r < g.num_nodes(); ++r)
    if (!dfs(static_cast<GroupId>(r))) break;
  if (out.overflow) out.sequences.clear();
  return out;
}

inline void export_dot(std::ostream& os, const ClosedLoopGraph& g) {
  os << "digraph closed_loop {\n  rankdir=LR;\n  T [shape=doublecircle];\n";
  os << std::fixed << std::setprecision(4);
  for (std::size_t i = 0; i < g.num_nodes(); ++i)
    os << "  g" << i << " [label=\"g" << i << "\\nw_inc=" << g.weight_include[i]
       << "\\nw_exc=" << g.weight_exclude[i] << "\"];\n";
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    for (GroupId v : g.adj[i]) os << "  g" << i << " -> g" << v << ";\n";
    if (g.to_target[i]) os << "  g" << i << " -> T;\n";
  }
  os << "}\n";
}

}  // namespace reach

#endif
