/* coarsening.hpp: lump controlled cells into groups that share one input.
 *
 * Modes:
 *   input        same assigned input (default)
 *   input-value  same (input, fixed-point value); always yields a DAG
 *   cover        coverage-greedy determinization over the candidate input
 *                sets recorded at synthesis time: repeatedly pick the input
 *                valid for the most unassigned cells, smallest id on ties
 *   none         one group per controlled cell
 *
 * A group-level cycle can appear in mode "input" because cells of different
 * depths get merged; callers fall back to "input-value" when that happens. */
#ifndef REACH_COARSENING_HPP_
#define REACH_COARSENING_HPP_

#include <functional>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "reach/core.hpp"
#include "reach/finite_system.hpp"
#include "reach/synthesis.hpp"

namespace reach {

enum class CoarsenMode { kInput, kInputValue, kCover, kNone };

inline const char* coarsen_mode_name(CoarsenMode m) {
  switch (m) {
    case CoarsenMode::kInput: return "input";
    case CoarsenMode::kInputValue: return "input-value";
    case CoarsenMode::kCover: return "cover";
    case CoarsenMode::kNone: return "none";
  }
  return "?";
}

inline CoarsenMode coarsen_mode_from_name(const std::string& s) {
  if (s == "input") return CoarsenMode::kInput;
  if (s == "input-value") return CoarsenMode::kInputValue;
  if (s == "cover") return CoarsenMode::kCover;
  if (s == "none") return CoarsenMode::kNone;
  throw ConfigError("unknown coarsening mode: " + s);
}

struct CoarsePartition {
  std::vector<StateSet> groups;          // group id -> member cells, sorted
  std::vector<InputId> group_input;      // group id -> shared input
  std::vector<std::int32_t> group_value; // informative; 0 when mixed
  std::vector<GroupId> group_of;         // state id -> group, -1 if uncontrolled
  CoarsenMode mode = CoarsenMode::kInput;
  bool fallback_triggered = false;

  std::size_t num_groups() const { return groups.size(); }
};

inline CoarsePartition coarsen(const ReachController& ctl, CoarsenMode mode) {
  CoarsePartition part;
  part.mode = mode;
  part.group_of.assign(ctl.assignment.size(), -1);

  auto new_group = [&part](InputId u, std::int32_t v) {
    part.groups.emplace_back();
    part.group_input.push_back(u);
    part.group_value.push_back(v);
    return static_cast<GroupId>(part.groups.size() - 1);
  };

  if (mode == CoarsenMode::kCover) {
    if (ctl.candidates.size() != ctl.domain.size())
      throw SynthesisError("cover coarsening needs candidate sets from synthesis");
    const std::size_t n = ctl.domain.size();
    std::vector<char> assigned(n, 0);
    std::size_t left = n;
    std::vector<std::uint32_t> freq(ctl.num_inputs);
    while (left > 0) {
      std::fill(freq.begin(), freq.end(), 0);
      for (std::size_t i = 0; i < n; ++i) {
        if (assigned[i]) continue;
        const auto& bits = ctl.candidates[i];
        for (std::size_t w = 0; w < bits.size(); ++w) {
          std::uint64_t word = bits[w];
          while (word) {
            unsigned b = static_cast<unsigned>(__builtin_ctzll(word));
            word &= word - 1;
            ++freq[(w << 6) + b];
          }
        }
      }
      std::size_t best_u = 0;
      std::uint32_t best_f = 0;
      for (std::size_t u = 0; u < freq.size(); ++u)
        if (freq[u] > best_f) {
          best_f = freq[u];
          best_u = u;
        }
      if (best_f == 0) throw SynthesisError("cover coarsening: empty candidate set");
      GroupId g = new_group(static_cast<InputId>(best_u), 0);
      for (std::size_t i = 0; i < n; ++i) {
        if (assigned[i] || !candidate_set_test(ctl.candidates[i], best_u)) continue;
        assigned[i] = 1;
        --left;
        part.groups[static_cast<std::size_t>(g)].push_back(ctl.domain[i]);
        part.group_of[static_cast<std::size_t>(ctl.domain[i])] = g;
      }
    }
    return part;
  }

  /* keyed modes: first-encounter order over ascending cell ids */
  std::map<std::pair<InputId, std::int32_t>, GroupId> table;
  for (StateId s : ctl.domain) {
    auto idx = static_cast<std::size_t>(s);
    InputId u = ctl.assignment[idx];
    std::int32_t v = 0;
    if (mode == CoarsenMode::kInputValue) v = ctl.value[idx];
    else if (mode == CoarsenMode::kNone) v = static_cast<std::int32_t>(s);
    std::pair<InputId, std::int32_t> key{u, v};
    GroupId g;
    auto it = table.find(key);
    if (it == table.end()) {
      g = new_group(u, mode == CoarsenMode::kInput ? 0 : ctl.value[idx]);
      table.emplace(key, g);
    } else {
      g = it->second;
    }
    part.groups[static_cast<std::size_t>(g)].push_back(s);
    part.group_of[idx] = g;
  }
  return part;
}

/* D(A) over groups: successor groups of each group under its shared input;
 * kTargetNode marks transitions into T.  post must expose the closed-loop
 * successor cells of (cell, input). */
using PostFn = std::function<StateSet(StateId, InputId)>;

struct CoarseDMap {
  std::vector<std::vector<std::int32_t>> successors;  // sorted; may hold kTargetNode
};

inline CoarseDMap coarse_d_map(const PostFn& post, const CoarsePartition& part,
                               const StateSet& t_states) {
  CoarseDMap d;
  d.successors.resize(part.num_groups());
  for (std::size_t g = 0; g < part.num_groups(); ++g) {
    std::vector<std::int32_t> succ;
    for (StateId s : part.groups[g]) {
      for (StateId dst : post(s, part.group_input[g])) {
        std::int32_t node;
        if (set_contains(t_states, dst)) {
          node = kTargetNode;
        } else {
          GroupId gd = part.group_of.at(static_cast<std::size_t>(dst));
          if (gd < 0)
            throw SynthesisError("coarse D map: successor cell is not controlled");
          node = gd;
        }
        auto it = std::lower_bound(succ.begin(), succ.end(), node);
        if (it == succ.end() || *it != node) succ.insert(it, node);
      }
    }
    if (succ.empty()) throw SynthesisError("coarse D map: group with empty successor set");
    d.successors[g] = std::move(succ);
  }
  return d;
}

/* true when the group graph (target edges dropped) has no cycle */
inline bool coarse_map_acyclic(const CoarseDMap& d) {
  const std::size_t n = d.successors.size();
  std::vector<std::size_t> indeg(n, 0);
  for (const auto& succ : d.successors)
    for (std::int32_t v : succ)
      if (v != kTargetNode) ++indeg[static_cast<std::size_t>(v)];
  std::vector<std::size_t> stack;
  for (std::size_t i = 0; i < n; ++i)
    if (indeg[i] == 0) stack.push_back(i);
  std::size_t seen = 0;
  while (!stack.empty()) {
    std::size_t g = stack.back();
    stack.pop_back();
    ++seen;
    for (std::int32_t v : d.successors[g])
      if (v != kTargetNode && --indeg[static_cast<std::size_t>(v)] == 0)
        stack.push_back(static_cast<std::size_t>(v));
  }
  return seen == n;
}

struct CoarseningResult {
  CoarsePartition partition;
  CoarseDMap d_map;
};

/* split every group of a partition by the members' fixed-point value; the
 * result is always a DAG because values strictly decrease along edges */
inline CoarsePartition split_by_value(const CoarsePartition& src, const ReachController& ctl) {
  CoarsePartition part;
  part.mode = src.mode;
  part.group_of.assign(src.group_of.size(), -1);
  std::map<std::pair<GroupId, std::int32_t>, GroupId> table;
  for (std::size_t s = 0; s < src.group_of.size(); ++s) {
    GroupId g = src.group_of[s];
    if (g < 0) continue;
    std::pair<GroupId, std::int32_t> key{g, ctl.value[s]};
    auto it = table.find(key);
    GroupId ng;
    if (it == table.end()) {
      ng = static_cast<GroupId>(part.groups.size());
      part.groups.emplace_back();
      part.group_input.push_back(src.group_input[static_cast<std::size_t>(g)]);
      part.group_value.push_back(ctl.value[s]);
      table.emplace(key, ng);
    } else {
      ng = it->second;
    }
    part.groups[static_cast<std::size_t>(ng)].push_back(static_cast<StateId>(s));
    part.group_of[s] = ng;
  }
  return part;
}

/* requested mode with the documented automatic fallback on group cycles */
inline CoarseningResult coarsen_with_fallback(const ReachController& ctl, CoarsenMode mode,
                                              const PostFn& post, const StateSet& t_states) {
  CoarseningResult res;
  res.partition = coarsen(ctl, mode);
  res.d_map = coarse_d_map(post, res.partition, t_states);
  if (!coarse_map_acyclic(res.d_map)) {
    if (mode == CoarsenMode::kInputValue || mode == CoarsenMode::kNone)
      throw SynthesisError("coarse group graph is cyclic in a value-separated mode");
    res.partition = mode == CoarsenMode::kCover ? split_by_value(res.partition, ctl)
                                                : coarsen(ctl, CoarsenMode::kInputValue);
    res.partition.fallback_triggered = true;
    res.d_map = coarse_d_map(post, res.partition, t_states);
    if (!coarse_map_acyclic(res.d_map))
      throw SynthesisError("coarse group graph is cyclic after value split");
  }
  return res;
}

inline void export_partition_csv(std::ostream& os, const CoarsePartition& part) {
  os << "cell,group,input\n";
  for (std::size_t s = 0; s < part.group_of.size(); ++s) {
    GroupId g = part.group_of[s];
    if (g < 0) continue;
    os << s << ',' << g << ',' << part.group_input[static_cast<std::size_t>(g)] << '\n';
  }
}

}  // namespace reach

#endif
