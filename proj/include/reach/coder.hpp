/* coder.hpp: coder-controller built from a verified spanning family.
 *
 * The coder walks the element sequences: at each step it announces a cover
 * element that contains the current state and is reachable in the family
 * after the announced prefix; the controller replies with the element's
 * input.  On target entry the coder announces the silent symbol and stops.
 * Symbols are element ids; the silent symbol reuses the target marker. */
#ifndef REACH_CODER_HPP_
#define REACH_CODER_HPP_

#include <map>
#include <random>
#include <set>
#include <vector>

#include "reach/core.hpp"
#include "reach/finite_system.hpp"
#include "reach/spanning.hpp"

namespace reach {

struct CoderOptions {
  bool random_tiebreak = false;  // exercise the construction's freedom
  std::uint64_t seed = 0;
};

struct CoderController {
  SpanningSet family;                 // canonical
  std::vector<InputId> element_input; // controller reply per element
  InputId fixed_input = 0;            // applied on/after target entry
  CoderOptions options;
  /* allowed next elements per announced prefix; empty key = first step */
  std::map<std::vector<std::int32_t>, std::vector<std::int32_t>> allowed;

  const std::vector<std::int32_t>& allowed_after(const std::vector<std::int32_t>& prefix) const {
    auto it = allowed.find(prefix);
    if (it == allowed.end())
      throw GraphError("coder queried with an unknown announced prefix");
    return it->second;
  }
};

inline CoderController build_coder_controller(const SpanningSet& family,
                                              const std::vector<InputId>& element_input,
                                              CoderOptions options = {}) {
  CoderController h;
  h.family = canonicalize(family);
  /* remap inputs onto canonical element ids */
  std::map<StateSet, InputId> g_by_set;
  for (std::size_t i = 0; i < family.elements.size(); ++i) {
    auto [it, fresh] = g_by_set.emplace(family.elements[i], element_input.at(i));
    if (!fresh && it->second != element_input.at(i))
      throw ConfigError("coder construction: conflicting inputs on one element");
  }
  h.element_input.resize(h.family.elements.size());
  for (std::size_t i = 0; i < h.family.elements.size(); ++i)
    h.element_input[i] = g_by_set.at(h.family.elements[i]);
  h.options = options;

  std::map<std::vector<std::int32_t>, std::set<std::int32_t>> nexts;
  std::set<std::int32_t> first;
  for (const auto& seq : h.family.sequences) {
    if (seq.front() != kTargetNode) first.insert(seq.front());
    for (std::size_t t = 0; t + 1 < seq.size(); ++t) {
      std::vector<std::int32_t> prefix(seq.begin(),
                                       seq.begin() + static_cast<std::ptrdiff_t>(t + 1));
      if (seq[t + 1] != kTargetNode) nexts[prefix].insert(seq[t + 1]);
    }
  }
  h.allowed[{}] = std::vector<std::int32_t>(first.begin(), first.end());
  for (auto& [prefix, s] : nexts) h.allowed[prefix] = std::vector<std::int32_t>(s.begin(), s.end());
  return h;
}

/* every reachable announced prefix with its emitting state group and the
 * symbols observed after it */
struct SymbolLog {
  std::vector<std::vector<std::int32_t>> z_hat;  // terminated sequences, tail = silent symbol
  std::map<std::vector<std::int32_t>, std::set<std::int32_t>> prefix_successors;
  std::map<std::vector<std::int32_t>, StateSet> groups;  // emitting states per prefix
  bool truncated = false;
};

/* exhaustive closed-loop symbol exploration from the given initial states */
inline SymbolLog enumerate_symbol_sequences(const FiniteSystem& sys, const ReachSpec& spec,
                                            const CoderController& h,
                                            std::size_t node_budget = 1'000'000) {
  SymbolLog log;
  std::size_t max_len = 1;
  for (const auto& seq : h.family.sequences) max_len = std::max(max_len, seq.size());

  std::mt19937_64 rng(h.options.seed);
  struct Node {
    std::vector<std::int32_t> prefix;
    StateSet states;
  };
  std::vector<Node> queue{{{}, spec.q_states}};
  std::size_t processed = 0;
  while (!queue.empty()) {
    if (++processed > node_budget) {
      log.truncated = true;
      break;
    }
    Node node = std::move(queue.back());
    queue.pop_back();
    if (node.prefix.size() + 1 > max_len) throw GraphError("coder run exceeds the family length");

    StateSet in_t, live;
    for (StateId s : node.states)
      (set_contains(spec.t_states, s) ? in_t : live).push_back(s);
    if (!in_t.empty()) {
      auto z = node.prefix;
      z.push_back(kTargetNode);
      log.z_hat.push_back(std::move(z));
    }
    if (live.empty()) continue;

    const std::vector<std::int32_t>& allowed = h.allowed_after(node.prefix);
    if (allowed.empty()) {
      /* trivial coder: no transmission, the loop runs on fixed_input alone */
      StateSet next = sys.post(live, h.fixed_input);
      if (next.empty()) throw GraphError("closed loop blocked without transmission");
      queue.push_back({node.prefix, std::move(next)});
      continue;
    }
    std::map<std::int32_t, StateSet> emitted;  // symbol -> emitting states
    for (StateId x : live) {
      std::vector<std::int32_t> fits;
      for (std::int32_t e : allowed)
        if (set_contains(h.family.elements[static_cast<std::size_t>(e)], x)) fits.push_back(e);
      if (fits.empty())
        throw GraphError("coder stuck: state " + sys.state_name(x) +
                         " not covered after the announced prefix");
      std::int32_t pick = fits.front();
      if (h.options.random_tiebreak && fits.size() > 1) {
        std::uniform_int_distribution<std::size_t> d(0, fits.size() - 1);
        pick = fits[d(rng)];
      }
      emitted[pick].push_back(x);
    }
    for (auto& [sym, group] : emitted) {
      auto next_prefix = node.prefix;
      next_prefix.push_back(sym);
      log.prefix_successors[node.prefix].insert(sym);
      log.groups[next_prefix] = group;
      StateSet next = sys.post(group, h.element_input[static_cast<std::size_t>(sym)]);
      if (next.empty())
        throw GraphError("closed loop blocked after symbol " + std::to_string(sym));
      queue.push_back({std::move(next_prefix), std::move(next)});
    }
  }
  std::sort(log.z_hat.begin(), log.z_hat.end());
  log.z_hat.erase(std::unique(log.z_hat.begin(), log.z_hat.end()), log.z_hat.end());
  return log;
}

/* worst-case average bits per step over the terminated sequences */
inline double transmission_rate(const SymbolLog& log) {
  double rate = 0.0;
  for (const auto& z : log.z_hat) {
    const std::size_t tau = z.size();
    if (tau <= 1) continue;  // silent-only sequence transmits nothing
    double bits = 0.0;
    for (std::size_t t = 0; t + 1 < tau; ++t) {
      std::vector<std::int32_t> prefix(z.begin(), z.begin() + static_cast<std::ptrdiff_t>(t));
      auto it = log.prefix_successors.find(prefix);
      if (it == log.prefix_successors.end())
        throw GraphError("transmission rate: missing prefix record");
      bits += log2_count(it->second.size());
    }
    rate = std::max(rate, bits / static_cast<double>(tau - 1));
  }
  return rate;
}

/* rebuild a spanning family from the observed symbol groups: element j of a
 * sequence is the set of states that emitted symbol j on that branch */
struct ReconstructedFamily {
  SpanningSet family;
  std::vector<InputId> element_input;
};

inline ReconstructedFamily spanning_set_from_traces(const SymbolLog& log,
                                                    const CoderController& h) {
  ReconstructedFamily out;
  std::map<std::vector<std::int32_t>, std::int32_t> element_of_prefix;
  for (const auto& [prefix, group] : log.groups) {
    auto id = static_cast<std::int32_t>(out.family.elements.size());
    out.family.elements.push_back(group);
    out.element_input.push_back(
        h.element_input[static_cast<std::size_t>(prefix.back())]);
    element_of_prefix.emplace(prefix, id);
  }
  for (const auto& z : log.z_hat) {
    std::vector<std::int32_t> seq;
    std::vector<std::int32_t> prefix;
    for (std::size_t t = 0; t + 1 < z.size(); ++t) {
      prefix.push_back(z[t]);
      seq.push_back(element_of_prefix.at(prefix));
    }
    seq.push_back(kTargetNode);
    out.family.sequences.push_back(std::move(seq));
  }
  return out;
}

/* one stochastic closed-loop run; successor choice resolved uniformly */
struct FiniteRun {
  std::vector<StateId> states;
  std::vector<std::int32_t> symbols;  // per step; silent symbol on entry
  std::vector<InputId> inputs;
  bool reached_target = false;
};

inline FiniteRun run_trajectory(const FiniteSystem& sys, const ReachSpec& spec,
                                const CoderController& h, StateId x0, std::size_t max_steps,
                                std::mt19937_64& rng) {
  FiniteRun run;
  run.states.push_back(x0);
  std::vector<std::int32_t> prefix;
  StateId x = x0;
  for (std::size_t step = 0; step < max_steps; ++step) {
    if (set_contains(spec.t_states, x)) {
      run.symbols.push_back(kTargetNode);
      run.reached_target = true;
      return run;
    }
    const auto& allowed = h.allowed_after(prefix);
    InputId u = h.fixed_input;
    if (!allowed.empty()) {
      std::vector<std::int32_t> fits;
      for (std::int32_t e : allowed)
        if (set_contains(h.family.elements[static_cast<std::size_t>(e)], x)) fits.push_back(e);
      if (fits.empty()) throw GraphError("trajectory left the covered region");
      std::int32_t sym = fits.front();
      if (h.options.random_tiebreak && fits.size() > 1) {
        std::uniform_int_distribution<std::size_t> d(0, fits.size() - 1);
        sym = fits[d(rng)];
      }
      prefix.push_back(sym);
      run.symbols.push_back(sym);
      u = h.element_input[static_cast<std::size_t>(sym)];
    }
    const StateSet& post = sys.post(x, u);
    if (post.empty()) throw GraphError("trajectory blocked");
    std::uniform_int_distribution<std::size_t> d(0, post.size() - 1);
    x = post[d(rng)];
    run.inputs.push_back(u);
    run.states.push_back(x);
  }
  return run;
}

}  // namespace reach

#endif
