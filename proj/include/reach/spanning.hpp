/* spanning.hpp: covers, state-set sequences, and their worst-case bit value.
 *
 * A candidate family R is a finite set of sequences over cover elements,
 * each ending at the target marker.  Validity:
 *   1. the first elements of the sequences, plus T, cover Q;
 *   2. only the final entry of a sequence is T, all other entries are cover
 *      elements disjoint from T;
 *   3. the one-step image of the element at position t stays inside the
 *      union of the next elements over all sequences sharing that prefix.
 * The value of a sequence of length tau > 1 is
 *   ( log2 #(distinct first elements != T)
 *     + sum_{t=0}^{tau-3} log2 #(non-T next elements after prefix [0..t]) )
 *   / (tau - 1),
 * and the family value is the maximum over its sequences. */
#ifndef REACH_SPANNING_HPP_
#define REACH_SPANNING_HPP_

#include <map>
#include <set>
#include <string>
#include <vector>

#include "reach/core.hpp"
#include "reach/finite_system.hpp"

namespace reach {

struct SpanningSet {
  std::vector<StateSet> elements;                     // cover elements
  std::vector<std::vector<std::int32_t>> sequences;   // element ids, last = kTargetNode
};

/* elements are sets: distinct ids with equal member sets denote the same
 * element, so value/verification work on a canonical id per set */
inline SpanningSet canonicalize(const SpanningSet& in) {
  SpanningSet out;
  std::map<StateSet, std::int32_t> ids;
  std::vector<std::int32_t> remap(in.elements.size());
  for (std::size_t i = 0; i < in.elements.size(); ++i) {
    auto it = ids.find(in.elements[i]);
    if (it == ids.end()) {
      auto id = static_cast<std::int32_t>(out.elements.size());
      out.elements.push_back(in.elements[i]);
      ids.emplace(in.elements[i], id);
      remap[i] = id;
    } else {
      remap[i] = it->second;
    }
  }
  std::set<std::vector<std::int32_t>> seen;
  for (const auto& seq : in.sequences) {
    std::vector<std::int32_t> mapped;
    mapped.reserve(seq.size());
    for (std::int32_t e : seq) mapped.push_back(e == kTargetNode ? kTargetNode : remap[static_cast<std::size_t>(e)]);
    if (seen.insert(mapped).second) out.sequences.push_back(std::move(mapped));
  }
  return out;
}

struct VerifyReport {
  bool ok = true;
  std::string failure;
};

inline VerifyReport fail(std::string why) { return {false, std::move(why)}; }

/* G maps cover element -> input (memoryless feedback on elements) */
inline VerifyReport verify_spanning_set(const FiniteSystem& sys, const ReachSpec& spec,
                                        const SpanningSet& raw,
                                        const std::vector<InputId>& g_of_element) {
  if (g_of_element.size() != raw.elements.size())
    return fail("input map size does not match the cover");
  /* remap G through canonicalization; conflicting inputs on one element set
   * would make the feedback ill-defined */
  std::map<StateSet, InputId> g_canon;
  for (std::size_t i = 0; i < raw.elements.size(); ++i) {
    auto [it, fresh] = g_canon.emplace(raw.elements[i], g_of_element[i]);
    if (!fresh && it->second != g_of_element[i])
      return fail("conflicting inputs assigned to one cover element");
  }
  SpanningSet r = canonicalize(raw);
  std::vector<InputId> g(r.elements.size());
  for (std::size_t i = 0; i < r.elements.size(); ++i) g[i] = g_canon.at(r.elements[i]);

  if (r.sequences.empty()) return fail("no sequences");

  /* condition 2 first: shapes */
  for (const auto& seq : r.sequences) {
    if (seq.empty()) return fail("empty sequence");
    if (seq.back() != kTargetNode) return fail("sequence does not end at the target");
    for (std::size_t t = 0; t + 1 < seq.size(); ++t) {
      if (seq[t] == kTargetNode) return fail("target in a non-final position");
      const StateSet& el = r.elements[static_cast<std::size_t>(seq[t])];
      if (el.empty()) return fail("empty cover element");
      if (sets_intersect(el, spec.t_states)) return fail("cover element intersects the target");
      for (StateId s : el)
        if (!set_contains(spec.q_states, s)) return fail("cover element leaves Q");
    }
  }

  /* condition 1: first entries cover Q (T covers itself) */
  {
    StateSet covered;
    for (const auto& seq : r.sequences) {
      if (seq.front() == kTargetNode) covered = set_union(covered, spec.t_states);
      else covered = set_union(covered, r.elements[static_cast<std::size_t>(seq.front())]);
    }
    for (StateId s : spec.q_states)
      if (!set_contains(covered, s))
        return fail("first elements do not cover Q (state " + sys.state_name(s) + ")");
  }

  /* condition 3: per-prefix successor unions contain the image */
  std::map<std::vector<std::int32_t>, std::set<std::int32_t>> next_of_prefix;
  for (const auto& seq : r.sequences)
    for (std::size_t t = 0; t + 1 < seq.size(); ++t) {
      std::vector<std::int32_t> prefix(seq.begin(), seq.begin() + static_cast<std::ptrdiff_t>(t + 1));
      next_of_prefix[prefix].insert(seq[t + 1]);
    }
  for (const auto& [prefix, nexts] : next_of_prefix) {
    auto last = static_cast<std::size_t>(prefix.back());
    const StateSet& el = r.elements[last];
    StateSet reach = sys.post(el, g[last]);
    StateSet allowed;
    for (std::int32_t nx : nexts) {
      if (nx == kTargetNode) allowed = set_union(allowed, spec.t_states);
      else allowed = set_union(allowed, r.elements[static_cast<std::size_t>(nx)]);
    }
    for (StateId s : reach)
      if (!set_contains(allowed, s))
        return fail("image escapes the successor elements after a prefix (state " +
                    sys.state_name(s) + ")");
  }
  return {};
}

struct SpanningValue {
  double value = 0.0;                 // max over sequences
  std::vector<double> per_sequence;   // aligned with canonical sequence order
  std::size_t root_count = 0;
};

inline SpanningValue spanning_value(const SpanningSet& raw) {
  SpanningSet r = canonicalize(raw);
  SpanningValue out;
  std::set<std::int32_t> roots;
  for (const auto& seq : r.sequences)
    if (seq.front() != kTargetNode) roots.insert(seq.front());
  out.root_count = roots.size();
  double root_bits = roots.empty() ? 0.0 : log2_count(roots.size());

  std::map<std::vector<std::int32_t>, std::set<std::int32_t>> next_of_prefix;
  for (const auto& seq : r.sequences)
    for (std::size_t t = 0; t + 1 < seq.size(); ++t) {
      std::vector<std::int32_t> prefix(seq.begin(), seq.begin() + static_cast<std::ptrdiff_t>(t + 1));
      next_of_prefix[prefix].insert(seq[t + 1]);
    }

  for (const auto& seq : r.sequences) {
    const std::size_t tau = seq.size();
    if (tau <= 1) {
      out.per_sequence.push_back(0.0);
      continue;
    }
    double bits = root_bits;
    /* sum over prefixes [0..t] for t up to tau-3: branching before the last
     * non-target entry */
    for (std::size_t t = 0; t + 2 < tau; ++t) {
      std::vector<std::int32_t> prefix(seq.begin(), seq.begin() + static_cast<std::ptrdiff_t>(t + 1));
      const auto& nexts = next_of_prefix.at(prefix);
      std::size_t non_target = 0;
      for (std::int32_t nx : nexts)
        if (nx != kTargetNode) ++non_target;
      if (non_target == 0)
        throw GraphError("sequence continues through a prefix with no non-target successors");
      bits += log2_count(non_target);
    }
    double b = bits / static_cast<double>(tau - 1);
    out.per_sequence.push_back(b);
    if (b > out.value) out.value = b;
  }
  return out;
}

}  // namespace reach

#endif
