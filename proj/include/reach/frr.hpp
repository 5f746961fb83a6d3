/* frr.hpp: feedback refinement relations between finite systems and the
 * entropy ordering they induce.
 *
 * A witness lists related state pairs (x1,x2) plus an input map r taking
 * system-2 inputs to system-1 inputs.  check_frr tests the refinement
 * property transition by transition and reports the first violation site.
 * Under the additional preconditions (functional relation, matching Q and T
 * preimages, surjectivity onto Q2) a spanning family for system 2 transports
 * to system 1 with the same sequence structure, hence the same value, which
 * yields h1 <= h2. */
#ifndef REACH_FRR_HPP_
#define REACH_FRR_HPP_

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "reach/core.hpp"
#include "reach/finite_system.hpp"
#include "reach/oracle.hpp"
#include "reach/spanning.hpp"

namespace reach {

struct RefinementWitness {
  std::vector<std::pair<StateId, StateId>> pairs;  // (x1, x2)
  std::vector<InputId> input_map;                  // u2 -> u1
};

struct FrrCheck {
  bool ok = true;
  std::string failure;
  StateId x1 = -1, x2 = -1;
  InputId u2 = -1;
};

inline FrrCheck check_frr(const FiniteSystem& sys1, const FiniteSystem& sys2,
                          const RefinementWitness& w) {
  FrrCheck out;
  auto fail = [&out](std::string why, StateId x1, StateId x2, InputId u2) {
    out.ok = false;
    out.failure = std::move(why);
    out.x1 = x1;
    out.x2 = x2;
    out.u2 = u2;
    return out;
  };
  if (w.input_map.size() != sys2.num_inputs())
    return fail("input map size does not match system-2 inputs", -1, -1, -1);
  for (InputId u1 : w.input_map)
    if (u1 < 0 || static_cast<std::size_t>(u1) >= sys1.num_inputs())
      return fail("input map target out of range", -1, -1, -1);
  std::multimap<StateId, StateId> related;  // x1 -> x2
  for (auto [x1, x2] : w.pairs) {
    if (x1 < 0 || static_cast<std::size_t>(x1) >= sys1.num_states() || x2 < 0 ||
        static_cast<std::size_t>(x2) >= sys2.num_states())
      return fail("relation pair out of range", x1, x2, -1);
    related.emplace(x1, x2);
  }
  for (auto [x1, x2] : w.pairs) {
    for (std::size_t u = 0; u < sys2.num_inputs(); ++u) {
      auto u2 = static_cast<InputId>(u);
      const StateSet& post2 = sys2.post(x2, u2);
      if (post2.empty()) continue;  // input not applicable at x2
      const StateSet& post1 = sys1.post(x1, w.input_map[u]);
      if (post1.empty()) return fail("mapped input blocks the refined system", x1, x2, u2);
      for (StateId y1 : post1) {
        auto [lo, hi] = related.equal_range(y1);
        for (auto it = lo; it != hi; ++it)
          if (!set_contains(post2, it->second))
            return fail("successor image is not simulated", x1, x2, u2);
      }
    }
  }
  return out;
}

struct PreconditionCheck {
  bool ok = true;
  std::string failure;
};

/* extra hypotheses for the entropy ordering: R is a map on the system-1
 * state set, Q1 and T1 are exactly the preimages of Q2 and T2, and every
 * system-2 state in Q2 is hit */
inline PreconditionCheck check_order_preconditions(const FiniteSystem& sys1,
                                                   const ReachSpec& spec1,
                                                   const FiniteSystem& sys2,
                                                   const ReachSpec& spec2,
                                                   const RefinementWitness& w) {
  PreconditionCheck out;
  auto fail = [&out](std::string why) {
    out.ok = false;
    out.failure = std::move(why);
    return out;
  };
  std::map<StateId, StateId> image;
  for (auto [x1, x2] : w.pairs) {
    auto [it, fresh] = image.emplace(x1, x2);
    if (!fresh && it->second != x2)
      return fail("relation is not functional at state " + sys1.state_name(x1));
  }
  if (image.size() != sys1.num_states())
    return fail("relation does not cover every refined state");
  StateSet hit;
  for (auto [x1, x2] : w.pairs) {
    bool in_q1 = set_contains(spec1.q_states, x1);
    bool in_q2 = set_contains(spec2.q_states, x2);
    if (in_q1 != in_q2)
      return fail("Q1 is not the preimage of Q2 at state " + sys1.state_name(x1));
    bool in_t1 = set_contains(spec1.t_states, x1);
    bool in_t2 = set_contains(spec2.t_states, x2);
    if (in_t1 != in_t2)
      return fail("T1 is not the preimage of T2 at state " + sys1.state_name(x1));
    if (in_q2) set_insert(hit, x2);
  }
  for (StateId x2 : spec2.q_states)
    if (!set_contains(hit, x2))
      return fail("state " + sys2.state_name(x2) + " has no preimage");
  return out;
}

struct TransportedFamily {
  SpanningSet family;
  std::vector<InputId> inputs;
};

/* pull a system-2 family back through the relation: elements become
 * preimages, inputs go through r, sequences are unchanged */
inline TransportedFamily transport_spanning_set(const SpanningSet& fam2,
                                                const std::vector<InputId>& inputs2,
                                                const RefinementWitness& w) {
  TransportedFamily out;
  out.family.sequences = fam2.sequences;
  for (std::size_t e = 0; e < fam2.elements.size(); ++e) {
    StateSet pre;
    for (auto [x1, x2] : w.pairs)
      if (set_contains(fam2.elements[e], x2)) set_insert(pre, x1);
    out.family.elements.push_back(std::move(pre));
    out.inputs.push_back(w.input_map[static_cast<std::size_t>(inputs2[e])]);
  }
  return out;
}

struct OrderingReport {
  FrrCheck frr;
  PreconditionCheck preconditions;
  double h1 = kInf, h2 = kInf;
  bool transported_valid = false;
  double transported_value = kInf;
  bool ordered = false;  // h1 <= h2 within tolerance
  bool truncated = false;
  std::string transport_failure;
};

inline OrderingReport check_entropy_ordering(const FiniteSystem& sys1, const ReachSpec& spec1,
                                             const FiniteSystem& sys2, const ReachSpec& spec2,
                                             const RefinementWitness& w,
                                             OracleOptions opts1 = {}, OracleOptions opts2 = {}) {
  OrderingReport rep;
  rep.frr = check_frr(sys1, sys2, w);
  rep.preconditions = check_order_preconditions(sys1, spec1, sys2, spec2, w);
  OracleResult r1 = exact_entropy(sys1, spec1, opts1);
  OracleResult r2 = exact_entropy(sys2, spec2, opts2);
  rep.h1 = r1.entropy;
  rep.h2 = r2.entropy;
  rep.truncated = r1.search_truncated || r2.search_truncated;
  if (!r2.witness_family.elements.empty()) {
    TransportedFamily t = transport_spanning_set(r2.witness_family, r2.witness_inputs, w);
    VerifyReport v = verify_spanning_set(sys1, spec1, t.family, t.inputs);
    rep.transported_valid = v.ok;
    if (v.ok) rep.transported_value = spanning_value(t.family).value;
    else rep.transport_failure = v.failure;
  }
  rep.ordered = rep.h1 <= rep.h2 + 1e-9;
  return rep;
}

}  // namespace reach

#endif
