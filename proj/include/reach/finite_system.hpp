/* finite_system.hpp: explicit nondeterministic transition systems */
#ifndef REACH_FINITE_SYSTEM_HPP_
#define REACH_FINITE_SYSTEM_HPP_

#include <map>
#include <span>
#include <string>
#include <vector>

#include "reach/core.hpp"

namespace reach {

using StateSet = std::vector<StateId>;  // kept sorted, unique

inline bool set_contains(const StateSet& s, StateId x) {
  return std::binary_search(s.begin(), s.end(), x);
}
inline void set_insert(StateSet& s, StateId x) {
  auto it = std::lower_bound(s.begin(), s.end(), x);
  if (it == s.end() || *it != x) s.insert(it, x);
}
inline StateSet set_union(const StateSet& a, const StateSet& b) {
  StateSet r;
  r.reserve(a.size() + b.size());
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(r));
  return r;
}
inline bool set_subset(const StateSet& a, const StateSet& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}
inline bool sets_intersect(const StateSet& a, const StateSet& b) {
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) ++i;
    else if (*j < *i) ++j;
    else return true;
  }
  return false;
}

/* F : X x U -> 2^X with named states/inputs; immutable once built.
 * Blocked pairs (empty post) are representable: F(x,u) = {}. */
class FiniteSystem {
 public:
  FiniteSystem() = default;
  FiniteSystem(std::vector<std::string> state_names, std::vector<std::string> input_names)
      : state_names_(std::move(state_names)), input_names_(std::move(input_names)) {
    for (StateId i = 0; i < static_cast<StateId>(state_names_.size()); ++i)
      state_ids_[state_names_[i]] = i;
    for (InputId i = 0; i < static_cast<InputId>(input_names_.size()); ++i)
      input_ids_[input_names_[i]] = i;
    post_.assign(state_names_.size() * input_names_.size(), {});
  }

  void add_transition(StateId s, InputId u, StateId d) {
    set_insert(post_.at(slot(s, u)), d);
  }

  std::size_t num_states() const { return state_names_.size(); }
  std::size_t num_inputs() const { return input_names_.size(); }

  const StateSet& post(StateId s, InputId u) const { return post_.at(slot(s, u)); }

  StateSet post(const StateSet& xs, InputId u) const {
    StateSet r;
    for (StateId x : xs) {
      const StateSet& p = post(x, u);
      r = set_union(r, p);
    }
    return r;
  }

  bool blocked(StateId s, InputId u) const { return post(s, u).empty(); }

  const std::string& state_name(StateId s) const { return state_names_.at(s); }
  const std::string& input_name(InputId u) const { return input_names_.at(u); }

  StateId state_id(const std::string& name) const {
    auto it = state_ids_.find(name);
    if (it == state_ids_.end()) throw ConfigError("unknown state name: " + name);
    return it->second;
  }
  InputId input_id(const std::string& name) const {
    auto it = input_ids_.find(name);
    if (it == input_ids_.end()) throw ConfigError("unknown input name: " + name);
    return it->second;
  }

 private:
  std::size_t slot(StateId s, InputId u) const {
    return static_cast<std::size_t>(s) * input_names_.size() + static_cast<std::size_t>(u);
  }
  std::vector<std::string> state_names_;
  std::vector<std::string> input_names_;
  std::map<std::string, StateId> state_ids_;
  std::map<std::string, InputId> input_ids_;
  std::vector<StateSet> post_;  // indexed by state*numInputs+input
};

/* reach-while-stay problem statement over a finite system */
struct ReachSpec {
  StateSet q_states;  // the constraint set Q
  StateSet t_states;  // the target T, subset of Q
};

inline void validate_spec(const FiniteSystem& sys, const ReachSpec& spec) {
  for (StateId s : spec.q_states)
    if (s < 0 || s >= static_cast<StateId>(sys.num_states()))
      throw ConfigError("spec references state id out of range");
  if (!set_subset(spec.t_states, spec.q_states))
    throw ConfigError("target set must be contained in the constraint set");
}

}  // namespace reach

#endif
