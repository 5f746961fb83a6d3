/* synthesis.hpp: minimal backward fixed point for reach-while-stay.
 * W0 = T; W_{k+1} = W_k + every state with an input whose nonempty post lands
 * inside W_k.  Sweeps are synchronous, states are scanned in ascending id
 * order and the witnessing input is the smallest valid id, so results are
 * reproducible bit for bit. */
#ifndef REACH_SYNTHESIS_HPP_
#define REACH_SYNTHESIS_HPP_

#include <ostream>
#include <vector>

#include "reach/abstraction.hpp"
#include "reach/core.hpp"
#include "reach/finite_system.hpp"

namespace reach {

struct SynthesisOptions {
  /* keep, per controlled state, the full set of inputs valid at its entry
   * sweep (needed by the coverage-greedy coarsening mode) */
  bool record_candidates = false;
};

struct ReachController {
  StateSet domain;                  // controlled states, target excluded
  std::vector<InputId> assignment;  // indexed by state id, -1 if uncontrolled
  std::vector<std::int32_t> value;  // fixed-point entry sweep, 0 otherwise
  std::size_t num_inputs = 0;
  std::size_t sweeps = 0;
  /* candidate input bitsets aligned with domain order; empty unless recorded */
  std::vector<std::vector<std::uint64_t>> candidates;

  bool controls(StateId s) const {
    return s >= 0 && s < static_cast<StateId>(assignment.size()) && assignment[s] >= 0;
  }
};

inline void candidate_set_insert(std::vector<std::uint64_t>& bits, std::size_t u) {
  bits[u >> 6] |= (1ull << (u & 63));
}
inline bool candidate_set_test(const std::vector<std::uint64_t>& bits, std::size_t u) {
  return (bits[u >> 6] >> (u & 63)) & 1u;
}

inline ReachController synthesize(const FiniteSystem& sys, const ReachSpec& spec,
                                  const SynthesisOptions& opts = {}) {
  validate_spec(sys, spec);
  const auto n = static_cast<StateId>(sys.num_states());
  const auto m = static_cast<InputId>(sys.num_inputs());
  std::vector<char> in_w(static_cast<std::size_t>(n), 0);
  for (StateId t : spec.t_states) in_w[static_cast<std::size_t>(t)] = 1;

  ReachController ctl;
  ctl.assignment.assign(static_cast<std::size_t>(n), -1);
  ctl.value.assign(static_cast<std::size_t>(n), 0);
  ctl.num_inputs = sys.num_inputs();

  StateSet pending;
  for (StateId s : spec.q_states)
    if (!set_contains(spec.t_states, s)) pending.push_back(s);

  const std::size_t words = (sys.num_inputs() + 63) / 64;
  std::int32_t sweep = 0;
  while (!pending.empty()) {
    ++sweep;
    StateSet still;
    std::vector<StateId> won;
    for (StateId s : pending) {
      InputId chosen = -1;
      std::vector<std::uint64_t> cand;
      if (opts.record_candidates) cand.assign(words, 0);
      for (InputId u = 0; u < m; ++u) {
        const StateSet& p = sys.post(s, u);
        if (p.empty()) continue;
        bool ok = true;
        for (StateId d : p)
          if (d < 0 || d >= n || !in_w[static_cast<std::size_t>(d)]) {
            ok = false;
            break;
          }
        if (!ok) continue;
        if (chosen < 0) chosen = u;
        if (!opts.record_candidates) break;
        candidate_set_insert(cand, static_cast<std::size_t>(u));
      }
      if (chosen >= 0) {
        ctl.assignment[static_cast<std::size_t>(s)] = chosen;
        ctl.value[static_cast<std::size_t>(s)] = sweep;
        won.push_back(s);
        if (opts.record_candidates) ctl.candidates.push_back(std::move(cand));
      } else {
        still.push_back(s);
      }
    }
    if (won.empty()) break;
    for (StateId s : won) {
      in_w[static_cast<std::size_t>(s)] = 1;
      ctl.domain.push_back(s);
    }
    pending = std::move(still);
  }
  ctl.sweeps = static_cast<std::size_t>(sweep);
  /* domain was appended sweep by sweep; candidate rows follow that order */
  if (opts.record_candidates && !ctl.candidates.empty()) {
    /* reorder domain+candidates to ascending state id */
    std::vector<std::size_t> order(ctl.domain.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return ctl.domain[a] < ctl.domain[b]; });
    StateSet dom(ctl.domain.size());
    std::vector<std::vector<std::uint64_t>> cands(ctl.candidates.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
      dom[i] = ctl.domain[order[i]];
      cands[i] = std::move(ctl.candidates[order[i]]);
    }
    ctl.domain = std::move(dom);
    ctl.candidates = std::move(cands);
  } else {
    std::sort(ctl.domain.begin(), ctl.domain.end());
  }
  return ctl;
}

/* n-dimensional prefix-sum table over the cell grid for O(2^d) box counts */
class BoxCounter {
 public:
  explicit BoxCounter(const std::vector<std::int64_t>& counts) : counts_(counts) {
    strides_.resize(counts.size());
    std::size_t s = 1;
    for (std::size_t k = 0; k < counts.size(); ++k) {
      strides_[k] = s;
      s *= static_cast<std::size_t>(counts[k] + 1);
    }
    table_.assign(s, 0);
  }

  void rebuild(const std::vector<char>& indicator) {
    const std::size_t d = counts_.size();
    std::fill(table_.begin(), table_.end(), 0);
    /* scatter: table index with +1 offset per axis */
    for (std::size_t cell = 0; cell < indicator.size(); ++cell) {
      if (indicator[cell]) {
        std::size_t idx = 0;
        std::size_t rest = cell;
        for (std::size_t k = 0; k < d; ++k) {
          auto c = rest % static_cast<std::size_t>(counts_[k]);
          rest /= static_cast<std::size_t>(counts_[k]);
          idx += (c + 1) * strides_[k];
        }
        table_[idx] = 1;
      }
    }
    /* cumulative pass along each axis */
    for (std::size_t k = 0; k < d; ++k) {
      std::size_t total = table_.size();
      for (std::size_t i = 0; i < total; ++i) {
        std::size_t coord = (i / strides_[k]) % static_cast<std::size_t>(counts_[k] + 1);
        if (coord > 0) table_[i] += table_[i - strides_[k]];
      }
    }
  }

  /* inclusive index box count */
  std::int64_t count(const std::vector<std::int32_t>& lo, const std::vector<std::int32_t>& hi) const {
    const std::size_t d = counts_.size();
    std::int64_t sum = 0;
    for (std::size_t mask = 0; mask < (1u << d); ++mask) {
      std::size_t idx = 0;
      int sign = 1;
      for (std::size_t k = 0; k < d; ++k) {
        std::size_t edge;
        if (mask & (1u << k)) {
          edge = static_cast<std::size_t>(lo[k]); /* exclusive low face */
          sign = -sign;
        } else {
          edge = static_cast<std::size_t>(hi[k]) + 1;
        }
        idx += edge * strides_[k];
      }
      sum += sign * table_[idx];
    }
    return sum;
  }

 private:
  std::vector<std::int64_t> counts_;
  std::vector<std::size_t> strides_;
  std::vector<std::int64_t> table_;
};

/* fast path for separable grid abstractions; same sweep semantics and the
 * same tie-break as the explicit fixed point */
inline ReachController synthesize_separable(const GridAbstraction& abs,
                                            const SynthesisOptions& opts = {}) {
  const Grid& grid = abs.grid();
  const std::size_t dim = grid.dim();
  const std::size_t cells = grid.num_cells();
  const std::size_t per_axis = abs.axis_input_count();
  const auto& table = abs.axis_table();

  std::vector<char> in_w(cells, 0);
  for (StateId t : abs.t_cells()) in_w[static_cast<std::size_t>(t)] = 1;

  ReachController ctl;
  ctl.assignment.assign(cells, -1);
  ctl.value.assign(cells, 0);
  ctl.num_inputs = abs.num_inputs();
  const std::size_t words = (abs.num_inputs() + 63) / 64;

  StateSet pending;
  for (StateId s : abs.q_cells())
    if (!set_contains(abs.t_cells(), s)) pending.push_back(s);

  BoxCounter counter(grid.counts());
  /* feasible component inputs per (cell,axis), compressed into maximal runs
   * of consecutive ui sharing one index range; the box query result only
   * depends on the range, so one probe settles a whole run */
  struct Run {
    std::int32_t first, last;   /* cell index range on this axis */
    std::int32_t ui_lo, ui_hi;  /* component input ids covered */
  };
  std::vector<std::vector<std::vector<Run>>> runs(cells);
  for (StateId s : pending) {
    auto c = static_cast<std::size_t>(s);
    runs[c].resize(dim);
    for (std::size_t k = 0; k < dim; ++k) {
      for (std::size_t ui = 0; ui < per_axis; ++ui) {
        const auto& e = table[(c * dim + k) * per_axis + ui];
        if (!e.inside || e.count() <= 0) continue;
        auto& rs = runs[c][k];
        if (!rs.empty() && rs.back().ui_hi + 1 == static_cast<std::int32_t>(ui) &&
            rs.back().first == e.first && rs.back().last == e.last) {
          rs.back().ui_hi = static_cast<std::int32_t>(ui);
        } else {
          rs.push_back({e.first, e.last, static_cast<std::int32_t>(ui),
                        static_cast<std::int32_t>(ui)});
        }
      }
    }
  }

  std::vector<std::int32_t> lo(dim), hi(dim), comp(dim);
  std::int32_t sweep = 0;
  struct Won {
    StateId s;
    InputId u;
    std::vector<std::uint64_t> cand;
  };
  /* walk run combinations with axis 0 innermost: the first hit carries the
   * smallest composed input id */
  auto scan_cell = [&](std::size_t c, InputId& chosen, std::vector<std::uint64_t>* cand) {
    std::vector<std::size_t> pos(dim, 0);
    for (;;) {
      std::int64_t volume = 1;
      for (std::size_t k = 0; k < dim; ++k) {
        const Run& r = runs[c][k][pos[k]];
        lo[k] = r.first;
        hi[k] = r.last;
        volume *= (r.last - r.first + 1);
      }
      if (counter.count(lo, hi) == volume) {
        for (std::size_t k = 0; k < dim; ++k) comp[k] = runs[c][k][pos[k]].ui_lo;
        InputId u = abs.compose_input(comp);
        if (chosen < 0) chosen = u;
        if (!cand) return;
        /* expand the whole valid run box into the candidate bitset */
        std::vector<std::int32_t> ui(dim);
        for (std::size_t k = 0; k < dim; ++k) ui[k] = runs[c][k][pos[k]].ui_lo;
        for (;;) {
          for (std::size_t k = 0; k < dim; ++k) comp[k] = ui[k];
          candidate_set_insert(*cand, static_cast<std::size_t>(abs.compose_input(comp)));
          std::size_t k = 0;
          for (; k < dim; ++k) {
            if (++ui[k] <= runs[c][k][pos[k]].ui_hi) break;
            ui[k] = runs[c][k][pos[k]].ui_lo;
          }
          if (k == dim) break;
        }
      }
      std::size_t k = 0;
      for (; k < dim; ++k) {
        if (++pos[k] < runs[c][k].size()) break;
        pos[k] = 0;
      }
      if (k == dim) return;
    }
  };
  while (!pending.empty()) {
    ++sweep;
    counter.rebuild(in_w);
    StateSet still;
    std::vector<Won> won;
    for (StateId s : pending) {
      auto c = static_cast<std::size_t>(s);
      bool any_axis_empty = false;
      for (std::size_t k = 0; k < dim; ++k)
        if (runs[c][k].empty()) any_axis_empty = true;
      if (any_axis_empty) {
        still.push_back(s);
        continue;
      }
      InputId chosen = -1;
      std::vector<std::uint64_t> cand;
      if (opts.record_candidates) cand.assign(words, 0);
      scan_cell(c, chosen, opts.record_candidates ? &cand : nullptr);
      if (chosen >= 0) {
        won.push_back({s, chosen, std::move(cand)});
      } else {
        still.push_back(s);
      }
    }
    if (won.empty()) break;
    for (auto& w : won) {
      in_w[static_cast<std::size_t>(w.s)] = 1;
      ctl.assignment[static_cast<std::size_t>(w.s)] = w.u;
      ctl.value[static_cast<std::size_t>(w.s)] = sweep;
      ctl.domain.push_back(w.s);
      if (opts.record_candidates) ctl.candidates.push_back(std::move(w.cand));
    }
    pending = std::move(still);
  }
  ctl.sweeps = static_cast<std::size_t>(sweep);
  if (opts.record_candidates && !ctl.candidates.empty()) {
    std::vector<std::size_t> order(ctl.domain.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return ctl.domain[a] < ctl.domain[b]; });
    StateSet dom(ctl.domain.size());
    std::vector<std::vector<std::uint64_t>> cands(ctl.candidates.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
      dom[i] = ctl.domain[order[i]];
      cands[i] = std::move(ctl.candidates[order[i]]);
    }
    ctl.domain = std::move(dom);
    ctl.candidates = std::move(cands);
  } else {
    std::sort(ctl.domain.begin(), ctl.domain.end());
  }
  return ctl;
}

inline ReachController synthesize(const GridAbstraction& abs, const SynthesisOptions& opts = {}) {
  if (abs.materialized()) return synthesize(abs.materialized_system(), abs.materialized_spec(), opts);
  if (abs.separable()) return synthesize_separable(abs, opts);
  /* lazy generic: same fixed point driven by on-demand post queries */
  const auto n = static_cast<StateId>(abs.num_abstract_states());
  const auto m = static_cast<InputId>(abs.num_inputs());
  std::vector<char> in_w(static_cast<std::size_t>(n), 0);
  for (StateId t : abs.t_cells()) in_w[static_cast<std::size_t>(t)] = 1;
  ReachController ctl;
  ctl.assignment.assign(static_cast<std::size_t>(n), -1);
  ctl.value.assign(static_cast<std::size_t>(n), 0);
  ctl.num_inputs = abs.num_inputs();
  const std::size_t words = (abs.num_inputs() + 63) / 64;
  StateSet pending;
  for (StateId s : abs.q_cells())
    if (!set_contains(abs.t_cells(), s)) pending.push_back(s);
  std::int32_t sweep = 0;
  while (!pending.empty()) {
    ++sweep;
    StateSet still;
    struct Won {
      StateId s;
      InputId u;
      std::vector<std::uint64_t> cand;
    };
    std::vector<Won> won;
    for (StateId s : pending) {
      InputId chosen = -1;
      std::vector<std::uint64_t> cand;
      if (opts.record_candidates) cand.assign(words, 0);
      for (InputId u = 0; u < m; ++u) {
        PostResult pr = abs.post(s, u);
        if (pr.unsafe || pr.cells.empty()) continue;
        bool ok = true;
        for (StateId d : pr.cells)
          if (!in_w[static_cast<std::size_t>(d)]) {
            ok = false;
            break;
          }
        if (!ok) continue;
        if (chosen < 0) chosen = u;
        if (!opts.record_candidates) break;
        candidate_set_insert(cand, static_cast<std::size_t>(u));
      }
      if (chosen >= 0) won.push_back({s, chosen, std::move(cand)});
      else still.push_back(s);
    }
    if (won.empty()) break;
    for (auto& w : won) {
      in_w[static_cast<std::size_t>(w.s)] = 1;
      ctl.assignment[static_cast<std::size_t>(w.s)] = w.u;
      ctl.value[static_cast<std::size_t>(w.s)] = sweep;
      ctl.domain.push_back(w.s);
      if (opts.record_candidates) ctl.candidates.push_back(std::move(w.cand));
    }
    pending = std::move(still);
  }
  ctl.sweeps = static_cast<std::size_t>(sweep);
  std::vector<std::size_t> order(ctl.domain.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return ctl.domain[a] < ctl.domain[b]; });
  StateSet dom(ctl.domain.size());
  std::vector<std::vector<std::uint64_t>> cands(ctl.candidates.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    dom[i] = ctl.domain[order[i]];
    if (opts.record_candidates) cands[i] = std::move(ctl.candidates[order[i]]);
  }
  ctl.domain = std::move(dom);
  ctl.candidates = std::move(cands);
  return ctl;
}

struct SatisfiabilityReport {
  bool satisfiable = false;
  StateSet uncovered;
};

/* Q is solvable iff every Q state is controlled or already in T */
inline SatisfiabilityReport check_reachability_satisfiable(const ReachController& ctl,
                                                           const ReachSpec& spec) {
  SatisfiabilityReport rep;
  for (StateId s : spec.q_states)
    if (!set_contains(spec.t_states, s) && !ctl.controls(s)) rep.uncovered.push_back(s);
  rep.satisfiable = rep.uncovered.empty();
  return rep;
}

inline void export_controller_csv(std::ostream& os, const ReachController& ctl,
                                  const FiniteSystem& sys) {
  os << "state,input,value\n";
  for (StateId s : ctl.domain)
    os << sys.state_name(s) << ',' << sys.input_name(ctl.assignment[static_cast<std::size_t>(s)])
       << ',' << ctl.value[static_cast<std::size_t>(s)] << '\n';
}

inline void export_controller_csv(std::ostream& os, const ReachController& ctl,
                                  const GridAbstraction& abs) {
  if (abs.mode() == GridAbstraction::Mode::kRegions) {
    os << "region,input,value\n";
    for (StateId s : ctl.domain)
      os << 'r' << s << ',' << ctl.assignment[static_cast<std::size_t>(s)] << ','
         << ctl.value[static_cast<std::size_t>(s)] << '\n';
    return;
  }
  const Grid& g = abs.grid();
  os << "cell";
  for (std::size_t k = 0; k < g.dim(); ++k) os << ",i" << k;
  os << ",input,value\n";
  for (StateId s : ctl.domain) {
    auto iv = g.unflatten(static_cast<std::size_t>(s));
    os << s;
    for (auto i : iv) os << ',' << i;
    os << ',' << ctl.assignment[static_cast<std::size_t>(s)] << ','
       << ctl.value[static_cast<std::size_t>(s)] << '\n';
  }
}

}  // namespace reach

#endif
