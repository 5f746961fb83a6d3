/* oracle.hpp: reference entropy search for tiny finite systems.
 *
 * Three stages, cheapest first:
 *   1. trivial case: one input steers every non-target Q state into T while
 *      staying in Q, with no cycle on the way -> value 0;
 *   2. exhaustive bounded search over covers of Q\T (arbitrary nonempty
 *      subsets, overlap allowed, at most max_cover_size elements), memoryless
 *      element inputs, minimal successor structures and minimal root sets;
 *      sequence values come from direct path enumeration;
 *   3. controller-seeded candidates: every valid memoryless state feedback
 *      (or just the synthesized one when the enumeration would be too large),
 *      lumped by input and by input+value, evaluated on its group closure.
 * The reported value is the best candidate found within the caps; caps and
 * truncation are part of the result, so callers can tell how hard the search
 * tried.  Values are upper bounds of the true infimum by construction. */
#ifndef REACH_ORACLE_HPP_
#define REACH_ORACLE_HPP_

#include <functional>
#include <map>
#include <vector>

#include "reach/core.hpp"
#include "reach/finite_system.hpp"
#include "reach/spanning.hpp"
#include "reach/synthesis.hpp"

namespace reach {

struct OracleOptions {
  std::size_t max_cover_size = 0;        // 0: largest cap fitting the budget
  std::size_t max_len = 0;               // 0: #(Q\T)+1
  bool enable_seeds = true;
  std::size_t controller_limit = 200'000;
  std::size_t state_cap = 8;
  std::size_t config_budget = 5'000'000;  // (cover, input-map) evaluations
};

struct OracleResult {
  double entropy = kInf;
  bool trivial = false;
  InputId trivial_input = -1;
  bool from_seed = false;
  bool search_truncated = false;
  std::size_t max_cover_size = 0;
  std::size_t max_len = 0;
  std::size_t configs_evaluated = 0;
  SpanningSet witness_family;
  std::vector<InputId> witness_inputs;  // aligned with witness_family.elements
};

namespace oracle_detail {

using Mask = std::uint32_t;

struct LocalPost {
  Mask live = 0;      // successors inside Q\T (local bits)
  bool t_hit = false; // some successor in T
  bool escapes = false;
  bool blocked = false;
};

struct Problem {
  const FiniteSystem* sys;
  const ReachSpec* spec;
  std::vector<StateId> q_local;             // local index -> state id
  std::vector<LocalPost> post;              // [local * m + u]
  std::size_t nq = 0, m = 0;
  Mask full = 0;

  LocalPost element_post(Mask element, InputId u) const {
    LocalPost acc;
    Mask e = element;
    while (e) {
      unsigned i = static_cast<unsigned>(__builtin_ctz(e));
      e &= e - 1;
      const LocalPost& p = post[i * m + static_cast<std::size_t>(u)];
      acc.live |= p.live;
      acc.t_hit |= p.t_hit;
      acc.escapes |= p.escapes;
      acc.blocked |= p.blocked;  // a blocked member leaves the image partial
    }
    return acc;
  }
};

inline Problem localize(const FiniteSystem& sys, const ReachSpec& spec) {
  Problem pb;
  pb.sys = &sys;
  pb.spec = &spec;
  for (StateId s : spec.q_states)
    if (!set_contains(spec.t_states, s)) pb.q_local.push_back(s);
  pb.nq = pb.q_local.size();
  pb.m = sys.num_inputs();
  pb.full = pb.nq == 32 ? ~0u : ((1u << pb.nq) - 1);
  std::map<StateId, unsigned> local_of;
  for (unsigned i = 0; i < pb.nq; ++i) local_of[pb.q_local[i]] = i;
  pb.post.resize(pb.nq * pb.m);
  for (unsigned i = 0; i < pb.nq; ++i)
    for (std::size_t u = 0; u < pb.m; ++u) {
      LocalPost lp;
      const StateSet& succ = sys.post(pb.q_local[i], static_cast<InputId>(u));
      lp.blocked = succ.empty();
      for (StateId d : succ) {
        if (set_contains(spec.t_states, d)) lp.t_hit = true;
        else if (auto it = local_of.find(d); it != local_of.end()) lp.live |= (1u << it->second);
        else lp.escapes = true;
      }
      pb.post[i * pb.m + u] = lp;
    }
  return pb;
}

/* single-input convergence: nonblocking, stays in Q, no cycle */
inline bool trivial_under(const Problem& pb, InputId u) {
  std::vector<Mask> succ(pb.nq);
  for (unsigned i = 0; i < pb.nq; ++i) {
    const LocalPost& p = pb.post[i * pb.m + static_cast<std::size_t>(u)];
    if (p.blocked || p.escapes) return false;
    succ[i] = p.live;
  }
  /* Kahn over the local graph */
  std::vector<unsigned> indeg(pb.nq, 0);
  for (unsigned i = 0; i < pb.nq; ++i) {
    Mask s = succ[i];
    while (s) {
      indeg[static_cast<unsigned>(__builtin_ctz(s))]++;
      s &= s - 1;
    }
  }
  std::vector<unsigned> stack;
  for (unsigned i = 0; i < pb.nq; ++i)
    if (indeg[i] == 0) stack.push_back(i);
  std::size_t seen = 0;
  while (!stack.empty()) {
    unsigned i = stack.back();
    stack.pop_back();
    ++seen;
    Mask s = succ[i];
    while (s) {
      unsigned j = static_cast<unsigned>(__builtin_ctz(s));
      s &= s - 1;
      if (--indeg[j] == 0) stack.push_back(j);
    }
  }
  return seen == pb.nq;
}

inline int popcount(Mask m) { return __builtin_popcount(m); }

/* minimal sub-families of `pool` whose union covers `need`; self excluded by
 * the caller when relevant */
inline std::vector<std::vector<int>> minimal_covers(const std::vector<Mask>& pool, Mask need,
                                                    std::size_t option_cap, bool& truncated) {
  std::vector<std::vector<int>> out;
  const auto n = static_cast<int>(pool.size());
  std::vector<int> chosen;
  std::function<void(int, Mask)> rec = [&](int from, Mask covered) {
    if (out.size() >= option_cap) {
      truncated = true;
      return;
    }
    if ((need & ~covered) == 0) {
      /* minimal only: dropping any chosen member must break coverage */
      for (int c : chosen) {
        Mask rest = 0;
        for (int o : chosen)
          if (o != c) rest |= pool[static_cast<std::size_t>(o)];
        if ((need & ~rest) == 0) return;
      }
      out.push_back(chosen);
      return;
    }
    if (from >= n) return;
    /* skip elements adding nothing new */
    rec(from + 1, covered);
    if ((pool[static_cast<std::size_t>(from)] & need & ~covered) != 0) {
      chosen.push_back(from);
      rec(from + 1, covered | pool[static_cast<std::size_t>(from)]);
      chosen.pop_back();
    }
  };
  rec(0, 0);
  return out;
}

struct Closure {
  /* per element: non-target children (indices into the cover) + target flag */
  std::vector<std::vector<int>> children;
  std::vector<char> to_target;
  std::vector<int> roots;
};

/* max sequence value of the closure by explicit path walking */
inline double closure_value(const Closure& cl, std::size_t max_len, bool& too_long) {
  double root_bits = log2_count(cl.roots.size());
  double best = -1.0;
  struct Frame {
    int node;
    double bits;
    std::size_t steps;
  };
  std::vector<Frame> frames;
  for (int r : cl.roots) frames.push_back({r, 0.0, 1});
  std::size_t walked = 0;
  while (!frames.empty()) {
    Frame f = frames.back();
    frames.pop_back();
    if (f.steps + 1 > max_len || ++walked > 200'000) {
      too_long = true;
      return -1.0;
    }
    auto node = static_cast<std::size_t>(f.node);
    if (cl.to_target[node]) {
      double v = (root_bits + f.bits) / static_cast<double>(f.steps);
      if (v > best) best = v;
    }
    if (!cl.children[node].empty()) {
      double w = log2_count(cl.children[node].size());
      for (int c : cl.children[node]) frames.push_back({c, f.bits + w, f.steps + 1});
    }
  }
  return best;
}

inline SpanningSet closure_family(const Closure& cl, const std::vector<StateSet>& elements) {
  SpanningSet fam;
  fam.elements = elements;
  fam.sequences.push_back({kTargetNode});
  std::vector<std::int32_t> cur;
  std::function<void(int)> walk = [&](int node) {
    cur.push_back(node);
    auto i = static_cast<std::size_t>(node);
    if (cl.to_target[i]) {
      auto seq = cur;
      seq.push_back(kTargetNode);
      fam.sequences.push_back(std::move(seq));
    }
    for (int c : cl.children[i]) walk(c);
    cur.pop_back();
  };
  for (int r : cl.roots) walk(r);
  return fam;
}

}  // namespace oracle_detail

inline OracleResult exact_entropy(const FiniteSystem& sys, const ReachSpec& spec,
                                  OracleOptions opts = {}) {
  using namespace oracle_detail;
  validate_spec(sys, spec);
  Problem pb = localize(sys, spec);
  if (pb.nq > opts.state_cap)
    throw DomainError("oracle: too many non-target states (" + std::to_string(pb.nq) + ")");

  OracleResult res;
  res.max_len = opts.max_len ? opts.max_len : pb.nq + 1;

  if (pb.nq == 0) {
    res.entropy = 0.0;
    res.witness_family.sequences.push_back({kTargetNode});
    res.max_cover_size = 0;
    return res;
  }

  /* stage 1: trivial single-input convergence */
  for (std::size_t u = 0; u < pb.m; ++u)
    if (trivial_under(pb, static_cast<InputId>(u))) {
      res.entropy = 0.0;
      res.trivial = true;
      res.trivial_input = static_cast<InputId>(u);
      res.witness_family.sequences.push_back({kTargetNode});
      return res;
    }

  auto consider = [&res](double value, SpanningSet fam, std::vector<InputId> inputs, bool seed) {
    if (value < res.entropy - 1e-12) {
      res.entropy = value;
      res.witness_family = std::move(fam);
      res.witness_inputs = std::move(inputs);
      res.from_seed = seed;
    }
  };

  /* stage 2: bounded exhaustive cover search */
  const std::size_t subsets = (1u << pb.nq) - 1;
  std::size_t cap = opts.max_cover_size;
  if (cap == 0) {
    /* largest cap whose combination count times input maps fits the budget */
    for (std::size_t c = 1; c <= pb.nq; ++c) {
      double combos = 1.0, gmaps = 1.0;
      for (std::size_t i = 0; i < c; ++i) {
        combos *= static_cast<double>(subsets - i) / static_cast<double>(i + 1);
        gmaps *= static_cast<double>(pb.m);
      }
      if (combos * gmaps <= static_cast<double>(opts.config_budget)) cap = c;
      else break;
    }
    if (cap == 0) cap = 1;
  }
  res.max_cover_size = cap;

  std::vector<Mask> cover;
  std::vector<StateSet> cover_sets;
  std::vector<InputId> g(cap);
  const std::size_t option_cap = 64;

  auto element_states = [&pb](Mask m) {
    StateSet s;
    Mask e = m;
    while (e) {
      unsigned i = static_cast<unsigned>(__builtin_ctz(e));
      e &= e - 1;
      s.push_back(pb.q_local[i]);
    }
    std::sort(s.begin(), s.end());
    return s;
  };

  auto evaluate_config = [&](const std::vector<Mask>& a, const std::vector<InputId>& gm) {
    ++res.configs_evaluated;
    const std::size_t na = a.size();
    std::vector<Mask> img_live(na);
    std::vector<char> img_t(na), bad(na, 0);
    for (std::size_t e = 0; e < na; ++e) {
      LocalPost p = pb.element_post(a[e], gm[e]);
      if (p.escapes || p.blocked) bad[e] = 1;  // leaves Q or deadlocks: unusable
      img_live[e] = p.live;
      img_t[e] = p.t_hit ? 1 : 0;
    }
    /* usable fixpoint: the live image must stay coverable by usable peers */
    std::vector<char> usable(na);
    for (std::size_t e = 0; e < na; ++e) usable[e] = bad[e] ? 0 : 1;
    for (bool changed = true; changed;) {
      changed = false;
      Mask pool = 0;
      for (std::size_t e = 0; e < na; ++e)
        if (usable[e]) pool |= a[e];
      for (std::size_t e = 0; e < na; ++e)
        if (usable[e] && (img_live[e] & ~pool) != 0) {
          usable[e] = 0;
          changed = true;
        }
    }
    Mask pool = 0;
    std::vector<Mask> usable_masks;
    std::vector<int> usable_ids;
    for (std::size_t e = 0; e < na; ++e)
      if (usable[e]) {
        pool |= a[e];
        usable_masks.push_back(a[e]);
        usable_ids.push_back(static_cast<int>(e));
      }
    if ((pb.full & ~pool) != 0) return;  // roots cannot cover Q

    /* successor options per usable element */
    const auto nu = usable_ids.size();
    std::vector<std::vector<std::vector<int>>> options(nu);  // child lists (usable-local ids)
    std::vector<char> opt_t(nu);
    for (std::size_t ue = 0; ue < nu; ++ue) {
      auto e = static_cast<std::size_t>(usable_ids[ue]);
      opt_t[ue] = img_t[e];
      Mask need = img_live[e];
      if (need == 0) {
        if (img_t[e]) {
          options[ue].push_back({});  // forced (element, T) ending
        } else {
          options[ue].push_back({});  // end at T directly
          for (std::size_t o = 0; o < nu; ++o)
            if (o != ue) options[ue].push_back({static_cast<int>(o)});
        }
        continue;
      }
      std::vector<Mask> peer_pool;
      std::vector<int> peer_ids;
      for (std::size_t o = 0; o < nu; ++o)
        if (o != ue) {
          peer_pool.push_back(usable_masks[o]);
          peer_ids.push_back(static_cast<int>(o));
        }
      bool trunc = false;
      auto covers = minimal_covers(peer_pool, need, option_cap, trunc);
      if (trunc) res.search_truncated = true;
      for (auto& c : covers) {
        std::vector<int> kids;
        for (int pi : c) kids.push_back(peer_ids[static_cast<std::size_t>(pi)]);
        options[ue].push_back(std::move(kids));
      }
      if (options[ue].empty()) return;  // image needs the element itself: stuck
    }

    /* minimal root families over the usable elements */
    bool root_trunc = false;
    auto root_sets = minimal_covers(usable_masks, pb.full, option_cap, root_trunc);
    if (root_trunc) res.search_truncated = true;
    if (root_sets.empty()) return;

    /* walk the option product */
    std::vector<std::size_t> pick(nu, 0);
    std::size_t combos_seen = 0;
    for (;;) {
      if (++combos_seen > 4096) {
        res.search_truncated = true;
        break;
      }
      Closure cl;
      cl.children.resize(nu);
      cl.to_target.assign(nu, 0);
      bool acyclic = true;
      for (std::size_t ue = 0; ue < nu; ++ue) {
        cl.children[ue] = options[ue][pick[ue]];
        bool ends = opt_t[ue] || (img_live[static_cast<std::size_t>(usable_ids[ue])] == 0 &&
                                  cl.children[ue].empty());
        cl.to_target[ue] = ends ? 1 : 0;
      }
      /* cycle check on the chosen structure */
      {
        std::vector<int> state(nu, 0);
        std::function<bool(std::size_t)> dfs = [&](std::size_t v) -> bool {
          state[v] = 1;
          for (int c : cl.children[v]) {
            auto cu = static_cast<std::size_t>(c);
            if (state[cu] == 1) return false;
            if (state[cu] == 0 && !dfs(cu)) return false;
          }
          state[v] = 2;
          return true;
        };
        for (std::size_t v = 0; v < nu && acyclic; ++v)
          if (state[v] == 0 && !dfs(v)) acyclic = false;
      }
      if (acyclic) {
        for (const auto& roots : root_sets) {
          cl.roots = roots;
          bool too_long = false;
          double v = closure_value(cl, res.max_len, too_long);
          if (too_long || v < 0.0) continue;
          if (v < res.entropy - 1e-12) {
            std::vector<StateSet> elems;
            std::vector<InputId> inputs;
            for (std::size_t ue = 0; ue < nu; ++ue) {
              elems.push_back(element_states(usable_masks[ue]));
              inputs.push_back(gm[static_cast<std::size_t>(usable_ids[ue])]);
            }
            consider(v, closure_family(cl, elems), std::move(inputs), false);
          }
        }
      }
      std::size_t k = 0;
      for (; k < nu; ++k) {
        if (++pick[k] < options[k].size()) break;
        pick[k] = 0;
      }
      if (k == nu) break;
    }
  };

  /* covers: ascending subset masks, ascending size, union must be full */
  std::function<void(std::size_t, Mask, std::size_t)> enum_covers = [&](std::size_t from,
                                                                        Mask covered,
                                                                        std::size_t depth) {
    if (res.configs_evaluated > opts.config_budget) {
      res.search_truncated = true;
      return;
    }
    if (covered == pb.full && depth > 0) {
      /* all input maps over the chosen cover */
      std::vector<InputId> gm(depth, 0);
      for (;;) {
        evaluate_config(cover, gm);
        if (res.configs_evaluated > opts.config_budget) {
          res.search_truncated = true;
          return;
        }
        std::size_t k = 0;
        for (; k < depth; ++k) {
          if (static_cast<std::size_t>(++gm[k]) < pb.m) break;
          gm[k] = 0;
        }
        if (k == depth) break;
      }
    }
    if (depth >= cap) return;
    for (std::size_t msk = from; msk <= subsets; ++msk) {
      cover.push_back(static_cast<Mask>(msk));
      enum_covers(msk + 1, covered | static_cast<Mask>(msk), depth + 1);
      cover.pop_back();
      if (res.configs_evaluated > opts.config_budget) return;
    }
  };
  enum_covers(1, 0, 0);

  /* stage 3: controller-seeded candidates */
  if (opts.enable_seeds) {
    std::vector<std::vector<InputId>> per_state_ok(pb.nq);
    bool feasible = true;
    for (unsigned i = 0; i < pb.nq && feasible; ++i) {
      for (std::size_t u = 0; u < pb.m; ++u) {
        const LocalPost& p = pb.post[i * pb.m + u];
        if (!p.blocked && !p.escapes) per_state_ok[i].push_back(static_cast<InputId>(u));
      }
      if (per_state_ok[i].empty()) feasible = false;
    }

    auto eval_controller = [&](const std::vector<InputId>& ctrl) {
      /* closed-loop successor masks and acyclicity */
      std::vector<Mask> succ(pb.nq);
      for (unsigned i = 0; i < pb.nq; ++i)
        succ[i] = pb.post[i * pb.m + static_cast<std::size_t>(ctrl[i])].live;
      std::vector<int> height(pb.nq, -1);
      std::function<bool(unsigned)> calc = [&](unsigned i) -> bool {
        if (height[i] == -2) return false;  // on stack: cycle
        if (height[i] >= 0) return true;
        height[i] = -2;
        int h = 0;
        Mask s = succ[i];
        while (s) {
          unsigned j = static_cast<unsigned>(__builtin_ctz(s));
          s &= s - 1;
          if (!calc(j)) return false;
          h = std::max(h, height[j]);
        }
        height[i] = h + 1;
        return true;
      };
      for (unsigned i = 0; i < pb.nq; ++i)
        if (!calc(i)) return;

      for (int mode = 0; mode < 2; ++mode) {
        /* lump states: key = input (+ height in mode 1) */
        std::map<std::pair<InputId, int>, int> group_of_key;
        std::vector<int> group_of(pb.nq);
        std::vector<StateSet> members;
        std::vector<InputId> ginput;
        for (unsigned i = 0; i < pb.nq; ++i) {
          std::pair<InputId, int> key{ctrl[i], mode == 0 ? 0 : height[i]};
          auto it = group_of_key.find(key);
          int gid;
          if (it == group_of_key.end()) {
            gid = static_cast<int>(members.size());
            group_of_key.emplace(key, gid);
            members.emplace_back();
            ginput.push_back(ctrl[i]);
          } else {
            gid = it->second;
          }
          group_of[i] = gid;
          members[static_cast<std::size_t>(gid)].push_back(pb.q_local[i]);
        }
        const std::size_t ng = members.size();
        std::vector<std::vector<int>> kids(ng);
        std::vector<char> to_t(ng, 0);
        for (unsigned i = 0; i < pb.nq; ++i) {
          auto gi = static_cast<std::size_t>(group_of[i]);
          const LocalPost& p = pb.post[i * pb.m + static_cast<std::size_t>(ctrl[i])];
          if (p.t_hit) to_t[gi] = 1;
          Mask s = p.live;
          while (s) {
            unsigned j = static_cast<unsigned>(__builtin_ctz(s));
            s &= s - 1;
            int gj = group_of[j];
            auto& k = kids[gi];
            auto it = std::lower_bound(k.begin(), k.end(), gj);
            if (it == k.end() || *it != gj) k.insert(it, gj);
          }
        }
        /* group graph must be a DAG (guaranteed in mode 1) */
        {
          std::vector<int> state(ng, 0);
          bool ok = true;
          std::function<bool(std::size_t)> dfs = [&](std::size_t v) -> bool {
            state[v] = 1;
            for (int c : kids[v]) {
              auto cu = static_cast<std::size_t>(c);
              if (state[cu] == 1) return false;
              if (state[cu] == 0 && !dfs(cu)) return false;
            }
            state[v] = 2;
            return true;
          };
          for (std::size_t v = 0; v < ng && ok; ++v)
            if (state[v] == 0 && !dfs(v)) ok = false;
          if (!ok) continue;
        }
        /* length-indexed DP, exclude-target weights, all groups as roots */
        const double root_bits = log2_count(ng);
        std::vector<std::vector<double>> best(ng + 1, std::vector<double>(ng, -kInf));
        for (std::size_t i = 0; i < ng; ++i)
          if (to_t[i]) best[1][i] = 0.0;
        double value = -1.0;
        for (std::size_t len = 1; len <= ng; ++len) {
          for (std::size_t i = 0; i < ng; ++i) {
            if (len >= 2) {
              double b = -kInf;
              for (int c : kids[i]) b = std::max(b, best[len - 1][static_cast<std::size_t>(c)]);
              if (b == -kInf) continue;
              best[len][i] = (kids[i].empty() ? 0.0 : log2_count(kids[i].size())) + b;
            }
            if (best[len][i] == -kInf) continue;
            value = std::max(value, (best[len][i] + root_bits) / static_cast<double>(len));
          }
        }
        if (value < 0.0) continue;
        if (value < res.entropy - 1e-12) {
          Closure cl;
          cl.children = kids;
          cl.to_target.assign(to_t.begin(), to_t.end());
          cl.roots.resize(ng);
          for (std::size_t i = 0; i < ng; ++i) cl.roots[i] = static_cast<int>(i);
          consider(value, closure_family(cl, members), std::vector<InputId>(ginput), true);
        }
      }
    };

    if (feasible) {
      double total = 1.0;
      for (unsigned i = 0; i < pb.nq; ++i) total *= static_cast<double>(per_state_ok[i].size());
      if (total <= static_cast<double>(opts.controller_limit)) {
        std::vector<std::size_t> pos(pb.nq, 0);
        std::vector<InputId> ctrl(pb.nq);
        for (;;) {
          for (unsigned i = 0; i < pb.nq; ++i) ctrl[i] = per_state_ok[i][pos[i]];
          eval_controller(ctrl);
          std::size_t k = 0;
          for (; k < pb.nq; ++k) {
            if (++pos[k] < per_state_ok[k].size()) break;
            pos[k] = 0;
          }
          if (k == pb.nq) break;
        }
      } else {
        res.search_truncated = true;
        ReachController synth = synthesize(*pb.sys, *pb.spec);
        bool full = true;
        std::vector<InputId> ctrl(pb.nq);
        for (unsigned i = 0; i < pb.nq; ++i) {
          if (!synth.controls(pb.q_local[i])) {
            full = false;
            break;
          }
          ctrl[i] = synth.assignment[static_cast<std::size_t>(pb.q_local[i])];
        }
        if (full) eval_controller(ctrl);
      }
    }
  }

  return res;
}

}  // namespace reach

#endif
