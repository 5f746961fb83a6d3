/* pipeline.hpp: abstraction -> synthesis -> coarsening -> graph -> N(R),
 * with a deterministic JSON report.  Wall-clock timings live in a separate
 * JSON object so the report bytes stay reproducible across runs. */
#ifndef REACH_PIPELINE_HPP_
#define REACH_PIPELINE_HPP_

#include <algorithm>
#include <chrono>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "reach/abstraction.hpp"
#include "reach/cache.hpp"
#include "reach/coarsening.hpp"
#include "reach/config.hpp"
#include "reach/core.hpp"
#include "reach/entropy_graph.hpp"
#include "reach/finite_system.hpp"
#include "reach/spanning.hpp"
#include "reach/synthesis.hpp"
#include "json.hpp"

namespace reach {

using ordered_json = nlohmann::ordered_json;

struct PipelineOptions {
  bool use_cache = true;
  std::string cache_dir = default_cache_dir();
};

struct PipelineResult {
  ordered_json report;   // byte-stable for a fixed config
  ordered_json timings;  // per-stage milliseconds, kept out of the report
  ProblemConfig config;

  std::shared_ptr<const GridAbstraction> abstraction;  // null for finite configs
  std::shared_ptr<const FiniteSystem> finite;          // null while lazy
  ReachSpec spec;  // abstract-level reach spec
  ReachController controller;
  CoarseningResult coarse;
  ClosedLoopGraph graph;
  PathValue best_include, best_exclude;
  SpanningEnumeration family;
  PostFn post;

  bool have_finite() const { return finite != nullptr; }
  const FiniteSystem& system() const {
    if (!finite) throw DomainError("no explicit finite system (lazy abstraction)");
    return *finite;
  }
  const PathValue& best(WeightMode m) const {
    return m == WeightMode::kIncludeTarget ? best_include : best_exclude;
  }

  /* groups as cover elements, graph paths as sequences */
  SpanningSet group_family() const {
    SpanningSet fam;
    fam.elements = coarse.partition.groups;
    fam.sequences = family.sequences;
    return fam;
  }
  const std::vector<InputId>& group_inputs() const { return coarse.partition.group_input; }
};

namespace pipeline_detail {

inline ordered_json witness_labels(const std::vector<std::int32_t>& witness) {
  ordered_json arr = ordered_json::array();
  for (std::int32_t n : witness)
    arr.push_back(n == kTargetNode ? std::string("T") : "g" + std::to_string(n));
  return arr;
}

/* longest group path to the target, in steps */
inline std::size_t longest_path_steps(const ClosedLoopGraph& g) {
  AcyclicityReport ac = check_acyclic(g);
  std::vector<std::size_t> h(g.num_nodes(), 0);
  std::size_t best = 0;
  for (auto it = ac.topo_order.rbegin(); it != ac.topo_order.rend(); ++it) {
    auto i = static_cast<std::size_t>(*it);
    std::size_t v = g.to_target[i] ? 1 : 0;
    for (GroupId c : g.adj[i]) v = std::max(v, h[static_cast<std::size_t>(c)] + 1);
    h[i] = v;
    best = std::max(best, v);
  }
  return best;
}

inline std::uint64_t count_finite_transitions(const FiniteSystem& sys, const ReachSpec& spec) {
  std::uint64_t n = 0;
  for (StateId s : spec.q_states) {
    if (set_contains(spec.t_states, s)) continue;
    for (InputId u = 0; u < static_cast<InputId>(sys.num_inputs()); ++u)
      n += sys.post(s, u).size();
  }
  return n;
}

class StageClock {
 public:
  explicit StageClock(ordered_json& sink) : sink_(sink) {}
  void mark(const std::string& stage) {
    auto now = std::chrono::steady_clock::now();
    sink_[stage] = std::chrono::duration<double, std::milli>(now - last_).count();
    last_ = now;
  }

 private:
  ordered_json& sink_;
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

}  // namespace pipeline_detail

inline PipelineResult run_pipeline(const ProblemConfig& cfg, const PipelineOptions& opts = {}) {
  PipelineResult out;
  out.config = cfg;
  out.report["config_hash"] = hex64(fnv1a(cfg.source));
  pipeline_detail::StageClock clock(out.timings);

  /* ---- abstraction / system view ---- */
  ordered_json ab;
  if (cfg.finite) {
    out.finite = std::make_shared<FiniteSystem>(cfg.finite_system);
    out.spec = cfg.finite_spec;
    ab["mode"] = "finite";
    ab["q_cell_count"] = out.spec.q_states.size();
    ab["t_cell_count"] = out.spec.t_states.size();
    ab["transition_count"] = pipeline_detail::count_finite_transitions(*out.finite, out.spec);
  } else {
    out.abstraction = std::make_shared<const GridAbstraction>(build_abstraction(cfg));
    const GridAbstraction& abs = *out.abstraction;
    if (abs.materialized()) {
      /* aliasing share: the finite view lives inside the abstraction */
      out.finite = std::shared_ptr<const FiniteSystem>(out.abstraction,
                                                       &abs.materialized_system());
      out.spec = abs.materialized_spec();
    } else {
      out.spec.q_states = abs.q_cells();
      out.spec.t_states = abs.t_cells();
    }
    ab["mode"] = abs.mode() == GridAbstraction::Mode::kGrid ? "grid" : "regions";
    ab["cells"] = abs.num_abstract_states();
    ab["q_cell_count"] = abs.q_cells().size();
    ab["t_cell_count"] = abs.t_cells().size();
    ab["transition_count"] = abs.count_transitions();
    ab["inputs"] = abs.num_inputs();
    ab["separable"] = abs.separable();
    ab["materialized"] = abs.materialized();
    ab["geometry_hash"] = hex64(abs.geometry_hash());
  }
  if (out.finite) {
    const FiniteSystem& sys = *out.finite;
    out.post = [fs = out.finite](StateId s, InputId u) { return fs->post(s, u); };
    ab["states"] = sys.num_states();
  } else {
    out.post = [abs = out.abstraction](StateId s, InputId u) {
      PostResult pr = abs->post(s, u);
      if (pr.unsafe)
        throw SoundnessError("controlled cell leaves Q under its assigned input");
      return pr.cells;
    };
  }
  out.report["abstraction_stats"] = std::move(ab);
  clock.mark("abstraction_ms");

  /* ---- controller synthesis (cached on the abstraction geometry) ---- */
  SynthesisOptions so;
  so.record_candidates = cfg.coarsen_mode == CoarsenMode::kCover;
  std::string cache_state = "off";
  std::uint64_t cache_key = 0;
  bool cacheable = out.abstraction && opts.use_cache && !opts.cache_dir.empty();
  if (cacheable) {
    cache_key = out.abstraction->geometry_hash();
    if (so.record_candidates) cache_key = fnv1a("candidates", cache_key);
    cache_state = "miss";
    if (auto hit = load_controller_cache(opts.cache_dir, cache_key)) {
      /* materialized systems carry an extra sink state beyond the cells */
      const std::size_t n = out.finite ? out.finite->num_states()
                                       : out.abstraction->num_abstract_states();
      bool shape_ok = hit->assignment.size() == n && hit->value.size() == n &&
                      hit->num_inputs == out.abstraction->num_inputs() &&
                      (!so.record_candidates || hit->candidates.size() == hit->domain.size());
      if (shape_ok) {
        out.controller = std::move(*hit);
        cache_state = "hit";
      }
    }
  }
  if (cache_state != "hit") {
    out.controller = out.abstraction ? synthesize(*out.abstraction, so)
                                     : synthesize(*out.finite, out.spec, so);
    if (cacheable) save_controller_cache(opts.cache_dir, cache_key, out.controller);
  }
  SatisfiabilityReport sat = check_reachability_satisfiable(out.controller, out.spec);
  ordered_json cs;
  cs["domain_size"] = out.controller.domain.size();
  std::int64_t max_value = 0;
  for (StateId s : out.controller.domain)
    max_value = std::max<std::int64_t>(max_value, out.controller.value[static_cast<std::size_t>(s)]);
  cs["max_value"] = max_value;
  cs["sweeps"] = out.controller.sweeps;
  cs["satisfiable"] = sat.satisfiable;
  cs["uncovered"] = sat.uncovered.size();
  cs["cache"] = cache_state;
  out.report["controller_stats"] = std::move(cs);
  clock.mark("synthesis_ms");
  // a partial domain is a valid result: downstream stages cover the
  // controllable subset of Q, mirroring how a reach controller with
  // domain B \subsetneq Q still yields a spanning set over B
  if (out.controller.domain.empty())
    throw SynthesisError("reachability unsatisfiable: no state in Q\\T can be driven to T");

  /* ---- coarsening ---- */
  out.coarse = coarsen_with_fallback(out.controller, cfg.coarsen_mode, out.post,
                                     out.spec.t_states);
  ordered_json co;
  co["group_count"] = out.coarse.partition.num_groups();
  co["mode_requested"] = coarsen_mode_name(cfg.coarsen_mode);
  co["mode_used"] = coarsen_mode_name(out.coarse.partition.mode);
  co["fallback_triggered"] = out.coarse.partition.fallback_triggered;
  out.report["coarsening_stats"] = std::move(co);
  clock.mark("coarsening_ms");

  /* ---- entropy graph ---- */
  out.graph = build_graph(out.coarse.d_map);
  out.best_include = max_path_value(out.graph, WeightMode::kIncludeTarget);
  out.best_exclude = max_path_value(out.graph, WeightMode::kExcludeTarget);
  const PathValue& configured = out.best(cfg.weight_mode);
  ordered_json en;
  en["weight_mode"] = weight_mode_name(cfg.weight_mode);
  en["N_R_include_target"] = sig6(out.best_include.value);
  en["N_R_exclude_target"] = sig6(out.best_exclude.value);
  en["witness_path"] = pipeline_detail::witness_labels(configured.witness);
  en["witness_length"] = configured.length;
  en["node_count"] = out.graph.num_nodes();
  std::size_t edges = 0;
  for (std::size_t i = 0; i < out.graph.num_nodes(); ++i)
    edges += out.graph.adj[i].size() + (out.graph.to_target[i] ? 1 : 0);
  en["edge_count"] = edges;
  en["longest_path"] = pipeline_detail::longest_path_steps(out.graph);
  out.report["entropy"] = std::move(en);
  clock.mark("graph_ms");

  /* ---- explicit spanning family ---- */
  out.family = enumerate_spanning_set(out.graph, cfg.max_sequences);
  ordered_json sp;
  sp["sequences"] = out.family.sequences.size();
  sp["overflow"] = out.family.overflow;
  if (out.family.overflow) {
    sp["value"] = nullptr;
    sp["verified"] = "skipped";
  } else {
    SpanningSet fam = out.group_family();
    sp["value"] = sig6(spanning_value(fam).value);
    if (out.have_finite()) {
      VerifyReport vr = verify_spanning_set(*out.finite, out.spec, fam, out.group_inputs());
      sp["verified"] = vr.ok;
      if (!vr.ok) sp["verify_failure"] = vr.failure;
    } else {
      sp["verified"] = "skipped";
    }
  }
  out.report["spanning"] = std::move(sp);
  clock.mark("spanning_ms");

  /* ---- reference deltas ---- */
  if (!cfg.references.empty()) {
    ordered_json refs;
    for (const auto& [key, expected] : cfg.references) {
      double actual;
      if (key == "entropy") actual = out.best_include.value;
      else if (key == "groups") actual = static_cast<double>(out.coarse.partition.num_groups());
      else if (key == "cells")  // winning set: controlled cells plus target cells
        actual = static_cast<double>(out.controller.domain.size() + out.spec.t_states.size());
      else if (key == "controllable_cells")
        actual = static_cast<double>(out.controller.domain.size());
      else
        throw ConfigError("unknown reference key: " + key);
      ordered_json row;
      row["expected"] = sig6(expected);
      row["actual"] = sig6(actual);
      row["delta"] = sig6(actual - expected);
      refs[key] = std::move(row);
    }
    out.report["references"] = std::move(refs);
  }
  return out;
}

}  // namespace reach

#endif
