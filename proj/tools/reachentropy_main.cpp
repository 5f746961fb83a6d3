/* reach-entropy: reachability entropy toolchain driver.
 *
 * Subcommands: abstract, synthesize, entropy, simulate, oracle, check-frr,
 * report, export-graph.  JSON goes to --out (default stdout); timings stay
 * on stderr unless --timings embeds them.  Exit codes: 0 ok, 1 failed
 * check/stage, 2 internal error. */
#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "reach/coder.hpp"
#include "reach/frr.hpp"
#include "reach/oracle.hpp"
#include "reach/parallel.hpp"
#include "reach/pipeline.hpp"

namespace {

using reach::ordered_json;

struct GlobalArgs {
  unsigned threads = 0;
  bool no_cache = false;
  std::string coarsen;
  std::string out = "-";
  bool timings = false;
};

reach::ProblemConfig load_cfg(const std::string& path, const GlobalArgs& g) {
  reach::ProblemConfig cfg = reach::load_problem(path);
  if (!g.coarsen.empty()) cfg.coarsen_mode = reach::coarsen_mode_from_name(g.coarsen);
  return cfg;
}

reach::PipelineOptions pipe_opts(const GlobalArgs& g) {
  reach::PipelineOptions o;
  o.use_cache = !g.no_cache;
  return o;
}

void emit_text(const std::string& out, const std::string& text) {
  if (out.empty() || out == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(out, std::ios::binary);
  if (!f) throw reach::ConfigError("cannot open output file: " + out);
  f << text;
}

void emit_json(const GlobalArgs& g, const ordered_json& j) { emit_text(g.out, j.dump(2) + "\n"); }

ordered_json jnum(double v) {
  if (!std::isfinite(v)) return nullptr;
  return reach::sig6(v);
}

/* explicit system + spec view; keeps a backing abstraction alive */
struct FiniteView {
  std::shared_ptr<const reach::GridAbstraction> abs;
  std::shared_ptr<const reach::FiniteSystem> sys;
  reach::ReachSpec spec;
};

FiniteView finite_view(const reach::ProblemConfig& cfg) {
  FiniteView v;
  if (cfg.finite) {
    v.sys = std::make_shared<reach::FiniteSystem>(cfg.finite_system);
    v.spec = cfg.finite_spec;
    return v;
  }
  auto abs = std::make_shared<const reach::GridAbstraction>(reach::build_abstraction(cfg));
  if (!abs->materialized())
    throw reach::DomainError(
        "this command needs an explicit finite abstraction; raise "
        "[grid] materialize_limit or drop force_lazy");
  v.abs = abs;
  v.sys = std::shared_ptr<const reach::FiniteSystem>(abs, &abs->materialized_system());
  v.spec = abs->materialized_spec();
  return v;
}

ordered_json abstraction_block(const reach::GridAbstraction& abs) {
  ordered_json j;
  j["mode"] = abs.mode() == reach::GridAbstraction::Mode::kGrid ? "grid" : "regions";
  j["cells"] = abs.num_abstract_states();
  j["q_cell_count"] = abs.q_cells().size();
  j["t_cell_count"] = abs.t_cells().size();
  j["transition_count"] = abs.count_transitions();
  j["inputs"] = abs.num_inputs();
  j["separable"] = abs.separable();
  j["materialized"] = abs.materialized();
  j["geometry_hash"] = reach::hex64(abs.geometry_hash());
  return j;
}

int cmd_report(const GlobalArgs& g, const std::string& cfg_path) {
  reach::PipelineResult res = reach::run_pipeline(load_cfg(cfg_path, g), pipe_opts(g));
  ordered_json rep = res.report;
  if (g.timings) rep["timings_ms"] = res.timings;
  else std::cerr << "timings_ms " << res.timings.dump() << "\n";
  emit_json(g, rep);
  return 0;
}

int cmd_entropy(const GlobalArgs& g, const std::string& cfg_path) {
  reach::PipelineResult res = reach::run_pipeline(load_cfg(cfg_path, g), pipe_opts(g));
  const reach::PathValue& best = res.best(res.config.weight_mode);
  ordered_json j;
  j["N_R"] = jnum(best.value);
  j["weight_mode"] = reach::weight_mode_name(res.config.weight_mode);
  j["witness_path"] = res.report["entropy"]["witness_path"];
  j["node_count"] = res.report["entropy"]["node_count"];
  j["edge_count"] = res.report["entropy"]["edge_count"];
  j["longest_path"] = res.report["entropy"]["longest_path"];
  emit_json(g, j);
  return 0;
}

int cmd_abstract(const GlobalArgs& g, const std::string& cfg_path, std::size_t check_samples,
                 std::uint64_t seed) {
  reach::ProblemConfig cfg = load_cfg(cfg_path, g);
  ordered_json j;
  if (cfg.finite) {
    j["mode"] = "finite";
    j["states"] = cfg.finite_system.num_states();
    j["inputs"] = cfg.finite_system.num_inputs();
    j["q_cell_count"] = cfg.finite_spec.q_states.size();
    j["t_cell_count"] = cfg.finite_spec.t_states.size();
    emit_json(g, j);
    return 0;
  }
  reach::GridAbstraction abs = reach::build_abstraction(cfg);
  j = abstraction_block(abs);
  if (check_samples > 0) {
    std::mt19937_64 rng(seed);
    std::size_t bad = abs.sample_soundness(rng, check_samples);
    ordered_json sj;
    sj["samples"] = check_samples;
    sj["violations"] = bad;
    j["soundness"] = std::move(sj);
    emit_json(g, j);
    return bad == 0 ? 0 : 1;
  }
  emit_json(g, j);
  return 0;
}

int cmd_synthesize(const GlobalArgs& g, const std::string& cfg_path,
                   const std::string& export_path) {
  reach::ProblemConfig cfg = load_cfg(cfg_path, g);
  ordered_json j;
  reach::ReachController ctl;
  reach::ReachSpec spec;
  std::optional<reach::GridAbstraction> abs;
  if (cfg.finite) {
    spec = cfg.finite_spec;
    ctl = reach::synthesize(cfg.finite_system, spec);
  } else {
    abs.emplace(reach::build_abstraction(cfg));
    spec.q_states = abs->q_cells();
    spec.t_states = abs->t_cells();
    ctl = reach::synthesize(*abs);
  }
  reach::SatisfiabilityReport sat = reach::check_reachability_satisfiable(ctl, spec);
  j["domain_size"] = ctl.domain.size();
  std::int64_t max_value = 0;
  for (reach::StateId s : ctl.domain)
    max_value = std::max<std::int64_t>(max_value, ctl.value[static_cast<std::size_t>(s)]);
  j["max_value"] = max_value;
  j["sweeps"] = ctl.sweeps;
  j["satisfiable"] = sat.satisfiable;
  j["uncovered"] = sat.uncovered.size();
  if (!export_path.empty()) {
    std::ofstream f(export_path, std::ios::binary);
    if (!f) throw reach::ConfigError("cannot open export file: " + export_path);
    if (abs) reach::export_controller_csv(f, ctl, *abs);
    else reach::export_controller_csv(f, ctl, cfg.finite_system);
    j["exported"] = export_path;
  }
  emit_json(g, j);
  return ctl.domain.empty() && !sat.satisfiable ? 1 : 0;
}

int cmd_export_graph(const GlobalArgs& g, const std::string& cfg_path) {
  reach::PipelineResult res = reach::run_pipeline(load_cfg(cfg_path, g), pipe_opts(g));
  std::ostringstream ss;
  reach::export_dot(ss, res.graph);
  emit_text(g.out, ss.str());
  return 0;
}

int cmd_oracle(const GlobalArgs& g, const std::string& cfg_path) {
  reach::ProblemConfig cfg = load_cfg(cfg_path, g);
  FiniteView v = finite_view(cfg);
  reach::OracleResult r = reach::exact_entropy(*v.sys, v.spec, cfg.oracle);
  ordered_json j;
  j["entropy"] = jnum(r.entropy);
  j["finite"] = std::isfinite(r.entropy);
  j["trivial"] = r.trivial;
  j["trivial_input"] =
      r.trivial_input >= 0 ? ordered_json(v.sys->input_name(r.trivial_input)) : nullptr;
  j["from_seed"] = r.from_seed;
  j["search_truncated"] = r.search_truncated;
  j["max_cover_size"] = r.max_cover_size;
  j["max_len"] = r.max_len;
  j["configs_evaluated"] = r.configs_evaluated;
  if (std::isfinite(r.entropy)) {
    ordered_json w;
    ordered_json els = ordered_json::array();
    for (const reach::StateSet& el : r.witness_family.elements) {
      ordered_json names = ordered_json::array();
      for (reach::StateId s : el) names.push_back(v.sys->state_name(s));
      els.push_back(std::move(names));
    }
    w["elements"] = std::move(els);
    ordered_json ins = ordered_json::array();
    for (reach::InputId u : r.witness_inputs) ins.push_back(v.sys->input_name(u));
    w["inputs"] = std::move(ins);
    ordered_json seqs = ordered_json::array();
    for (const auto& seq : r.witness_family.sequences) {
      ordered_json row = ordered_json::array();
      for (std::int32_t e : seq)
        row.push_back(e == reach::kTargetNode ? std::string("T") : "e" + std::to_string(e));
      seqs.push_back(std::move(row));
    }
    w["sequences"] = std::move(seqs);
    j["witness"] = std::move(w);
  }
  emit_json(g, j);
  return 0;
}

/* which abstract state holds x; region mode scans target rects then regions */
reach::StateId locate_state(const reach::GridAbstraction& abs, const reach::Vec& x) {
  if (abs.mode() == reach::GridAbstraction::Mode::kGrid)
    return static_cast<reach::StateId>(abs.grid().quantize(x));
  for (const reach::Box& t : abs.t_rects())
    if (t.contains(x)) return abs.t_cells().front();
  for (std::size_t r = 0; r < abs.regions().size(); ++r)
    if (abs.regions()[r].contains(x)) return static_cast<reach::StateId>(r);
  throw reach::DomainError("simulate: state left the declared regions");
}

int cmd_simulate(const GlobalArgs& g, const std::string& cfg_path,
                 const std::string& trajectory_path) {
  reach::PipelineResult res = reach::run_pipeline(load_cfg(cfg_path, g), pipe_opts(g));
  const reach::ProblemConfig& cfg = res.config;
  ordered_json j;

  if (res.family.overflow) {
    j["R_H"] = nullptr;
    j["note"] = "spanning family overflow; raise [entropy] max_sequences";
  } else if (!res.have_finite()) {
    j["R_H"] = nullptr;
    j["note"] = "lazy abstraction has no explicit system for the coder run";
  } else {
    reach::CoderController h =
        reach::build_coder_controller(res.group_family(), res.group_inputs());
    reach::SymbolLog log = reach::enumerate_symbol_sequences(res.system(), res.spec, h);
    j["R_H"] = jnum(reach::transmission_rate(log));
    j["num_sequences"] = log.z_hat.size();
    std::size_t max_len = 0;
    for (const auto& z : log.z_hat) max_len = std::max(max_len, z.size() - 1);
    j["max_sequence_length"] = max_len;
    j["truncated"] = log.truncated;
    ordered_json zs = ordered_json::array();
    for (const auto& z : log.z_hat) {
      ordered_json row = ordered_json::array();
      for (std::int32_t sym : z)
        row.push_back(sym == reach::kTargetNode ? std::string("s") : "e" + std::to_string(sym));
      zs.push_back(std::move(row));
    }
    j["z_hat"] = std::move(zs);
  }

  if (res.abstraction && cfg.has_simulate && !cfg.x0.empty()) {
    const reach::GridAbstraction& abs = *res.abstraction;
    const reach::ContinuousSystem& sys = abs.system();
    std::ostringstream csv;
    csv << "step";
    for (std::size_t k = 0; k < cfg.x0.size(); ++k) csv << ",x" << k;
    csv << ",input,cell,group\n";
    reach::Vec x = cfg.x0;
    bool reached = false;
    std::size_t steps_taken = 0;
    reach::StateId cell = -1;
    for (std::size_t k = 0; k <= cfg.sim_steps; ++k) {
      cell = locate_state(abs, x);
      if (reach::set_contains(abs.t_cells(), cell)) {
        csv << k;
        for (double xi : x) csv << ',' << xi;
        csv << ",,," << "\n";
        reached = true;
        break;
      }
      if (k == cfg.sim_steps) break;
      if (!res.controller.controls(cell))
        throw reach::SynthesisError("simulate: trajectory entered an uncontrolled cell");
      reach::InputId u = res.controller.assignment[static_cast<std::size_t>(cell)];
      csv << k;
      for (double xi : x) csv << ',' << xi;
      csv << ',' << (u < static_cast<reach::InputId>(sys.input_labels.size())
                         ? sys.input_labels[static_cast<std::size_t>(u)]
                         : "u" + std::to_string(u))
          << ',' << cell << ',' << res.coarse.partition.group_of[static_cast<std::size_t>(cell)]
          << '\n';
      x = sys.model->eval(x, sys.inputs[static_cast<std::size_t>(u)]);
      ++steps_taken;
    }
    ordered_json tj;
    tj["steps_taken"] = steps_taken;
    tj["reached_target"] = reached;
    tj["final_cell"] = cell;
    if (!trajectory_path.empty()) {
      std::ofstream f(trajectory_path, std::ios::binary);
      if (!f) throw reach::ConfigError("cannot open trajectory file: " + trajectory_path);
      f << csv.str();
      tj["csv"] = trajectory_path;
    }
    j["trajectory"] = std::move(tj);
  }
  emit_json(g, j);
  return 0;
}

int cmd_check_frr(const GlobalArgs& g, const std::string& cfg1_path, const std::string& cfg2_path,
                  const std::string& relation_path, bool ordering) {
  reach::ProblemConfig cfg1 = load_cfg(cfg1_path, g);
  reach::ProblemConfig cfg2 = load_cfg(cfg2_path, g);
  FiniteView v1 = finite_view(cfg1);
  FiniteView v2 = finite_view(cfg2);
  reach::RefinementWitness w = reach::load_relation(relation_path, *v1.sys, *v2.sys);
  reach::FrrCheck fc = reach::check_frr(*v1.sys, *v2.sys, w);
  reach::PreconditionCheck pc =
      reach::check_order_preconditions(*v1.sys, v1.spec, *v2.sys, v2.spec, w);
  ordered_json j;
  ordered_json fj;
  fj["ok"] = fc.ok;
  if (!fc.ok) {
    fj["failure"] = fc.failure;
    if (fc.x1 >= 0) fj["x1"] = v1.sys->state_name(fc.x1);
    if (fc.x2 >= 0) fj["x2"] = v2.sys->state_name(fc.x2);
    if (fc.u2 >= 0) fj["u2"] = v2.sys->input_name(fc.u2);
  }
  j["frr"] = std::move(fj);
  ordered_json pj;
  pj["ok"] = pc.ok;
  if (!pc.ok) pj["failure"] = pc.failure;
  j["preconditions"] = std::move(pj);
  bool all_ok = fc.ok && pc.ok;
  if (ordering && all_ok) {
    reach::OrderingReport rep = reach::check_entropy_ordering(*v1.sys, v1.spec, *v2.sys, v2.spec,
                                                              w, cfg1.oracle, cfg2.oracle);
    ordered_json oj;
    oj["h1"] = jnum(rep.h1);
    oj["h2"] = jnum(rep.h2);
    oj["transported_value"] = jnum(rep.transported_value);
    oj["transported_valid"] = rep.transported_valid;
    oj["ordered"] = rep.ordered;
    oj["truncated"] = rep.truncated;
    if (!rep.transport_failure.empty()) oj["transport_failure"] = rep.transport_failure;
    j["ordering"] = std::move(oj);
    all_ok = all_ok && rep.ordered;
  }
  emit_json(g, j);
  return all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"reachability entropy toolchain"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalArgs g;
  app.add_option("--threads", g.threads, "worker thread cap (0 = hardware)");
  app.add_flag("--no-cache", g.no_cache, "skip the controller cache");
  app.add_option("--coarsen", g.coarsen, "override coarsening mode")
      ->check(CLI::IsMember({"input", "input-value", "cover", "none"}));
  app.add_option("--out", g.out, "output path, - for stdout");
  app.add_flag("--timings", g.timings, "embed wall-clock timings in the report JSON");

  int code = 0;
  std::string cfg_path, cfg2_path, relation_path, export_path, trajectory_path;
  std::size_t check_samples = 0;
  std::uint64_t sample_seed = 0;
  bool ordering = false;

  auto add_config = [&](CLI::App* sub) {
    sub->add_option("config", cfg_path, "problem config (TOML)")->required();
  };
  /* subcommand callbacks fire inside parse(), so apply globals here */
  auto run = [&](auto fn) {
    if (g.threads > 0) reach::set_thread_cap(g.threads);
    code = fn();
  };

  CLI::App* c_report = app.add_subcommand("report", "full pipeline report");
  add_config(c_report);
  c_report->callback([&] { run([&] { return cmd_report(g, cfg_path); }); });

  CLI::App* c_entropy = app.add_subcommand("entropy", "entropy bound N(R)");
  add_config(c_entropy);
  c_entropy->callback([&] { run([&] { return cmd_entropy(g, cfg_path); }); });

  CLI::App* c_abstract = app.add_subcommand("abstract", "abstraction statistics");
  add_config(c_abstract);
  c_abstract->add_option("--check", check_samples, "soundness sample count");
  c_abstract->add_option("--seed", sample_seed, "soundness sampling seed");
  c_abstract->callback([&] { run([&] { return cmd_abstract(g, cfg_path, check_samples, sample_seed); }); });

  CLI::App* c_synth = app.add_subcommand("synthesize", "reach controller synthesis");
  add_config(c_synth);
  c_synth->add_option("--export", export_path, "write the controller as CSV");
  c_synth->callback([&] { run([&] { return cmd_synthesize(g, cfg_path, export_path); }); });

  CLI::App* c_graph = app.add_subcommand("export-graph", "closed-loop group graph as DOT");
  add_config(c_graph);
  c_graph->callback([&] { run([&] { return cmd_export_graph(g, cfg_path); }); });

  CLI::App* c_oracle = app.add_subcommand("oracle", "exhaustive entropy on small systems");
  add_config(c_oracle);
  c_oracle->callback([&] { run([&] { return cmd_oracle(g, cfg_path); }); });

  CLI::App* c_sim = app.add_subcommand("simulate", "closed-loop coder run");
  add_config(c_sim);
  c_sim->add_option("--trajectory", trajectory_path, "write the concrete trajectory as CSV");
  c_sim->callback([&] { run([&] { return cmd_simulate(g, cfg_path, trajectory_path); }); });

  CLI::App* c_frr = app.add_subcommand("check-frr", "refinement relation checks");
  c_frr->add_option("config1", cfg_path, "refined problem config")->required();
  c_frr->add_option("config2", cfg2_path, "abstract problem config")->required();
  c_frr->add_option("--relation", relation_path, "relation file (TOML)")->required();
  c_frr->add_flag("--ordering", ordering, "also compare oracle entropies");
  c_frr->callback(
      [&] { run([&] { return cmd_check_frr(g, cfg_path, cfg2_path, relation_path, ordering); }); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return code;
}
