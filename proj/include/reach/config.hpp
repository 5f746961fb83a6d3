/* config.hpp: problem files in a small TOML subset.
 *
 * Supported syntax: [section] headers, key = value pairs, strings, numbers,
 * booleans, nested arrays (newlines allowed inside brackets), # comments.
 * Sections map onto one reach-while-stay problem: system, spec, grid or
 * regions, inputs, entropy settings, optional simulation, oracle caps and
 * reference values for report deltas. */
#ifndef REACH_CONFIG_HPP_
#define REACH_CONFIG_HPP_

#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "reach/abstraction.hpp"
#include "reach/coarsening.hpp"
#include "reach/core.hpp"
#include "reach/entropy_graph.hpp"
#include "reach/finite_system.hpp"
#include "reach/frr.hpp"
#include "reach/models.hpp"
#include "reach/oracle.hpp"

namespace reach {

struct ConfigValue {
  enum class Kind { kString, kNumber, kBool, kArray };
  Kind kind = Kind::kNumber;
  std::string str;
  double num = 0.0;
  bool flag = false;
  std::vector<ConfigValue> items;
};

using ConfigTable = std::map<std::string, ConfigValue>;

struct ConfigDoc {
  std::string source;
  std::map<std::string, ConfigTable> sections;

  bool has(const std::string& sec) const { return sections.count(sec) != 0; }
  bool has(const std::string& sec, const std::string& key) const {
    auto it = sections.find(sec);
    return it != sections.end() && it->second.count(key) != 0;
  }
  const ConfigValue& at(const std::string& sec, const std::string& key) const {
    auto it = sections.find(sec);
    if (it == sections.end() || !it->second.count(key))
      throw ConfigError(source + ": missing key " + sec + "." + key);
    return it->second.at(key);
  }
};

namespace config_detail {

struct Parser {
  const std::string& text;
  std::string source;
  std::size_t pos = 0;
  std::size_t line = 1;

  [[noreturn]] void fail(const std::string& why) const {
    throw ConfigError(source + ":" + std::to_string(line) + ": " + why);
  }
  bool eof() const { return pos >= text.size(); }
  char peek() const { return text[pos]; }
  char take() {
    char c = text[pos++];
    if (c == '\n') ++line;
    return c;
  }
  void skip_ws(bool newlines) {
    while (!eof()) {
      char c = peek();
      if (c == '#') {
        while (!eof() && peek() != '\n') take();
      } else if (c == ' ' || c == '\t' || c == '\r' || (newlines && c == '\n')) {
        take();
      } else {
        break;
      }
    }
  }
  static bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
  }
  std::string ident() {
    std::string s;
    while (!eof() && ident_char(peek())) s.push_back(take());
    if (s.empty()) fail("expected an identifier");
    return s;
  }
  ConfigValue value() {
    skip_ws(false);
    if (eof()) fail("expected a value");
    char c = peek();
    ConfigValue v;
    if (c == '"') {
      take();
      v.kind = ConfigValue::Kind::kString;
      while (true) {
        if (eof()) fail("unterminated string");
        char d = take();
        if (d == '"') break;
        if (d == '\\') {
          if (eof()) fail("unterminated escape");
          char e = take();
          switch (e) {
            case 'n': v.str.push_back('\n'); break;
            case 't': v.str.push_back('\t'); break;
            case '"': v.str.push_back('"'); break;
            case '\\': v.str.push_back('\\'); break;
            default: fail("unsupported escape");
          }
        } else {
          v.str.push_back(d);
        }
      }
      return v;
    }
    if (c == '[') {
      take();
      v.kind = ConfigValue::Kind::kArray;
      skip_ws(true);
      while (!eof() && peek() != ']') {
        v.items.push_back(value());
        skip_ws(true);
        if (!eof() && peek() == ',') {
          take();
          skip_ws(true);
        }
      }
      if (eof()) fail("unterminated array");
      take();
      return v;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::string word = ident();
      if (word == "true" || word == "false") {
        v.kind = ConfigValue::Kind::kBool;
        v.flag = word == "true";
        return v;
      }
      fail("unquoted value: " + word);
    }
    /* number */
    std::string num;
    while (!eof() && (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '+' ||
                      peek() == '-' || peek() == '.' || peek() == 'e' || peek() == 'E' ||
                      peek() == '_'))
      if (char d = take(); d != '_') num.push_back(d);
    try {
      std::size_t used = 0;
      v.num = std::stod(num, &used);
      if (used != num.size()) fail("malformed number: " + num);
    } catch (const std::exception&) {
      fail("malformed number: " + num);
    }
    v.kind = ConfigValue::Kind::kNumber;
    v.str = num;
    return v;
  }
};

}  // namespace config_detail

inline ConfigDoc parse_config_text(const std::string& text, const std::string& source) {
  config_detail::Parser p{text, source};
  ConfigDoc doc;
  doc.source = source;
  std::string section;
  while (true) {
    p.skip_ws(true);
    if (p.eof()) break;
    if (p.peek() == '[') {
      p.take();
      section = p.ident();
      p.skip_ws(false);
      if (p.eof() || p.take() != ']') p.fail("expected ] after section name");
      doc.sections[section];
      continue;
    }
    std::string key = p.ident();
    p.skip_ws(false);
    if (p.eof() || p.take() != '=') p.fail("expected = after key " + key);
    ConfigValue v = p.value();
    p.skip_ws(false);
    if (!p.eof() && p.peek() != '\n') p.fail("trailing characters after value of " + key);
    if (section.empty()) p.fail("key " + key + " outside any section");
    if (!doc.sections[section].emplace(key, std::move(v)).second)
      p.fail("duplicate key " + section + "." + key);
  }
  return doc;
}

inline ConfigDoc load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

/* typed accessors */
inline double cfg_number(const ConfigDoc& d, const std::string& sec, const std::string& key) {
  const ConfigValue& v = d.at(sec, key);
  if (v.kind != ConfigValue::Kind::kNumber)
    throw ConfigError(d.source + ": " + sec + "." + key + " must be a number");
  return v.num;
}
inline double cfg_number(const ConfigDoc& d, const std::string& sec, const std::string& key,
                         double fallback) {
  return d.has(sec, key) ? cfg_number(d, sec, key) : fallback;
}
inline std::size_t cfg_count(const ConfigDoc& d, const std::string& sec, const std::string& key,
                             std::size_t fallback) {
  if (!d.has(sec, key)) return fallback;
  double x = cfg_number(d, sec, key);
  if (x < 0 || x != std::floor(x))
    throw ConfigError(d.source + ": " + sec + "." + key + " must be a nonnegative integer");
  return static_cast<std::size_t>(x);
}
inline std::string cfg_string(const ConfigDoc& d, const std::string& sec, const std::string& key) {
  const ConfigValue& v = d.at(sec, key);
  if (v.kind != ConfigValue::Kind::kString)
    throw ConfigError(d.source + ": " + sec + "." + key + " must be a string");
  return v.str;
}
inline std::string cfg_string(const ConfigDoc& d, const std::string& sec, const std::string& key,
                              const std::string& fallback) {
  return d.has(sec, key) ? cfg_string(d, sec, key) : fallback;
}
inline bool cfg_bool(const ConfigDoc& d, const std::string& sec, const std::string& key,
                     bool fallback) {
  if (!d.has(sec, key)) return fallback;
  const ConfigValue& v = d.at(sec, key);
  if (v.kind != ConfigValue::Kind::kBool)
    throw ConfigError(d.source + ": " + sec + "." + key + " must be true or false");
  return v.flag;
}
inline Vec cfg_vec(const ConfigDoc& d, const std::string& sec, const std::string& key) {
  const ConfigValue& v = d.at(sec, key);
  if (v.kind != ConfigValue::Kind::kArray)
    throw ConfigError(d.source + ": " + sec + "." + key + " must be an array of numbers");
  Vec out;
  for (const ConfigValue& e : v.items) {
    if (e.kind != ConfigValue::Kind::kNumber)
      throw ConfigError(d.source + ": " + sec + "." + key + " must hold numbers only");
    out.push_back(e.num);
  }
  return out;
}
inline std::vector<std::string> cfg_strings(const ConfigDoc& d, const std::string& sec,
                                            const std::string& key) {
  const ConfigValue& v = d.at(sec, key);
  if (v.kind != ConfigValue::Kind::kArray)
    throw ConfigError(d.source + ": " + sec + "." + key + " must be an array of strings");
  std::vector<std::string> out;
  for (const ConfigValue& e : v.items) {
    if (e.kind != ConfigValue::Kind::kString)
      throw ConfigError(d.source + ": " + sec + "." + key + " must hold strings only");
    out.push_back(e.str);
  }
  return out;
}

namespace config_detail {

inline Box rect_from(const ConfigDoc& d, const std::string& where, const ConfigValue& v) {
  Box b;
  for (const ConfigValue& pair : v.items) {
    if (pair.kind != ConfigValue::Kind::kArray || pair.items.size() != 2 ||
        pair.items[0].kind != ConfigValue::Kind::kNumber ||
        pair.items[1].kind != ConfigValue::Kind::kNumber)
      throw ConfigError(d.source + ": " + where + " expects [lo, hi] pairs per axis");
    b.axes.push_back({pair.items[0].num, pair.items[1].num});
    if (b.axes.back().lo > b.axes.back().hi)
      throw ConfigError(d.source + ": " + where + " has lo > hi");
  }
  if (b.axes.empty()) throw ConfigError(d.source + ": " + where + " is empty");
  return b;
}

}  // namespace config_detail

/* one rect ([[lo,hi],...]) or a list of rects ([[[lo,hi],...],...]) */
inline std::vector<Box> cfg_rects(const ConfigDoc& d, const std::string& sec,
                                  const std::string& key) {
  const ConfigValue& v = d.at(sec, key);
  const std::string where = sec + "." + key;
  if (v.kind != ConfigValue::Kind::kArray || v.items.empty())
    throw ConfigError(d.source + ": " + where + " must be a rect or a list of rects");
  const ConfigValue& head = v.items.front();
  if (head.kind == ConfigValue::Kind::kArray && !head.items.empty() &&
      head.items.front().kind == ConfigValue::Kind::kNumber)
    return {config_detail::rect_from(d, where, v)};
  std::vector<Box> out;
  for (const ConfigValue& r : v.items) out.push_back(config_detail::rect_from(d, where, r));
  return out;
}

struct ProblemConfig {
  std::string source;
  std::string system_type;

  bool finite = false;
  FiniteSystem finite_system;
  ReachSpec finite_spec;

  ContinuousSystem continuous;
  std::vector<Box> q_rects, t_rects;
  Box domain;  // grid extent; hull of Q unless given explicitly
  Vec state_eta;
  bool region_mode = false;
  std::vector<Box> regions;
  AbstractionOptions abstraction;

  WeightMode weight_mode = WeightMode::kIncludeTarget;
  CoarsenMode coarsen_mode = CoarsenMode::kInput;
  std::size_t max_sequences = 4096;

  bool has_simulate = false;
  Vec x0;
  std::size_t sim_steps = 32;
  std::uint64_t sim_seed = 1;

  OracleOptions oracle;
  std::map<std::string, double> references;
};

namespace config_detail {

inline std::shared_ptr<const DynamicsModel> make_model(const ConfigDoc& d,
                                                       const std::string& type) {
  if (type == "room") {
    RoomParams p;
    p.rooms = static_cast<int>(cfg_number(d, "system", "rooms", p.rooms));
    p.alpha = cfg_number(d, "system", "alpha", p.alpha);
    p.beta = cfg_number(d, "system", "beta", p.beta);
    p.gamma = cfg_number(d, "system", "gamma", p.gamma);
    p.t_outside = cfg_number(d, "system", "t_outside", p.t_outside);
    p.t_heater = cfg_number(d, "system", "t_heater", p.t_heater);
    if (p.rooms < 1) throw ConfigError(d.source + ": system.rooms must be positive");
    return std::make_shared<RoomModel>(p);
  }
  if (type == "scalar_linear") return std::make_shared<ScalarLinearModel>();
  if (type == "affine") {
    AffineParams p;
    const ConfigValue& a = d.at("system", "a");
    for (const ConfigValue& row : a.items) {
      Vec r;
      for (const ConfigValue& e : row.items) r.push_back(e.num);
      p.A.push_back(std::move(r));
    }
    const ConfigValue& b = d.at("system", "b");
    for (const ConfigValue& row : b.items) {
      Vec r;
      for (const ConfigValue& e : row.items) r.push_back(e.num);
      p.B.push_back(std::move(r));
    }
    p.c = cfg_vec(d, "system", "c");
    return std::make_shared<AffineModel>(p);
  }
  throw ConfigError(d.source + ": unknown system.type \"" + type + "\"");
}

inline void load_finite(const ConfigDoc& d, ProblemConfig& cfg) {
  std::vector<std::string> states = cfg_strings(d, "system", "states");
  std::vector<std::string> inputs = cfg_strings(d, "system", "inputs");
  cfg.finite_system = FiniteSystem(states, inputs);
  for (const std::string& t : cfg_strings(d, "system", "transitions")) {
    std::istringstream ss(t);
    std::string src, in, dst;
    if (!(ss >> src >> in >> dst))
      throw ConfigError(d.source + ": transition \"" + t + "\" needs three tokens");
    std::string extra;
    if (ss >> extra) throw ConfigError(d.source + ": transition \"" + t + "\" has extra tokens");
    cfg.finite_system.add_transition(cfg.finite_system.state_id(src),
                                     cfg.finite_system.input_id(in),
                                     cfg.finite_system.state_id(dst));
  }
  for (const std::string& s : cfg_strings(d, "spec", "q"))
    set_insert(cfg.finite_spec.q_states, cfg.finite_system.state_id(s));
  for (const std::string& s : cfg_strings(d, "spec", "t"))
    set_insert(cfg.finite_spec.t_states, cfg.finite_system.state_id(s));
  validate_spec(cfg.finite_system, cfg.finite_spec);
}

inline void load_continuous(const ConfigDoc& d, ProblemConfig& cfg) {
  cfg.continuous.model = make_model(d, cfg.system_type);
  cfg.q_rects = cfg_rects(d, "spec", "q");
  cfg.t_rects = cfg_rects(d, "spec", "t");
  const std::size_t dim = cfg.continuous.model->state_dim();
  for (const Box& r : cfg.q_rects)
    if (r.dim() != dim) throw ConfigError(d.source + ": spec.q dimension mismatch");
  for (const Box& r : cfg.t_rects)
    if (r.dim() != dim) throw ConfigError(d.source + ": spec.t dimension mismatch");

  if (d.has("grid", "regions")) {
    cfg.region_mode = true;
    cfg.regions = cfg_rects(d, "grid", "regions");
  } else {
    cfg.state_eta = cfg_vec(d, "grid", "eta");
    if (cfg.state_eta.size() != dim)
      throw ConfigError(d.source + ": grid.eta dimension mismatch");
    if (d.has("grid", "domain")) {
      auto rects = cfg_rects(d, "grid", "domain");
      if (rects.size() != 1) throw ConfigError(d.source + ": grid.domain must be one rect");
      cfg.domain = rects.front();
    } else {
      /* hull of the declared Q rects */
      cfg.domain = cfg.q_rects.front();
      for (const Box& r : cfg.q_rects)
        for (std::size_t k = 0; k < dim; ++k) {
          cfg.domain.axes[k].lo = std::min(cfg.domain.axes[k].lo, r.axes[k].lo);
          cfg.domain.axes[k].hi = std::max(cfg.domain.axes[k].hi, r.axes[k].hi);
        }
    }
  }
  cfg.abstraction.materialize_limit =
      cfg_count(d, "grid", "materialize_limit", cfg.abstraction.materialize_limit);
  cfg.abstraction.force_lazy = cfg_bool(d, "grid", "force_lazy", false);

  const std::size_t idim = cfg.continuous.model->input_dim();
  if (d.has("inputs", "values")) {
    const ConfigValue& v = d.at("inputs", "values");
    for (const ConfigValue& e : v.items) {
      Vec u;
      if (e.kind == ConfigValue::Kind::kNumber) {
        u.push_back(e.num);
      } else if (e.kind == ConfigValue::Kind::kArray) {
        for (const ConfigValue& c : e.items) u.push_back(c.num);
      } else {
        throw ConfigError(d.source + ": inputs.values must hold vectors");
      }
      if (u.size() != idim) throw ConfigError(d.source + ": inputs.values dimension mismatch");
      cfg.continuous.inputs.push_back(std::move(u));
    }
  } else {
    Vec lo = cfg_vec(d, "inputs", "lo");
    Vec hi = cfg_vec(d, "inputs", "hi");
    Vec eta = cfg_vec(d, "inputs", "eta");
    if (lo.size() != idim || hi.size() != idim || eta.size() != idim)
      throw ConfigError(d.source + ": inputs.lo/hi/eta dimension mismatch");
    Box bounds;
    for (std::size_t k = 0; k < idim; ++k) bounds.axes.push_back({lo[k], hi[k]});
    cfg.continuous.inputs = grid_input_values(bounds, eta);
  }
  if (cfg.continuous.inputs.empty()) throw ConfigError(d.source + ": empty input set");
  if (d.has("inputs", "labels")) {
    cfg.continuous.input_labels = cfg_strings(d, "inputs", "labels");
    if (cfg.continuous.input_labels.size() != cfg.continuous.inputs.size())
      throw ConfigError(d.source + ": inputs.labels size mismatch");
  }
}

}  // namespace config_detail

inline ProblemConfig problem_from_doc(const ConfigDoc& d) {
  ProblemConfig cfg;
  cfg.source = d.source;
  cfg.system_type = cfg_string(d, "system", "type");
  cfg.finite = cfg.system_type == "finite";
  if (cfg.finite) config_detail::load_finite(d, cfg);
  else config_detail::load_continuous(d, cfg);

  {
    std::string wm = cfg_string(d, "entropy", "weight_mode", "include-target");
    if (wm != "include-target" && wm != "exclude-target")
      throw ConfigError(d.source + ": entropy.weight_mode must be include-target or exclude-target");
    cfg.weight_mode = wm == "include-target" ? WeightMode::kIncludeTarget
                                             : WeightMode::kExcludeTarget;
  }
  cfg.coarsen_mode = coarsen_mode_from_name(cfg_string(d, "entropy", "coarsen", "input"));
  cfg.max_sequences = cfg_count(d, "entropy", "max_sequences", cfg.max_sequences);

  if (d.has("simulate")) {
    cfg.has_simulate = true;
    if (d.has("simulate", "x0")) cfg.x0 = cfg_vec(d, "simulate", "x0");
    cfg.sim_steps = cfg_count(d, "simulate", "steps", cfg.sim_steps);
    cfg.sim_seed = cfg_count(d, "simulate", "seed", 1);
  }

  cfg.oracle.max_cover_size = cfg_count(d, "oracle", "max_cover_size", 0);
  cfg.oracle.max_len = cfg_count(d, "oracle", "max_len", 0);
  cfg.oracle.controller_limit = cfg_count(d, "oracle", "controller_limit", cfg.oracle.controller_limit);
  cfg.oracle.state_cap = cfg_count(d, "oracle", "state_cap", cfg.oracle.state_cap);
  cfg.oracle.config_budget = cfg_count(d, "oracle", "config_budget", cfg.oracle.config_budget);
  cfg.oracle.enable_seeds = cfg_bool(d, "oracle", "enable_seeds", true);

  if (d.has("references"))
    for (const auto& [key, val] : d.sections.at("references")) {
      if (val.kind != ConfigValue::Kind::kNumber)
        throw ConfigError(d.source + ": references." + key + " must be a number");
      cfg.references[key] = val.num;
    }
  return cfg;
}

inline ProblemConfig load_problem(const std::string& path) {
  return problem_from_doc(load_config_file(path));
}

inline GridAbstraction build_abstraction(const ProblemConfig& cfg) {
  if (cfg.finite) throw ConfigError(cfg.source + ": finite problems have no abstraction");
  if (cfg.region_mode)
    return GridAbstraction(cfg.continuous, cfg.regions, cfg.q_rects, cfg.t_rects, cfg.abstraction);
  return GridAbstraction(cfg.continuous, Grid(cfg.domain, cfg.state_eta), cfg.q_rects, cfg.t_rects,
                         cfg.abstraction);
}

/* refinement witness between two finite problems, by name */
inline RefinementWitness load_relation(const std::string& path, const FiniteSystem& sys1,
                                       const FiniteSystem& sys2) {
  ConfigDoc d = load_config_file(path);
  RefinementWitness w;
  for (const std::string& p : cfg_strings(d, "relation", "pairs")) {
    std::istringstream ss(p);
    std::string x1, x2, extra;
    if (!(ss >> x1 >> x2) || (ss >> extra))
      throw ConfigError(path + ": pair \"" + p + "\" needs two state names");
    w.pairs.emplace_back(sys1.state_id(x1), sys2.state_id(x2));
  }
  w.input_map.assign(sys2.num_inputs(), -1);
  for (const std::string& p : cfg_strings(d, "relation", "inputs")) {
    std::istringstream ss(p);
    std::string u2, u1, extra;
    if (!(ss >> u2 >> u1) || (ss >> extra))
      throw ConfigError(path + ": input map entry \"" + p + "\" needs two input names");
    w.input_map[static_cast<std::size_t>(sys2.input_id(u2))] = sys1.input_id(u1);
  }
  for (std::size_t u = 0; u < w.input_map.size(); ++u)
    if (w.input_map[u] < 0)
      throw ConfigError(path + ": input " + sys2.input_name(static_cast<InputId>(u)) +
                        " has no mapped image");
  return w;
}

}  // namespace reach

#endif
