/* abstraction.hpp: finite abstractions of continuous models.
 *
 * Successor rule: a cell/region is a successor iff the image interval hull
 * strictly overlaps it (shared boundary points do not count; point images use
 * the quantizer).  Images leaving the grid, touching non-Q cells, or escaping
 * the declared region cover are recorded as an unsafe sink.  Soundness
 * invariant: the image is always contained in the union of the closed
 * successor boxes plus the unsafe part. */
#ifndef REACH_ABSTRACTION_HPP_
#define REACH_ABSTRACTION_HPP_

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "reach/core.hpp"
#include "reach/finite_system.hpp"
#include "reach/grid.hpp"
#include "reach/models.hpp"

namespace reach {

struct AbstractionOptions {
  /* materialize an explicit FiniteSystem when states*inputs stays below this */
  std::size_t materialize_limit = 2'000'000;
  bool force_lazy = false;
};

struct PostResult {
  StateSet cells;
  bool unsafe = false;
};

class GridAbstraction {
 public:
  enum class Mode { kGrid, kRegions };

  /* uniform grid over domain; Q/T given as rect unions */
  GridAbstraction(ContinuousSystem sys, Grid grid, std::vector<Box> q_rects,
                  std::vector<Box> t_rects, AbstractionOptions opts = {})
      : sys_(std::move(sys)),
        mode_(Mode::kGrid),
        grid_(std::move(grid)),
        q_rects_(std::move(q_rects)),
        t_rects_(std::move(t_rects)),
        opts_(opts) {
    classify_cells();
    finish_setup();
  }

  /* explicit region cover of Q\T plus the target rects */
  GridAbstraction(ContinuousSystem sys, std::vector<Box> regions, std::vector<Box> q_rects,
                  std::vector<Box> t_rects, AbstractionOptions opts = {})
      : sys_(std::move(sys)),
        mode_(Mode::kRegions),
        regions_(std::move(regions)),
        q_rects_(std::move(q_rects)),
        t_rects_(std::move(t_rects)),
        opts_(opts) {
    if (regions_.empty()) throw ConfigError("region abstraction: no regions declared");
    if (t_rects_.empty()) throw ConfigError("region abstraction: no target rects");
    for (StateId r = 0; r < static_cast<StateId>(regions_.size()); ++r) q_cells_.push_back(r);
    target_state_ = static_cast<StateId>(regions_.size());
    q_cells_.push_back(target_state_);
    t_cells_ = {target_state_};
    cover_with_target_ = regions_;
    for (const Box& t : t_rects_) cover_with_target_.push_back(t);
    finish_setup();
  }

  Mode mode() const { return mode_; }
  const ContinuousSystem& system() const { return sys_; }
  const Grid& grid() const { return grid_; }
  const std::vector<Box>& regions() const { return regions_; }
  const std::vector<Box>& q_rects() const { return q_rects_; }
  const std::vector<Box>& t_rects() const { return t_rects_; }
  const StateSet& q_cells() const { return q_cells_; }
  const StateSet& t_cells() const { return t_cells_; }
  bool materialized() const { return materialized_.has_value(); }
  std::size_t num_inputs() const { return sys_.inputs.size(); }

  std::size_t num_abstract_states() const {
    return mode_ == Mode::kGrid ? grid_.num_cells() : regions_.size() + 1;
  }

  Box state_box(StateId s) const {
    if (mode_ == Mode::kGrid) return grid_.cell_box(static_cast<std::size_t>(s));
    if (s == target_state_) throw DomainError("target pseudo-state has no single box");
    return regions_.at(static_cast<std::size_t>(s));
  }

  PostResult post(StateId s, InputId u) const {
    const Vec& uv = sys_.inputs.at(static_cast<std::size_t>(u));
    if (mode_ == Mode::kGrid) return post_grid(grid_.cell_box(static_cast<std::size_t>(s)), uv);
    if (s == target_state_) return {};
    return post_regions(regions_.at(static_cast<std::size_t>(s)), uv);
  }

  /* image hull of an abstract state under one input */
  Box image(StateId s, InputId u) const {
    return sys_.model->interval_image(state_box(s), sys_.inputs.at(static_cast<std::size_t>(u)));
  }

  /* number of (state,input,successor) triples plus one per unsafe row,
   * over non-target q states */
  std::uint64_t count_transitions() const;

  /* explicit FiniteSystem view plus matching spec; built on demand */
  const FiniteSystem& materialized_system() const {
    if (!materialized_) throw DomainError("abstraction is lazy; no materialized system");
    return materialized_->system;
  }
  const ReachSpec& materialized_spec() const {
    if (!materialized_) throw DomainError("abstraction is lazy; no materialized spec");
    return materialized_->spec;
  }
  StateId unsafe_state() const {
    if (!materialized_) throw DomainError("abstraction is lazy; no unsafe state id");
    return materialized_->unsafe_state;
  }

  /* separable models: image interval on one axis as a function of that
   * axis' scalar input component (room-style dynamics) */
  bool separable() const { return separable_; }

  struct AxisEntry {
    std::int32_t first = 0, last = -1;
    bool inside = false;
    std::int32_t count() const { return last - first + 1; }
  };
  /* table[(cell*dim + axis)*axis_input_count + ui]; grid mode only */
  const std::vector<AxisEntry>& axis_table() const {
    if (!separable_) throw DomainError("axis tables need a separable model");
    return axis_table_;
  }
  std::size_t axis_input_count() const { return axis_input_count_; }
  /* declared input id for component ids (one per axis), axis-0 fastest */
  InputId compose_input(const std::vector<std::int32_t>& comp) const {
    std::size_t id = 0;
    for (std::size_t k = comp.size(); k-- > 0;)
      id = id * axis_input_count_ + static_cast<std::size_t>(comp[k]);
    return static_cast<InputId>(id);
  }
  std::vector<std::int32_t> decompose_input(InputId u) const {
    std::vector<std::int32_t> comp(grid_.dim());
    auto id = static_cast<std::size_t>(u);
    for (std::size_t k = 0; k < grid_.dim(); ++k) {
      comp[k] = static_cast<std::int32_t>(id % axis_input_count_);
      id /= axis_input_count_;
    }
    return comp;
  }

  /* random containment test of the abstraction against the concrete map:
   * returns the number of sampled (x,u) pairs whose concrete image is not
   * explained by the declared successors / unsafe sink */
  std::size_t sample_soundness(std::mt19937_64& rng, std::size_t samples) const;

  std::uint64_t geometry_hash() const { return geometry_hash_; }

 private:
  struct Materialized {
    FiniteSystem system;
    ReachSpec spec;
    StateId unsafe_state = -1;
  };

  void classify_cells() {
    const std::size_t n = grid_.num_cells();
    for (std::size_t c = 0; c < n; ++c) {
      Box b = grid_.cell_box(c);
      bool in_q = box_in_union(b, q_rects_);
      if (in_q) q_cells_.push_back(static_cast<StateId>(c));
      if (box_in_union(b, t_rects_)) {
        if (!in_q) throw ConfigError("abstraction: target cell outside Q");
        t_cells_.push_back(static_cast<StateId>(c));
      }
    }
    if (t_cells_.empty()) throw ConfigError("abstraction: target set contains no whole cell");
    target_state_ = -1;
  }

  static bool box_in_union(const Box& b, const std::vector<Box>& rects) {
    for (const Box& r : rects)
      if (r.contains(b)) return true;
    /* a cell may straddle two rects of the union; fall back to coverage */
    return rects.size() > 1 && box_covered_by(b, rects);
  }

  void finish_setup() {
    if (sys_.inputs.empty()) throw ConfigError("abstraction: empty input set");
    for (const Vec& u : sys_.inputs) sys_.model->check_input(u);
    separable_ = detect_separable();
    if (separable_) build_axis_tables();
    hash_geometry();
    std::size_t pairs = num_abstract_states() * sys_.inputs.size();
    if (!opts_.force_lazy && pairs <= opts_.materialize_limit) materialize();
  }

  bool detect_separable() const {
    if (mode_ != Mode::kGrid) return false;
    if (sys_.model->input_dim() != grid_.dim()) return false;
    if (sys_.model->name() != "room-temperature") return false;
    /* input list must be the axis-aligned product of one component list,
     * axis 0 fastest */
    std::size_t m = sys_.inputs.size();
    std::size_t per_axis = static_cast<std::size_t>(
        std::llround(std::pow(static_cast<double>(m), 1.0 / static_cast<double>(grid_.dim()))));
    if (per_axis == 0) return false;
    std::size_t prod = 1;
    for (std::size_t k = 0; k < grid_.dim(); ++k) prod *= per_axis;
    if (prod != m) return false;
    for (std::size_t k = 0; k < grid_.dim(); ++k) {
      std::size_t stride = 1;
      for (std::size_t j = 0; j < k; ++j) stride *= per_axis;
      for (std::size_t i = 1; i < per_axis; ++i)
        if (sys_.inputs[i * stride][k] <= sys_.inputs[(i - 1) * stride][k]) return false;
    }
    /* every vector must be the product-grid combination its id encodes */
    for (std::size_t id = 0; id < m; ++id) {
      std::size_t rest = id, stride = 1;
      for (std::size_t k = 0; k < grid_.dim(); ++k) {
        std::size_t comp = rest % per_axis;
        rest /= per_axis;
        if (sys_.inputs[id][k] != sys_.inputs[comp * stride][k]) return false;
        stride *= per_axis;
      }
    }
    return true;
  }

  void build_axis_tables() {
    const std::size_t dim = grid_.dim();
    axis_input_count_ = static_cast<std::size_t>(std::llround(
        std::pow(static_cast<double>(sys_.inputs.size()), 1.0 / static_cast<double>(dim))));
    const std::size_t cells = grid_.num_cells();
    axis_table_.assign(cells * dim * axis_input_count_, {});
    for (std::size_t c = 0; c < cells; ++c) {
      Box b = grid_.cell_box(c);
      for (std::size_t ui = 0; ui < axis_input_count_; ++ui) {
        /* pick any composed input whose component k equals ui: component
         * values on other axes do not affect axis k for separable models */
        std::vector<std::int32_t> comp(dim, 0);
        for (std::size_t k = 0; k < dim; ++k) {
          comp.assign(dim, 0);
          comp[k] = static_cast<std::int32_t>(ui);
          Box img = sys_.model->interval_image(b, sys_.inputs[compose_input(comp)]);
          auto r = grid_.overlap_range(k, img.axes[k].lo, img.axes[k].hi);
          AxisEntry e;
          e.first = static_cast<std::int32_t>(r.first);
          e.last = static_cast<std::int32_t>(r.last);
          e.inside = r.inside;
          axis_table_[(c * dim + k) * axis_input_count_ + ui] = e;
        }
      }
    }
  }

  PostResult post_grid(const Box& cell, const Vec& u) const {
    Box img = sys_.model->interval_image(cell, u);
    PostResult out;
    std::vector<Grid::AxisRange> ranges(grid_.dim());
    for (std::size_t k = 0; k < grid_.dim(); ++k) {
      ranges[k] = grid_.overlap_range(k, img.axes[k].lo, img.axes[k].hi);
      if (!ranges[k].inside) out.unsafe = true;
      if (ranges[k].count() <= 0) return out; /* image misses the grid */
    }
    std::vector<std::int64_t> iv(grid_.dim());
    for (std::size_t k = 0; k < grid_.dim(); ++k) iv[k] = ranges[k].first;
    for (;;) {
      auto cell_id = static_cast<StateId>(grid_.flatten(iv));
      if (set_contains(q_cells_, cell_id)) set_insert(out.cells, cell_id);
      else out.unsafe = true;
      std::size_t k = 0;
      for (; k < grid_.dim(); ++k) {
        if (++iv[k] <= ranges[k].last) break;
        iv[k] = ranges[k].first;
      }
      if (k == grid_.dim()) break;
    }
    return out;
  }

  PostResult post_regions(const Box& region, const Vec& u) const {
    Box img = sys_.model->interval_image(region, u);
    PostResult out;
    for (StateId r = 0; r < static_cast<StateId>(regions_.size()); ++r)
      if (strictly_overlaps(img, regions_[r])) set_insert(out.cells, r);
    for (const Box& t : t_rects_)
      if (strictly_overlaps(img, t)) {
        set_insert(out.cells, target_state_);
        break;
      }
    if (!box_covered_by(img, cover_with_target_)) out.unsafe = true;
    return out;
  }

  void materialize() {
    Materialized m;
    std::vector<std::string> state_names;
    if (mode_ == Mode::kGrid) {
      state_names.reserve(grid_.num_cells() + 1);
      for (std::size_t c = 0; c < grid_.num_cells(); ++c)
        state_names.push_back("c" + std::to_string(c));
    } else {
      for (std::size_t r = 0; r < regions_.size(); ++r)
        state_names.push_back("r" + std::to_string(r));
      state_names.push_back("target");
    }
    m.unsafe_state = static_cast<StateId>(state_names.size());
    state_names.push_back("unsafe");

    std::vector<std::string> input_names;
    for (std::size_t i = 0; i < sys_.inputs.size(); ++i)
      input_names.push_back(i < sys_.input_labels.size() ? sys_.input_labels[i]
                                                         : "u" + std::to_string(i));
    FiniteSystem fs(std::move(state_names), std::move(input_names));
    for (StateId s : q_cells_) {
      if (set_contains(t_cells_, s)) continue;
      for (InputId u = 0; u < static_cast<InputId>(sys_.inputs.size()); ++u) {
        PostResult pr = post(s, u);
        for (StateId d : pr.cells) fs.add_transition(s, u, d);
        if (pr.unsafe) fs.add_transition(s, u, m.unsafe_state);
      }
    }
    m.system = std::move(fs);
    m.spec.q_states = q_cells_;
    m.spec.t_states = t_cells_;
    materialized_ = std::move(m);
  }

  void hash_geometry() {
    std::string blob = sys_.model->name();
    auto put = [&blob](double v) { blob.append(reinterpret_cast<const char*>(&v), sizeof v); };
    if (auto* rm = dynamic_cast<const RoomModel*>(sys_.model.get())) {
      const RoomParams& p = rm->params();
      put(p.rooms);
      put(p.alpha);
      put(p.beta);
      put(p.gamma);
      put(p.t_outside);
      put(p.t_heater);
    }
    blob += mode_ == Mode::kGrid ? "|grid|" : "|regions|";
    auto put_box = [&](const Box& b) {
      for (const Interval& iv : b.axes) {
        put(iv.lo);
        put(iv.hi);
      }
    };
    if (mode_ == Mode::kGrid) {
      put_box(grid_.domain());
      for (double e : grid_.eta()) put(e);
    } else {
      for (const Box& r : regions_) put_box(r);
    }
    blob += "|q|";
    for (const Box& r : q_rects_) put_box(r);
    blob += "|t|";
    for (const Box& r : t_rects_) put_box(r);
    blob += "|u|";
    for (const Vec& u : sys_.inputs)
      for (double v : u) put(v);
    geometry_hash_ = fnv1a(blob);
  }

  ContinuousSystem sys_;
  Mode mode_;
  Grid grid_;
  std::vector<Box> regions_;
  std::vector<Box> q_rects_;
  std::vector<Box> t_rects_;
  std::vector<Box> cover_with_target_;
  AbstractionOptions opts_;
  StateSet q_cells_, t_cells_;
  StateId target_state_ = -1;
  bool separable_ = false;
  std::size_t axis_input_count_ = 0;
  std::vector<AxisEntry> axis_table_;
  std::optional<Materialized> materialized_;
  std::uint64_t geometry_hash_ = 0;
};

inline std::uint64_t GridAbstraction::count_transitions() const {
  std::uint64_t total = 0;
  if (separable_) {
    const std::size_t dim = grid_.dim();
    for (StateId s : q_cells_) {
      if (set_contains(t_cells_, s)) continue;
      auto c = static_cast<std::size_t>(s);
      std::uint64_t succ_sum = 1, inside_combos = 1;
      for (std::size_t k = 0; k < dim; ++k) {
        std::uint64_t cnt = 0, ins = 0;
        for (std::size_t ui = 0; ui < axis_input_count_; ++ui) {
          const AxisEntry& e = axis_table_[(c * dim + k) * axis_input_count_ + ui];
          if (e.count() > 0) cnt += static_cast<std::uint64_t>(e.count());
          if (e.inside) ++ins;
        }
        succ_sum *= cnt;
        inside_combos *= ins;
      }
      /* non-q successors still count as edges into the unsafe sink below;
       * separable fast count assumes all grid cells are q cells */
      total += succ_sum + (static_cast<std::uint64_t>(sys_.inputs.size()) - inside_combos);
    }
    if (q_cells_.size() == num_abstract_states()) return total;
  }
  total = 0;
  for (StateId s : q_cells_) {
    if (set_contains(t_cells_, s)) continue;
    for (InputId u = 0; u < static_cast<InputId>(sys_.inputs.size()); ++u) {
      PostResult pr = post(s, u);
      total += pr.cells.size() + (pr.unsafe ? 1u : 0u);
    }
  }
  return total;
}

inline std::size_t GridAbstraction::sample_soundness(std::mt19937_64& rng,
                                                     std::size_t samples) const {
  std::size_t violations = 0;
  std::vector<StateId> sources;
  for (StateId s : q_cells_)
    if (!set_contains(t_cells_, s)) sources.push_back(s);
  if (sources.empty()) return 0;
  std::uniform_int_distribution<std::size_t> pick_state(0, sources.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_input(0, sys_.inputs.size() - 1);
  for (std::size_t i = 0; i < samples; ++i) {
    StateId s = sources[pick_state(rng)];
    Box b = state_box(s);
    Vec x(b.dim());
    for (std::size_t k = 0; k < b.dim(); ++k) {
      std::uniform_real_distribution<double> d(b.axes[k].lo, b.axes[k].hi);
      x[k] = d(rng);
    }
    auto u = static_cast<InputId>(pick_input(rng));
    Vec y = sys_.model->eval(x, sys_.inputs[static_cast<std::size_t>(u)]);
    PostResult pr = post(s, u);
    bool explained = false;
    if (mode_ == Mode::kGrid) {
      if (grid_.domain().contains(y)) {
        auto cy = static_cast<StateId>(grid_.quantize(y));
        explained = set_contains(pr.cells, cy) || (!set_contains(q_cells_, cy) && pr.unsafe);
      } else {
        explained = pr.unsafe;
      }
    } else {
      for (StateId r : pr.cells) {
        if (r == target_state_) {
          for (const Box& t : t_rects_)
            if (t.contains(y)) explained = true;
        } else if (regions_[static_cast<std::size_t>(r)].contains(y)) {
          explained = true;
        }
      }
      if (!explained && pr.unsafe) {
        /* only points escaping the declared cover may be charged to the sink */
        bool in_cover = false;
        for (const Box& c : cover_with_target_)
          if (c.contains(y)) {
            in_cover = true;
            break;
          }
        if (!in_cover) explained = true;
      }
    }
    if (!explained) ++violations;
  }
  return violations;
}

}  // namespace reach

#endif
