/* grid.hpp: uniform cell grids over a box domain.
 * Sizing rule: counts[k] = ceil(span/eta) with 1e-9 relative slack so that
 * spans that are exact multiples of eta up to roundoff do not gain a cell.
 * The last cell along an axis is clipped to the domain when span is not a
 * multiple of eta.  Cells are half-open [b(i), b(i+1)) except that the upper
 * domain face is closed.  b(i) = lo + i*eta is the single canonical boundary
 * function; quantization and cell boxes both use it, so they never disagree. */
#ifndef REACH_GRID_HPP_
#define REACH_GRID_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "reach/core.hpp"
#include "reach/models.hpp"

namespace reach {

class Grid {
 public:
  Grid() = default;
  Grid(Box domain, Vec eta) : domain_(std::move(domain)), eta_(std::move(eta)) {
    const std::size_t n = domain_.dim();
    if (eta_.size() != n) throw ConfigError("grid: eta dimension mismatch");
    counts_.resize(n);
    strides_.resize(n);
    std::size_t stride = 1;
    for (std::size_t k = 0; k < n; ++k) {
      if (eta_[k] <= 0.0) throw ConfigError("grid: eta must be positive");
      double span = domain_.axes[k].width();
      if (span <= 0.0) throw ConfigError("grid: empty domain axis");
      double q = span / eta_[k];
      auto c = static_cast<std::int64_t>(std::ceil(q - 1e-9 * std::max(1.0, q)));
      counts_[k] = std::max<std::int64_t>(1, c);
      strides_[k] = stride;
      stride *= static_cast<std::size_t>(counts_[k]);
    }
    total_ = stride;
  }

  std::size_t dim() const { return domain_.dim(); }
  std::size_t num_cells() const { return total_; }
  const std::vector<std::int64_t>& counts() const { return counts_; }
  const Box& domain() const { return domain_; }
  const Vec& eta() const { return eta_; }

  double boundary(std::size_t axis, std::int64_t i) const {
    return domain_.axes[axis].lo + static_cast<double>(i) * eta_[axis];
  }

  /* per-axis quantization; x must lie in the domain axis (upper face closed) */
  std::int64_t quantize_axis(std::size_t axis, double x) const {
    const Interval& ax = domain_.axes[axis];
    if (x < ax.lo || x > ax.hi) throw DomainError("quantize: coordinate outside the grid domain");
    auto i = static_cast<std::int64_t>(std::floor((x - ax.lo) / eta_[axis]));
    if (i >= counts_[axis]) i = counts_[axis] - 1;
    if (i < 0) i = 0;
    while (i > 0 && x < boundary(axis, i)) --i;
    while (i + 1 < counts_[axis] && x >= boundary(axis, i + 1)) ++i;
    return i;
  }

  std::size_t quantize(const Vec& x) const {
    if (x.size() != dim()) throw DomainError("quantize: dimension mismatch");
    std::size_t idx = 0;
    for (std::size_t k = 0; k < dim(); ++k)
      idx += static_cast<std::size_t>(quantize_axis(k, x[k])) * strides_[k];
    return idx;
  }

  std::vector<std::int64_t> unflatten(std::size_t idx) const {
    std::vector<std::int64_t> iv(dim());
    for (std::size_t k = 0; k < dim(); ++k) {
      iv[k] = static_cast<std::int64_t>(idx % static_cast<std::size_t>(counts_[k]));
      idx /= static_cast<std::size_t>(counts_[k]);
    }
    return iv;
  }

  std::size_t flatten(const std::vector<std::int64_t>& iv) const {
    std::size_t idx = 0;
    for (std::size_t k = 0; k < dim(); ++k) idx += static_cast<std::size_t>(iv[k]) * strides_[k];
    return idx;
  }

  Interval cell_interval(std::size_t axis, std::int64_t i) const {
    double lo = boundary(axis, i);
    double hi = (i + 1 == counts_[axis]) ? domain_.axes[axis].hi
                                         : std::min(boundary(axis, i + 1), domain_.axes[axis].hi);
    return {lo, hi};
  }

  Box cell_box(std::size_t idx) const {
    auto iv = unflatten(idx);
    Box b;
    b.axes.resize(dim());
    for (std::size_t k = 0; k < dim(); ++k) b.axes[k] = cell_interval(k, iv[k]);
    return b;
  }

  Vec cell_center(std::size_t idx) const {
    Box b = cell_box(idx);
    Vec c(dim());
    for (std::size_t k = 0; k < dim(); ++k) c[k] = 0.5 * (b.axes[k].lo + b.axes[k].hi);
    return c;
  }

  /* index range of cells strictly overlapped by [lo,hi] on one axis;
   * empty (first > last) when the interval misses the domain */
  struct AxisRange {
    std::int64_t first = 0, last = -1;
    bool inside = false;  // [lo,hi] contained in the domain axis
    std::int64_t count() const { return last - first + 1; }
  };

  AxisRange overlap_range(std::size_t axis, double lo, double hi) const {
    const Interval& ax = domain_.axes[axis];
    AxisRange r;
    r.inside = lo >= ax.lo && hi <= ax.hi;
    double clo = std::max(lo, ax.lo), chi = std::min(hi, ax.hi);
    if (clo > chi) return r;
    std::int64_t a, b;
    if (lo == hi) {
      if (!r.inside) return r;
      a = b = quantize_axis(axis, lo);
    } else {
      a = static_cast<std::int64_t>(std::floor((clo - ax.lo) / eta_[axis]));
      b = static_cast<std::int64_t>(std::floor((chi - ax.lo) / eta_[axis]));
      a = std::max<std::int64_t>(0, std::min(a, counts_[axis] - 1));
      b = std::max<std::int64_t>(0, std::min(b, counts_[axis] - 1));
      /* strictness repairs against the canonical boundaries */
      while (a > 0 && clo < boundary(axis, a)) --a;
      while (a + 1 <= b && chi > clo && clo >= boundary(axis, a + 1)) ++a;
      while (b + 1 < counts_[axis] && chi > boundary(axis, b + 1)) ++b;
      while (b > a && clo < chi && chi <= boundary(axis, b)) --b;
      /* a degenerate clipped interval at a shared boundary: fall back */
      if (clo == chi) {
        a = b = quantize_axis(axis, clo);
      }
    }
    r.first = a;
    r.last = b;
    return r;
  }

  std::string describe() const {
    std::string s = "grid[";
    for (std::size_t k = 0; k < dim(); ++k) {
      if (k) s += " x ";
      s += std::to_string(counts_[k]);
    }
    s += "]";
    return s;
  }

 private:
  Box domain_;
  Vec eta_;
  std::vector<std::int64_t> counts_;
  std::vector<std::size_t> strides_;
  std::size_t total_ = 0;
};

inline Grid build_grid(const Box& domain, const Vec& eta) { return Grid(domain, eta); }

/* input vectors from gridding an input box: cell centers, axis 0 fastest */
inline std::vector<Vec> grid_input_values(const Box& bounds, const Vec& eta) {
  Grid g(bounds, eta);
  std::vector<Vec> out;
  out.reserve(g.num_cells());
  for (std::size_t i = 0; i < g.num_cells(); ++i) out.push_back(g.cell_center(i));
  return out;
}

}  // namespace reach

#endif
