/* core.hpp: shared small types for the reachability-entropy toolbox */
#ifndef REACH_CORE_HPP_
#define REACH_CORE_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace reach {

using StateId = std::int32_t;
using InputId = std::int32_t;
using GroupId = std::int32_t;

/* sentinel node id used for the target pseudo-state in sequences and graphs */
inline constexpr std::int32_t kTargetNode = -1;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/* error taxonomy: every stage failure surfaces as one of these */
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SoundnessError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SynthesisError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct GraphError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/* closed interval [lo,hi]; degenerate (lo==hi) is allowed */
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double width() const { return hi - lo; }
  bool contains(double x) const { return x >= lo && x <= hi; }
  bool contains(const Interval& o) const { return o.lo >= lo && o.hi <= hi; }
};

/* axis-aligned box, one Interval per coordinate */
struct Box {
  std::vector<Interval> axes;
  std::size_t dim() const { return axes.size(); }
  bool contains(const std::vector<double>& x) const {
    if (x.size() != axes.size()) return false;
    for (std::size_t k = 0; k < axes.size(); ++k)
      if (!axes[k].contains(x[k])) return false;
    return true;
  }
  bool contains(const Box& o) const {
    if (o.dim() != dim()) return false;
    for (std::size_t k = 0; k < axes.size(); ++k)
      if (!axes[k].contains(o.axes[k])) return false;
    return true;
  }
};

/* strict-overlap test: shared boundary points do not count as overlap.
 * Degenerate intervals fall back to half-open membership so that point
 * images still land in exactly one cell. */
inline bool strictly_overlaps(const Interval& a, const Interval& b) {
  if (a.lo == a.hi) return a.lo >= b.lo && (a.lo < b.hi || (b.lo == b.hi && a.lo == b.lo));
  if (b.lo == b.hi) return b.lo >= a.lo && b.lo < a.hi;
  return a.hi > b.lo && a.lo < b.hi;
}

inline bool strictly_overlaps(const Box& a, const Box& b) {
  for (std::size_t k = 0; k < a.axes.size(); ++k)
    if (!strictly_overlaps(a.axes[k], b.axes[k])) return false;
  return true;
}

/* box \ (union of boxes) emptiness test by recursive axis splitting;
 * used for "image covered by declared regions" soundness checks */
inline bool box_covered_by(const Box& b, const std::vector<Box>& cover, std::size_t from = 0) {
  for (std::size_t k = 0; k < b.dim(); ++k)
    if (b.axes[k].lo > b.axes[k].hi) return true; /* empty query box */
  for (std::size_t i = from; i < cover.size(); ++i) {
    const Box& c = cover[i];
    bool disjoint = false;
    for (std::size_t k = 0; k < b.dim(); ++k)
      if (c.axes[k].hi < b.axes[k].lo || c.axes[k].lo > b.axes[k].hi) { disjoint = true; break; }
    if (disjoint) continue;
    if (c.contains(b)) return true;
    /* split b along the first axis where c cuts its interior; cuts on the
     * boundary are dropped, which is sound for closed cover boxes and keeps
     * the recursion strictly shrinking */
    for (std::size_t k = 0; k < b.dim(); ++k) {
      if (c.axes[k].lo > b.axes[k].lo && c.axes[k].lo < b.axes[k].hi) {
        Box left = b, right = b;
        left.axes[k].hi = c.axes[k].lo;
        right.axes[k].lo = c.axes[k].lo;
        return box_covered_by(left, cover, from) && box_covered_by(right, cover, from);
      }
      if (c.axes[k].hi < b.axes[k].hi && c.axes[k].hi > b.axes[k].lo) {
        Box left = b, right = b;
        left.axes[k].hi = c.axes[k].hi;
        right.axes[k].lo = c.axes[k].hi;
        return box_covered_by(left, cover, from) && box_covered_by(right, cover, from);
      }
    }
    /* c neither contains nor cuts b's interior: it merely touches */
  }
  return false;
}

/* FNV-1a, used for cache keys and config hashes */
inline std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 1469598103934665603ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}
inline std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 1469598103934665603ull) {
  return fnv1a(s.data(), s.size(), h);
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf);
}

/* round to 6 significant digits; report serialization uses this everywhere */
inline double sig6(double x) {
  if (x == 0.0 || !std::isfinite(x)) return x;
  std::ostringstream os;
  os.precision(6);
  os << x;
  return std::stod(os.str());
}

inline double log2_count(std::size_t n) {
  return std::log2(static_cast<double>(n));
}

}  // namespace reach

#endif
