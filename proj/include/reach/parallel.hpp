/* parallel.hpp: bounded fork-join helper; worker count is process-global,
 * set once from the CLI --threads flag */
#ifndef REACH_PARALLEL_HPP_
#define REACH_PARALLEL_HPP_

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace reach {

inline unsigned& thread_cap() {
  static unsigned cap = std::max(1u, std::thread::hardware_concurrency());
  return cap;
}

inline void set_thread_cap(unsigned n) { thread_cap() = std::max(1u, n); }

/* chunked parallel for over [0,n); falls back to the calling thread when the
 * range is small or the cap is 1.  fn must be safe to call concurrently on
 * disjoint indices; result merging is the caller's job. */
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn, std::size_t grain = 1024) {
  unsigned workers = thread_cap();
  if (workers <= 1 || n <= grain) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, (n + grain - 1) / grain));
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::size_t chunk = (n + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    std::size_t lo = w * chunk, hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace reach

#endif
