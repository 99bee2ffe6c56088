#pragma once

#include <cstddef>
#include <thread>
#include <vector>

namespace gsmix {

inline int default_workers() {
  unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

// Runs fn(i) for i in [0, n). Each job writes its own output slot, so the
// result is independent of scheduling; determinism comes from per-job RNG
// substreams, not from execution order.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn fn) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::size_t per = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    std::size_t lo = per * w, hi = std::min(n, lo + per);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace gsmix
