#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace curvelab {

/// Thread cap: CURVELAB_THREADS if set, else hardware concurrency.
inline unsigned thread_cap() {
  if (const char* env = std::getenv("CURVELAB_THREADS")) {
    long v = std::atol(env);
    if (v >= 1) return static_cast<unsigned>(v);
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc ? hc : 1;
}

/// Runs fn(i) for i in [0, n). Work items must be independent; results should
/// be written to per-index slots so the outcome is schedule-independent.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  unsigned nt = std::min<std::size_t>(thread_cap(), n);
  if (nt <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(nt);
  for (unsigned t = 0; t < nt; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        fn(i);
      }
    });
  }
  for (auto& th : pool) th.join();
}

} // namespace curvelab
