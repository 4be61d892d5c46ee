#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

namespace cfb {

/// Static partition of [0,n) over `workers` threads. Each index is
/// processed exactly once; results must be written to per-index slots so
/// the outcome is independent of the worker count.
inline void parallel_for(std::int64_t n, int workers, const std::function<void(std::int64_t)>& fn) {
  if (n <= 0) return;
  workers = static_cast<int>(std::max<std::int64_t>(1, std::min<std::int64_t>(workers, n)));
  if (workers == 1) {
    for (std::int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([t, n, workers, &fn]() {
      for (std::int64_t i = t; i < n; i += workers) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

inline int default_parallelism() {
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

}  // namespace cfb
