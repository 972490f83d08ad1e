#pragma once

#include <cstdint>
#include <cstdlib>
#include <thread>
#include <utility>
#include <vector>

namespace pulsar {

/// Worker count: PULSAR_THREADS if set to a positive integer, otherwise the
/// hardware concurrency. Results never depend on this value; it only controls
/// how work on disjoint output ranges is scheduled.
inline int max_threads() {
  if (const char* env = std::getenv("PULSAR_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? int(hc) : 1;
}

/// Runs fn(begin, end) over a partition of [0, n). Each invocation receives a
/// contiguous range; ranges are disjoint, so fn may write to per-index state
/// without synchronization. fn must not reduce into shared floats (chunk
/// boundaries depend on the thread count).
template <class Fn>
void parallel_for(std::int64_t n, Fn&& fn) {
  if (n <= 0) return;
  int workers = max_threads();
  if (std::int64_t(workers) > n) workers = int(n);
  if (workers <= 1) {
    fn(std::int64_t(0), n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::int64_t chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    std::int64_t b = w * chunk;
    std::int64_t e = b + chunk < n ? b + chunk : n;
    if (b >= e) break;
    pool.emplace_back([&fn, b, e] { fn(b, e); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace pulsar
