#pragma once

// Deterministic parallel loop. Work item i writes only to slot i of a
// preallocated result, and reductions happen sequentially afterwards, so
// results are bit-identical for every thread count (FRACOU_THREADS
// overrides the hardware default).

#include <atomic>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace fracou {

inline int configured_thread_count() {
  if (const char* env = std::getenv("FRACOU_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

template <typename Fn>
void parallel_for(std::size_t n, Fn&& body, int threads = 0) {
  if (threads <= 0) threads = configured_thread_count();
  if (n == 0) return;
  if (threads == 1 || n == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  const std::size_t workers = std::min<std::size_t>(threads, n);
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) break;
        body(i);
      }
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace fracou
