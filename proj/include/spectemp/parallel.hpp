#pragma once

#include <cstddef>
#include <cstdlib>
#include <thread>
#include <vector>

namespace spectemp {

// Worker cap from SPECTEMP_THREADS (0 or unset = hardware concurrency).
inline std::size_t worker_count() {
  if (const char* env = std::getenv("SPECTEMP_THREADS")) {
    const long v = std::atol(env);
    if (v > 0) return static_cast<std::size_t>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

// Runs fn(begin, end) over contiguous slices of [0, n). Each index is
// processed exactly once and results must be written per-index, so the
// output is identical to a serial run regardless of the thread count.
template <typename Fn>
void parallel_blocks(std::size_t n, Fn&& fn) {
  const std::size_t workers = std::min(worker_count(), n == 0 ? std::size_t{1} : n);
  if (workers <= 1 || n < 256) {
    fn(std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> threads;
  threads.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t t = 0; t < workers; ++t) {
    const std::size_t begin = t * chunk;
    if (begin >= n) break;
    const std::size_t end = std::min(n, begin + chunk);
    threads.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  for (auto& th : threads) th.join();
}

// Per-index convenience wrapper.
template <typename Fn>
void parallel_rows(std::size_t n, Fn&& fn) {
  parallel_blocks(n, [&fn](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) fn(i);
  });
}

}  // namespace spectemp
