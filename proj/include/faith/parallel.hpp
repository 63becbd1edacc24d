#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace faith {

/// Number of workers to use: `requested` if positive, otherwise the
/// hardware concurrency (at least 1).
inline unsigned worker_count(int requested) {
  if (requested > 0) return static_cast<unsigned>(requested);
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs body(i) for i in [0, n) on up to `threads` workers. If any call
/// throws, the exception from the lowest index is rethrown after all
/// workers stop.
template <class Body>
void parallel_for(std::size_t n, int threads, Body&& body) {
  const unsigned workers = std::min<std::size_t>(worker_count(threads), std::max<std::size_t>(n, 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex mu;
  std::size_t failed_index = n;
  std::exception_ptr error;
  auto run = [&] {
    for (std::size_t i = next++; i < n && !failed.load(std::memory_order_relaxed); i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (i < failed_index) {
          failed_index = i;
          error = std::current_exception();
        }
        failed = true;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace faith
