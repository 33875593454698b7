#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace nvrr {

// Worker count resolution: explicit > NVRR_WORKERS env > hardware.
inline int default_workers() {
  if (const char* env = std::getenv("NVRR_WORKERS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

// Index-parallel loop. Every iteration owns its output slot and its own RNG
// stream, so results are identical for any worker count.
inline void parallel_for(int64_t n, int workers,
                         const std::function<void(int64_t)>& fn) {
  if (n <= 0) return;
  if (workers <= 0) workers = default_workers();
  if (workers <= 1 || n == 1) {
    for (int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int64_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  const int count = static_cast<int>(std::min<int64_t>(workers, n));
  pool.reserve(count);
  for (int w = 0; w < count; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const int64_t i = next.fetch_add(1, std::memory_order_relaxed);
        if (i >= n || failed.load(std::memory_order_relaxed)) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          failed.store(true, std::memory_order_relaxed);
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace nvrr
