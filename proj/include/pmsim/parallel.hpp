#pragma once

#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace pmsim {

// Run fn(0..n-1) on a small worker pool. Work items are pulled from an
// atomic counter; results must be written to caller-owned slots so the
// outcome does not depend on scheduling. The first exception wins and is
// rethrown after all workers join.
inline void parallel_for(int n, const std::function<void(int)>& fn,
                         int n_threads = 0) {
  if (n <= 0) return;
  if (n_threads <= 0)
    n_threads = static_cast<int>(
        std::max(1u, std::thread::hardware_concurrency()));
  n_threads = std::min(n_threads, n);
  if (n_threads == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n || failed.load()) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!failed.exchange(true)) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  for (int t = 0; t < n_threads; ++t) pool.emplace_back(work);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace pmsim
