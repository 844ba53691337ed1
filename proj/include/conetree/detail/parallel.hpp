#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace conetree::detail {

// Runs body(0..jobs-1) on up to `workers` threads. Job payloads must not
// depend on the thread that picks them up; the first exception wins and is
// rethrown on the calling thread after the pool drains.
inline void run_on_workers(int workers, std::size_t jobs,
                           const std::function<void(std::size_t)>& body) {
  workers = std::max(1, workers);
  if (workers == 1 || jobs <= 1) {
    for (std::size_t j = 0; j < jobs; ++j) body(j);
    return;
  }
  std::atomic<std::size_t> cursor{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  auto loop = [&] {
    for (;;) {
      const std::size_t j = cursor.fetch_add(1);
      if (j >= jobs) return;
      try {
        body(j);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const std::size_t spawn = std::min(static_cast<std::size_t>(workers), jobs);
  pool.reserve(spawn);
  for (std::size_t t = 0; t < spawn; ++t) pool.emplace_back(loop);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace conetree::detail
