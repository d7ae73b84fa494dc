#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace llenhance {

inline int default_jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. Items are claimed
/// dynamically, so fn must only write state owned by index i. The first
/// exception thrown by any worker is rethrown on the calling thread.
template <class Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
  const auto workers = static_cast<std::size_t>(std::clamp<std::size_t>(jobs < 1 ? 1 : jobs, 1, n ? n : 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto run = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  for (std::size_t t = 1; t < workers; ++t) pool.emplace_back(run);
  run();
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace llenhance
