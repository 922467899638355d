#pragma once

#include <atomic>
#include <functional>
#include <thread>
#include <vector>

namespace gfzip {

/// Runs fn(0..n_jobs-1) across a pool; results must land in pre-assigned
/// slots so the merge is order-independent. threads <= 0 picks the hardware
/// count.
inline void parallel_jobs(int n_jobs, int threads, const std::function<void(int)>& fn) {
  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  if (threads < 1) threads = 1;
  threads = std::min(threads, n_jobs);
  if (threads <= 1) {
    for (int job = 0; job < n_jobs; ++job) fn(job);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (int job = next.fetch_add(1); job < n_jobs; job = next.fetch_add(1)) fn(job);
    });
  }
  for (auto& worker : pool) worker.join();
}

}  // namespace gfzip
