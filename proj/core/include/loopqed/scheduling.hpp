#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "loopqed/rng.hpp"

namespace loopqed {

class SchedulingError : public std::runtime_error {
public:
  SchedulingError(const std::string& msg, std::vector<long> failed)
      : std::runtime_error(msg), failed_indices(std::move(failed)) {}
  std::vector<long> failed_indices;
};

inline int resolve_workers(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

// Runs fn(index, seed) for index in [0, n) across a worker pool. Results are
// stored by index, so the merged output is independent of worker count and of
// completion order. Per-index seeds derive from the master seed alone. A
// failing index is retried once; persistent failures abort with the index
// list.
template <class T, class Fn>
std::vector<T> schedule_trajectories(long n, std::uint64_t master_seed, int workers, Fn&& fn) {
  if (n < 1) throw std::invalid_argument("schedule_trajectories: n must be >= 1");
  workers = resolve_workers(workers);
  std::vector<T> results(static_cast<std::size_t>(n));
  std::atomic<long> next{0};
  std::vector<long> failed;
  std::vector<std::string> messages;
  std::mutex fail_mutex;

  auto body = [&]() {
    for (;;) {
      const long i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= n) return;
      const std::uint64_t seed = derive_seed(master_seed, static_cast<std::uint64_t>(i));
      for (int attempt = 0;; ++attempt) {
        try {
          results[static_cast<std::size_t>(i)] = fn(i, seed);
          break;
        } catch (const std::exception& e) {
          if (attempt == 0) continue;  // one retry per index
          std::lock_guard<std::mutex> lock(fail_mutex);
          failed.push_back(i);
          messages.emplace_back(e.what());
          break;
        }
      }
    }
  };

  if (workers <= 1 || n == 1) {
    body();
  } else {
    std::vector<std::thread> pool;
    const int count = static_cast<int>(std::min<long>(workers, n));
    pool.reserve(static_cast<std::size_t>(count));
    for (int w = 0; w < count; ++w) pool.emplace_back(body);
    for (auto& th : pool) th.join();
  }
  if (!failed.empty()) {
    std::sort(failed.begin(), failed.end());
    std::string msg = "schedule_trajectories: " + std::to_string(failed.size()) +
                      " trajectories failed persistently (first: " + messages.front() + ")";
    throw SchedulingError(msg, std::move(failed));
  }
  return results;
}

}  // namespace loopqed
