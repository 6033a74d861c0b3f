#pragma once

#include <atomic>
#include <functional>
#include <thread>
#include <vector>

namespace autocalib {

// Runs fn(i) for i in [0, n) across hardware threads. Work items must be
// independent; determinism comes from per-item derived seeds, not from the
// schedule.
inline void parallel_for(int n, const std::function<void(int)>& fn) {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (hw == 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  const unsigned workers = std::min<unsigned>(hw, n);
  pool.reserve(workers);
  for (unsigned t = 0; t < workers; ++t) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace autocalib
