#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace jadl {

// Worker budget. JADL_THREADS caps the number of threads; the default is the
// hardware concurrency.
inline int thread_budget() {
  const unsigned hw = std::thread::hardware_concurrency();
  int budget = hw > 0 ? static_cast<int>(hw) : 1;
  if (const char* env = std::getenv("JADL_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v >= 1) budget = std::min<long>(budget, v);
  }
  return budget;
}

// Runs fn(i) for i in [0, count). Each index must touch only its own output
// slot, so results are identical regardless of scheduling. Exceptions are
// captured and rethrown on the calling thread.
inline void parallel_for(int count, const std::function<void(int)>& fn,
                         int threads = 0) {
  if (threads <= 0) threads = thread_budget();
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  auto worker = [&]() {
    for (;;) {
      const int i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= count || failed.load(std::memory_order_relaxed)) return;
      try {
        fn(i);
      } catch (...) {
        if (!failed.exchange(true)) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads - 1);
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failed) std::rethrow_exception(error);
}

}  // namespace jadl
