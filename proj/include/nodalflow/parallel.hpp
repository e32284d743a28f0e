#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace nodalflow {

// Worker cap: NODALFLOW_THREADS if set (>= 1), otherwise a modest default.
inline unsigned thread_cap() {
  static const unsigned cap = [] {
    if (const char* s = std::getenv("NODALFLOW_THREADS")) {
      char* end = nullptr;
      long v = std::strtol(s, &end, 10);
      if (end != s && v >= 1) return static_cast<unsigned>(v > 256 ? 256 : v);
    }
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) return 1u;
    return hw > 8 ? 8u : hw;
  }();
  return cap;
}

// Runs fn(0..count-1) on up to thread_cap() workers. Each index writes its own
// output slot, so results do not depend on scheduling. The first exception is
// rethrown after all workers join.
inline void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
  std::size_t workers = thread_cap();
  if (workers > count) workers = count;
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto body = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(body);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace nodalflow
