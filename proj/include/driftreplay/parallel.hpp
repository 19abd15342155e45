#pragma once

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace driftreplay {

/// Worker count for read-only scoring loops. Defaults to 1 so results and
/// timings are reproducible; DRIFT_REPLAY_THREADS raises the cap.
inline std::size_t thread_budget() {
  const char* env = std::getenv("DRIFT_REPLAY_THREADS");
  if (env == nullptr) return 1;
  long n = std::strtol(env, nullptr, 10);
  if (n <= 1) return 1;
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  return std::min<std::size_t>(static_cast<std::size_t>(n), hw);
}

/// Runs fn(i) for i in [0, n). Each index is processed exactly once; the
/// caller guarantees fn only writes state owned by index i, so the result
/// does not depend on the thread count.
template <class F>
void parallel_for(std::size_t n, F&& fn) {
  std::size_t workers = std::min(thread_budget(), n == 0 ? std::size_t{1} : n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> threads;
  std::exception_ptr first_error;
  std::mutex error_mutex;
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace driftreplay
