#pragma once

#include <algorithm>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace roughlab {

/// Runs fn(i) for i in [0, n) on `workers` threads with a fixed contiguous-block
/// decomposition. Callers write results into index-addressed slots and reduce
/// sequentially afterwards, so outputs never depend on the worker count.
inline void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  if (workers < 1) workers = 1;
  std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
  if (w == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::size_t chunk = (n + w - 1) / w;
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(w, nullptr);
  for (std::size_t j = 0; j < w; ++j) {
    std::size_t lo = j * chunk;
    std::size_t hi = std::min(n, lo + chunk);
    threads.emplace_back([&, lo, hi, j] {
      try {
        for (std::size_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        errors[j] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace roughlab
