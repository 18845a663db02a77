#pragma once

#include <cstddef>
#include <thread>
#include <vector>

namespace nertag {

// Runs fn(i) for i in [0, n) across `jobs` threads in fixed blocks.
// Callers collect per-index results into pre-sized slots and fold them in
// index order, so the worker count never changes any output.
template <class Fn>
void parallel_for(std::size_t n, unsigned jobs, Fn&& fn) {
  if (jobs <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(jobs, n));
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) fn(i);
    });
  }
  for (std::thread& t : threads) t.join();
}

}  // namespace nertag
