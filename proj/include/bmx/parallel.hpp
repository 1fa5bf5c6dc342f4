#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace bmx {

// Calls body(i) exactly once for every i in [0, n), splitting the range into
// contiguous blocks over `workers` threads. The first exception thrown by any
// block is rethrown on the calling thread after all threads finish.
template <class Body>
void parallel_for(std::size_t n, int workers, Body&& body) {
  const std::size_t w = std::clamp<std::size_t>(workers < 1 ? 1 : static_cast<std::size_t>(workers), 1,
                                                std::max<std::size_t>(n, 1));
  if (w == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr error;
  std::mutex mu;
  std::vector<std::thread> threads;
  threads.reserve(w);
  for (std::size_t k = 0; k < w; ++k) {
    const std::size_t lo = n * k / w, hi = n * (k + 1) / w;
    threads.emplace_back([&, lo, hi] {
      try {
        for (std::size_t i = lo; i < hi; ++i) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace bmx
