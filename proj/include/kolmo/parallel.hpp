/**
 * @file parallel.hpp
 * @brief Deterministic data parallelism: index-range splitting over
 *        std::thread and order-fixed reductions.
 */
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <span>
#include <thread>
#include <vector>

namespace kolmo::parallel {

namespace detail {
inline std::atomic<unsigned>& max_threads_slot() {
  static std::atomic<unsigned> slot{0};
  return slot;
}

inline bool& inside_worker() {
  thread_local bool flag = false;
  return flag;
}
}  // namespace detail

/// Caps the number of worker threads (0 = hardware concurrency).
inline void set_max_threads(unsigned n) { detail::max_threads_slot().store(n); }

[[nodiscard]] inline unsigned max_threads() {
  const unsigned n = detail::max_threads_slot().load();
  if (n > 0) {
    return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Calls body(i) for every i in [0, count). Work items must write to
/// disjoint outputs; results are then independent of the thread count.
/// Nested calls run serially on the calling worker.
template <class Body>
void parallel_for(std::size_t count, Body&& body) {
  const std::size_t workers =
      detail::inside_worker() ? 1 : std::min<std::size_t>(max_threads(), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      body(i);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  constexpr std::size_t kChunk = 64;
  auto worker = [&] {
    struct Mark {
      bool outer = detail::inside_worker();
      Mark() { detail::inside_worker() = true; }
      ~Mark() { detail::inside_worker() = outer; }
    } mark;
    try {
      for (;;) {
        const std::size_t begin = next.fetch_add(kChunk);
        if (begin >= count || failed.load()) {
          return;
        }
        const std::size_t end = std::min(count, begin + kChunk);
        for (std::size_t i = begin; i < end; ++i) {
          body(i);
        }
      }
    } catch (...) {
      if (!failed.exchange(true)) {
        failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) {
    pool.emplace_back(worker);
  }
  worker();
  for (auto& th : pool) {
    th.join();
  }
  if (failure) {
    std::rethrow_exception(failure);
  }
}

/// Pairwise summation; the association order depends only on the length.
[[nodiscard]] inline double pairwise_sum(std::span<const double> xs) {
  if (xs.size() <= 8) {
    double s = 0.0;
    for (double x : xs) {
      s += x;
    }
    return s;
  }
  const std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

struct MeanStderr {
  double mean = 0.0;
  double stderr_ = 0.0;
};

/// Sample mean and standard error sd / sqrt(N) with a two-pass variance.
[[nodiscard]] inline MeanStderr mean_stderr(std::span<const double> xs) {
  const auto n = static_cast<double>(xs.size());
  if (xs.empty()) {
    return {};
  }
  const double mean = pairwise_sum(xs) / n;
  if (xs.size() < 2) {
    return {mean, 0.0};
  }
  std::vector<double> sq(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double d = xs[i] - mean;
    sq[i] = d * d;
  }
  const double var = pairwise_sum(sq) / (n - 1.0);
  return {mean, std::sqrt(var / n)};
}

}  // namespace kolmo::parallel
