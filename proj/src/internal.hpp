#pragma once

#include <algorithm>
#include <cmath>
#include <atomic>
#include <cstdio>
#include <string>
#include <exception>
#include <thread>
#include <vector>

namespace scontract::detail {

// Runs body(b) for b in [0, blocks) on up to `workers` threads. Each block
// must write only to its own slot; the first exception (by block index) is
// rethrown after all threads join.
template <class Body>
void parallel_blocks(long blocks, int workers, Body&& body) {
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(std::max(0L, blocks)));
  std::atomic<long> next{0};
  auto run = [&]() {
    for (long b = next++; b < blocks; b = next++) {
      try {
        body(b);
      } catch (...) {
        errors[static_cast<std::size_t>(b)] = std::current_exception();
      }
    }
  };
  const long threads_wanted = std::min<long>(std::max(1, workers), blocks);
  if (threads_wanted <= 1) {
    run();
  } else {
    std::vector<std::thread> threads;
    for (long w = 0; w < threads_wanted; ++w) threads.emplace_back(run);
    for (auto& t : threads) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// Welford accumulator with Chan's pairwise merge.
struct Moments {
  long n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double v) {
    ++n;
    const double delta = v - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (v - mean);
  }

  void merge(const Moments& o) {
    if (o.n == 0) return;
    if (n == 0) {
      *this = o;
      return;
    }
    const double total = static_cast<double>(n + o.n);
    const double delta = o.mean - mean;
    mean += delta * static_cast<double>(o.n) / total;
    m2 += o.m2 + delta * delta * static_cast<double>(n) * static_cast<double>(o.n) / total;
    n += o.n;
  }

  /// Sample standard deviation over √n; 0 for fewer than two values.
  [[nodiscard]] double std_error() const {
    if (n < 2) return 0.0;
    const double var = std::max(0.0, m2 / static_cast<double>(n - 1));
    return std::sqrt(var / static_cast<double>(n));
  }
};

// Shortest text that round-trips; used for every CSV number.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace scontract::detail
