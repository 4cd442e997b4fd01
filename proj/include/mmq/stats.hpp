#pragma once

// Replication statistics and a deterministic replication runner.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <span>
#include <thread>
#include <vector>

#include "mmq/simulator.hpp"

namespace mmq {

inline constexpr double kZ95 = 1.959963984540054;

struct SampleSummary {
  std::size_t count = 0;
  double mean = 0.0;
  double std_dev = 0.0;
  double std_error = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

// Values are summed in index order, so the result does not depend on how the
// samples were produced.
inline SampleSummary summarize(std::span<const double> samples) {
  SampleSummary s;
  s.count = samples.size();
  if (samples.empty()) return s;
  NeumaierSum total;
  for (const double x : samples) total.add(x);
  s.mean = total.value() / static_cast<double>(s.count);
  if (s.count > 1) {
    NeumaierSum squares;
    for (const double x : samples) squares.add((x - s.mean) * (x - s.mean));
    s.std_dev = std::sqrt(squares.value() / static_cast<double>(s.count - 1));
    s.std_error = s.std_dev / std::sqrt(static_cast<double>(s.count));
  }
  s.ci_low = s.mean - kZ95 * s.std_error;
  s.ci_high = s.mean + kZ95 * s.std_error;
  return s;
}

inline std::size_t resolve_threads(std::size_t requested) {
  if (requested > 0) return requested;
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

// Calls body(r) for r in [0, count) on up to `threads` workers. Bodies must write
// only to their own slot; the first exception is rethrown after all workers stop.
inline void for_each_replication(std::size_t count, std::size_t threads,
                                 const std::function<void(std::size_t)>& body) {
  threads = std::min(resolve_threads(threads), std::max<std::size_t>(count, 1));
  if (threads <= 1) {
    for (std::size_t r = 0; r < count; ++r) body(r);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> workers;
  workers.reserve(threads);
  for (std::size_t w = 0; w < threads; ++w) {
    workers.emplace_back([&] {
      while (!failed.load()) {
        const std::size_t r = next.fetch_add(1);
        if (r >= count) return;
        try {
          body(r);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          failed = true;
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace mmq
