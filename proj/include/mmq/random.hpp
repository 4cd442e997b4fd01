#pragma once

// Counter-based random streams.
//
// Every stream is identified by (seed, replication, stream id). The k-th draw of a
// stream is a keyed hash of k, so streams never share state and a replication can
// be regenerated in isolation on any worker.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace mmq {

inline constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Stream ids used by the simulators. Values are part of the reproducibility
// contract: changing them changes every published number.
enum class Stream : std::uint64_t {
  Initial = 1,
  Environment = 2,
  Candidate = 3,
  Selection = 4,
  Gaussian = 5,
  Bridge = 6,
  Test = 99,
};

class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t seed, std::uint64_t replication, std::uint64_t stream) noexcept
      : key_(mix64(mix64(mix64(seed ^ 0x5851F42D4C957F2DULL) ^ (replication * 0x9E3779B97F4A7C15ULL)) ^
                   (stream * 0xD1B54A32D192ED03ULL))) {}

  CounterRng(std::uint64_t seed, std::uint64_t replication, Stream stream) noexcept
      : CounterRng(seed, replication, static_cast<std::uint64_t>(stream)) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept { return mix64(key_ ^ mix64(++counter_)); }

  std::uint64_t counter() const noexcept { return counter_; }

  // Uniform on the open interval (0, 1).
  double uniform() noexcept { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

  // Inverse-CDF exponential draw; rate must be positive.
  double exponential(double rate) noexcept { return -std::log(uniform()) / rate; }

  // Box-Muller; the second variate of each pair is cached.
  double normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double theta = 2.0 * std::numbers::pi * uniform();
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace mmq
