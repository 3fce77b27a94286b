#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace cascade {

/// SplitMix64 finalizer; used to derive independent seeds from a master seed.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for sub-stream `index` of `master`. Stable across platforms.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

/// Random stream with portable variate generation.
///
/// Only the raw 64-bit engine output is consumed; all continuous variates
/// are built here so that a given seed yields the same sequence with any
/// standard library.
class RandomStream {
public:
  explicit RandomStream(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  /// Uniform on [0, 1).
  double uniform() noexcept {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Uniform on (0, 1].
  double uniform_open_low() noexcept { return 1.0 - uniform(); }

  /// Exponential with the given mean.
  double exponential(double mean) noexcept { return -mean * std::log(uniform_open_low()); }

  /// Standard normal via Box-Muller (one variate per call; the pair is cached).
  double normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform_open_low()));
    const double phi = 2.0 * std::numbers::pi * uniform();
    spare_ = r * std::sin(phi);
    has_spare_ = true;
    return r * std::cos(phi);
  }

  /// Number of Bernoulli(p) trials up to and including the first success.
  /// Returns 0 when p == 0 (never succeeds); callers apply their own caps.
  std::uint64_t geometric_trials(double p) noexcept {
    if (p >= 1.0) return 1;
    if (p <= 0.0) return 0;
    const double k = std::floor(std::log(uniform_open_low()) / std::log1p(-p));
    if (k >= 1.8e19) return 0;
    return static_cast<std::uint64_t>(k) + 1;
  }

  std::mt19937_64& engine() noexcept { return engine_; }

private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace cascade
