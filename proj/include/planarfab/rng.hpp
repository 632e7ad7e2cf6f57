#pragma once

// Reproducible random streams.
//
// Engine: std::mt19937_64 (bit-exact across standard libraries).
// Uniform doubles: top 53 bits of one engine draw, scaled by 2^-53.
// Normal deviates: Box-Muller on two uniforms, caching the second deviate.
// Substreams: seed = splitmix64(master ^ splitmix64(tag) ^ splitmix64(i) ...).
//
// std::uniform_real_distribution and std::normal_distribution are avoided
// because their output is implementation defined.

#include <cstdint>
#include <random>
#include <string_view>

namespace planarfab {

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// FNV-1a of a stream name; used to key named substreams ("ga", "lns", ...).
std::uint64_t stream_tag(std::string_view name) noexcept;

/// Derive an independent seed from a master seed and up to two indices.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag, std::uint64_t a = 0,
                          std::uint64_t b = 0) noexcept;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n). Lemire-free simple rejection to stay unbiased.
  std::uint64_t below(std::uint64_t n);

  /// Uniform integer in [lo, hi].
  std::int64_t between(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  /// Standard normal deviate.
  double normal();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace planarfab
