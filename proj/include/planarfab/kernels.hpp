#pragma once

// Data-parallel inner loops shared by the solvers.
//
// Every kernel has a scalar reference implementation and an AVX2 variant.
// The variant is picked once at startup from CPUID; PLANARFAB_SIMD=scalar
// forces the reference path. Both paths produce bit-identical results
// (integer arithmetic, or IEEE division of exactly representable operands),
// which the equivalence tests assert.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string_view>

namespace planarfab::kernels {

enum class Isa { Scalar, Avx2 };

struct MinPlusResult {
  std::int64_t value;
  std::size_t index;  // first index attaining value; npos when empty
};

inline constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

struct KernelTable {
  Isa isa;
  // out[i] = 1 / max(row[idx[i]], 1)
  void (*inverse_distance_weights)(const std::int32_t* row, const std::int32_t* idx, std::size_t n,
                                   double* out);
  // min_i a[i] + b[i], first argmin
  MinPlusResult (*min_plus)(const std::int64_t* a, const std::int64_t* b, std::size_t n);
  // #{i : v[i] == key}
  std::size_t (*count_equal)(const std::int32_t* v, std::size_t n, std::int32_t key);
};

const KernelTable& scalar_table() noexcept;
const KernelTable& avx2_table() noexcept;

bool isa_available(Isa isa) noexcept;
std::string_view isa_name(Isa isa) noexcept;

/// The table used by the library. Selected lazily on first call.
const KernelTable& active() noexcept;

/// Override the active table (tests, benchmarks). Falls back to scalar when
/// the requested ISA is not supported by the host.
void force_isa(Isa isa) noexcept;

inline void inverse_distance_weights(std::span<const std::int32_t> row,
                                     std::span<const std::int32_t> idx, std::span<double> out) {
  active().inverse_distance_weights(row.data(), idx.data(), idx.size(), out.data());
}

inline MinPlusResult min_plus(std::span<const std::int64_t> a, std::span<const std::int64_t> b) {
  return active().min_plus(a.data(), b.data(), a.size() < b.size() ? a.size() : b.size());
}

inline std::size_t count_equal(std::span<const std::int32_t> v, std::int32_t key) {
  return active().count_equal(v.data(), v.size(), key);
}

}  // namespace planarfab::kernels
