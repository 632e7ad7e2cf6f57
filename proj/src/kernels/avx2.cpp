#include "planarfab/kernels.hpp"

#if defined(__x86_64__) || defined(__i386__)
#define PLANARFAB_HAVE_X86 1
#include <immintrin.h>
#else
#define PLANARFAB_HAVE_X86 0
#endif

namespace planarfab::kernels {

#if PLANARFAB_HAVE_X86
namespace {

__attribute__((target("avx2"))) void inverse_distance_weights_avx2(const std::int32_t* row,
                                                                    const std::int32_t* idx,
                                                                    std::size_t n, double* out) {
  const __m128i one_i = _mm_set1_epi32(1);
  const __m256d one = _mm256_set1_pd(1.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m128i ix = _mm_loadu_si128(reinterpret_cast<const __m128i*>(idx + i));
    __m128i d = _mm_i32gather_epi32(row, ix, 4);
    d = _mm_max_epi32(d, one_i);
    _mm256_storeu_pd(out + i, _mm256_div_pd(one, _mm256_cvtepi32_pd(d)));
  }
  for (; i < n; ++i) {
    const std::int32_t d = row[idx[i]];
    out[i] = 1.0 / static_cast<double>(d < 1 ? 1 : d);
  }
}

__attribute__((target("avx2"))) MinPlusResult min_plus_avx2(const std::int64_t* a,
                                                           const std::int64_t* b,
                                                           std::size_t n) {
  MinPlusResult best{std::numeric_limits<std::int64_t>::max(), npos};
  std::size_t i = 0;
  if (n >= 4) {
    __m256i vmin = _mm256_set1_epi64x(std::numeric_limits<std::int64_t>::max());
    __m256i vidx = _mm256_set1_epi64x(-1);
    __m256i cur = _mm256_set_epi64x(3, 2, 1, 0);
    const __m256i step = _mm256_set1_epi64x(4);
    for (; i + 4 <= n; i += 4) {
      const __m256i s = _mm256_add_epi64(_mm256_loadu_si256(reinterpret_cast<const __m256i*>(a + i)),
                                         _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b + i)));
      const __m256i lt = _mm256_cmpgt_epi64(vmin, s);
      vmin = _mm256_blendv_epi8(vmin, s, lt);
      vidx = _mm256_blendv_epi8(vidx, cur, lt);
      cur = _mm256_add_epi64(cur, step);
    }
    alignas(32) std::int64_t mins[4];
    alignas(32) std::int64_t idxs[4];
    _mm256_store_si256(reinterpret_cast<__m256i*>(mins), vmin);
    _mm256_store_si256(reinterpret_cast<__m256i*>(idxs), vidx);
    for (int lane = 0; lane < 4; ++lane) {
      if (idxs[lane] < 0) continue;
      const auto li = static_cast<std::size_t>(idxs[lane]);
      if (mins[lane] < best.value || (mins[lane] == best.value && li < best.index)) {
        best = {mins[lane], li};
      }
    }
  }
  for (; i < n; ++i) {
    const std::int64_t s = a[i] + b[i];
    if (s < best.value) best = {s, i};
  }
  return best;
}

__attribute__((target("avx2,popcnt"))) std::size_t count_equal_avx2(const std::int32_t* v,
                                                                   std::size_t n,
                                                                   std::int32_t key) {
  const __m256i k = _mm256_set1_epi32(key);
  std::size_t c = 0;
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256i x = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(v + i));
    const int mask = _mm256_movemask_ps(_mm256_castsi256_ps(_mm256_cmpeq_epi32(x, k)));
    c += static_cast<std::size_t>(__builtin_popcount(static_cast<unsigned>(mask)));
  }
  for (; i < n; ++i) c += (v[i] == key);
  return c;
}

}  // namespace

const KernelTable& avx2_table() noexcept {
  static const KernelTable t{Isa::Avx2, inverse_distance_weights_avx2, min_plus_avx2,
                             count_equal_avx2};
  return t;
}

#else

const KernelTable& avx2_table() noexcept { return scalar_table(); }

#endif

}  // namespace planarfab::kernels
