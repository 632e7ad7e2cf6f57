#include "planarfab/kernels.hpp"

namespace planarfab::kernels {
namespace {

void inverse_distance_weights_scalar(const std::int32_t* row, const std::int32_t* idx,
                                     std::size_t n, double* out) {
  for (std::size_t i = 0; i < n; ++i) {
    const std::int32_t d = row[idx[i]];
    out[i] = 1.0 / static_cast<double>(d < 1 ? 1 : d);
  }
}

MinPlusResult min_plus_scalar(const std::int64_t* a, const std::int64_t* b, std::size_t n) {
  MinPlusResult best{std::numeric_limits<std::int64_t>::max(), npos};
  for (std::size_t i = 0; i < n; ++i) {
    const std::int64_t s = a[i] + b[i];
    if (s < best.value) best = {s, i};
  }
  return best;
}

std::size_t count_equal_scalar(const std::int32_t* v, std::size_t n, std::int32_t key) {
  std::size_t c = 0;
  for (std::size_t i = 0; i < n; ++i) c += (v[i] == key);
  return c;
}

}  // namespace

const KernelTable& scalar_table() noexcept {
  static const KernelTable t{Isa::Scalar, inverse_distance_weights_scalar, min_plus_scalar,
                             count_equal_scalar};
  return t;
}

}  // namespace planarfab::kernels
