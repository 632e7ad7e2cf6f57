#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "planarfab/kernels.hpp"
#include "planarfab/rng.hpp"
#include "planarfab/tsp.hpp"

using namespace planarfab;
using namespace planarfab::kernels;

namespace {

const KernelTable& simd() { return isa_available(Isa::Avx2) ? avx2_table() : scalar_table(); }

}  // namespace

TEST_CASE("dispatch picks an available ISA and can be forced") {
  const Isa before = active().isa;
  CHECK(isa_available(before));
  force_isa(Isa::Scalar);
  CHECK(active().isa == Isa::Scalar);
  force_isa(before);
  CHECK(active().isa == before);
  MESSAGE("simd variant under test: " << isa_name(simd().isa));
}

TEST_CASE("inverse distance weights: simd equals scalar bit for bit") {
  Rng rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t row_len = 1 + rng.below(40);
    std::vector<std::int32_t> row(row_len);
    for (auto& d : row) d = static_cast<std::int32_t>(rng.below(4) == 0 ? 0 : rng.below(30));
    const std::size_t n = rng.below(70);
    std::vector<std::int32_t> idx(n);
    for (auto& i : idx) i = static_cast<std::int32_t>(rng.below(row_len));
    std::vector<double> a(n + 1, -7.0), b(n + 1, -7.0);
    scalar_table().inverse_distance_weights(row.data(), idx.data(), n, a.data());
    simd().inverse_distance_weights(row.data(), idx.data(), n, b.data());
    for (std::size_t i = 0; i < n; ++i) {
      const std::int32_t d = row[static_cast<std::size_t>(idx[i])];
      CHECK(a[i] == (d == 0 ? 1.0 : 1.0 / d));
      CHECK(a[i] == b[i]);
    }
    CHECK(b[n] == -7.0);
  }
}

TEST_CASE("min_plus: same value and first argmin, including forbidden entries") {
  Rng rng(12);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = rng.below(67);
    std::vector<std::int64_t> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = rng.below(5) == 0 ? kForbidden : static_cast<std::int64_t>(rng.below(20));
      b[i] = static_cast<std::int64_t>(rng.below(6));
    }
    const auto s = scalar_table().min_plus(a.data(), b.data(), n);
    const auto v = simd().min_plus(a.data(), b.data(), n);
    CHECK(s.value == v.value);
    CHECK(s.index == v.index);
    if (n == 0) {
      CHECK(s.index == npos);
      continue;
    }
    std::int64_t best = a[0] + b[0];
    std::size_t at = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (a[i] + b[i] < best) {
        best = a[i] + b[i];
        at = i;
      }
    CHECK(s.value == best);
    CHECK(s.index == at);
  }
}

TEST_CASE("count_equal agrees across variants") {
  Rng rng(13);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = rng.below(100);
    std::vector<std::int32_t> v(n);
    for (auto& x : v) x = static_cast<std::int32_t>(rng.below(4)) - 1;
    const auto key = static_cast<std::int32_t>(rng.below(4)) - 1;
    std::size_t want = 0;
    for (auto x : v) want += x == key;
    CHECK(scalar_table().count_equal(v.data(), n, key) == want);
    CHECK(simd().count_equal(v.data(), n, key) == want);
  }
}
