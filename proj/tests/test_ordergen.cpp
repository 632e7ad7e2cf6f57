#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "planarfab/error.hpp"
#include "planarfab/ordergen.hpp"
#include "support.hpp"

using namespace planarfab;

namespace {

DrugCatalog two(double p1, double p2, double r) { return {{"a", "b"}, {p1, p2}, {{0, r}, {r, 0}}}; }

struct Joint {
  double p1 = 0, p2 = 0, p12 = 0;
  double phi() const { return (p12 - p1 * p2) / std::sqrt(p1 * (1 - p1) * p2 * (1 - p2)); }
};

Joint sample_joint(const DrugCatalog& c, CorrelationMode mode, int n, std::uint64_t seed) {
  CopulaSampler s(c, mode);
  Rng rng(seed);
  std::vector<char> present;
  Joint j;
  for (int i = 0; i < n; ++i) {
    s.sample(rng, present);
    j.p1 += present[0];
    j.p2 += present[1];
    j.p12 += present[0] && present[1];
  }
  j.p1 /= n;
  j.p2 /= n;
  j.p12 /= n;
  return j;
}

}  // namespace

TEST_CASE("forced marginal and forced size") {
  OrderGenParams p;
  p.n_orders = 200;
  p.size = {1, 1};
  p.seed = 3;
  const auto set = sample_orders(two(1.0, 0.0, 0.0), p);
  REQUIRE(set.orders.size() == 200);
  for (const auto& o : set.orders) {
    REQUIRE(o.items.size() == 1);
    CHECK(o.items[0].drug == 0);
    CHECK(o.items[0].duration == 100);
  }
}

TEST_CASE("independent drugs: joint frequency matches the product measure") {
  const auto j = sample_joint(two(0.5, 0.5, 0.0), CorrelationMode::Raw, 100000, 5);
  CHECK(std::abs(j.p12 - 0.25) <= 0.02);
  CHECK(std::abs(j.p1 - 0.5) <= 0.02);
}

TEST_CASE("tetrachoric mode reproduces the binary correlation, raw mode attenuates it") {
  const auto c = two(0.3, 0.2, 0.4);
  const auto t = sample_joint(c, CorrelationMode::Tetrachoric, 100000, 7);
  CHECK(std::abs(t.phi() - 0.4) <= 0.02);
  const auto r = sample_joint(c, CorrelationMode::Raw, 100000, 7);
  CHECK(r.phi() < 0.4 - 0.05);
  CHECK(std::abs(r.p1 - 0.3) <= 0.02);
  CHECK(std::abs(r.p2 - 0.2) <= 0.02);
}

TEST_CASE("bivariate normal cdf at the origin has a closed form") {
  for (double rho : {-0.9, -0.5, 0.0, 0.3, 0.8, 0.99}) {
    const double want = 0.25 + std::asin(rho) / (2 * std::numbers::pi);
    CHECK(bivariate_normal_cdf(0, 0, rho) == doctest::Approx(want).epsilon(1e-9));
  }
  CHECK(bivariate_normal_cdf(1.0, 0.5, 0.0) == doctest::Approx(0.8413447460685429 * 0.6914624612740131).epsilon(1e-9));
}

TEST_CASE("tetrachoric inverts the induced phi coefficient") {
  for (double rho : {-0.4, 0.1, 0.5, 0.7})
    for (auto [p1, p2] : {std::pair{0.3, 0.2}, std::pair{0.5, 0.5}, std::pair{0.1, 0.4}}) {
      // phi produced by thresholding a latent normal with correlation rho
      auto quant = [](double p) {
        // invert Phi by bisection
        double lo = -10, hi = 10;
        for (int i = 0; i < 200; ++i) {
          const double mid = 0.5 * (lo + hi);
          (0.5 * std::erfc(-mid / std::sqrt(2.0)) < p ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
      };
      const double p12 = bivariate_normal_cdf(quant(p1), quant(p2), rho);
      const double phi = (p12 - p1 * p2) / std::sqrt(p1 * (1 - p1) * p2 * (1 - p2));
      CHECK(tetrachoric(phi, p1, p2) == doctest::Approx(rho).epsilon(1e-6));
    }
}

TEST_CASE("non-PSD correlation is repaired to a unit-diagonal PSD matrix") {
  std::vector<double> m = {1, 0.9, -0.9, 0.9, 1, 0.9, -0.9, 0.9, 1};
  CHECK(repair_correlation(m, 3));
  Eigen::Map<Eigen::Matrix3d> M(m.data());
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(M);
  CHECK(es.eigenvalues().minCoeff() >= -1e-9);
  for (int i = 0; i < 3; ++i) CHECK(M(i, i) == doctest::Approx(1.0));
  CHECK(M(0, 1) == doctest::Approx(M(1, 0)));

  DrugCatalog c{{"a", "b", "c"}, {0.3, 0.3, 0.3}, {{0, 0.9, -0.9}, {0.9, 0, 0.9}, {-0.9, 0.9, 0}}};
  CopulaSampler s(c, CorrelationMode::Raw);
  CHECK(s.repaired());

  std::vector<double> ok = {1, 0.2, 0.2, 1};
  CHECK_FALSE(repair_correlation(ok, 2));
}

TEST_CASE("order size range is enforced") {
  const auto cat = demo_catalog(30, 9);
  OrderGenParams p;
  p.n_orders = 2000;
  p.size = {3, 8};
  p.seed = 9;
  for (const auto& o : sample_orders(cat, p).orders) {
    CHECK(o.items.size() >= 3);
    CHECK(o.items.size() <= 8);
    CHECK_NOTHROW(check_order(o, cat.size()));
  }
}

TEST_CASE("generation is deterministic per seed") {
  const auto cat = demo_catalog(15, 1);
  OrderGenParams p;
  p.n_orders = 300;
  p.size = {2, 6};
  p.duration.dose_multiplier = true;
  p.seed = 77;
  const auto a = sample_orders(cat, p);
  const auto b = sample_orders(cat, p);
  CHECK(a.orders == b.orders);
  p.seed = 78;
  CHECK_FALSE(sample_orders(cat, p).orders == a.orders);
  for (const auto& o : a.orders)
    for (const auto& it : o.items) CHECK((it.duration == 100 || it.duration == 200 || it.duration == 300));
}

TEST_CASE("invalid generator parameters") {
  const auto cat = demo_catalog(5, 1);
  OrderGenParams p;
  p.n_orders = 3;
  p.size = {4, 2};
  CHECK_THROWS_AS(sample_orders(cat, p), ConfigError);
  p.size = {6, 9};
  CHECK_THROWS_AS(sample_orders(cat, p), ConfigError);
  p.size = {2, 2};
  CHECK_THROWS_AS(sample_orders(two(1.0, 1.0, 0.0), [&] {
                    auto q = p;
                    q.size = {1, 1};
                    return q;
                  }()),
                  InfeasibleError);
}

TEST_CASE("demand estimation") {
  CHECK(estimate_demand({}, 3) == DemandVector{0, 0, 0});
  const std::vector<Order> two_orders = {{1, {{0, 5}}}, {2, {{0, 5}, {1, 2}}}};
  CHECK(estimate_demand(two_orders, 2) == DemandVector{10, 2});

  Rng rng(4);
  const auto a = pft::random_orders(rng, 50, 8, 1, 5, 1, 30);
  const auto b = pft::random_orders(rng, 30, 8, 1, 5, 1, 30);
  DemandVector oracle(8, 0);
  for (const auto& o : a)
    for (const auto& it : o.items) oracle[static_cast<std::size_t>(it.drug)] += it.duration;
  const auto da = estimate_demand(a, 8);
  CHECK(da == oracle);
  std::vector<Order> ab = a;
  ab.insert(ab.end(), b.begin(), b.end());
  const auto db = estimate_demand(b, 8), dab = estimate_demand(ab, 8);
  for (int g = 0; g < 8; ++g) CHECK(dab[static_cast<std::size_t>(g)] == da[static_cast<std::size_t>(g)] + db[static_cast<std::size_t>(g)]);
}

TEST_CASE("achieved marginals are reported after size filtering") {
  const std::vector<Order> o = {{1, {{0, 1}}}, {2, {{0, 1}, {1, 1}}}};
  const auto m = achieved_marginals(o, 3);
  CHECK(m[0] == doctest::Approx(1.0));
  CHECK(m[1] == doctest::Approx(0.5));
  CHECK(m[2] == doctest::Approx(0.0));
}
