#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "planarfab/error.hpp"
#include "planarfab/packing.hpp"
#include "support.hpp"

using namespace planarfab;

namespace {

PackingConfig cfg(int tiles, int disp, int d_max, int m_max) {
  PackingConfig c;
  c.n_tiles = tiles;
  c.n_dispensers = disp;
  c.d_max = d_max;
  c.m_max = m_max;
  c.time_limit_s = 5;
  return c;
}

std::int64_t scaled_max(const Packing& p, int m_max) {
  auto [loads, L] = scaled_loads(p, m_max);
  (void)L;
  return loads.empty() ? 0 : *std::max_element(loads.begin(), loads.end());
}

}  // namespace

TEST_CASE("single drug, single tile") {
  const auto p = pack_min_load({10}, cfg(1, 1, 4, 4));
  CHECK(p.z == std::vector<int>{1});
  CHECK(p.pi[0] == 10.0);
  CHECK(p.mu_max == 10.0);
  CHECK(p.exact);
}

TEST_CASE("two drugs split across two tiles") {
  const auto c = cfg(2, 3, 2, 2);
  const auto p = pack_min_load({9, 3}, c);
  CHECK(p.z == std::vector<int>{2, 1});
  CHECK(p.tiles == std::vector<std::vector<DrugId>>{{0}, {0, 1}});
  CHECK(p.mu_max == 7.5);
  CHECK(check_packing(p, c).empty());
  CHECK(scaled_max(p, 2) == pft::brute_min_load({9, 3}, 2, 3, 2, 2));
}

TEST_CASE("exact mode matches exhaustive enumeration on small instances") {
  Rng rng(21);
  for (int trial = 0; trial < 150; ++trial) {
    const int G = static_cast<int>(rng.between(1, 6));
    const int tiles = static_cast<int>(rng.between(1, trial < 120 ? 4 : 6));
    const int d_max = static_cast<int>(rng.between(1, 3));
    if (tiles * d_max < G) continue;
    const int disp = static_cast<int>(rng.between(G, std::min(10, tiles * d_max)));
    const int m_max = static_cast<int>(rng.between(1, 3));
    DemandVector u(static_cast<std::size_t>(G));
    for (auto& x : u) x = rng.below(5) == 0 ? 0 : rng.between(1, 40);
    const auto c = cfg(tiles, disp, d_max, m_max);
    const auto p = pack_min_load(u, c);
    CAPTURE(trial);
    REQUIRE(p.exact);
    CHECK(check_packing(p, c).empty());
    CHECK(scaled_max(p, m_max) == pft::brute_min_load(u, tiles, disp, d_max, m_max));
    CHECK(p.lower_bound <= p.mu_max + 1e-9);
  }
}

TEST_CASE("more dispensers never raise the optimum") {
  Rng rng(22);
  for (int trial = 0; trial < 40; ++trial) {
    const int G = static_cast<int>(rng.between(2, 5));
    DemandVector u(static_cast<std::size_t>(G));
    for (auto& x : u) x = rng.between(1, 30);
    double prev = 1e300;
    for (int disp = G; disp <= G + 4; ++disp) {
      const auto p = pack_min_load(u, cfg(4, disp, 3, 3));
      REQUIRE(p.exact);
      CHECK(p.mu_max <= prev + 1e-9);
      prev = p.mu_max;
    }
  }
}

TEST_CASE("zero-demand drugs still get a dispenser") {
  const auto c = cfg(2, 3, 2, 2);
  const auto p = pack_min_load({0, 8, 0}, c);
  CHECK(p.z[0] == 1);
  CHECK(p.z[2] == 1);
  CHECK(p.pi[0] == 0.0);
  CHECK(check_packing(p, c).empty());
}

TEST_CASE("infeasible configurations") {
  CHECK_THROWS_AS(pack_min_load({1, 1, 1}, cfg(3, 2, 1, 1)), InfeasibleError);
  CHECK_THROWS_AS(pack_min_load({1, 1, 1}, cfg(1, 3, 2, 1)), InfeasibleError);
  CHECK_FALSE(packing_feasibility(3, cfg(3, 2, 1, 1)).empty());
}

TEST_CASE("heuristic mode stays valid and above its certified bound") {
  Rng rng(23);
  for (int trial = 0; trial < 5; ++trial) {
    DemandVector u(30);
    for (auto& x : u) x = rng.between(0, 500);
    auto c = cfg(20, 45, 4, 3);
    c.time_limit_s = 0.5;
    c.seed = static_cast<std::uint64_t>(trial);
    const auto p = pack_min_load(u, c);
    CHECK_FALSE(p.exact);
    CHECK(check_packing(p, c).empty());
    CHECK(p.lower_bound <= p.mu_max + 1e-9);
  }
}

TEST_CASE("correlation stage: the three pairings") {
  const auto c = cfg(2, 4, 2, 1);
  const auto s1 = pack_min_load({5, 5, 5, 5}, c);
  std::vector<std::vector<double>> o(4, std::vector<double>(4, -0.1));
  for (int i = 0; i < 4; ++i) o[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = 0;
  o[0][1] = o[1][0] = 0.5;
  o[2][3] = o[3][2] = 0.4;
  const auto s2 = pack_correlation(s1, o, c);
  CHECK(s2.tiles == std::vector<std::vector<DrugId>>{{0, 1}, {2, 3}});
  CHECK(correlation_score(s2, o) == doctest::Approx(0.9));
  CHECK(s2.mu_max == s1.mu_max);
}

TEST_CASE("correlation stage on a single used tile is the identity") {
  const auto c = cfg(1, 3, 3, 1);
  const auto s1 = pack_min_load({3, 4, 5}, c);
  std::vector<std::vector<double>> o = {{0, 0.2, 0.1}, {0.2, 0, -0.3}, {0.1, -0.3, 0}};
  const auto s2 = pack_correlation(s1, o, c);
  CHECK(s2.tiles == s1.tiles);
  CHECK(correlation_score(s2, o) == doctest::Approx(0.0));
}

TEST_CASE("correlation stage preserves z, pi and the load cap, and never loses score") {
  Rng rng(24);
  for (int trial = 0; trial < 60; ++trial) {
    const int G = static_cast<int>(rng.between(3, trial < 40 ? 8 : 16));
    DemandVector u(static_cast<std::size_t>(G));
    for (auto& x : u) x = rng.between(1, 60);
    auto c = cfg(static_cast<int>(rng.between((G + 2) / 3, G)), G + static_cast<int>(rng.below(4)), 3, 2);
    c.time_limit_s = 0.3;
    if (c.n_tiles * c.d_max < G) continue;
    c.n_dispensers = std::min(c.n_dispensers, c.n_tiles * c.d_max);
    std::vector<std::vector<double>> o(static_cast<std::size_t>(G), std::vector<double>(static_cast<std::size_t>(G), 0));
    for (int a = 0; a < G; ++a)
      for (int b = a + 1; b < G; ++b)
        o[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = o[static_cast<std::size_t>(b)][static_cast<std::size_t>(a)] =
            std::round((rng.uniform() * 2 - 1) * 100) / 100;
    const auto s1 = pack_min_load(u, c);
    const auto s2 = pack_correlation(s1, o, c);
    CAPTURE(trial);
    CHECK(s2.z == s1.z);
    CHECK(s2.pi == s1.pi);
    CHECK(s2.mu_max <= s1.mu_max + 1e-9);
    CHECK(correlation_score(s2, o) >= correlation_score(s1, o) - 1e-12);
    CHECK(check_packing(s2, c).empty());
  }
}

TEST_CASE("tile utilization") {
  const auto p = make_packing({{0, 1}}, {9, 3});
  // make_packing derives z from the tiles: z = 1 each
  const auto tu = tile_utilization(p);
  REQUIRE(tu.size() == 1);
  CHECK(tu[0].mu == doctest::Approx(12.0));

  const auto q = make_packing({{0}, {0, 1}}, {9, 3});
  const auto tq = tile_utilization(q);
  CHECK(tq[1].parts.size() == 2);
  CHECK(tq[1].parts[0].second == doctest::Approx(4.5));
  CHECK(tq[1].parts[1].second == doctest::Approx(3.0));
  CHECK(tq[1].mu == doctest::Approx(7.5));

  Rng rng(25);
  for (int trial = 0; trial < 20; ++trial) {
    DemandVector u(6);
    for (auto& x : u) x = rng.between(0, 50);
    const auto r = pack_min_load(u, cfg(4, 9, 3, 3));
    for (const auto& t : tile_utilization(r)) {
      double s = 0;
      for (DrugId g : r.tiles[static_cast<std::size_t>(t.tile)])
        s += static_cast<double>(u[static_cast<std::size_t>(g)]) / r.z[static_cast<std::size_t>(g)];
      CHECK(t.mu == doctest::Approx(s));
    }
  }
}

TEST_CASE("checker flags empty tiles when the strict reading is requested") {
  auto c = cfg(3, 2, 2, 2);
  const auto p = make_packing({{0}, {1}, {}}, {4, 4});
  CHECK(check_packing(p, c).empty());
  c.allow_empty_tiles = false;
  CHECK_FALSE(check_packing(p, c).empty());
}
