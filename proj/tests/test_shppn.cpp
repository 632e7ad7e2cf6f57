#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "planarfab/error.hpp"
#include "planarfab/shppn.hpp"
#include "planarfab/tsp.hpp"
#include "support.hpp"

using namespace planarfab;

namespace {

CostMatrix random_matrix(Rng& rng, int n, Cost hi, bool symmetric = false) {
  CostMatrix c(static_cast<std::size_t>(n), std::vector<Cost>(static_cast<std::size_t>(n), 0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) c[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = rng.between(0, hi);
  if (symmetric)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < i; ++j) c[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = c[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
  return c;
}

GtspInstance random_gtsp(Rng& rng, std::vector<int> sizes, Cost hi) {
  GtspInstance g;
  int v = 0;
  for (int s : sizes) {
    std::vector<int> cl;
    for (int k = 0; k < s; ++k) cl.push_back(v++);
    g.clusters.push_back(cl);
  }
  g.cost = random_matrix(rng, v, hi);
  return g;
}

void check_cover(const GtspInstance& g, const GtspSolution& s) {
  REQUIRE(s.vertices.size() == g.clusters.size());
  std::vector<int> hit(g.clusters.size(), 0);
  for (int v : s.vertices)
    for (std::size_t c = 0; c < g.clusters.size(); ++c)
      hit[c] += std::count(g.clusters[c].begin(), g.clusters[c].end(), v) > 0;
  for (int h : hit) CHECK(h == 1);
  Cost c = 0;
  for (std::size_t i = 0; i + 1 < s.vertices.size(); ++i) c += g.cost[static_cast<std::size_t>(s.vertices[i])][static_cast<std::size_t>(s.vertices[i + 1])];
  if (!g.path && s.vertices.size() > 1) c += g.cost[static_cast<std::size_t>(s.vertices.back())][static_cast<std::size_t>(s.vertices.front())];
  CHECK(c == s.cost);
  if (g.path) {
    CHECK(std::count(g.clusters[static_cast<std::size_t>(g.path->first)].begin(), g.clusters[static_cast<std::size_t>(g.path->first)].end(), s.vertices.front()) == 1);
    CHECK(std::count(g.clusters[static_cast<std::size_t>(g.path->second)].begin(), g.clusters[static_cast<std::size_t>(g.path->second)].end(), s.vertices.back()) == 1);
  }
}

}  // namespace

TEST_CASE("tsp: tiny closed forms") {
  const CostMatrix two = {{0, 4}, {7, 0}};
  CHECK(solve_tsp(two).cost == 11);
  const CostMatrix tri = {{0, 3, 5}, {3, 0, 4}, {5, 4, 0}};
  CHECK(solve_tsp(tri).cost == 12);
}

TEST_CASE("tsp: n=9 against permutation brute force") {
  Rng rng(31);
  for (int seed = 0; seed < 200; ++seed) {
    const auto c = random_matrix(rng, 9, 50);
    const auto want = pft::brute_tsp(c);
    const auto hk = solve_tsp(c, TspMethod::HeldKarp);
    CHECK(hk.cost == want);
    CHECK(tour_cost(c, hk.order) == want);
    CHECK(solve_tsp(c, TspMethod::BranchAndBound).cost == want);
  }
}

TEST_CASE("tsp: DP and branch-and-bound agree on 12..18 vertices") {
  Rng rng(32);
  for (int n = 12; n <= 18; ++n) {
    const auto c = random_matrix(rng, n, 100);
    const auto a = solve_tsp(c, TspMethod::HeldKarp);
    const auto b = solve_tsp(c, TspMethod::BranchAndBound);
    CAPTURE(n);
    CHECK(a.cost == b.cost);
    CHECK(assignment_lower_bound(c) <= a.cost);
  }
}

TEST_CASE("tsp: size guard and forbidden arcs") {
  CHECK_THROWS_AS(solve_tsp(CostMatrix(26, std::vector<Cost>(26, 1))), LimitError);
  CostMatrix c = {{0, kForbidden, kForbidden}, {1, 0, 1}, {1, 1, 0}};
  CHECK_THROWS_AS(solve_tsp(c), InfeasibleError);
}

TEST_CASE("noon-bean: singleton clusters degenerate to plain TSP") {
  Rng rng(33);
  for (int t = 0; t < 30; ++t) {
    auto g = random_gtsp(rng, {1, 1, 1, 1, 1, 1}, 20);
    const auto s = solve_gtsp(g);
    CHECK(s.cost == pft::brute_tsp(g.cost));
    check_cover(g, s);
  }
}

TEST_CASE("noon-bean: clusters {2,1,2} against brute force") {
  Rng rng(34);
  for (int seed = 0; seed < 100; ++seed) {
    auto g = random_gtsp(rng, {2, 1, 2}, 10);
    const auto s = solve_gtsp(g);
    CHECK(s.cost == pft::brute_gtsp(g));
    check_cover(g, s);
    const auto t = noon_bean(g);
    CHECK(t.shift >= 1);
    CHECK(t.virtual_vertex == -1);
  }
}

TEST_CASE("noon-bean: path instances with the virtual vertex") {
  Rng rng(35);
  for (int seed = 0; seed < 150; ++seed) {
    std::vector<int> sizes;
    const int k = static_cast<int>(rng.between(2, 4));
    int total = 0;
    for (int i = 0; i < k; ++i) {
      sizes.push_back(static_cast<int>(rng.between(1, 3)));
      total += sizes.back();
    }
    if (total > 10) continue;
    auto g = random_gtsp(rng, sizes, 20);
    const int a = static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
    int b = static_cast<int>(rng.below(static_cast<std::uint64_t>(k - 1)));
    if (b >= a) ++b;
    g.path = std::pair{a, b};
    const auto t = noon_bean(g);
    CHECK(t.virtual_vertex == total);
    const auto s = solve_gtsp(g);
    CHECK(s.cost == pft::brute_gtsp(g));
    check_cover(g, s);
  }
}

TEST_CASE("noon-bean: invalid instances are reported") {
  GtspInstance g;
  g.clusters = {{0}, {0, 1}};
  g.cost = {{0, 1}, {1, 0}};
  CHECK_FALSE(check_gtsp(g).empty());
  g.clusters = {{0}, {}};
  CHECK_FALSE(check_gtsp(g).empty());
}

TEST_CASE("kappa: placement walkthrough orders") {
  const auto f = pft::desk4();
  const PlacementIndex idx(f.placement, f.catalog.size());
  CHECK(kappa(f.orders[0], idx).kappa == 3);
  CHECK(kappa(f.orders[1], idx).kappa == 6);
  CHECK(kappa(f.orders[2], idx).kappa == 3);
  for (KappaMethod m : {KappaMethod::Enumeration, KappaMethod::NoonBean, KappaMethod::ClusterDp}) {
    KappaOptions o;
    o.force = m;
    CHECK(kappa(f.orders[0], idx, o).kappa == 3);
    CHECK(kappa(f.orders[1], idx, o).kappa == 6);
  }
}

TEST_CASE("kappa: every method equals brute force on random 5-drug orders") {
  Rng rng(36);
  for (int trial = 0; trial < 40; ++trial) {
    const Layout l = build_layout(Topology::Square, {5, 5}, static_cast<int>(rng.between(1, 3)));
    const Placement p = pft::random_placement(rng, l, 8, 3, static_cast<int>(rng.between(0, 10)));
    const PlacementIndex idx(p, 8);
    const auto orders = pft::random_orders(rng, 3, 8, 1, 5, 1, 9);
    for (const auto& o : orders) {
      const Ticks want = pft::brute_kappa(o, idx);
      for (KappaMethod m : {KappaMethod::Enumeration, KappaMethod::NoonBean, KappaMethod::ClusterDp}) {
        KappaOptions opt;
        opt.force = m;
        const auto r = kappa(o, idx, opt);
        CAPTURE(static_cast<int>(m));
        CHECK(r.kappa == want);
        // the reported walk is consistent with its length
        REQUIRE(r.cells.size() == o.items.size() + 2);
        Ticks len = 0;
        for (std::size_t i = 0; i + 1 < r.cells.size(); ++i) len += idx.dist(r.cells[i], r.cells[i + 1]);
        CHECK(len == r.kappa);
        CHECK(idx.is_interface(r.cells.front()));
        CHECK(idx.is_interface(r.cells.back()));
        for (std::size_t i = 0; i < r.drugs.size(); ++i) CHECK(idx.hosts(r.cells[i + 1], r.drugs[i]));
      }
    }
  }
}

TEST_CASE("kappa: single-cluster closed form and metric sanity bound") {
  Rng rng(37);
  for (int trial = 0; trial < 30; ++trial) {
    const Layout l = build_layout(Topology::Square, {4, 5}, 2);
    const Placement p = pft::random_placement(rng, l, 6, 2, 6);
    const PlacementIndex idx(p, 6);
    const Order one{1, {{2, 5}}};
    Ticks want = std::numeric_limits<Ticks>::max();
    for (int s : idx.interfaces())
      for (int c : idx.cells_of(2))
        for (int e : idx.interfaces()) want = std::min<Ticks>(want, idx.dist(s, c) + idx.dist(c, e));
    CHECK(kappa(one, idx).kappa == want);

    for (const auto& o : pft::random_orders(rng, 4, 6, 1, 4, 1, 5)) {
      const Ticks k = kappa(o, idx).kappa;
      for (const auto& it : o.items) {
        Ticks near = std::numeric_limits<Ticks>::max();
        for (int i : idx.interfaces())
          for (int c : idx.cells_of(it.drug)) near = std::min<Ticks>(near, idx.dist(i, c));
        CHECK(k >= 2 * near);
      }
    }
  }
}

TEST_CASE("kappa: an extra alternative never hurts") {
  Rng rng(38);
  for (int trial = 0; trial < 40; ++trial) {
    const Layout l = build_layout(Topology::Square, {4, 4}, 2);
    Placement p = pft::random_placement(rng, l, 6, 3, 0);
    const auto orders = pft::random_orders(rng, 3, 6, 1, 4, 1, 5);
    std::vector<Ticks> before;
    {
      const PlacementIndex idx(p, 6);
      for (const auto& o : orders) before.push_back(kappa(o, idx).kappa);
    }
    // add one more copy of a random drug somewhere with room
    const int g = static_cast<int>(rng.below(6));
    for (auto& c : p.cells)
      if (c.kind == CellKind::Tile && c.drugs.size() < 3 && !std::binary_search(c.drugs.begin(), c.drugs.end(), g)) {
        c.drugs.push_back(g);
        std::sort(c.drugs.begin(), c.drugs.end());
        break;
      }
    const PlacementIndex idx(p, 6);
    for (std::size_t i = 0; i < orders.size(); ++i) CHECK(kappa(orders[i], idx).kappa <= before[i]);
  }
}

TEST_CASE("kappa: missing dispenser or interface") {
  auto f = pft::desk4();
  const PlacementIndex idx(f.placement, f.catalog.size() + 1);
  CHECK_THROWS_AS(kappa(Order{9, {{f.catalog.size(), 1}}}, idx), InfeasibleError);

  Placement p = f.placement;
  for (auto& c : p.cells)
    if (c.kind == CellKind::Interface) {
      c.kind = CellKind::Tile;
      c.drugs = {0};
    }
  p.layout.n_inter = 0;
  const PlacementIndex none(p, f.catalog.size());
  CHECK_THROWS_AS(kappa(f.orders[0], none), InfeasibleError);
}

TEST_CASE("order time bound") {
  const auto f = pft::desk4(5);
  const PlacementIndex idx(f.placement, f.catalog.size());
  CHECK(order_time_bound(f.orders[0], idx, 2) == 17);

  // every drug on the tile next to the only interface
  Placement p;
  p.layout = build_layout(Topology::Line, {3, 0}, 1);
  p.cells = {{{1, 1}, CellKind::Interface, {}}, {{1, 2}, CellKind::Tile, {0, 1, 2}}, {{1, 3}, CellKind::Tile, {3}}};
  const PlacementIndex li(p, 4);
  const Order o{1, {{0, 4}, {1, 6}, {2, 3}}};
  CHECK(order_time_bound(o, li, 2) == 2 * 2 + 2 + 13);

  Rng rng(39);
  const Layout l = build_layout(Topology::Square, {4, 4}, 2);
  const Placement rp = pft::random_placement(rng, l, 6, 3, 4);
  const PlacementIndex ri(rp, 6);
  for (const auto& ord : pft::random_orders(rng, 20, 6, 1, 4, 1, 20))
    CHECK(order_time_bound(ord, ri, 3) == 6 + pft::brute_kappa(ord, ri) + ord.total_duration());
}
