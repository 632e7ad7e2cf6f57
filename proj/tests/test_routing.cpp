#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <functional>

#include "planarfab/error.hpp"
#include "planarfab/routing.hpp"
#include "planarfab/scheduler.hpp"
#include "support.hpp"

using namespace planarfab;

namespace {

int at(const Placement& p, int x, int y) {
  for (std::size_t i = 0; i < p.cells.size(); ++i)
    if (p.cells[i].coord == Coord{x, y}) return static_cast<int>(i);
  FAIL("no cell at coordinate");
  return -1;
}

// exhaustive include/exclude over candidates under per-cell capacity
int brute_sites(const Placement& p) {
  const auto cand = resting_candidates(p);
  std::vector<int> used(p.cells.size(), 0);
  int best = 0;
  std::function<void(std::size_t, int)> rec = [&](std::size_t i, int n) {
    if (n + static_cast<int>(cand.size() - i) <= best) return;
    if (i == cand.size()) {
      best = n;
      return;
    }
    const auto& c = cand[i];
    if (used[static_cast<std::size_t>(c.cell_a)] < site_capacity(p, c.cell_a) &&
        used[static_cast<std::size_t>(c.cell_b)] < site_capacity(p, c.cell_b)) {
      ++used[static_cast<std::size_t>(c.cell_a)];
      ++used[static_cast<std::size_t>(c.cell_b)];
      rec(i + 1, n + 1);
      --used[static_cast<std::size_t>(c.cell_a)];
      --used[static_cast<std::size_t>(c.cell_b)];
    }
    rec(i + 1, n);
  };
  rec(0, 0);
  return best;
}

void check_capacity(const Placement& p, const std::vector<RestingSite>& sites) {
  std::vector<int> used(p.cells.size(), 0);
  for (const auto& s : sites) {
    ++used[static_cast<std::size_t>(s.cell_a)];
    ++used[static_cast<std::size_t>(s.cell_b)];
  }
  for (std::size_t c = 0; c < used.size(); ++c) CHECK(used[c] <= site_capacity(p, static_cast<int>(c)));
}

struct Case {
  Placement placement;
  std::vector<Order> orders;
  Schedule schedule;
  int n_drugs = 0;
};

Case random_case(Rng& rng, int movers, int side, int n_orders) {
  Case c;
  c.n_drugs = static_cast<int>(rng.between(4, 10));
  const Layout l = build_layout(Topology::Square, {side, side}, static_cast<int>(rng.between(1, 3)));
  c.placement = pft::random_placement(rng, l, c.n_drugs, 3, static_cast<int>(rng.between(0, 6)));
  c.orders = pft::random_orders(rng, n_orders, c.n_drugs, 1, 4, 1, 10);
  const PlacementIndex idx(c.placement, c.n_drugs);
  ScheduleParams sp;
  sp.n_movers = movers;
  sp.seed = rng.next_u64();
  sp.max_iterations = 100;
  c.schedule = schedule(c.orders, idx, sp).schedule;
  return c;
}

// positions follow the tick model, ops sit on their cell
void check_paths(const MoverPaths& mp, const Schedule& s, const PlacementIndex& idx,
                 const std::vector<RestingSite>& sites) {
  for (std::size_t i = 0; i < s.plan.size(); ++i) {
    const auto& p = s.plan[i];
    for (Ticks t = p.start; t < p.end; ++t) {
      const auto& q = mp.pos[static_cast<std::size_t>(p.mover)][static_cast<std::size_t>(t)];
      CHECK(q.kind == PosKind::Tile);
      CHECK(q.cell == p.cell);
    }
  }
  auto site_has = [&](int site, int cell) {
    const auto& r = sites[static_cast<std::size_t>(site)];
    return r.cell_a == cell || r.cell_b == cell;
  };
  for (const auto& row : mp.pos) {
    REQUIRE(static_cast<Ticks>(row.size()) == mp.horizon);
    for (std::size_t t = 1; t < row.size(); ++t) {
      const auto& a = row[t - 1];
      const auto& b = row[t];
      switch (b.kind) {
        case PosKind::Tile:
          if (a.kind == PosKind::Tile) CHECK(idx.dist(a.cell, b.cell) <= 1);
          else if (a.kind == PosKind::Edge) CHECK(a.other == b.cell);
          else if (a.kind == PosKind::Site) CHECK(site_has(a.other, b.cell));
          break;
        case PosKind::Edge:
          CHECK(idx.dist(b.cell, b.other) == 1);
          CHECK(a.kind == PosKind::Tile);
          CHECK(a.cell == b.cell);
          break;
        case PosKind::Site:
          CHECK(b.cell == -1);
          if (a.kind == PosKind::Site) CHECK(a.other == b.other);
          else CHECK((a.kind == PosKind::Tile && site_has(b.other, a.cell)));
          break;
        case PosKind::Parked: break;
      }
    }
  }
}

// naive per-tick occupancy grid
std::vector<Ticks> grid_conflicts(const MoverPaths& mp, const Schedule& s, int n_cells) {
  std::vector<std::vector<std::vector<int>>> occ(static_cast<std::size_t>(mp.horizon),
                                                 std::vector<std::vector<int>>(static_cast<std::size_t>(n_cells)));
  for (std::size_t m = 0; m < mp.pos.size(); ++m)
    for (std::size_t t = 0; t < mp.pos[m].size(); ++t)
      if (mp.pos[m][t].kind == PosKind::Tile) occ[t][static_cast<std::size_t>(mp.pos[m][t].cell)].push_back(static_cast<int>(m));
  std::vector<Ticks> l(s.plan.size(), 0);
  for (std::size_t i = 0; i < s.plan.size(); ++i) {
    if (s.ops[i].kind != OpKind::Dispense) continue;
    const auto& p = s.plan[i];
    for (Ticks t = p.start; t < p.end && t < mp.horizon; ++t)
      for (int m : occ[static_cast<std::size_t>(t)][static_cast<std::size_t>(p.cell)])
        if (m != p.mover) {
          ++l[i];
          break;
        }
  }
  return l;
}

void check_dag(const PrecedenceDag& dag) {
  CHECK(is_acyclic(dag));
  const auto S = longest_path_starts(dag);
  for (const auto& e : dag.edges) {
    const Ticks from = e.from < 0 ? 0 : S[static_cast<std::size_t>(e.from)];
    CHECK(S[static_cast<std::size_t>(e.to)] >= from + e.weight);
  }
}

}  // namespace

TEST_CASE("resting sites: trivial layouts") {
  Placement two;
  two.layout = build_layout(Topology::Line, {2, 0}, 1);
  two.cells = {{{1, 1}, CellKind::Interface, {}}, {{1, 2}, CellKind::Tile, {0}}};
  CHECK(resting_candidates(two).size() == 1);
  CHECK(generate_resting_sites(two).sites.size() == 1);

  Placement one;
  one.layout = build_layout(Topology::Line, {1, 0}, 1);
  one.cells = {{{1, 1}, CellKind::Interface, {}}};
  CHECK(generate_resting_sites(one).sites.empty());
}

TEST_CASE("resting sites: 4x4 with two interfaces") {
  const auto f = pft::desk4();
  CHECK(brute_sites(f.placement) == 9);
  const auto bnb = generate_resting_sites(f.placement);
  CHECK(bnb.sites.size() == 9);
  CHECK(bnb.exact);
  check_capacity(f.placement, bnb.sites);
  const auto flow = generate_resting_sites(f.placement, 0);
  CHECK(flow.sites.size() == 9);
  check_capacity(f.placement, flow.sites);
}

TEST_CASE("resting sites: both searches match brute force") {
  Rng rng(61);
  for (int t = 0; t < 25; ++t) {
    const int a = static_cast<int>(rng.between(1, 4)), b = static_cast<int>(rng.between(2, 4));
    const Layout l = build_layout(Topology::Square, {a, b}, static_cast<int>(rng.between(1, 2)));
    const Placement p = pft::random_placement(rng, l, 3, 2, 0);
    const int want = brute_sites(p);
    const auto x = generate_resting_sites(p);
    const auto y = generate_resting_sites(p, 0);
    CHECK(static_cast<int>(x.sites.size()) == want);
    CHECK(static_cast<int>(y.sites.size()) == want);
    check_capacity(p, x.sites);
    check_capacity(p, y.sites);
    for (const auto& s : x.sites) CHECK(PlacementIndex(p, 3).dist(s.cell_a, s.cell_b) == 1);
  }
}

TEST_CASE("transits: idle time and the no-slack case") {
  const auto f = pft::desk4();
  const PlacementIndex idx(f.placement, f.catalog.size());
  const int a = at(f.placement, 1, 1), b = at(f.placement, 3, 1);
  Schedule s;
  s.n_movers = 1;
  s.ops = {{0, 1, 0, 10, OpKind::Dispense}, {1, 1, 1, 5, OpKind::Dispense}};
  s.plan = {{0, a, 0, 10}, {0, b, 20, 25}};
  s.makespan = 25;
  const auto tr = extract_transits(s, idx);
  REQUIRE(tr.size() == 1);
  CHECK(tr[0].idle == 8);
  CHECK(tr[0].gap == 10);
  CHECK(tr[0].travel == 2);
  s.plan[1] = {0, b, 12, 17};
  CHECK(extract_transits(s, idx).empty());
}

TEST_CASE("assignment: round trip, cheapest pairing, pigeonhole") {
  Placement p;
  p.layout = build_layout(Topology::Line, {6, 0}, 1);
  p.cells.push_back({{1, 1}, CellKind::Interface, {}});
  for (int y = 2; y <= 6; ++y) p.cells.push_back({{1, y}, CellKind::Tile, {0}});
  const PlacementIndex idx(p, 1);
  const std::vector<RestingSite> sites{{0, 1, 1, 1.5}, {3, 4, 1, 4.5}};
  auto transit = [](int mover, Ticks depart, Ticks arrive) {
    Transit t;
    t.mover = mover;
    t.depart = depart;
    t.arrive = arrive;
    t.gap = arrive - depart;
    t.idle = t.gap;
    return t;
  };

  const std::vector<Transit> one{transit(0, 0, 20)};
  const auto r1 = assign_resting_sites(one, {sites[0]}, idx);
  CHECK(r1.site_of == std::vector<int>{0});
  CHECK(r1.cost == 2);

  const std::vector<Transit> two{transit(0, 0, 20), transit(1, 5, 25)};
  CHECK(*detour(two[0], sites[0], idx) == 2);
  CHECK(*detour(two[0], sites[1], idx) == 8);
  const auto r2 = assign_resting_sites(two, sites, idx);
  CHECK(r2.cost == 10);
  CHECK(r2.unassigned == 0);
  CHECK(r2.site_of[0] != r2.site_of[1]);

  const std::vector<Transit> three{transit(0, 0, 20), transit(1, 5, 25), transit(2, 10, 30)};
  CHECK(overlap_clique(three).size() == 3);
  AssignOptions strict;
  strict.strict = true;
  CHECK_THROWS_AS(assign_resting_sites(three, sites, idx, strict), InfeasibleError);
  const auto r3 = assign_resting_sites(three, sites, idx);
  CHECK(r3.unassigned == 1);
}

TEST_CASE("assignment: exact search matches brute force") {
  Rng rng(62);
  for (int t = 0; t < 60; ++t) {
    const auto f = pft::desk4();
    const PlacementIndex idx(f.placement, f.catalog.size());
    const auto all = generate_resting_sites(f.placement).sites;
    std::vector<RestingSite> sites;
    for (const auto& s : all)
      if (rng.below(2) == 0) sites.push_back(s);
    std::vector<Transit> tr;
    const int n = static_cast<int>(rng.between(1, 5));
    for (int k = 0; k < n; ++k) {
      Transit x;
      x.mover = k;
      x.from_cell = static_cast<int>(rng.below(16));
      x.to_cell = static_cast<int>(rng.below(16));
      x.travel = idx.dist(x.from_cell, x.to_cell);
      x.depart = rng.between(0, 20);
      x.gap = x.travel + rng.between(1, 8);
      x.arrive = x.depart + x.gap;
      x.idle = x.gap - x.travel;
      tr.push_back(x);
    }
    AssignOptions opt;
    opt.unassigned_penalty = 100;
    const auto r = assign_resting_sites(tr, sites, idx, opt);
    CHECK(r.exact);

    Ticks best = std::numeric_limits<Ticks>::max();
    std::vector<int> pick(tr.size(), -1);
    std::function<void(std::size_t, Ticks)> rec = [&](std::size_t i, Ticks cost) {
      if (i == tr.size()) {
        best = std::min(best, cost);
        return;
      }
      pick[i] = -1;
      rec(i + 1, cost + 100);
      for (std::size_t s = 0; s < sites.size(); ++s) {
        const auto d = detour(tr[i], sites[s], idx);
        if (!d) continue;
        bool clash = false;
        for (std::size_t j = 0; j < i; ++j)
          clash |= pick[j] == static_cast<int>(s) && tr[j].depart < tr[i].arrive && tr[i].depart < tr[j].arrive;
        if (clash) continue;
        pick[i] = static_cast<int>(s);
        rec(i + 1, cost + *d);
        pick[i] = -1;
      }
    };
    rec(0, 0);
    CHECK(r.cost + 100 * r.unassigned == best);
  }
}

TEST_CASE("tile paths: staircase and length") {
  const auto f = pft::desk4();
  const PlacementIndex idx(f.placement, f.catalog.size());
  const auto path = tile_path(idx, at(f.placement, 1, 1), at(f.placement, 3, 2));
  CHECK(path == std::vector<int>{at(f.placement, 1, 1), at(f.placement, 2, 1), at(f.placement, 3, 1), at(f.placement, 3, 2)});
  CHECK(tile_path(idx, 5, 5) == std::vector<int>{5});
  for (int a = 0; a < 16; ++a)
    for (int b = 0; b < 16; ++b) {
      const auto q = tile_path(idx, a, b);
      CHECK(static_cast<int>(q.size()) - 1 == idx.dist(a, b));
      for (std::size_t k = 0; k + 1 < q.size(); ++k) CHECK(idx.dist(q[k], q[k + 1]) == 1);
    }
}

TEST_CASE("conflicts: single mover sees none") {
  Rng rng(63);
  for (int t = 0; t < 10; ++t) {
    const auto c = random_case(rng, 1, 4, 6);
    const PlacementIndex idx(c.placement, c.n_drugs);
    const auto tr = extract_transits(c.schedule, idx);
    const auto mp = build_paths(c.schedule, idx, tr, {}, {});
    for (Ticks l : detect_conflicts(mp, c.schedule)) CHECK(l == 0);
  }
}

TEST_CASE("conflicts: a crossing mover interrupts for one tick") {
  Placement p;
  p.layout = build_layout(Topology::Line, {4, 0}, 2);
  p.cells = {{{1, 1}, CellKind::Interface, {}}, {{1, 2}, CellKind::Tile, {0}}, {{1, 3}, CellKind::Tile, {1}},
             {{1, 4}, CellKind::Interface, {}}};
  const PlacementIndex idx(p, 2);
  const std::vector<Order> orders{{1, {{0, 10}}}, {2, {{1, 4}}}};
  Schedule s;
  s.n_movers = 2;
  s.ops = build_operations(orders, 2);
  s.plan = {{0, 0, 0, 2}, {0, 1, 3, 13}, {0, 0, 14, 16}, {1, 0, 2, 4}, {1, 2, 6, 10}, {1, 3, 11, 13}};
  s.makespan = 16;
  REQUIRE(validate_schedule(s, orders, idx, 2).empty());
  const auto mp = build_paths(s, idx, extract_transits(s, idx), {}, {});
  const auto l = detect_conflicts(mp, s);
  CHECK(l == std::vector<Ticks>{0, 1, 0, 0, 0, 0});
  CHECK(l == grid_conflicts(mp, s, 4));

  // the interrupted op is on the critical path
  const auto r = resolve_conflicts(s, idx, {});
  CHECK(r.converged);
  CHECK(r.makespan_before == 16);
  CHECK(r.makespan == 17);
  CHECK(r.schedule.plan[1].interruption == 1);
  CHECK(validate_schedule(r.schedule, orders, idx, 2).empty());
}

TEST_CASE("conflicts: ledger equals a per-tick occupancy grid") {
  Rng rng(64);
  for (int t = 0; t < 20; ++t) {
    const auto c = random_case(rng, 4, 4, 10);
    const PlacementIndex idx(c.placement, c.n_drugs);
    const auto sites = generate_resting_sites(c.placement).sites;
    const auto tr = extract_transits(c.schedule, idx);
    const auto ra = assign_resting_sites(tr, sites, idx);
    const auto mp = build_paths(c.schedule, idx, tr, ra, sites);
    check_paths(mp, c.schedule, idx, sites);
    CHECK(detect_conflicts(mp, c.schedule) == grid_conflicts(mp, c.schedule, idx.n_cells()));
  }
}

TEST_CASE("resolve: conflict-free input is a fixpoint") {
  const auto f = pft::desk4();
  const PlacementIndex idx(f.placement, f.catalog.size());
  ScheduleParams sp;
  sp.n_movers = 1;
  sp.max_iterations = 50;
  const auto s = schedule(f.orders, idx, sp).schedule;
  const auto r = resolve_conflicts(s, idx, generate_resting_sites(f.placement).sites);
  CHECK(r.iterations == 1);
  CHECK(r.converged);
  CHECK(r.schedule == s);
  CHECK(r.makespan == s.makespan);
}

TEST_CASE("resolve: fuzzed instances reach a valid fixpoint") {
  Rng rng(65);
  for (int t = 0; t < 40; ++t) {
    const int movers = static_cast<int>(rng.between(2, 5));
    const auto c = random_case(rng, movers, static_cast<int>(rng.between(3, 5)), static_cast<int>(rng.between(4, 14)));
    const PlacementIndex idx(c.placement, c.n_drugs);
    const auto sites = generate_resting_sites(c.placement).sites;
    RoutingOptions opt;
    opt.use_resting_sites = rng.below(2) == 0;
    const auto r = resolve_conflicts(c.schedule, idx, sites, opt);
    CAPTURE(t);
    REQUIRE(r.converged);
    CHECK(r.residual_conflicts == 0);
    CHECK(r.makespan >= r.makespan_before);
    CHECK(r.makespan == r.schedule.makespan);
    for (std::size_t k = 1; k < r.makespan_history.size(); ++k) CHECK(r.makespan_history[k] >= r.makespan_history[k - 1]);
    // nothing sees more interruption than it absorbs
    const auto l = detect_conflicts(r.paths, r.schedule);
    for (std::size_t i = 0; i < l.size(); ++i) CHECK(l[i] <= r.schedule.plan[i].interruption);
    CHECK(validate_schedule(r.schedule, c.orders, idx, 2).empty());
    check_paths(r.paths, r.schedule, idx, r.sites);
    check_dag(build_dag(r.schedule, idx, l, SameCellWeight::Duration));
    check_dag(build_dag(r.schedule, idx, l, SameCellWeight::Unit));
  }
}

TEST_CASE("merge: single batch, two one-order batches, and the max bound") {
  Placement p;
  p.layout = build_layout(Topology::Line, {2, 0}, 1);
  p.cells = {{{1, 1}, CellKind::Interface, {}}, {{1, 2}, CellKind::Tile, {0}}};
  const PlacementIndex idx(p, 1);
  ScheduleParams sp;
  sp.n_movers = 1;
  sp.max_iterations = 20;
  const std::vector<Order> a{{1, {{0, 10}}}}, b{{2, {{0, 10}}}};
  const std::vector<Schedule> one{schedule(a, idx, sp).schedule};
  CHECK(merge_batches(one, idx) == one[0]);
  const std::vector<Schedule> both{one[0], schedule(b, idx, sp).schedule};
  const auto m = merge_batches(both, idx);
  const std::vector<Order> ab{a[0], b[0]};
  CHECK(m.makespan == pft::brute_schedule(ab, idx, 1, 2));
  CHECK(m.makespan == 32);
  CHECK(validate_schedule(m, ab, idx, 2).empty());

  sp.n_movers = 2;
  const std::vector<Schedule> mixed{one[0], schedule(b, idx, sp).schedule};
  CHECK_THROWS_AS(merge_batches(mixed, idx), ConfigError);

  Rng rng(66);
  for (int t = 0; t < 20; ++t) {
    const int movers = static_cast<int>(rng.between(1, 4));
    auto c = random_case(rng, movers, 4, 12);
    const PlacementIndex ri(c.placement, c.n_drugs);
    std::vector<Schedule> parts;
    std::vector<Order> merged_orders;
    ScheduleParams q;
    q.n_movers = movers;
    q.max_iterations = 50;
    for (const auto& batch : partition_batches(c.orders.size(), 5, static_cast<std::uint64_t>(t))) {
      std::vector<Order> sub;
      for (int i : batch) sub.push_back(c.orders[static_cast<std::size_t>(i)]);
      parts.push_back(schedule(sub, ri, q).schedule);
      merged_orders.insert(merged_orders.end(), sub.begin(), sub.end());
    }
    for (auto w : {SameCellWeight::Duration, SameCellWeight::Unit}) {
      const auto mg = merge_batches(parts, ri, w);
      Ticks hi = 0;
      for (const auto& s : parts) hi = std::max(hi, s.makespan);
      CHECK(mg.makespan >= hi);
      if (w == SameCellWeight::Duration) CHECK(validate_schedule(mg, merged_orders, ri, 2).empty());
    }
  }
}
