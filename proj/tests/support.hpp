#pragma once

// Fixtures and brute-force oracles shared by the test binaries.

#include <algorithm>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "planarfab/core.hpp"
#include "planarfab/ordergen.hpp"
#include "planarfab/packing.hpp"
#include "planarfab/rng.hpp"
#include "planarfab/scheduling.hpp"
#include "planarfab/shppn.hpp"

namespace pft {

using namespace planarfab;

// The 4x4 grid with two interfaces from the placement walkthrough.
struct Desk4 {
  DrugCatalog catalog;
  Placement placement;
  std::vector<Order> orders;
};

inline Desk4 desk4(Ticks duration = 10) {
  const std::vector<std::pair<Coord, std::vector<std::string>>> cells = {
      {{1, 4}, {"OMEPRAZOLE"}},
      {{1, 3}, {"LEVOTHYROXINE"}},
      {{1, 2}, {"LOVASTATIN"}},
      {{1, 1}, {"VALSARTAN"}},
      {{2, 4}, {"METFORMIN", "GLIPIZIDE", "PRAVASTATIN"}},
      {{2, 3}, {"LISINOPRIL"}},
      {{2, 2}, {"SIMVASTATIN"}},
      {{2, 1}, {}},
      {{3, 4}, {"METOPROLOL", "CLOPIDOGREL"}},
      {{3, 3}, {}},
      {{3, 2}, {"HYDROCHLOROTHIAZIDE"}},
      {{3, 1}, {"LOSARTAN", "AMLODIPINE", "ATORVASTATIN"}},
      {{4, 4}, {"WARFARIN"}},
      {{4, 3}, {"ATORVASTATIN"}},
      {{4, 2}, {"ATENOLOL"}},
      {{4, 1}, {"FUROSEMIDE"}},
  };
  Desk4 f;
  std::set<std::string> names;
  for (const auto& [c, d] : cells) names.insert(d.begin(), d.end());
  f.catalog.drugs.assign(names.begin(), names.end());
  const auto n = f.catalog.drugs.size();
  f.catalog.marginal.assign(n, 0.1);
  f.catalog.correlation.assign(n, std::vector<double>(n, 0.0));
  f.placement.layout = build_layout(Topology::Square, {4, 4}, 2);
  f.placement.cells.resize(16);
  for (const auto& [c, d] : cells) {
    PlacedCell pc;
    pc.coord = c;
    pc.kind = d.empty() ? CellKind::Interface : CellKind::Tile;
    for (const auto& name : d) pc.drugs.push_back(*f.catalog.find(name));
    std::sort(pc.drugs.begin(), pc.drugs.end());
    f.placement.cells[static_cast<std::size_t>(*f.placement.layout.index_of(c))] = pc;
  }
  auto order = [&](int id, std::vector<std::string> ds) {
    Order o{id, {}};
    for (const auto& d : ds) o.items.push_back({*f.catalog.find(d), duration});
    std::sort(o.items.begin(), o.items.end(), [](auto& a, auto& b) { return a.drug < b.drug; });
    return o;
  };
  f.orders = {order(1, {"ATORVASTATIN", "HYDROCHLOROTHIAZIDE"}), order(2, {"OMEPRAZOLE"}),
              order(3, {"LISINOPRIL", "SIMVASTATIN"})};
  return f;
}

// Random placement: interfaces at random positions, every drug on at least
// one tile, `extra` additional alternatives, at most d_max drugs per tile.
inline Placement random_placement(Rng& rng, const Layout& layout, int n_drugs, int d_max, int extra) {
  Placement p;
  p.layout = layout;
  const int n = layout.size();
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = n - 1; i > 0; --i) std::swap(perm[static_cast<std::size_t>(i)], perm[rng.below(static_cast<std::uint64_t>(i + 1))]);
  p.cells.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) p.cells[static_cast<std::size_t>(i)].coord = layout.tiles[static_cast<std::size_t>(i)];
  std::vector<int> tiles;
  for (int k = 0; k < n; ++k) {
    const int c = perm[static_cast<std::size_t>(k)];
    if (k < layout.n_inter) p.cells[static_cast<std::size_t>(c)].kind = CellKind::Interface;
    else tiles.push_back(c);
  }
  auto put = [&](int g) {
    for (int tries = 0; tries < 1000; ++tries) {
      const int c = tiles[rng.below(tiles.size())];
      auto& d = p.cells[static_cast<std::size_t>(c)].drugs;
      if (static_cast<int>(d.size()) >= d_max || std::find(d.begin(), d.end(), g) != d.end()) continue;
      d.push_back(g);
      return true;
    }
    return false;
  };
  for (int g = 0; g < n_drugs; ++g) put(g);
  for (int e = 0; e < extra; ++e) put(static_cast<int>(rng.below(static_cast<std::uint64_t>(n_drugs))));
  for (auto& c : p.cells) std::sort(c.drugs.begin(), c.drugs.end());
  return p;
}

inline std::vector<Order> random_orders(Rng& rng, int n_orders, int n_drugs, int lo, int hi, Ticks dlo, Ticks dhi) {
  std::vector<Order> out;
  for (int i = 0; i < n_orders; ++i) {
    const int k = static_cast<int>(rng.between(lo, std::min(hi, n_drugs)));
    std::vector<int> drugs(static_cast<std::size_t>(n_drugs));
    std::iota(drugs.begin(), drugs.end(), 0);
    for (int j = 0; j < k; ++j)
      std::swap(drugs[static_cast<std::size_t>(j)], drugs[static_cast<std::size_t>(rng.between(j, n_drugs - 1))]);
    Order o{i + 1, {}};
    for (int j = 0; j < k; ++j) o.items.push_back({drugs[static_cast<std::size_t>(j)], rng.between(dlo, dhi)});
    std::sort(o.items.begin(), o.items.end(), [](auto& a, auto& b) { return a.drug < b.drug; });
    out.push_back(o);
  }
  return out;
}

// Every interface pair, drug permutation and alternative choice.
inline Ticks brute_kappa(const Order& o, const PlacementIndex& index) {
  std::vector<DrugId> drugs;
  for (const auto& it : o.items) drugs.push_back(it.drug);
  std::sort(drugs.begin(), drugs.end());
  Ticks best = std::numeric_limits<Ticks>::max();
  do {
    std::function<void(std::size_t, int, Ticks, int)> rec = [&](std::size_t k, int at, Ticks acc, int) {
      if (k == drugs.size()) {
        for (int e : index.interfaces()) best = std::min(best, acc + index.dist(at, e));
        return;
      }
      for (int c : index.cells_of(drugs[k])) rec(k + 1, c, acc + index.dist(at, c), 0);
    };
    for (int s : index.interfaces()) rec(0, s, 0, 0);
  } while (std::next_permutation(drugs.begin(), drugs.end()));
  return best;
}

// Cheapest cycle (or path with fixed end clusters) picking one vertex per
// cluster, by enumeration of cluster orders and vertex choices.
inline Cost brute_gtsp(const GtspInstance& g) {
  const int k = static_cast<int>(g.clusters.size());
  std::vector<int> order;
  for (int i = 0; i < k; ++i) order.push_back(i);
  Cost best = std::numeric_limits<Cost>::max();
  do {
    if (g.path) {
      if (order.front() != g.path->first || order.back() != g.path->second) continue;
    } else if (order.front() != 0) {
      continue;
    }
    std::vector<int> pick(static_cast<std::size_t>(k));
    std::function<void(int)> rec = [&](int i) {
      if (i == k) {
        Cost c = 0;
        for (int j = 0; j + 1 < k; ++j) c += g.cost[static_cast<std::size_t>(pick[static_cast<std::size_t>(j)])][static_cast<std::size_t>(pick[static_cast<std::size_t>(j + 1)])];
        if (!g.path && k > 1) c += g.cost[static_cast<std::size_t>(pick.back())][static_cast<std::size_t>(pick.front())];
        best = std::min(best, c);
        return;
      }
      for (int v : g.clusters[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])]) {
        pick[static_cast<std::size_t>(i)] = v;
        rec(i + 1);
      }
    };
    rec(0);
  } while (std::next_permutation(order.begin(), order.end()));
  return best;
}

inline Cost brute_tsp(const CostMatrix& c) {
  const int n = static_cast<int>(c.size());
  std::vector<int> p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), 0);
  Cost best = std::numeric_limits<Cost>::max();
  do {
    Cost s = 0;
    for (int i = 0; i < n; ++i) s += c[static_cast<std::size_t>(p[static_cast<std::size_t>(i)])][static_cast<std::size_t>(p[static_cast<std::size_t>((i + 1) % n)])];
    best = std::min(best, s);
  } while (std::next_permutation(p.begin() + 1, p.end()));
  return best;
}

// Minimal scaled max load over every multiplicity vector and every way of
// putting each drug's copies on distinct tiles.
inline std::int64_t brute_min_load(const DemandVector& u, int n_tiles, int n_dispensers, int d_max, int m_max) {
  std::int64_t L = 1;
  for (int i = 1; i <= m_max; ++i) L = std::lcm(L, std::int64_t{i});
  const int G = static_cast<int>(u.size());
  std::int64_t best = std::numeric_limits<std::int64_t>::max();
  std::vector<int> count(static_cast<std::size_t>(n_tiles), 0);
  std::vector<std::int64_t> load(static_cast<std::size_t>(n_tiles), 0);
  std::function<void(int, int)> drug = [&](int g, int used) {
    if (g == G) {
      best = std::min(best, *std::max_element(load.begin(), load.end()));
      return;
    }
    for (int z = 1; z <= m_max && used + z <= n_dispensers; ++z) {
      const std::int64_t share = u[static_cast<std::size_t>(g)] * L / z;
      std::function<void(int, int)> pick = [&](int from, int left) {
        if (left == 0) {
          drug(g + 1, used + z);
          return;
        }
        for (int k = from; k <= n_tiles - left; ++k) {
          if (count[static_cast<std::size_t>(k)] >= d_max) continue;
          ++count[static_cast<std::size_t>(k)];
          load[static_cast<std::size_t>(k)] += share;
          if (load[static_cast<std::size_t>(k)] < best) pick(k + 1, left - 1);
          load[static_cast<std::size_t>(k)] -= share;
          --count[static_cast<std::size_t>(k)];
        }
      };
      pick(0, z);
    }
  };
  drug(0, 0);
  return best;
}

// Optimal makespan by enumeration: order-to-mover sequences, per-order
// routes, and per-cell orderings across movers, each timed by longest path.
// Only for toy instances.
inline Ticks brute_schedule(std::span<const Order> orders, const PlacementIndex& index, int n_movers, Ticks eta) {
  struct Op {
    int cell;
    Ticks dur;
  };
  using Route = std::vector<Op>;
  std::vector<std::vector<Route>> routes(orders.size());
  for (std::size_t p = 0; p < orders.size(); ++p) {
    std::vector<std::pair<DrugId, Ticks>> items;
    for (const auto& it : orders[p].items) items.emplace_back(it.drug, it.duration);
    std::sort(items.begin(), items.end());
    do {
      std::function<void(std::size_t, Route&)> rec = [&](std::size_t k, Route& r) {
        if (k == items.size()) {
          for (int e : index.interfaces()) {
            r.push_back({e, eta});
            routes[p].push_back(r);
            r.pop_back();
          }
          return;
        }
        for (int c : index.cells_of(items[k].first)) {
          r.push_back({c, items[k].second});
          rec(k + 1, r);
          r.pop_back();
        }
      };
      for (int s : index.interfaces()) {
        Route r{{s, eta}};
        rec(0, r);
      }
    } while (std::next_permutation(items.begin(), items.end()));
  }

  Ticks best = std::numeric_limits<Ticks>::max();
  const int P = static_cast<int>(orders.size());
  std::vector<int> perm(static_cast<std::size_t>(P));
  std::iota(perm.begin(), perm.end(), 0);

  auto evaluate = [&](const std::vector<std::vector<int>>& seq, const std::vector<int>& choice) {
    // flatten to ops with mover chains
    std::vector<Op> ops;
    std::vector<int> mover_of;
    std::vector<std::vector<int>> chain(static_cast<std::size_t>(n_movers));
    for (int m = 0; m < n_movers; ++m)
      for (int p : seq[static_cast<std::size_t>(m)])
        for (const Op& o : routes[static_cast<std::size_t>(p)][static_cast<std::size_t>(choice[static_cast<std::size_t>(p)])]) {
          chain[static_cast<std::size_t>(m)].push_back(static_cast<int>(ops.size()));
          ops.push_back(o);
          mover_of.push_back(m);
        }
    const int n = static_cast<int>(ops.size());
    std::map<int, std::vector<int>> on_cell;
    for (int i = 0; i < n; ++i) on_cell[ops[static_cast<std::size_t>(i)].cell].push_back(i);
    std::vector<std::vector<int>> cells;
    for (auto& [c, v] : on_cell)
      if (v.size() > 1) cells.push_back(v);

    std::vector<std::vector<int>> orderings(cells.size());
    std::function<void(std::size_t)> rec = [&](std::size_t ci) {
      if (ci == cells.size()) {
        std::vector<std::tuple<int, int, Ticks>> edges;
        for (const auto& ch : chain)
          for (std::size_t k = 0; k + 1 < ch.size(); ++k) {
            const auto& a = ops[static_cast<std::size_t>(ch[k])];
            const auto& b = ops[static_cast<std::size_t>(ch[k + 1])];
            edges.emplace_back(ch[k], ch[k + 1], a.dur + index.dist(a.cell, b.cell));
          }
        for (const auto& ord : orderings)
          for (std::size_t k = 0; k + 1 < ord.size(); ++k)
            edges.emplace_back(ord[k], ord[k + 1], ops[static_cast<std::size_t>(ord[k])].dur);
        std::vector<Ticks> S(static_cast<std::size_t>(n), 0);
        for (int round = 0; round <= n; ++round) {
          bool changed = false;
          for (auto [a, b, w] : edges)
            if (S[static_cast<std::size_t>(a)] + w > S[static_cast<std::size_t>(b)]) {
              S[static_cast<std::size_t>(b)] = S[static_cast<std::size_t>(a)] + w;
              changed = true;
            }
          if (!changed) {
            Ticks mk = 0;
            for (int i = 0; i < n; ++i) mk = std::max(mk, S[static_cast<std::size_t>(i)] + ops[static_cast<std::size_t>(i)].dur);
            best = std::min(best, mk);
            return;
          }
        }
        return;  // cycle
      }
      auto v = cells[ci];
      std::sort(v.begin(), v.end());
      do {
        // keep each mover's own order on this cell
        bool ok = true;
        for (std::size_t a = 0; a < v.size() && ok; ++a)
          for (std::size_t b = a + 1; b < v.size() && ok; ++b)
            if (mover_of[static_cast<std::size_t>(v[a])] == mover_of[static_cast<std::size_t>(v[b])] && v[a] > v[b]) ok = false;
        if (!ok) continue;
        orderings[ci] = v;
        rec(ci + 1);
      } while (std::next_permutation(v.begin(), v.end()));
    };
    rec(0);
  };

  std::vector<int> choice(static_cast<std::size_t>(P), 0);
  std::function<void(int, const std::vector<std::vector<int>>&)> choose = [&](int p, const std::vector<std::vector<int>>& seq) {
    if (p == P) {
      evaluate(seq, choice);
      return;
    }
    for (std::size_t r = 0; r < routes[static_cast<std::size_t>(p)].size(); ++r) {
      choice[static_cast<std::size_t>(p)] = static_cast<int>(r);
      choose(p + 1, seq);
    }
  };
  // every mover label per order, every order permutation
  std::vector<int> label(static_cast<std::size_t>(P), 0);
  std::function<void(int)> assign = [&](int p) {
    if (p == P) {
      do {
        std::vector<std::vector<int>> seq(static_cast<std::size_t>(n_movers));
        for (int q : perm) seq[static_cast<std::size_t>(label[static_cast<std::size_t>(q)])].push_back(q);
        choose(0, seq);
      } while (std::next_permutation(perm.begin(), perm.end()));
      return;
    }
    for (int m = 0; m < n_movers; ++m) {
      label[static_cast<std::size_t>(p)] = m;
      assign(p + 1);
    }
  };
  assign(0);
  return best;
}

}  // namespace pft
