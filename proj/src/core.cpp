#include "planarfab/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <deque>
#include <set>
#include <sstream>

#include "planarfab/error.hpp"

namespace planarfab {

Ticks manhattan(Coord a, Coord b) noexcept {
  return std::abs(static_cast<Ticks>(a.x) - b.x) + std::abs(static_cast<Ticks>(a.y) - b.y);
}

std::string_view topology_name(Topology t) noexcept {
  switch (t) {
    case Topology::Line: return "line";
    case Topology::DoubleLine: return "doubleline";
    case Topology::Ring: return "ring";
    case Topology::Square: return "square";
    case Topology::Explicit: return "explicit";
  }
  return "explicit";
}

Topology parse_topology(std::string_view s) {
  if (s == "line") return Topology::Line;
  if (s == "doubleline") return Topology::DoubleLine;
  if (s == "ring") return Topology::Ring;
  if (s == "square") return Topology::Square;
  if (s == "explicit") return Topology::Explicit;
  throw ConfigError("unknown topology tag '" + std::string(s) + "'");
}

std::optional<int> Layout::index_of(Coord c) const noexcept {
  auto it = std::lower_bound(tiles.begin(), tiles.end(), c);
  if (it == tiles.end() || *it != c) return std::nullopt;
  return static_cast<int>(it - tiles.begin());
}

namespace {

void check_n_inter(const Layout& l) {
  if (l.n_inter < 0 || l.n_inter > l.size()) {
    std::ostringstream os;
    os << "n_inter=" << l.n_inter << " exceeds the " << l.size() << " tiles of the layout";
    throw ConfigError(os.str());
  }
}

}  // namespace

Layout build_layout(Topology topology, LayoutSize size, int n_inter) {
  Layout l;
  l.topology = topology;
  l.n_inter = n_inter;
  switch (topology) {
    case Topology::Line:
      if (size.a < 1) throw ConfigError("line length must be >= 1");
      for (int y = 1; y <= size.a; ++y) l.tiles.push_back({1, y});
      break;
    case Topology::DoubleLine:
      if (size.a < 1) throw ConfigError("doubleline length must be >= 1");
      for (int x = 1; x <= 2; ++x)
        for (int y = 1; y <= size.a; ++y) l.tiles.push_back({x, y});
      break;
    case Topology::Ring:
      if (size.a < 3) throw ConfigError("ring side must be >= 3");
      for (int x = 1; x <= size.a; ++x)
        for (int y = 1; y <= size.a; ++y)
          if (x == 1 || y == 1 || x == size.a || y == size.a) l.tiles.push_back({x, y});
      break;
    case Topology::Square: {
      const int rows = size.a;
      const int cols = size.b > 0 ? size.b : size.a;
      if (rows < 1 || cols < 1) throw ConfigError("square dimensions must be >= 1");
      for (int x = 1; x <= cols; ++x)
        for (int y = 1; y <= rows; ++y) l.tiles.push_back({x, y});
      break;
    }
    case Topology::Explicit:
      throw ConfigError("explicit layouts are built with explicit_layout()");
  }
  std::sort(l.tiles.begin(), l.tiles.end());
  check_n_inter(l);
  return l;
}

Layout explicit_layout(std::vector<Coord> tiles, int n_inter) {
  Layout l;
  l.topology = Topology::Explicit;
  l.n_inter = n_inter;
  for (const Coord& c : tiles)
    if (c.x < 1 || c.y < 1) throw ConfigError("tile coordinates are 1-based");
  std::sort(tiles.begin(), tiles.end());
  if (std::adjacent_find(tiles.begin(), tiles.end()) != tiles.end())
    throw ConfigError("duplicate tile coordinate in explicit layout");
  l.tiles = std::move(tiles);
  if (!is_connected(l.tiles)) throw ConfigError("explicit layout is not 4-connected");
  check_n_inter(l);
  return l;
}

bool is_connected(std::span<const Coord> tiles) {
  if (tiles.empty()) return true;
  std::set<Coord> all(tiles.begin(), tiles.end());
  std::set<Coord> seen{tiles.front()};
  std::deque<Coord> queue{tiles.front()};
  while (!queue.empty()) {
    const Coord c = queue.front();
    queue.pop_front();
    for (Coord n : {Coord{c.x + 1, c.y}, Coord{c.x - 1, c.y}, Coord{c.x, c.y + 1},
                    Coord{c.x, c.y - 1}}) {
      if (all.count(n) && seen.insert(n).second) queue.push_back(n);
    }
  }
  return seen.size() == all.size();
}

std::optional<DrugId> DrugCatalog::find(std::string_view name) const noexcept {
  for (std::size_t i = 0; i < drugs.size(); ++i)
    if (drugs[i] == name) return static_cast<DrugId>(i);
  return std::nullopt;
}

void check_catalog(const DrugCatalog& c) {
  const std::size_t n = c.drugs.size();
  if (n == 0) throw ConfigError("catalog has no drugs");
  if (c.marginal.size() != n) throw ConfigError("catalog: marginal count differs from drug count");
  for (double p : c.marginal)
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("catalog: marginal outside [0,1]");
  if (c.correlation.size() != n) throw ConfigError("catalog: correlation matrix has wrong size");
  for (std::size_t i = 0; i < n; ++i) {
    if (c.correlation[i].size() != n) throw ConfigError("catalog: correlation matrix not square");
    if (c.correlation[i][i] != 0.0) throw ConfigError("catalog: correlation diagonal must be zero");
    for (std::size_t j = 0; j < n; ++j) {
      const double o = c.correlation[i][j];
      if (!(o >= -1.0 && o <= 1.0)) throw ConfigError("catalog: correlation outside [-1,1]");
      if (std::abs(o - c.correlation[j][i]) > 1e-12)
        throw ConfigError("catalog: correlation matrix not symmetric");
    }
  }
  std::set<std::string> names(c.drugs.begin(), c.drugs.end());
  if (names.size() != n) throw ConfigError("catalog: duplicate drug name");
}

Ticks Order::total_duration() const noexcept {
  Ticks s = 0;
  for (const auto& it : items) s += it.duration;
  return s;
}

bool Order::contains(DrugId g) const noexcept {
  return std::any_of(items.begin(), items.end(), [g](const OrderItem& it) { return it.drug == g; });
}

void check_order(const Order& order, int n_drugs) {
  if (order.items.empty())
    throw ConfigError("order " + std::to_string(order.id) + " has no items");
  std::set<DrugId> seen;
  for (const auto& it : order.items) {
    if (it.drug < 0 || it.drug >= n_drugs)
      throw ConfigError("order " + std::to_string(order.id) + " references an unknown drug");
    if (it.duration < 1)
      throw ConfigError("order " + std::to_string(order.id) + " has a non-positive duration");
    if (!seen.insert(it.drug).second)
      throw ConfigError("order " + std::to_string(order.id) + " repeats a drug");
  }
}

DistanceMatrix tile_distances(const Layout& layout) {
  const int n = layout.size();
  DistanceMatrix d(n);
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const Coord c = layout.tiles[static_cast<std::size_t>(i)];
    for (Coord nb : {Coord{c.x + 1, c.y}, Coord{c.x - 1, c.y}, Coord{c.x, c.y + 1},
                     Coord{c.x, c.y - 1}}) {
      if (auto j = layout.index_of(nb)) adj[static_cast<std::size_t>(i)].push_back(*j);
    }
  }
  std::vector<int> queue(static_cast<std::size_t>(n));
  for (int s = 0; s < n; ++s) {
    for (int t = 0; t < n; ++t) d.at(s, t) = -1;
    d.at(s, s) = 0;
    std::size_t head = 0, tail = 0;
    queue[tail++] = s;
    while (head < tail) {
      const int u = queue[head++];
      for (int v : adj[static_cast<std::size_t>(u)]) {
        if (d(s, v) < 0) {
          d.at(s, v) = d(s, u) + 1;
          queue[tail++] = v;
        }
      }
    }
    for (int t = 0; t < n; ++t)
      if (d(s, t) < 0) throw ConfigError("layout is not 4-connected");
  }
  return d;
}

std::vector<std::string> check_placement(const Placement& p) {
  std::vector<std::string> v;
  if (p.cells.size() != p.layout.tiles.size()) {
    v.push_back("placement does not cover every layout tile exactly once");
    return v;
  }
  int inter = 0;
  for (std::size_t i = 0; i < p.cells.size(); ++i) {
    const auto& c = p.cells[i];
    if (c.coord != p.layout.tiles[i]) v.push_back("cell order does not follow layout tile order");
    if (c.kind == CellKind::Interface) {
      ++inter;
      if (!c.drugs.empty()) v.push_back("interface cell carries dispensers");
    }
    if (!std::is_sorted(c.drugs.begin(), c.drugs.end()) ||
        std::adjacent_find(c.drugs.begin(), c.drugs.end()) != c.drugs.end())
      v.push_back("cell drug list must be sorted and unique");
  }
  if (inter != p.layout.n_inter) v.push_back("interface count differs from layout n_inter");
  if (inter == 0) v.push_back("placement has no interface");
  return v;
}

DistanceMatrix distance_matrix(const Placement& placement) {
  return tile_distances(placement.layout);
}

PlacementIndex::PlacementIndex(const Placement& placement, int n_drugs)
    : PlacementIndex(placement, n_drugs, tile_distances(placement.layout)) {}

PlacementIndex::PlacementIndex(const Placement& placement, int n_drugs, DistanceMatrix dist)
    : placement_(placement), dist_(std::move(dist)), by_drug_(static_cast<std::size_t>(n_drugs)) {
  if (dist_.size() != static_cast<int>(placement_.cells.size()))
    throw ConfigError("distance matrix does not match the placement");
  for (int i = 0; i < static_cast<int>(placement_.cells.size()); ++i) {
    const auto& c = placement_.cells[static_cast<std::size_t>(i)];
    if (c.kind == CellKind::Interface) {
      interfaces_.push_back(i);
      continue;
    }
    for (DrugId g : c.drugs) {
      if (g < 0 || g >= n_drugs) throw ConfigError("placement references an unknown drug");
      by_drug_[static_cast<std::size_t>(g)].push_back(i);
    }
  }
}

bool PlacementIndex::hosts(int cell, DrugId g) const {
  const auto& d = placement_.cells.at(static_cast<std::size_t>(cell)).drugs;
  return std::binary_search(d.begin(), d.end(), g);
}

std::vector<std::string> validate_instance(const Layout& layout, const DrugCatalog& catalog,
                                           const InstanceConfig& config) {
  std::vector<std::string> v;
  const int n_drugs = catalog.size();
  const int usable = layout.n_dispensing_tiles();
  if (config.d_max < 1) v.push_back("d_max must be >= 1");
  if (config.m_max < 1) v.push_back("m_max must be >= 1");
  if (config.n_movers < 1) v.push_back("n_movers must be >= 1");
  if (config.n_movers > config.m_max) v.push_back("n_movers exceeds m_max");
  if (config.eta_interface < 1) v.push_back("eta_interface must be >= 1");
  if (config.dispensing_speed < 1) v.push_back("dispensing_speed must be >= 1");
  if (config.n_dispensers < n_drugs) v.push_back("insufficient dispensers: fewer dispensers than drugs");
  if (layout.n_inter < 1) v.push_back("layout reserves no interface tile");
  if (usable < 1) v.push_back("no dispensing tile left after interfaces");
  if (config.d_max >= 1 && static_cast<long long>(config.d_max) * usable < n_drugs)
    v.push_back("tile capacity d_max * dispensing tiles is below the number of drugs");
  if (config.d_max >= 1 && static_cast<long long>(config.d_max) * usable < config.n_dispensers)
    v.push_back("dispensers exceed tile capacity d_max * dispensing tiles");
  if (!is_connected(layout.tiles)) v.push_back("layout is not 4-connected");
  try {
    check_catalog(catalog);
  } catch (const Error& e) {
    v.emplace_back(e.what());
  }
  return v;
}

}  // namespace planarfab
