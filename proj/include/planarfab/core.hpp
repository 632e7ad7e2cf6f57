#pragma once

// Domain types shared by every stage: lattice coordinates, layouts, drug
// catalogs, orders, instance parameters, placements and travel distances.

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace planarfab {

/// All durations and distances are integer ticks; one tick moves a mover
/// across one tile edge.
using Ticks = std::int64_t;
using DrugId = int;

/// 1-based lattice coordinate.
struct Coord {
  int x = 1;
  int y = 1;
  friend constexpr auto operator<=>(const Coord&, const Coord&) = default;
};

Ticks manhattan(Coord a, Coord b) noexcept;

enum class Topology { Line, DoubleLine, Ring, Square, Explicit };

std::string_view topology_name(Topology t) noexcept;
Topology parse_topology(std::string_view s);

/// Size parameters: line/doubleline length in `a`; ring side in `a`;
/// square rows in `a`, columns in `b`.
struct LayoutSize {
  int a = 0;
  int b = 0;
};

/// The physical grid. Interfaces are not fixed here; the layout only
/// reserves how many tiles will host one.
struct Layout {
  Topology topology = Topology::Explicit;
  std::vector<Coord> tiles;  // sorted, unique
  int n_inter = 0;

  int size() const noexcept { return static_cast<int>(tiles.size()); }
  /// Tiles left for dispensers once interfaces are placed.
  int n_dispensing_tiles() const noexcept { return size() - n_inter; }
  std::optional<int> index_of(Coord c) const noexcept;
  bool contains(Coord c) const noexcept { return index_of(c).has_value(); }

  friend bool operator==(const Layout&, const Layout&) = default;
};

Layout build_layout(Topology topology, LayoutSize size, int n_inter);
/// Escape hatch for user-drawn grids; must be 4-connected.
Layout explicit_layout(std::vector<Coord> tiles, int n_inter);
bool is_connected(std::span<const Coord> tiles);

struct DrugCatalog {
  std::vector<std::string> drugs;
  std::vector<double> marginal;
  std::vector<std::vector<double>> correlation;  // zero diagonal

  int size() const noexcept { return static_cast<int>(drugs.size()); }
  std::optional<DrugId> find(std::string_view name) const noexcept;
  friend bool operator==(const DrugCatalog&, const DrugCatalog&) = default;
};

/// Throws ConfigError listing the first violated catalog invariant.
void check_catalog(const DrugCatalog& catalog);

struct OrderItem {
  DrugId drug = 0;
  Ticks duration = 1;
  friend bool operator==(const OrderItem&, const OrderItem&) = default;
};

struct Order {
  int id = 0;
  std::vector<OrderItem> items;

  Ticks total_duration() const noexcept;
  bool contains(DrugId g) const noexcept;
  friend bool operator==(const Order&, const Order&) = default;
};

void check_order(const Order& order, int n_drugs);

struct InstanceConfig {
  int n_dispensers = 1;
  int d_max = 4;
  int m_max = 4;
  int n_movers = 1;
  Ticks eta_interface = 2;
  Ticks dispensing_speed = 100;
  std::uint64_t seed = 0;
  friend bool operator==(const InstanceConfig&, const InstanceConfig&) = default;
};

/// Square matrix of tick distances indexed by layout tile index.
class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  explicit DistanceMatrix(int n) : n_(n), d_(static_cast<std::size_t>(n) * n, 0) {}

  int size() const noexcept { return n_; }
  std::int32_t operator()(int a, int b) const noexcept {
    return d_[static_cast<std::size_t>(a) * n_ + b];
  }
  std::int32_t& at(int a, int b) noexcept { return d_[static_cast<std::size_t>(a) * n_ + b]; }
  std::span<const std::int32_t> row(int a) const noexcept {
    return {d_.data() + static_cast<std::size_t>(a) * n_, static_cast<std::size_t>(n_)};
  }

 private:
  int n_ = 0;
  std::vector<std::int32_t> d_;
};

/// Shortest-path distances in the 4-adjacent tile graph. Equal to the l1
/// metric on line, doubleline and square layouts; longer on a ring.
DistanceMatrix tile_distances(const Layout& layout);

enum class CellKind { Tile, Interface };

struct PlacedCell {
  Coord coord;
  CellKind kind = CellKind::Tile;
  std::vector<DrugId> drugs;  // sorted; empty for interfaces
  friend bool operator==(const PlacedCell&, const PlacedCell&) = default;
};

/// Bijection between packed tiles plus interfaces and layout coordinates.
/// cells[i] sits at layout.tiles[i].
struct Placement {
  Layout layout;
  std::vector<PlacedCell> cells;

  friend bool operator==(const Placement&, const Placement&) = default;
};

/// Violations of the placement invariants; empty when valid.
std::vector<std::string> check_placement(const Placement& placement);

DistanceMatrix distance_matrix(const Placement& placement);

/// Read-only lookup structure over a placement: distances, interface cells,
/// and the cells hosting each drug.
class PlacementIndex {
 public:
  PlacementIndex(const Placement& placement, int n_drugs);
  /// Reuses distances already computed for placement.layout.
  PlacementIndex(const Placement& placement, int n_drugs, DistanceMatrix dist);

  const Placement& placement() const noexcept { return placement_; }
  const DistanceMatrix& dist() const noexcept { return dist_; }
  std::int32_t dist(int a, int b) const noexcept { return dist_(a, b); }
  const std::vector<int>& interfaces() const noexcept { return interfaces_; }
  const std::vector<int>& cells_of(DrugId g) const { return by_drug_.at(static_cast<std::size_t>(g)); }
  int n_cells() const noexcept { return static_cast<int>(placement_.cells.size()); }
  int n_drugs() const noexcept { return static_cast<int>(by_drug_.size()); }
  Coord coord(int cell) const { return placement_.cells.at(static_cast<std::size_t>(cell)).coord; }
  bool is_interface(int cell) const {
    return placement_.cells.at(static_cast<std::size_t>(cell)).kind == CellKind::Interface;
  }
  bool hosts(int cell, DrugId g) const;

 private:
  Placement placement_;
  DistanceMatrix dist_;
  std::vector<int> interfaces_;
  std::vector<std::vector<int>> by_drug_;
};

/// Admissibility report; an empty list means the instance can be packed.
std::vector<std::string> validate_instance(const Layout& layout, const DrugCatalog& catalog,
                                           const InstanceConfig& config);

}  // namespace planarfab
