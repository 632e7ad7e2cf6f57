#pragma once

// From a schedule to a conflict-free execution plan.
//
// Tick model. A mover occupies the tile of its own op for the whole op.
// Moving one edge takes one tick: on the departure tick the mover is on the
// edge (no tile occupied), on each later tick it sits on the next tile.
// Resting sites are edge midpoints and occupy no tile; entering or leaving
// one costs one tick from an adjacent tile. Movers occupy nothing before
// their first op and after their last op.
//
// A conflict is a tick on which some other mover occupies the tile of an
// active dispensing op. Interruptions lengthen the op; start times are
// recomputed as longest paths in a precedence DAG until no op sees more
// interruption than it already absorbs.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "planarfab/core.hpp"
#include "planarfab/scheduling.hpp"

namespace planarfab {

struct RestingSite {
  int cell_a = 0;  // the two adjacent placement cells, cell_a < cell_b
  int cell_b = 0;
  double x = 0.0;  // edge midpoint
  double y = 0.0;
  friend bool operator==(const RestingSite&, const RestingSite&) = default;
};

/// 1 for dispensing tiles, 2 for interfaces.
int site_capacity(const Placement& p, int cell);

/// Midpoints of all edges shared by two 4-adjacent tiles.
std::vector<RestingSite> resting_candidates(const Placement& p);

struct RestingSiteSet {
  std::vector<RestingSite> sites;
  int n_candidates = 0;
  bool exact = false;
};

/// Largest capacity-feasible subset of candidates. Branch-and-bound up to
/// `bnb_limit` candidates; above it a max-flow on the bipartite tile graph
/// (lattice tiles are 2-colourable), which is also exact.
RestingSiteSet generate_resting_sites(const Placement& p, int bnb_limit = 60);

/// Ticks from a tile centre into a site (via the nearer adjacent tile).
Ticks site_distance(const PlacementIndex& index, const RestingSite& s, int cell);

struct Transit {
  int mover = 0;
  int from_op = 0;  // op indices into the schedule
  int to_op = 0;
  int from_cell = 0;
  int to_cell = 0;
  Ticks depart = 0;  // end of from_op
  Ticks arrive = 0;  // start of to_op
  Ticks gap = 0;
  Ticks travel = 0;
  Ticks idle = 0;
};

/// Consecutive op pairs of each mover whose gap exceeds travel.
std::vector<Transit> extract_transits(const Schedule& s, const PlacementIndex& index);

struct AssignOptions {
  bool strict = false;          // every transit must get a site
  Ticks unassigned_penalty = 0;  // 0: derived from the instance
  int exact_limit = 30;
  long node_limit = 2'000'000;
};

struct RestingAssignment {
  std::vector<int> site_of;  // per transit, -1 = waits on a tile
  Ticks cost = 0;            // detour ticks of assigned transits
  int unassigned = 0;
  bool exact = false;
};

/// Detour of transit t through site s, or nullopt when it does not fit the gap.
std::optional<Ticks> detour(const Transit& t, const RestingSite& s, const PlacementIndex& index);

/// Minimises total detour; transits with overlapping [depart, arrive)
/// never share a site. Strict mode throws InfeasibleError naming an
/// overlapping group larger than the number of usable sites.
RestingAssignment assign_resting_sites(const std::vector<Transit>& transits, const std::vector<RestingSite>& sites,
                                       const PlacementIndex& index, const AssignOptions& opt = {});

/// Largest set of transits sharing one tick.
std::vector<int> overlap_clique(const std::vector<Transit>& transits);

/// Tile sequence from a to b inclusive: x first then y when that stays on
/// the layout, otherwise a shortest path in the tile graph.
std::vector<int> tile_path(const PlacementIndex& index, int a, int b);

enum class PosKind { Parked, Tile, Edge, Site };
enum class PosState { Move, Dispense, Swap, Rest };

struct TickPos {
  Ticks tick = 0;
  PosKind kind = PosKind::Parked;
  int cell = -1;  // Tile: the cell; Edge: cell being left
  int other = -1; // Edge: cell being entered; Site: site index
  PosState state = PosState::Move;
};

/// Per-mover positions for every tick in [0, horizon).
struct MoverPaths {
  Ticks horizon = 0;
  std::vector<std::vector<TickPos>> pos;

  /// Cell occupied at tick t, or -1.
  int occupied(int mover, Ticks t) const;
};

MoverPaths build_paths(const Schedule& s, const PlacementIndex& index, const std::vector<Transit>& transits,
                       const RestingAssignment& resting, const std::vector<RestingSite>& sites);

/// Per op: ticks during which another mover occupies the op's cell while
/// the op dispenses. Interface ops are never interrupted.
std::vector<Ticks> detect_conflicts(const MoverPaths& paths, const Schedule& s);

enum class SameCellWeight { Duration, Unit };

struct RoutingOptions {
  int max_iterations = 100;
  SameCellWeight same_cell = SameCellWeight::Duration;
  bool use_resting_sites = true;
  AssignOptions assign;
};

struct DagEdge {
  int from = 0;  // -1 is the source vertex
  int to = 0;
  Ticks weight = 0;
  bool same_mover = true;
};

struct PrecedenceDag {
  int n_ops = 0;
  std::vector<DagEdge> edges;
  std::vector<int> topo;  // op order compatible with every edge
};

/// Chain edges per mover, edges between consecutive ops on a cell (in
/// start order), and source edges pinning each op at its current start.
PrecedenceDag build_dag(const Schedule& s, const PlacementIndex& index, const std::vector<Ticks>& interruption,
                        SameCellWeight w);

bool is_acyclic(const PrecedenceDag& dag);

/// Longest-path start ticks from the source vertex.
std::vector<Ticks> longest_path_starts(const PrecedenceDag& dag);

struct RoutedPlan {
  Schedule schedule;  // adjusted; plan[i].interruption is the ledger entry
  MoverPaths paths;
  std::vector<Transit> transits;
  RestingAssignment resting;
  std::vector<RestingSite> sites;
  Ticks makespan_before = 0;
  Ticks makespan = 0;
  int iterations = 0;
  bool converged = false;
  int residual_conflicts = 0;
  std::vector<Ticks> makespan_history;
};

RoutedPlan resolve_conflicts(const Schedule& s, const PlacementIndex& index, const std::vector<RestingSite>& sites,
                             const RoutingOptions& opt = {});

/// Concatenates batch schedules on one fleet: bridging edges from each
/// mover's last op in batch b to its first op in b+1 and from each cell's
/// last op to its first op in the next batch; start ticks by longest path.
Schedule merge_batches(std::span<const Schedule> batches, const PlacementIndex& index,
                       SameCellWeight w = SameCellWeight::Duration);

}  // namespace planarfab
