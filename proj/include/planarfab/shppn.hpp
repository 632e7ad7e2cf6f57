#pragma once

// Shortest interface-to-interface path that visits one dispenser per drug
// of an order (a generalized TSP path), and the per-order processing-time
// bound built on it.

#include <cstdint>
#include <optional>
#include <vector>

#include "planarfab/core.hpp"
#include "planarfab/tsp.hpp"

namespace planarfab {

/// Vertices are 0..cost.size()-1; every vertex belongs to exactly one
/// cluster. Without `path` the instance asks for a cheapest cycle through
/// one vertex per cluster. With `path`, it asks for a cheapest path that
/// starts in cluster path->first and ends in cluster path->second.
struct GtspInstance {
  std::vector<std::vector<int>> clusters;
  CostMatrix cost;
  std::optional<std::pair<int, int>> path;
};

struct NoonBeanTransform {
  CostMatrix atsp;
  std::vector<int> cluster_of;  // per ATSP vertex; -1 for the virtual vertex
  int virtual_vertex = -1;      // -1 when no path conversion
  Cost shift = 0;               // M
  int n_clusters = 0;           // clusters crossed by one tour
};

std::vector<std::string> check_gtsp(const GtspInstance& g);

NoonBeanTransform noon_bean(const GtspInstance& g);

struct GtspSolution {
  std::vector<int> vertices;  // one per cluster, in visiting order
  Cost cost = 0;
};

/// Recovers the cluster representatives from an optimal ATSP tour and
/// re-costs them on the original matrix.
GtspSolution decode_noon_bean(const GtspInstance& g, const NoonBeanTransform& t, const Tour& tour);

/// Noon-Bean transform followed by exact TSP.
GtspSolution solve_gtsp(const GtspInstance& g, TspMethod method = TspMethod::Auto);

enum class KappaMethod { Enumeration, NoonBean, ClusterDp };

struct PathResult {
  Ticks kappa = 0;
  std::vector<int> cells;     // start interface, one cell per drug, end interface
  std::vector<DrugId> drugs;  // drugs[i] is served at cells[i + 1]
  KappaMethod method = KappaMethod::Enumeration;
};

struct KappaOptions {
  double enumeration_limit = 1e5;
  bool allow_noon_bean = true;
  std::optional<KappaMethod> force;
};

/// Count of (start, drug order, alternatives, end) sequences.
double sequence_count(const Order& order, const PlacementIndex& index);

PathResult kappa(const Order& order, const PlacementIndex& index, const KappaOptions& opt = {});

/// The GTSP path instance for an order: interface copies as start and end
/// clusters, one cluster of alternative cells per drug. vertex_cell maps
/// each GTSP vertex back to its placement cell.
GtspInstance order_gtsp(const Order& order, const PlacementIndex& index, std::vector<int>& vertex_cell,
                        std::vector<DrugId>& vertex_drug);

/// 2 * eta + kappa + sum of durations.
Ticks order_time_bound(const Order& order, const PlacementIndex& index, Ticks eta,
                       const KappaOptions& opt = {});

}  // namespace planarfab
