#pragma once

// Tactical packing of drug dispensers onto unplaced tiles.
//
// Stage 1 chooses a multiplicity z_g per drug and distinct tiles for its
// copies so the heaviest tile load is minimal; each copy carries
// pi_g = u_g / z_g. Stage 2 keeps z, pi and the stage-1 optimum as a cap
// and regroups copies to maximise within-tile pairwise correlation.
//
// Loads are compared exactly: every pi_g is scaled by L = lcm(1..m_max),
// which makes u_g * L / z_g an integer.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "planarfab/core.hpp"
#include "planarfab/ordergen.hpp"

namespace planarfab {

struct PackingConfig {
  int n_tiles = 1;  // tiles available for dispensers
  int n_dispensers = 1;
  int d_max = 4;
  int m_max = 4;
  std::uint64_t seed = 0;
  double time_limit_s = 10.0;
  int restarts = 20;
  int exact_max_drugs = 12;
  int exact_max_tiles = 12;
  long exact_node_limit = 20'000'000;
  bool allow_empty_tiles = true;
};

struct Packing {
  std::vector<std::vector<DrugId>> tiles;  // sorted drug lists; may be empty
  std::vector<int> z;
  std::vector<double> pi;
  std::vector<double> mu;
  double mu_max = 0.0;
  DemandVector demand;
  double lower_bound = 0.0;  // certified bound on the optimal mu_max
  bool exact = false;

  int n_drugs() const noexcept { return static_cast<int>(z.size()); }
  friend bool operator==(const Packing&, const Packing&) = default;
};

/// Builds z, pi, mu and mu_max from tile contents and demand.
Packing make_packing(std::vector<std::vector<DrugId>> tiles, const DemandVector& demand);

/// Integer tile loads scaled by lcm(1..m_max); second is the scale.
std::pair<std::vector<std::int64_t>, std::int64_t> scaled_loads(const Packing& p, int m_max);

std::vector<std::string> check_packing(const Packing& p, const PackingConfig& cfg);

/// Infeasibility reasons; empty when a packing exists.
std::vector<std::string> packing_feasibility(int n_drugs, const PackingConfig& cfg);

Packing pack_min_load(const DemandVector& demand, const PackingConfig& cfg);

/// Sum over tiles of o_{g,g'} over unordered pairs on the tile.
double correlation_score(const Packing& p, const std::vector<std::vector<double>>& corr);

Packing pack_correlation(const Packing& stage1, const std::vector<std::vector<double>>& corr,
                         const PackingConfig& cfg);

struct TileLoad {
  int tile = 0;
  std::vector<std::pair<DrugId, double>> parts;
  double mu = 0.0;
};

std::vector<TileLoad> tile_utilization(const Packing& p);

}  // namespace planarfab
