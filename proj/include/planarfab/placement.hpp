#pragma once

// Mapping packed tiles and interfaces onto layout coordinates.
//
// Two scorers: a sampled mover walk (next dispenser drawn with weight
// 1/distance, co-located drugs served together) and the exact mean of the
// optimal per-order paths. A permutation GA searches placements.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "planarfab/core.hpp"
#include "planarfab/packing.hpp"
#include "planarfab/shppn.hpp"

namespace planarfab {

struct PlacementScore {
  double mean_steps = 0.0;
  std::vector<double> per_order_steps;  // mean over episodes
  int episodes = 0;
  std::uint64_t seed = 0;
};

/// Sampled walk score. Episode e of order i draws from its own substream,
/// so scores are reproducible regardless of evaluation order.
PlacementScore fitness(const PlacementIndex& index, std::span<const Order> history, int episodes,
                       std::uint64_t seed);

struct AnalyticalCost {
  double mean = 0.0;
  std::vector<Ticks> per_order;
};

/// Mean optimal path length. Throws LimitError when an order's sequence
/// count exceeds `guard` (0 disables the guard).
AnalyticalCost analytical_cost(const PlacementIndex& index, std::span<const Order> history,
                               double guard = 1e6);

enum class Scorer { Sampled, Analytical };

struct GaParams {
  int population = 150;
  long max_evaluations = 50'000;
  int episodes = 20;
  double crossover_rate = 0.9;
  double mutation_rate = 0.2;
  int tournament = 3;
  int threads = 1;
  Scorer scorer = Scorer::Sampled;
};

struct GaTracePoint {
  int generation = 0;
  long evaluations = 0;
  double best_fitness = 0.0;
  double mean_fitness = 0.0;
};

struct GaResult {
  Placement placement;
  std::vector<int> genes;
  double best_fitness = 0.0;
  long evaluations = 0;
  std::vector<GaTracePoint> trace;
};

/// genes[pos] is the item placed on layout.tiles[pos]; items
/// 0..|tiles|-1 are packed tiles, the rest are interfaces.
Placement decode_genes(const Packing& packing, const Layout& layout, std::span<const int> genes);

GaResult ga_place(const Packing& packing, const Layout& layout, std::span<const Order> history,
                  const GaParams& params, std::uint64_t seed);

/// Order crossover (OX1) on permutations; exposed for property tests.
std::vector<int> order_crossover(std::span<const int> a, std::span<const int> b, std::size_t lo,
                                 std::size_t hi);
/// Reverses genes[lo..hi].
void inversion_mutation(std::vector<int>& genes, std::size_t lo, std::size_t hi);

}  // namespace planarfab
