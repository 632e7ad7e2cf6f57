#pragma once

// Makespan search: list decoding of per-mover order sequences, large
// neighbourhood search over them, and an exhaustive search that proves
// optimality on toy instances.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "planarfab/scheduling.hpp"

namespace planarfab {

struct ScheduleParams {
  int n_movers = 1;
  Ticks eta = 2;
  double time_limit_s = 10.0;
  long max_iterations = 1'000'000'000;
  std::uint64_t seed = 0;
  std::optional<std::vector<int>> warm_start;  // mover per order
  Ticks stop_at = 0;                           // stop once makespan <= stop_at
  int stale_restart = 500;
  int max_destroy = 4;
  bool exact_small = true;
  int exact_max_orders = 3;
  int exact_max_movers = 2;
  long exact_node_limit = 5'000'000;
};

struct IncumbentPoint {
  long iteration = 0;
  double seconds = 0.0;
  Ticks makespan = 0;
};

struct ScheduleResult {
  Schedule schedule;
  std::vector<IncumbentPoint> trace;
  long iterations = 0;
  bool proven_optimal = false;
  double seconds = 0.0;
};

/// Mover order sequences plus a per-order route mode: 0 picks the
/// earliest-finishing dispenser at each step, 1 follows the order's
/// optimal path cells.
struct SequenceSolution {
  std::vector<std::vector<int>> seq;  // per mover, indices into orders
  std::vector<char> fixed_route;      // per order
};

/// Turns a sequence solution into timed operations. Movers start at an
/// interface of their choice at tick 0; each op goes into the earliest
/// gap of its cell calendar.
Schedule decode_sequences(const SequenceSolution& sol, std::span<const Order> orders,
                          const PlacementIndex& index, Ticks eta);

ScheduleResult schedule(std::span<const Order> orders, const PlacementIndex& index,
                        const ScheduleParams& params);

/// Exhaustive search over start-time-sorted operation sequences; returns
/// nullopt when the node limit is hit before proving optimality.
std::optional<Schedule> exact_schedule(std::span<const Order> orders, const PlacementIndex& index,
                                       int n_movers, Ticks eta, long node_limit,
                                       std::optional<Ticks> incumbent = std::nullopt);

/// Partitions orders into batches of at most batch_size with a seeded
/// shuffle. Returns indices into orders.
std::vector<std::vector<int>> partition_batches(std::size_t n_orders, std::size_t batch_size,
                                                std::uint64_t seed);

}  // namespace planarfab
