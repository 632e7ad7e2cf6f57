#pragma once

// Operations, schedules, the schedule validator, and the makespan lower
// bound from per-order processing-time bounds on identical movers.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "planarfab/core.hpp"
#include "planarfab/pcmax.hpp"
#include "planarfab/shppn.hpp"

namespace planarfab {

enum class OpKind { Start = 0, Dispense = 1, Finish = 2 };

std::string_view op_kind_name(OpKind k) noexcept;

struct OperationSpec {
  int id = 0;
  int order_id = 0;
  DrugId drug = -1;  // -1 for interface ops
  Ticks duration = 1;
  OpKind kind = OpKind::Dispense;
  friend bool operator==(const OperationSpec&, const OperationSpec&) = default;
};

/// Ops grouped by order (input order); within an order start, dispensing
/// ops by drug id, finish. Ids are consecutive from 0.
std::vector<OperationSpec> build_operations(std::span<const Order> orders, Ticks eta);

struct ScheduledOp {
  int mover = 0;
  int cell = 0;
  Ticks start = 0;
  Ticks end = 0;
  Ticks interruption = 0;  // paused ticks added by routing
  friend bool operator==(const ScheduledOp&, const ScheduledOp&) = default;
};

struct Schedule {
  std::vector<OperationSpec> ops;
  std::vector<ScheduledOp> plan;  // plan[i] realises ops[i]
  int n_movers = 1;
  Ticks makespan = 0;
  friend bool operator==(const Schedule&, const Schedule&) = default;
};

/// Ops of one mover sorted by start tick.
std::vector<std::vector<int>> mover_sequences(const Schedule& s);

Ticks compute_makespan(const Schedule& s);

struct Violation {
  int rule = 0;  // 1..8
  std::string message;
};

/// Rules: (1) every op of the orders scheduled once on an admissible cell;
/// (2) per mover, gaps cover travel; (3) one mover per order, start first,
/// finish last, no interleaving; (4) per cell, intervals disjoint;
/// (5) start/finish on interfaces; (6) end = start + duration +
/// interruption; (7) makespan = max end; (8) nonnegative times.
std::vector<Violation> validate_schedule(const Schedule& s, std::span<const Order> orders,
                                         const PlacementIndex& index, Ticks eta);

struct LowerBoundResult {
  std::vector<Ticks> order_bound;  // T_p
  std::vector<Ticks> kappa;
  std::vector<int> machine;  // per order; optimal when exact, LPT otherwise
  Ticks value = 0;
  bool exact = false;
};

LowerBoundResult lower_bound(std::span<const Order> orders, const PlacementIndex& index, int n_movers,
                             Ticks eta, const KappaOptions& opt = {});

}  // namespace planarfab
