#pragma once

// Exact asymmetric TSP for small matrices.

#include <cstdint>
#include <vector>

namespace planarfab {

using Cost = std::int64_t;
using CostMatrix = std::vector<std::vector<Cost>>;

/// Marks a forbidden arc. Sums of up to ~8000 such values still fit in
/// int64, so path costs never overflow.
inline constexpr Cost kForbidden = Cost{1} << 50;

struct Tour {
  std::vector<int> order;  // starts at vertex 0; closing arc implied
  Cost cost = 0;
};

enum class TspMethod { Auto, HeldKarp, BranchAndBound };

inline constexpr int kHeldKarpMax = 18;
inline constexpr int kTspMax = 25;

/// Optimal tour. Auto uses Held-Karp up to 18 vertices and
/// branch-and-bound with an assignment bound up to 25. Throws LimitError
/// above the guard and InfeasibleError when every tour uses a forbidden arc.
Tour solve_tsp(const CostMatrix& c, TspMethod method = TspMethod::Auto);

/// Minimum-cost perfect assignment (rows to columns).
Cost assignment_lower_bound(const CostMatrix& c);

Cost tour_cost(const CostMatrix& c, const std::vector<int>& order);

}  // namespace planarfab
