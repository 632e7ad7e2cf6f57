#pragma once

// Identical parallel machines, minimise makespan.

#include <cstdint>
#include <span>
#include <vector>

namespace planarfab {

enum class PcmaxMode { Exact, Bound, Lpt };

struct PcmaxResult {
  std::int64_t value = 0;
  std::vector<int> machine;  // per job; empty in Bound mode
  bool exact = false;
};

inline constexpr int kPcmaxExactMax = 20;

/// Exact: branch-and-bound, n <= 20 (LimitError above).
/// Bound: max(max t, ceil(sum t / m)), always a valid lower bound.
/// Lpt: longest-processing-time list schedule; an upper value only.
PcmaxResult p_cmax(std::span<const std::int64_t> times, int m, PcmaxMode mode);

}  // namespace planarfab
