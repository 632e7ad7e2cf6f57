#include "planarfab/pcmax.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "planarfab/error.hpp"

namespace planarfab {

namespace {

std::int64_t trivial_bound(std::span<const std::int64_t> t, int m) {
  std::int64_t mx = 0, sum = 0;
  for (auto x : t) {
    mx = std::max(mx, x);
    sum += x;
  }
  return std::max(mx, (sum + m - 1) / m);
}

std::vector<std::size_t> by_decreasing(std::span<const std::int64_t> t) {
  std::vector<std::size_t> idx(t.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return t[a] > t[b]; });
  return idx;
}

PcmaxResult lpt(std::span<const std::int64_t> t, int m) {
  PcmaxResult r;
  r.machine.assign(t.size(), 0);
  std::vector<std::int64_t> load(static_cast<std::size_t>(m), 0);
  for (auto j : by_decreasing(t)) {
    const auto k = static_cast<std::size_t>(std::min_element(load.begin(), load.end()) - load.begin());
    load[k] += t[j];
    r.machine[j] = static_cast<int>(k);
  }
  r.value = *std::max_element(load.begin(), load.end());
  return r;
}

struct Search {
  std::span<const std::int64_t> t;
  std::vector<std::size_t> order;
  std::vector<std::int64_t> suffix;
  std::vector<std::int64_t> load;
  std::vector<int> cur;
  std::vector<int> best_machine;
  std::int64_t best = 0;
  std::int64_t floor = 0;

  void dfs(std::size_t i, std::int64_t curmax) {
    if (best <= floor) return;
    if (i == order.size()) {
      if (curmax < best) {
        best = curmax;
        best_machine = cur;
      }
      return;
    }
    const std::int64_t job = t[order[i]];
    for (std::size_t k = 0; k < load.size(); ++k) {
      // machines with equal load are interchangeable
      bool dup = false;
      for (std::size_t q = 0; q < k && !dup; ++q) dup = load[q] == load[k];
      if (dup) continue;
      const std::int64_t nl = load[k] + job;
      if (nl >= best) continue;
      load[k] = nl;
      cur[order[i]] = static_cast<int>(k);
      dfs(i + 1, std::max(curmax, nl));
      load[k] -= job;
      if (best <= floor) return;
    }
  }
};

}  // namespace

PcmaxResult p_cmax(std::span<const std::int64_t> times, int m, PcmaxMode mode) {
  if (m < 1) throw ConfigError("p_cmax needs at least one machine");
  for (auto x : times)
    if (x < 0) throw ConfigError("p_cmax processing times must be >= 0");
  if (times.empty()) return {0, {}, true};
  switch (mode) {
    case PcmaxMode::Bound: {
      PcmaxResult r;
      r.value = trivial_bound(times, m);
      return r;
    }
    case PcmaxMode::Lpt:
      return lpt(times, m);
    case PcmaxMode::Exact:
      break;
  }
  if (static_cast<int>(times.size()) > kPcmaxExactMax)
    throw LimitError("exact P||Cmax limited to " + std::to_string(kPcmaxExactMax) + " jobs");
  PcmaxResult inc = lpt(times, m);
  Search s{times, by_decreasing(times), {}, std::vector<std::int64_t>(static_cast<std::size_t>(m), 0),
           std::vector<int>(times.size(), 0), inc.machine, inc.value, trivial_bound(times, m)};
  s.dfs(0, 0);
  return {s.best, s.best_machine, true};
}

}  // namespace planarfab
