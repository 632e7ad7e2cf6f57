#include "planarfab/tsp.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "planarfab/error.hpp"
#include "planarfab/kernels.hpp"

namespace planarfab {

namespace {

Cost clamp_cost(Cost v) { return v >= kForbidden ? kForbidden : v; }

void check_square(const CostMatrix& c) {
  for (const auto& row : c)
    if (row.size() != c.size()) throw ConfigError("cost matrix is not square");
}

Tour trivial(const CostMatrix& c) {
  Tour t;
  for (int i = 0; i < static_cast<int>(c.size()); ++i) t.order.push_back(i);
  t.cost = tour_cost(c, t.order);
  return t;
}

// dp[S][k]: cheapest path 0 -> ... -> k+1 visiting exactly the vertices in
// S (bits over 1..n-1). Non-members of S hold kForbidden so the inner
// minimisation is a full-width min-plus product.
Tour held_karp(const CostMatrix& c) {
  const int n = static_cast<int>(c.size());
  const int m = n - 1;
  const std::size_t states = std::size_t{1} << m;
  std::vector<Cost> dp(states * static_cast<std::size_t>(m), kForbidden);
  std::vector<Cost> col(static_cast<std::size_t>(m) * m);  // col[j][k] = c[k+1][j+1]
  for (int j = 0; j < m; ++j)
    for (int k = 0; k < m; ++k)
      col[static_cast<std::size_t>(j) * m + k] = c[static_cast<std::size_t>(k) + 1][static_cast<std::size_t>(j) + 1];
  for (int j = 0; j < m; ++j)
    dp[(std::size_t{1} << j) * m + j] = clamp_cost(c[0][static_cast<std::size_t>(j) + 1]);

  const auto& K = kernels::active();
  for (std::size_t S = 1; S < states; ++S) {
    if ((S & (S - 1)) == 0) continue;
    Cost* row = dp.data() + S * m;
    for (int j = 0; j < m; ++j) {
      if (!(S >> j & 1)) continue;
      const std::size_t prev = S & ~(std::size_t{1} << j);
      const auto r = K.min_plus(dp.data() + prev * m, col.data() + static_cast<std::size_t>(j) * m,
                                static_cast<std::size_t>(m));
      row[j] = clamp_cost(r.value);
    }
  }
  const std::size_t full = states - 1;
  Cost best = kForbidden;
  int last = -1;
  for (int j = 0; j < m; ++j) {
    const Cost v = clamp_cost(dp[full * m + j] + c[static_cast<std::size_t>(j) + 1][0]);
    if (last < 0 || v < best) {
      best = v;
      last = j;
    }
  }
  if (best >= kForbidden) throw InfeasibleError("no tour avoids forbidden arcs");

  std::vector<int> rev;
  std::size_t S = full;
  int j = last;
  while (j >= 0) {
    rev.push_back(j + 1);
    const std::size_t prev = S & ~(std::size_t{1} << j);
    if (prev == 0) break;
    int pick = -1;
    const Cost target = dp[S * m + j];
    for (int k = 0; k < m; ++k) {
      if (!(prev >> k & 1)) continue;
      if (clamp_cost(dp[prev * m + k] + c[static_cast<std::size_t>(k) + 1][static_cast<std::size_t>(j) + 1]) == target) {
        pick = k;
        break;
      }
    }
    S = prev;
    j = pick;
  }
  Tour t;
  t.order.push_back(0);
  t.order.insert(t.order.end(), rev.rbegin(), rev.rend());
  t.cost = best;
  return t;
}

class BranchAndBound {
 public:
  explicit BranchAndBound(const CostMatrix& c) : c_(c), n_(static_cast<int>(c.size())) {}

  Tour run() {
    // nearest-neighbour incumbent from vertex 0
    std::vector<int> nn{0};
    std::vector<char> used(static_cast<std::size_t>(n_), 0);
    used[0] = 1;
    for (int s = 1; s < n_; ++s) {
      int best = -1;
      for (int v = 0; v < n_; ++v)
        if (!used[static_cast<std::size_t>(v)] &&
            (best < 0 || c_[static_cast<std::size_t>(nn.back())][static_cast<std::size_t>(v)] <
                             c_[static_cast<std::size_t>(nn.back())][static_cast<std::size_t>(best)]))
          best = v;
      nn.push_back(best);
      used[static_cast<std::size_t>(best)] = 1;
    }
    best_ = tour_cost(c_, nn);
    best_order_ = nn;
    std::vector<int> path{0};
    std::vector<char> in(static_cast<std::size_t>(n_), 0);
    in[0] = 1;
    dfs(path, in, 0);
    if (best_ >= kForbidden) throw InfeasibleError("no tour avoids forbidden arcs");
    return {best_order_, best_};
  }

 private:
  Cost bound(const std::vector<int>& path, const std::vector<char>& in) const {
    // rows: last vertex + unvisited; cols: unvisited + vertex 0
    std::vector<int> rows{path.back()}, cols{0};
    for (int v = 0; v < n_; ++v)
      if (!in[static_cast<std::size_t>(v)]) {
        rows.push_back(v);
        cols.push_back(v);
      }
    const auto k = rows.size();
    CostMatrix sub(k, std::vector<Cost>(k));
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j)
        sub[i][j] = rows[i] == cols[j] ? kForbidden
                                       : c_[static_cast<std::size_t>(rows[i])][static_cast<std::size_t>(cols[j])];
    return assignment_lower_bound(sub);
  }

  void dfs(std::vector<int>& path, std::vector<char>& in, Cost cost) {
    if (static_cast<int>(path.size()) == n_) {
      const Cost total = clamp_cost(cost + c_[static_cast<std::size_t>(path.back())][0]);
      if (total < best_) {
        best_ = total;
        best_order_ = path;
      }
      return;
    }
    if (clamp_cost(cost + bound(path, in)) >= best_) return;
    std::vector<std::pair<Cost, int>> next;
    for (int v = 0; v < n_; ++v)
      if (!in[static_cast<std::size_t>(v)])
        next.emplace_back(c_[static_cast<std::size_t>(path.back())][static_cast<std::size_t>(v)], v);
    std::sort(next.begin(), next.end());
    for (auto [w, v] : next) {
      if (clamp_cost(cost + w) >= best_) break;
      path.push_back(v);
      in[static_cast<std::size_t>(v)] = 1;
      dfs(path, in, cost + w);
      in[static_cast<std::size_t>(v)] = 0;
      path.pop_back();
    }
  }

  const CostMatrix& c_;
  int n_;
  Cost best_ = kForbidden;
  std::vector<int> best_order_;
};

}  // namespace

Cost tour_cost(const CostMatrix& c, const std::vector<int>& order) {
  if (order.empty()) return 0;
  Cost s = 0;
  for (std::size_t i = 0; i < order.size(); ++i)
    s += c.at(static_cast<std::size_t>(order[i])).at(static_cast<std::size_t>(order[(i + 1) % order.size()]));
  return clamp_cost(s);
}

// Shortest augmenting path Hungarian method with potentials, O(n^3).
Cost assignment_lower_bound(const CostMatrix& a) {
  const int n = static_cast<int>(a.size());
  if (n == 0) return 0;
  std::vector<Cost> u(static_cast<std::size_t>(n) + 1, 0), v(static_cast<std::size_t>(n) + 1, 0);
  std::vector<int> p(static_cast<std::size_t>(n) + 1, 0), way(static_cast<std::size_t>(n) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<Cost> minv(static_cast<std::size_t>(n) + 1, kForbidden * 4);
    std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = p[static_cast<std::size_t>(j0)];
      Cost delta = kForbidden * 4;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        const auto ju = static_cast<std::size_t>(j);
        if (used[ju]) continue;
        const Cost cur = a[static_cast<std::size_t>(i0) - 1][ju - 1] - u[static_cast<std::size_t>(i0)] - v[ju];
        if (cur < minv[ju]) {
          minv[ju] = cur;
          way[ju] = j0;
        }
        if (minv[ju] < delta) {
          delta = minv[ju];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        const auto ju = static_cast<std::size_t>(j);
        if (used[ju]) {
          u[static_cast<std::size_t>(p[ju])] += delta;
          v[ju] -= delta;
        } else {
          minv[ju] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  Cost total = 0;
  for (int j = 1; j <= n; ++j)
    total += a[static_cast<std::size_t>(p[static_cast<std::size_t>(j)]) - 1][static_cast<std::size_t>(j) - 1];
  return clamp_cost(total);
}

Tour solve_tsp(const CostMatrix& c, TspMethod method) {
  check_square(c);
  const int n = static_cast<int>(c.size());
  if (n > kTspMax) throw LimitError("TSP size " + std::to_string(n) + " exceeds the exact-solver guard");
  if (n <= 2) {
    Tour t = trivial(c);
    if (t.cost >= kForbidden) throw InfeasibleError("no tour avoids forbidden arcs");
    return t;
  }
  if (method == TspMethod::Auto) method = n <= kHeldKarpMax ? TspMethod::HeldKarp : TspMethod::BranchAndBound;
  if (method == TspMethod::HeldKarp) {
    if (n > kHeldKarpMax) throw LimitError("Held-Karp limited to 18 vertices");
    return held_karp(c);
  }
  return BranchAndBound(c).run();
}

}  // namespace planarfab
