#include "planarfab/shppn.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "planarfab/error.hpp"

namespace planarfab {

std::vector<std::string> check_gtsp(const GtspInstance& g) {
  std::vector<std::string> v;
  const auto n = g.cost.size();
  for (const auto& row : g.cost)
    if (row.size() != n) v.push_back("cost matrix is not square");
  std::vector<int> seen(n, 0);
  for (const auto& c : g.clusters) {
    if (c.empty()) v.push_back("empty cluster");
    for (int x : c) {
      if (x < 0 || static_cast<std::size_t>(x) >= n) {
        v.push_back("cluster vertex out of range");
        continue;
      }
      ++seen[static_cast<std::size_t>(x)];
    }
  }
  for (int s : seen)
    if (s != 1) {
      v.push_back("clusters do not partition the vertices");
      break;
    }
  for (const auto& row : g.cost)
    for (Cost c : row)
      if (c < 0) {
        v.push_back("negative cost");
        return v;
      }
  if (g.path) {
    const auto [s, e] = *g.path;
    const int m = static_cast<int>(g.clusters.size());
    if (s < 0 || e < 0 || s >= m || e >= m || s == e) v.push_back("path endpoints must be two distinct clusters");
  }
  return v;
}

NoonBeanTransform noon_bean(const GtspInstance& g) {
  if (auto v = check_gtsp(g); !v.empty()) throw ConfigError("invalid GTSP instance: " + v.front());
  const int V = static_cast<int>(g.cost.size());
  NoonBeanTransform t;
  const int N = V + (g.path ? 1 : 0);
  t.virtual_vertex = g.path ? V : -1;
  t.n_clusters = static_cast<int>(g.clusters.size()) + (g.path ? 1 : 0);
  t.cluster_of.assign(static_cast<std::size_t>(N), -1);
  std::vector<int> succ(static_cast<std::size_t>(N));
  std::iota(succ.begin(), succ.end(), 0);
  for (std::size_t ci = 0; ci < g.clusters.size(); ++ci) {
    const auto& c = g.clusters[ci];
    for (std::size_t i = 0; i < c.size(); ++i) {
      t.cluster_of[static_cast<std::size_t>(c[i])] = static_cast<int>(ci);
      succ[static_cast<std::size_t>(c[i])] = c[(i + 1) % c.size()];
    }
  }
  t.shift = 1;
  for (int a = 0; a < V; ++a)
    for (int b = 0; b < V; ++b) {
      const Cost c = g.cost[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
      if (a != b && c < kForbidden) t.shift += c;
    }
  const Cost M = t.shift;

  auto base = [&](int from, int to) -> Cost {
    if (to == t.virtual_vertex)
      return t.cluster_of[static_cast<std::size_t>(from)] == g.path->second ? 0 : kForbidden;
    if (from == t.virtual_vertex)
      return t.cluster_of[static_cast<std::size_t>(to)] == g.path->first ? 0 : kForbidden;
    return g.cost[static_cast<std::size_t>(from)][static_cast<std::size_t>(to)];
  };

  t.atsp.assign(static_cast<std::size_t>(N), std::vector<Cost>(static_cast<std::size_t>(N), kForbidden));
  for (int u = 0; u < N; ++u) {
    const auto ui = static_cast<std::size_t>(u);
    for (int w = 0; w < N; ++w) {
      if (u == w) continue;
      const auto wi = static_cast<std::size_t>(w);
      if (t.cluster_of[ui] == t.cluster_of[wi]) {
        if (succ[ui] == w) t.atsp[ui][wi] = 0;
        continue;
      }
      const Cost b = base(succ[ui], w);
      if (b < kForbidden) t.atsp[ui][wi] = b + M;
    }
  }
  return t;
}

GtspSolution decode_noon_bean(const GtspInstance& g, const NoonBeanTransform& t, const Tour& tour) {
  GtspSolution s;
  const auto& ord = tour.order;
  const std::size_t n = ord.size();
  if (n == 0) return s;
  auto cl = [&](std::size_t i) { return t.cluster_of[static_cast<std::size_t>(ord[i % n])]; };
  std::size_t start = 0;
  if (t.virtual_vertex >= 0) {
    start = static_cast<std::size_t>(std::find(ord.begin(), ord.end(), t.virtual_vertex) - ord.begin());
  } else {
    while (start < n && cl(start + n - 1) == cl(start)) ++start;
    if (start == n) start = 0;
  }
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = start + k;
    if (k > 0 && cl(i) == cl(i - 1)) continue;
    if (ord[i % n] == t.virtual_vertex) continue;
    s.vertices.push_back(ord[i % n]);
  }
  for (std::size_t i = 0; i + 1 < s.vertices.size(); ++i)
    s.cost += g.cost[static_cast<std::size_t>(s.vertices[i])][static_cast<std::size_t>(s.vertices[i + 1])];
  if (!g.path && s.vertices.size() > 1)
    s.cost += g.cost[static_cast<std::size_t>(s.vertices.back())][static_cast<std::size_t>(s.vertices.front())];
  return s;
}

GtspSolution solve_gtsp(const GtspInstance& g, TspMethod method) {
  if (!g.path && g.clusters.size() == 1) {
    if (auto v = check_gtsp(g); !v.empty()) throw ConfigError("invalid GTSP instance: " + v.front());
    return {{g.clusters[0][0]}, 0};
  }
  const auto t = noon_bean(g);
  const Tour tour = solve_tsp(t.atsp, method);
  return decode_noon_bean(g, t, tour);
}

namespace {

const std::vector<int>& alternatives(const PlacementIndex& index, DrugId g) {
  if (g < 0 || g >= index.n_drugs()) throw ConfigError("order references an unknown drug");
  const auto& c = index.cells_of(g);
  if (c.empty()) throw InfeasibleError("drug " + std::to_string(g) + " has no placed dispenser");
  return c;
}

void require_interface(const PlacementIndex& index) {
  if (index.interfaces().empty()) throw InfeasibleError("placement has no interface");
}

std::vector<DrugId> sorted_drugs(const Order& order) {
  std::vector<DrugId> d;
  for (const auto& it : order.items) d.push_back(it.drug);
  std::sort(d.begin(), d.end());
  return d;
}

PathResult by_enumeration(const Order& order, const PlacementIndex& index) {
  const auto& I = index.interfaces();
  std::vector<DrugId> drugs = sorted_drugs(order);
  PathResult best;
  best.kappa = -1;
  best.method = KappaMethod::Enumeration;
  const std::size_t k = drugs.size();
  std::vector<std::vector<Ticks>> cost(k);
  std::vector<std::vector<int>> back(k);
  do {
    // layered shortest path over the alternatives of this drug order
    for (std::size_t l = 0; l < k; ++l) {
      const auto& alt = alternatives(index, drugs[l]);
      cost[l].assign(alt.size(), 0);
      back[l].assign(alt.size(), -1);
      for (std::size_t a = 0; a < alt.size(); ++a) {
        Ticks bestv = -1;
        int arg = -1;
        if (l == 0) {
          for (std::size_t i = 0; i < I.size(); ++i) {
            const Ticks v = index.dist(I[i], alt[a]);
            if (bestv < 0 || v < bestv) {
              bestv = v;
              arg = static_cast<int>(i);
            }
          }
        } else {
          const auto& prev = alternatives(index, drugs[l - 1]);
          for (std::size_t b = 0; b < prev.size(); ++b) {
            const Ticks v = cost[l - 1][b] + index.dist(prev[b], alt[a]);
            if (bestv < 0 || v < bestv) {
              bestv = v;
              arg = static_cast<int>(b);
            }
          }
        }
        cost[l][a] = bestv;
        back[l][a] = arg;
      }
    }
    const auto& last = alternatives(index, drugs[k - 1]);
    for (std::size_t a = 0; a < last.size(); ++a)
      for (std::size_t j = 0; j < I.size(); ++j) {
        const Ticks v = cost[k - 1][a] + index.dist(last[a], I[j]);
        if (best.kappa >= 0 && v >= best.kappa) continue;
        best.kappa = v;
        best.drugs = drugs;
        best.cells.assign(k + 2, -1);
        best.cells[k + 1] = I[j];
        int cur = static_cast<int>(a);
        for (std::size_t l = k; l-- > 0;) {
          best.cells[l + 1] = alternatives(index, drugs[l])[static_cast<std::size_t>(cur)];
          cur = back[l][static_cast<std::size_t>(cur)];
        }
        best.cells[0] = I[static_cast<std::size_t>(cur)];
      }
  } while (std::next_permutation(drugs.begin(), drugs.end()));
  return best;
}

// Exact DP over (visited drug set, current cell).
PathResult by_cluster_dp(const Order& order, const PlacementIndex& index) {
  const auto& I = index.interfaces();
  const std::vector<DrugId> drugs = sorted_drugs(order);
  const std::size_t k = drugs.size();
  if (k > 20) throw LimitError("order too large for the exact path DP");
  std::vector<int> vcell, vcl;
  for (std::size_t c = 0; c < k; ++c)
    for (int cell : alternatives(index, drugs[c])) {
      vcell.push_back(cell);
      vcl.push_back(static_cast<int>(c));
    }
  const std::size_t V = vcell.size();
  const std::size_t S = std::size_t{1} << k;
  constexpr Ticks inf = kForbidden;
  std::vector<Ticks> dp(S * V, inf);
  std::vector<int> par(S * V, -1);
  for (std::size_t v = 0; v < V; ++v) {
    Ticks b = inf;
    for (int i : I) b = std::min<Ticks>(b, index.dist(i, vcell[v]));
    dp[(std::size_t{1} << vcl[v]) * V + v] = b;
  }
  for (std::size_t m = 1; m < S; ++m)
    for (std::size_t v = 0; v < V; ++v) {
      const Ticks cur = dp[m * V + v];
      if (cur >= inf) continue;
      for (std::size_t w = 0; w < V; ++w) {
        if (m >> vcl[w] & 1) continue;
        const std::size_t m2 = m | (std::size_t{1} << vcl[w]);
        const Ticks nv = cur + index.dist(vcell[v], vcell[w]);
        if (nv < dp[m2 * V + w]) {
          dp[m2 * V + w] = nv;
          par[m2 * V + w] = static_cast<int>(v);
        }
      }
    }
  PathResult r;
  r.method = KappaMethod::ClusterDp;
  r.kappa = inf;
  std::size_t lastv = 0;
  int endi = -1;
  for (std::size_t v = 0; v < V; ++v)
    for (int j : I) {
      const Ticks val = dp[(S - 1) * V + v] + index.dist(vcell[v], j);
      if (val < r.kappa) {
        r.kappa = val;
        lastv = v;
        endi = j;
      }
    }
  std::vector<int> seq;
  std::size_t m = S - 1;
  int v = static_cast<int>(lastv);
  while (v >= 0) {
    seq.push_back(v);
    const int p = par[m * V + static_cast<std::size_t>(v)];
    m &= ~(std::size_t{1} << vcl[static_cast<std::size_t>(v)]);
    v = p;
  }
  std::reverse(seq.begin(), seq.end());
  int starti = I.front();
  Ticks bs = inf;
  for (int i : I)
    if (index.dist(i, vcell[static_cast<std::size_t>(seq.front())]) < bs) {
      bs = index.dist(i, vcell[static_cast<std::size_t>(seq.front())]);
      starti = i;
    }
  r.cells.push_back(starti);
  for (int x : seq) {
    r.cells.push_back(vcell[static_cast<std::size_t>(x)]);
    r.drugs.push_back(drugs[static_cast<std::size_t>(vcl[static_cast<std::size_t>(x)])]);
  }
  r.cells.push_back(endi);
  return r;
}

}  // namespace

GtspInstance order_gtsp(const Order& order, const PlacementIndex& index, std::vector<int>& vertex_cell,
                        std::vector<DrugId>& vertex_drug) {
  require_interface(index);
  const auto& I = index.interfaces();
  const std::vector<DrugId> drugs = sorted_drugs(order);
  GtspInstance g;
  vertex_cell.clear();
  vertex_drug.clear();
  auto add_cluster = [&](const std::vector<int>& cells, DrugId d) {
    std::vector<int> c;
    for (int cell : cells) {
      c.push_back(static_cast<int>(vertex_cell.size()));
      vertex_cell.push_back(cell);
      vertex_drug.push_back(d);
    }
    g.clusters.push_back(std::move(c));
  };
  add_cluster(I, -1);
  for (DrugId d : drugs) add_cluster(alternatives(index, d), d);
  add_cluster(I, -1);
  const auto V = vertex_cell.size();
  const int last = static_cast<int>(g.clusters.size()) - 1;
  std::vector<int> cl(V);
  for (std::size_t c = 0; c < g.clusters.size(); ++c)
    for (int x : g.clusters[c]) cl[static_cast<std::size_t>(x)] = static_cast<int>(c);
  g.cost.assign(V, std::vector<Cost>(V, kForbidden));
  for (std::size_t a = 0; a < V; ++a)
    for (std::size_t b = 0; b < V; ++b) {
      if (a == b || cl[a] == last || cl[b] == 0) continue;
      if (cl[a] == 0 && cl[b] == last && last > 1) continue;
      g.cost[a][b] = index.dist(vertex_cell[a], vertex_cell[b]);
    }
  g.path = std::make_pair(0, last);
  return g;
}

double sequence_count(const Order& order, const PlacementIndex& index) {
  const double ni = static_cast<double>(index.interfaces().size());
  double c = ni * ni;
  for (std::size_t i = 1; i <= order.items.size(); ++i) c *= static_cast<double>(i);
  for (const auto& it : order.items) c *= static_cast<double>(alternatives(index, it.drug).size());
  return c;
}

PathResult kappa(const Order& order, const PlacementIndex& index, const KappaOptions& opt) {
  require_interface(index);
  check_order(order, index.n_drugs());
  KappaMethod m;
  if (opt.force) {
    m = *opt.force;
  } else if (sequence_count(order, index) <= opt.enumeration_limit) {
    m = KappaMethod::Enumeration;
  } else {
    std::size_t V = 2 * index.interfaces().size() + 1;
    for (const auto& it : order.items) V += alternatives(index, it.drug).size();
    m = opt.allow_noon_bean && V <= static_cast<std::size_t>(kHeldKarpMax) ? KappaMethod::NoonBean
                                                                           : KappaMethod::ClusterDp;
  }
  if (m == KappaMethod::Enumeration) return by_enumeration(order, index);
  if (m == KappaMethod::ClusterDp) return by_cluster_dp(order, index);

  std::vector<int> vcell;
  std::vector<DrugId> vdrug;
  const GtspInstance g = order_gtsp(order, index, vcell, vdrug);
  const GtspSolution s = solve_gtsp(g);
  PathResult r;
  r.method = KappaMethod::NoonBean;
  r.kappa = s.cost;
  for (std::size_t i = 0; i < s.vertices.size(); ++i) {
    const auto v = static_cast<std::size_t>(s.vertices[i]);
    r.cells.push_back(vcell[v]);
    if (i > 0 && i + 1 < s.vertices.size()) r.drugs.push_back(vdrug[v]);
  }
  return r;
}

Ticks order_time_bound(const Order& order, const PlacementIndex& index, Ticks eta, const KappaOptions& opt) {
  return 2 * eta + kappa(order, index, opt).kappa + order.total_duration();
}

}  // namespace planarfab
