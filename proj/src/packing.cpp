#include "planarfab/packing.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "planarfab/error.hpp"
#include "planarfab/rng.hpp"

namespace planarfab {

namespace {

using Clock = std::chrono::steady_clock;
constexpr std::int64_t kBig = std::numeric_limits<std::int64_t>::max() / 4;

std::int64_t lcm_upto(int m) {
  std::int64_t l = 1;
  for (int i = 2; i <= m; ++i) l = std::lcm(l, static_cast<std::int64_t>(i));
  return l;
}

// Shared problem data: w[g][z] = u_g * L / z.
struct Weights {
  int nd = 0;
  int nt = 0;
  int d_max = 0;
  int budget = 0;
  std::int64_t scale = 1;
  std::vector<int> zcap;
  std::vector<std::vector<std::int64_t>> w;

  Weights(const DemandVector& u, const PackingConfig& cfg)
      : nd(static_cast<int>(u.size())), nt(cfg.n_tiles), d_max(cfg.d_max),
        budget(std::min(cfg.n_dispensers, cfg.n_tiles * cfg.d_max)), scale(lcm_upto(cfg.m_max)),
        zcap(u.size()), w(u.size()) {
    for (int g = 0; g < nd; ++g) {
      const auto gi = static_cast<std::size_t>(g);
      zcap[gi] = u[gi] == 0 ? 1 : std::min(cfg.m_max, cfg.n_tiles);
      w[gi].assign(static_cast<std::size_t>(zcap[gi]) + 1, 0);
      for (int z = 1; z <= zcap[gi]; ++z) w[gi][static_cast<std::size_t>(z)] = u[gi] * scale / z;
    }
  }
  std::int64_t item(int g, int z) const {
    return w[static_cast<std::size_t>(g)][static_cast<std::size_t>(z)];
  }
};

using Tiles = std::vector<std::vector<DrugId>>;

std::vector<int> multiplicities(const Tiles& tiles, int nd) {
  std::vector<int> z(static_cast<std::size_t>(nd), 0);
  for (const auto& t : tiles)
    for (DrugId g : t) ++z[static_cast<std::size_t>(g)];
  return z;
}

std::vector<std::int64_t> loads_of(const Tiles& tiles, const Weights& W) {
  const auto z = multiplicities(tiles, W.nd);
  std::vector<std::int64_t> load(tiles.size(), 0);
  for (std::size_t k = 0; k < tiles.size(); ++k)
    for (DrugId g : tiles[k]) load[k] += W.item(g, z[static_cast<std::size_t>(g)]);
  return load;
}

Tiles canonical(Tiles tiles) {
  for (auto& t : tiles) std::sort(t.begin(), t.end());
  std::stable_sort(tiles.begin(), tiles.end(), [](const auto& a, const auto& b) {
    if (a.empty() != b.empty()) return !a.empty();
    return a < b;
  });
  return tiles;
}

// Lexicographic (max, sum of squares) for local search.
struct Score {
  std::int64_t max = 0;
  double sq = 0.0;
  bool operator<(const Score& o) const { return max != o.max ? max < o.max : sq < o.sq - 1e-9 * std::abs(o.sq); }
};

Score score_of(const std::vector<std::int64_t>& load) {
  Score s;
  for (auto l : load) {
    s.max = std::max(s.max, l);
    s.sq += static_cast<double>(l) * static_cast<double>(l);
  }
  return s;
}

bool has(const std::vector<DrugId>& t, DrugId g) { return std::find(t.begin(), t.end(), g) != t.end(); }

// Greedy placement of a fixed z: largest items first onto the least loaded
// admissible tile.
std::optional<Tiles> greedy_fill(const std::vector<int>& z, const Weights& W) {
  std::vector<std::pair<std::int64_t, int>> items;
  for (int g = 0; g < W.nd; ++g)
    for (int c = 0; c < z[static_cast<std::size_t>(g)]; ++c)
      items.emplace_back(W.item(g, z[static_cast<std::size_t>(g)]), g);
  std::stable_sort(items.begin(), items.end(), [](auto a, auto b) { return a.first > b.first; });
  Tiles tiles(static_cast<std::size_t>(W.nt));
  std::vector<std::int64_t> load(static_cast<std::size_t>(W.nt), 0);
  for (auto [size, g] : items) {
    int best = -1;
    for (int k = 0; k < W.nt; ++k) {
      const auto ki = static_cast<std::size_t>(k);
      if (static_cast<int>(tiles[ki].size()) >= W.d_max || has(tiles[ki], g)) continue;
      if (best < 0 || load[ki] < load[static_cast<std::size_t>(best)]) best = k;
    }
    if (best < 0) return std::nullopt;
    tiles[static_cast<std::size_t>(best)].push_back(g);
    load[static_cast<std::size_t>(best)] += size;
  }
  return tiles;
}

Tiles greedy_stage1(const Weights& W) {
  std::vector<int> z(static_cast<std::size_t>(W.nd), 1);
  std::optional<Tiles> best = greedy_fill(z, W);
  if (!best) throw InfeasibleError("no packing places every drug at least once");
  std::int64_t best_max = score_of(loads_of(*best, W)).max;
  int spare = W.budget - W.nd;
  while (spare-- > 0) {
    int pick = -1;
    for (int g = 0; g < W.nd; ++g) {
      const auto gi = static_cast<std::size_t>(g);
      if (z[gi] >= W.zcap[gi]) continue;
      if (pick < 0 || W.item(g, z[gi]) > W.item(pick, z[static_cast<std::size_t>(pick)])) pick = g;
    }
    if (pick < 0) break;
    ++z[static_cast<std::size_t>(pick)];
    if (auto t = greedy_fill(z, W)) {
      const auto m = score_of(loads_of(*t, W)).max;
      if (m < best_max) {
        best_max = m;
        best = std::move(t);
      }
    }
  }
  return *best;
}

// Best-improvement descent over relocate / swap / add copy / drop copy.
void descend_stage1(Tiles& tiles, const Weights& W, Clock::time_point deadline) {
  auto load = loads_of(tiles, W);
  auto z = multiplicities(tiles, W.nd);
  Score cur = score_of(load);
  int used = std::accumulate(z.begin(), z.end(), 0);
  const int nt = W.nt;
  std::vector<std::int64_t> trial;

  for (;;) {
    if (Clock::now() > deadline) return;
    Score best = cur;
    int kind = -1, a = -1, b = -1;
    DrugId g = -1, h = -1;
    auto consider = [&](int k, int aa, int bb, DrugId gg, DrugId hh) {
      Score s = score_of(trial);
      if (s < best) {
        best = s;
        kind = k;
        a = aa;
        b = bb;
        g = gg;
        h = hh;
      }
    };
    for (int ta = 0; ta < nt; ++ta) {
      const auto& A = tiles[static_cast<std::size_t>(ta)];
      for (DrugId x : A) {
        const auto wx = W.item(x, z[static_cast<std::size_t>(x)]);
        for (int tb = 0; tb < nt; ++tb) {
          if (tb == ta) continue;
          const auto& B = tiles[static_cast<std::size_t>(tb)];
          if (has(B, x)) continue;
          if (static_cast<int>(B.size()) < W.d_max) {
            trial = load;
            trial[static_cast<std::size_t>(ta)] -= wx;
            trial[static_cast<std::size_t>(tb)] += wx;
            consider(0, ta, tb, x, -1);
          }
          if (tb < ta) continue;
          for (DrugId y : B) {
            if (y == x || has(A, y)) continue;
            const auto wy = W.item(y, z[static_cast<std::size_t>(y)]);
            trial = load;
            trial[static_cast<std::size_t>(ta)] += wy - wx;
            trial[static_cast<std::size_t>(tb)] += wx - wy;
            consider(1, ta, tb, x, y);
          }
        }
      }
    }
    for (DrugId x = 0; x < W.nd; ++x) {
      const auto xi = static_cast<std::size_t>(x);
      const int zx = z[xi];
      if (used < W.budget && zx < W.zcap[xi]) {
        const auto delta = W.item(x, zx + 1) - W.item(x, zx);
        for (int tb = 0; tb < nt; ++tb) {
          const auto& B = tiles[static_cast<std::size_t>(tb)];
          if (has(B, x) || static_cast<int>(B.size()) >= W.d_max) continue;
          trial = load;
          for (int k = 0; k < nt; ++k)
            if (has(tiles[static_cast<std::size_t>(k)], x)) trial[static_cast<std::size_t>(k)] += delta;
          trial[static_cast<std::size_t>(tb)] += W.item(x, zx + 1);
          consider(2, -1, tb, x, -1);
        }
      }
      if (zx > 1) {
        const auto delta = W.item(x, zx - 1) - W.item(x, zx);
        for (int ta = 0; ta < nt; ++ta) {
          if (!has(tiles[static_cast<std::size_t>(ta)], x)) continue;
          trial = load;
          for (int k = 0; k < nt; ++k)
            if (has(tiles[static_cast<std::size_t>(k)], x)) trial[static_cast<std::size_t>(k)] += delta;
          trial[static_cast<std::size_t>(ta)] -= W.item(x, zx - 1);
          consider(3, ta, -1, x, -1);
        }
      }
    }
    if (kind < 0) return;
    auto erase = [&](int t, DrugId d) {
      auto& v = tiles[static_cast<std::size_t>(t)];
      v.erase(std::find(v.begin(), v.end(), d));
    };
    switch (kind) {
      case 0: erase(a, g); tiles[static_cast<std::size_t>(b)].push_back(g); break;
      case 1:
        erase(a, g); erase(b, h);
        tiles[static_cast<std::size_t>(a)].push_back(h);
        tiles[static_cast<std::size_t>(b)].push_back(g);
        break;
      case 2: tiles[static_cast<std::size_t>(b)].push_back(g); break;
      case 3: erase(a, g); break;
    }
    load = loads_of(tiles, W);
    z = multiplicities(tiles, W.nd);
    used = std::accumulate(z.begin(), z.end(), 0);
    cur = score_of(load);
  }
}

void perturb(Tiles& tiles, int d_max, Rng& rng, int moves) {
  const auto nt = tiles.size();
  for (int m = 0; m < moves; ++m) {
    const auto a = rng.below(nt), b = rng.below(nt);
    if (a == b || tiles[a].empty()) continue;
    const auto i = rng.below(tiles[a].size());
    const DrugId g = tiles[a][i];
    if (has(tiles[b], g)) continue;
    if (static_cast<int>(tiles[b].size()) < d_max) {
      tiles[a].erase(tiles[a].begin() + static_cast<std::ptrdiff_t>(i));
      tiles[b].push_back(g);
    } else {
      const auto j = rng.below(tiles[b].size());
      const DrugId h = tiles[b][j];
      if (has(tiles[a], h)) continue;
      std::swap(tiles[a][i], tiles[b][j]);
    }
  }
}

// Exact stage 1: drugs in decreasing demand; each level fixes z_g and the
// tiles of its copies. Tiles with equal (load, count) are interchangeable
// because the distinct-drug rule only concerns the drug being placed.
class ExactStage1 {
 public:
  ExactStage1(const Weights& W, long node_limit, std::int64_t incumbent, Tiles incumbent_tiles)
      : W_(W), node_limit_(node_limit), best_(incumbent), best_tiles_(std::move(incumbent_tiles)) {
    order_.resize(static_cast<std::size_t>(W.nd));
    std::iota(order_.begin(), order_.end(), 0);
    std::stable_sort(order_.begin(), order_.end(),
                     [&](int a, int b) { return W.item(a, 1) > W.item(b, 1); });
    std::int64_t total = 0;
    for (int g = 0; g < W.nd; ++g) total += W.item(g, 1);
    floor_ = (total + W.nt - 1) / W.nt;
    for (int g = 0; g < W.nd; ++g)
      floor_ = std::max(floor_, W.item(g, W.zcap[static_cast<std::size_t>(g)]));
    load_.assign(static_cast<std::size_t>(W.nt), 0);
    tiles_.assign(static_cast<std::size_t>(W.nt), {});
  }

  bool run() {
    if (best_ > floor_) dfs(0, 0, 0);
    return !aborted_;
  }
  std::int64_t best() const { return best_; }
  const Tiles& best_tiles() const { return best_tiles_; }
  std::int64_t floor() const { return floor_; }

 private:
  void dfs(std::size_t idx, int used, std::int64_t curmax) {
    if (aborted_ || best_ <= floor_) return;
    if (++nodes_ > node_limit_) {
      aborted_ = true;
      return;
    }
    if (idx == order_.size()) {
      if (curmax < best_) {
        best_ = curmax;
        best_tiles_ = tiles_;
      }
      return;
    }
    const int remaining_after = static_cast<int>(order_.size() - idx) - 1;
    std::int64_t min_open = kBig;
    int open = 0, slots = 0;
    for (int k = 0; k < W_.nt; ++k) {
      const auto ki = static_cast<std::size_t>(k);
      const int free = W_.d_max - static_cast<int>(tiles_[ki].size());
      if (free > 0) {
        ++open;
        slots += free;
        min_open = std::min(min_open, load_[ki]);
      }
    }
    if (slots < remaining_after + 1) return;
    const int zroom = W_.budget - used - remaining_after;
    std::int64_t lb = curmax;
    for (std::size_t j = idx; j < order_.size(); ++j) {
      const int h = order_[j];
      const int zh = std::max(1, std::min({W_.zcap[static_cast<std::size_t>(h)], zroom, open}));
      lb = std::max(lb, min_open + W_.item(h, zh));
    }
    if (lb >= best_) return;

    const int g = order_[idx];
    const int zmax = std::min({W_.zcap[static_cast<std::size_t>(g)], zroom, open});
    for (int z = zmax; z >= 1; --z) {
      const std::int64_t item = W_.item(g, z);
      // classes of interchangeable open tiles, ascending load
      std::vector<int> open_tiles;
      for (int k = 0; k < W_.nt; ++k)
        if (static_cast<int>(tiles_[static_cast<std::size_t>(k)].size()) < W_.d_max)
          open_tiles.push_back(k);
      std::stable_sort(open_tiles.begin(), open_tiles.end(), [&](int a, int b) {
        const auto ai = static_cast<std::size_t>(a), bi = static_cast<std::size_t>(b);
        if (load_[ai] != load_[bi]) return load_[ai] < load_[bi];
        return tiles_[ai].size() < tiles_[bi].size();
      });
      std::vector<std::vector<int>> classes;
      for (int k : open_tiles) {
        const auto ki = static_cast<std::size_t>(k);
        if (!classes.empty()) {
          const auto r = static_cast<std::size_t>(classes.back().front());
          if (load_[r] == load_[ki] && tiles_[r].size() == tiles_[ki].size()) {
            classes.back().push_back(k);
            continue;
          }
        }
        classes.push_back({k});
      }
      std::vector<int> chosen;
      choose(classes, 0, z, item, chosen, idx, used + z, curmax);
      if (aborted_) return;
    }
  }

  void choose(const std::vector<std::vector<int>>& classes, std::size_t ci, int need,
              std::int64_t item, std::vector<int>& chosen, std::size_t idx, int used,
              std::int64_t curmax) {
    if (need == 0) {
      std::int64_t m = curmax;
      for (int k : chosen) {
        const auto ki = static_cast<std::size_t>(k);
        load_[ki] += item;
        tiles_[ki].push_back(order_[idx]);
        m = std::max(m, load_[ki]);
      }
      dfs(idx + 1, used, m);
      for (int k : chosen) {
        const auto ki = static_cast<std::size_t>(k);
        load_[ki] -= item;
        tiles_[ki].pop_back();
      }
      return;
    }
    if (ci == classes.size()) return;
    const auto& cls = classes[ci];
    if (load_[static_cast<std::size_t>(cls.front())] + item >= best_) return;  // ascending loads
    std::size_t avail = 0;
    for (std::size_t c = ci; c < classes.size(); ++c) avail += classes[c].size();
    if (avail < static_cast<std::size_t>(need)) return;
    const int take_max = std::min<int>(need, static_cast<int>(cls.size()));
    for (int take = take_max; take >= 0; --take) {
      for (int t = 0; t < take; ++t) chosen.push_back(cls[static_cast<std::size_t>(t)]);
      choose(classes, ci + 1, need - take, item, chosen, idx, used, curmax);
      chosen.resize(chosen.size() - static_cast<std::size_t>(take));
      if (aborted_) return;
    }
  }

  const Weights& W_;
  long node_limit_;
  long nodes_ = 0;
  bool aborted_ = false;
  std::int64_t best_;
  Tiles best_tiles_;
  std::int64_t floor_ = 0;
  std::vector<int> order_;
  std::vector<std::int64_t> load_;
  Tiles tiles_;
};

}  // namespace

Packing make_packing(std::vector<std::vector<DrugId>> tiles, const DemandVector& demand) {
  Packing p;
  p.demand = demand;
  p.z = multiplicities(tiles, static_cast<int>(demand.size()));
  p.pi.assign(demand.size(), 0.0);
  for (std::size_t g = 0; g < demand.size(); ++g)
    if (p.z[g] > 0) p.pi[g] = static_cast<double>(demand[g]) / p.z[g];
  for (auto& t : tiles) std::sort(t.begin(), t.end());
  p.mu.assign(tiles.size(), 0.0);
  for (std::size_t k = 0; k < tiles.size(); ++k) {
    for (DrugId g : tiles[k]) p.mu[k] += p.pi[static_cast<std::size_t>(g)];
    p.mu_max = std::max(p.mu_max, p.mu[k]);
  }
  p.tiles = std::move(tiles);
  return p;
}

std::pair<std::vector<std::int64_t>, std::int64_t> scaled_loads(const Packing& p, int m_max) {
  int zmax = m_max;
  for (int z : p.z) zmax = std::max(zmax, z);
  const std::int64_t L = lcm_upto(zmax);
  std::vector<std::int64_t> load(p.tiles.size(), 0);
  for (std::size_t k = 0; k < p.tiles.size(); ++k)
    for (DrugId g : p.tiles[k]) {
      const auto gi = static_cast<std::size_t>(g);
      load[k] += p.demand.at(gi) * L / p.z.at(gi);
    }
  return {load, L};
}

std::vector<std::string> packing_feasibility(int n_drugs, const PackingConfig& cfg) {
  std::vector<std::string> v;
  if (n_drugs < 1) v.push_back("no drugs to pack");
  if (cfg.n_tiles < 1) v.push_back("no tiles available for dispensers");
  if (cfg.d_max < 1) v.push_back("d_max must be >= 1");
  if (cfg.m_max < 1) v.push_back("m_max must be >= 1");
  if (cfg.n_dispensers < n_drugs) v.push_back("insufficient dispensers: fewer dispensers than drugs");
  if (static_cast<long long>(cfg.n_tiles) * cfg.d_max < n_drugs)
    v.push_back("tile capacity cannot cover every drug once");
  return v;
}

std::vector<std::string> check_packing(const Packing& p, const PackingConfig& cfg) {
  std::vector<std::string> v;
  const int nd = p.n_drugs();
  if (static_cast<int>(p.tiles.size()) != cfg.n_tiles) v.push_back("tile count differs from configuration");
  if (p.demand.size() != static_cast<std::size_t>(nd) || p.pi.size() != static_cast<std::size_t>(nd)) {
    v.push_back("per-drug vectors have inconsistent sizes");
    return v;
  }
  std::vector<int> count(static_cast<std::size_t>(nd), 0);
  int total = 0;
  for (std::size_t k = 0; k < p.tiles.size(); ++k) {
    const auto& t = p.tiles[k];
    std::set<DrugId> s(t.begin(), t.end());
    if (s.size() != t.size()) v.push_back("tile " + std::to_string(k) + " holds a drug twice");
    if (static_cast<int>(t.size()) > cfg.d_max) v.push_back("tile " + std::to_string(k) + " exceeds d_max");
    if (t.empty() && !cfg.allow_empty_tiles) v.push_back("tile " + std::to_string(k) + " hosts no dispenser");
    for (DrugId g : t) {
      if (g < 0 || g >= nd) {
        v.push_back("unknown drug on tile " + std::to_string(k));
        continue;
      }
      ++count[static_cast<std::size_t>(g)];
      ++total;
    }
  }
  for (int g = 0; g < nd; ++g) {
    const auto gi = static_cast<std::size_t>(g);
    if (count[gi] != p.z[gi]) v.push_back("z differs from dispenser count for drug " + std::to_string(g));
    if (p.z[gi] < 1) v.push_back("drug " + std::to_string(g) + " has no dispenser");
    if (p.z[gi] > cfg.m_max) v.push_back("drug " + std::to_string(g) + " exceeds m_max");
    if (p.z[gi] >= 1 &&
        std::abs(p.pi[gi] * p.z[gi] - static_cast<double>(p.demand[gi])) >
            1e-9 * std::max<double>(1.0, static_cast<double>(p.demand[gi])))
      v.push_back("pi * z differs from demand for drug " + std::to_string(g));
  }
  if (total > cfg.n_dispensers) v.push_back("more dispensers placed than available");
  if (p.mu.size() != p.tiles.size()) {
    v.push_back("mu has wrong length");
    return v;
  }
  double mx = 0.0;
  for (std::size_t k = 0; k < p.tiles.size(); ++k) {
    double s = 0.0;
    for (DrugId g : p.tiles[k])
      if (g >= 0 && g < nd) s += p.pi[static_cast<std::size_t>(g)];
    if (std::abs(s - p.mu[k]) > 1e-9 * std::max(1.0, s)) v.push_back("mu differs from summed pi on tile " + std::to_string(k));
    mx = std::max(mx, p.mu[k]);
  }
  if (std::abs(mx - p.mu_max) > 1e-9 * std::max(1.0, mx)) v.push_back("mu_max differs from max tile load");
  return v;
}

Packing pack_min_load(const DemandVector& demand, const PackingConfig& cfg) {
  const int nd = static_cast<int>(demand.size());
  if (auto v = packing_feasibility(nd, cfg); !v.empty()) throw InfeasibleError(v.front());
  for (Ticks u : demand)
    if (u < 0) throw ConfigError("negative demand");
  const Weights W(demand, cfg);
  const auto deadline =
      Clock::now() + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(cfg.time_limit_s));

  Tiles best = greedy_stage1(W);
  descend_stage1(best, W, deadline);
  std::int64_t best_max = score_of(loads_of(best, W)).max;
  Rng rng(derive_seed(cfg.seed, stream_tag("packing")));
  for (int r = 0; r < cfg.restarts && Clock::now() < deadline; ++r) {
    Tiles t = best;
    perturb(t, W.d_max, rng, 3 + r % 5);
    descend_stage1(t, W, deadline);
    const auto m = score_of(loads_of(t, W)).max;
    if (m < best_max) {
      best_max = m;
      best = std::move(t);
    }
  }

  bool exact = false;
  std::int64_t floor_bound = 0;
  {
    ExactStage1 probe(W, 0, best_max, best);
    floor_bound = probe.floor();
  }
  if (nd <= cfg.exact_max_drugs && cfg.n_tiles <= cfg.exact_max_tiles) {
    ExactStage1 ex(W, cfg.exact_node_limit, best_max, best);
    exact = ex.run();
    if (ex.best() < best_max) {
      best_max = ex.best();
      best = ex.best_tiles();
    }
  }
  if (best_max <= floor_bound) exact = true;

  Packing p = make_packing(canonical(std::move(best)), demand);
  p.exact = exact;
  p.lower_bound = exact ? p.mu_max : static_cast<double>(floor_bound) / static_cast<double>(W.scale);
  return p;
}

double correlation_score(const Packing& p, const std::vector<std::vector<double>>& corr) {
  double s = 0.0;
  for (const auto& t : p.tiles)
    for (std::size_t i = 0; i < t.size(); ++i)
      for (std::size_t j = i + 1; j < t.size(); ++j)
        s += corr.at(static_cast<std::size_t>(t[i])).at(static_cast<std::size_t>(t[j]));
  return s;
}

namespace {

struct Stage2 {
  const std::vector<std::vector<double>>& o;
  std::vector<std::int64_t> item;  // scaled per-copy load
  std::int64_t cap = 0;
  int d_max = 0;

  double gain(const std::vector<DrugId>& t, DrugId g, DrugId skip = -1) const {
    double s = 0.0;
    for (DrugId x : t)
      if (x != g && x != skip) s += o[static_cast<std::size_t>(g)][static_cast<std::size_t>(x)];
    return s;
  }
};

// Best-improvement relocate/swap under the frozen load cap.
void descend_stage2(Tiles& tiles, std::vector<std::int64_t>& load, const Stage2& S,
                    Clock::time_point deadline) {
  constexpr double eps = 1e-12;
  const auto nt = tiles.size();
  for (;;) {
    if (Clock::now() > deadline) return;
    double best = eps;
    int kind = -1;
    std::size_t a = 0, b = 0;
    DrugId g = -1, h = -1;
    for (std::size_t ta = 0; ta < nt; ++ta) {
      for (DrugId x : tiles[ta]) {
        const auto wx = S.item[static_cast<std::size_t>(x)];
        const double leave = S.gain(tiles[ta], x);
        for (std::size_t tb = 0; tb < nt; ++tb) {
          if (tb == ta || has(tiles[tb], x)) continue;
          if (static_cast<int>(tiles[tb].size()) < S.d_max && load[tb] + wx <= S.cap) {
            const double d = S.gain(tiles[tb], x) - leave;
            if (d > best) {
              best = d; kind = 0; a = ta; b = tb; g = x;
            }
          }
          if (tb < ta) continue;
          for (DrugId y : tiles[tb]) {
            if (has(tiles[ta], y)) continue;
            const auto wy = S.item[static_cast<std::size_t>(y)];
            if (load[ta] - wx + wy > S.cap || load[tb] - wy + wx > S.cap) continue;
            const double d = S.gain(tiles[tb], x, y) + S.gain(tiles[ta], y, x) - leave -
                             S.gain(tiles[tb], y);
            if (d > best) {
              best = d; kind = 1; a = ta; b = tb; g = x; h = y;
            }
          }
        }
      }
    }
    if (kind < 0) return;
    auto& A = tiles[a];
    auto& B = tiles[b];
    A.erase(std::find(A.begin(), A.end(), g));
    load[a] -= S.item[static_cast<std::size_t>(g)];
    if (kind == 1) {
      B.erase(std::find(B.begin(), B.end(), h));
      load[b] -= S.item[static_cast<std::size_t>(h)];
      A.push_back(h);
      load[a] += S.item[static_cast<std::size_t>(h)];
    }
    B.push_back(g);
    load[b] += S.item[static_cast<std::size_t>(g)];
  }
}

class ExactStage2 {
 public:
  ExactStage2(const Stage2& S, const std::vector<int>& z, int nt, long node_limit, double incumbent,
              Tiles incumbent_tiles)
      : S_(S), z_(z), node_limit_(node_limit), best_(incumbent), best_tiles_(std::move(incumbent_tiles)) {
    const int nd = static_cast<int>(z.size());
    order_.resize(static_cast<std::size_t>(nd));
    std::iota(order_.begin(), order_.end(), 0);
    std::stable_sort(order_.begin(), order_.end(), [&](int a, int b) {
      if (z[static_cast<std::size_t>(a)] != z[static_cast<std::size_t>(b)])
        return z[static_cast<std::size_t>(a)] > z[static_cast<std::size_t>(b)];
      return S.item[static_cast<std::size_t>(a)] > S.item[static_cast<std::size_t>(b)];
    });
    // ub[i]: optimistic gain of drugs order[i..]; pairs among unplaced drugs
    // are split half to each endpoint.
    ub_.assign(order_.size() + 1, 0.0);
    for (std::size_t i = order_.size(); i-- > 0;) {
      const int g = order_[i];
      std::vector<double> partners;
      for (std::size_t j = 0; j < order_.size(); ++j) {
        if (j == i) continue;
        double v = S.o[static_cast<std::size_t>(g)][static_cast<std::size_t>(order_[j])];
        if (j > i) v *= 0.5;
        if (v > 0) partners.push_back(v);
      }
      std::sort(partners.rbegin(), partners.rend());
      double top = 0.0;
      for (std::size_t k = 0; k < partners.size() && static_cast<int>(k) < S.d_max - 1; ++k) top += partners[k];
      ub_[i] = ub_[i + 1] + top * z[static_cast<std::size_t>(g)];
    }
    tiles_.assign(static_cast<std::size_t>(nt), {});
    load_.assign(static_cast<std::size_t>(nt), 0);
  }

  bool run() {
    dfs(0, 0.0);
    return !aborted_;
  }
  const Tiles& best_tiles() const { return best_tiles_; }
  double best() const { return best_; }

 private:
  void dfs(std::size_t idx, double cur) {
    if (aborted_) return;
    if (++nodes_ > node_limit_) {
      aborted_ = true;
      return;
    }
    if (cur + ub_[idx] <= best_ + 1e-12) return;
    if (idx == order_.size()) {
      best_ = cur;
      best_tiles_ = tiles_;
      return;
    }
    const int g = order_[idx];
    const auto w = S_.item[static_cast<std::size_t>(g)];
    // admissible tiles, grouped by identical contents
    std::vector<std::pair<std::vector<DrugId>, std::vector<std::size_t>>> classes;
    for (std::size_t k = 0; k < tiles_.size(); ++k) {
      if (static_cast<int>(tiles_[k].size()) >= S_.d_max || load_[k] + w > S_.cap) continue;
      auto key = tiles_[k];
      std::sort(key.begin(), key.end());
      auto it = std::find_if(classes.begin(), classes.end(), [&](const auto& c) { return c.first == key; });
      if (it == classes.end()) classes.push_back({key, {k}});
      else it->second.push_back(k);
    }
    std::vector<double> gains;
    for (const auto& c : classes) gains.push_back(S_.gain(c.first, g));
    std::vector<std::size_t> cls_order(classes.size());
    std::iota(cls_order.begin(), cls_order.end(), 0);
    std::stable_sort(cls_order.begin(), cls_order.end(), [&](auto a, auto b) { return gains[a] > gains[b]; });
    std::vector<std::size_t> chosen;
    choose(classes, gains, cls_order, 0, z_[static_cast<std::size_t>(g)], chosen, 0.0, idx, cur);
  }

  template <class Classes>
  void choose(const Classes& classes, const std::vector<double>& gains,
              const std::vector<std::size_t>& cls_order, std::size_t ci, int need,
              std::vector<std::size_t>& chosen, double gained, std::size_t idx, double cur) {
    if (aborted_) return;
    if (need == 0) {
      const int g = order_[idx];
      for (auto k : chosen) {
        tiles_[k].push_back(g);
        load_[k] += S_.item[static_cast<std::size_t>(g)];
      }
      dfs(idx + 1, cur + gained);
      for (auto k : chosen) {
        tiles_[k].pop_back();
        load_[k] -= S_.item[static_cast<std::size_t>(g)];
      }
      return;
    }
    if (ci == cls_order.size()) return;
    const auto& members = classes[cls_order[ci]].second;
    const int take_max = std::min<int>(need, static_cast<int>(members.size()));
    for (int take = take_max; take >= 0; --take) {
      for (int t = 0; t < take; ++t) chosen.push_back(members[static_cast<std::size_t>(t)]);
      choose(classes, gains, cls_order, ci + 1, need - take, chosen,
             gained + take * gains[cls_order[ci]], idx, cur);
      chosen.resize(chosen.size() - static_cast<std::size_t>(take));
    }
  }

  const Stage2& S_;
  const std::vector<int>& z_;
  long node_limit_;
  long nodes_ = 0;
  bool aborted_ = false;
  double best_;
  Tiles best_tiles_;
  std::vector<int> order_;
  std::vector<double> ub_;
  Tiles tiles_;
  std::vector<std::int64_t> load_;
};

}  // namespace

Packing pack_correlation(const Packing& stage1, const std::vector<std::vector<double>>& corr,
                         const PackingConfig& cfg) {
  if (auto v = check_packing(stage1, cfg); !v.empty())
    throw ConfigError("stage-1 packing invalid: " + v.front());
  const int nd = stage1.n_drugs();
  if (static_cast<int>(corr.size()) != nd) throw ConfigError("correlation size differs from drug count");
  auto [load, L] = scaled_loads(stage1, cfg.m_max);
  Stage2 S{corr, {}, 0, cfg.d_max};
  S.item.resize(static_cast<std::size_t>(nd));
  for (std::size_t g = 0; g < S.item.size(); ++g) S.item[g] = stage1.demand[g] * L / stage1.z[g];
  S.cap = load.empty() ? 0 : *std::max_element(load.begin(), load.end());
  const auto deadline =
      Clock::now() + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(cfg.time_limit_s));

  Tiles best = stage1.tiles;
  std::vector<std::int64_t> best_load = load;
  descend_stage2(best, best_load, S, deadline);
  double best_score = correlation_score(make_packing(best, stage1.demand), corr);
  Rng rng(derive_seed(cfg.seed, stream_tag("packing-corr")));
  for (int r = 0; r < cfg.restarts && Clock::now() < deadline; ++r) {
    Tiles t = best;
    perturb(t, cfg.d_max, rng, 2 + r % 4);
    Packing tp = make_packing(t, stage1.demand);
    auto tl = scaled_loads(tp, cfg.m_max).first;
    if (*std::max_element(tl.begin(), tl.end()) > S.cap) continue;
    descend_stage2(t, tl, S, deadline);
    const double s = correlation_score(make_packing(t, stage1.demand), corr);
    if (s > best_score + 1e-12) {
      best_score = s;
      best = std::move(t);
    }
  }

  bool exact = false;
  if (nd <= cfg.exact_max_drugs && cfg.n_tiles <= cfg.exact_max_tiles) {
    ExactStage2 ex(S, stage1.z, cfg.n_tiles, cfg.exact_node_limit, best_score, best);
    exact = ex.run();
    best = ex.best_tiles();
  }
  Packing p = make_packing(canonical(std::move(best)), stage1.demand);
  p.exact = exact;
  p.lower_bound = stage1.lower_bound;
  return p;
}

std::vector<TileLoad> tile_utilization(const Packing& p) {
  std::vector<TileLoad> out;
  for (std::size_t k = 0; k < p.tiles.size(); ++k) {
    TileLoad t;
    t.tile = static_cast<int>(k);
    for (DrugId g : p.tiles[k]) {
      const double pi = p.pi.at(static_cast<std::size_t>(g));
      t.parts.emplace_back(g, pi);
      t.mu += pi;
    }
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace planarfab
