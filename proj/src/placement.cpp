#include "planarfab/placement.hpp"

#include <algorithm>
#include <atomic>
#include <map>
#include <numeric>
#include <thread>

#include "planarfab/error.hpp"
#include "planarfab/kernels.hpp"
#include "planarfab/rng.hpp"

namespace planarfab {

namespace {

// Draw an index with probability proportional to w.
std::size_t roulette(const std::vector<double>& w, Rng& rng) {
  double total = 0.0;
  for (double x : w) total += x;
  double r = rng.uniform() * total;
  for (std::size_t i = 0; i < w.size(); ++i) {
    r -= w[i];
    if (r < 0.0) return i;
  }
  return w.size() - 1;
}

}  // namespace

PlacementScore fitness(const PlacementIndex& index, std::span<const Order> history, int episodes,
                       std::uint64_t seed) {
  if (episodes < 1) throw ConfigError("episodes must be >= 1");
  const auto& I = index.interfaces();
  if (I.empty()) throw InfeasibleError("placement has no interface");
  const auto& K = kernels::active();
  const std::uint64_t tag = stream_tag("fitness");

  PlacementScore s;
  s.episodes = episodes;
  s.seed = seed;
  std::vector<char> pending(static_cast<std::size_t>(index.n_drugs()), 0);
  std::vector<char> marked(static_cast<std::size_t>(index.n_cells()), 0);
  std::vector<std::int32_t> cand;
  std::vector<double> w;
  const std::vector<std::int32_t> iface(I.begin(), I.end());
  double total = 0.0;

  for (std::size_t o = 0; o < history.size(); ++o) {
    const Order& order = history[o];
    for (const auto& it : order.items)
      if (index.cells_of(it.drug).empty())
        throw InfeasibleError("drug " + std::to_string(it.drug) + " has no placed dispenser");
    double order_steps = 0.0;
    for (int e = 0; e < episodes; ++e) {
      Rng rng(derive_seed(seed, tag, o, static_cast<std::uint64_t>(e)));
      int cur = I[rng.below(I.size())];
      std::size_t left = order.items.size();
      for (const auto& it : order.items) pending[static_cast<std::size_t>(it.drug)] = 1;
      Ticks steps = 0;
      while (left > 0) {
        cand.clear();
        for (const auto& it : order.items) {
          if (!pending[static_cast<std::size_t>(it.drug)]) continue;
          for (int c : index.cells_of(it.drug))
            if (!marked[static_cast<std::size_t>(c)]) {
              marked[static_cast<std::size_t>(c)] = 1;
              cand.push_back(c);
            }
        }
        for (int c : cand) marked[static_cast<std::size_t>(c)] = 0;
        w.resize(cand.size());
        K.inverse_distance_weights(index.dist().row(cur).data(), cand.data(), cand.size(), w.data());
        const int next = cand[roulette(w, rng)];
        steps += index.dist(cur, next);
        cur = next;
        for (const auto& it : order.items) {
          auto& p = pending[static_cast<std::size_t>(it.drug)];
          if (p && index.hosts(cur, it.drug)) {
            p = 0;
            --left;
          }
        }
      }
      w.resize(iface.size());
      K.inverse_distance_weights(index.dist().row(cur).data(), iface.data(), iface.size(), w.data());
      steps += index.dist(cur, iface[roulette(w, rng)]);
      order_steps += static_cast<double>(steps);
    }
    s.per_order_steps.push_back(order_steps / episodes);
    total += order_steps;
  }
  s.mean_steps = history.empty() ? 0.0 : total / (static_cast<double>(history.size()) * episodes);
  return s;
}

AnalyticalCost analytical_cost(const PlacementIndex& index, std::span<const Order> history, double guard) {
  AnalyticalCost a;
  Ticks total = 0;
  for (const Order& o : history) {
    if (guard > 0 && sequence_count(o, index) > guard)
      throw LimitError("order " + std::to_string(o.id) + " exceeds the enumeration guard");
    const Ticks k = kappa(o, index).kappa;
    a.per_order.push_back(k);
    total += k;
  }
  a.mean = history.empty() ? 0.0 : static_cast<double>(total) / static_cast<double>(history.size());
  return a;
}

Placement decode_genes(const Packing& packing, const Layout& layout, std::span<const int> genes) {
  const int n_tiles = static_cast<int>(packing.tiles.size());
  if (n_tiles + layout.n_inter != layout.size())
    throw ConfigError("packed tiles plus interfaces do not match the layout size");
  if (static_cast<int>(genes.size()) != layout.size()) throw ConfigError("gene vector has wrong length");
  Placement p;
  p.layout = layout;
  p.cells.resize(genes.size());
  std::vector<char> seen(genes.size(), 0);
  for (std::size_t pos = 0; pos < genes.size(); ++pos) {
    const int g = genes[pos];
    if (g < 0 || g >= layout.size() || seen[static_cast<std::size_t>(g)]++)
      throw ConfigError("genes are not a permutation");
    auto& c = p.cells[pos];
    c.coord = layout.tiles[pos];
    if (g < n_tiles) {
      c.kind = CellKind::Tile;
      c.drugs = packing.tiles[static_cast<std::size_t>(g)];
      std::sort(c.drugs.begin(), c.drugs.end());
    } else {
      c.kind = CellKind::Interface;
    }
  }
  return p;
}

std::vector<int> order_crossover(std::span<const int> a, std::span<const int> b, std::size_t lo,
                                 std::size_t hi) {
  const std::size_t n = a.size();
  std::vector<int> child(n, -1);
  std::vector<char> used(n, 0);
  for (std::size_t i = lo; i <= hi; ++i) {
    child[i] = a[i];
    used[static_cast<std::size_t>(a[i])] = 1;
  }
  std::size_t pos = (hi + 1) % n;
  for (std::size_t k = 0; k < n; ++k) {
    const int g = b[(hi + 1 + k) % n];
    if (used[static_cast<std::size_t>(g)]) continue;
    child[pos] = g;
    pos = (pos + 1) % n;
  }
  return child;
}

void inversion_mutation(std::vector<int>& genes, std::size_t lo, std::size_t hi) {
  std::reverse(genes.begin() + static_cast<std::ptrdiff_t>(lo), genes.begin() + static_cast<std::ptrdiff_t>(hi) + 1);
}

GaResult ga_place(const Packing& packing, const Layout& layout, std::span<const Order> history,
                  const GaParams& params, std::uint64_t seed) {
  if (params.population < 2) throw ConfigError("GA population must be >= 2");
  if (params.episodes < 1) throw ConfigError("GA episodes must be >= 1");
  if (params.max_evaluations < 1) throw ConfigError("GA needs at least one evaluation");
  const int n = layout.size();
  if (static_cast<int>(packing.tiles.size()) + layout.n_inter != n)
    throw ConfigError("packed tiles plus interfaces do not match the layout size");
  if (layout.n_inter < 1) throw InfeasibleError("layout reserves no interface");
  const DistanceMatrix dist = tile_distances(layout);
  const int n_drugs = packing.n_drugs();
  const std::uint64_t fit_seed = derive_seed(seed, stream_tag("ga-fitness"));

  // interfaces are interchangeable, so key the cache on a canonical form
  const int n_tiles = static_cast<int>(packing.tiles.size());
  auto key = [&](const std::vector<int>& genes) {
    std::vector<int> k(genes);
    for (auto& g : k) g = std::min(g, n_tiles);
    return k;
  };
  std::map<std::vector<int>, double> cache;
  auto score = [&](const std::vector<int>& genes) {
    const Placement p = decode_genes(packing, layout, genes);
    const PlacementIndex idx(p, n_drugs, dist);
    if (params.scorer == Scorer::Analytical) return analytical_cost(idx, history, 0).mean;
    return fitness(idx, history, params.episodes, fit_seed).mean_steps;
  };

  GaResult res;
  auto evaluate = [&](std::vector<std::vector<int>>& pop, std::vector<double>& fit) {
    fit.assign(pop.size(), 0.0);
    std::vector<std::size_t> todo;
    std::map<std::vector<int>, std::size_t> fresh;
    std::vector<std::pair<std::size_t, std::size_t>> dups;
    for (std::size_t i = 0; i < pop.size(); ++i) {
      auto k = key(pop[i]);
      if (auto it = cache.find(k); it != cache.end()) {
        fit[i] = it->second;
      } else if (auto f = fresh.find(k); f != fresh.end()) {
        dups.emplace_back(i, f->second);
      } else {
        fresh.emplace(std::move(k), i);
        todo.push_back(i);
      }
    }
    res.evaluations += static_cast<long>(todo.size());
    const int threads = std::max(1, std::min<int>(params.threads, static_cast<int>(todo.size())));
    if (threads == 1) {
      for (auto i : todo) fit[i] = score(pop[i]);
    } else {
      std::atomic<std::size_t> next{0};
      std::vector<std::thread> pool;
      for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
          for (std::size_t k; (k = next.fetch_add(1)) < todo.size();) fit[todo[k]] = score(pop[todo[k]]);
        });
      for (auto& th : pool) th.join();
    }
    for (auto i : todo) cache.emplace(key(pop[i]), fit[i]);
    for (auto [i, j] : dups) fit[i] = fit[j];
    return todo.size();
  };

  Rng rng(derive_seed(seed, stream_tag("ga")));
  std::vector<std::vector<int>> pop(static_cast<std::size_t>(params.population));
  for (auto& ind : pop) {
    ind.resize(static_cast<std::size_t>(n));
    std::iota(ind.begin(), ind.end(), 0);
    for (std::size_t i = ind.size(); i > 1; --i) std::swap(ind[i - 1], ind[rng.below(i)]);
  }
  std::vector<double> fit;
  evaluate(pop, fit);

  auto best_of = [&](const std::vector<double>& f) {
    return static_cast<std::size_t>(std::min_element(f.begin(), f.end()) - f.begin());
  };
  auto record = [&](int gen) {
    const auto b = best_of(fit);
    GaTracePoint tp;
    tp.generation = gen;
    tp.evaluations = res.evaluations;
    tp.best_fitness = fit[b];
    tp.mean_fitness = std::accumulate(fit.begin(), fit.end(), 0.0) / static_cast<double>(fit.size());
    res.trace.push_back(tp);
  };
  record(0);

  auto tournament = [&]() -> const std::vector<int>& {
    std::size_t best = rng.below(pop.size());
    for (int t = 1; t < params.tournament; ++t) {
      const std::size_t c = rng.below(pop.size());
      if (fit[c] < fit[best]) best = c;
    }
    return pop[best];
  };

  // a converged population can stop producing unseen individuals
  constexpr int kMaxStale = 200;
  for (int gen = 1, stale = 0; res.evaluations < params.max_evaluations && stale < kMaxStale; ++gen) {
    const long room = params.max_evaluations - res.evaluations;
    const std::size_t children = static_cast<std::size_t>(std::min<long>(params.population - 1, room));
    std::vector<std::vector<int>> next;
    next.push_back(pop[best_of(fit)]);
    const double elite_fit = fit[best_of(fit)];
    std::vector<std::vector<int>> kids;
    while (kids.size() < children) {
      const auto& a = tournament();
      const auto& b = tournament();
      std::vector<int> child;
      if (n > 1 && rng.uniform() < params.crossover_rate) {
        std::size_t lo = rng.below(static_cast<std::uint64_t>(n)), hi = rng.below(static_cast<std::uint64_t>(n));
        if (lo > hi) std::swap(lo, hi);
        child = order_crossover(a, b, lo, hi);
      } else {
        child = a;
      }
      if (n > 1 && rng.uniform() < params.mutation_rate) {
        std::size_t lo = rng.below(static_cast<std::uint64_t>(n)), hi = rng.below(static_cast<std::uint64_t>(n));
        if (lo > hi) std::swap(lo, hi);
        inversion_mutation(child, lo, hi);
      }
      kids.push_back(std::move(child));
    }
    std::vector<double> kid_fit;
    stale = evaluate(kids, kid_fit) == 0 ? stale + 1 : 0;
    // partial final generation: keep the best of old and new
    std::vector<double> nf{elite_fit};
    for (std::size_t i = 0; i < kids.size(); ++i) {
      next.push_back(std::move(kids[i]));
      nf.push_back(kid_fit[i]);
    }
    if (next.size() < pop.size()) {
      std::vector<std::size_t> rest(pop.size());
      std::iota(rest.begin(), rest.end(), 0);
      std::stable_sort(rest.begin(), rest.end(), [&](auto x, auto y) { return fit[x] < fit[y]; });
      for (std::size_t k = 1; next.size() < pop.size(); ++k) {
        next.push_back(pop[rest[k]]);
        nf.push_back(fit[rest[k]]);
      }
    }
    pop = std::move(next);
    fit = std::move(nf);
    record(gen);
  }
  const auto b = best_of(fit);
  res.genes = pop[b];
  res.best_fitness = fit[b];
  res.placement = decode_genes(packing, layout, res.genes);
  return res;
}

}  // namespace planarfab
