#include <algorithm>
#include <boost/graph/adjacency_list.hpp>
#include <boost/graph/push_relabel_max_flow.hpp>
#include <numeric>
#include <string>

#include "planarfab/error.hpp"
#include "planarfab/routing.hpp"

namespace planarfab {

int site_capacity(const Placement& p, int cell) {
  return p.cells.at(static_cast<std::size_t>(cell)).kind == CellKind::Interface ? 2 : 1;
}

std::vector<RestingSite> resting_candidates(const Placement& p) {
  std::vector<RestingSite> out;
  const Layout& l = p.layout;
  for (int a = 0; a < l.size(); ++a) {
    const Coord c = l.tiles[static_cast<std::size_t>(a)];
    for (Coord n : {Coord{c.x + 1, c.y}, Coord{c.x, c.y + 1}}) {
      if (auto b = l.index_of(n)) {
        RestingSite s;
        s.cell_a = std::min(a, *b);
        s.cell_b = std::max(a, *b);
        s.x = 0.5 * (c.x + n.x);
        s.y = 0.5 * (c.y + n.y);
        out.push_back(s);
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& u, const auto& v) {
    return std::tie(u.cell_a, u.cell_b) < std::tie(v.cell_a, v.cell_b);
  });
  return out;
}

namespace {

class SiteSearch {
 public:
  SiteSearch(const std::vector<RestingSite>& cand, std::vector<int> cap, long node_limit)
      : cand_(cand), cap_(std::move(cap)), limit_(node_limit), take_(cand.size(), 0) {}

  bool run() {
    dfs(0, 0, std::accumulate(cap_.begin(), cap_.end(), 0));
    return !aborted_;
  }
  const std::vector<char>& best() const { return best_take_; }
  int best_count() const { return best_; }

 private:
  void dfs(std::size_t i, int count, int cap_left) {
    if (aborted_) return;
    if (++nodes_ > limit_) {
      aborted_ = true;
      return;
    }
    const int ub = count + std::min(static_cast<int>(cand_.size() - i), cap_left / 2);
    if (ub <= best_) return;
    if (i == cand_.size()) {
      best_ = count;
      best_take_ = take_;
      return;
    }
    const auto a = static_cast<std::size_t>(cand_[i].cell_a), b = static_cast<std::size_t>(cand_[i].cell_b);
    if (cap_[a] > 0 && cap_[b] > 0) {
      --cap_[a];
      --cap_[b];
      take_[i] = 1;
      dfs(i + 1, count + 1, cap_left - 2);
      take_[i] = 0;
      ++cap_[a];
      ++cap_[b];
    }
    dfs(i + 1, count, cap_left);
  }

  const std::vector<RestingSite>& cand_;
  std::vector<int> cap_;
  long limit_;
  long nodes_ = 0;
  bool aborted_ = false;
  int best_ = -1;
  std::vector<char> take_;
  std::vector<char> best_take_;
};

std::vector<char> max_flow_sites(const Placement& p, const std::vector<RestingSite>& cand) {
  using Traits = boost::adjacency_list_traits<boost::vecS, boost::vecS, boost::directedS>;
  using Graph = boost::adjacency_list<
      boost::vecS, boost::vecS, boost::directedS, boost::no_property,
      boost::property<boost::edge_capacity_t, long,
                      boost::property<boost::edge_residual_capacity_t, long,
                                      boost::property<boost::edge_reverse_t, Traits::edge_descriptor>>>>;
  const int n = p.layout.size();
  Graph g(static_cast<std::size_t>(n) + 2);
  const auto src = static_cast<std::size_t>(n), snk = static_cast<std::size_t>(n) + 1;
  auto cap = boost::get(boost::edge_capacity, g);
  auto rev = boost::get(boost::edge_reverse, g);
  auto res = boost::get(boost::edge_residual_capacity, g);
  auto add = [&](std::size_t u, std::size_t v, long c) {
    auto e = boost::add_edge(u, v, g).first;
    auto r = boost::add_edge(v, u, g).first;
    cap[e] = c;
    cap[r] = 0;
    rev[e] = r;
    rev[r] = e;
    return e;
  };
  auto black = [&](int cell) {
    const Coord c = p.layout.tiles[static_cast<std::size_t>(cell)];
    return (c.x + c.y) % 2 == 0;
  };
  for (int c = 0; c < n; ++c) {
    if (black(c)) add(src, static_cast<std::size_t>(c), site_capacity(p, c));
    else add(static_cast<std::size_t>(c), snk, site_capacity(p, c));
  }
  std::vector<Traits::edge_descriptor> edge_of;
  for (const auto& s : cand) {
    const int u = black(s.cell_a) ? s.cell_a : s.cell_b;
    const int v = u == s.cell_a ? s.cell_b : s.cell_a;
    edge_of.push_back(add(static_cast<std::size_t>(u), static_cast<std::size_t>(v), 1));
  }
  boost::push_relabel_max_flow(g, src, snk);
  std::vector<char> take(cand.size(), 0);
  for (std::size_t i = 0; i < cand.size(); ++i) take[i] = cap[edge_of[i]] - res[edge_of[i]] > 0;
  return take;
}

}  // namespace

RestingSiteSet generate_resting_sites(const Placement& p, int bnb_limit) {
  RestingSiteSet out;
  const auto cand = resting_candidates(p);
  out.n_candidates = static_cast<int>(cand.size());
  out.exact = true;
  std::vector<char> take;
  bool done = false;
  if (static_cast<int>(cand.size()) <= bnb_limit) {
    std::vector<int> cap;
    for (int c = 0; c < p.layout.size(); ++c) cap.push_back(site_capacity(p, c));
    SiteSearch s(cand, cap, 20'000'000);
    if (s.run()) {
      take = s.best();
      done = true;
    }
  }
  if (!done) take = max_flow_sites(p, cand);
  for (std::size_t i = 0; i < cand.size(); ++i)
    if (take[i]) out.sites.push_back(cand[i]);
  return out;
}

Ticks site_distance(const PlacementIndex& index, const RestingSite& s, int cell) {
  return std::min(index.dist(cell, s.cell_a), index.dist(cell, s.cell_b)) + Ticks{1};
}

std::optional<Ticks> detour(const Transit& t, const RestingSite& s, const PlacementIndex& index) {
  const Ticks via = site_distance(index, s, t.from_cell) + site_distance(index, s, t.to_cell);
  if (via > t.gap) return std::nullopt;
  return via - t.travel;
}

std::vector<int> overlap_clique(const std::vector<Transit>& transits) {
  std::vector<std::pair<Ticks, int>> ev;
  for (const auto& t : transits) {
    ev.emplace_back(t.depart, +1);
    ev.emplace_back(t.arrive, -1);
  }
  std::sort(ev.begin(), ev.end());  // ends (-1) before starts at equal ticks
  int cur = 0, best = 0;
  Ticks at = 0;
  for (auto [tick, d] : ev) {
    cur += d;
    if (cur > best) {
      best = cur;
      at = tick;
    }
  }
  std::vector<int> out;
  for (std::size_t i = 0; i < transits.size(); ++i)
    if (transits[i].depart <= at && at < transits[i].arrive) out.push_back(static_cast<int>(i));
  return out;
}

namespace {

bool overlaps(const Transit& a, const Transit& b) { return a.depart < b.arrive && b.depart < a.arrive; }

struct AssignData {
  const std::vector<Transit>& tr;
  std::vector<std::vector<std::pair<Ticks, int>>> options;  // (cost, site) ascending
  Ticks penalty = 0;
  bool strict = false;
};

class AssignSearch {
 public:
  AssignSearch(const AssignData& d, long limit)
      : d_(d), limit_(limit), cur_(d.tr.size(), -1), users_(0) {
    const auto n = d.tr.size();
    suffix_.assign(n + 1, 0);
    for (std::size_t i = n; i-- > 0;) {
      const auto& o = d.options[i];
      suffix_[i] = suffix_[i + 1] + (o.empty() ? d.penalty : std::min(o.front().first, d.strict ? o.front().first : d.penalty));
    }
  }

  bool run(std::size_t n_sites) {
    users_.assign(n_sites, {});
    dfs(0, 0);
    return !aborted_;
  }
  bool found() const { return best_cost_ >= 0; }
  const std::vector<int>& best() const { return best_; }

 private:
  void dfs(std::size_t i, Ticks cost) {
    if (aborted_) return;
    if (++nodes_ > limit_) {
      aborted_ = true;
      return;
    }
    if (best_cost_ >= 0 && cost + suffix_[i] >= best_cost_) return;
    if (i == d_.tr.size()) {
      best_cost_ = cost;
      best_ = cur_;
      return;
    }
    for (auto [c, s] : d_.options[i]) {
      auto& u = users_[static_cast<std::size_t>(s)];
      bool clash = false;
      for (int j : u) clash |= overlaps(d_.tr[i], d_.tr[static_cast<std::size_t>(j)]);
      if (clash) continue;
      u.push_back(static_cast<int>(i));
      cur_[i] = s;
      dfs(i + 1, cost + c);
      cur_[i] = -1;
      u.pop_back();
    }
    if (!d_.strict) dfs(i + 1, cost + d_.penalty);
  }

  const AssignData& d_;
  long limit_;
  long nodes_ = 0;
  bool aborted_ = false;
  std::vector<int> cur_;
  std::vector<std::vector<int>> users_;
  std::vector<Ticks> suffix_;
  Ticks best_cost_ = -1;
  std::vector<int> best_;
};

std::vector<int> regret_greedy(const AssignData& d, std::size_t n_sites) {
  const auto n = d.tr.size();
  std::vector<int> site(n, -1);
  std::vector<char> done(n, 0);
  std::vector<std::vector<int>> users(n_sites);
  auto available = [&](std::size_t i, int s) {
    for (int j : users[static_cast<std::size_t>(s)])
      if (overlaps(d.tr[i], d.tr[static_cast<std::size_t>(j)])) return false;
    return true;
  };
  for (std::size_t step = 0; step < n; ++step) {
    std::size_t pick = n;
    Ticks pick_regret = -1;
    int pick_site = -1;
    for (std::size_t i = 0; i < n; ++i) {
      if (done[i]) continue;
      Ticks b1 = d.penalty, b2 = d.penalty;
      int s1 = -1;
      for (auto [c, s] : d.options[i]) {
        if (!available(i, s)) continue;
        if (s1 < 0) {
          b1 = c;
          s1 = s;
        } else {
          b2 = c;
          break;
        }
      }
      const Ticks regret = b2 - b1;
      if (regret > pick_regret) {
        pick_regret = regret;
        pick = i;
        pick_site = s1;
      }
    }
    done[pick] = 1;
    site[pick] = pick_site;
    if (pick_site >= 0) users[static_cast<std::size_t>(pick_site)].push_back(static_cast<int>(pick));
  }
  return site;
}

}  // namespace

RestingAssignment assign_resting_sites(const std::vector<Transit>& transits, const std::vector<RestingSite>& sites,
                                       const PlacementIndex& index, const AssignOptions& opt) {
  AssignData d{transits, {}, 0, opt.strict};
  Ticks worst = 0;
  for (const auto& t : transits) {
    std::vector<std::pair<Ticks, int>> o;
    for (std::size_t s = 0; s < sites.size(); ++s)
      if (auto c = detour(t, sites[s], index)) o.emplace_back(*c, static_cast<int>(s));
    std::sort(o.begin(), o.end());
    if (!o.empty()) worst += o.back().first;
    d.options.push_back(std::move(o));
  }
  d.penalty = opt.unassigned_penalty > 0 ? opt.unassigned_penalty : worst + 1;

  auto infeasible = [&]() {
    std::string msg = "resting sites cannot host every idle transit; overlapping transits:";
    for (int i : overlap_clique(transits)) msg += " " + std::to_string(i);
    msg += " with " + std::to_string(sites.size()) + " sites";
    throw InfeasibleError(msg);
  };
  if (opt.strict)
    for (const auto& o : d.options)
      if (o.empty()) infeasible();

  RestingAssignment r;
  std::vector<int> choice;
  if (static_cast<int>(transits.size()) <= opt.exact_limit) {
    AssignSearch s(d, opt.node_limit);
    const bool complete = s.run(sites.size());
    if (s.found()) {
      choice = s.best();
      r.exact = complete;
    } else if (complete && opt.strict) {
      infeasible();
    }
  }
  if (choice.empty() && !transits.empty()) {
    choice = regret_greedy(d, sites.size());
    if (opt.strict && std::count(choice.begin(), choice.end(), -1) > 0) infeasible();
  }
  r.site_of = choice;
  for (std::size_t i = 0; i < choice.size(); ++i) {
    if (choice[i] < 0) {
      ++r.unassigned;
      continue;
    }
    r.cost += *detour(transits[i], sites[static_cast<std::size_t>(choice[i])], index);
  }
  return r;
}

}  // namespace planarfab
