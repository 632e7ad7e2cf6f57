#include "planarfab/routing.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <numeric>
#include <tuple>

#include "planarfab/error.hpp"

namespace planarfab {

std::vector<Transit> extract_transits(const Schedule& s, const PlacementIndex& index) {
  std::vector<Transit> out;
  const auto seq = mover_sequences(s);
  for (std::size_t m = 0; m < seq.size(); ++m)
    for (std::size_t k = 0; k + 1 < seq[m].size(); ++k) {
      const int a = seq[m][k], b = seq[m][k + 1];
      const auto& pa = s.plan[static_cast<std::size_t>(a)];
      const auto& pb = s.plan[static_cast<std::size_t>(b)];
      Transit t;
      t.mover = static_cast<int>(m);
      t.from_op = a;
      t.to_op = b;
      t.from_cell = pa.cell;
      t.to_cell = pb.cell;
      t.depart = pa.end;
      t.arrive = pb.start;
      t.gap = pb.start - pa.end;
      t.travel = index.dist(pa.cell, pb.cell);
      t.idle = t.gap - t.travel;
      if (t.idle > 0) out.push_back(t);
    }
  return out;
}

std::vector<int> tile_path(const PlacementIndex& index, int a, int b) {
  const Layout& l = index.placement().layout;
  const Coord A = index.coord(a), B = index.coord(b);
  std::vector<int> path{a};
  Coord c = A;
  bool ok = true;
  while (ok && c != B) {
    if (c.x != B.x) c.x += c.x < B.x ? 1 : -1;
    else c.y += c.y < B.y ? 1 : -1;
    auto i = l.index_of(c);
    if (!i) ok = false;
    else path.push_back(*i);
  }
  if (ok) return path;

  const int n = l.size();
  std::vector<int> prev(static_cast<std::size_t>(n), -2);
  std::deque<int> q{a};
  prev[static_cast<std::size_t>(a)] = -1;
  while (!q.empty()) {
    const int u = q.front();
    q.pop_front();
    if (u == b) break;
    const Coord cu = index.coord(u);
    for (Coord nb : {Coord{cu.x + 1, cu.y}, Coord{cu.x - 1, cu.y}, Coord{cu.x, cu.y + 1}, Coord{cu.x, cu.y - 1}}) {
      auto v = l.index_of(nb);
      if (v && prev[static_cast<std::size_t>(*v)] == -2) {
        prev[static_cast<std::size_t>(*v)] = u;
        q.push_back(*v);
      }
    }
  }
  path.clear();
  for (int v = b; v != -1; v = prev[static_cast<std::size_t>(v)]) path.push_back(v);
  std::reverse(path.begin(), path.end());
  return path;
}

int MoverPaths::occupied(int mover, Ticks t) const {
  if (t < 0 || t >= horizon) return -1;
  const auto& p = pos[static_cast<std::size_t>(mover)][static_cast<std::size_t>(t)];
  return p.kind == PosKind::Tile ? p.cell : -1;
}

namespace {

// Dispensing intervals per cell, for choosing where to wait.
using CellBusy = std::vector<std::vector<std::tuple<Ticks, Ticks, int>>>;

CellBusy dispensing_by_cell(const Schedule& s, int n_cells) {
  CellBusy busy(static_cast<std::size_t>(n_cells));
  for (std::size_t i = 0; i < s.plan.size(); ++i)
    if (s.ops[i].kind == OpKind::Dispense)
      busy[static_cast<std::size_t>(s.plan[i].cell)].emplace_back(s.plan[i].start, s.plan[i].end, s.plan[i].mover);
  return busy;
}

Ticks overlap_ticks(const CellBusy& busy, int cell, Ticks lo, Ticks hi, int mover) {
  Ticks tot = 0;
  for (auto [s, e, m] : busy[static_cast<std::size_t>(cell)])
    if (m != mover) tot += std::max<Ticks>(0, std::min(e, hi) - std::max(s, lo));
  return tot;
}

}  // namespace

MoverPaths build_paths(const Schedule& s, const PlacementIndex& index, const std::vector<Transit>& transits,
                       const RestingAssignment& resting, const std::vector<RestingSite>& sites) {
  MoverPaths mp;
  mp.horizon = compute_makespan(s);
  const auto H = static_cast<std::size_t>(mp.horizon);
  mp.pos.assign(static_cast<std::size_t>(s.n_movers), std::vector<TickPos>(H));
  for (auto& row : mp.pos)
    for (std::size_t t = 0; t < H; ++t) row[t].tick = static_cast<Ticks>(t);

  std::map<int, int> transit_of;
  for (std::size_t i = 0; i < transits.size(); ++i) transit_of[transits[i].from_op] = static_cast<int>(i);
  const CellBusy busy = dispensing_by_cell(s, index.n_cells());

  const auto seq = mover_sequences(s);
  for (std::size_t m = 0; m < seq.size(); ++m) {
    auto& row = mp.pos[m];
    auto put = [&](Ticks t, PosKind k, int cell, int other, PosState st) {
      if (t < 0 || t >= mp.horizon) return;
      auto& p = row[static_cast<std::size_t>(t)];
      p.kind = k;
      p.cell = cell;
      p.other = other;
      p.state = st;
    };
    // travel along path starting at tick t0 (departure tick on the first edge)
    auto walk = [&](const std::vector<int>& path, Ticks t0) {
      for (std::size_t k = 0; k + 1 < path.size(); ++k) {
        if (k == 0) put(t0, PosKind::Edge, path[0], path[1], PosState::Move);
        else put(t0 + static_cast<Ticks>(k), PosKind::Tile, path[k], -1, PosState::Move);
      }
    };
    for (std::size_t k = 0; k < seq[m].size(); ++k) {
      const int i = seq[m][k];
      const auto& p = s.plan[static_cast<std::size_t>(i)];
      const PosState st = s.ops[static_cast<std::size_t>(i)].kind == OpKind::Dispense ? PosState::Dispense : PosState::Swap;
      for (Ticks t = p.start; t < p.end; ++t) put(t, PosKind::Tile, p.cell, -1, st);
      if (k + 1 == seq[m].size()) break;
      const auto& q = s.plan[static_cast<std::size_t>(seq[m][k + 1])];
      const auto tr = transit_of.find(i);
      const int site = tr == transit_of.end() || resting.site_of.empty()
                           ? -1
                           : resting.site_of[static_cast<std::size_t>(tr->second)];
      if (site >= 0) {
        const auto& rs = sites[static_cast<std::size_t>(site)];
        auto nearer = [&](int from) {
          return index.dist(from, rs.cell_a) <= index.dist(from, rs.cell_b) ? rs.cell_a : rs.cell_b;
        };
        const auto p1 = tile_path(index, p.cell, nearer(p.cell));
        const auto p2 = tile_path(index, nearer(q.cell), q.cell);
        const Ticks d1 = static_cast<Ticks>(p1.size()) - 1, d2 = static_cast<Ticks>(p2.size()) - 1;
        walk(p1, p.end);
        if (d1 > 0) put(p.end + d1, PosKind::Tile, p1.back(), -1, PosState::Move);
        const Ticks leave = q.start - d2 - 1;
        for (Ticks t = p.end + (d1 > 0 ? d1 + 1 : 0); t <= leave; ++t) put(t, PosKind::Site, -1, site, PosState::Rest);
        for (Ticks k2 = 0; k2 < d2; ++k2) put(leave + 1 + k2, PosKind::Tile, p2[static_cast<std::size_t>(k2)], -1, PosState::Move);
        continue;
      }
      const auto path = tile_path(index, p.cell, q.cell);
      const Ticks d = static_cast<Ticks>(path.size()) - 1;
      const Ticks slack = q.start - p.end - d;
      std::vector<int> first(path.begin(), path.begin() + 1), second(path);
      if (slack > 0) {
        Ticks best = -1;
        std::size_t w = 0;
        for (std::size_t c = 0; c < path.size(); ++c) {
          const Ticks lo = p.end + static_cast<Ticks>(c);
          const Ticks ov = overlap_ticks(busy, path[c], lo, lo + slack, static_cast<int>(m));
          if (best < 0 || ov < best) {
            best = ov;
            w = c;
          }
          if (ov == 0) break;
        }
        first.assign(path.begin(), path.begin() + static_cast<std::ptrdiff_t>(w) + 1);
        second.assign(path.begin() + static_cast<std::ptrdiff_t>(w), path.end());
        // step aside when every tile on the way is in someone's way
        Ticks best_extra = 0;
        for (int c = 0; c < index.n_cells() && best > 0; ++c) {
          const Ticks extra = index.dist(p.cell, c) + index.dist(c, q.cell) - d;
          if (extra <= 0 || extra >= slack) continue;
          const Ticks lo = p.end + index.dist(p.cell, c);
          const Ticks ov = overlap_ticks(busy, c, lo, lo + slack - extra, static_cast<int>(m));
          if (ov < best || (ov == best && extra < best_extra)) {
            best = ov;
            best_extra = extra;
            first = tile_path(index, p.cell, c);
            second = tile_path(index, c, q.cell);
          }
        }
      }
      // reach first.back(), wait there, finish the trip
      walk(first, p.end);
      const Ticks reach = p.end + static_cast<Ticks>(first.size()) - 1;
      const Ticks depart = q.start - (static_cast<Ticks>(second.size()) - 1);
      for (Ticks t = reach; t < depart; ++t) put(t, PosKind::Tile, first.back(), -1, PosState::Rest);
      walk(second, depart);
    }
  }
  return mp;
}

std::vector<Ticks> detect_conflicts(const MoverPaths& paths, const Schedule& s) {
  std::vector<Ticks> out(s.plan.size(), 0);
  for (std::size_t i = 0; i < s.plan.size(); ++i) {
    if (s.ops[i].kind != OpKind::Dispense) continue;
    const auto& p = s.plan[i];
    for (Ticks t = std::max<Ticks>(0, p.start); t < std::min(p.end, paths.horizon); ++t)
      for (int m = 0; m < static_cast<int>(paths.pos.size()); ++m)
        if (m != p.mover && paths.occupied(m, t) == p.cell) {
          ++out[i];
          break;
        }
  }
  return out;
}

namespace {

void add_batch_edges(const Schedule& s, const PlacementIndex& index, const std::vector<Ticks>& l, SameCellWeight w,
                     int offset, PrecedenceDag& dag) {
  const auto seq = mover_sequences(s);
  auto len = [&](int i) {
    return s.ops[static_cast<std::size_t>(i)].duration + l[static_cast<std::size_t>(offset + i)];
  };
  for (const auto& q : seq)
    for (std::size_t k = 0; k + 1 < q.size(); ++k)
      dag.edges.push_back({offset + q[k], offset + q[k + 1],
                           len(q[k]) + index.dist(s.plan[static_cast<std::size_t>(q[k])].cell,
                                                  s.plan[static_cast<std::size_t>(q[k + 1])].cell),
                           true});
  std::map<int, std::vector<int>> by_cell;
  for (std::size_t i = 0; i < s.plan.size(); ++i) by_cell[s.plan[i].cell].push_back(static_cast<int>(i));
  for (auto& [cell, v] : by_cell) {
    std::stable_sort(v.begin(), v.end(), [&](int a, int b) {
      return s.plan[static_cast<std::size_t>(a)].start < s.plan[static_cast<std::size_t>(b)].start;
    });
    for (std::size_t k = 0; k + 1 < v.size(); ++k)
      dag.edges.push_back({offset + v[k], offset + v[k + 1], w == SameCellWeight::Unit ? Ticks{1} : len(v[k]), false});
  }
  for (std::size_t i = 0; i < s.plan.size(); ++i)
    dag.edges.push_back({-1, offset + static_cast<int>(i), s.plan[i].start, true});
  std::vector<int> order(s.plan.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const auto& x = s.plan[static_cast<std::size_t>(a)];
    const auto& y = s.plan[static_cast<std::size_t>(b)];
    return std::tie(x.start, x.mover) < std::tie(y.start, y.mover);
  });
  for (int i : order) dag.topo.push_back(offset + i);
}

Schedule retimed(const Schedule& base, const std::vector<Ticks>& start, const std::vector<Ticks>& l) {
  Schedule s = base;
  for (std::size_t i = 0; i < s.plan.size(); ++i) {
    s.plan[i].start = start[i];
    s.plan[i].interruption = l[i];
    s.plan[i].end = start[i] + s.ops[i].duration + l[i];
  }
  s.makespan = compute_makespan(s);
  return s;
}

}  // namespace

PrecedenceDag build_dag(const Schedule& s, const PlacementIndex& index, const std::vector<Ticks>& interruption,
                        SameCellWeight w) {
  PrecedenceDag dag;
  dag.n_ops = static_cast<int>(s.plan.size());
  std::vector<Ticks> l = interruption;
  l.resize(s.plan.size(), 0);
  add_batch_edges(s, index, l, w, 0, dag);
  return dag;
}

bool is_acyclic(const PrecedenceDag& dag) {
  const auto n = static_cast<std::size_t>(dag.n_ops);
  std::vector<int> indeg(n, 0);
  std::vector<std::vector<int>> out(n);
  for (const auto& e : dag.edges) {
    if (e.from < 0) continue;
    out[static_cast<std::size_t>(e.from)].push_back(e.to);
    ++indeg[static_cast<std::size_t>(e.to)];
  }
  std::vector<int> q;
  for (std::size_t i = 0; i < n; ++i)
    if (indeg[i] == 0) q.push_back(static_cast<int>(i));
  std::size_t seen = 0;
  while (!q.empty()) {
    const int u = q.back();
    q.pop_back();
    ++seen;
    for (int v : out[static_cast<std::size_t>(u)])
      if (--indeg[static_cast<std::size_t>(v)] == 0) q.push_back(v);
  }
  return seen == n;
}

std::vector<Ticks> longest_path_starts(const PrecedenceDag& dag) {
  const auto n = static_cast<std::size_t>(dag.n_ops);
  std::vector<std::vector<const DagEdge*>> in(n);
  for (const auto& e : dag.edges) in[static_cast<std::size_t>(e.to)].push_back(&e);
  std::vector<Ticks> S(n, 0);
  std::vector<char> done(n, 0);
  for (int v : dag.topo) {
    Ticks best = 0;
    for (const DagEdge* e : in[static_cast<std::size_t>(v)]) {
      if (e->from >= 0 && !done[static_cast<std::size_t>(e->from)])
        throw Error("precedence order violates a DAG edge");
      best = std::max(best, (e->from < 0 ? 0 : S[static_cast<std::size_t>(e->from)]) + e->weight);
    }
    S[static_cast<std::size_t>(v)] = best;
    done[static_cast<std::size_t>(v)] = 1;
  }
  return S;
}

RoutedPlan resolve_conflicts(const Schedule& s, const PlacementIndex& index, const std::vector<RestingSite>& sites,
                             const RoutingOptions& opt) {
  RoutedPlan r;
  r.sites = opt.use_resting_sites ? sites : std::vector<RestingSite>{};
  r.makespan_before = s.makespan;
  std::vector<Ticks> l(s.plan.size(), 0);
  for (std::size_t i = 0; i < s.plan.size(); ++i) l[i] = s.plan[i].interruption;
  std::vector<Ticks> current;
  for (int it = 1; it <= opt.max_iterations; ++it) {
    r.iterations = it;
    const PrecedenceDag dag = build_dag(s, index, l, opt.same_cell);
    r.schedule = retimed(s, longest_path_starts(dag), l);
    r.makespan_history.push_back(r.schedule.makespan);
    r.transits = extract_transits(r.schedule, index);
    r.resting = r.sites.empty() ? RestingAssignment{std::vector<int>(r.transits.size(), -1), 0,
                                                    static_cast<int>(r.transits.size()), true}
                                : assign_resting_sites(r.transits, r.sites, index, opt.assign);
    r.paths = build_paths(r.schedule, index, r.transits, r.resting, r.sites);
    current = detect_conflicts(r.paths, r.schedule);
    int unresolved = 0;
    for (std::size_t i = 0; i < l.size(); ++i)
      if (current[i] > l[i]) {
        ++unresolved;
        l[i] = current[i];
      }
    r.residual_conflicts = unresolved;
    if (unresolved == 0) {
      r.converged = true;
      break;
    }
  }
  r.makespan = r.schedule.makespan;
  return r;
}

Schedule merge_batches(std::span<const Schedule> batches, const PlacementIndex& index, SameCellWeight w) {
  Schedule out;
  if (batches.empty()) return out;
  out.n_movers = batches.front().n_movers;
  for (const auto& b : batches)
    if (b.n_movers != out.n_movers) throw ConfigError("batches use different mover fleets");
  if (batches.size() == 1) return batches.front();

  PrecedenceDag dag;
  std::vector<Ticks> l;
  for (const auto& b : batches)
    for (const auto& p : b.plan) l.push_back(p.interruption);
  dag.n_ops = static_cast<int>(l.size());
  std::vector<int> last_of_mover(static_cast<std::size_t>(out.n_movers), -1);
  std::map<int, int> last_of_cell;
  int offset = 0;
  for (const auto& b : batches) {
    add_batch_edges(b, index, l, w, offset, dag);
    const auto seq = mover_sequences(b);
    for (std::size_t m = 0; m < seq.size(); ++m) {
      if (seq[m].empty()) continue;
      const int first = offset + seq[m].front();
      if (const int prev = last_of_mover[m]; prev >= 0) {
        const auto& pp = out.plan[static_cast<std::size_t>(prev)];
        const auto& op = out.ops[static_cast<std::size_t>(prev)];
        dag.edges.push_back({prev, first,
                             op.duration + l[static_cast<std::size_t>(prev)] +
                                 index.dist(pp.cell, b.plan[static_cast<std::size_t>(seq[m].front())].cell),
                             true});
      }
      last_of_mover[m] = offset + seq[m].back();
    }
    std::map<int, std::pair<int, int>> span_of_cell;  // first, last by start
    for (std::size_t i = 0; i < b.plan.size(); ++i) {
      const int c = b.plan[i].cell;
      auto it = span_of_cell.find(c);
      if (it == span_of_cell.end()) {
        span_of_cell[c] = {static_cast<int>(i), static_cast<int>(i)};
        continue;
      }
      if (b.plan[i].start < b.plan[static_cast<std::size_t>(it->second.first)].start) it->second.first = static_cast<int>(i);
      if (b.plan[i].start > b.plan[static_cast<std::size_t>(it->second.second)].start) it->second.second = static_cast<int>(i);
    }
    for (auto [cell, fl] : span_of_cell) {
      if (auto it = last_of_cell.find(cell); it != last_of_cell.end()) {
        const int prev = it->second;
        const Ticks wt = w == SameCellWeight::Unit
                             ? Ticks{1}
                             : out.ops[static_cast<std::size_t>(prev)].duration + l[static_cast<std::size_t>(prev)];
        dag.edges.push_back({prev, offset + fl.first, wt, false});
      }
      last_of_cell[cell] = offset + fl.second;
    }
    for (std::size_t i = 0; i < b.ops.size(); ++i) {
      OperationSpec op = b.ops[i];
      op.id = offset + static_cast<int>(i);
      out.ops.push_back(op);
      out.plan.push_back(b.plan[i]);
    }
    offset += static_cast<int>(b.ops.size());
  }
  const auto S = longest_path_starts(dag);
  out = retimed(out, S, l);
  return out;
}

}  // namespace planarfab
