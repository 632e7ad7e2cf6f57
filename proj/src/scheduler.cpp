#include "planarfab/scheduler.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <numeric>

#include "planarfab/error.hpp"
#include "planarfab/rng.hpp"

namespace planarfab {

namespace {

using Clock = std::chrono::steady_clock;
constexpr Ticks kNever = std::numeric_limits<Ticks>::max() / 4;

struct OrderData {
  int first_op = 0;
  std::vector<DrugId> drugs;  // sorted, matches op order
  std::vector<Ticks> dur;
  PathResult route;
};

// Busy intervals of one cell, sorted and disjoint.
class Calendar {
 public:
  Ticks earliest(Ticks t, Ticks dur) const {
    auto it = std::upper_bound(iv_.begin(), iv_.end(), t,
                               [](Ticks x, const std::pair<Ticks, Ticks>& p) { return x < p.second; });
    for (; it != iv_.end(); ++it) {
      if (it->first >= t + dur) break;
      t = std::max(t, it->second);
    }
    return t;
  }
  void book(Ticks s, Ticks e) {
    auto it = std::lower_bound(iv_.begin(), iv_.end(), std::make_pair(s, e));
    iv_.insert(it, {s, e});
  }
  void clear() { iv_.clear(); }

 private:
  std::vector<std::pair<Ticks, Ticks>> iv_;
};

struct Eval {
  Ticks makespan = kNever;
  Ticks total = kNever;
  bool operator<(const Eval& o) const { return makespan != o.makespan ? makespan < o.makespan : total < o.total; }
  bool operator<=(const Eval& o) const { return !(o < *this); }
};

class Decoder {
 public:
  Decoder(std::span<const Order> orders, const PlacementIndex& index, Ticks eta)
      : orders_(orders), index_(index), eta_(eta), ops_(build_operations(orders, eta)) {
    if (index.interfaces().empty()) throw InfeasibleError("placement has no interface");
    int next = 0;
    for (const Order& o : orders) {
      check_order(o, index.n_drugs());
      OrderData d;
      d.first_op = next;
      std::vector<OrderItem> items = o.items;
      std::sort(items.begin(), items.end(), [](auto& a, auto& b) { return a.drug < b.drug; });
      for (const auto& it : items) {
        if (index.cells_of(it.drug).empty())
          throw InfeasibleError("drug " + std::to_string(it.drug) + " has no placed dispenser");
        d.drugs.push_back(it.drug);
        d.dur.push_back(it.duration);
      }
      d.route = kappa(o, index);
      next += static_cast<int>(items.size()) + 2;
      data_.push_back(std::move(d));
    }
    cal_.resize(static_cast<std::size_t>(index.n_cells()));
  }

  const std::vector<OperationSpec>& ops() const { return ops_; }
  const OrderData& data(std::size_t o) const { return data_[o]; }

  Eval run(const SequenceSolution& sol, Schedule* out) {
    for (auto& c : cal_) c.clear();
    const std::size_t M = sol.seq.size();
    if (out) {
      out->ops = ops_;
      out->plan.assign(ops_.size(), {});
      out->n_movers = static_cast<int>(M);
    }
    struct MoverState {
      Ticks ready = 0;
      int pos = -1;
      std::size_t k = 0;
      int phase = 0;  // 0 start, 1 dispensing, 2 finish
      std::vector<char> pending;
      std::size_t step = 0;
    };
    std::vector<MoverState> ms(M);
    Eval ev{0, 0};
    const auto& I = index_.interfaces();
    for (;;) {
      std::size_t m = M;
      for (std::size_t q = 0; q < M; ++q)
        if (ms[q].k < sol.seq[q].size() && (m == M || ms[q].ready < ms[m].ready)) m = q;
      if (m == M) break;
      auto& st = ms[m];
      const auto o = static_cast<std::size_t>(sol.seq[m][st.k]);
      const OrderData& d = data_[o];
      const bool fixed = !sol.fixed_route.empty() && sol.fixed_route[o];
      auto travel = [&](int c) { return st.pos < 0 ? Ticks{0} : static_cast<Ticks>(index_.dist(st.pos, c)); };

      int cell = -1, op = -1;
      Ticks s = kNever, dur = 0;
      if (st.phase == 0 || (st.phase == 1 && st.step == d.drugs.size()) || st.phase == 2) {
        const bool start = st.phase == 0;
        if (start) {
          st.pending.assign(d.drugs.size(), 1);
          st.step = 0;
        }
        dur = eta_;
        op = start ? d.first_op : d.first_op + static_cast<int>(d.drugs.size()) + 1;
        if (fixed) {
          cell = start ? d.route.cells.front() : d.route.cells.back();
          s = cal_[static_cast<std::size_t>(cell)].earliest(st.ready + travel(cell), dur);
        } else {
          for (int i : I) {
            const Ticks t = cal_[static_cast<std::size_t>(i)].earliest(st.ready + travel(i), dur);
            if (t < s) {
              s = t;
              cell = i;
            }
          }
        }
        st.phase = start ? 1 : 3;
      } else {
        std::size_t pick = 0;
        if (fixed) {
          const DrugId g = d.route.drugs[st.step];
          pick = static_cast<std::size_t>(std::find(d.drugs.begin(), d.drugs.end(), g) - d.drugs.begin());
          cell = d.route.cells[st.step + 1];
          dur = d.dur[pick];
          s = cal_[static_cast<std::size_t>(cell)].earliest(st.ready + travel(cell), dur);
        } else {
          for (std::size_t i = 0; i < d.drugs.size(); ++i) {
            if (!st.pending[i]) continue;
            for (int c : index_.cells_of(d.drugs[i])) {
              const Ticks t = cal_[static_cast<std::size_t>(c)].earliest(st.ready + travel(c), d.dur[i]);
              if (t + d.dur[i] < s + dur) {
                s = t;
                dur = d.dur[i];
                cell = c;
                pick = i;
              }
            }
          }
        }
        st.pending[pick] = 0;
        op = d.first_op + 1 + static_cast<int>(pick);
        ++st.step;
        if (st.step == d.drugs.size()) st.phase = 2;
      }
      const Ticks e = s + dur;
      cal_[static_cast<std::size_t>(cell)].book(s, e);
      st.ready = e;
      st.pos = cell;
      if (out) out->plan[static_cast<std::size_t>(op)] = {static_cast<int>(m), cell, s, e, 0};
      ev.makespan = std::max(ev.makespan, e);
      if (st.phase == 3) {
        ev.total += e;
        st.phase = 0;
        ++st.k;
      }
    }
    if (out) out->makespan = ev.makespan;
    return ev;
  }

 private:
  std::span<const Order> orders_;
  const PlacementIndex& index_;
  Ticks eta_;
  std::vector<OperationSpec> ops_;
  std::vector<OrderData> data_;
  std::vector<Calendar> cal_;
};

class Lns {
 public:
  Lns(Decoder& dec, std::size_t n_orders, const ScheduleParams& p)
      : dec_(dec), n_(n_orders), p_(p), rng_(derive_seed(p.seed, stream_tag("lns"))) {}

  // Best position (mover, index, mode) for order o; appends only when
  // append_only is set.
  void insert(SequenceSolution& sol, int o, bool append_only) {
    Eval best;
    std::size_t bm = 0, bi = 0;
    char bmode = 0;
    for (std::size_t m = 0; m < sol.seq.size(); ++m) {
      const std::size_t lo = append_only ? sol.seq[m].size() : 0;
      for (std::size_t i = lo; i <= sol.seq[m].size(); ++i) {
        sol.seq[m].insert(sol.seq[m].begin() + static_cast<std::ptrdiff_t>(i), o);
        for (char mode = 0; mode < 2; ++mode) {
          sol.fixed_route[static_cast<std::size_t>(o)] = mode;
          const Eval e = dec_.run(sol, nullptr);
          if (e < best) {
            best = e;
            bm = m;
            bi = i;
            bmode = mode;
          }
        }
        sol.seq[m].erase(sol.seq[m].begin() + static_cast<std::ptrdiff_t>(i));
        // an empty mover is interchangeable with any other empty mover
        if (sol.seq[m].empty()) {
          bool earlier_empty = false;
          for (std::size_t q = 0; q < m; ++q) earlier_empty |= sol.seq[q].empty();
          if (earlier_empty) break;
        }
      }
    }
    sol.seq[bm].insert(sol.seq[bm].begin() + static_cast<std::ptrdiff_t>(bi), o);
    sol.fixed_route[static_cast<std::size_t>(o)] = bmode;
  }

  ScheduleResult run(SequenceSolution init, Clock::time_point t0, Clock::time_point deadline) {
    ScheduleResult res;
    SequenceSolution cur = std::move(init);
    Eval cur_ev = dec_.run(cur, nullptr);
    SequenceSolution best = cur;
    Eval best_ev = cur_ev;
    auto secs = [&] { return std::chrono::duration<double>(Clock::now() - t0).count(); };
    res.trace.push_back({0, secs(), best_ev.makespan});

    const int kmax = std::max(1, std::min<int>(p_.max_destroy, static_cast<int>(n_)));
    std::vector<double> weight(static_cast<std::size_t>(kmax), 1.0);
    int stale = 0;
    long it = 0;
    while (it < p_.max_iterations && best_ev.makespan > p_.stop_at && n_ > 0) {
      if ((it & 7) == 0 && Clock::now() >= deadline) break;
      ++it;
      double tot = std::accumulate(weight.begin(), weight.end(), 0.0);
      double r = rng_.uniform() * tot;
      int k = 1;
      for (; k < kmax; ++k) {
        r -= weight[static_cast<std::size_t>(k - 1)];
        if (r < 0) break;
      }
      SequenceSolution cand = cur;
      std::vector<int> removed;
      while (static_cast<int>(removed.size()) < k) {
        const int o = static_cast<int>(rng_.below(n_));
        if (std::find(removed.begin(), removed.end(), o) == removed.end()) removed.push_back(o);
      }
      for (auto& s : cand.seq)
        s.erase(std::remove_if(s.begin(), s.end(),
                               [&](int o) { return std::find(removed.begin(), removed.end(), o) != removed.end(); }),
                s.end());
      for (int o : removed) insert(cand, o, false);
      const Eval ev = dec_.run(cand, nullptr);
      double reward = 0.0;
      if (ev < best_ev) {
        best = cand;
        best_ev = ev;
        res.trace.push_back({it, secs(), best_ev.makespan});
        reward = 3.0;
        stale = 0;
      } else {
        ++stale;
      }
      if (ev <= cur_ev) {
        cur = std::move(cand);
        cur_ev = ev;
        reward = std::max(reward, 1.0);
      }
      auto& w = weight[static_cast<std::size_t>(k - 1)];
      w = std::max(0.05, 0.9 * w + 0.1 * reward);
      if (stale >= p_.stale_restart) {
        cur = best;
        cur_ev = best_ev;
        stale = 0;
      }
    }
    res.iterations = it;
    dec_.run(best, &res.schedule);
    return res;
  }

 private:
  Decoder& dec_;
  std::size_t n_;
  const ScheduleParams& p_;
  Rng rng_;
};

// Depth-first search over op sequences sorted by (start, mover), each op
// placed at the earliest tick after its mover and the cell's last op.
// Every semi-active schedule is reached by exactly such a sequence.
class ExactSearch {
 public:
  ExactSearch(std::span<const Order> orders, const PlacementIndex& index, int n_movers, Ticks eta,
              long node_limit, Ticks incumbent)
      : orders_(orders), index_(index), M_(n_movers), eta_(eta), limit_(node_limit), best_(incumbent),
        ops_(build_operations(orders, eta)) {
    int next = 0;
    for (const Order& o : orders) {
      OrderData d;
      d.first_op = next;
      std::vector<OrderItem> items = o.items;
      std::sort(items.begin(), items.end(), [](auto& a, auto& b) { return a.drug < b.drug; });
      for (const auto& it : items) {
        d.drugs.push_back(it.drug);
        d.dur.push_back(it.duration);
      }
      bound_.push_back(2 * eta + kappa(o, index).kappa + o.total_duration());
      next += static_cast<int>(items.size()) + 2;
      data_.push_back(std::move(d));
    }
    cell_end_.assign(static_cast<std::size_t>(index.n_cells()), 0);
    movers_.resize(static_cast<std::size_t>(M_));
    status_.assign(orders.size(), 0);
    plan_.assign(ops_.size(), {});
  }

  bool run() {
    dfs(0, -1, 0, 0);
    return !aborted_;
  }
  bool found() const { return !best_plan_.empty(); }
  Schedule result() const {
    Schedule s;
    s.ops = ops_;
    s.plan = best_plan_;
    s.n_movers = M_;
    s.makespan = best_;
    return s;
  }

 private:
  struct Mover {
    Ticks ready = 0;
    int pos = -1;
    int order = -1;
    std::vector<char> pending;
    int left = 0;
    bool used = false;
  };

  Ticks remaining(const Mover& mv) const {
    if (mv.order < 0) return 0;
    const auto& d = data_[static_cast<std::size_t>(mv.order)];
    Ticks r = eta_;
    for (std::size_t i = 0; i < d.drugs.size(); ++i)
      if (mv.pending[i]) r += d.dur[i];
    return r;
  }

  Ticks node_bound(Ticks curmax) const {
    Ticks lb = curmax, total = 0, min_avail = kNever, max_un = 0;
    for (const auto& mv : movers_) {
      const Ticks avail = mv.ready + remaining(mv);
      lb = std::max(lb, avail);
      total += avail;
      min_avail = std::min(min_avail, avail);
    }
    bool any = false;
    for (std::size_t o = 0; o < status_.size(); ++o)
      if (status_[o] == 0) {
        any = true;
        total += bound_[o];
        max_un = std::max(max_un, bound_[o]);
      }
    if (any) {
      lb = std::max(lb, min_avail + max_un);
      lb = std::max(lb, (total + M_ - 1) / M_);
    }
    return lb;
  }

  void place(int m, int op, int cell, Ticks s, Ticks dur, Ticks curmax, int done) {
    auto& mv = movers_[static_cast<std::size_t>(m)];
    const Mover saved = mv;
    const Ticks saved_cell = cell_end_[static_cast<std::size_t>(cell)];
    const Ticks e = s + dur;
    mv.ready = e;
    mv.pos = cell;
    mv.used = true;
    cell_end_[static_cast<std::size_t>(cell)] = e;
    plan_[static_cast<std::size_t>(op)] = {m, cell, s, e, 0};
    dfs(done, m, s, std::max(curmax, e));
    mv = saved;
    cell_end_[static_cast<std::size_t>(cell)] = saved_cell;
  }

  void dfs(int done, int last_m, Ticks last_s, Ticks curmax) {
    if (aborted_) return;
    if (++nodes_ > limit_) {
      aborted_ = true;
      return;
    }
    if (done == static_cast<int>(orders_.size())) {
      if (curmax < best_) {
        best_ = curmax;
        best_plan_ = plan_;
      }
      return;
    }
    if (node_bound(curmax) >= best_) return;
    auto ok = [&](Ticks s, int m) { return s > last_s || (s == last_s && m > last_m); };
    const auto& I = index_.interfaces();
    for (int m = 0; m < M_; ++m) {
      auto& mv = movers_[static_cast<std::size_t>(m)];
      auto travel = [&](int c) { return mv.pos < 0 ? Ticks{0} : static_cast<Ticks>(index_.dist(mv.pos, c)); };
      if (mv.order < 0) {
        if (!mv.used) {
          bool earlier_unused = false;
          for (int q = 0; q < m; ++q) earlier_unused |= !movers_[static_cast<std::size_t>(q)].used;
          if (earlier_unused) continue;
        }
        for (std::size_t o = 0; o < status_.size(); ++o) {
          if (status_[o] != 0) continue;
          for (int i : I) {
            const Ticks s = std::max(mv.ready + travel(i), cell_end_[static_cast<std::size_t>(i)]);
            if (!ok(s, m)) continue;
            const auto& d = data_[o];
            const Mover saved = mv;
            status_[o] = 1;
            mv.order = static_cast<int>(o);
            mv.pending.assign(d.drugs.size(), 1);
            mv.left = static_cast<int>(d.drugs.size());
            place(m, d.first_op, i, s, eta_, curmax, done);
            mv = saved;
            status_[o] = 0;
            if (aborted_) return;
          }
        }
        continue;
      }
      const auto o = static_cast<std::size_t>(mv.order);
      const auto& d = data_[o];
      if (mv.left == 0) {
        for (int i : I) {
          const Ticks s = std::max(mv.ready + travel(i), cell_end_[static_cast<std::size_t>(i)]);
          if (!ok(s, m)) continue;
          const Mover saved = mv;
          status_[o] = 2;
          mv.order = -1;
          place(m, d.first_op + static_cast<int>(d.drugs.size()) + 1, i, s, eta_, curmax, done + 1);
          mv = saved;
          status_[o] = 1;
          if (aborted_) return;
        }
        continue;
      }
      for (std::size_t g = 0; g < d.drugs.size(); ++g) {
        if (!mv.pending[g]) continue;
        for (int c : index_.cells_of(d.drugs[g])) {
          const Ticks s = std::max(mv.ready + travel(c), cell_end_[static_cast<std::size_t>(c)]);
          if (!ok(s, m)) continue;
          const Mover saved = mv;
          mv.pending[g] = 0;
          --mv.left;
          place(m, d.first_op + 1 + static_cast<int>(g), c, s, d.dur[g], curmax, done);
          mv = saved;
          if (aborted_) return;
        }
      }
    }
  }

  std::span<const Order> orders_;
  const PlacementIndex& index_;
  int M_;
  Ticks eta_;
  long limit_;
  long nodes_ = 0;
  bool aborted_ = false;
  Ticks best_;
  std::vector<OperationSpec> ops_;
  std::vector<OrderData> data_;
  std::vector<Ticks> bound_;
  std::vector<Ticks> cell_end_;
  std::vector<Mover> movers_;
  std::vector<int> status_;
  std::vector<ScheduledOp> plan_;
  std::vector<ScheduledOp> best_plan_;
};

}  // namespace

Schedule decode_sequences(const SequenceSolution& sol, std::span<const Order> orders,
                          const PlacementIndex& index, Ticks eta) {
  Decoder dec(orders, index, eta);
  std::vector<int> seen(orders.size(), 0);
  for (const auto& s : sol.seq)
    for (int o : s) {
      if (o < 0 || static_cast<std::size_t>(o) >= orders.size() || seen[static_cast<std::size_t>(o)]++)
        throw ConfigError("sequence solution is not a partition of the orders");
    }
  for (int c : seen)
    if (c != 1) throw ConfigError("sequence solution is not a partition of the orders");
  Schedule out;
  dec.run(sol, &out);
  return out;
}

std::optional<Schedule> exact_schedule(std::span<const Order> orders, const PlacementIndex& index, int n_movers,
                                       Ticks eta, long node_limit, std::optional<Ticks> incumbent) {
  if (n_movers < 1) throw ConfigError("need at least one mover");
  if (index.interfaces().empty()) throw InfeasibleError("placement has no interface");
  for (const Order& o : orders) {
    check_order(o, index.n_drugs());
    for (const auto& it : o.items)
      if (index.cells_of(it.drug).empty())
        throw InfeasibleError("drug " + std::to_string(it.drug) + " has no placed dispenser");
  }
  const Ticks inc = incumbent ? *incumbent + 1 : kNever;
  ExactSearch ex(orders, index, n_movers, eta, node_limit, inc);
  if (!ex.run()) return std::nullopt;
  if (!ex.found()) return std::nullopt;
  return ex.result();
}

ScheduleResult schedule(std::span<const Order> orders, const PlacementIndex& index, const ScheduleParams& params) {
  if (params.n_movers < 1) throw ConfigError("need at least one mover");
  const auto t0 = Clock::now();
  const auto deadline =
      t0 + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(params.time_limit_s));
  Decoder dec(orders, index, params.eta);
  const std::size_t n = orders.size();

  SequenceSolution init;
  init.seq.resize(static_cast<std::size_t>(params.n_movers));
  init.fixed_route.assign(n, 0);
  Lns lns(dec, n, params);
  if (params.warm_start) {
    const auto& ws = *params.warm_start;
    if (ws.size() != n) throw ConfigError("warm start must give one mover per order");
    for (std::size_t o = 0; o < n; ++o) {
      const int m = ws[o];
      if (m < 0 || m >= params.n_movers) throw ConfigError("warm start names an unknown mover");
      init.seq[static_cast<std::size_t>(m)].push_back(static_cast<int>(o));
    }
  } else {
    // longest orders first, each appended where it finishes the plan earliest
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<Ticks> tp(n);
    for (std::size_t o = 0; o < n; ++o)
      tp[o] = 2 * params.eta + dec.data(o).route.kappa + orders[o].total_duration();
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
      return tp[static_cast<std::size_t>(a)] > tp[static_cast<std::size_t>(b)];
    });
    for (int o : idx) lns.insert(init, o, true);
  }

  ScheduleResult res = lns.run(std::move(init), t0, deadline);
  if (params.exact_small && static_cast<int>(n) <= params.exact_max_orders &&
      params.n_movers <= params.exact_max_movers) {
    const Ticks inc = res.schedule.makespan;
    ExactSearch ex(orders, index, params.n_movers, params.eta, params.exact_node_limit, inc);
    const bool complete = ex.run();
    if (ex.found()) {
      res.schedule = ex.result();
      res.trace.push_back({res.iterations,
                           std::chrono::duration<double>(Clock::now() - t0).count(), res.schedule.makespan});
    }
    res.proven_optimal = complete;
  }
  res.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return res;
}

std::vector<std::vector<int>> partition_batches(std::size_t n_orders, std::size_t batch_size, std::uint64_t seed) {
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  std::vector<int> idx(n_orders);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(derive_seed(seed, stream_tag("batch")));
  for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
  std::vector<std::vector<int>> out;
  for (std::size_t i = 0; i < idx.size(); i += batch_size) {
    out.emplace_back(idx.begin() + static_cast<std::ptrdiff_t>(i),
                     idx.begin() + static_cast<std::ptrdiff_t>(std::min(idx.size(), i + batch_size)));
    std::sort(out.back().begin(), out.back().end());
  }
  return out;
}

}  // namespace planarfab
