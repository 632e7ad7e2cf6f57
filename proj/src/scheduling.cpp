#include "planarfab/scheduling.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <tuple>

#include "planarfab/error.hpp"

namespace planarfab {

std::string_view op_kind_name(OpKind k) noexcept {
  switch (k) {
    case OpKind::Start: return "start";
    case OpKind::Dispense: return "dispense";
    case OpKind::Finish: return "finish";
  }
  return "dispense";
}

std::vector<OperationSpec> build_operations(std::span<const Order> orders, Ticks eta) {
  if (eta < 1) throw ConfigError("interface duration must be >= 1");
  std::vector<OperationSpec> ops;
  for (const Order& o : orders) {
    ops.push_back({static_cast<int>(ops.size()), o.id, -1, eta, OpKind::Start});
    std::vector<OrderItem> items = o.items;
    std::sort(items.begin(), items.end(), [](auto& a, auto& b) { return a.drug < b.drug; });
    for (const auto& it : items)
      ops.push_back({static_cast<int>(ops.size()), o.id, it.drug, it.duration, OpKind::Dispense});
    ops.push_back({static_cast<int>(ops.size()), o.id, -1, eta, OpKind::Finish});
  }
  return ops;
}

std::vector<std::vector<int>> mover_sequences(const Schedule& s) {
  std::vector<std::vector<int>> seq(static_cast<std::size_t>(std::max(s.n_movers, 0)));
  for (std::size_t i = 0; i < s.plan.size(); ++i) {
    const int m = s.plan[i].mover;
    if (m >= 0 && m < s.n_movers) seq[static_cast<std::size_t>(m)].push_back(static_cast<int>(i));
  }
  for (auto& v : seq)
    std::stable_sort(v.begin(), v.end(), [&](int a, int b) {
      const auto& x = s.plan[static_cast<std::size_t>(a)];
      const auto& y = s.plan[static_cast<std::size_t>(b)];
      return std::tie(x.start, x.end) < std::tie(y.start, y.end);
    });
  return seq;
}

Ticks compute_makespan(const Schedule& s) {
  Ticks m = 0;
  for (const auto& p : s.plan) m = std::max(m, p.end);
  return m;
}

std::vector<Violation> validate_schedule(const Schedule& s, std::span<const Order> orders,
                                         const PlacementIndex& index, Ticks eta) {
  std::vector<Violation> v;
  auto add = [&](int rule, std::string msg) { v.push_back({rule, std::move(msg)}); };
  if (s.plan.size() != s.ops.size()) {
    add(1, "plan and op list differ in length");
    return v;
  }

  // (1) op multiset equals the orders' operations
  using Key = std::tuple<int, int, int, Ticks>;
  std::map<Key, int> want;
  for (const auto& op : build_operations(orders, eta))
    ++want[{op.order_id, static_cast<int>(op.kind), op.drug, op.duration}];
  for (const auto& op : s.ops) --want[{op.order_id, static_cast<int>(op.kind), op.drug, op.duration}];
  for (const auto& [k, c] : want)
    if (c != 0)
      add(1, "order " + std::to_string(std::get<0>(k)) + ": op " +
                 std::string(op_kind_name(static_cast<OpKind>(std::get<1>(k)))) +
                 (c > 0 ? " missing" : " duplicated or unknown"));

  for (std::size_t i = 0; i < s.plan.size(); ++i) {
    const auto& op = s.ops[i];
    const auto& p = s.plan[i];
    const std::string tag = "op " + std::to_string(op.id);
    if (p.mover < 0 || p.mover >= s.n_movers) add(1, tag + " uses an unknown mover");
    if (p.cell < 0 || p.cell >= index.n_cells()) {
      add(1, tag + " uses an unknown cell");
      continue;
    }
    if (op.kind == OpKind::Dispense) {
      if (index.is_interface(p.cell) || !index.hosts(p.cell, op.drug))
        add(1, tag + " dispenses on a cell without that drug");
    } else if (!index.is_interface(p.cell)) {
      add(5, tag + " is an interface op on a dispensing tile");
    }
    if (p.end != p.start + op.duration + p.interruption) add(6, tag + " has end != start + duration");
    if (p.interruption < 0) add(6, tag + " has a negative interruption");
    if (p.start < 0) add(8, tag + " starts before tick 0");
  }

  // (2) + (3) per mover
  const auto seq = mover_sequences(s);
  std::map<int, int> order_mover;
  for (std::size_t m = 0; m < seq.size(); ++m) {
    const auto& q = seq[m];
    for (std::size_t k = 0; k + 1 < q.size(); ++k) {
      const auto& a = s.plan[static_cast<std::size_t>(q[k])];
      const auto& b = s.plan[static_cast<std::size_t>(q[k + 1])];
      if (a.cell < 0 || b.cell < 0 || a.cell >= index.n_cells() || b.cell >= index.n_cells()) continue;
      if (b.start < a.end + index.dist(a.cell, b.cell))
        add(2, "mover " + std::to_string(m) + ": op " + std::to_string(s.ops[static_cast<std::size_t>(q[k + 1])].id) +
                   " starts before travel from op " + std::to_string(s.ops[static_cast<std::size_t>(q[k])].id) +
                   " completes");
    }
    // contiguous blocks per order, start first and finish last
    std::size_t k = 0;
    std::map<int, int> blocks;
    while (k < q.size()) {
      const int oid = s.ops[static_cast<std::size_t>(q[k])].order_id;
      std::size_t e = k;
      while (e < q.size() && s.ops[static_cast<std::size_t>(q[e])].order_id == oid) ++e;
      if (++blocks[oid] > 1) add(3, "order " + std::to_string(oid) + " interleaved with another order");
      if (s.ops[static_cast<std::size_t>(q[k])].kind != OpKind::Start)
        add(3, "order " + std::to_string(oid) + " does not begin with its start op");
      if (s.ops[static_cast<std::size_t>(q[e - 1])].kind != OpKind::Finish)
        add(3, "order " + std::to_string(oid) + " does not end with its finish op");
      auto [it, fresh] = order_mover.emplace(oid, static_cast<int>(m));
      if (!fresh && it->second != static_cast<int>(m)) add(3, "order " + std::to_string(oid) + " split across movers");
      k = e;
    }
  }

  // (4) per cell
  std::map<int, std::vector<std::pair<Ticks, Ticks>>> by_cell;
  for (const auto& p : s.plan) by_cell[p.cell].emplace_back(p.start, p.end);
  for (auto& [cell, iv] : by_cell) {
    std::sort(iv.begin(), iv.end());
    for (std::size_t k = 0; k + 1 < iv.size(); ++k)
      if (iv[k + 1].first < iv[k].second)
        add(4, "cell " + std::to_string(cell) + " hosts overlapping ops at tick " + std::to_string(iv[k + 1].first));
  }

  if (s.makespan != compute_makespan(s)) add(7, "makespan differs from the latest end");
  return v;
}

LowerBoundResult lower_bound(std::span<const Order> orders, const PlacementIndex& index, int n_movers,
                             Ticks eta, const KappaOptions& opt) {
  if (n_movers < 1) throw ConfigError("need at least one mover");
  LowerBoundResult r;
  for (const Order& o : orders) {
    const Ticks k = kappa(o, index, opt).kappa;
    r.kappa.push_back(k);
    r.order_bound.push_back(2 * eta + k + o.total_duration());
  }
  if (orders.empty()) {
    r.exact = true;
    return r;
  }
  if (static_cast<int>(orders.size()) <= kPcmaxExactMax) {
    const auto pc = p_cmax(r.order_bound, n_movers, PcmaxMode::Exact);
    r.value = pc.value;
    r.machine = pc.machine;
    r.exact = true;
  } else {
    r.value = p_cmax(r.order_bound, n_movers, PcmaxMode::Bound).value;
    r.machine = p_cmax(r.order_bound, n_movers, PcmaxMode::Lpt).machine;
  }
  return r;
}

}  // namespace planarfab
