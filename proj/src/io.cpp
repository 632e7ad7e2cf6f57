#include "planarfab/io.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "planarfab/error.hpp"

namespace planarfab::io {

namespace fs = std::filesystem;

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + p.string());
  out << text;
}

json read_json(const fs::path& p) {
  try {
    return json::parse(read_text(p));
  } catch (const json::parse_error& e) {
    throw ConfigError(p.string() + ": " + e.what());
  }
}

void write_json(const fs::path& p, const json& j) { write_text(p, j.dump(2) + "\n"); }

namespace {

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

json coord_json(Coord c) { return json::array({c.x, c.y}); }

Coord coord_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw ConfigError("coordinate must be [x, y]");
  return {j[0].get<int>(), j[1].get<int>()};
}

int cell_at(const Placement& p, Coord c) {
  auto i = p.layout.index_of(c);
  if (!i) throw ConfigError("coordinate (" + std::to_string(c.x) + "," + std::to_string(c.y) + ") is not a layout tile");
  return *i;
}

DrugId drug_id(const DrugCatalog& c, const std::string& name) {
  auto g = c.find(name);
  if (!g) throw ConfigError("unknown drug '" + name + "'");
  return *g;
}

json drug_names(const std::vector<DrugId>& v, const DrugCatalog& c) {
  json a = json::array();
  for (DrugId g : v) a.push_back(c.drugs.at(static_cast<std::size_t>(g)));
  return a;
}

std::vector<DrugId> drug_ids(const json& a, const DrugCatalog& c) {
  std::vector<DrugId> v;
  for (const auto& n : a) v.push_back(drug_id(c, n.get<std::string>()));
  std::sort(v.begin(), v.end());
  return v;
}

// Minimal CSV: no quoting; fields never contain commas.
struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t col(const std::string& name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ConfigError("CSV lacks column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  }
};

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

Csv parse_csv(const std::string& text) {
  Csv csv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    auto f = split(line);
    if (csv.header.empty()) {
      csv.header = std::move(f);
      continue;
    }
    if (f.size() != csv.header.size()) throw ConfigError("CSV row has " + std::to_string(f.size()) + " fields: " + line);
    csv.rows.push_back(std::move(f));
  }
  return csv;
}

long long to_int(const std::string& s) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos != s.size()) throw ConfigError("not an integer: '" + s + "'");
    return v;
  } catch (const std::logic_error&) {
    throw ConfigError("not an integer: '" + s + "'");
  }
}

std::string num(double v) {
  std::ostringstream ss;
  ss << v;
  return ss.str();
}

void check_names(const DrugCatalog& c) {
  for (const auto& n : c.drugs)
    if (n.find(',') != std::string::npos) throw ConfigError("drug name '" + n + "' contains a comma");
}

OpKind parse_kind(const std::string& s) {
  if (s == "start") return OpKind::Start;
  if (s == "dispense") return OpKind::Dispense;
  if (s == "finish") return OpKind::Finish;
  throw ConfigError("unknown operation kind '" + s + "'");
}

}  // namespace

json to_json(const Layout& l) {
  json t = json::array();
  for (Coord c : l.tiles) t.push_back(coord_json(c));
  return {{"topology", std::string(topology_name(l.topology))}, {"tiles", t}, {"n_inter", l.n_inter}};
}

Layout layout_from_json(const json& j) {
  const Topology topo = parse_topology(get_or<std::string>(j, "topology", "explicit"));
  const int n_inter = get_or(j, "n_inter", 0);
  if (j.contains("tiles")) {
    std::vector<Coord> tiles;
    for (const auto& c : j.at("tiles")) tiles.push_back(coord_from(c));
    Layout l = explicit_layout(std::move(tiles), n_inter);
    l.topology = topo;
    return l;
  }
  if (!j.contains("size")) throw ConfigError("layout needs either \"tiles\" or \"size\"");
  const auto& s = j.at("size");
  LayoutSize sz;
  if (s.is_array()) {
    sz.a = s.at(0).get<int>();
    if (s.size() > 1) sz.b = s.at(1).get<int>();
  } else {
    sz.a = s.get<int>();
  }
  return build_layout(topo, sz, n_inter);
}

json to_json(const DrugCatalog& c) {
  return {{"drugs", c.drugs}, {"marginals", c.marginal}, {"correlation", c.correlation}};
}

DrugCatalog catalog_from_json(const json& j) {
  DrugCatalog c;
  try {
    c.drugs = j.at("drugs").get<std::vector<std::string>>();
    c.marginal = j.at("marginals").get<std::vector<double>>();
    if (j.contains("correlation")) {
      c.correlation = j.at("correlation").get<std::vector<std::vector<double>>>();
    } else {
      c.correlation.assign(c.drugs.size(), std::vector<double>(c.drugs.size(), 0.0));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("catalog: ") + e.what());
  }
  check_catalog(c);
  return c;
}

json to_json(const InstanceConfig& c) {
  return {{"n_dispensers", c.n_dispensers}, {"d_max", c.d_max},
          {"m_max", c.m_max},               {"n_movers", c.n_movers},
          {"eta_interface", c.eta_interface}, {"dispensing_speed", c.dispensing_speed},
          {"seed", c.seed}};
}

InstanceConfig config_from_json(const json& j) {
  InstanceConfig c;
  c.n_dispensers = get_or(j, "n_dispensers", c.n_dispensers);
  c.d_max = get_or(j, "d_max", c.d_max);
  c.m_max = get_or(j, "m_max", c.m_max);
  c.n_movers = get_or(j, "n_movers", c.n_movers);
  c.eta_interface = get_or(j, "eta_interface", c.eta_interface);
  c.dispensing_speed = get_or(j, "dispensing_speed", c.dispensing_speed);
  c.seed = get_or(j, "seed", c.seed);
  return c;
}

json to_json(const Instance& inst) {
  json j = to_json(inst.layout);
  j.update(to_json(inst.catalog));
  j["config"] = to_json(inst.config);
  return j;
}

Instance instance_from_json(const json& j) {
  Instance inst;
  inst.layout = layout_from_json(j);
  inst.catalog = catalog_from_json(j);
  inst.config = config_from_json(j.value("config", json::object()));
  return inst;
}

json orders_to_json(const std::vector<Order>& orders, const DrugCatalog& c) {
  json a = json::array();
  for (const Order& o : orders) {
    json items = json::array();
    for (const auto& it : o.items)
      items.push_back({{"drug", c.drugs.at(static_cast<std::size_t>(it.drug))}, {"duration", it.duration}});
    a.push_back({{"id", o.id}, {"items", items}});
  }
  return {{"orders", a}};
}

std::vector<Order> orders_from_json(const json& j, const DrugCatalog& c) {
  std::vector<Order> out;
  for (const auto& o : j.at("orders")) {
    Order ord;
    ord.id = o.at("id").get<int>();
    for (const auto& it : o.at("items"))
      ord.items.push_back({drug_id(c, it.at("drug").get<std::string>()), it.at("duration").get<Ticks>()});
    std::sort(ord.items.begin(), ord.items.end(), [](auto& a, auto& b) { return a.drug < b.drug; });
    check_order(ord, c.size());
    out.push_back(std::move(ord));
  }
  return out;
}

std::string orders_to_csv(const std::vector<Order>& orders, const DrugCatalog& c) {
  check_names(c);
  std::ostringstream ss;
  ss << "order_id,drug,duration_ticks\n";
  for (const Order& o : orders)
    for (const auto& it : o.items) ss << o.id << ',' << c.drugs.at(static_cast<std::size_t>(it.drug)) << ',' << it.duration << '\n';
  return ss.str();
}

std::vector<Order> orders_from_csv(const std::string& text, const DrugCatalog& c) {
  const Csv csv = parse_csv(text);
  const auto ci = csv.col("order_id"), cd = csv.col("drug"), ct = csv.col("duration_ticks");
  std::vector<Order> out;
  std::map<int, std::size_t> slot;
  for (const auto& r : csv.rows) {
    const int id = static_cast<int>(to_int(r[ci]));
    auto [it, fresh] = slot.try_emplace(id, out.size());
    if (fresh) out.push_back(Order{id, {}});
    out[it->second].items.push_back({drug_id(c, r[cd]), to_int(r[ct])});
  }
  for (Order& o : out) {
    std::sort(o.items.begin(), o.items.end(), [](auto& a, auto& b) { return a.drug < b.drug; });
    check_order(o, c.size());
  }
  return out;
}

std::vector<Order> load_orders(const fs::path& p, const DrugCatalog& c) {
  if (p.extension() == ".csv") return orders_from_csv(read_text(p), c);
  return orders_from_json(read_json(p), c);
}

json to_json(const Packing& p, const DrugCatalog& c) {
  json tiles = json::array();
  for (const auto& t : p.tiles) tiles.push_back(drug_names(t, c));
  return {{"tiles", tiles},         {"z", p.z},
          {"pi", p.pi},             {"mu", p.mu},
          {"mu_max", p.mu_max},     {"demand", p.demand},
          {"lower_bound", p.lower_bound}, {"exact", p.exact}};
}

Packing packing_from_json(const json& j, const DrugCatalog& c) {
  Packing p;
  for (const auto& t : j.at("tiles")) p.tiles.push_back(drug_ids(t, c));
  p.z = j.at("z").get<std::vector<int>>();
  p.pi = j.at("pi").get<std::vector<double>>();
  p.mu = j.at("mu").get<std::vector<double>>();
  p.mu_max = j.at("mu_max").get<double>();
  p.demand = get_or(j, "demand", DemandVector{});
  p.lower_bound = get_or(j, "lower_bound", 0.0);
  p.exact = get_or(j, "exact", false);
  return p;
}

json to_json(const Placement& p, const DrugCatalog& c) {
  json j = to_json(p.layout);
  json cells = json::array();
  for (const auto& cell : p.cells)
    cells.push_back({{"coord", coord_json(cell.coord)},
                     {"kind", cell.kind == CellKind::Interface ? "interface" : "tile"},
                     {"drugs", drug_names(cell.drugs, c)}});
  j["cells"] = cells;
  return j;
}

Placement placement_from_json(const json& j, const DrugCatalog& c) {
  if (!j.contains("cells")) throw ConfigError("placement JSON lacks \"cells\"");
  Placement p;
  const auto& cells = j.at("cells");
  if (j.contains("tiles")) {
    p.layout = layout_from_json(j);
  } else {
    std::vector<Coord> tiles;
    int n_inter = 0;
    for (const auto& cell : cells) {
      tiles.push_back(coord_from(cell.at("coord")));
      n_inter += cell.at("kind").get<std::string>() == "interface";
    }
    p.layout = explicit_layout(std::move(tiles), n_inter);
  }
  p.cells.resize(p.layout.tiles.size());
  std::vector<char> seen(p.cells.size(), 0);
  for (const auto& cell : cells) {
    PlacedCell pc;
    pc.coord = coord_from(cell.at("coord"));
    const auto kind = cell.at("kind").get<std::string>();
    if (kind != "interface" && kind != "tile") throw ConfigError("cell kind must be \"tile\" or \"interface\"");
    pc.kind = kind == "interface" ? CellKind::Interface : CellKind::Tile;
    pc.drugs = drug_ids(cell.value("drugs", json::array()), c);
    const int i = cell_at(p, pc.coord);
    if (seen[static_cast<std::size_t>(i)]++) throw ConfigError("duplicate placement cell");
    p.cells[static_cast<std::size_t>(i)] = std::move(pc);
  }
  if (std::count(seen.begin(), seen.end(), 0) > 0) throw ConfigError("placement leaves layout tiles unassigned");
  auto bad = check_placement(p);
  if (!bad.empty()) throw ConfigError("placement: " + bad.front());
  return p;
}

std::string ga_trace_csv(const std::vector<GaTracePoint>& trace) {
  std::ostringstream ss;
  ss << "generation,evaluations,best_fitness,mean_fitness\n";
  for (const auto& t : trace) ss << t.generation << ',' << t.evaluations << ',' << num(t.best_fitness) << ',' << num(t.mean_fitness) << '\n';
  return ss.str();
}

json to_json(const Schedule& s, const Placement& p, const DrugCatalog& c) {
  json ops = json::array();
  for (std::size_t i = 0; i < s.ops.size(); ++i) {
    const auto& o = s.ops[i];
    const auto& q = s.plan[i];
    ops.push_back({{"id", o.id},
                   {"order", o.order_id},
                   {"kind", std::string(op_kind_name(o.kind))},
                   {"drug", o.drug < 0 ? json(nullptr) : json(c.drugs.at(static_cast<std::size_t>(o.drug)))},
                   {"duration", o.duration},
                   {"mover", q.mover},
                   {"tile", coord_json(p.cells.at(static_cast<std::size_t>(q.cell)).coord)},
                   {"start", q.start},
                   {"end", q.end},
                   {"interruption", q.interruption}});
  }
  return {{"n_movers", s.n_movers}, {"makespan", s.makespan}, {"ops", ops}};
}

Schedule schedule_from_json(const json& j, const Placement& p, const DrugCatalog& c) {
  Schedule s;
  s.n_movers = j.at("n_movers").get<int>();
  for (const auto& o : j.at("ops")) {
    OperationSpec op;
    op.id = o.at("id").get<int>();
    op.order_id = o.at("order").get<int>();
    op.kind = parse_kind(o.at("kind").get<std::string>());
    op.drug = o.at("drug").is_null() ? -1 : drug_id(c, o.at("drug").get<std::string>());
    op.duration = o.at("duration").get<Ticks>();
    ScheduledOp q;
    q.mover = o.at("mover").get<int>();
    q.cell = cell_at(p, coord_from(o.at("tile")));
    q.start = o.at("start").get<Ticks>();
    q.end = o.at("end").get<Ticks>();
    q.interruption = get_or<Ticks>(o, "interruption", 0);
    s.ops.push_back(op);
    s.plan.push_back(q);
  }
  s.makespan = get_or(j, "makespan", compute_makespan(s));
  return s;
}

std::string schedule_to_csv(const Schedule& s, const Placement& p, const DrugCatalog& c) {
  check_names(c);
  std::ostringstream ss;
  ss << "op_id,order,kind,drug,mover,tile_x,tile_y,start,end,duration,interruption\n";
  for (std::size_t i = 0; i < s.ops.size(); ++i) {
    const auto& o = s.ops[i];
    const auto& q = s.plan[i];
    const Coord xy = p.cells.at(static_cast<std::size_t>(q.cell)).coord;
    ss << o.id << ',' << o.order_id << ',' << op_kind_name(o.kind) << ','
       << (o.drug < 0 ? std::string() : c.drugs.at(static_cast<std::size_t>(o.drug))) << ',' << q.mover << ','
       << xy.x << ',' << xy.y << ',' << q.start << ',' << q.end << ',' << o.duration << ',' << q.interruption << '\n';
  }
  return ss.str();
}

Schedule schedule_from_csv(const std::string& text, const Placement& p, const DrugCatalog& c, int n_movers) {
  const Csv csv = parse_csv(text);
  const auto c_id = csv.col("op_id"), c_ord = csv.col("order"), c_kind = csv.col("kind"), c_drug = csv.col("drug"),
             c_mov = csv.col("mover"), c_x = csv.col("tile_x"), c_y = csv.col("tile_y"), c_s = csv.col("start"),
             c_e = csv.col("end"), c_d = csv.col("duration"), c_l = csv.col("interruption");
  Schedule s;
  s.n_movers = n_movers;
  for (const auto& r : csv.rows) {
    OperationSpec op;
    op.id = static_cast<int>(to_int(r[c_id]));
    op.order_id = static_cast<int>(to_int(r[c_ord]));
    op.kind = parse_kind(r[c_kind]);
    op.drug = r[c_drug].empty() ? -1 : drug_id(c, r[c_drug]);
    op.duration = to_int(r[c_d]);
    ScheduledOp q;
    q.mover = static_cast<int>(to_int(r[c_mov]));
    q.cell = cell_at(p, {static_cast<int>(to_int(r[c_x])), static_cast<int>(to_int(r[c_y]))});
    q.start = to_int(r[c_s]);
    q.end = to_int(r[c_e]);
    q.interruption = to_int(r[c_l]);
    s.ops.push_back(op);
    s.plan.push_back(q);
  }
  s.makespan = compute_makespan(s);
  return s;
}

std::string incumbent_trace_csv(const std::vector<IncumbentPoint>& trace) {
  std::ostringstream ss;
  ss << "iteration,seconds,makespan\n";
  for (const auto& t : trace) ss << t.iteration << ',' << num(t.seconds) << ',' << t.makespan << '\n';
  return ss.str();
}

json to_json(const LowerBoundResult& lb) {
  return {{"value", lb.value},          {"exact", lb.exact},   {"order_bound", lb.order_bound},
          {"kappa", lb.kappa},          {"machine", lb.machine}};
}

json to_json(const RoutedPlan& r, const Placement& p, const DrugCatalog& c) {
  json sites = json::array();
  for (const auto& s : r.sites)
    sites.push_back({{"tiles", json::array({coord_json(p.cells.at(static_cast<std::size_t>(s.cell_a)).coord),
                                            coord_json(p.cells.at(static_cast<std::size_t>(s.cell_b)).coord)})},
                     {"location", json::array({s.x, s.y})}});
  json transits = json::array();
  for (std::size_t i = 0; i < r.transits.size(); ++i) {
    const auto& t = r.transits[i];
    transits.push_back({{"mover", t.mover},   {"from_op", t.from_op}, {"to_op", t.to_op},
                        {"depart", t.depart}, {"arrive", t.arrive},   {"gap", t.gap},
                        {"travel", t.travel}, {"idle", t.idle},
                        {"site", i < r.resting.site_of.size() ? r.resting.site_of[i] : -1}});
  }
  const double overhead =
      r.makespan_before > 0 ? 100.0 * static_cast<double>(r.makespan - r.makespan_before) / static_cast<double>(r.makespan_before) : 0.0;
  return {{"schedule", to_json(r.schedule, p, c)},
          {"makespan_before", r.makespan_before},
          {"makespan", r.makespan},
          {"overhead_pct", overhead},
          {"iterations", r.iterations},
          {"converged", r.converged},
          {"residual_conflicts", r.residual_conflicts},
          {"makespan_history", r.makespan_history},
          {"sites", sites},
          {"transits", transits},
          {"resting", {{"cost", r.resting.cost}, {"unassigned", r.resting.unassigned}, {"exact", r.resting.exact}}}};
}

RoutedPlan routed_plan_from_json(const json& j, const PlacementIndex& index, const DrugCatalog& c) {
  const Placement& p = index.placement();
  RoutedPlan r;
  r.schedule = schedule_from_json(j.at("schedule"), p, c);
  r.makespan_before = j.at("makespan_before").get<Ticks>();
  r.makespan = j.at("makespan").get<Ticks>();
  r.iterations = j.at("iterations").get<int>();
  r.converged = j.at("converged").get<bool>();
  r.residual_conflicts = j.at("residual_conflicts").get<int>();
  r.makespan_history = j.at("makespan_history").get<std::vector<Ticks>>();
  for (const auto& s : j.at("sites")) {
    RestingSite rs;
    int a = cell_at(p, coord_from(s.at("tiles").at(0)));
    int b = cell_at(p, coord_from(s.at("tiles").at(1)));
    rs.cell_a = std::min(a, b);
    rs.cell_b = std::max(a, b);
    rs.x = s.at("location").at(0).get<double>();
    rs.y = s.at("location").at(1).get<double>();
    r.sites.push_back(rs);
  }
  for (const auto& t : j.at("transits")) {
    Transit tr;
    tr.mover = t.at("mover").get<int>();
    tr.from_op = t.at("from_op").get<int>();
    tr.to_op = t.at("to_op").get<int>();
    tr.from_cell = r.schedule.plan.at(static_cast<std::size_t>(tr.from_op)).cell;
    tr.to_cell = r.schedule.plan.at(static_cast<std::size_t>(tr.to_op)).cell;
    tr.depart = t.at("depart").get<Ticks>();
    tr.arrive = t.at("arrive").get<Ticks>();
    tr.gap = t.at("gap").get<Ticks>();
    tr.travel = t.at("travel").get<Ticks>();
    tr.idle = t.at("idle").get<Ticks>();
    r.transits.push_back(tr);
    r.resting.site_of.push_back(t.at("site").get<int>());
  }
  const auto& rest = j.at("resting");
  r.resting.cost = rest.at("cost").get<Ticks>();
  r.resting.unassigned = rest.at("unassigned").get<int>();
  r.resting.exact = rest.at("exact").get<bool>();
  r.paths = build_paths(r.schedule, index, r.transits, r.resting, r.sites);
  return r;
}

std::string paths_to_csv(const MoverPaths& paths, const std::vector<RestingSite>& sites, const Placement& p) {
  std::ostringstream ss;
  ss << "tick,mover,x,y,state\n";
  static const char* names[] = {"move", "dispense", "swap", "rest"};
  auto xy = [&](int cell) { return p.cells.at(static_cast<std::size_t>(cell)).coord; };
  for (Ticks t = 0; t < paths.horizon; ++t)
    for (std::size_t m = 0; m < paths.pos.size(); ++m) {
      const TickPos& q = paths.pos[m][static_cast<std::size_t>(t)];
      double x = 0, y = 0;
      switch (q.kind) {
        case PosKind::Parked: continue;
        case PosKind::Tile: x = xy(q.cell).x; y = xy(q.cell).y; break;
        case PosKind::Edge:
          x = 0.5 * (xy(q.cell).x + xy(q.other).x);
          y = 0.5 * (xy(q.cell).y + xy(q.other).y);
          break;
        case PosKind::Site:
          x = sites.at(static_cast<std::size_t>(q.other)).x;
          y = sites.at(static_cast<std::size_t>(q.other)).y;
          break;
      }
      ss << t << ',' << m << ',' << num(x) << ',' << num(y) << ',' << names[static_cast<int>(q.state)] << '\n';
    }
  return ss.str();
}

std::string convergence_csv(const RoutedPlan& r) {
  std::ostringstream ss;
  ss << "iteration,makespan\n";
  for (std::size_t i = 0; i < r.makespan_history.size(); ++i) ss << i + 1 << ',' << r.makespan_history[i] << '\n';
  return ss.str();
}

}  // namespace planarfab::io
