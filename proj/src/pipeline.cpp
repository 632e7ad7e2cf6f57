#include "planarfab/pipeline.hpp"

#include <chrono>
#include <cstdlib>
#include <functional>

#include "planarfab/error.hpp"
#include "planarfab/io.hpp"
#include "planarfab/render.hpp"
#include "planarfab/rng.hpp"
#include "planarfab/scheduler.hpp"
#include "planarfab/scheduling.hpp"

namespace planarfab {

namespace fs = std::filesystem;
using nlohmann::json;

std::optional<std::uint64_t> seed_from_env() {
  const char* v = std::getenv("PLANARFAB_SEED");
  if (!v || !*v) return std::nullopt;
  try {
    std::size_t pos = 0;
    const auto s = std::stoull(v, &pos);
    if (v[pos] != '\0') throw std::invalid_argument(v);
    return s;
  } catch (const std::logic_error&) {
    throw ConfigError(std::string("PLANARFAB_SEED is not an unsigned integer: ") + v);
  }
}

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path q(p);
  return q.is_absolute() ? q : base / q;
}

fs::path existing(const fs::path& p) {
  if (!fs::exists(p)) throw ConfigError("missing file: " + p.string());
  return p;
}

OrderSource order_source(const json& j, const fs::path& base) {
  OrderSource s;
  if (j.contains("orders")) {
    s.path = existing(resolve(base, j.at("orders").get<std::string>()));
    return s;
  }
  s.gen.n_orders = j.value("n_orders", 0);
  if (j.contains("size")) {
    s.gen.size.lo = j.at("size").at(0).get<int>();
    s.gen.size.hi = j.at("size").at(1).get<int>();
  }
  s.gen.duration.speed = j.value("speed", Ticks{100});
  s.gen.duration.dose_multiplier = j.value("dose_multiplier", false);
  const auto mode = j.value("mode", std::string("raw"));
  if (mode != "raw" && mode != "tetrachoric") throw ConfigError("order mode must be raw or tetrachoric");
  s.gen.mode = mode == "raw" ? CorrelationMode::Raw : CorrelationMode::Tetrachoric;
  return s;
}

}  // namespace

PipelineConfig pipeline_config_from_json(const json& j, const fs::path& base) {
  PipelineConfig c;
  try {
    if (!j.contains("seed")) throw ConfigError("config needs an explicit \"seed\"");
    c.seed = j.at("seed").get<std::uint64_t>();
    if (auto env = seed_from_env()) c.seed = *env;

    if (!j.contains("catalog")) throw ConfigError("config needs a \"catalog\"");
    const auto& cat = j.at("catalog");
    if (cat.is_string()) c.catalog_path = existing(resolve(base, cat.get<std::string>()));
    else c.demo_drugs = cat.at("demo_drugs").get<int>();

    const json& inst = j.contains("instance") ? j.at("instance") : j;
    if (inst.is_string()) {
      const json f = io::read_json(existing(resolve(base, inst.get<std::string>())));
      c.layout = io::layout_from_json(f);
      c.instance = io::config_from_json(f.value("config", json::object()));
    } else {
      c.layout = io::layout_from_json(inst.contains("layout") ? inst.at("layout") : inst);
      c.instance = io::config_from_json(inst.value("config", json::object()));
    }

    if (j.contains("placement")) c.placement_path = existing(resolve(base, j.at("placement").get<std::string>()));
    if (j.contains("history")) c.history = order_source(j.at("history"), base);
    if (j.contains("workload")) c.workload = order_source(j.at("workload"), base);
    if (!c.history && !c.workload) throw ConfigError("config needs \"history\" or \"workload\" orders");

    const json st = j.value("stages", json::object());
    c.stages.pack = st.value("pack", true);
    c.stages.place = st.value("place", true);
    c.stages.schedule = st.value("schedule", true);
    c.stages.lower_bound = st.value("lower_bound", true);
    c.stages.route = st.value("route", true);

    const json pk = j.value("packing", json::object());
    c.packing.time_limit_s = pk.value("time_limit_s", c.packing.time_limit_s);
    c.packing.restarts = pk.value("restarts", c.packing.restarts);
    c.packing.allow_empty_tiles = pk.value("allow_empty_tiles", c.packing.allow_empty_tiles);

    const json ga = j.value("ga", json::object());
    c.ga.population = ga.value("population", c.ga.population);
    c.ga.max_evaluations = ga.value("max_evaluations", c.ga.max_evaluations);
    c.ga.episodes = ga.value("episodes", c.ga.episodes);
    const auto scorer = ga.value("scorer", std::string("sampled"));
    if (scorer != "sampled" && scorer != "analytical") throw ConfigError("ga.scorer must be sampled or analytical");
    c.ga.scorer = scorer == "sampled" ? Scorer::Sampled : Scorer::Analytical;

    const json sc = j.value("schedule", json::object());
    c.schedule_time_limit_s = sc.value("time_limit_s", c.schedule_time_limit_s);
    c.schedule_max_iterations = sc.value("max_iterations", c.schedule_max_iterations);
    c.batch_size = sc.value("batch_size", 0);

    const json rt = j.value("routing", json::object());
    c.routing.max_iterations = rt.value("max_iterations", c.routing.max_iterations);
    const auto w = rt.value("same_cell", std::string("duration"));
    if (w != "duration" && w != "unit") throw ConfigError("routing.same_cell must be duration or unit");
    c.routing.same_cell = w == "unit" ? SameCellWeight::Unit : SameCellWeight::Duration;
    c.routing.use_resting_sites = rt.value("resting_sites", true);

    c.threads = j.value("threads", 1);
    c.ga.threads = c.threads;
    if (j.contains("output_dir")) c.output_dir = resolve(base, j.at("output_dir").get<std::string>());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("pipeline config: ") + e.what());
  }
  return c;
}

PipelineConfig load_pipeline_config(const fs::path& file) {
  return pipeline_config_from_json(io::read_json(existing(file)), file.parent_path());
}

double overhead_pct(Ticks scheduled, Ticks routed) {
  if (scheduled <= 0) return 0.0;
  return 100.0 * static_cast<double>(routed - scheduled) / static_cast<double>(scheduled);
}

json to_json(const RunReport& r) {
  json j;
  j["seed"] = r.seed;
  j["substreams"] = r.substreams;
  auto put = [&](const char* k, const auto& v) {
    if (v) j[k] = *v;
  };
  put("mu_max", r.mu_max);
  put("packing_exact", r.packing_exact);
  put("placement_score", r.placement_score);
  put("ga_fitness", r.ga_fitness);
  put("lower_bound", r.lower_bound);
  put("lower_bound_exact", r.lower_bound_exact);
  put("makespan_scheduled", r.makespan_scheduled);
  put("schedule_optimal", r.schedule_optimal);
  put("makespan_routed", r.makespan_routed);
  put("overhead_pct", r.overhead_pct);
  put("routing_iterations", r.routing_iterations);
  put("routing_converged", r.routing_converged);
  put("resting_exact", r.resting_exact);
  json wall = json::object();
  for (const auto& w : r.wall) wall[w.stage] = w.seconds;
  j["wall_seconds"] = wall;
  j["artifacts"] = r.artifacts;
  return j;
}

namespace {

class Runner {
 public:
  Runner(const PipelineConfig& cfg, RunReport& rep) : cfg_(cfg), rep_(rep) {}

  // Times a stage and tags any failure with its name.
  void stage(const std::string& name, const std::function<void()>& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      fn();
    } catch (const Error& e) {
      throw Error("[" + name + "] " + e.what(), e.code());
    } catch (const std::exception& e) {
      throw Error("[" + name + "] " + e.what());
    }
    rep_.wall.push_back({name, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()});
  }

  void text(const std::string& file, const std::string& body) {
    if (cfg_.output_dir.empty()) return;
    io::write_text(cfg_.output_dir / file, body);
    rep_.artifacts.push_back(file);
  }
  void doc(const std::string& file, const json& body) { text(file, body.dump(2) + "\n"); }

 private:
  const PipelineConfig& cfg_;
  RunReport& rep_;
};

std::vector<Order> take_orders(const OrderSource& src, const DrugCatalog& catalog, std::uint64_t seed) {
  if (!src.path.empty()) return io::load_orders(src.path, catalog);
  OrderGenParams p = src.gen;
  p.seed = seed;
  return sample_orders(catalog, p).orders;
}

}  // namespace

RunReport run_pipeline(const PipelineConfig& cfg) {
  RunReport rep;
  rep.seed = cfg.seed;
  for (const char* s : {"ordergen", "packing", "ga", "lns", "batch"})
    rep.substreams[s] = derive_seed(cfg.seed, stream_tag(s));
  Runner run(cfg, rep);

  DrugCatalog catalog;
  std::vector<Order> history, workload;
  run.stage("orders", [&] {
    catalog = cfg.catalog_path.empty() ? demo_catalog(cfg.demo_drugs, rep.substreams["ordergen"])
                                       : io::catalog_from_json(io::read_json(cfg.catalog_path));
    if (cfg.history) history = take_orders(*cfg.history, catalog, derive_seed(cfg.seed, stream_tag("ordergen"), 0));
    if (cfg.workload) workload = take_orders(*cfg.workload, catalog, derive_seed(cfg.seed, stream_tag("ordergen"), 1));
    if (history.empty()) history = workload;
    if (workload.empty()) workload = history;
    run.doc("catalog.json", io::to_json(catalog));
    run.text("history.csv", io::orders_to_csv(history, catalog));
    run.text("orders.csv", io::orders_to_csv(workload, catalog));
  });

  std::optional<Placement> placement;
  if (!cfg.placement_path.empty()) {
    run.stage("load-placement", [&] { placement = io::placement_from_json(io::read_json(cfg.placement_path), catalog); });
  } else if (cfg.stages.pack) {
    Packing packing;
    run.stage("pack", [&] {
      auto bad = validate_instance(cfg.layout, catalog, cfg.instance);
      if (!bad.empty()) throw InfeasibleError(bad.front());
      PackingConfig pc = cfg.packing;
      pc.n_tiles = cfg.layout.n_dispensing_tiles();
      pc.n_dispensers = cfg.instance.n_dispensers;
      pc.d_max = cfg.instance.d_max;
      pc.m_max = cfg.instance.m_max;
      pc.seed = rep.substreams["packing"];
      const Packing stage1 = pack_min_load(estimate_demand(history, catalog.size()), pc);
      packing = pack_correlation(stage1, catalog.correlation, pc);
      rep.mu_max = packing.mu_max;
      rep.packing_exact = packing.exact;
      run.doc("packing.json", io::to_json(packing, catalog));
    });
    if (cfg.stages.place) {
      run.stage("place", [&] {
        GaResult ga = ga_place(packing, cfg.layout, history, cfg.ga, rep.substreams["ga"]);
        rep.ga_fitness = ga.best_fitness;
        placement = std::move(ga.placement);
        run.doc("placement.json", io::to_json(*placement, catalog));
        run.text("ga_trace.csv", io::ga_trace_csv(ga.trace));
      });
    }
  }
  if (!placement) return rep;

  const PlacementIndex index(*placement, catalog.size());
  run.stage("score", [&] { rep.placement_score = analytical_cost(index, history, 0).mean; });
  const Ticks eta = cfg.instance.eta_interface;
  const int movers = cfg.instance.n_movers;

  if (cfg.stages.lower_bound) {
    run.stage("lower-bound", [&] {
      const auto lb = lower_bound(workload, index, movers, eta);
      rep.lower_bound = lb.value;
      rep.lower_bound_exact = lb.exact;
      run.doc("lower_bound.json", io::to_json(lb));
    });
  }
  if (!cfg.stages.schedule) return rep;

  Schedule sched;
  run.stage("schedule", [&] {
    ScheduleParams sp;
    sp.n_movers = movers;
    sp.eta = eta;
    sp.time_limit_s = cfg.schedule_time_limit_s;
    sp.max_iterations = cfg.schedule_max_iterations;
    sp.seed = rep.substreams["lns"];
    if (rep.lower_bound) sp.stop_at = *rep.lower_bound;
    if (cfg.batch_size > 0 && static_cast<std::size_t>(cfg.batch_size) < workload.size()) {
      const auto groups = partition_batches(workload.size(), static_cast<std::size_t>(cfg.batch_size), rep.substreams["batch"]);
      std::vector<Schedule> parts;
      ScheduleParams bp = sp;
      bp.time_limit_s = sp.time_limit_s / static_cast<double>(groups.size());
      bp.stop_at = 0;
      bool optimal = true;
      for (const auto& g : groups) {
        std::vector<Order> batch;
        for (int i : g) batch.push_back(workload[static_cast<std::size_t>(i)]);
        auto r = schedule(batch, index, bp);
        optimal = optimal && r.proven_optimal && groups.size() == 1;
        parts.push_back(std::move(r.schedule));
      }
      sched = merge_batches(parts, index, cfg.routing.same_cell);
      rep.schedule_optimal = optimal;
    } else {
      auto r = schedule(workload, index, sp);
      sched = std::move(r.schedule);
      rep.schedule_optimal = r.proven_optimal;
      run.text("incumbents.csv", io::incumbent_trace_csv(r.trace));
    }
    rep.makespan_scheduled = sched.makespan;
    run.doc("schedule.json", io::to_json(sched, *placement, catalog));
    run.text("schedule.csv", io::schedule_to_csv(sched, *placement, catalog));
  });

  if (cfg.stages.route) {
    run.stage("route", [&] {
      const auto sites = generate_resting_sites(*placement);
      rep.resting_exact = sites.exact;
      const RoutedPlan plan = resolve_conflicts(sched, index, sites.sites, cfg.routing);
      rep.makespan_routed = plan.makespan;
      rep.overhead_pct = overhead_pct(sched.makespan, plan.makespan);
      rep.routing_iterations = plan.iterations;
      rep.routing_converged = plan.converged;
      run.doc("routed.json", io::to_json(plan, *placement, catalog));
      run.text("paths.csv", io::paths_to_csv(plan.paths, plan.sites, *placement));
      run.text("convergence.csv", io::convergence_csv(plan));
      GanttOptions go;
      go.drug_names = catalog.drugs;
      run.text("gantt.svg", render_gantt(plan, go));
      LayoutOptions lo;
      lo.drug_names = catalog.drugs;
      lo.sites = plan.sites;
      lo.heat = interface_heat(plan.schedule, index.n_cells());
      run.text("layout.svg", render_layout(*placement, lo));
      if (!plan.converged)
        throw Error("routing did not converge within " + std::to_string(cfg.routing.max_iterations) + " iterations; " +
                        std::to_string(plan.residual_conflicts) + " ops still conflicted",
                    ExitCode::Infeasible);
    });
  }
  if (!cfg.output_dir.empty()) {
    rep.artifacts.push_back("report.json");
    io::write_json(cfg.output_dir / "report.json", to_json(rep));
  }
  return rep;
}

}  // namespace planarfab
