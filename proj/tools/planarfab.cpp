#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "planarfab/error.hpp"
#include "planarfab/io.hpp"
#include "planarfab/pipeline.hpp"
#include "planarfab/render.hpp"
#include "planarfab/routing.hpp"
#include "planarfab/scheduler.hpp"
#include "planarfab/shppn.hpp"

namespace fs = std::filesystem;
using namespace planarfab;
using nlohmann::json;

namespace {

struct Common {
  std::string instance;
  std::optional<std::uint64_t> seed;
};

std::uint64_t pick_seed(const Common& c, std::uint64_t config_seed) {
  if (c.seed) return *c.seed;
  if (auto e = seed_from_env()) return *e;
  return config_seed;
}

void write_orders(const fs::path& p, const std::vector<Order>& orders, const DrugCatalog& c) {
  if (p.extension() == ".csv") io::write_text(p, io::orders_to_csv(orders, c));
  else io::write_json(p, io::orders_to_json(orders, c));
}

void write_schedule(const fs::path& p, const Schedule& s, const Placement& pl, const DrugCatalog& c) {
  if (p.extension() == ".csv") io::write_text(p, io::schedule_to_csv(s, pl, c));
  else io::write_json(p, io::to_json(s, pl, c));
}

Schedule read_schedule(const fs::path& p, const Placement& pl, const DrugCatalog& c, int n_movers) {
  if (p.extension() == ".csv") return io::schedule_from_csv(io::read_text(p), pl, c, n_movers);
  const json j = io::read_json(p);
  return io::schedule_from_json(j.contains("schedule") ? j.at("schedule") : j, pl, c);
}

SameCellWeight parse_weight(const std::string& s) {
  if (s == "unit") return SameCellWeight::Unit;
  if (s == "duration") return SameCellWeight::Duration;
  throw ConfigError("--same-cell must be duration or unit");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"planarfab: packing, placement, scheduling and routing for planar mover grids"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand
  Common common;
  app.add_option("--seed", common.seed, "Master seed (overrides PLANARFAB_SEED and config)");
  int threads = 1;
  app.add_option("--threads", threads, "Worker threads for placement evaluation")->check(CLI::PositiveNumber);

  // gen-orders
  auto* gen = app.add_subcommand("gen-orders", "Sample synthetic orders from a catalog");
  std::string gen_catalog, gen_out;
  int gen_n = 100, gen_lo = 1, gen_hi = 1 << 30, gen_demo = 0;
  Ticks gen_speed = 100;
  std::string gen_mode = "raw";
  bool gen_dose = false;
  gen->add_option("--instance", common.instance, "Instance JSON (layout, catalog, config)");
  gen->add_option("--catalog", gen_catalog, "Catalog JSON (alternative to --instance)");
  gen->add_option("--demo-drugs", gen_demo, "Use a synthetic catalog with this many drugs");
  gen->add_option("-n,--n-orders", gen_n, "Number of orders")->check(CLI::NonNegativeNumber);
  gen->add_option("--size-lo", gen_lo, "Minimum distinct drugs per order");
  gen->add_option("--size-hi", gen_hi, "Maximum distinct drugs per order");
  gen->add_option("--speed", gen_speed, "Dispensing ticks per unit dose");
  gen->add_flag("--dose-multiplier", gen_dose, "Scale durations by a random dose in [1,3]");
  gen->add_option("--mode", gen_mode, "raw | tetrachoric")->check(CLI::IsMember({"raw", "tetrachoric"}));
  gen->add_option("--orders-out", gen_out, "Output file (.csv or .json)")->required();

  // pack
  auto* pack = app.add_subcommand("pack", "Group dispensers onto tiles");
  std::string pack_orders, pack_out;
  double pack_limit = 10.0;
  pack->add_option("--instance", common.instance, "Instance JSON")->required();
  pack->add_option("--orders", pack_orders, "Historical orders (.csv or .json)")->required();
  pack->add_option("--time-limit", pack_limit, "Seconds");
  pack->add_option("-o,--out", pack_out, "Packing JSON")->required();

  // place
  auto* place = app.add_subcommand("place", "Assign packed tiles and interfaces to coordinates");
  std::string place_packing, place_orders, place_out, place_trace, place_scorer = "sampled";
  GaParams ga;
  place->add_option("--instance", common.instance, "Instance JSON")->required();
  place->add_option("--packing", place_packing, "Packing JSON")->required();
  place->add_option("--orders", place_orders, "Historical orders")->required();
  place->add_option("--scorer", place_scorer, "sampled | analytical")->check(CLI::IsMember({"sampled", "analytical"}));
  place->add_option("--population", ga.population);
  place->add_option("--evaluations", ga.max_evaluations);
  place->add_option("--episodes", ga.episodes);
  place->add_option("-o,--out", place_out, "Placement JSON")->required();
  place->add_option("--trace-out", place_trace, "GA trace CSV");

  // schedule
  auto* sch = app.add_subcommand("schedule", "Schedule orders on movers");
  std::string sch_place, sch_orders, sch_out, sch_trace;
  int sch_movers = 0, sch_batch = 0;
  double sch_limit = 10.0;
  long sch_iters = 1'000'000'000;
  bool sch_warm = false;
  sch->add_option("--instance", common.instance, "Instance JSON")->required();
  sch->add_option("--placement", sch_place, "Placement JSON")->required();
  sch->add_option("--orders", sch_orders, "Orders to schedule")->required();
  sch->add_option("--movers", sch_movers, "Mover count (default: instance config)");
  sch->add_option("--time-limit", sch_limit, "Seconds");
  sch->add_option("--max-iterations", sch_iters, "LNS iteration cap");
  sch->add_flag("--warm-start", sch_warm, "Seed the search with the bound's LPT mover assignment");
  sch->add_option("--batch-size", sch_batch, "Schedule in batches of this many orders and merge");
  sch->add_option("-o,--out", sch_out, "Schedule (.json or .csv)")->required();
  sch->add_option("--trace-out", sch_trace, "Incumbent trace CSV");

  // lower-bound
  auto* lbc = app.add_subcommand("lower-bound", "Makespan lower bound");
  std::string lb_place, lb_orders, lb_out, lb_dump;
  int lb_movers = 0;
  lbc->add_option("--instance", common.instance, "Instance JSON")->required();
  lbc->add_option("--placement", lb_place, "Placement JSON")->required();
  lbc->add_option("--orders", lb_orders, "Orders")->required();
  lbc->add_option("--movers", lb_movers, "Mover count (default: instance config)");
  lbc->add_option("-o,--out", lb_out, "Bound JSON (stdout when omitted)");
  lbc->add_option("--dump-gtsp", lb_dump, "Directory for per-order transformed ATSP matrices");

  // route
  auto* route = app.add_subcommand("route", "Resolve conflicts and build tick paths");
  std::string rt_place, rt_sched, rt_out, rt_paths, rt_conv, rt_weight = "duration";
  int rt_iter = 100;
  bool rt_nosites = false;
  route->add_option("--instance", common.instance, "Instance JSON")->required();
  route->add_option("--placement", rt_place, "Placement JSON")->required();
  route->add_option("--schedule", rt_sched, "Schedule (.json or .csv)")->required();
  route->add_option("--same-cell", rt_weight, "Same-tile DAG edge weight: duration | unit");
  route->add_option("--max-iterations", rt_iter);
  route->add_flag("--no-resting-sites", rt_nosites);
  route->add_option("-o,--out", rt_out, "Routed plan JSON")->required();
  route->add_option("--paths-out", rt_paths, "Per-tick path CSV");
  route->add_option("--convergence-out", rt_conv, "Makespan per iteration CSV");

  // merge
  auto* merge = app.add_subcommand("merge", "Stitch batch schedules into one plan");
  std::string mg_place, mg_out, mg_weight = "duration";
  std::vector<std::string> mg_batches;
  merge->add_option("--instance", common.instance, "Instance JSON")->required();
  merge->add_option("--placement", mg_place, "Placement JSON")->required();
  merge->add_option("--batches", mg_batches, "Batch schedules in execution order")->required();
  merge->add_option("--same-cell", mg_weight, "duration | unit");
  merge->add_option("-o,--out", mg_out, "Merged schedule")->required();

  // pipeline
  auto* pipe = app.add_subcommand("pipeline", "Run every stage from one config");
  std::string pp_config, pp_outdir;
  pipe->add_option("--config", pp_config, "Pipeline config JSON")->required();
  pipe->add_option("--out-dir", pp_outdir, "Overrides output_dir");

  // render
  auto* rend = app.add_subcommand("render", "SVG figures");
  std::string rd_place, rd_sched, rd_routed, rd_gantt, rd_layout, rd_input;
  bool rd_sites = false, rd_heat = false;
  rend->add_option("--instance", common.instance, "Instance JSON")->required();
  rend->add_option("--placement", rd_place, "Placement JSON");
  rend->add_option("--input", rd_input, "Any stage document to draw as a layout");
  rend->add_option("--schedule", rd_sched, "Schedule for a Gantt chart");
  rend->add_option("--routed", rd_routed, "Routed plan for a Gantt chart with transits");
  rend->add_flag("--sites", rd_sites, "Mark resting sites on the layout");
  rend->add_flag("--heat", rd_heat, "Shade interfaces by usage (needs --schedule or --routed)");
  rend->add_option("--gantt-out", rd_gantt);
  rend->add_option("--layout-out", rd_layout);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ExitCode::ConfigError);
  }

  try {
    std::optional<io::Instance> inst;
    if (!common.instance.empty()) inst = io::instance_from_json(io::read_json(common.instance));
    auto load_placement = [&](const std::string& p) { return io::placement_from_json(io::read_json(p), inst->catalog); };

    if (gen->parsed()) {
      DrugCatalog cat;
      if (inst) cat = inst->catalog;
      else if (!gen_catalog.empty()) cat = io::catalog_from_json(io::read_json(gen_catalog));
      else if (gen_demo > 0) cat = demo_catalog(gen_demo, pick_seed(common, 0));
      else throw ConfigError("gen-orders needs --instance, --catalog or --demo-drugs");
      OrderGenParams p;
      p.n_orders = gen_n;
      p.size = {gen_lo, gen_hi};
      p.duration = {gen_speed, gen_dose};
      p.mode = gen_mode == "raw" ? CorrelationMode::Raw : CorrelationMode::Tetrachoric;
      p.seed = derive_seed(pick_seed(common, inst ? inst->config.seed : 0), stream_tag("ordergen"));
      write_orders(gen_out, sample_orders(cat, p).orders, cat);
    } else if (pack->parsed()) {
      const auto orders = io::load_orders(pack_orders, inst->catalog);
      auto bad = validate_instance(inst->layout, inst->catalog, inst->config);
      if (!bad.empty()) throw InfeasibleError(bad.front());
      PackingConfig pc;
      pc.n_tiles = inst->layout.n_dispensing_tiles();
      pc.n_dispensers = inst->config.n_dispensers;
      pc.d_max = inst->config.d_max;
      pc.m_max = inst->config.m_max;
      pc.time_limit_s = pack_limit;
      pc.seed = derive_seed(pick_seed(common, inst->config.seed), stream_tag("packing"));
      const Packing s1 = pack_min_load(estimate_demand(orders, inst->catalog.size()), pc);
      const Packing s2 = pack_correlation(s1, inst->catalog.correlation, pc);
      io::write_json(pack_out, io::to_json(s2, inst->catalog));
      std::cout << "mu_max " << s2.mu_max << (s2.exact ? " (optimal)" : "") << "\n";
    } else if (place->parsed()) {
      const auto orders = io::load_orders(place_orders, inst->catalog);
      const Packing packing = io::packing_from_json(io::read_json(place_packing), inst->catalog);
      ga.threads = threads;
      ga.scorer = place_scorer == "sampled" ? Scorer::Sampled : Scorer::Analytical;
      const auto r = ga_place(packing, inst->layout, orders, ga,
                              derive_seed(pick_seed(common, inst->config.seed), stream_tag("ga")));
      io::write_json(place_out, io::to_json(r.placement, inst->catalog));
      if (!place_trace.empty()) io::write_text(place_trace, io::ga_trace_csv(r.trace));
      std::cout << "fitness " << r.best_fitness << " after " << r.evaluations << " evaluations\n";
    } else if (sch->parsed()) {
      const Placement pl = load_placement(sch_place);
      const PlacementIndex index(pl, inst->catalog.size());
      const auto orders = io::load_orders(sch_orders, inst->catalog);
      ScheduleParams sp;
      sp.n_movers = sch_movers > 0 ? sch_movers : inst->config.n_movers;
      sp.eta = inst->config.eta_interface;
      sp.time_limit_s = sch_limit;
      sp.max_iterations = sch_iters;
      sp.seed = derive_seed(pick_seed(common, inst->config.seed), stream_tag("lns"));
      const auto lb = lower_bound(orders, index, sp.n_movers, sp.eta);
      sp.stop_at = lb.value;
      if (sch_warm) sp.warm_start = lb.machine;
      Schedule out;
      if (sch_batch > 0 && static_cast<std::size_t>(sch_batch) < orders.size()) {
        const auto groups = partition_batches(orders.size(), static_cast<std::size_t>(sch_batch),
                                              derive_seed(sp.seed, stream_tag("batch")));
        std::vector<Schedule> parts;
        sp.stop_at = 0;
        sp.warm_start.reset();
        sp.time_limit_s /= static_cast<double>(groups.size());
        for (const auto& g : groups) {
          std::vector<Order> b;
          for (int i : g) b.push_back(orders[static_cast<std::size_t>(i)]);
          parts.push_back(schedule(b, index, sp).schedule);
        }
        out = merge_batches(parts, index);
      } else {
        const auto r = schedule(orders, index, sp);
        out = r.schedule;
        if (!sch_trace.empty()) io::write_text(sch_trace, io::incumbent_trace_csv(r.trace));
      }
      write_schedule(sch_out, out, pl, inst->catalog);
      std::cout << "makespan " << out.makespan << " (lower bound " << lb.value << ")\n";
    } else if (lbc->parsed()) {
      const Placement pl = load_placement(lb_place);
      const PlacementIndex index(pl, inst->catalog.size());
      const auto orders = io::load_orders(lb_orders, inst->catalog);
      const auto lb = lower_bound(orders, index, lb_movers > 0 ? lb_movers : inst->config.n_movers,
                                  inst->config.eta_interface);
      if (!lb_dump.empty()) {
        for (const Order& o : orders) {
          std::vector<int> vc;
          std::vector<DrugId> vd;
          const auto g = order_gtsp(o, index, vc, vd);
          const auto nb = noon_bean(g);
          io::write_json(fs::path(lb_dump) / ("order_" + std::to_string(o.id) + ".json"),
                         {{"clusters", g.clusters}, {"cost", g.cost}, {"atsp", nb.atsp}, {"shift", nb.shift},
                          {"vertex_cell", vc}, {"vertex_drug", vd}});
        }
      }
      if (lb_out.empty()) std::cout << io::to_json(lb).dump(2) << "\n";
      else io::write_json(lb_out, io::to_json(lb));
    } else if (route->parsed()) {
      const Placement pl = load_placement(rt_place);
      const PlacementIndex index(pl, inst->catalog.size());
      const Schedule s = read_schedule(rt_sched, pl, inst->catalog, inst->config.n_movers);
      RoutingOptions ro;
      ro.max_iterations = rt_iter;
      ro.same_cell = parse_weight(rt_weight);
      ro.use_resting_sites = !rt_nosites;
      const auto sites = generate_resting_sites(pl);
      const auto plan = resolve_conflicts(s, index, sites.sites, ro);
      io::write_json(rt_out, io::to_json(plan, pl, inst->catalog));
      if (!rt_paths.empty()) io::write_text(rt_paths, io::paths_to_csv(plan.paths, plan.sites, pl));
      if (!rt_conv.empty()) io::write_text(rt_conv, io::convergence_csv(plan));
      std::cout << "makespan " << plan.makespan_before << " -> " << plan.makespan << " after " << plan.iterations
                << " iterations\n";
      if (!plan.converged)
        throw Error("no fixpoint within " + std::to_string(rt_iter) + " iterations; " +
                        std::to_string(plan.residual_conflicts) + " ops still conflicted",
                    ExitCode::Infeasible);
    } else if (merge->parsed()) {
      const Placement pl = load_placement(mg_place);
      const PlacementIndex index(pl, inst->catalog.size());
      std::vector<Schedule> parts;
      for (const auto& b : mg_batches) parts.push_back(read_schedule(b, pl, inst->catalog, inst->config.n_movers));
      const Schedule out = merge_batches(parts, index, parse_weight(mg_weight));
      write_schedule(mg_out, out, pl, inst->catalog);
      std::cout << "makespan " << out.makespan << "\n";
    } else if (pipe->parsed()) {
      PipelineConfig cfg = load_pipeline_config(pp_config);
      if (common.seed) cfg.seed = *common.seed;
      if (!pp_outdir.empty()) cfg.output_dir = pp_outdir;
      if (app.get_option("--threads")->count() > 0) cfg.threads = cfg.ga.threads = threads;
      std::cout << to_json(run_pipeline(cfg)).dump(2) << "\n";
    } else if (rend->parsed()) {
      if (!rd_input.empty()) {
        const std::string svg = render_document(io::read_json(rd_input), inst->catalog);
        if (!rd_layout.empty()) io::write_text(rd_layout, svg);
        else std::cout << svg;
        return 0;
      }
      if (rd_place.empty()) throw ConfigError("render needs --placement or --input");
      const Placement pl = load_placement(rd_place);
      const PlacementIndex index(pl, inst->catalog.size());
      std::optional<RoutedPlan> routed;
      std::optional<Schedule> sched;
      if (!rd_routed.empty()) {
        routed = io::routed_plan_from_json(io::read_json(rd_routed), index, inst->catalog);
        sched = routed->schedule;
      } else if (!rd_sched.empty()) {
        sched = read_schedule(rd_sched, pl, inst->catalog, inst->config.n_movers);
      }
      if (!rd_gantt.empty()) {
        if (!sched) throw ConfigError("--gantt-out needs --schedule or --routed");
        GanttOptions go;
        go.drug_names = inst->catalog.drugs;
        io::write_text(rd_gantt, routed ? render_gantt(*routed, go) : render_gantt(*sched, go));
      }
      if (!rd_layout.empty()) {
        LayoutOptions lo;
        lo.drug_names = inst->catalog.drugs;
        if (rd_sites) lo.sites = generate_resting_sites(pl).sites;
        if (rd_heat) {
          if (!sched) throw ConfigError("--heat needs --schedule or --routed");
          lo.heat = interface_heat(*sched, index.n_cells());
        }
        io::write_text(rd_layout, render_layout(pl, lo));
      }
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::ConfigError);
  }
  return 0;
}
