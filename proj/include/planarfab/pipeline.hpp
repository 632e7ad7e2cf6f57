#pragma once

// End-to-end driver: orders -> pack -> place -> schedule (+ bound) -> route.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "planarfab/core.hpp"
#include "planarfab/ordergen.hpp"
#include "planarfab/packing.hpp"
#include "planarfab/placement.hpp"
#include "planarfab/routing.hpp"

namespace planarfab {

/// Where a stage's orders come from: a file, or the generator.
struct OrderSource {
  std::filesystem::path path;  // empty: generate
  OrderGenParams gen;
};

struct StageToggles {
  bool pack = true;
  bool place = true;
  bool schedule = true;
  bool lower_bound = true;
  bool route = true;
};

struct PipelineConfig {
  std::uint64_t seed = 0;
  std::filesystem::path catalog_path;  // empty: demo catalog
  int demo_drugs = 0;
  Layout layout;
  InstanceConfig instance;
  std::filesystem::path placement_path;  // set: skip pack and place
  std::optional<OrderSource> history;    // trains packing and placement
  std::optional<OrderSource> workload;   // gets scheduled
  StageToggles stages;
  PackingConfig packing;
  GaParams ga;
  double schedule_time_limit_s = 10.0;
  long schedule_max_iterations = 1'000'000'000;  // caps LNS; set for reproducible runs
  int batch_size = 0;
  RoutingOptions routing;
  int threads = 1;
  std::filesystem::path output_dir;  // empty: nothing written
};

/// Relative paths resolve against base_dir. PLANARFAB_SEED, when set,
/// replaces "seed".
PipelineConfig pipeline_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
PipelineConfig load_pipeline_config(const std::filesystem::path& file);

struct StageTime {
  std::string stage;
  double seconds = 0.0;
};

struct RunReport {
  std::uint64_t seed = 0;
  std::map<std::string, std::uint64_t> substreams;
  std::optional<double> mu_max;
  std::optional<bool> packing_exact;
  std::optional<double> placement_score;  // mean kappa over the history
  std::optional<double> ga_fitness;
  std::optional<Ticks> lower_bound;
  std::optional<bool> lower_bound_exact;
  std::optional<Ticks> makespan_scheduled;
  std::optional<bool> schedule_optimal;
  std::optional<Ticks> makespan_routed;
  std::optional<double> overhead_pct;
  std::optional<int> routing_iterations;
  std::optional<bool> routing_converged;
  std::optional<bool> resting_exact;
  std::vector<StageTime> wall;
  std::vector<std::string> artifacts;
};

/// Percent increase of the routed makespan over the scheduled one.
double overhead_pct(Ticks scheduled, Ticks routed);

nlohmann::json to_json(const RunReport& r);

RunReport run_pipeline(const PipelineConfig& cfg);

/// Reads PLANARFAB_SEED; nullopt when unset. Malformed values throw.
std::optional<std::uint64_t> seed_from_env();

}  // namespace planarfab
