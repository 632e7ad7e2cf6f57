#pragma once

// JSON and CSV serialization for every stage output. Drugs are written by
// name, so most readers need the catalog.

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "planarfab/core.hpp"
#include "planarfab/ordergen.hpp"
#include "planarfab/packing.hpp"
#include "planarfab/placement.hpp"
#include "planarfab/routing.hpp"
#include "planarfab/scheduler.hpp"
#include "planarfab/scheduling.hpp"

namespace planarfab::io {

using json = nlohmann::json;

std::string read_text(const std::filesystem::path& p);
void write_text(const std::filesystem::path& p, const std::string& text);
json read_json(const std::filesystem::path& p);
void write_json(const std::filesystem::path& p, const json& j);

json to_json(const Layout& l);
Layout layout_from_json(const json& j);
json to_json(const DrugCatalog& c);
DrugCatalog catalog_from_json(const json& j);
json to_json(const InstanceConfig& c);
InstanceConfig config_from_json(const json& j);

/// Layout, catalog and config in one document.
struct Instance {
  Layout layout;
  DrugCatalog catalog;
  InstanceConfig config;
};
json to_json(const Instance& inst);
Instance instance_from_json(const json& j);

json orders_to_json(const std::vector<Order>& orders, const DrugCatalog& c);
std::vector<Order> orders_from_json(const json& j, const DrugCatalog& c);
std::string orders_to_csv(const std::vector<Order>& orders, const DrugCatalog& c);
std::vector<Order> orders_from_csv(const std::string& text, const DrugCatalog& c);
/// Dispatches on the file extension (.csv or .json).
std::vector<Order> load_orders(const std::filesystem::path& p, const DrugCatalog& c);

json to_json(const Packing& p, const DrugCatalog& c);
Packing packing_from_json(const json& j, const DrugCatalog& c);

json to_json(const Placement& p, const DrugCatalog& c);
Placement placement_from_json(const json& j, const DrugCatalog& c);
std::string ga_trace_csv(const std::vector<GaTracePoint>& trace);

json to_json(const Schedule& s, const Placement& p, const DrugCatalog& c);
Schedule schedule_from_json(const json& j, const Placement& p, const DrugCatalog& c);
std::string schedule_to_csv(const Schedule& s, const Placement& p, const DrugCatalog& c);
Schedule schedule_from_csv(const std::string& text, const Placement& p, const DrugCatalog& c, int n_movers);
std::string incumbent_trace_csv(const std::vector<IncumbentPoint>& trace);

json to_json(const LowerBoundResult& lb);

/// Everything but the tick paths, which go to paths_to_csv and are rebuilt
/// on load.
json to_json(const RoutedPlan& r, const Placement& p, const DrugCatalog& c);
RoutedPlan routed_plan_from_json(const json& j, const PlacementIndex& index, const DrugCatalog& c);
std::string paths_to_csv(const MoverPaths& paths, const std::vector<RestingSite>& sites, const Placement& p);
std::string convergence_csv(const RoutedPlan& r);

}  // namespace planarfab::io
