#pragma once

// SVG figures: per-mover Gantt charts and layout maps.

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "planarfab/core.hpp"
#include "planarfab/routing.hpp"
#include "planarfab/scheduling.hpp"

namespace planarfab {

struct GanttOptions {
  std::vector<std::string> drug_names;  // optional labels
  std::vector<Transit> transits;        // drawn hatched
  std::string title;
  double px_per_tick = 0.0;  // 0: fit to 1000 px
};

std::string render_gantt(const Schedule& s, const GanttOptions& opt = {});
std::string render_gantt(const RoutedPlan& r, GanttOptions opt = {});

struct LayoutOptions {
  std::vector<std::string> drug_names;
  std::vector<RestingSite> sites;
  std::vector<double> heat;  // per cell; empty for none
  std::string title;
};

std::string render_layout(const Placement& p, const LayoutOptions& opt = {});

/// Renders a serialized placement, schedule or routed plan. Packings carry
/// no coordinates and are refused with ConfigError.
std::string render_document(const nlohmann::json& j, const DrugCatalog& catalog);

/// Fraction of orders using each interface cell as start or end, for the
/// heat overlay.
std::vector<double> interface_heat(const Schedule& s, int n_cells);

}  // namespace planarfab
