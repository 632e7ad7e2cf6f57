#include "planarfab/render.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "planarfab/error.hpp"
#include "planarfab/io.hpp"

namespace planarfab {

namespace {

std::string drug_color(DrugId g) {
  const double hue = std::fmod(137.508 * g, 360.0);
  std::ostringstream ss;
  ss << "hsl(" << static_cast<int>(hue) << ",60%,60%)";
  return ss.str();
}

std::string esc(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string drug_label(const std::vector<std::string>& names, DrugId g) {
  if (g >= 0 && g < static_cast<int>(names.size())) return names[static_cast<std::size_t>(g)];
  return "drug " + std::to_string(g);
}

}  // namespace

std::string render_gantt(const Schedule& s, const GanttOptions& opt) {
  const double left = 80, top = 40, row_h = 28, width = 1000;
  const Ticks horizon = std::max<Ticks>(1, compute_makespan(s));
  const double k = opt.px_per_tick > 0 ? opt.px_per_tick : width / static_cast<double>(horizon);
  const int rows = std::max(s.n_movers, 0);
  const double H = top + rows * row_h + 40;
  const double W = left + static_cast<double>(horizon) * k + 20;

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  o << "<defs><pattern id=\"hatch\" width=\"6\" height=\"6\" patternUnits=\"userSpaceOnUse\" patternTransform=\"rotate(45)\">"
       "<line x1=\"0\" y1=\"0\" x2=\"0\" y2=\"6\" stroke=\"#555\" stroke-width=\"2\"/></pattern></defs>\n";
  if (!opt.title.empty()) o << "<text x=\"" << left << "\" y=\"20\" font-size=\"14\">" << esc(opt.title) << "</text>\n";
  const double axis_y = top + rows * row_h;
  o << "<g class=\"axes\"><line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << axis_y
    << "\" stroke=\"black\"/><line x1=\"" << left << "\" y1=\"" << axis_y << "\" x2=\"" << W - 20 << "\" y2=\"" << axis_y
    << "\" stroke=\"black\"/>";
  const Ticks step = std::max<Ticks>(1, horizon / 10);
  for (Ticks t = 0; t <= horizon; t += step)
    o << "<text x=\"" << left + static_cast<double>(t) * k << "\" y=\"" << axis_y + 15 << "\" text-anchor=\"middle\">" << t << "</text>";
  o << "</g>\n";

  for (int m = 0; m < rows; ++m) {
    const double y = top + m * row_h;
    o << "<g class=\"row\" data-mover=\"" << m << "\"><text x=\"" << left - 8 << "\" y=\"" << y + row_h * 0.65
      << "\" text-anchor=\"end\">mover " << m << "</text>";
    for (std::size_t i = 0; i < s.plan.size(); ++i) {
      const auto& q = s.plan[i];
      if (q.mover != m) continue;
      const auto& op = s.ops[i];
      const bool iface = op.kind != OpKind::Dispense;
      const std::string fill = iface ? "#444" : drug_color(op.drug);
      const std::string label = iface ? std::string(op_kind_name(op.kind)) : drug_label(opt.drug_names, op.drug);
      o << "<rect class=\"op " << (iface ? "interface" : "dispense") << "\" x=\"" << left + static_cast<double>(q.start) * k
        << "\" y=\"" << y + 3 << "\" width=\"" << static_cast<double>(q.end - q.start) * k << "\" height=\"" << row_h - 6
        << "\" fill=\"" << fill << "\" stroke=\"white\"><title>order " << op.order_id << ": " << esc(label) << " ["
        << q.start << "," << q.end << ")</title></rect>";
    }
    for (const auto& t : opt.transits) {
      if (t.mover != m) continue;
      o << "<rect class=\"transit\" x=\"" << left + static_cast<double>(t.depart) * k << "\" y=\"" << y + 8 << "\" width=\""
        << static_cast<double>(t.arrive - t.depart) * k << "\" height=\"" << row_h - 16
        << "\" fill=\"url(#hatch)\" stroke=\"#555\"><title>idle " << t.idle << "</title></rect>";
    }
    o << "</g>\n";
  }
  o << "</svg>\n";
  return o.str();
}

std::string render_gantt(const RoutedPlan& r, GanttOptions opt) {
  if (opt.transits.empty()) opt.transits = r.transits;
  return render_gantt(r.schedule, opt);
}

std::string render_layout(const Placement& p, const LayoutOptions& opt) {
  const double cell = 90, pad = 30;
  int xmax = 1, ymax = 1;
  for (Coord c : p.layout.tiles) {
    xmax = std::max(xmax, c.x);
    ymax = std::max(ymax, c.y);
  }
  const double top = opt.title.empty() ? pad : pad + 20;
  auto X = [&](double x) { return pad + (x - 1) * cell; };
  auto Y = [&](double y) { return top + (ymax - y) * cell; };
  double lo = 0, hi = 0;
  if (!opt.heat.empty()) {
    lo = *std::min_element(opt.heat.begin(), opt.heat.end());
    hi = *std::max_element(opt.heat.begin(), opt.heat.end());
  }

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << 2 * pad + xmax * cell << "\" height=\""
    << top + pad + ymax * cell << "\" font-family=\"sans-serif\" font-size=\"9\">\n";
  if (!opt.title.empty()) o << "<text x=\"" << pad << "\" y=\"20\" font-size=\"14\">" << esc(opt.title) << "</text>\n";
  for (std::size_t i = 0; i < p.cells.size(); ++i) {
    const auto& c = p.cells[i];
    const bool iface = c.kind == CellKind::Interface;
    const double x = X(c.coord.x), y = Y(c.coord.y);
    o << "<g class=\"cell" << (iface ? " interface" : "") << "\" data-x=\"" << c.coord.x << "\" data-y=\"" << c.coord.y << "\">";
    o << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\"" << cell << "\" fill=\""
      << (iface ? "#f2c94c" : "#f4f4f4") << "\" stroke=\"#333\"/>";
    const double stripe_h = c.drugs.empty() ? 0 : (cell - 8) / static_cast<double>(c.drugs.size());
    for (std::size_t k = 0; k < c.drugs.size(); ++k) {
      const double sy = y + 4 + stripe_h * static_cast<double>(k);
      o << "<rect class=\"stripe\" x=\"" << x + 4 << "\" y=\"" << sy << "\" width=\"" << cell - 8 << "\" height=\"" << stripe_h
        << "\" fill=\"" << drug_color(c.drugs[k]) << "\"/><text x=\"" << x + 8 << "\" y=\"" << sy + stripe_h / 2 + 3 << "\">"
        << esc(drug_label(opt.drug_names, c.drugs[k])) << "</text>";
    }
    if (iface) o << "<text x=\"" << x + cell / 2 << "\" y=\"" << y + cell / 2 + 3 << "\" text-anchor=\"middle\">INTERFACE</text>";
    if (i < opt.heat.size()) {
      const double v = hi > lo ? (opt.heat[i] - lo) / (hi - lo) : 0.5;
      o << "<rect class=\"heat\" x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\"" << cell
        << "\" fill=\"#d7301f\" fill-opacity=\"" << 0.1 + 0.6 * v << "\"/>";
    }
    o << "</g>\n";
  }
  for (const auto& s : opt.sites)
    o << "<circle class=\"site\" cx=\"" << X(s.x) + cell / 2 << "\" cy=\"" << Y(s.y) + cell / 2 << "\" r=\"7\" fill=\"#2f80ed\"/>\n";
  o << "</svg>\n";
  return o.str();
}

std::string render_document(const nlohmann::json& j, const DrugCatalog& catalog) {
  if (j.contains("cells")) {
    LayoutOptions opt;
    opt.drug_names = catalog.drugs;
    return render_layout(io::placement_from_json(j, catalog), opt);
  }
  if (j.contains("z") && j.contains("tiles"))
    throw ConfigError("a packing has no coordinates; run `place` before rendering it");
  throw ConfigError("unrecognized document; expected a placement");
}

std::vector<double> interface_heat(const Schedule& s, int n_cells) {
  std::vector<double> h(static_cast<std::size_t>(n_cells), 0.0);
  double n = 0;
  for (std::size_t i = 0; i < s.ops.size(); ++i)
    if (s.ops[i].kind != OpKind::Dispense) {
      h[static_cast<std::size_t>(s.plan[i].cell)] += 1.0;
      n += 1.0;
    }
  if (n > 0)
    for (double& v : h) v /= n;
  return h;
}

}  // namespace planarfab
