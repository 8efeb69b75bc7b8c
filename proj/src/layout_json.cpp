#include "maptrix/layout_json.hpp"

#include "maptrix/errors.hpp"

#include <algorithm>
#include <cstdio>

namespace maptrix {

namespace {

using nlohmann::json;

json pt(const Point& p) { return json::array({p.x(), p.y()}); }

json panel_json(const MapPanel& panel) {
  json regions = json::array();
  for (const auto& r : panel.regions) {
    json ring = json::array();
    for (const auto& p : r.boundary) ring.push_back(pt(p));
    regions.push_back({{"id", r.id}, {"name", r.name}, {"boundary", std::move(ring)}, {"anchor", pt(r.anchor)}});
  }
  return {{"box", json::array({panel.box.min().x(), panel.box.min().y(), panel.box.max().x(), panel.box.max().y()})},
          {"scale", panel.scale},
          {"offset", pt(panel.offset)},
          {"regions", std::move(regions)}};
}

json leaders_json(const MapPanel& panel, const std::vector<LeaderRoute>& leaders, const char* tag) {
  json out = json::array();
  for (std::size_t i = 0; i < leaders.size(); ++i) {
    const auto& l = leaders[i];
    out.push_back({{"id", panel.regions[i].id},
                   {"element", std::string("leader-") + tag + "-" + panel.regions[i].id},
                   {"polyline", json::array({pt(l.site), pt(l.bend), pt(l.port.position)})},
                   {"gradient", to_string(l.gradient_sign)},
                   {"port", l.port.index}});
  }
  return out;
}

json glyphs_json(const MapPanel& panel, const std::vector<double>& radius, const std::vector<double>& shade) {
  json out = json::array();
  for (std::size_t i = 0; i < radius.size(); ++i) {
    out.push_back({{"id", panel.regions[i].id}, {"radius", radius[i]}, {"shade", shade[i]}});
  }
  return out;
}

json refinement_json(const RefinedLayoutDelta& d, int crossings) {
  json pairs = json::array();
  for (std::size_t j = 0; j < d.pairs.size(); ++j) {
    pairs.push_back({{"lower", d.pairs[j].lower},
                     {"upper", d.pairs[j].upper},
                     {"initial", d.pairs[j].initial},
                     {"separation", j < d.separations.size() ? d.separations[j] : d.pairs[j].initial}});
  }
  return {{"crossings", crossings},
          {"pcentre", d.pcentre},
          {"psep", d.psep},
          {"objective", d.objective},
          {"objective_at_anchors", d.objective_at_anchors},
          {"target_separation", d.target_separation},
          {"status", qp::to_string(d.status)},
          {"fell_back", d.fell_back},
          {"clashes", d.clashes},
          {"pinned", d.pinned_regions},
          {"pairs", std::move(pairs)}};
}

}  // namespace

nlohmann::json layout_to_json(const MapTrixLayout& layout) {
  if (!layout.dataset) throw ValidationError("layout has no dataset");
  const FlowDataset& data = *layout.dataset;
  const MatrixGeometry& mx = layout.matrix;

  json row_order = json::array();
  for (auto i : layout.row_order) row_order.push_back(data.origins()[i].id);
  json col_order = json::array();
  for (auto j : layout.col_order) col_order.push_back(data.destinations()[j].id);

  json row_ports = json::array();
  for (const auto& p : mx.row_ports) row_ports.push_back(pt(p.position));
  json col_ports = json::array();
  for (const auto& p : mx.col_ports) col_ports.push_back(pt(p.position));

  json cells = json::array();
  for (int r = 0; r < mx.rows; ++r) {
    const auto i = layout.row_order[static_cast<std::size_t>(r)];
    for (int c = 0; c < mx.cols; ++c) {
      const auto j = layout.col_order[static_cast<std::size_t>(c)];
      json corners = json::array();
      for (const auto& p : mx.cell_corners(r, c)) corners.push_back(pt(p));
      const auto& oid = data.origins()[i].id;
      const auto& did = data.destinations()[j].id;
      cells.push_back({{"element", "cell-" + oid + "-" + did},
                       {"origin", oid},
                       {"destination", did},
                       {"row", r},
                       {"col", c},
                       {"value", data.flows()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))},
                       {"color", layout.cell_colors[i * layout.dataset->destinations().size() + j]},
                       {"corners", std::move(corners)}});
    }
  }

  return {
      {"mode", to_string(layout.mode)},
      {"origin_count", data.origin_count()},
      {"destination_count", data.destination_count()},
      {"max_flow", data.max_flow()},
      {"grand_total", data.grand_total()},
      {"panels", {{"origin", panel_json(layout.origin_panel)}, {"destination", panel_json(layout.destination_panel)}}},
      {"matrix",
       {{"left", pt(mx.left)},
        {"center", pt(mx.center)},
        {"cell_size", mx.cell_size},
        {"rotation", mx.rotation_deg},
        {"rows", mx.rows},
        {"cols", mx.cols},
        {"separator_every", mx.separator_every},
        {"row_ports", std::move(row_ports)},
        {"col_ports", std::move(col_ports)}}},
      {"row_order", std::move(row_order)},
      {"col_order", std::move(col_order)},
      {"leaders",
       {{"origin", leaders_json(layout.origin_panel, layout.origin_leaders, "o")},
        {"destination", leaders_json(layout.destination_panel, layout.dest_leaders, "d")}}},
      {"cells", std::move(cells)},
      {"glyphs",
       {{"origin", glyphs_json(layout.origin_panel, layout.origin_radius, layout.origin_shade)},
        {"destination", glyphs_json(layout.destination_panel, layout.destination_radius, layout.destination_shade)}}},
      {"diagnostics",
       {{"k", layout.config.labelling.k},
        {"w", layout.config.refinement.w},
        {"origin", refinement_json(layout.origin_refinement, layout.origin_crossings)},
        {"destination", refinement_json(layout.dest_refinement, layout.destination_crossings)}}},
  };
}

std::uint64_t layout_hash(const nlohmann::json& layout_json) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : layout_json.dump()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hash_hex(std::uint64_t hash) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

std::vector<RegionGroup> groups_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw ValidationError("groups must be a JSON array");
  std::vector<RegionGroup> out;
  for (const auto& g : j) {
    if (!g.is_object() || !g.contains("members") || !g.at("members").is_array()) {
      throw ValidationError("each group needs a \"members\" array");
    }
    RegionGroup group;
    group.group_id = g.value("group_id", std::string());
    for (const auto& m : g.at("members")) {
      if (!m.is_string()) throw ValidationError("group members must be region id strings");
      group.member_ids.push_back(m.get<std::string>());
    }
    if (group.group_id.empty()) group.group_id = "G" + std::to_string(out.size() + 1);
    out.push_back(std::move(group));
  }
  return out;
}

nlohmann::json groups_to_json(const std::vector<RegionGroup>& groups) {
  json out = json::array();
  for (const auto& g : groups) out.push_back({{"group_id", g.group_id}, {"members", g.member_ids}});
  return out;
}

std::vector<Highlight> highlights_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw ValidationError("highlights must be a JSON array");
  std::vector<Highlight> out;
  for (const auto& h : j) {
    if (!h.is_object()) throw ValidationError("each highlight must be an object");
    const bool o = h.contains("origin") && h.at("origin").is_string();
    const bool d = h.contains("destination") && h.at("destination").is_string();
    Highlight item;
    if (o) item.origin_id = h.at("origin").get<std::string>();
    if (d) item.destination_id = h.at("destination").get<std::string>();
    if (o && d) item.kind = Highlight::Kind::cell;
    else if (o) item.kind = Highlight::Kind::origin;
    else if (d) item.kind = Highlight::Kind::destination;
    else throw ValidationError("a highlight names an origin, a destination or both");
    if (std::find(out.begin(), out.end(), item) == out.end()) out.push_back(std::move(item));
  }
  return out;
}

nlohmann::json highlights_to_json(const std::vector<Highlight>& highlights) {
  json out = json::array();
  for (const auto& h : highlights) {
    json item = json::object();
    if (h.kind != Highlight::Kind::destination) item["origin"] = h.origin_id;
    if (h.kind != Highlight::Kind::origin) item["destination"] = h.destination_id;
    out.push_back(std::move(item));
  }
  return out;
}

nlohmann::json selection_to_json(const SelectionState& selection) {
  json range = nullptr;
  if (selection.range) range = json::array({(*selection.range)[0], (*selection.range)[1]});
  return {{"version", selection.version},
          {"range", range},
          {"groups", groups_to_json(selection.groups)},
          {"highlights", highlights_to_json(selection.highlights)}};
}

}  // namespace maptrix
