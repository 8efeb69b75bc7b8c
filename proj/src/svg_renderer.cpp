#include "maptrix/svg_renderer.hpp"

#include "maptrix/errors.hpp"
#include "maptrix/maptrix_assembler.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>

namespace maptrix {

namespace {

struct Rgb {
  double r, g, b;
};

Rgb parse_hex(const std::string& hex) {
  unsigned r = 0, g = 0, b = 0;
  if (hex.size() != 7 || hex[0] != '#' || std::sscanf(hex.c_str() + 1, "%2x%2x%2x", &r, &g, &b) != 3) {
    throw ValidationError("colour '" + hex + "' is not #RRGGBB");
  }
  return {double(r), double(g), double(b)};
}

std::string to_hex(const Rgb& c) {
  auto channel = [](double v) { return static_cast<unsigned>(std::clamp(std::lround(v), 0L, 255L)); };
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02X%02X%02X", channel(c.r), channel(c.g), channel(c.b));
  return buf;
}

Rgb mix(const Rgb& a, const Rgb& b, double t) {
  return {a.r + (b.r - a.r) * t, a.g + (b.g - a.g) * t, a.b + (b.b - a.b) * t};
}

}  // namespace

StyleSpec load_style(std::istream& in) {
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("style is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ValidationError("style must be a JSON object");
  StyleSpec s;
  try {
    if (j.contains("cell_ramp")) {
      const auto ramp = j.at("cell_ramp").get<std::vector<std::string>>();
      if (ramp.size() != s.cell_ramp.size()) throw ValidationError("cell_ramp needs exactly 9 colours");
      std::copy(ramp.begin(), ramp.end(), s.cell_ramp.begin());
      for (const auto& c : s.cell_ramp) parse_hex(c);
    }
#define MAPTRIX_STYLE_FIELD(name) \
  if (j.contains(#name)) j.at(#name).get_to(s.name);
    MAPTRIX_STYLE_FIELD(log_scale)
    MAPTRIX_STYLE_FIELD(circle_max_radius)
    MAPTRIX_STYLE_FIELD(label_font_size)
    MAPTRIX_STYLE_FIELD(key_font_size)
    MAPTRIX_STYLE_FIELD(grey_light)
    MAPTRIX_STYLE_FIELD(grey_dark)
    MAPTRIX_STYLE_FIELD(leader_width)
    MAPTRIX_STYLE_FIELD(separator_width)
    MAPTRIX_STYLE_FIELD(region_fill)
    MAPTRIX_STYLE_FIELD(region_stroke)
    MAPTRIX_STYLE_FIELD(out_circle_fill)
    MAPTRIX_STYLE_FIELD(in_circle_fill)
    MAPTRIX_STYLE_FIELD(highlight_color)
    MAPTRIX_STYLE_FIELD(highlight_width)
    MAPTRIX_STYLE_FIELD(legacy_bars)
#undef MAPTRIX_STYLE_FIELD
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad style field: ") + e.what());
  }
  for (const auto* c : {&s.grey_light, &s.grey_dark, &s.highlight_color}) parse_hex(*c);
  return s;
}

double ramp_position(double value, double max_flow, const StyleSpec& style) {
  if (!(max_flow > 0.0)) throw ValidationError("max_flow must be > 0");
  if (!(value >= 0.0)) throw ValidationError("flow value must be >= 0");
  const double t = style.log_scale ? std::log1p(value) / std::log1p(max_flow) : value / max_flow;
  return std::min(t, 1.0);
}

std::string color_for_flow(double value, double max_flow, const StyleSpec& style) {
  const double t = ramp_position(value, max_flow, style) * double(style.cell_ramp.size() - 1);
  const std::size_t i = std::min(static_cast<std::size_t>(t), style.cell_ramp.size() - 2);
  return to_hex(mix(parse_hex(style.cell_ramp[i]), parse_hex(style.cell_ramp[i + 1]), t - double(i)));
}

double circle_radius(double total, double max_total, const StyleSpec& style) {
  if (!(max_total > 0.0) || !(total > 0.0)) return 0.0;
  return style.circle_max_radius * std::sqrt(total / max_total);
}

std::string grey_for_share(double share, const StyleSpec& style) {
  return to_hex(mix(parse_hex(style.grey_light), parse_hex(style.grey_dark), std::clamp(share, 0.0, 1.0)));
}

// ---------------------------------------------------------------------------

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  std::string s = buf;
  if (s == "-0.00") s = "0.00";
  return s;
}

std::string short_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string esc(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string ring_path(const Polygon& ring) {
  std::string d;
  for (std::size_t i = 0; i < ring.size(); ++i) {
    d += (i ? " L" : "M") + num(ring[i].x()) + " " + num(ring[i].y());
  }
  return d + " Z";
}

std::string cls(const char* base, bool highlighted) { return highlighted ? std::string(base) + " hl" : base; }

struct HighlightSets {
  std::set<std::string> origins;       // whole path: region, leader, row
  std::set<std::string> destinations;  // whole path: region, leader, column
  std::set<std::pair<std::string, std::string>> cells;

  bool origin_path(const std::string& id) const {
    if (origins.count(id)) return true;
    return std::any_of(cells.begin(), cells.end(), [&](const auto& c) { return c.first == id; });
  }
  bool destination_path(const std::string& id) const {
    if (destinations.count(id)) return true;
    return std::any_of(cells.begin(), cells.end(), [&](const auto& c) { return c.second == id; });
  }
  bool cell(const std::string& o, const std::string& d) const {
    return origins.count(o) || destinations.count(d) || cells.count({o, d});
  }
};

HighlightSets collect(const SelectionState* selection) {
  HighlightSets h;
  if (!selection) return h;
  for (const auto& item : selection->highlights) {
    switch (item.kind) {
      case Highlight::Kind::origin: h.origins.insert(item.origin_id); break;
      case Highlight::Kind::destination: h.destinations.insert(item.destination_id); break;
      case Highlight::Kind::cell: h.cells.insert({item.origin_id, item.destination_id}); break;
    }
  }
  return h;
}

void panel_svg(std::ostream& out, const MapPanel& panel, const char* tag, const StyleSpec& style,
               const std::vector<LeaderRoute>& leaders, const std::vector<double>& radius,
               const std::vector<double>& shade, const std::string& circle_fill,
               const std::function<bool(const std::string&)>& lit) {
  out << "<g id=\"map-" << tag << "\">\n";
  for (const auto& r : panel.regions) {
    out << "<path id=\"region-" << tag << "-" << esc(r.id) << "\" class=\"" << cls("region", lit(r.id)) << "\" d=\""
        << ring_path(r.boundary) << "\"/>\n";
  }
  out << "</g>\n<g id=\"leaders-" << tag << "\">\n";
  for (std::size_t i = 0; i < panel.regions.size(); ++i) {
    const auto& l = leaders[i];
    const auto& id = panel.regions[i].id;
    out << "<path id=\"leader-" << tag << "-" << esc(id) << "\" class=\"" << cls("leader", lit(id)) << "\" d=\"M"
        << num(l.site.x()) << " " << num(l.site.y()) << " L" << num(l.bend.x()) << " " << num(l.bend.y()) << " L"
        << num(l.port.position.x()) << " " << num(l.port.position.y()) << "\" stroke=\""
        << grey_for_share(shade[i], style) << "\"/>\n";
  }
  out << "</g>\n<g id=\"glyphs-" << tag << "\">\n";
  for (std::size_t i = 0; i < panel.regions.size(); ++i) {
    const auto& id = panel.regions[i].id;
    out << "<circle id=\"glyph-" << tag << "-" << esc(id) << "\" class=\"" << cls("glyph", lit(id)) << "\" cx=\""
        << num(leaders[i].site.x()) << "\" cy=\"" << num(leaders[i].site.y()) << "\" r=\"" << num(radius[i])
        << "\" fill=\"" << circle_fill << "\"/>\n";
  }
  out << "</g>\n<g id=\"labels-" << tag << "\">\n";
  for (std::size_t i = 0; i < panel.regions.size(); ++i) {
    const auto& id = panel.regions[i].id;
    const Point at = leaders[i].site - Point(0.0, radius[i] + 2.0);
    out << "<text id=\"label-" << tag << "-" << esc(id) << "\" class=\"" << cls("label", lit(id)) << "\" x=\""
        << num(at.x()) << "\" y=\"" << num(at.y()) << "\" fill=\"" << grey_for_share(shade[i], style) << "\">"
        << esc(id) << "</text>\n";
  }
  out << "</g>\n";
}

}  // namespace

std::string render(const MapTrixLayout& layout, const StyleSpec& style, const SelectionState* highlights) {
  if (!layout.dataset) throw ValidationError("render needs a layout");
  const FlowDataset& data = *layout.dataset;
  const MatrixGeometry& mx = layout.matrix;
  const HighlightSets lit = collect(highlights);
  const double cell = mx.cell_size;
  const int M = mx.rows;
  const int N = mx.cols;

  const auto outline = mx.outline();
  double right = outline[2].x();
  double bottom = std::max({outline[3].y(), layout.destination_panel.box.max().y(), outline[2].y()});
  const double margin = layout.config.margin;
  if (style.legacy_bars) right += 3.0 * cell;
  const double key_top = bottom + 12.0;
  const double width = right + margin;
  const double height = key_top + 12.0 + style.key_font_size + 4.0 + margin;

  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << num(width) << "\" height=\""
      << num(height) << "\" viewBox=\"0 0 " << num(width) << " " << num(height) << "\">\n";
  out << "<style>\n"
      << ".region{fill:" << style.region_fill << ";stroke:" << style.region_stroke << ";stroke-width:0.8}\n"
      << ".leader{fill:none;stroke-width:" << num(style.leader_width) << "}\n"
      << ".glyph{fill-opacity:0.7}\n"
      << ".label{font-family:sans-serif;font-size:" << num(style.label_font_size) << "px;text-anchor:middle}\n"
      << ".cell{stroke:#FFFFFF;stroke-width:0.5}\n"
      << ".separator{stroke:#404040;stroke-width:" << num(style.separator_width) << "}\n"
      << ".key{font-family:sans-serif;font-size:" << num(style.key_font_size) << "px}\n"
      << ".hl{stroke:" << style.highlight_color << ";stroke-width:" << num(style.highlight_width) << "}\n"
      << "</style>\n";
  out << "<defs><linearGradient id=\"cell-ramp\">";
  for (std::size_t i = 0; i < style.cell_ramp.size(); ++i) {
    out << "<stop offset=\"" << num(double(i) / double(style.cell_ramp.size() - 1)) << "\" stop-color=\""
        << style.cell_ramp[i] << "\"/>";
  }
  out << "</linearGradient></defs>\n";

  panel_svg(out, layout.origin_panel, "o", style, layout.origin_leaders, layout.origin_radius, layout.origin_shade,
            style.out_circle_fill, [&](const std::string& id) { return lit.origin_path(id); });
  panel_svg(out, layout.destination_panel, "d", style, layout.dest_leaders, layout.destination_radius,
            layout.destination_shade, style.in_circle_fill,
            [&](const std::string& id) { return lit.destination_path(id); });

  // Arrow into a box: marks the lower panel as the destinations.
  const Point icon = layout.destination_panel.box.min() + Point(2.0, 8.0);
  out << "<g id=\"destination-icon\" transform=\"translate(" << num(icon.x()) << " " << num(icon.y())
      << ")\" fill=\"none\" stroke=\"#404040\" stroke-width=\"1.2\"><path d=\"M0 4 L0 14 L14 14 L14 4\"/>"
      << "<path d=\"M7 -6 L7 9 M3 5 L7 9 L11 5\"/></g>\n";

  // Cells in the matrix frame: x along columns, -y along rows.
  const double max_flow = data.max_flow();
  out << "<g id=\"matrix\" transform=\"translate(" << num(mx.left.x()) << " " << num(mx.left.y())
      << ") rotate(45)\">\n";
  for (int r = 0; r < M; ++r) {
    const std::size_t i = layout.row_order[static_cast<std::size_t>(r)];
    const std::string& oid = data.origins()[i].id;
    for (int c = 0; c < N; ++c) {
      const std::size_t j = layout.col_order[static_cast<std::size_t>(c)];
      const std::string& did = data.destinations()[j].id;
      const double v = data.flows()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      const std::string fill = max_flow > 0.0 ? color_for_flow(v, max_flow, style) : style.cell_ramp[0];
      out << "<rect id=\"cell-" << esc(oid) << "-" << esc(did) << "\" class=\"" << cls("cell", lit.cell(oid, did))
          << "\" x=\"" << num(c * cell) << "\" y=\"" << num(-(M - r) * cell) << "\" width=\"" << num(cell)
          << "\" height=\"" << num(cell) << "\" fill=\"" << fill << "\"/>\n";
    }
  }
  for (int r = mx.separator_every; r < M; r += mx.separator_every) {
    out << "<line class=\"separator\" x1=\"0.00\" y1=\"" << num(-(M - r) * cell) << "\" x2=\"" << num(N * cell)
        << "\" y2=\"" << num(-(M - r) * cell) << "\"/>\n";
  }
  for (int c = mx.separator_every; c < N; c += mx.separator_every) {
    out << "<line class=\"separator\" x1=\"" << num(c * cell) << "\" y1=\"" << num(-M * cell) << "\" x2=\""
        << num(c * cell) << "\" y2=\"0.00\"/>\n";
  }
  if (style.legacy_bars) {
    const double out_max = data.totals_out().maxCoeff();
    const double in_max = data.totals_in().maxCoeff();
    const double len = 2.5 * cell;
    for (int r = 0; r < M; ++r) {
      const double t = data.totals_out()(static_cast<Eigen::Index>(layout.row_order[r]));
      out << "<rect class=\"bar\" x=\"" << num(N * cell + 2.0) << "\" y=\"" << num(-(M - r) * cell + 1.0)
          << "\" width=\"" << num(out_max > 0 ? len * t / out_max : 0.0) << "\" height=\"" << num(cell - 2.0)
          << "\" fill=\"#969696\"/>\n";
    }
    for (int c = 0; c < N; ++c) {
      const double t = data.totals_in()(static_cast<Eigen::Index>(layout.col_order[c]));
      const double w = in_max > 0 ? len * t / in_max : 0.0;
      out << "<rect class=\"bar\" x=\"" << num(c * cell + 1.0) << "\" y=\"" << num(-M * cell - 2.0 - w)
          << "\" width=\"" << num(cell - 2.0) << "\" height=\"" << num(w) << "\" fill=\"#969696\"/>\n";
    }
  }
  out << "</g>\n";

  // Colour key with the value range.
  const double key_w = std::min(200.0, width - 2.0 * margin);
  out << "<g id=\"color-key\" class=\"key\">\n<rect x=\"" << num(margin) << "\" y=\"" << num(key_top)
      << "\" width=\"" << num(key_w) << "\" height=\"12.00\" fill=\"url(#cell-ramp)\" stroke=\"#808080\"/>\n"
      << "<text x=\"" << num(margin) << "\" y=\"" << num(key_top + 12.0 + style.key_font_size + 2.0)
      << "\">0</text>\n<text x=\"" << num(margin + key_w) << "\" y=\""
      << num(key_top + 12.0 + style.key_font_size + 2.0) << "\" text-anchor=\"end\">" << short_num(max_flow)
      << "</text>\n</g>\n";
  out << "</svg>\n";
  return out.str();
}

}  // namespace maptrix
