#pragma once

#include <array>
#include <iosfwd>
#include <string>

namespace maptrix {

struct MapTrixLayout;
struct SelectionState;

/// Visual encodings. The default cell ramp is the 9-class ColorBrewer YlOrRd,
/// interpolated continuously.
struct StyleSpec {
  std::array<std::string, 9> cell_ramp = {"#FFFFCC", "#FFEDA0", "#FED976", "#FEB24C", "#FD8D3C",
                                          "#FC4E2A", "#E31A1C", "#BD0026", "#800026"};
  /// Position on the ramp follows log1p(value) instead of value.
  bool log_scale = false;
  double circle_max_radius = 12.0;
  double label_font_size = 11.0;
  double key_font_size = 10.0;
  /// Grey used for the smallest and the largest totals on leaders and labels.
  std::string grey_light = "#D0D0D0";
  std::string grey_dark = "#252525";
  double leader_width = 1.2;
  double separator_width = 2.0;
  std::string region_fill = "#F4F4F0";
  std::string region_stroke = "#9A9A9A";
  std::string out_circle_fill = "#6A51A3";
  std::string in_circle_fill = "#238B45";
  std::string highlight_color = "#1F78B4";
  double highlight_width = 2.0;
  /// Total-flow bar charts along the matrix edges (older design).
  bool legacy_bars = false;
};

/// JSON object with any subset of the StyleSpec field names.
StyleSpec load_style(std::istream& json);

/// Position of `value` on the ramp in [0, 1]. Throws ValidationError unless max_flow > 0.
double ramp_position(double value, double max_flow, const StyleSpec& style);

/// Piecewise-linear RGB interpolation of the ramp anchors, as "#RRGGBB".
std::string color_for_flow(double value, double max_flow, const StyleSpec& style);

/// Area-proportional glyph radius.
double circle_radius(double total, double max_total, const StyleSpec& style);

/// Grey between grey_light (share 0) and grey_dark (share 1).
std::string grey_for_share(double share, const StyleSpec& style);

/// Standalone SVG 1.1 document. Element ids: region-o-<id>, region-d-<id>,
/// leader-o-<id>, leader-d-<id>, cell-<oid>-<did>. Highlighted elements carry
/// class "hl".
std::string render(const MapTrixLayout& layout, const StyleSpec& style, const SelectionState* highlights = nullptr);

}  // namespace maptrix
