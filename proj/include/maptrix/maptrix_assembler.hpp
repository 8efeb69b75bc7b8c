#pragma once

#include "maptrix/boundary_labeller.hpp"
#include "maptrix/flow_model.hpp"
#include "maptrix/leader_refiner.hpp"
#include "maptrix/svg_renderer.hpp"

#include <array>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace maptrix {

/// The OD matrix turned by 45 degrees. `left` is the vertex facing the maps;
/// row ports sit on the upper-left edge, column ports on the lower-left edge.
struct MatrixGeometry {
  Point left = Point::Zero();
  Point center = Point::Zero();
  double cell_size = 0.0;
  double rotation_deg = 45.0;
  int rows = 0;
  int cols = 0;
  /// row_ports[r] serves row rank r (top to bottom), col_ports[c] column rank c.
  std::vector<Port> row_ports;
  std::vector<Port> col_ports;
  int separator_every = 5;

  /// Unit step along a row edge (towards the top vertex) and a column edge.
  Point row_step() const;
  Point col_step() const;
  /// Corners of the cell at row rank r, column rank c, clockwise from the
  /// corner nearest the left vertex.
  std::array<Point, 4> cell_corners(int r, int c) const;
  std::array<Point, 4> outline() const;
};

/// Builds the matrix and its ports. Throws ValidationError on bad sizes.
MatrixGeometry make_matrix(Point left, double cell_size, int rows, int cols, int separator_every = 5);

enum class LayoutMode { same_country, two_country };
const char* to_string(LayoutMode mode);

struct LayoutConfig {
  LabellingConfig labelling;
  RefinementConfig refinement;
  bool refine = true;
  double panel_width = 360.0;
  double panel_height = 360.0;
  double max_cell_size = 64.0;
  double margin = 16.0;
  /// Horizontal room between the map panels and the matrix, grown when the
  /// leaders need more and capped by max_corridor.
  double min_corridor = 24.0;
  double max_corridor = 720.0;
  int separator_every = 5;
  /// Glyph sizes and cell colours.
  StyleSpec style;
};

void validate(const LayoutConfig& config);

/// One map in layout coordinates: regions are the dataset's regions scaled by
/// `scale` and moved by `offset`.
struct MapPanel {
  EdgeSide side = EdgeSide::origin_edge;
  Box box;
  double scale = 1.0;
  Point offset = Point::Zero();
  std::vector<Region> regions;
};

/// Rectangles grown inside region polygons, reused across relayouts.
class GeometryCache {
 public:
  Box rectangle(const Region& region, double tol);
  std::size_t size() const;
  std::size_t hits() const;

 private:
  struct Entry {
    Polygon boundary;
    Point anchor;
    double tol;
    Box box;
  };
  mutable std::mutex mutex_;
  std::multimap<std::string, Entry> entries_;
  std::size_t hits_ = 0;
};

struct Highlight {
  enum class Kind { origin, destination, cell };
  Kind kind = Kind::origin;
  std::string origin_id;
  std::string destination_id;

  friend bool operator==(const Highlight&, const Highlight&) = default;
};

/// Active range filter, region groups and highlighted elements.
struct SelectionState {
  std::optional<std::array<double, 2>> range;
  std::vector<RegionGroup> groups;
  std::vector<Highlight> highlights;
  std::uint64_t version = 0;
};

struct MapTrixLayout {
  /// Dataset the session started from; relayout always begins here.
  std::shared_ptr<const FlowDataset> source;
  /// Dataset on screen after selection.
  std::shared_ptr<const FlowDataset> dataset;
  LayoutMode mode = LayoutMode::same_country;
  LayoutConfig config;
  MapPanel origin_panel;
  MapPanel destination_panel;
  MatrixGeometry matrix;
  /// row_order[r] / col_order[c] is the origin / destination index at that rank.
  std::vector<std::size_t> row_order;
  std::vector<std::size_t> col_order;
  /// Indexed like the dataset's origins / destinations.
  std::vector<LeaderRoute> origin_leaders;
  std::vector<LeaderRoute> dest_leaders;
  std::vector<double> origin_radius;
  std::vector<double> destination_radius;
  std::vector<double> origin_shade;
  std::vector<double> destination_shade;
  /// Row-major over dataset indices (origin i, destination j).
  std::vector<std::string> cell_colors;
  /// Crossings left after refinement; zero in every layout we emit normally.
  int origin_crossings = 0;
  int destination_crossings = 0;
  RefinedLayoutDelta origin_refinement;
  RefinedLayoutDelta dest_refinement;
  std::shared_ptr<GeometryCache> cache;

  std::size_t leader_count() const { return origin_leaders.size() + dest_leaders.size(); }
};

/// Same-country layout: one region set on both axes, shared ordering.
MapTrixLayout layout(std::shared_ptr<const FlowDataset> dataset, const LayoutConfig& config = {},
                     std::shared_ptr<GeometryCache> cache = nullptr);

/// Independent orderings for origins and destinations.
MapTrixLayout layout_two_country(std::shared_ptr<const FlowDataset> dataset, const LayoutConfig& config = {},
                                 std::shared_ptr<GeometryCache> cache = nullptr);

/// Reduces the source dataset by the selection (groups first, then the range)
/// and lays it out again in the same mode, reusing the geometry cache.
MapTrixLayout relayout(const MapTrixLayout& layout, const SelectionState& selection);

/// The dataset a selection produces from `source`.
FlowDataset apply_selection(const FlowDataset& source, const SelectionState& selection);

}  // namespace maptrix
