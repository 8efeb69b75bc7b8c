#include "maptrix/maptrix_assembler.hpp"

#include "maptrix/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace maptrix {

namespace {
constexpr double kSqrt2 = 1.4142135623730951;
}

Point MatrixGeometry::row_step() const {
  const double h = cell_size / kSqrt2;
  return {h, -h};
}

Point MatrixGeometry::col_step() const {
  const double h = cell_size / kSqrt2;
  return {h, h};
}

std::array<Point, 4> MatrixGeometry::cell_corners(int r, int c) const {
  const Point base = left + double(rows - 1 - r) * row_step() + double(c) * col_step();
  return {base, base + row_step(), base + row_step() + col_step(), base + col_step()};
}

std::array<Point, 4> MatrixGeometry::outline() const {
  const Point top = left + double(rows) * row_step();
  const Point bottom = left + double(cols) * col_step();
  return {left, top, top + double(cols) * col_step(), bottom};
}

MatrixGeometry make_matrix(Point left, double cell_size, int rows, int cols, int separator_every) {
  if (rows < 1 || cols < 1) throw ValidationError("matrix needs at least one row and one column");
  if (!(cell_size > 0.0)) throw ValidationError("matrix cell size must be > 0");
  if (separator_every < 2) throw ValidationError("separator_every must be >= 2");
  MatrixGeometry g;
  g.left = left;
  g.cell_size = cell_size;
  g.rows = rows;
  g.cols = cols;
  g.separator_every = separator_every;
  const auto o = g.outline();
  g.center = 0.5 * (o[0] + o[2]);
  for (int r = 0; r < rows; ++r) {
    g.row_ports.push_back(Port{r, left + (rows - 1 - r + 0.5) * g.row_step(), EdgeSide::origin_edge});
  }
  for (int c = 0; c < cols; ++c) {
    g.col_ports.push_back(Port{c, left + (c + 0.5) * g.col_step(), EdgeSide::destination_edge});
  }
  return g;
}

const char* to_string(LayoutMode mode) { return mode == LayoutMode::same_country ? "same-country" : "two-country"; }

void validate(const LayoutConfig& config) {
  validate(config.labelling);
  validate(config.refinement);
  if (!(config.panel_width > 0.0 && config.panel_height > 0.0 && config.max_cell_size > 0.0)) {
    throw ValidationError("panel sizes must be > 0");
  }
  if (!(config.margin >= 0.0 && config.min_corridor > 0.0 && config.max_corridor >= config.min_corridor)) {
    throw ValidationError("corridor must satisfy 0 < min_corridor <= max_corridor");
  }
  if (config.separator_every < 2) throw ValidationError("separator_every must be >= 2");
  if (!(config.style.circle_max_radius >= 0.0)) throw ValidationError("circle_max_radius must be >= 0");
}

// ---------------------------------------------------------------------------

Box GeometryCache::rectangle(const Region& region, double tol) {
  {
    std::lock_guard lock(mutex_);
    auto [first, last] = entries_.equal_range(region.id);
    for (auto it = first; it != last; ++it) {
      const Entry& e = it->second;
      if (e.tol == tol && e.anchor == region.anchor && e.boundary == region.boundary) {
        ++hits_;
        return e.box;
      }
    }
  }
  const Box box = grow_rectangle(region, region.anchor, tol);
  std::lock_guard lock(mutex_);
  entries_.emplace(region.id, Entry{region.boundary, region.anchor, tol, box});
  return box;
}

std::size_t GeometryCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

std::size_t GeometryCache::hits() const {
  std::lock_guard lock(mutex_);
  return hits_;
}

// ---------------------------------------------------------------------------

namespace {

Box regions_extent(const std::vector<Region>& regions) {
  Box box;
  for (const auto& r : regions) box.extend(bounding_box(r.boundary));
  return box;
}

/// Scales `regions` uniformly into `panel` (centred, 4 px inside), using
/// `reference` for the scale so relayouts keep the map still.
MapPanel fit_panel(const std::vector<Region>& regions, const Box& reference, const Box& panel, EdgeSide side) {
  constexpr double pad = 4.0;
  MapPanel out;
  out.side = side;
  out.box = panel;
  const Point size = reference.sizes().cwiseMax(1e-12);
  const Point room = (panel.sizes() - Point(2 * pad, 2 * pad)).cwiseMax(1e-6);
  out.scale = std::min(room.x() / size.x(), room.y() / size.y());
  out.offset = panel.center() - out.scale * reference.center();
  out.regions.reserve(regions.size());
  for (const auto& r : regions) {
    Region t = r;
    for (auto& p : t.boundary) p = out.scale * p + out.offset;
    t.anchor = out.scale * r.anchor + out.offset;
    out.regions.push_back(std::move(t));
  }
  return out;
}

std::vector<Point> anchors_of(const MapPanel& panel) {
  std::vector<Point> out;
  for (const auto& r : panel.regions) out.push_back(r.anchor);
  return out;
}

std::vector<std::string> ids_of(const MapPanel& panel) {
  std::vector<std::string> out;
  for (const auto& r : panel.regions) out.push_back(r.id);
  return out;
}

struct Side {
  const MapPanel* panel = nullptr;
  std::vector<Point> sites;
  std::vector<std::size_t> port_of_site;  // rank per region
};

/// Leftmost position the bends may all reach, or SteepLeaderError.
double port_line_for(std::span<const Side> sides, const std::vector<const std::vector<Port>*>& ports,
                     const LayoutConfig& config, double map_right) {
  const double k = config.labelling.k;
  double needed = map_right + config.min_corridor;
  for (std::size_t s = 0; s < sides.size(); ++s) {
    for (std::size_t i = 0; i < sides[s].sites.size(); ++i) {
      const Point& site = sides[s].sites[i];
      const double dy = std::abs((*ports[s])[sides[s].port_of_site[i]].position.y() - site.y());
      needed = std::max(needed, site.x() + dy / k);
    }
  }
  const double limit = map_right + config.max_corridor;
  if (needed > limit) {
    double min_k = k;
    for (std::size_t s = 0; s < sides.size(); ++s) {
      for (std::size_t i = 0; i < sides[s].sites.size(); ++i) {
        const Point& site = sides[s].sites[i];
        const double dy = std::abs((*ports[s])[sides[s].port_of_site[i]].position.y() - site.y());
        min_k = std::max(min_k, dy / (limit - site.x()));
      }
    }
    std::ostringstream msg;
    msg << "leaders need a corridor of " << (needed - map_right) << " px at k=" << k << "; the limit is "
        << config.max_corridor << " px (k >= " << min_k << " fits)";
    throw SteepLeaderError(msg.str(), min_k);
  }
  return needed;
}

struct RoutedSide {
  std::vector<LeaderRoute> leaders;
  RefinedLayoutDelta refinement;
  int crossings = 0;
};

RoutedSide route_side(const Side& side, const std::vector<Port>& ports, const LayoutConfig& config,
                      const LabellingConfig& labelling, GeometryCache& cache) {
  RoutedSide out;
  for (std::size_t i = 0; i < side.sites.size(); ++i) {
    out.leaders.push_back(route_leader(side.sites[i], ports[side.port_of_site[i]], labelling));
  }
  if (config.refine) {
    std::vector<Box> grown;
    for (const auto& r : side.panel->regions) grown.push_back(cache.rectangle(r, config.refinement.rect_tol));
    out.refinement = refine(out.leaders, side.panel->regions, config.refinement, labelling, grown);
    out.leaders = out.refinement.routes;
  }
  out.crossings = static_cast<int>(verify_crossing_free(out.leaders).size());
  return out;
}

std::vector<std::size_t> order_from(const std::vector<std::size_t>& port_of_site) {
  std::vector<std::size_t> order(port_of_site.size());
  for (std::size_t i = 0; i < port_of_site.size(); ++i) order[port_of_site[i]] = i;
  return order;
}

MapTrixLayout build(std::shared_ptr<const FlowDataset> dataset, std::shared_ptr<const FlowDataset> source,
                    LayoutMode mode, const LayoutConfig& config, std::shared_ptr<GeometryCache> cache) {
  validate(config);
  if (!dataset) throw ValidationError("layout needs a dataset");
  if (dataset->origin_count() == 0) throw ValidationError("layout needs at least one origin region");
  if (dataset->destination_count() == 0) throw ValidationError("layout needs at least one destination region");
  if (mode == LayoutMode::same_country) {
    if (dataset->origin_count() != dataset->destination_count()) {
      throw ModeError("same-country layout needs a square matrix, got " + std::to_string(dataset->origin_count()) +
                      "x" + std::to_string(dataset->destination_count()));
    }
    if (!dataset->same_regions()) throw ModeError("same-country layout needs identical origin and destination regions");
  }
  if (!source) source = dataset;
  if (!cache) cache = std::make_shared<GeometryCache>();

  MapTrixLayout out;
  out.source = source;
  out.dataset = dataset;
  out.mode = mode;
  out.config = config;
  out.cache = cache;

  const int M = static_cast<int>(dataset->origin_count());
  const int N = static_cast<int>(dataset->destination_count());
  const double cell = std::min(config.max_cell_size, config.panel_height * kSqrt2 / std::max(M, N));
  const double h = cell / kSqrt2;
  const double y_left = config.margin + M * h;
  const double x0 = config.margin;
  const double map_right = x0 + config.panel_width;

  // The destination panel is the origin panel moved down by M*h, which keeps
  // the mirrored ordering crossing-free in the same-country case.
  const Box origin_box(Point(x0, y_left - M * h), Point(map_right, y_left));
  const Box dest_box(Point(x0, y_left), Point(map_right, y_left + N * h));
  const Box origin_ref = regions_extent(source->origins());
  const Box dest_ref = mode == LayoutMode::same_country ? origin_ref : regions_extent(source->destinations());
  out.origin_panel = fit_panel(dataset->origins(), origin_ref, origin_box, EdgeSide::origin_edge);
  out.destination_panel = fit_panel(dataset->destinations(), dest_ref, dest_box, EdgeSide::destination_edge);

  // Ports depend on the left vertex only through x; the assignment uses y.
  LabellingConfig labelling = config.labelling;
  labelling.port_spacing = cell;
  labelling.port_line_x = map_right + config.min_corridor;
  MatrixGeometry provisional = make_matrix(Point(labelling.port_line_x, y_left), cell, M, N, config.separator_every);

  std::array<Side, 2> sides;
  sides[0].panel = &out.origin_panel;
  sides[0].sites = anchors_of(out.origin_panel);
  sides[0].port_of_site =
      assign_ports(sides[0].sites, provisional.row_ports, labelling, ids_of(out.origin_panel)).port_of_site;
  sides[1].panel = &out.destination_panel;
  sides[1].sites = anchors_of(out.destination_panel);
  if (mode == LayoutMode::same_country) {
    sides[1].port_of_site = sides[0].port_of_site;
  } else {
    sides[1].port_of_site =
        assign_ports(sides[1].sites, provisional.col_ports, labelling, ids_of(out.destination_panel)).port_of_site;
  }

  labelling.port_line_x = port_line_for(sides, {&provisional.row_ports, &provisional.col_ports}, config, map_right);
  out.matrix = make_matrix(Point(labelling.port_line_x, y_left), cell, M, N, config.separator_every);
  out.config.labelling = labelling;

  auto origin = route_side(sides[0], out.matrix.row_ports, config, labelling, *cache);
  auto dest = route_side(sides[1], out.matrix.col_ports, config, labelling, *cache);
  out.origin_leaders = std::move(origin.leaders);
  out.origin_refinement = std::move(origin.refinement);
  out.origin_crossings = origin.crossings;
  out.dest_leaders = std::move(dest.leaders);
  out.dest_refinement = std::move(dest.refinement);
  out.destination_crossings = dest.crossings;
  out.row_order = order_from(sides[0].port_of_site);
  out.col_order = order_from(sides[1].port_of_site);

  const auto& out_tot = dataset->totals_out();
  const auto& in_tot = dataset->totals_in();
  const double max_total = std::max(out_tot.maxCoeff(), in_tot.maxCoeff());
  for (Eigen::Index i = 0; i < M; ++i) {
    out.origin_radius.push_back(max_total > 0 ? circle_radius(out_tot(i), max_total, config.style) : 0.0);
    out.origin_shade.push_back(out_tot.maxCoeff() > 0 ? out_tot(i) / out_tot.maxCoeff() : 0.0);
  }
  for (Eigen::Index j = 0; j < N; ++j) {
    out.destination_radius.push_back(max_total > 0 ? circle_radius(in_tot(j), max_total, config.style) : 0.0);
    out.destination_shade.push_back(in_tot.maxCoeff() > 0 ? in_tot(j) / in_tot.maxCoeff() : 0.0);
  }
  const double max_flow = dataset->max_flow();
  out.cell_colors.reserve(static_cast<std::size_t>(M) * N);
  for (Eigen::Index i = 0; i < M; ++i) {
    for (Eigen::Index j = 0; j < N; ++j) {
      const double v = dataset->flows()(i, j);
      out.cell_colors.push_back(max_flow > 0 ? color_for_flow(v, max_flow, config.style) : config.style.cell_ramp[0]);
    }
  }
  return out;
}

}  // namespace

MapTrixLayout layout(std::shared_ptr<const FlowDataset> dataset, const LayoutConfig& config,
                     std::shared_ptr<GeometryCache> cache) {
  return build(dataset, nullptr, LayoutMode::same_country, config, std::move(cache));
}

MapTrixLayout layout_two_country(std::shared_ptr<const FlowDataset> dataset, const LayoutConfig& config,
                                 std::shared_ptr<GeometryCache> cache) {
  return build(dataset, nullptr, LayoutMode::two_country, config, std::move(cache));
}

FlowDataset apply_selection(const FlowDataset& source, const SelectionState& selection) {
  FlowDataset reduced = selection.groups.empty() ? source : aggregate(source, selection.groups);
  if (selection.range) reduced = filter_by_range(reduced, (*selection.range)[0], (*selection.range)[1]).dataset;
  return reduced;
}

MapTrixLayout relayout(const MapTrixLayout& layout, const SelectionState& selection) {
  if (!layout.source) throw ValidationError("relayout needs a layout built from a dataset");
  std::shared_ptr<const FlowDataset> reduced = layout.source;
  if (!selection.groups.empty() || selection.range) {
    reduced = std::make_shared<const FlowDataset>(apply_selection(*layout.source, selection));
  }
  return build(reduced, layout.source, layout.mode, layout.config, layout.cache);
}

}  // namespace maptrix
