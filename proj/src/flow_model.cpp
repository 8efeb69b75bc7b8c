#include "maptrix/flow_model.hpp"

#include "maptrix/errors.hpp"

#include <boost/geometry.hpp>
#include <boost/geometry/geometries/point_xy.hpp>
#include <boost/geometry/geometries/polygon.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <iterator>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

namespace maptrix {

namespace bg = boost::geometry;
using BgPoint = bg::model::d2::point_xy<double>;
using BgPolygon = bg::model::polygon<BgPoint, /*clockwise=*/false>;
using BgMultiPolygon = bg::model::multi_polygon<BgPolygon>;
using nlohmann::json;

Region make_region(std::string id, std::string name, Polygon boundary) {
  if (boundary.size() >= 2 && boundary.front() == boundary.back()) boundary.pop_back();
  if (boundary.size() < 3) {
    throw GeometryError("region '" + id + "' has fewer than 3 vertices");
  }
  const double area = signed_area(boundary);
  const double scale = bounding_box(boundary).diagonal().squaredNorm();
  if (!(std::abs(area) > 1e-12 * scale)) {
    throw GeometryError("region '" + id + "' has zero area");
  }
  if (!is_simple(boundary)) {
    throw GeometryError("region '" + id + "' boundary self-intersects");
  }
  if (area < 0.0) std::reverse(boundary.begin(), boundary.end());
  Region region{std::move(id), std::move(name), std::move(boundary), Point::Zero()};
  region.anchor = default_anchor(region.boundary);
  if (!point_in_polygon(region.anchor, region.boundary)) {
    throw GeometryError("region '" + region.id + "' has no interior anchor");
  }
  return region;
}

namespace {

void check_unique_ids(const std::vector<Region>& regions, const char* side) {
  std::set<std::string> seen;
  for (const auto& r : regions) {
    if (!seen.insert(r.id).second) {
      throw ValidationError(std::string("duplicate ") + side + " id '" + r.id + "'");
    }
  }
}

}  // namespace

FlowDataset::FlowDataset(std::vector<Region> origins, std::vector<Region> destinations, Eigen::MatrixXd flows)
    : origins_(std::move(origins)), destinations_(std::move(destinations)), flows_(std::move(flows)) {
  if (flows_.rows() != static_cast<Eigen::Index>(origins_.size()) ||
      flows_.cols() != static_cast<Eigen::Index>(destinations_.size())) {
    throw ValidationError("flow matrix is " + std::to_string(flows_.rows()) + "x" +
                          std::to_string(flows_.cols()) + " but there are " + std::to_string(origins_.size()) +
                          " origins and " + std::to_string(destinations_.size()) + " destinations");
  }
  if (flows_.size() > 0 && !flows_.allFinite()) throw ValidationError("flow matrix has non-finite entries");
  if (flows_.size() > 0 && flows_.minCoeff() < 0.0) throw ValidationError("negative flow");
  check_unique_ids(origins_, "origin");
  check_unique_ids(destinations_, "destination");
  totals_out_ = flows_.rowwise().sum();
  totals_in_ = flows_.colwise().sum().transpose();
}

bool FlowDataset::same_regions() const {
  if (origins_.size() != destinations_.size()) return false;
  for (std::size_t i = 0; i < origins_.size(); ++i) {
    if (origins_[i].id != destinations_[i].id) return false;
  }
  return true;
}

std::optional<Eigen::Index> FlowDataset::origin_index(const std::string& id) const {
  for (std::size_t i = 0; i < origins_.size(); ++i) {
    if (origins_[i].id == id) return static_cast<Eigen::Index>(i);
  }
  return std::nullopt;
}

std::optional<Eigen::Index> FlowDataset::destination_index(const std::string& id) const {
  for (std::size_t i = 0; i < destinations_.size(); ++i) {
    if (destinations_[i].id == id) return static_cast<Eigen::Index>(i);
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Ingestion

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n\xEF\xBB\xBF");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cell += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      cells.push_back(trim(cell));
      cell.clear();
    } else {
      cell += ch;
    }
  }
  cells.push_back(trim(cell));
  return cells;
}

struct CsvMatrix {
  std::vector<std::string> row_ids;
  std::vector<std::string> col_ids;
  Eigen::MatrixXd values;
};

CsvMatrix parse_flow_csv(std::istream& in) {
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    rows.push_back(split_csv_line(line));
  }
  if (rows.size() < 2 || rows.front().size() < 2) {
    throw IngestError("flow CSV needs a header row and at least one data row");
  }
  CsvMatrix out;
  out.col_ids.assign(rows.front().begin() + 1, rows.front().end());
  const std::size_t cols = out.col_ids.size();
  out.values.resize(static_cast<Eigen::Index>(rows.size() - 1), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& cells = rows[r];
    if (cells.size() != cols + 1) {
      throw IngestError("flow CSV row " + std::to_string(r + 1) + " has " + std::to_string(cells.size()) +
                        " cells, expected " + std::to_string(cols + 1));
    }
    out.row_ids.push_back(cells[0]);
    for (std::size_t c = 0; c < cols; ++c) {
      const std::string& text = cells[c + 1];
      double value = 0.0;
      const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
      if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value)) {
        throw IngestError("flow CSV cell (" + cells[0] + ", " + out.col_ids[c] + ") is not a number: '" +
                          text + "'");
      }
      if (value < 0.0) {
        throw ValidationError("negative flow " + text + " from " + cells[0] + " to " + out.col_ids[c]);
      }
      out.values(static_cast<Eigen::Index>(r - 1), static_cast<Eigen::Index>(c)) = value;
    }
  }
  return out;
}

struct RawFeature {
  std::string id;
  std::string name;
  std::vector<Point> lonlat;
};

std::vector<Point> read_ring(const json& coords) {
  std::vector<Point> ring;
  for (const auto& pos : coords) {
    if (!pos.is_array() || pos.size() < 2) throw IngestError("boundary position is not [x, y]");
    ring.emplace_back(pos[0].get<double>(), pos[1].get<double>());
  }
  if (ring.size() >= 2 && ring.front() == ring.back()) ring.pop_back();
  return ring;
}

std::vector<RawFeature> parse_boundaries(std::istream& in) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw IngestError(std::string("boundary file is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("features") || !doc["features"].is_array()) {
    throw IngestError("boundary file is not a FeatureCollection");
  }
  std::vector<RawFeature> features;
  try {
    for (const auto& f : doc["features"]) {
      RawFeature raw;
      const json props = f.value("properties", json::object());
      if (props.is_object() && props.contains("id")) {
        raw.id = props["id"].is_string() ? props["id"].get<std::string>() : props["id"].dump();
      } else if (f.contains("id")) {
        raw.id = f["id"].is_string() ? f["id"].get<std::string>() : f["id"].dump();
      } else {
        throw IngestError("boundary feature without an id property");
      }
      raw.name = props.is_object() && props.contains("name") && props["name"].is_string()
                     ? props["name"].get<std::string>()
                     : raw.id;
      const json& geom = f.at("geometry");
      const std::string type = geom.at("type").get<std::string>();
      if (type == "Polygon") {
        raw.lonlat = read_ring(geom.at("coordinates").at(0));
      } else if (type == "MultiPolygon") {
        double best_area = -1.0;
        for (const auto& part : geom.at("coordinates")) {
          auto ring = read_ring(part.at(0));
          const double area = ring.size() >= 3 ? std::abs(signed_area(ring)) : 0.0;
          if (area > best_area) {
            best_area = area;
            raw.lonlat = std::move(ring);
          }
        }
      } else {
        throw IngestError("unsupported geometry type '" + type + "' for feature " + raw.id);
      }
      features.push_back(std::move(raw));
    }
  } catch (const json::exception& e) {
    throw IngestError(std::string("malformed boundary feature: ") + e.what());
  }
  return features;
}

/// Projects and fits every feature of one boundary file into the panel box.
void project_features(std::vector<RawFeature>& features, const Projection& projection) {
  Box extent;
  for (const auto& f : features) {
    for (const auto& p : f.lonlat) extent.extend(p);
  }
  if (extent.isEmpty()) throw IngestError("boundary file has no coordinates");
  const bool geo = projection.kind == Projection::Kind::equirectangular;
  const double mid_lat = 0.5 * (extent.min().y() + extent.max().y());
  const double cos_lat = geo ? std::cos(mid_lat * std::numbers::pi / 180.0) : 1.0;
  auto project = [&](const Point& p) { return geo ? Point(p.x() * cos_lat, -p.y()) : p; };

  Box projected;
  for (const auto& f : features) {
    for (const auto& p : f.lonlat) projected.extend(project(p));
  }
  const Point size = projected.sizes();
  const double avail_w = projection.width - 2.0 * projection.padding;
  const double avail_h = projection.height - 2.0 * projection.padding;
  if (!(avail_w > 0.0 && avail_h > 0.0)) throw ValidationError("projection panel box is empty");
  double scale = std::min(size.x() > 0 ? avail_w / size.x() : INFINITY, size.y() > 0 ? avail_h / size.y() : INFINITY);
  if (!std::isfinite(scale)) throw GeometryError("boundary file has degenerate extent");
  const Point offset = Point(projection.width, projection.height) * 0.5 - scale * projected.center();
  for (auto& f : features) {
    for (auto& p : f.lonlat) p = scale * project(p) + offset;
  }
}

std::map<std::string, RawFeature> index_features(std::vector<RawFeature> features) {
  std::map<std::string, RawFeature> by_id;
  for (auto& f : features) {
    const std::string id = f.id;
    if (!by_id.emplace(id, std::move(f)).second) throw IngestError("duplicate boundary feature id '" + id + "'");
  }
  return by_id;
}

std::vector<Region> build_side(const std::vector<std::string>& ids, std::map<std::string, RawFeature>& by_id) {
  std::vector<Region> regions;
  regions.reserve(ids.size());
  for (const auto& id : ids) {
    auto& f = by_id.at(id);
    regions.push_back(make_region(id, f.name, f.lonlat));
  }
  return regions;
}

void require_matched(const std::vector<std::string>& csv_ids, const std::map<std::string, RawFeature>& by_id,
                     std::set<std::string>& unmatched) {
  for (const auto& id : csv_ids) {
    if (!by_id.count(id)) unmatched.insert(id);
  }
}

[[noreturn]] void throw_unmatched(const std::set<std::string>& unmatched) {
  std::string list;
  for (const auto& id : unmatched) list += (list.empty() ? "" : ", ") + id;
  throw IngestError("ids without a match between flows and boundaries: " + list,
                    std::vector<std::string>(unmatched.begin(), unmatched.end()));
}

void require_positive(const CsvMatrix& csv) {
  if (!(csv.values.size() > 0 && csv.values.maxCoeff() > 0.0)) {
    throw ValidationError("flow matrix has no positive flow");
  }
}

}  // namespace

FlowDataset load_dataset(std::istream& flow_csv, std::istream& boundaries, const Projection& projection) {
  CsvMatrix csv = parse_flow_csv(flow_csv);
  auto features = parse_boundaries(boundaries);
  auto by_id = index_features(std::move(features));

  std::set<std::string> unmatched;
  require_matched(csv.row_ids, by_id, unmatched);
  require_matched(csv.col_ids, by_id, unmatched);
  const std::set<std::string> used(csv.row_ids.begin(), csv.row_ids.end());
  for (const auto& [id, f] : by_id) {
    if (!used.count(id) && std::find(csv.col_ids.begin(), csv.col_ids.end(), id) == csv.col_ids.end()) {
      unmatched.insert(id);
    }
  }
  if (!unmatched.empty()) throw_unmatched(unmatched);
  require_positive(csv);

  std::vector<RawFeature> ordered;
  for (auto& [id, f] : by_id) ordered.push_back(f);
  project_features(ordered, projection);
  by_id = index_features(std::move(ordered));

  auto origins = build_side(csv.row_ids, by_id);
  auto destinations = build_side(csv.col_ids, by_id);
  return FlowDataset(std::move(origins), std::move(destinations), std::move(csv.values));
}

FlowDataset load_two_country(std::istream& flow_csv, std::istream& origin_boundaries,
                             std::istream& destination_boundaries, const Projection& projection) {
  CsvMatrix csv = parse_flow_csv(flow_csv);
  auto origin_features = parse_boundaries(origin_boundaries);
  auto dest_features = parse_boundaries(destination_boundaries);
  project_features(origin_features, projection);
  project_features(dest_features, projection);
  auto origin_by_id = index_features(std::move(origin_features));
  auto dest_by_id = index_features(std::move(dest_features));

  std::set<std::string> unmatched;
  require_matched(csv.row_ids, origin_by_id, unmatched);
  require_matched(csv.col_ids, dest_by_id, unmatched);
  for (const auto& [id, f] : origin_by_id) {
    if (std::find(csv.row_ids.begin(), csv.row_ids.end(), id) == csv.row_ids.end()) unmatched.insert(id);
  }
  for (const auto& [id, f] : dest_by_id) {
    if (std::find(csv.col_ids.begin(), csv.col_ids.end(), id) == csv.col_ids.end()) unmatched.insert(id);
  }
  if (!unmatched.empty()) throw_unmatched(unmatched);
  require_positive(csv);

  auto origins = build_side(csv.row_ids, origin_by_id);
  auto destinations = build_side(csv.col_ids, dest_by_id);
  return FlowDataset(std::move(origins), std::move(destinations), std::move(csv.values));
}

// ---------------------------------------------------------------------------
// Aggregation

namespace {

double adjacency_tolerance(std::span<const Region> regions) {
  Box extent;
  for (const auto& r : regions) extent.extend(bounding_box(r.boundary));
  return 1e-6 * std::max(1.0, extent.diagonal().norm());
}

BgPolygon to_bg(const Polygon& ring) {
  BgPolygon poly;
  for (const auto& p : ring) bg::append(poly.outer(), BgPoint(p.x(), p.y()));
  bg::append(poly.outer(), BgPoint(ring.front().x(), ring.front().y()));
  bg::correct(poly);
  return poly;
}

Polygon merge_boundaries(std::span<const Region> members) {
  if (members.size() == 1) return members.front().boundary;
  BgMultiPolygon merged;
  merged.push_back(to_bg(members.front().boundary));
  for (std::size_t i = 1; i < members.size(); ++i) {
    BgMultiPolygon next;
    bg::union_(merged, to_bg(members[i].boundary), next);
    merged = std::move(next);
  }
  // Holes are dropped; slivers from inexact shared edges leave extra parts,
  // of which the largest is kept.
  const BgPolygon* best = nullptr;
  double best_area = -1.0;
  for (const auto& part : merged) {
    const double area = std::abs(bg::area(part));
    if (area > best_area) {
      best_area = area;
      best = &part;
    }
  }
  if (best == nullptr) throw AggregationError("polygon union produced no geometry");
  Polygon ring;
  for (const auto& p : best->outer()) ring.emplace_back(p.x(), p.y());
  if (ring.size() >= 2 && ring.front() == ring.back()) ring.pop_back();
  // Remove collinear vertices left on formerly shared edges.
  Polygon cleaned;
  const std::size_t n = ring.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point& prev = ring[(i + n - 1) % n];
    const Point& next = ring[(i + 1) % n];
    if (orientation_sign(prev, ring[i], next) != 0) cleaned.push_back(ring[i]);
  }
  return cleaned.size() >= 3 ? cleaned : ring;
}

struct SideMapping {
  std::vector<Region> regions;
  std::vector<Eigen::Index> old_to_new;
};

SideMapping aggregate_side(const std::vector<Region>& regions, std::span<const RegionGroup> groups,
                           const std::map<std::string, std::size_t>& group_of) {
  std::vector<std::vector<const Region*>> present(groups.size());
  for (const auto& r : regions) {
    if (auto it = group_of.find(r.id); it != group_of.end()) present[it->second].push_back(&r);
  }
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (!present[g].empty() && present[g].size() != groups[g].member_ids.size()) {
      throw AggregationError("group '" + groups[g].group_id + "' is only partially present on one side");
    }
  }

  SideMapping out;
  out.old_to_new.resize(regions.size());
  std::vector<Eigen::Index> group_slot(groups.size(), -1);
  for (std::size_t i = 0; i < regions.size(); ++i) {
    const auto& r = regions[i];
    auto it = group_of.find(r.id);
    if (it == group_of.end()) {
      out.old_to_new[i] = static_cast<Eigen::Index>(out.regions.size());
      out.regions.push_back(r);
      continue;
    }
    const std::size_t g = it->second;
    if (group_slot[g] < 0) {
      std::vector<Region> members;
      for (const Region* m : present[g]) members.push_back(*m);
      if (!is_contiguous(members)) {
        throw ContiguityError("group '" + groups[g].group_id + "' is not geographically contiguous");
      }
      group_slot[g] = static_cast<Eigen::Index>(out.regions.size());
      out.regions.push_back(make_region(groups[g].group_id, groups[g].group_id, merge_boundaries(members)));
    }
    out.old_to_new[i] = group_slot[g];
  }
  return out;
}

}  // namespace

bool is_contiguous(std::span<const Region> members) {
  if (members.size() <= 1) return true;
  const double tol = adjacency_tolerance(members);
  std::vector<bool> reached(members.size(), false);
  std::vector<std::size_t> frontier{0};
  reached[0] = true;
  while (!frontier.empty()) {
    const std::size_t cur = frontier.back();
    frontier.pop_back();
    for (std::size_t j = 0; j < members.size(); ++j) {
      if (reached[j]) continue;
      if (boundary_distance(members[cur].boundary, members[j].boundary) <= tol) {
        reached[j] = true;
        frontier.push_back(j);
      }
    }
  }
  return std::all_of(reached.begin(), reached.end(), [](bool b) { return b; });
}

FlowDataset aggregate(const FlowDataset& dataset, std::span<const RegionGroup> groups) {
  if (groups.empty()) return dataset;

  std::map<std::string, std::size_t> group_of;
  std::set<std::string> group_ids;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto& group = groups[g];
    if (group.member_ids.empty()) throw AggregationError("group '" + group.group_id + "' has no members");
    if (!group_ids.insert(group.group_id).second) {
      throw AggregationError("duplicate group id '" + group.group_id + "'");
    }
    for (const auto& id : group.member_ids) {
      if (!dataset.origin_index(id) && !dataset.destination_index(id)) {
        throw AggregationError("group '" + group.group_id + "' references unknown region '" + id + "'");
      }
      if (!group_of.emplace(id, g).second) {
        throw AggregationError("region '" + id + "' belongs to more than one group");
      }
    }
  }
  for (const auto& side : {&dataset.origins(), &dataset.destinations()}) {
    for (const auto& r : *side) {
      if (group_ids.count(r.id) && !group_of.count(r.id)) {
        throw AggregationError("group id '" + r.id + "' collides with an ungrouped region");
      }
    }
  }

  const SideMapping rows = aggregate_side(dataset.origins(), groups, group_of);
  const SideMapping cols = aggregate_side(dataset.destinations(), groups, group_of);
  Eigen::MatrixXd flows = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.regions.size()),
                                                static_cast<Eigen::Index>(cols.regions.size()));
  for (Eigen::Index i = 0; i < dataset.origin_count(); ++i) {
    for (Eigen::Index j = 0; j < dataset.destination_count(); ++j) {
      flows(rows.old_to_new[static_cast<std::size_t>(i)], cols.old_to_new[static_cast<std::size_t>(j)]) +=
          dataset.flows()(i, j);
    }
  }
  return FlowDataset(rows.regions, cols.regions, std::move(flows));
}

// ---------------------------------------------------------------------------
// Range filtering

FilterResult filter_by_range(const FlowDataset& dataset, double lo, double hi) {
  if (!(lo >= 0.0)) throw RangeError("range lower bound must be >= 0");
  if (lo > hi) throw RangeError("range lower bound exceeds upper bound");

  const Eigen::MatrixXd kept =
      dataset.flows().unaryExpr([&](double v) { return (v >= lo && v <= hi) ? v : 0.0; });
  const Eigen::Index m = dataset.origin_count();
  const Eigen::Index n = dataset.destination_count();

  // An id survives while it carries any flow as an origin or as a destination.
  std::set<std::string> active;
  for (Eigen::Index i = 0; i < m; ++i) {
    if ((kept.row(i).array() > 0.0).any()) active.insert(dataset.origins()[static_cast<std::size_t>(i)].id);
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    if ((kept.col(j).array() > 0.0).any()) active.insert(dataset.destinations()[static_cast<std::size_t>(j)].id);
  }

  std::vector<Eigen::Index> rows;
  std::vector<Eigen::Index> cols;
  FilterResult result;
  std::vector<Region> origins;
  std::vector<Region> destinations;
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& r = dataset.origins()[static_cast<std::size_t>(i)];
    if (active.count(r.id)) {
      rows.push_back(i);
      origins.push_back(r);
      result.retained_origins.push_back(r.id);
    }
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& r = dataset.destinations()[static_cast<std::size_t>(j)];
    if (active.count(r.id)) {
      cols.push_back(j);
      destinations.push_back(r);
      result.retained_destinations.push_back(r.id);
    }
  }
  Eigen::MatrixXd reduced = kept(rows, cols);
  result.dataset = FlowDataset(std::move(origins), std::move(destinations), std::move(reduced));
  return result;
}

}  // namespace maptrix
