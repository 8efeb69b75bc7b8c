#pragma once

#include "maptrix/geometry.hpp"

#include <Eigen/Core>

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace maptrix {

/// A map location: short id (abbreviation), display name, simple boundary ring
/// in layout pixels and the initial connection site.
struct Region {
  std::string id;
  std::string name;
  Polygon boundary;
  Point anchor = Point::Zero();
};

/// Validates the ring (>= 3 vertices, simple, non-zero area), normalises it to
/// positive signed area and fills in the default anchor. Throws GeometryError.
Region make_region(std::string id, std::string name, Polygon boundary);

/// M x N origin-destination flows with the region geometry of both sides.
/// Totals are always recomputed from the matrix.
class FlowDataset {
 public:
  FlowDataset() = default;
  FlowDataset(std::vector<Region> origins, std::vector<Region> destinations, Eigen::MatrixXd flows);

  const std::vector<Region>& origins() const { return origins_; }
  const std::vector<Region>& destinations() const { return destinations_; }
  const Eigen::MatrixXd& flows() const { return flows_; }
  const Eigen::VectorXd& totals_out() const { return totals_out_; }
  const Eigen::VectorXd& totals_in() const { return totals_in_; }

  Eigen::Index origin_count() const { return flows_.rows(); }
  Eigen::Index destination_count() const { return flows_.cols(); }
  bool empty() const { return flows_.size() == 0; }
  double grand_total() const { return flows_.sum(); }
  double max_flow() const { return flows_.size() ? flows_.maxCoeff() : 0.0; }

  /// Origins and destinations are the same regions in the same order.
  bool same_regions() const;

  std::optional<Eigen::Index> origin_index(const std::string& id) const;
  std::optional<Eigen::Index> destination_index(const std::string& id) const;

 private:
  std::vector<Region> origins_;
  std::vector<Region> destinations_;
  Eigen::MatrixXd flows_;
  Eigen::VectorXd totals_out_;
  Eigen::VectorXd totals_in_;
};

/// Equirectangular projection (x = lon * cos(mid-latitude), y = -lat) scaled
/// uniformly and centred into a width x height panel box. `planar` skips the
/// projection and only fits the coordinates (y kept as given).
struct Projection {
  enum class Kind { equirectangular, planar };
  Kind kind = Kind::equirectangular;
  double width = 400.0;
  double height = 400.0;
  double padding = 4.0;
};

/// Loads the flow CSV (first row destination ids, first column origin ids) and a
/// FeatureCollection of boundaries keyed by the "id" property.
FlowDataset load_dataset(std::istream& flow_csv, std::istream& boundaries, const Projection& projection);

/// Cross-border variant: origin ids come from one boundary file and destination
/// ids from another; each side is fitted to its own panel box.
FlowDataset load_two_country(std::istream& flow_csv, std::istream& origin_boundaries,
                             std::istream& destination_boundaries, const Projection& projection);

/// A set of contiguous regions merged into one for regional comparisons.
struct RegionGroup {
  std::string group_id;
  std::vector<std::string> member_ids;
};

/// Merges each group into a single region (outer ring of the polygon union,
/// summed flows, intra-group flow on the diagonal). Ungrouped regions pass through.
FlowDataset aggregate(const FlowDataset& dataset, std::span<const RegionGroup> groups);

/// Polygon adjacency graph over the members is connected.
bool is_contiguous(std::span<const Region> members);

struct FilterResult {
  FlowDataset dataset;
  std::vector<std::string> retained_origins;
  std::vector<std::string> retained_destinations;
};

/// Zeroes flows outside [lo, hi] and drops regions left without any flow.
FilterResult filter_by_range(const FlowDataset& dataset, double lo, double hi);

}  // namespace maptrix
