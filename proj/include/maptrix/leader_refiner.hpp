#pragma once

#include "maptrix/boundary_labeller.hpp"
#include "maptrix/flow_model.hpp"
#include "maptrix/qp_solver.hpp"

#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace maptrix {

/// Axis-aligned area a connection site may move in. `box.min()` is the
/// top-left corner (bu), `box.max()` the bottom-right corner (bb), in y-down
/// layout pixels. `y_lo` / `y_hi` are the nearest foreign leaders met below /
/// above the anchor (numerically smaller / larger y); the site keeps `margin`
/// away from both.
struct SiteRect {
  std::string region_id;
  Box box;
  Point anchor = Point::Zero();
  double y_lo = -std::numeric_limits<double>::infinity();
  double y_hi = std::numeric_limits<double>::infinity();
  double margin = 0.0;
  /// Pruning left no room; the site is pinned at its anchor.
  bool degenerate = false;

  double y_min() const { return std::max(box.min().y(), y_lo + margin); }
  double y_max() const { return std::min(box.max().y(), y_hi - margin); }
};

struct RefinementConfig {
  /// Weight of the separation penalty against site displacement.
  double w = 1.0;
  /// Minimum distance between a site and any foreign leader.
  double d_b = 6.0;
  /// Minimum distance between a site and a band separating line.
  double d_lc = 4.0;
  /// Lower bound on the separation of adjacent same-band diagonals.
  double epsilon_order = 0.5;
  /// Binary-search resolution of the rectangle growth, in pixels.
  double rect_tol = 0.05;
  /// Grown rectangles are shrunk by this much per side (at most half their
  /// size) so refined sites stay visibly inside their region.
  double inset = 2.0;
  double solver_tol = 1e-8;
  /// Extra solve rounds that add pairwise ordering rows for leaders found crossing.
  int max_repair_rounds = 8;
};

void validate(const RefinementConfig& config);

/// Largest centred rectangle found by binary search: a uniform seed square,
/// then alternating width and height growth until neither grows by `tol`.
Box grow_rectangle(const Region& region, const Point& anchor, double tol);

/// Shrinks `rect` so every point stays at least `d_b` from the foreign routes,
/// always keeping the own site; pins the site when that is impossible.
SiteRect prune_rectangle(const Box& rect, const LeaderRoute& own_route, std::span<const LeaderRoute> foreign_routes,
                         double d_b);

/// Separation variable between two same-band leaders adjacent in port order.
struct SeparationPair {
  std::size_t lower = 0;  ///< route index with the smaller port y
  std::size_t upper = 0;
  GradientSign sign = GradientSign::up;
  double initial = 0.0;
  double epsilon = 0.0;
  Eigen::Index variable = -1;
};

/// Extra pairwise row requested after a crossing was found.
struct PairwiseOrder {
  std::size_t a = 0;
  std::size_t b = 0;
};

struct RefinementProgram {
  qp::Problem<double> problem;
  std::vector<SeparationPair> pairs;
  /// Target separation: the largest initial separation over all pairs.
  double target_separation = 0.0;
  std::vector<std::string> row_labels;
  std::size_t site_count = 0;

  Eigen::Index x_var(std::size_t route) const { return static_cast<Eigen::Index>(2 * route); }
  Eigen::Index y_var(std::size_t route) const { return static_cast<Eigen::Index>(2 * route + 1); }
};

/// Signed distance between the parallel diagonals of two same-direction
/// leaders, positive when `upper` (larger port y) keeps its place above `lower`.
double diagonal_separation(const Point& lower_site, const Point& upper_site, GradientSign sign, double k);

RefinementProgram build_program(std::span<const LeaderRoute> routes, std::span<const SiteRect> rects,
                                const BandPartition& bands, const RefinementConfig& config,
                                const LabellingConfig& labelling, std::span<const PairwiseOrder> extra = {});

struct RefinedLayoutDelta {
  std::vector<Point> sites;
  std::vector<LeaderRoute> routes;
  std::vector<SeparationPair> pairs;
  /// Solved separations, aligned with `pairs`.
  std::vector<double> separations;
  std::vector<SiteRect> rects;
  double target_separation = 0.0;
  double pcentre = 0.0;
  double psep = 0.0;
  double objective = 0.0;
  double objective_at_anchors = 0.0;
  qp::Status status = qp::Status::optimal;
  int solver_iterations = 0;
  int repair_rounds = 0;
  bool fell_back = false;
  std::vector<std::string> clashes;
  std::vector<std::string> pinned_regions;
};

/// Grows and prunes one rectangle per region, builds the quadratic program over
/// the sites and adjacent separations, solves it and re-routes every leader.
/// `regions[i]` belongs to `routes[i]`, whose site is the initial anchor.
/// `grown` optionally supplies the already grown rectangles.
RefinedLayoutDelta refine(std::span<const LeaderRoute> routes, std::span<const Region> regions,
                          const RefinementConfig& config, const LabellingConfig& labelling,
                          std::span<const Box> grown = {});

/// JSON lines: one objective record, then one record per separation pair.
void write_diagnostics(const RefinedLayoutDelta& delta, std::span<const std::string> route_ids, std::ostream& out,
                       const std::string& side = "origin");

}  // namespace maptrix
