#pragma once

#include "maptrix/geometry.hpp"

#include <array>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace maptrix {

enum class EdgeSide { origin_edge, destination_edge };
enum class GradientSign { up, down };

const char* to_string(GradientSign sign);
const char* to_string(EdgeSide side);

/// Fixed leader endpoint on a matrix edge.
struct Port {
  int index = 0;
  Point position = Point::Zero();
  EdgeSide side = EdgeSide::origin_edge;
};

/// `k` is the uniform gradient of the leader diagonals; `port_line_x` is the
/// rightmost x a bend may reach (ports themselves sit at or right of it).
struct LabellingConfig {
  double k = 1.0;
  double port_spacing = 10.0;
  double port_line_x = 0.0;
};

void validate(const LabellingConfig& config);

/// Diagonal segment site -> bend with slope +k (up) or -k (down), then a
/// horizontal segment bend -> port. "up" means the port lies at larger y.
struct LeaderRoute {
  Point site = Point::Zero();
  Point bend = Point::Zero();
  Port port;
  GradientSign gradient_sign = GradientSign::up;

  Segment diagonal() const { return {site, bend}; }
  Segment horizontal() const { return {bend, port.position}; }
  double length() const { return (bend - site).norm() + (port.position - bend).norm(); }
};

struct PortAssignment {
  /// port_of_site[i] is the index (into the ports span) assigned to site i.
  std::vector<std::size_t> port_of_site;
  int repair_swaps = 0;
  /// Crossings left after repair (zero unless the sites are degenerate).
  int residual_crossings = 0;
};

/// Matches sites to ports: y-sorted matching (ties by x, then id), then swap
/// repair among same-direction leaders whose vertical extents overlap until
/// their diagonals are ordered like their ports.
PortAssignment assign_ports(std::span<const Point> sites, std::span<const Port> ports,
                            const LabellingConfig& config, std::span<const std::string> ids = {});

/// Throws SteepLeaderError when the diagonal would pass the port line.
LeaderRoute route_leader(const Point& site, const Port& port, const LabellingConfig& config);

/// Same construction without the feasibility check.
LeaderRoute construct_route(const Point& site, const Port& port, double k);

/// Index pairs (i < j) of routes whose segments meet anywhere other than a
/// shared endpoint. Empty means crossing-free.
std::vector<std::pair<std::size_t, std::size_t>> verify_crossing_free(std::span<const LeaderRoute> routes);

bool routes_cross(const LeaderRoute& a, const LeaderRoute& b);

struct Band {
  GradientSign sign = GradientSign::up;
  /// Route indices in ascending port y.
  std::vector<std::size_t> routes;
};

struct BandPartition {
  std::vector<Band> bands;
  /// separators[b] is the horizontal line between bands[b] and bands[b + 1].
  std::vector<double> separators;
};

/// Maximal runs (in port order) of equal gradient sign, plus the separating
/// line at the midpoint of the facing extreme site y values.
BandPartition partition_bands(std::span<const LeaderRoute> routes);

/// Route indices sorted by port position (y, then port index).
std::vector<std::size_t> port_order(std::span<const LeaderRoute> routes);

double total_length(std::span<const LeaderRoute> routes);

}  // namespace maptrix
