#include "maptrix/boundary_labeller.hpp"

#include "maptrix/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace maptrix {

const char* to_string(GradientSign sign) { return sign == GradientSign::up ? "up" : "down"; }
const char* to_string(EdgeSide side) { return side == EdgeSide::origin_edge ? "origin" : "destination"; }

void validate(const LabellingConfig& config) {
  if (!(config.k > 0.0)) throw ValidationError("leader gradient k must be > 0");
  if (!(config.port_spacing > 0.0)) throw ValidationError("port spacing must be > 0");
}

LeaderRoute construct_route(const Point& site, const Port& port, double k) {
  const double dy = port.position.y() - site.y();
  LeaderRoute route;
  route.site = site;
  route.port = port;
  route.gradient_sign = dy >= 0.0 ? GradientSign::up : GradientSign::down;
  route.bend = Point(site.x() + std::abs(dy) / k, port.position.y());
  return route;
}

LeaderRoute route_leader(const Point& site, const Port& port, const LabellingConfig& config) {
  validate(config);
  const double run = config.port_line_x - site.x();
  if (!(run > 0.0)) {
    std::ostringstream msg;
    msg << "site x=" << site.x() << " is not left of the port line x=" << config.port_line_x;
    throw ValidationError(msg.str());
  }
  const double rise = std::abs(port.position.y() - site.y());
  if (rise / config.k > run * (1.0 + 1e-12)) {
    const double min_k = rise / run;
    std::ostringstream msg;
    msg << "leader from (" << site.x() << ", " << site.y() << ") to port " << port.index
        << " needs gradient >= " << min_k << " (configured " << config.k << ")";
    throw SteepLeaderError(msg.str(), min_k);
  }
  LeaderRoute route = construct_route(site, port, config.k);
  route.bend.x() = std::min(route.bend.x(), config.port_line_x);
  return route;
}

namespace {

bool share_endpoint_only(const Segment& s, const Segment& t) {
  const bool shared = s.a == t.a || s.a == t.b || s.b == t.a || s.b == t.b;
  if (!shared) return false;
  // Collinear overlap is still a crossing.
  const bool collinear = orientation_sign(s.a, s.b, t.a) == 0 && orientation_sign(s.a, s.b, t.b) == 0;
  if (!collinear) return true;
  const Point ds = s.b - s.a;
  const Point dt = t.b - t.a;
  return ds.dot(dt) < 0.0 ? (s.a == t.a || s.b == t.b) : (s.a == t.b || s.b == t.a);
}

bool segments_cross(const Segment& s, const Segment& t) {
  if (!segments_intersect(s.a, s.b, t.a, t.b)) return false;
  return !share_endpoint_only(s, t);
}

}  // namespace

bool routes_cross(const LeaderRoute& a, const LeaderRoute& b) {
  const Segment sa[2] = {a.diagonal(), a.horizontal()};
  const Segment sb[2] = {b.diagonal(), b.horizontal()};
  for (const auto& s : sa) {
    for (const auto& t : sb) {
      if (segments_cross(s, t)) return true;
    }
  }
  return false;
}

std::vector<std::pair<std::size_t, std::size_t>> verify_crossing_free(std::span<const LeaderRoute> routes) {
  std::vector<std::pair<std::size_t, std::size_t>> crossings;
  for (std::size_t i = 0; i < routes.size(); ++i) {
    for (std::size_t j = i + 1; j < routes.size(); ++j) {
      if (routes_cross(routes[i], routes[j])) crossings.emplace_back(i, j);
    }
  }
  return crossings;
}

namespace {

/// Intercept of the diagonal through `site` along the direction `sign`.
double diagonal_intercept(const Point& site, GradientSign sign, double k) {
  return sign == GradientSign::up ? site.y() - k * site.x() : site.y() + k * site.x();
}

int count_crossings(std::span<const Point> sites, std::span<const Port> ports, const std::vector<std::size_t>& slot_site,
                    const std::vector<std::size_t>& slot_port, double k) {
  std::vector<LeaderRoute> routes;
  routes.reserve(slot_site.size());
  for (std::size_t s = 0; s < slot_site.size(); ++s) {
    routes.push_back(construct_route(sites[slot_site[s]], ports[slot_port[s]], k));
  }
  return static_cast<int>(verify_crossing_free(routes).size());
}

}  // namespace

PortAssignment assign_ports(std::span<const Point> sites, std::span<const Port> ports,
                            const LabellingConfig& config, std::span<const std::string> ids) {
  validate(config);
  const std::size_t n = sites.size();
  if (ports.size() != n) {
    throw ValidationError("assign_ports needs as many ports as sites (" + std::to_string(n) + " sites, " +
                          std::to_string(ports.size()) + " ports)");
  }
  if (!ids.empty() && ids.size() != n) throw ValidationError("assign_ports id list does not match sites");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(sites[i].x() < config.port_line_x)) {
      throw ValidationError("site " + std::to_string(i) + " is not left of the port line");
    }
  }

  std::vector<std::size_t> by_y(n);
  std::iota(by_y.begin(), by_y.end(), std::size_t{0});
  std::sort(by_y.begin(), by_y.end(), [&](std::size_t a, std::size_t b) {
    if (sites[a].y() != sites[b].y()) return sites[a].y() < sites[b].y();
    if (sites[a].x() != sites[b].x()) return sites[a].x() < sites[b].x();
    if (!ids.empty()) return ids[a] < ids[b];
    return a < b;
  });
  for (std::size_t r = 1; r < n; ++r) {
    if (sites[by_y[r]] == sites[by_y[r - 1]]) {
      throw DegenerateSiteError("sites " + std::to_string(by_y[r - 1]) + " and " + std::to_string(by_y[r]) +
                                " have identical coordinates");
    }
  }

  std::vector<std::size_t> slot_port(n);
  std::iota(slot_port.begin(), slot_port.end(), std::size_t{0});
  std::sort(slot_port.begin(), slot_port.end(), [&](std::size_t a, std::size_t b) {
    if (ports[a].position.y() != ports[b].position.y()) return ports[a].position.y() < ports[b].position.y();
    return ports[a].index < ports[b].index;
  });

  // slot r (r-th port from the top) initially takes the r-th site in y order.
  std::vector<std::size_t> slot_site = by_y;
  const double k = config.k;
  auto port_y = [&](std::size_t slot) { return ports[slot_port[slot]].position.y(); };
  auto sign_of = [&](std::size_t slot) {
    return sites[slot_site[slot]].y() <= port_y(slot) ? GradientSign::up : GradientSign::down;
  };

  PortAssignment result;
  // Same-direction leaders with overlapping vertical extents must have their
  // diagonals in port order; swapping such a pair keeps both directions and
  // strictly lowers the number of intercept inversions, so the loop terminates.
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t a = 0; a < n && !changed; ++a) {
      const GradientSign sa = sign_of(a);
      for (std::size_t b = a + 1; b < n; ++b) {
        if (sign_of(b) != sa) continue;
        const Point& pa = sites[slot_site[a]];
        const Point& pb = sites[slot_site[b]];
        const bool overlap = sa == GradientSign::up ? pb.y() <= port_y(a) : pa.y() >= port_y(b);
        if (!overlap) continue;
        if (diagonal_intercept(pa, sa, k) > diagonal_intercept(pb, sa, k)) {
          std::swap(slot_site[a], slot_site[b]);
          ++result.repair_swaps;
          changed = true;
          break;
        }
      }
    }
  }

  // Degenerate inputs (e.g. sites sharing a diagonal) can leave crossings;
  // adjacent swaps are accepted only when they lower the crossing count.
  int crossings = count_crossings(sites, ports, slot_site, slot_port, k);
  while (crossings > 0) {
    bool improved = false;
    for (std::size_t s = 0; s + 1 < n; ++s) {
      std::swap(slot_site[s], slot_site[s + 1]);
      const int after = count_crossings(sites, ports, slot_site, slot_port, k);
      if (after < crossings) {
        crossings = after;
        ++result.repair_swaps;
        improved = true;
        break;
      }
      std::swap(slot_site[s], slot_site[s + 1]);
    }
    if (!improved) break;
  }
  result.residual_crossings = crossings;

  result.port_of_site.assign(n, 0);
  for (std::size_t s = 0; s < n; ++s) result.port_of_site[slot_site[s]] = slot_port[s];
  return result;
}

std::vector<std::size_t> port_order(std::span<const LeaderRoute> routes) {
  std::vector<std::size_t> order(routes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double ya = routes[a].port.position.y();
    const double yb = routes[b].port.position.y();
    if (ya != yb) return ya < yb;
    return routes[a].port.index < routes[b].port.index;
  });
  return order;
}

BandPartition partition_bands(std::span<const LeaderRoute> routes) {
  BandPartition partition;
  for (const std::size_t r : port_order(routes)) {
    if (partition.bands.empty() || partition.bands.back().sign != routes[r].gradient_sign) {
      partition.bands.push_back(Band{routes[r].gradient_sign, {}});
    }
    partition.bands.back().routes.push_back(r);
  }
  for (std::size_t b = 0; b + 1 < partition.bands.size(); ++b) {
    double lower_max = -INFINITY;
    double upper_min = INFINITY;
    for (const std::size_t r : partition.bands[b].routes) lower_max = std::max(lower_max, routes[r].site.y());
    for (const std::size_t r : partition.bands[b + 1].routes) upper_min = std::min(upper_min, routes[r].site.y());
    partition.separators.push_back(0.5 * (lower_max + upper_min));
  }
  return partition;
}

double total_length(std::span<const LeaderRoute> routes) {
  double total = 0.0;
  for (const auto& r : routes) total += r.length();
  return total;
}

}  // namespace maptrix
