#include "maptrix/geometry.hpp"

#include <limits>

namespace maptrix {

double signed_area(const Polygon& ring) {
  double twice = 0.0;
  const std::size_t n = ring.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    twice += ring[j].x() * ring[i].y() - ring[i].x() * ring[j].y();
  }
  return 0.5 * twice;
}

Point centroid(const Polygon& ring) {
  const double area = signed_area(ring);
  const std::size_t n = ring.size();
  if (area == 0.0) {
    Point mean = Point::Zero();
    for (const auto& p : ring) mean += p;
    return mean / static_cast<double>(n);
  }
  // Shift to the first vertex to keep the cross products well conditioned.
  const Point origin = ring.front();
  Point acc = Point::Zero();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point a = ring[j] - origin;
    const Point b = ring[i] - origin;
    const double cross = a.x() * b.y() - b.x() * a.y();
    acc += (a + b) * cross;
  }
  return origin + acc / (6.0 * area);
}

Box bounding_box(const Polygon& ring) {
  Box box;
  for (const auto& p : ring) box.extend(p);
  return box;
}

bool is_simple(const Polygon& ring) {
  const std::size_t n = ring.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const Point& a1 = ring[i];
    const Point& a2 = ring[(i + 1) % n];
    if (a1 == a2) return false;
    for (std::size_t j = i + 1; j < n; ++j) {
      const Point& b1 = ring[j];
      const Point& b2 = ring[(j + 1) % n];
      const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
      if (!adjacent) {
        if (segments_intersect(a1, a2, b1, b2)) return false;
        continue;
      }
      // Adjacent edges share one vertex; they must not fold back over each other.
      const Point& shared = (j == i + 1) ? a2 : a1;
      const Point& other_a = (j == i + 1) ? a1 : a2;
      const Point& other_b = (j == i + 1) ? b2 : b1;
      if (orientation_sign(other_a, shared, other_b) == 0 &&
          (other_a - shared).dot(other_b - shared) > 0.0) {
        return false;
      }
    }
  }
  return true;
}

double distance_to_boundary(const Point& p, const Polygon& ring) {
  double best = std::numeric_limits<double>::infinity();
  const std::size_t n = ring.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    best = std::min(best, point_segment_distance(p, ring[j], ring[i]));
  }
  return best;
}

Point pole_of_inaccessibility(const Polygon& ring, double step) {
  const Box box = bounding_box(ring);
  Point best = centroid(ring);
  double best_dist = point_in_polygon(best, ring) ? distance_to_boundary(best, ring) : -1.0;
  for (double y = box.min().y() + 0.5 * step; y < box.max().y(); y += step) {
    for (double x = box.min().x() + 0.5 * step; x < box.max().x(); x += step) {
      const Point p(x, y);
      if (!point_in_polygon(p, ring)) continue;
      const double d = distance_to_boundary(p, ring);
      if (d > best_dist) {
        best_dist = d;
        best = p;
      }
    }
  }
  return best;
}

Point default_anchor(const Polygon& ring) {
  const Point c = centroid(ring);
  if (point_in_polygon(c, ring)) return c;
  const double diagonal = bounding_box(ring).diagonal().norm();
  return pole_of_inaccessibility(ring, 0.01 * diagonal);
}

bool box_inside_polygon(const Box& box, const Polygon& ring) {
  const Point lo = box.min();
  const Point hi = box.max();
  const Point corners[4] = {lo, Point(hi.x(), lo.y()), hi, Point(lo.x(), hi.y())};
  for (int i = 0; i < 4; ++i) {
    if (!point_in_polygon(corners[i], ring)) return false;
    if (!point_in_polygon(Point(0.5 * (corners[i] + corners[(i + 1) % 4])), ring)) return false;
  }
  if (!point_in_polygon(box.center(), ring)) return false;
  const std::size_t n = ring.size();
  for (std::size_t e = 0, f = n - 1; e < n; f = e++) {
    for (int i = 0; i < 4; ++i) {
      if (segments_intersect(ring[f], ring[e], corners[i], corners[(i + 1) % 4])) return false;
    }
  }
  return true;
}

double boundary_distance(const Polygon& a, const Polygon& b) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0, pi = a.size() - 1; i < a.size(); pi = i++) {
    for (std::size_t j = 0, pj = b.size() - 1; j < b.size(); pj = j++) {
      best = std::min(best, segment_distance(a[pi], a[i], b[pj], b[j]));
      if (best == 0.0) return 0.0;
    }
  }
  return best;
}

}  // namespace maptrix
