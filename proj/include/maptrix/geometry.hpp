#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace maptrix {

template <typename Scalar>
using Point2 = Eigen::Matrix<Scalar, 2, 1>;

using Point = Point2<double>;
using Box = Eigen::AlignedBox<double, 2>;

/// Closed ring without a repeated last vertex.
using Polygon = std::vector<Point>;

struct Segment {
  Point a;
  Point b;
};

/// Twice the signed area of triangle (a, b, c); positive when c is left of a->b
/// in a y-up frame.
template <typename Scalar>
Scalar orientation(const Point2<Scalar>& a, const Point2<Scalar>& b, const Point2<Scalar>& c) {
  return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
}

template <typename Scalar>
int orientation_sign(const Point2<Scalar>& a, const Point2<Scalar>& b, const Point2<Scalar>& c) {
  const Scalar o = orientation(a, b, c);
  return (o > Scalar(0)) - (o < Scalar(0));
}

/// True when c lies on the closed segment a-b (c assumed collinear).
template <typename Scalar>
bool within_span(const Point2<Scalar>& a, const Point2<Scalar>& b, const Point2<Scalar>& c) {
  return std::min(a.x(), b.x()) <= c.x() && c.x() <= std::max(a.x(), b.x()) &&
         std::min(a.y(), b.y()) <= c.y() && c.y() <= std::max(a.y(), b.y());
}

template <typename Scalar>
bool point_on_segment(const Point2<Scalar>& p, const Point2<Scalar>& a, const Point2<Scalar>& b) {
  return orientation_sign(a, b, p) == 0 && within_span(a, b, p);
}

/// Closed segment intersection from orientation signs; touching counts.
/// Zero-length segments behave as points.
template <typename Scalar>
bool segments_intersect(const Point2<Scalar>& p1, const Point2<Scalar>& p2,
                        const Point2<Scalar>& q1, const Point2<Scalar>& q2) {
  const int d1 = orientation_sign(q1, q2, p1);
  const int d2 = orientation_sign(q1, q2, p2);
  const int d3 = orientation_sign(p1, p2, q1);
  const int d4 = orientation_sign(p1, p2, q2);
  if (d1 * d2 < 0 && d3 * d4 < 0) return true;
  if (d1 == 0 && within_span(q1, q2, p1)) return true;
  if (d2 == 0 && within_span(q1, q2, p2)) return true;
  if (d3 == 0 && within_span(p1, p2, q1)) return true;
  if (d4 == 0 && within_span(p1, p2, q2)) return true;
  return false;
}

template <typename Scalar>
Scalar point_segment_distance(const Point2<Scalar>& p, const Point2<Scalar>& a, const Point2<Scalar>& b) {
  const Point2<Scalar> ab = b - a;
  const Scalar len2 = ab.squaredNorm();
  if (len2 == Scalar(0)) return (p - a).norm();
  const Scalar t = std::clamp((p - a).dot(ab) / len2, Scalar(0), Scalar(1));
  return (p - (a + t * ab)).norm();
}

template <typename Scalar>
Scalar segment_distance(const Point2<Scalar>& p1, const Point2<Scalar>& p2,
                        const Point2<Scalar>& q1, const Point2<Scalar>& q2) {
  if (segments_intersect(p1, p2, q1, q2)) return Scalar(0);
  return std::min({point_segment_distance(p1, q1, q2), point_segment_distance(p2, q1, q2),
                   point_segment_distance(q1, p1, p2), point_segment_distance(q2, p1, p2)});
}

/// Even-odd containment. Points on the boundary are reported as outside.
template <typename Scalar>
bool point_in_polygon(const Point2<Scalar>& p, std::span<const Point2<Scalar>> ring) {
  const std::size_t n = ring.size();
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const auto& a = ring[j];
    const auto& b = ring[i];
    if (point_on_segment(p, a, b)) return false;
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      const Scalar x_cross = a.x() + (p.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
      if (p.x() < x_cross) inside = !inside;
    }
  }
  return inside;
}

inline bool point_in_polygon(const Point& p, const Polygon& ring) {
  return point_in_polygon<double>(p, std::span<const Point>(ring));
}

double signed_area(const Polygon& ring);
Point centroid(const Polygon& ring);
Box bounding_box(const Polygon& ring);

/// No two non-adjacent edges touch and no adjacent edges overlap.
bool is_simple(const Polygon& ring);

double distance_to_boundary(const Point& p, const Polygon& ring);

/// Interior point far from the boundary: best of a grid sampled at `step`.
Point pole_of_inaccessibility(const Polygon& ring, double step);

/// Centroid when it lies inside, else the sampled pole of inaccessibility at 1% of
/// the bounding-box diagonal.
Point default_anchor(const Polygon& ring);

/// True when the box lies inside the ring: corners, edge midpoints and centre
/// inside, and no ring edge meets a box edge.
bool box_inside_polygon(const Box& box, const Polygon& ring);

/// Shortest distance between polygon boundaries (0 when they touch or overlap).
double boundary_distance(const Polygon& a, const Polygon& b);

}  // namespace maptrix
