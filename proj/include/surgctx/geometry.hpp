#pragma once

// Planar polygon primitives in image space (origin top-left, y down).
//
// Polygons are closed rings with implicit closure. A PolygonSet is one
// object's reduction to a list of parts; set-level distance, intersection
// area and midpoint are what the context rules consume.

#include <span>
#include <vector>

#include "surgctx/object_class.hpp"

namespace surgctx {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

inline Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
inline Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
inline Point operator*(double s, Point p) { return {s * p.x, s * p.y}; }

inline double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }

class Polygon {
 public:
  // Drops consecutive duplicates (including a repeated closing vertex) and
  // reorients to positive signed area. Throws DegenerateInputError when
  // fewer than 3 distinct vertices remain or a coordinate is not finite.
  //
  // Simplicity is not verified: traced pixel contours may touch themselves
  // at a single vertex, and every area routine uses the even-odd rule.
  explicit Polygon(std::vector<Point> vertices);

  std::span<const Point> vertices() const { return vertices_; }
  std::size_t size() const { return vertices_.size(); }
  const Point& operator[](std::size_t i) const { return vertices_[i]; }

  friend bool operator==(const Polygon&, const Polygon&) = default;

 private:
  std::vector<Point> vertices_;
};

class PolygonSet {
 public:
  PolygonSet() = default;
  explicit PolygonSet(ObjectClass cls) : class_(cls) {}
  // Parts with zero area are discarded.
  PolygonSet(ObjectClass cls, std::vector<Polygon> parts);

  ObjectClass object_class() const { return class_; }
  std::span<const Polygon> parts() const { return parts_; }
  bool empty() const { return parts_.empty(); }
  std::size_t size() const { return parts_.size(); }

  // Returns false (and keeps the set unchanged) for a zero-area part.
  bool add(Polygon part);

  friend bool operator==(const PolygonSet&, const PolygonSet&) = default;

 private:
  ObjectClass class_ = ObjectClass::LeftGrasper;
  std::vector<Polygon> parts_;
};

double point_segment_distance(Point p, Point a, Point b);

// Ramer-Douglas-Peucker on a closed ring. The ring is split at its first
// vertex and the vertex farthest from it; each half is simplified
// independently. Every dropped vertex lies within `epsilon` of the output
// ring. epsilon == 0 returns the ring unchanged. The result may have fewer
// than 3 points for slivers; callers decide whether to discard it.
std::vector<Point> rdp_simplify(std::span<const Point> ring, double epsilon);

double signed_area(std::span<const Point> ring);
// Absolute shoelace area.
double polygon_area(const Polygon& p);

// Even-odd containment; points on the boundary may go either way.
bool point_in_polygon(Point p, const Polygon& poly);

bool segments_intersect(Point a, Point b, Point c, Point d);

// True when the two closed regions share at least one point.
bool polygons_overlap(const Polygon& a, const Polygon& b);

// Minimum Euclidean distance between two polygons; 0 when they overlap or touch.
double polygon_distance(const Polygon& a, const Polygon& b);

// Mean of polygon_distance over every (part of I, part of J) pair.
// Throws AbsentObjectError if either set is empty.
double set_distance(const PolygonSet& i, const PolygonSet& j);

// Area of (union of I's parts) intersected with (union of J's parts).
// Empty sets give 0.
double set_intersection_area(const PolygonSet& i, const PolygonSet& j);

// Area of the union of the set's parts.
double set_area(const PolygonSet& s);

// Arithmetic mean of every vertex across all parts (not the area centroid).
// Throws AbsentObjectError for an empty set.
Point set_midpoint(const PolygonSet& s);

PolygonSet translated(const PolygonSet& s, Point offset);

}  // namespace surgctx
