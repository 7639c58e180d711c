#include "surgctx/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "surgctx/error.hpp"

namespace surgctx {

// =============================================================================
// Polygon / PolygonSet
// =============================================================================

Polygon::Polygon(std::vector<Point> vertices) {
  for (const Point& p : vertices) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw DegenerateInputError("polygon vertex is not finite");
    }
  }
  vertices_.reserve(vertices.size());
  for (const Point& p : vertices) {
    if (vertices_.empty() || !(vertices_.back() == p)) vertices_.push_back(p);
  }
  while (vertices_.size() > 1 && vertices_.front() == vertices_.back()) vertices_.pop_back();
  if (vertices_.size() < 3) {
    throw DegenerateInputError("polygon needs at least 3 distinct vertices, got " +
                               std::to_string(vertices_.size()));
  }
  if (signed_area(vertices_) < 0.0) std::reverse(vertices_.begin() + 1, vertices_.end());
}

PolygonSet::PolygonSet(ObjectClass cls, std::vector<Polygon> parts) : class_(cls) {
  parts_.reserve(parts.size());
  for (Polygon& p : parts) add(std::move(p));
}

bool PolygonSet::add(Polygon part) {
  if (!(polygon_area(part) > 0.0)) return false;
  parts_.push_back(std::move(part));
  return true;
}

// =============================================================================
// Elementary predicates
// =============================================================================

double point_segment_distance(Point p, Point a, Point b) {
  const Point ab = b - a;
  const double len2 = dot(ab, ab);
  double t = 0.0;
  if (len2 > 0.0) t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  const Point closest = a + t * ab;
  return std::hypot(p.x - closest.x, p.y - closest.y);
}

double signed_area(std::span<const Point> ring) {
  const std::size_t n = ring.size();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += cross(ring[i], ring[(i + 1) % n]);
  return 0.5 * acc;
}

double polygon_area(const Polygon& p) { return std::abs(signed_area(p.vertices())); }

bool point_in_polygon(Point p, const Polygon& poly) {
  bool inside = false;
  const auto v = poly.vertices();
  for (std::size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) {
    if ((v[i].y > p.y) != (v[j].y > p.y)) {
      const double x = v[j].x + (p.y - v[j].y) * (v[i].x - v[j].x) / (v[i].y - v[j].y);
      if (p.x < x) inside = !inside;
    }
  }
  return inside;
}

namespace {

int orientation(Point a, Point b, Point c) {
  const double v = cross(b - a, c - a);
  if (v > 0.0) return 1;
  if (v < 0.0) return -1;
  return 0;
}

bool on_segment(Point a, Point b, Point p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

struct Box {
  double x0 = std::numeric_limits<double>::infinity();
  double y0 = std::numeric_limits<double>::infinity();
  double x1 = -std::numeric_limits<double>::infinity();
  double y1 = -std::numeric_limits<double>::infinity();

  bool disjoint(const Box& o) const { return x1 < o.x0 || o.x1 < x0 || y1 < o.y0 || o.y1 < y0; }
};

Box bounds(const Polygon& p) {
  Box b;
  for (const Point& q : p.vertices()) {
    b.x0 = std::min(b.x0, q.x);
    b.y0 = std::min(b.y0, q.y);
    b.x1 = std::max(b.x1, q.x);
    b.y1 = std::max(b.y1, q.y);
  }
  return b;
}

}  // namespace

bool segments_intersect(Point a, Point b, Point c, Point d) {
  const int o1 = orientation(a, b, c);
  const int o2 = orientation(a, b, d);
  const int o3 = orientation(c, d, a);
  const int o4 = orientation(c, d, b);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(a, b, c)) return true;
  if (o2 == 0 && on_segment(a, b, d)) return true;
  if (o3 == 0 && on_segment(c, d, a)) return true;
  if (o4 == 0 && on_segment(c, d, b)) return true;
  return false;
}

bool polygons_overlap(const Polygon& a, const Polygon& b) {
  if (bounds(a).disjoint(bounds(b))) return false;
  const auto va = a.vertices();
  const auto vb = b.vertices();
  for (std::size_t i = 0; i < va.size(); ++i) {
    const Point p0 = va[i];
    const Point p1 = va[(i + 1) % va.size()];
    for (std::size_t j = 0; j < vb.size(); ++j) {
      if (segments_intersect(p0, p1, vb[j], vb[(j + 1) % vb.size()])) return true;
    }
  }
  // No boundary contact: overlap only if one contains the other.
  return point_in_polygon(va[0], b) || point_in_polygon(vb[0], a);
}

double polygon_distance(const Polygon& a, const Polygon& b) {
  if (polygons_overlap(a, b)) return 0.0;
  // Disjoint boundaries: the closest pair involves a vertex of one polygon.
  double best = std::numeric_limits<double>::infinity();
  auto scan = [&best](std::span<const Point> from, std::span<const Point> to) {
    for (const Point& p : from) {
      for (std::size_t j = 0; j < to.size(); ++j) {
        best = std::min(best, point_segment_distance(p, to[j], to[(j + 1) % to.size()]));
      }
    }
  };
  scan(a.vertices(), b.vertices());
  scan(b.vertices(), a.vertices());
  return best;
}

// =============================================================================
// Ramer-Douglas-Peucker
// =============================================================================

std::vector<Point> rdp_simplify(std::span<const Point> ring, double epsilon) {
  if (ring.size() < 3) {
    throw DegenerateInputError("rdp_simplify needs at least 3 points, got " +
                               std::to_string(ring.size()));
  }
  if (!(epsilon >= 0.0)) throw std::invalid_argument("rdp_simplify: epsilon must be >= 0");
  if (epsilon == 0.0) return {ring.begin(), ring.end()};

  const std::size_t n = ring.size();
  auto at = [&](std::size_t k) -> const Point& { return ring[k % n]; };

  std::size_t far = 0;
  double far_d = -1.0;
  for (std::size_t k = 1; k < n; ++k) {
    const double d = std::hypot(ring[k].x - ring[0].x, ring[k].y - ring[0].y);
    if (d > far_d) {
      far_d = d;
      far = k;
    }
  }

  std::vector<bool> keep(n, false);
  keep[0] = true;
  keep[far] = true;

  // Index n stands for ring[0] closing the second chain.
  std::vector<std::pair<std::size_t, std::size_t>> stack = {{0, far}, {far, n}};
  while (!stack.empty()) {
    const auto [lo, hi] = stack.back();
    stack.pop_back();
    if (hi <= lo + 1) continue;
    std::size_t best = lo;
    double best_d = -1.0;
    for (std::size_t k = lo + 1; k < hi; ++k) {
      const double d = point_segment_distance(at(k), at(lo), at(hi));
      if (d > best_d) {
        best_d = d;
        best = k;
      }
    }
    if (best_d > epsilon) {
      keep[best % n] = true;
      stack.emplace_back(lo, best);
      stack.emplace_back(best, hi);
    }
  }

  std::vector<Point> out;
  for (std::size_t k = 0; k < n; ++k) {
    if (keep[k]) out.push_back(ring[k]);
  }
  return out;
}

// =============================================================================
// Area sweep
//
// Vertical slabs are cut at every vertex x and every edge-edge crossing x.
// Inside a slab no two edges cross, so the edges keep one vertical order and
// the covered region between two consecutive edges is an exact trapezoid
// whose area is slab width times the gap at the slab midline.
// =============================================================================

namespace {

struct SweepEdge {
  Point lo;  // lo.x < hi.x
  Point hi;
  int part;
};

void append_edges(const PolygonSet& s, int part_offset, std::vector<SweepEdge>& out) {
  int part = part_offset;
  for (const Polygon& poly : s.parts()) {
    const auto v = poly.vertices();
    for (std::size_t i = 0; i < v.size(); ++i) {
      Point a = v[i];
      Point b = v[(i + 1) % v.size()];
      if (a.x == b.x) continue;
      if (a.x > b.x) std::swap(a, b);
      out.push_back({a, b, part});
    }
    ++part;
  }
}

// `owner[part]` is 0 or 1. With need_both, a point counts when it lies inside
// some part owned by 0 and some part owned by 1; otherwise inside any part.
double sweep_area(const std::vector<SweepEdge>& edges, const std::vector<int>& owner,
                  bool need_both) {
  if (edges.empty()) return 0.0;

  std::vector<double> xs;
  xs.reserve(edges.size() * 2);
  for (const SweepEdge& e : edges) {
    xs.push_back(e.lo.x);
    xs.push_back(e.hi.x);
  }
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const SweepEdge& a = edges[i];
    for (std::size_t j = i + 1; j < edges.size(); ++j) {
      const SweepEdge& b = edges[j];
      if (a.hi.x <= b.lo.x || b.hi.x <= a.lo.x) continue;
      if (std::max(a.lo.y, a.hi.y) < std::min(b.lo.y, b.hi.y) ||
          std::max(b.lo.y, b.hi.y) < std::min(a.lo.y, a.hi.y)) {
        continue;
      }
      const Point r = a.hi - a.lo;
      const Point s = b.hi - b.lo;
      const double denom = cross(r, s);
      if (denom == 0.0) continue;
      const Point qp = b.lo - a.lo;
      const double t = cross(qp, s) / denom;
      const double u = cross(qp, r) / denom;
      if (t > 0.0 && t < 1.0 && u > 0.0 && u < 1.0) xs.push_back(a.lo.x + t * r.x);
    }
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());

  const int num_parts = static_cast<int>(owner.size());
  std::vector<std::uint8_t> parity(num_parts, 0);
  std::vector<std::pair<double, int>> crossings;
  double area = 0.0;

  for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
    const double xl = xs[k];
    const double xr = xs[k + 1];
    const double xm = 0.5 * (xl + xr);
    crossings.clear();
    for (const SweepEdge& e : edges) {
      if (e.lo.x < xm && xm < e.hi.x) {
        const double y = e.lo.y + (e.hi.y - e.lo.y) * (xm - e.lo.x) / (e.hi.x - e.lo.x);
        crossings.emplace_back(y, e.part);
      }
    }
    if (crossings.size() < 2) continue;
    std::sort(crossings.begin(), crossings.end());

    int odd[2] = {0, 0};
    double gap_sum = 0.0;
    for (std::size_t c = 0; c < crossings.size(); ++c) {
      const int part = crossings[c].second;
      parity[part] ^= 1;
      odd[owner[part]] += parity[part] ? 1 : -1;
      if (c + 1 == crossings.size()) break;
      const bool covered = need_both ? (odd[0] > 0 && odd[1] > 0) : (odd[0] + odd[1] > 0);
      if (covered) gap_sum += crossings[c + 1].first - crossings[c].first;
    }
    for (const auto& [y, part] : crossings) parity[part] = 0;
    area += (xr - xl) * gap_sum;
  }
  return area;
}

}  // namespace

double set_intersection_area(const PolygonSet& i, const PolygonSet& j) {
  if (i.empty() || j.empty()) return 0.0;
  std::vector<SweepEdge> edges;
  append_edges(i, 0, edges);
  append_edges(j, static_cast<int>(i.size()), edges);
  std::vector<int> owner(i.size() + j.size(), 1);
  std::fill(owner.begin(), owner.begin() + static_cast<std::ptrdiff_t>(i.size()), 0);
  return sweep_area(edges, owner, /*need_both=*/true);
}

double set_area(const PolygonSet& s) {
  if (s.empty()) return 0.0;
  std::vector<SweepEdge> edges;
  append_edges(s, 0, edges);
  return sweep_area(edges, std::vector<int>(s.size(), 0), /*need_both=*/false);
}

// =============================================================================
// Set-level distance and midpoint
// =============================================================================

double set_distance(const PolygonSet& i, const PolygonSet& j) {
  if (i.empty() || j.empty()) {
    throw AbsentObjectError(std::string("set_distance: ") +
                            std::string(abbreviation(i.empty() ? i.object_class()
                                                               : j.object_class())) +
                            " is absent");
  }
  double sum = 0.0;
  for (const Polygon& a : i.parts()) {
    for (const Polygon& b : j.parts()) sum += polygon_distance(a, b);
  }
  return sum / static_cast<double>(i.size() * j.size());
}

Point set_midpoint(const PolygonSet& s) {
  if (s.empty()) {
    throw AbsentObjectError(std::string("set_midpoint: ") +
                            std::string(abbreviation(s.object_class())) + " is absent");
  }
  double sx = 0.0;
  double sy = 0.0;
  std::size_t n = 0;
  for (const Polygon& p : s.parts()) {
    for (const Point& v : p.vertices()) {
      sx += v.x;
      sy += v.y;
      ++n;
    }
  }
  return {sx / static_cast<double>(n), sy / static_cast<double>(n)};
}

PolygonSet translated(const PolygonSet& s, Point offset) {
  PolygonSet out(s.object_class());
  for (const Polygon& p : s.parts()) {
    std::vector<Point> v(p.vertices().begin(), p.vertices().end());
    for (Point& q : v) q = q + offset;
    out.add(Polygon(std::move(v)));
  }
  return out;
}

}  // namespace surgctx
