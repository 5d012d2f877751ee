#pragma once

#include <vector>

#include "grasp/grasp_rect.hpp"

namespace grasp {

using Polygon = std::vector<Point2>;

/// Signed area via the shoelace formula (positive for counter-clockwise
/// vertex order in a y-up frame; callers use the absolute value).
inline double polygon_area(const Polygon& poly) {
  if (poly.size() < 3) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point2& a = poly[i];
    const Point2& b = poly[(i + 1) % poly.size()];
    s += a.x * b.y - b.x * a.y;
  }
  return 0.5 * std::fabs(s);
}

/// Sutherland-Hodgman: clips `subject` against one half-plane. Points with
/// side(p) >= 0 are kept.
template <typename SideFn>
Polygon clip_halfplane(const Polygon& subject, SideFn side) {
  Polygon out;
  std::size_t n = subject.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2& cur = subject[i];
    const Point2& prev = subject[(i + n - 1) % n];
    double sc = side(cur), sp = side(prev);
    bool cin = sc >= 0.0, pin = sp >= 0.0;
    if (cin != pin) {
      double t = sp / (sp - sc);
      out.push_back({prev.x + t * (cur.x - prev.x), prev.y + t * (cur.y - prev.y)});
    }
    if (cin) out.push_back(cur);
  }
  return out;
}

/// Clips `subject` against a convex polygon given in consistent winding
/// order. Returns the intersection polygon (possibly empty).
inline Polygon clip_convex(const Polygon& subject, const Polygon& clip) {
  if (subject.empty() || clip.size() < 3) return {};
  // orient the clip polygon so its interior is on the kept side of each edge
  double cw = 0.0;
  for (std::size_t i = 0; i < clip.size(); ++i) {
    const Point2& a = clip[i];
    const Point2& b = clip[(i + 1) % clip.size()];
    cw += a.x * b.y - b.x * a.y;
  }
  double orient = cw >= 0.0 ? 1.0 : -1.0;

  Polygon poly = subject;
  for (std::size_t i = 0; i < clip.size() && !poly.empty(); ++i) {
    const Point2& a = clip[i];
    const Point2& b = clip[(i + 1) % clip.size()];
    double ex = b.x - a.x, ey = b.y - a.y;
    poly = clip_halfplane(poly, [&](const Point2& p) {
      return orient * (ex * (p.y - a.y) - ey * (p.x - a.x));
    });
  }
  return poly;
}

inline Polygon rect_polygon(const GraspRect& r) {
  auto v = r.vertices();
  return Polygon(v.begin(), v.end());
}

/// Area of the intersection of two oriented rectangles.
inline double rect_intersection_area(const GraspRect& a, const GraspRect& b) {
  return polygon_area(clip_convex(rect_polygon(a), rect_polygon(b)));
}

/// Area of the part of `r` inside the axis-aligned box [0,w] x [0,h].
inline double rect_area_inside_bounds(const GraspRect& r, double w, double h) {
  Polygon box = {{0.0, 0.0}, {w, 0.0}, {w, h}, {0.0, h}};
  return polygon_area(clip_convex(rect_polygon(r), box));
}

}  // namespace grasp
