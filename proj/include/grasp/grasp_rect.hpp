#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

#include "grasp/common.hpp"

namespace grasp {

inline constexpr double kPi = 3.14159265358979323846;

/// Wraps an orientation into [0, pi). Grasp rectangles are symmetric under a
/// half turn, so angles live on that interval.
inline double normalize_angle(double a) {
  a = std::fmod(a, kPi);
  if (a < 0.0) a += kPi;
  if (a >= kPi) a = 0.0;  // fmod can land exactly on pi after the add
  return a;
}

/// Angular distance between two rectangle orientations, respecting the
/// pi-periodicity. Result in [0, pi/2].
inline double angle_distance(double a, double b) {
  double d = std::fabs(normalize_angle(a) - normalize_angle(b));
  return std::min(d, kPi - d);
}

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// Oriented grasping rectangle in image coordinates. The two edges of length
/// `len` are the gripper plates; `wid` is the plate separation. `angle` is
/// the plate direction, normalized to [0, pi).
struct GraspRect {
  double cx = 0.0;
  double cy = 0.0;
  double angle = 0.0;
  double len = 0.0;
  double wid = 0.0;

  GraspRect() = default;
  GraspRect(double cx_, double cy_, double angle_, double len_, double wid_)
      : cx(cx_), cy(cy_), angle(normalize_angle(angle_)), len(len_), wid(wid_) {
    if (!(len > 0.0) || !(wid > 0.0))
      throw DataError("GraspRect: len and wid must be positive");
  }

  /// Unit vector along the gripper plates.
  Point2 axis_u() const { return {std::cos(angle), std::sin(angle)}; }
  /// Unit vector across the plates (from one plate toward the other).
  Point2 axis_v() const { return {-std::sin(angle), std::cos(angle)}; }

  double area() const { return len * wid; }
  double diagonal() const { return std::hypot(len, wid); }

  /// Corner order: (-u,-v), (+u,-v), (+u,+v), (-u,+v) around the center, so
  /// vertex 0 -> 1 runs along the first gripper plate.
  std::array<Point2, 4> vertices() const {
    Point2 u = axis_u(), v = axis_v();
    double hu = 0.5 * len, hv = 0.5 * wid;
    return {Point2{cx - hu * u.x - hv * v.x, cy - hu * u.y - hv * v.y},
            Point2{cx + hu * u.x - hv * v.x, cy + hu * u.y - hv * v.y},
            Point2{cx + hu * u.x + hv * v.x, cy + hu * u.y + hv * v.y},
            Point2{cx - hu * u.x + hv * v.x, cy - hu * u.y + hv * v.y}};
  }

  /// Centers of the two gripper plates. "Left" is center - (wid/2) * v.
  Point2 left_plate_center() const {
    Point2 v = axis_v();
    return {cx - 0.5 * wid * v.x, cy - 0.5 * wid * v.y};
  }
  Point2 right_plate_center() const {
    Point2 v = axis_v();
    return {cx + 0.5 * wid * v.x, cy + 0.5 * wid * v.y};
  }

  /// Builds a rectangle from four corner points where the first edge
  /// (vertex 0 to vertex 1) lies along a gripper plate. Opposite edge
  /// lengths are averaged so slightly noisy annotations stay usable.
  static GraspRect from_vertices(const std::array<Point2, 4>& v) {
    double cx = 0.0, cy = 0.0;
    for (const auto& p : v) {
      cx += p.x;
      cy += p.y;
    }
    cx *= 0.25;
    cy *= 0.25;
    double e1x = v[1].x - v[0].x, e1y = v[1].y - v[0].y;
    double len = 0.5 * (std::hypot(e1x, e1y) + std::hypot(v[2].x - v[3].x, v[2].y - v[3].y));
    double wid = 0.5 * (std::hypot(v[2].x - v[1].x, v[2].y - v[1].y) +
                        std::hypot(v[3].x - v[0].x, v[3].y - v[0].y));
    double angle = normalize_angle(std::atan2(e1y, e1x));
    return GraspRect(cx, cy, angle, len, wid);
  }
};

inline double center_distance(const GraspRect& a, const GraspRect& b) {
  return std::hypot(a.cx - b.cx, a.cy - b.cy);
}

}  // namespace grasp
