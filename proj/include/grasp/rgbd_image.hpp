#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "grasp/common.hpp"
#include "grasp/grasp_rect.hpp"

namespace grasp {

/// Seven-plane raster: depth, Y, U, V and the surface-normal components,
/// plus a shared per-pixel validity mask (false where depth is missing).
/// Immutable by convention once built; all pipeline operations take it by
/// const reference.
struct RgbdImage {
  int width = 0;
  int height = 0;
  std::array<Plane, kNumChannels> channels;
  BoolPlane valid;

  RgbdImage() = default;
  RgbdImage(int w, int h) : width(w), height(h) {
    if (w <= 0 || h <= 0) throw DataError("RgbdImage: non-positive dimensions");
    for (auto& p : channels) p = Plane::Zero(h, w);
    valid = BoolPlane::Constant(h, w, true);
  }

  bool in_bounds(int col, int row) const {
    return col >= 0 && col < width && row >= 0 && row < height;
  }
};

/// BT.601 full-range RGB -> YUV. Inputs in [0,1]; y in [0,1], u and v in
/// [-0.5, 0.5].
inline void rgb_to_yuv(double r, double g, double b, double& y, double& u, double& v) {
  y = 0.299 * r + 0.587 * g + 0.114 * b;
  u = (b - y) / 1.772;
  v = (r - y) / 1.402;
}

inline void yuv_to_rgb(double y, double u, double v, double& r, double& g, double& b) {
  b = y + 1.772 * u;
  r = y + 1.402 * v;
  g = (y - 0.299 * r - 0.114 * b) / 0.587;
}

/// Fills the Y/U/V planes of `img` from RGB planes (values in [0,1]).
inline void set_color_from_rgb(RgbdImage& img, const Plane& r, const Plane& g, const Plane& b) {
  for (int row = 0; row < img.height; ++row)
    for (int col = 0; col < img.width; ++col) {
      double y, u, v;
      rgb_to_yuv(r(row, col), g(row, col), b(row, col), y, u, v);
      img.channels[kY](row, col) = y;
      img.channels[kU](row, col) = u;
      img.channels[kV](row, col) = v;
    }
}

/// Per-pixel least-squares plane fit over the valid neighbors inside an odd
/// `window`. Normals use the (-dz/dx, -dz/dy, 1) orientation, so nZ > 0
/// everywhere ("toward the camera" for a depth raster). Pixels with fewer
/// than 3 valid neighbors, or a degenerate (collinear) neighborhood, are
/// marked invalid instead of producing NaN.
inline void estimate_normals(RgbdImage& img, int window = 7) {
  if (window < 3 || window % 2 == 0)
    throw UsageError("estimate_normals: window must be odd and >= 3");
  const int half = window / 2;
  const Plane& depth = img.channels[kDepth];
  BoolPlane out_valid = img.valid;
  Plane nx = Plane::Zero(img.height, img.width);
  Plane ny = Plane::Zero(img.height, img.width);
  Plane nz = Plane::Zero(img.height, img.width);

  for (int row = 0; row < img.height; ++row) {
    for (int col = 0; col < img.width; ++col) {
      if (!img.valid(row, col)) {
        out_valid(row, col) = false;
        continue;
      }
      // accumulate normal equations for z = a*x + b*y + d, centered on the
      // pixel to keep the 3x3 system well-scaled
      double sxx = 0, sxy = 0, sx = 0, syy = 0, sy = 0, sn = 0;
      double sxz = 0, syz = 0, sz = 0;
      for (int dr = -half; dr <= half; ++dr) {
        int rr = row + dr;
        if (rr < 0 || rr >= img.height) continue;
        for (int dc = -half; dc <= half; ++dc) {
          int cc = col + dc;
          if (cc < 0 || cc >= img.width || !img.valid(rr, cc)) continue;
          double x = dc, y = dr, z = depth(rr, cc);
          sxx += x * x;
          sxy += x * y;
          sx += x;
          syy += y * y;
          sy += y;
          sn += 1;
          sxz += x * z;
          syz += y * z;
          sz += z;
        }
      }
      if (sn < 3) {
        out_valid(row, col) = false;
        continue;
      }
      Eigen::Matrix3d A;
      A << sxx, sxy, sx, sxy, syy, sy, sx, sy, sn;
      Eigen::Vector3d rhs(sxz, syz, sz);
      double det = A.determinant();
      // ~sn^3 sets the scale of the Gram determinant for a spread-out window
      if (std::fabs(det) < 1e-9 * sn * sn * sn) {
        out_valid(row, col) = false;
        continue;
      }
      Eigen::Vector3d sol = A.fullPivLu().solve(rhs);
      double norm = std::sqrt(sol[0] * sol[0] + sol[1] * sol[1] + 1.0);
      nx(row, col) = -sol[0] / norm;
      ny(row, col) = -sol[1] / norm;
      nz(row, col) = 1.0 / norm;
    }
  }

  img.channels[kNormalX] = nx;
  img.channels[kNormalY] = ny;
  img.channels[kNormalZ] = nz;
  img.valid = out_valid;
}

/// A scene: one image plus its positive/negative grasp annotations.
struct AnnotatedScene {
  RgbdImage image;
  std::vector<GraspRect> positives;
  std::vector<GraspRect> negatives;
  int object_id = 0;
  int image_id = 0;
};

}  // namespace grasp
