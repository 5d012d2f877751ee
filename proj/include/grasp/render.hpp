#pragma once

#include <algorithm>
#include <cmath>

#include "grasp/detection.hpp"
#include "grasp/png_io.hpp"
#include "grasp/rgbd_image.hpp"

namespace grasp {

struct ColorU8 {
  unsigned char r = 0, g = 0, b = 0;
};

inline constexpr ColorU8 kPlateColor{40, 220, 40};   // gripper plate edges
inline constexpr ColorU8 kSideColor{230, 210, 40};   // the other pair

/// Converts the YUV planes back to an 8-bit RGB view; invalid pixels are
/// dimmed so missing depth is visible in overlays.
inline ImageU8 render_rgb(const RgbdImage& img) {
  ImageU8 out;
  out.width = img.width;
  out.height = img.height;
  out.channels = 3;
  out.pixels.resize(static_cast<std::size_t>(img.width) * img.height * 3);
  for (int row = 0; row < img.height; ++row)
    for (int col = 0; col < img.width; ++col) {
      double r, g, b;
      yuv_to_rgb(img.channels[kY](row, col), img.channels[kU](row, col),
                 img.channels[kV](row, col), r, g, b);
      double dim = img.valid(row, col) ? 1.0 : 0.45;
      auto to_u8 = [dim](double x) {
        return static_cast<unsigned char>(std::lround(std::clamp(x * dim, 0.0, 1.0) * 255.0));
      };
      out.at(row, col, 0) = to_u8(r);
      out.at(row, col, 1) = to_u8(g);
      out.at(row, col, 2) = to_u8(b);
    }
  return out;
}

inline void draw_line(ImageU8& img, Point2 a, Point2 b, ColorU8 color) {
  double steps = std::max(std::fabs(b.x - a.x), std::fabs(b.y - a.y));
  int n = std::max(1, static_cast<int>(std::ceil(steps)));
  for (int k = 0; k <= n; ++k) {
    double t = static_cast<double>(k) / n;
    int col = static_cast<int>(std::floor(a.x + t * (b.x - a.x)));
    int row = static_cast<int>(std::floor(a.y + t * (b.y - a.y)));
    if (col < 0 || col >= img.width || row < 0 || row >= img.height) continue;
    img.at(row, col, 0) = color.r;
    img.at(row, col, 1) = color.g;
    img.at(row, col, 2) = color.b;
  }
}

/// Draws a grasp rectangle with the two gripper-plate edges (the `len`
/// pair) in a distinct color from the side pair.
inline void draw_rect(ImageU8& img, const GraspRect& rect, ColorU8 plate = kPlateColor,
                      ColorU8 side = kSideColor) {
  auto v = rect.vertices();
  draw_line(img, v[0], v[1], plate);  // plate edge
  draw_line(img, v[2], v[3], plate);  // opposite plate
  draw_line(img, v[1], v[2], side);
  draw_line(img, v[3], v[0], side);
}

/// Grayscale export of one heatmap plane. Pixels no candidate touches get
/// the sentinel value 0; scores in (0,1) map to 1..255.
inline ImageU8 heatmap_to_gray(const Plane& plane, const BoolPlane& has) {
  ImageU8 out;
  out.height = static_cast<int>(plane.rows());
  out.width = static_cast<int>(plane.cols());
  out.channels = 1;
  out.pixels.assign(static_cast<std::size_t>(out.width) * out.height, 0);
  for (int row = 0; row < out.height; ++row)
    for (int col = 0; col < out.width; ++col)
      if (has(row, col)) {
        double s = std::clamp(plane(row, col), 0.0, 1.0);
        out.at(row, col) = static_cast<unsigned char>(1 + std::lround(s * 254.0));
      }
  return out;
}

}  // namespace grasp
