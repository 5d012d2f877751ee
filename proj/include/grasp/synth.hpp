#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "grasp/rgbd_image.hpp"
#include "grasp/rng.hpp"

namespace grasp {

/// Synthetic scene recipe. Bars are graspable ridges (raised in depth,
/// distinct color stripe); distractors are valleys, oversized blobs and
/// perpendicular annotations that must score as non-graspable. Signal is
/// confined to the channels flagged relevant: geometry (depth and the
/// derived normals) follows the depth flag, Y/U/V are controlled
/// individually, and everything else is background plus noise.
struct SynthSpec {
  int width = 160;
  int height = 120;
  int n_bars = 1;
  int n_distractors = 2;
  double noise_sigma = 0.02;
  std::array<bool, kNumChannels> relevant = {true, true, true, true, true, true, true};
  int image_id = 0;
  int object_id = 0;
  int normal_window = 7;

  static std::array<bool, kNumChannels> depth_only() {
    return {true, false, false, false, true, true, true};
  }
  static std::array<bool, kNumChannels> all_modes() {
    return {true, true, true, true, true, true, true};
  }
};

namespace detail {

struct SynthStructure {
  double cx, cy, angle, len, wid;
  double radius() const { return 0.5 * std::hypot(len, wid); }
};

inline double edge_ramp(double dist, double half, double feather) {
  // 1 inside, 0 outside, linear over the feather band
  double t = (half + 0.5 * feather - dist) / feather;
  return std::clamp(t, 0.0, 1.0);
}

inline double soft_inside(const SynthStructure& s, double px, double py, double feather = 1.5) {
  double dx = px - s.cx, dy = py - s.cy;
  double along = dx * std::cos(s.angle) + dy * std::sin(s.angle);
  double across = -dx * std::sin(s.angle) + dy * std::cos(s.angle);
  return edge_ramp(std::fabs(along), 0.5 * s.len, feather) *
         edge_ramp(std::fabs(across), 0.5 * s.wid, feather);
}

inline bool overlaps_any(const std::vector<SynthStructure>& placed, const SynthStructure& s,
                         double margin) {
  for (const auto& o : placed)
    if (std::hypot(o.cx - s.cx, o.cy - s.cy) < o.radius() + s.radius() + margin) return true;
  return false;
}

inline SynthStructure place_structure(Rng& rng, const SynthSpec& spec,
                                      const std::vector<SynthStructure>& placed, double len,
                                      double wid) {
  double margin = 0.5 * std::hypot(len, wid) + 6.0;
  SynthStructure s{0, 0, 0, len, wid};
  for (int tries = 0; tries < 200; ++tries) {
    s.cx = rng.uniform(margin, spec.width - margin);
    s.cy = rng.uniform(margin, spec.height - margin);
    s.angle = rng.uniform(0.0, kPi);
    if (!overlaps_any(placed, s, 4.0)) return s;
  }
  return s;  // crowded spec: accept the last try
}

}  // namespace detail

/// Deterministic synthetic scene. Same seed and spec give a bit-identical
/// scene.
inline AnnotatedScene synth_scene(std::uint64_t seed, const SynthSpec& spec) {
  if (spec.n_bars == 0 && spec.n_distractors == 0)
    throw UsageError("synth_scene: need at least one bar or distractor");
  if (spec.n_bars < 0 || spec.n_distractors < 0 || spec.noise_sigma < 0.0)
    throw UsageError("synth_scene: negative counts or noise");

  Rng rng(seed);
  AnnotatedScene scene;
  scene.image_id = spec.image_id;
  scene.object_id = spec.object_id;

  const bool geom = spec.relevant[kDepth] || spec.relevant[kNormalX] ||
                    spec.relevant[kNormalY] || spec.relevant[kNormalZ];
  const double y_bg = 0.5, u_bg = 0.0, v_bg = 0.0;
  const double depth_bg = 2.0;

  std::vector<detail::SynthStructure> placed;
  std::vector<detail::SynthStructure> bars, valleys, blobs;

  for (int b = 0; b < spec.n_bars; ++b) {
    double len = rng.uniform(42.0, 60.0);
    double wid = rng.uniform(7.0, 12.0);
    auto s = detail::place_structure(rng, spec, placed, len, wid);
    placed.push_back(s);
    bars.push_back(s);
  }
  for (int d = 0; d < spec.n_distractors; ++d) {
    if (d % 2 == 0) {
      double len = rng.uniform(40.0, 56.0);
      double wid = rng.uniform(10.0, 16.0);
      auto s = detail::place_structure(rng, spec, placed, len, wid);
      placed.push_back(s);
      valleys.push_back(s);
    } else {
      double side = rng.uniform(38.0, 50.0);
      auto s = detail::place_structure(rng, spec, placed, side, side);
      placed.push_back(s);
      blobs.push_back(s);
    }
  }

  RgbdImage img(spec.width, spec.height);
  Plane y_plane = Plane::Constant(spec.height, spec.width, y_bg);
  Plane u_plane = Plane::Constant(spec.height, spec.width, u_bg);
  Plane v_plane = Plane::Constant(spec.height, spec.width, v_bg);
  Plane& depth = img.channels[kDepth];
  depth.setConstant(depth_bg);

  // structure color deltas, applied only on the relevant channels
  auto paint = [&](const detail::SynthStructure& s, double ddepth, double dy, double du,
                   double dv) {
    for (int row = 0; row < spec.height; ++row)
      for (int col = 0; col < spec.width; ++col) {
        double w = detail::soft_inside(s, col + 0.5, row + 0.5);
        if (w <= 0.0) continue;
        if (geom) depth(row, col) += w * ddepth;
        if (spec.relevant[kY]) y_plane(row, col) += w * dy;
        if (spec.relevant[kU]) u_plane(row, col) += w * du;
        if (spec.relevant[kV]) v_plane(row, col) += w * dv;
      }
  };
  for (const auto& s : bars) paint(s, -0.45, 0.28, 0.18, 0.14);
  for (const auto& s : valleys) paint(s, 0.45, -0.22, -0.16, 0.12);
  for (const auto& s : blobs) paint(s, -0.35, 0.10, -0.14, -0.18);

  // noise on every channel source; colors are projected through the RGB
  // gamut so a scene serializes to an 8-bit raster without clipping drift
  for (int row = 0; row < spec.height; ++row)
    for (int col = 0; col < spec.width; ++col) {
      depth(row, col) += spec.noise_sigma * rng.normal();
      double y = y_plane(row, col) + spec.noise_sigma * rng.normal();
      double u = u_plane(row, col) + spec.noise_sigma * rng.normal();
      double v = v_plane(row, col) + spec.noise_sigma * rng.normal();
      double r, g, b;
      yuv_to_rgb(y, u, v, r, g, b);
      rgb_to_yuv(std::clamp(r, 0.0, 1.0), std::clamp(g, 0.0, 1.0), std::clamp(b, 0.0, 1.0),
                 y, u, v);
      y_plane(row, col) = y;
      u_plane(row, col) = u;
      v_plane(row, col) = v;
    }
  img.channels[kY] = y_plane;
  img.channels[kU] = u_plane;
  img.channels[kV] = v_plane;
  estimate_normals(img, spec.normal_window);
  scene.image = std::move(img);

  // positives: a small family along each bar's axis
  for (const auto& s : bars) {
    double ux = std::cos(s.angle), uy = std::sin(s.angle);
    double glen = 0.45 * s.len;
    double gwid = std::min(2.4 * s.wid, 28.0);
    for (double f : {-0.18, 0.0, 0.18}) {
      double cx = s.cx + f * s.len * ux;
      double cy = s.cy + f * s.len * uy;
      scene.positives.emplace_back(cx, cy, s.angle, glen, gwid);
    }
    // perpendicular grasp on the same bar cannot close on the ridge
    scene.negatives.emplace_back(s.cx, s.cy, s.angle + 0.5 * kPi, glen, gwid);
  }
  for (const auto& s : valleys) {
    scene.negatives.emplace_back(s.cx, s.cy, s.angle, 0.45 * s.len,
                                 std::min(2.4 * s.wid, 28.0));
    scene.negatives.emplace_back(s.cx, s.cy, s.angle + 0.5 * kPi, 0.45 * s.len,
                                 std::min(2.4 * s.wid, 28.0));
  }
  for (const auto& s : blobs)
    scene.negatives.emplace_back(s.cx, s.cy, rng.uniform(0.0, kPi), 0.5 * s.len, 0.5 * s.len);

  // background negatives on empty areas
  int want_bg = 2;
  for (int tries = 0; tries < 200 && want_bg > 0; ++tries) {
    detail::SynthStructure probe{rng.uniform(20.0, spec.width - 20.0),
                                 rng.uniform(20.0, spec.height - 20.0),
                                 rng.uniform(0.0, kPi), 26.0, 16.0};
    if (detail::overlaps_any(placed, probe, 2.0)) continue;
    scene.negatives.emplace_back(probe.cx, probe.cy, probe.angle, probe.len, probe.wid);
    --want_bg;
  }
  return scene;
}

/// A batch of scenes with ids stamped in; object ids cycle so object-wise
/// splits are exercised (images_per_object images share one object id).
inline std::vector<AnnotatedScene> synth_dataset(std::uint64_t base_seed, int count,
                                                 SynthSpec spec, int images_per_object = 1) {
  if (count <= 0) throw UsageError("synth_dataset: count must be positive");
  if (images_per_object <= 0) throw UsageError("synth_dataset: images_per_object must be positive");
  std::vector<AnnotatedScene> scenes;
  scenes.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    spec.image_id = i;
    spec.object_id = i / images_per_object;
    scenes.push_back(synth_scene(base_seed + static_cast<std::uint64_t>(i) * 1000003ull, spec));
  }
  return scenes;
}

}  // namespace grasp
