#pragma once

#include <cmath>

#include "grasp/common.hpp"
#include "grasp/grasp_rect.hpp"
#include "grasp/modality.hpp"
#include "grasp/polygon.hpp"
#include "grasp/rgbd_image.hpp"

namespace grasp {

/// Network input extracted for one candidate rectangle: the flattened value
/// vector x, the in/out mask mu (x is zero wherever mu is zero), and the
/// per-mode scale factors psi applied by mask_scale.
struct PatchInput {
  Vec x;
  Vec mu;
  Vec psi;  // one entry per mode; all ones until mask_scale runs
  GraspRect source;
};

/// Flattening is mode-major: all depth cells first, then Y, U, V, nX, nY,
/// nZ, row-major within each mode. This order is part of the model file
/// contract.
inline int flatten_index(int mode, int row, int col, int side) {
  return (mode * side + row) * side + col;
}

inline int patch_input_size(int side) { return kNumChannels * side * side; }

inline ModalityMask default_modality(int side) {
  return ModalityMask::contiguous(kNumChannels, side * side);
}

namespace detail {

/// Bilinear sample of all channels at a continuous image point. Pixel (r,c)
/// has its center at (c + 0.5, r + 0.5). Returns false if any source pixel
/// with nonzero weight is out of bounds or invalid.
inline bool sample_all_channels(const RgbdImage& img, double px, double py,
                                std::array<double, kNumChannels>& out) {
  double u = px - 0.5, v = py - 0.5;
  double fc = std::floor(u), fr = std::floor(v);
  int c0 = static_cast<int>(fc), r0 = static_cast<int>(fr);
  double fx = u - fc, fy = v - fr;
  double wts[2][2] = {{(1 - fy) * (1 - fx), (1 - fy) * fx}, {fy * (1 - fx), fy * fx}};
  out.fill(0.0);
  for (int dr = 0; dr < 2; ++dr)
    for (int dc = 0; dc < 2; ++dc) {
      double w = wts[dr][dc];
      if (w == 0.0) continue;
      int rr = r0 + dr, cc = c0 + dc;
      if (!img.in_bounds(cc, rr) || !img.valid(rr, cc)) return false;
      for (int ch = 0; ch < kNumChannels; ++ch) out[ch] += w * img.channels[ch](rr, cc);
    }
  return true;
}

}  // namespace detail

/// phi, step one: rotate so the rectangle is axis-aligned, resample its
/// interior bilinearly into a side x side receptive field with the long
/// dimension mapped to `side` (aspect preserved), center the active region,
/// and zero-pad the remainder with mu = 0. Cells touching any invalid source
/// pixel are masked out. Returns the unscaled patch.
inline PatchInput extract_patch(const RgbdImage& img, const GraspRect& rect, int side = 24) {
  if (side <= 0) throw UsageError("extract_patch: side must be positive");
  if (rect_area_inside_bounds(rect, img.width, img.height) <= 0.0)
    throw DataError("extract_patch: rectangle entirely outside image bounds");

  const double longer = std::max(rect.len, rect.wid);
  // len runs along the columns, wid along the rows
  int out_w = std::min(side, std::max(1, static_cast<int>(std::lround(side * rect.len / longer))));
  int out_h = std::min(side, std::max(1, static_cast<int>(std::lround(side * rect.wid / longer))));
  const int col_off = (side - out_w) / 2;
  const int row_off = (side - out_h) / 2;

  const Point2 u = rect.axis_u();
  const Point2 v = rect.axis_v();

  PatchInput patch;
  const int n = patch_input_size(side);
  patch.x = Vec::Zero(n);
  patch.mu = Vec::Zero(n);
  patch.psi = Vec::Ones(kNumChannels);
  patch.source = rect;

  std::array<double, kNumChannels> vals;
  for (int r = 0; r < out_h; ++r) {
    double t = (r + 0.5) / out_h - 0.5;
    for (int c = 0; c < out_w; ++c) {
      double s = (c + 0.5) / out_w - 0.5;
      double px = rect.cx + s * rect.len * u.x + t * rect.wid * v.x;
      double py = rect.cy + s * rect.len * u.y + t * rect.wid * v.y;
      if (!detail::sample_all_channels(img, px, py, vals)) continue;
      for (int ch = 0; ch < kNumChannels; ++ch) {
        int i = flatten_index(ch, row_off + r, col_off + c, side);
        patch.x[i] = vals[ch];
        patch.mu[i] = 1.0;
      }
    }
  }
  return patch;
}

/// phi, step two: compensate masked-out area per mode. psi_r is the ratio of
/// the mode's size to its masked-in count, capped at c; a mode with nothing
/// masked in gets psi_r = 0 and contributes zeros.
inline PatchInput mask_scale(const PatchInput& patch, const ModalityMask& modes, double cap) {
  if (cap < 1.0) throw UsageError("mask_scale: cap must be >= 1");
  if (patch.x.size() != modes.size())
    throw UsageError("mask_scale: patch length does not match modality mask");

  PatchInput out = patch;
  for (int r = 0; r < modes.num_modes(); ++r) {
    const auto& idx = modes.mode_indices(r);
    double in_count = 0.0;
    for (int i : idx) in_count += patch.mu[i];
    double psi = 0.0;
    if (in_count > 0.0) psi = std::min(static_cast<double>(idx.size()) / in_count, cap);
    out.psi[r] = psi;
    for (int i : idx)
      if (patch.mu[i] != 0.0) out.x[i] = patch.x[i] * psi;
  }
  return out;
}

/// Per-channel whitening statistics, estimated on the training split and
/// stored with the model.
struct NormStats {
  Vec mean;
  Vec stddev;

  static NormStats identity(int num_modes) {
    NormStats s;
    s.mean = Vec::Zero(num_modes);
    s.stddev = Vec::Ones(num_modes);
    return s;
  }
};

/// Mean/std per mode over the masked-in cells of a patch collection.
inline NormStats compute_norm_stats(const std::vector<PatchInput>& patches,
                                    const ModalityMask& modes) {
  const int R = modes.num_modes();
  Vec sum = Vec::Zero(R), sumsq = Vec::Zero(R), count = Vec::Zero(R);
  for (const auto& p : patches)
    for (int i = 0; i < p.x.size(); ++i)
      if (p.mu[i] != 0.0) {
        int r = modes.mode_of(i);
        sum[r] += p.x[i];
        sumsq[r] += p.x[i] * p.x[i];
        count[r] += 1.0;
      }
  NormStats s = NormStats::identity(R);
  for (int r = 0; r < R; ++r) {
    if (count[r] == 0.0) continue;
    s.mean[r] = sum[r] / count[r];
    double var = sumsq[r] / count[r] - s.mean[r] * s.mean[r];
    s.stddev[r] = std::max(std::sqrt(std::max(var, 0.0)), 1e-8);
  }
  return s;
}

/// Whitens masked-in cells in place; padding stays exactly zero.
inline void apply_norm_stats(PatchInput& patch, const NormStats& stats,
                             const ModalityMask& modes) {
  for (int i = 0; i < patch.x.size(); ++i)
    if (patch.mu[i] != 0.0) {
      int r = modes.mode_of(i);
      patch.x[i] = (patch.x[i] - stats.mean[r]) / stats.stddev[r];
    }
}

}  // namespace grasp
