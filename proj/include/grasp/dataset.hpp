#pragma once

#include <vector>

#include "grasp/network.hpp"
#include "grasp/patch.hpp"
#include "grasp/rgbd_image.hpp"

namespace grasp {

/// Extracted training/evaluation patches for a scene collection. `raw`
/// holds whitened but unscaled patches (the reconstruction targets); `scaled`
/// holds the same patches after mask_scale (the network inputs).
struct PatchDataset {
  ModalityMask modality;
  int side = 24;
  double scale_cap = 2.0;
  NormStats stats;
  std::vector<PatchInput> raw;
  std::vector<PatchInput> scaled;
  Vec labels;

  int size() const { return static_cast<int>(raw.size()); }
  int input_size() const { return patch_input_size(side); }

  Mat inputs() const {
    Mat X(input_size(), size());
    for (int t = 0; t < size(); ++t) X.col(t) = scaled[static_cast<std::size_t>(t)].x;
    return X;
  }
  Mat targets() const {
    Mat X(input_size(), size());
    for (int t = 0; t < size(); ++t) X.col(t) = raw[static_cast<std::size_t>(t)].x;
    return X;
  }
  /// Per-coordinate reconstruction penalty weights mu_i * psi_mode(i).
  Mat penalty_weights() const {
    Mat P(input_size(), size());
    for (int t = 0; t < size(); ++t) {
      const auto& p = scaled[static_cast<std::size_t>(t)];
      for (int i = 0; i < p.x.size(); ++i)
        P(i, t) = p.mu[i] * p.psi[modality.mode_of(i)];
    }
    return P;
  }
};

/// Extracts every annotated rectangle of every scene (positives then
/// negatives, scene order). Whitening stats are computed from these patches
/// when `stats` is null, otherwise the given (training) stats are applied.
inline PatchDataset build_patch_dataset(const std::vector<AnnotatedScene>& scenes, int side,
                                        double scale_cap, const NormStats* stats = nullptr) {
  PatchDataset ds;
  ds.side = side;
  ds.scale_cap = scale_cap;
  ds.modality = default_modality(side);

  std::vector<double> labels;
  for (const auto& scene : scenes) {
    for (const auto& rect : scene.positives) {
      ds.raw.push_back(extract_patch(scene.image, rect, side));
      labels.push_back(1.0);
    }
    for (const auto& rect : scene.negatives) {
      ds.raw.push_back(extract_patch(scene.image, rect, side));
      labels.push_back(0.0);
    }
  }
  if (ds.raw.empty()) throw DataError("build_patch_dataset: no annotated rectangles");

  ds.stats = stats ? *stats : compute_norm_stats(ds.raw, ds.modality);
  for (auto& p : ds.raw) apply_norm_stats(p, ds.stats, ds.modality);
  ds.scaled.reserve(ds.raw.size());
  for (const auto& p : ds.raw) ds.scaled.push_back(mask_scale(p, ds.modality, scale_cap));

  ds.labels = Eigen::Map<const Vec>(labels.data(), static_cast<Eigen::Index>(labels.size()));
  return ds;
}

/// The end-to-end scoring pipeline phi for one rectangle, using the stats
/// and cap stored with a trained model.
inline Vec extract_model_input(const RgbdImage& image, const GraspRect& rect,
                               const NetworkParams& net) {
  PatchInput p = extract_patch(image, rect, net.patch_side);
  apply_norm_stats(p, net.norm, net.modality);
  return mask_scale(p, net.modality, net.scale_cap).x;
}

}  // namespace grasp
