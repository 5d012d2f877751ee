#pragma once

#include <algorithm>
#include <chrono>
#include <optional>
#include <vector>

#include "grasp/dataset.hpp"
#include "grasp/network.hpp"

namespace grasp {

struct GripperBounds {
  double min_wid = 0.0;
  double max_wid = 1e9;
  double min_len = 0.0;
  double max_len = 1e9;

  bool admits(double len, double wid) const {
    return len >= min_len && len <= max_len && wid >= min_wid && wid <= max_wid;
  }
};

/// Discretization of rectangle space plus the gripper constraints that
/// filter the size ladder.
struct SearchSpace {
  double angle_step = kPi / 12.0;  // 15 degrees
  double position_stride = 10.0;
  std::vector<double> len_set = {16.0, 24.0, 36.0, 54.0};
  std::vector<double> wid_set = {8.0, 12.0, 18.0, 27.0};
  GripperBounds gripper;

  void validate() const {
    if (angle_step <= 0.0 || position_stride <= 0.0)
      throw UsageError("SearchSpace: strides must be positive");
    if (len_set.empty() || wid_set.empty())
      throw UsageError("SearchSpace: size sets must be non-empty");
  }
};

/// Deterministic candidate enumeration: the Cartesian product of the
/// position grid (centers at stride/2 + k*stride, inside the image), the
/// angle grid over [0, pi), and the (len, wid) pairs admitted by the
/// gripper. Loop order (y, x, angle, len, wid) fixes the enumeration index
/// used for all tie-breaking.
inline std::vector<GraspRect> enumerate_rects(int width, int height, const SearchSpace& space) {
  space.validate();
  std::vector<std::pair<double, double>> sizes;
  for (double len : space.len_set)
    for (double wid : space.wid_set)
      if (space.gripper.admits(len, wid)) sizes.emplace_back(len, wid);

  std::vector<double> angles;
  for (double a = 0.0; a < kPi - 1e-9; a += space.angle_step) angles.push_back(a);

  std::vector<GraspRect> rects;
  for (double cy = space.position_stride / 2.0; cy < height; cy += space.position_stride)
    for (double cx = space.position_stride / 2.0; cx < width; cx += space.position_stride)
      for (double a : angles)
        for (const auto& [len, wid] : sizes) rects.emplace_back(cx, cy, a, len, wid);
  return rects;
}

/// P(graspable) for every candidate; scoring is pure, so candidates may be
/// evaluated in parallel with results written by index.
inline std::vector<double> score_all(const NetworkParams& net, const RgbdImage& image,
                                     const std::vector<GraspRect>& rects) {
  std::vector<double> scores(rects.size(), 0.0);
  parallel_for(rects.size(), [&](std::size_t i) {
    scores[i] = forward(net, extract_model_input(image, rects[i], net)).p;
  }, 64);
  return scores;
}

struct ScoredRect {
  GraspRect rect;
  std::size_t enum_index = 0;
  double stage1_score = 0.0;
  double stage2_score = 0.0;
};

struct DetectionResult {
  std::optional<ScoredRect> best;           // empty when no candidates exist
  std::vector<ScoredRect> top_t;            // stage-1 ranking, descending
  std::size_t stage1_evals = 0;
  std::size_t stage2_evals = 0;
  double stage1_sec = 0.0;
  double stage2_sec = 0.0;

  bool no_candidates() const { return !best.has_value(); }
};

/// Two-stage cascade: the small network scores every candidate, the top T
/// survivors are re-scored by the large network, and the stage-2 argmax
/// wins. All ties break toward the earliest enumeration index, so the
/// result is deterministic and, at T >= candidate count, identical to an
/// exhaustive search with the large network.
inline DetectionResult detect_two_stage(const CascadeParams& cascade, const RgbdImage& image,
                                        const SearchSpace& space, std::size_t top_t = 100) {
  if (top_t < 1) throw UsageError("detect_two_stage: T must be >= 1");
  cascade.check_consistent();

  DetectionResult result;
  std::vector<GraspRect> rects = enumerate_rects(image.width, image.height, space);
  if (rects.empty()) return result;

  auto tick = std::chrono::steady_clock::now();
  std::vector<double> s1 = score_all(cascade.small, image, rects);
  result.stage1_evals = rects.size();
  result.stage1_sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - tick).count();

  std::vector<std::size_t> order(rects.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  auto rank = [&](std::size_t a, std::size_t b) {
    if (s1[a] != s1[b]) return s1[a] > s1[b];
    return a < b;
  };
  std::size_t keep = std::min(top_t, rects.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep),
                    order.end(), rank);
  order.resize(keep);

  result.top_t.reserve(keep);
  for (std::size_t i : order) result.top_t.push_back({rects[i], i, s1[i], 0.0});

  tick = std::chrono::steady_clock::now();
  std::vector<GraspRect> survivors;
  survivors.reserve(keep);
  for (const auto& s : result.top_t) survivors.push_back(s.rect);
  std::vector<double> s2 = score_all(cascade.large, image, survivors);
  result.stage2_evals = keep;
  result.stage2_sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - tick).count();

  for (std::size_t k = 0; k < keep; ++k) result.top_t[k].stage2_score = s2[k];
  std::size_t best = 0;
  for (std::size_t k = 1; k < keep; ++k) {
    if (s2[k] > s2[best] ||
        (s2[k] == s2[best] && result.top_t[k].enum_index < result.top_t[best].enum_index))
      best = k;
  }
  result.best = result.top_t[best];
  return result;
}

/// Single-stage exhaustive search with one network; the reference the
/// cascade is checked against.
inline DetectionResult detect_exhaustive(const NetworkParams& net, const RgbdImage& image,
                                         const SearchSpace& space) {
  DetectionResult result;
  std::vector<GraspRect> rects = enumerate_rects(image.width, image.height, space);
  if (rects.empty()) return result;
  auto tick = std::chrono::steady_clock::now();
  std::vector<double> scores = score_all(net, image, rects);
  result.stage1_evals = result.stage2_evals = rects.size();
  result.stage1_sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - tick).count();

  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[best]) best = i;  // strict: ties keep the earliest index
  result.best = ScoredRect{rects[best], best, scores[best], scores[best]};
  return result;
}

/// Max-score planes for the two gripper plates: pixel (r, c) of the first
/// plane holds the best score among candidates whose left plate center
/// falls in that pixel (similarly for the right plate). Pixels no candidate
/// touches are flagged in `has_value`.
struct ScoreHeatmap {
  Plane left;
  Plane right;
  BoolPlane left_has;
  BoolPlane right_has;
};

inline ScoreHeatmap score_heatmap(const NetworkParams& net, const RgbdImage& image,
                                  const SearchSpace& space) {
  std::vector<GraspRect> rects = enumerate_rects(image.width, image.height, space);
  std::vector<double> scores = score_all(net, image, rects);

  ScoreHeatmap hm;
  hm.left = Plane::Zero(image.height, image.width);
  hm.right = Plane::Zero(image.height, image.width);
  hm.left_has = BoolPlane::Constant(image.height, image.width, false);
  hm.right_has = BoolPlane::Constant(image.height, image.width, false);

  auto splat = [&](const Point2& p, double score, Plane& plane, BoolPlane& has) {
    int col = static_cast<int>(std::floor(p.x));
    int row = static_cast<int>(std::floor(p.y));
    if (!image.in_bounds(col, row)) return;
    if (!has(row, col) || score > plane(row, col)) {
      plane(row, col) = score;
      has(row, col) = true;
    }
  };
  for (std::size_t i = 0; i < rects.size(); ++i) {
    splat(rects[i].left_plate_center(), scores[i], hm.left, hm.left_has);
    splat(rects[i].right_plate_center(), scores[i], hm.right, hm.right_has);
  }
  return hm;
}

}  // namespace grasp
