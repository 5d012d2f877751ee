#pragma once

#include <algorithm>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "grasp/detection.hpp"
#include "grasp/polygon.hpp"
#include "grasp/rng.hpp"

namespace grasp {

/// Intersection over union of two oriented rectangles, computed by exact
/// convex clipping and inclusion-exclusion.
inline double jaccard(const GraspRect& a, const GraspRect& b) {
  if (a.area() <= 0.0 || b.area() <= 0.0)
    throw NumericalError("jaccard: degenerate zero-area rectangle");
  double inter = rect_intersection_area(a, b);
  double uni = a.area() + b.area() - inter;
  return inter / uni;
}

inline constexpr double kRectMetricAngleGate = kPi / 6.0;  // 30 degrees
inline constexpr double kRectMetricMinJaccard = 0.25;

/// Rectangle metric: success iff some ground-truth rectangle is within 30
/// degrees of orientation (mod pi) and overlaps with Jaccard >= 0.25.
inline bool rect_metric(const GraspRect& pred, const std::vector<GraspRect>& gts) {
  for (const auto& gt : gts) {
    if (angle_distance(pred.angle, gt.angle) > kRectMetricAngleGate) continue;
    if (jaccard(pred, gt) >= kRectMetricMinJaccard) return true;
  }
  return false;
}

/// Point metric: success iff the predicted center lies within dist_thresh of
/// some ground-truth center (inclusive boundary).
inline bool point_metric(const GraspRect& pred, const std::vector<GraspRect>& gts,
                         double dist_thresh) {
  for (const auto& gt : gts)
    if (center_distance(pred, gt) <= dist_thresh) return true;
  return false;
}

/// Point metric with a per-ground-truth threshold of a quarter of that
/// rectangle's diagonal, tracking object scale.
inline bool point_metric_quarter_diag(const GraspRect& pred, const std::vector<GraspRect>& gts) {
  for (const auto& gt : gts)
    if (center_distance(pred, gt) <= 0.25 * gt.diagonal()) return true;
  return false;
}

enum class SplitMode { kImageWise, kObjectWise };

inline SplitMode split_mode_from_string(const std::string& s) {
  if (s == "image_wise") return SplitMode::kImageWise;
  if (s == "object_wise") return SplitMode::kObjectWise;
  throw UsageError("unknown split mode: " + s);
}

inline const char* split_mode_name(SplitMode m) {
  return m == SplitMode::kImageWise ? "image_wise" : "object_wise";
}

/// Partitions scene indices into k folds. Image-wise folds shuffle scenes;
/// object-wise folds shuffle object ids so no object spans folds. Both are
/// deterministic per seed; fold sizes differ by at most one unit (scenes or
/// objects respectively).
inline std::vector<std::vector<std::size_t>> split_folds(const std::vector<AnnotatedScene>& scenes,
                                                         SplitMode mode, int k,
                                                         std::uint64_t seed) {
  if (k < 2) throw UsageError("split_folds: need k >= 2");
  std::vector<std::vector<std::size_t>> folds(static_cast<std::size_t>(k));
  Rng rng(seed);
  if (mode == SplitMode::kImageWise) {
    std::vector<std::size_t> order(scenes.size());
    for (std::size_t i = 0; i < scenes.size(); ++i) order[i] = i;
    rng.shuffle(order);
    for (std::size_t i = 0; i < order.size(); ++i)
      folds[i % static_cast<std::size_t>(k)].push_back(order[i]);
  } else {
    std::set<int> ids;
    for (const auto& s : scenes) ids.insert(s.object_id);
    if (static_cast<int>(ids.size()) < k)
      throw DataError("split_folds: fewer objects (" + std::to_string(ids.size()) +
                      ") than folds (" + std::to_string(k) + ")");
    std::vector<int> id_list(ids.begin(), ids.end());
    rng.shuffle(id_list);
    std::map<int, int> fold_of;
    for (std::size_t i = 0; i < id_list.size(); ++i)
      fold_of[id_list[i]] = static_cast<int>(i) % k;
    for (std::size_t i = 0; i < scenes.size(); ++i)
      folds[static_cast<std::size_t>(fold_of[scenes[i].object_id])].push_back(i);
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

struct EvalConfig {
  std::size_t top_t = 100;
  bool point_quarter_diag = true;  // otherwise use point_dist_px
  double point_dist_px = 20.0;
};

struct EvalRow {
  std::string name;
  double recognition_accuracy = 0.0;
  double point_rate = 0.0;
  double rect_rate = 0.0;
  int num_scenes = 0;
  int num_rects = 0;
};

struct EvalReport {
  EvalRow overall;
  std::vector<EvalRow> per_fold;
  SplitMode split_mode = SplitMode::kImageWise;
  std::string config_echo;

  void write_table(std::ostream& os) const {
    os << "split: " << split_mode_name(split_mode) << "\n";
    auto row = [&os](const EvalRow& r) {
      os << r.name << "  recognition=" << r.recognition_accuracy << "  point=" << r.point_rate
         << "  rect=" << r.rect_rate << "  scenes=" << r.num_scenes << "  rects=" << r.num_rects
         << "\n";
    };
    for (const auto& r : per_fold) row(r);
    row(overall);
  }

  void write_records(std::ostream& os) const {
    auto rec = [&os, this](const EvalRow& r) {
      os << "{\"name\":\"" << r.name << "\",\"split\":\"" << split_mode_name(split_mode)
         << "\",\"recognition\":" << r.recognition_accuracy << ",\"point\":" << r.point_rate
         << ",\"rect\":" << r.rect_rate << ",\"scenes\":" << r.num_scenes
         << ",\"rects\":" << r.num_rects << "}\n";
    };
    for (const auto& r : per_fold) rec(r);
    rec(overall);
  }
};

/// Recognition plus detection on a scene set. Recognition classifies every
/// annotated rectangle with the large network at threshold 0.5 (a tie
/// counts as negative); detection runs the cascade per scene and applies
/// both metrics against that scene's positives. Scenes where detection
/// yields no candidate count as misses.
inline EvalRow evaluate_scenes(const CascadeParams& cascade, const std::vector<AnnotatedScene>& scenes,
                               const SearchSpace& space, const EvalConfig& cfg,
                               const std::string& name = "all") {
  EvalRow row;
  row.name = name;
  int rect_correct = 0, rect_total = 0;
  int det_point = 0, det_rect = 0, det_total = 0;

  for (const auto& scene : scenes) {
    for (int pass = 0; pass < 2; ++pass) {
      const auto& rects = pass == 0 ? scene.positives : scene.negatives;
      double want = pass == 0 ? 1.0 : 0.0;
      for (const auto& r : rects) {
        double p = forward(cascade.large, extract_model_input(scene.image, r, cascade.large)).p;
        double predicted = p > 0.5 ? 1.0 : 0.0;
        rect_correct += predicted == want ? 1 : 0;
        ++rect_total;
      }
    }
    if (scene.positives.empty()) continue;
    ++det_total;
    DetectionResult det = detect_two_stage(cascade, scene.image, space, cfg.top_t);
    if (det.no_candidates()) continue;
    const GraspRect& best = det.best->rect;
    if (rect_metric(best, scene.positives)) ++det_rect;
    bool point_ok = cfg.point_quarter_diag
                        ? point_metric_quarter_diag(best, scene.positives)
                        : point_metric(best, scene.positives, cfg.point_dist_px);
    if (point_ok) ++det_point;
  }

  row.num_scenes = det_total;
  row.num_rects = rect_total;
  row.recognition_accuracy = rect_total > 0 ? static_cast<double>(rect_correct) / rect_total : 0.0;
  row.point_rate = det_total > 0 ? static_cast<double>(det_point) / det_total : 0.0;
  row.rect_rate = det_total > 0 ? static_cast<double>(det_rect) / det_total : 0.0;
  return row;
}

}  // namespace grasp
