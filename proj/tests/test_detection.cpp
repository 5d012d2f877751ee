#include <gtest/gtest.h>

#include "grasp/detection.hpp"
#include "grasp/synth.hpp"
#include "testutil.hpp"

using namespace grasp;

namespace {

// network with mode-constant first-layer weights: its score is invariant
// under any within-mode permutation of patch cells, which makes geometric
// symmetry tests exact
NetworkParams mode_constant_net(int side, std::uint64_t seed) {
  ModalityMask modes = default_modality(side);
  NetworkParams net = init_params(seed, patch_input_size(side), 6, 5, modes,
                                  NormStats::identity(kNumChannels), side, 2.0);
  Rng rng(seed + 1);
  for (int j = 0; j < net.k1(); ++j)
    for (int r = 0; r < kNumChannels; ++r) {
      double w = rng.uniform(-0.02, 0.02);
      for (int i : modes.mode_indices(r)) net.W1(i, j) = w;
    }
  return net;
}

NetworkParams random_small_net(int side, std::uint64_t seed, int k1 = 8, int k2 = 6) {
  NetworkParams net = init_params(seed, patch_input_size(side), k1, k2,
                                  default_modality(side), NormStats::identity(kNumChannels),
                                  side, 2.0);
  net.W1 *= 0.05;  // keep scores spread inside (0,1)
  return net;
}

RgbdImage smooth_image(int w, int h, std::uint64_t seed) {
  RgbdImage img(w, h);
  Rng rng(seed);
  double fx = rng.uniform(0.03, 0.09), fy = rng.uniform(0.03, 0.09);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      img.channels[kDepth](r, c) = 2.0 + 0.3 * std::sin(fx * c) * std::cos(fy * r);
      img.channels[kY](r, c) = 0.5 + 0.2 * std::cos(fx * c + fy * r);
    }
  estimate_normals(img, 5);
  return img;
}

}  // namespace

TEST(EnumerateRects, ProductCountExample) {
  // 100x100, stride 10, angle step pi/2, one size pair: 10 * 10 * 2
  SearchSpace space;
  space.position_stride = 10.0;
  space.angle_step = kPi / 2.0;
  space.len_set = {40.0};
  space.wid_set = {20.0};
  auto rects = enumerate_rects(100, 100, space);
  EXPECT_EQ(rects.size(), 200u);
}

TEST(EnumerateRects, GripperFilterCanEmptyTheSet) {
  SearchSpace space;
  space.len_set = {40.0};
  space.wid_set = {20.0};
  space.gripper.max_wid = 10.0;
  auto rects = enumerate_rects(100, 100, space);
  EXPECT_TRUE(rects.empty());
}

TEST(EnumerateRects, CountMatchesNestedLoopRecount) {
  SearchSpace space;
  space.position_stride = 12.0;
  space.angle_step = kPi / 7.0;
  space.len_set = {18.0, 30.0, 44.0};
  space.wid_set = {10.0, 16.0, 24.0};
  space.gripper.min_wid = 12.0;
  space.gripper.max_len = 40.0;
  const int w = 130, h = 90;
  auto rects = enumerate_rects(w, h, space);

  // independent recount
  std::size_t nx = 0, ny = 0, na = 0, ns = 0;
  for (double x = 6.0; x < w; x += 12.0) ++nx;
  for (double y = 6.0; y < h; y += 12.0) ++ny;
  for (double a = 0.0; a < kPi - 1e-9; a += space.angle_step) ++na;
  for (double len : space.len_set)
    for (double wid : space.wid_set)
      if (len <= 40.0 && wid >= 12.0) ++ns;
  EXPECT_EQ(rects.size(), nx * ny * na * ns);

  // deterministic order: two calls agree element-wise
  auto again = enumerate_rects(w, h, space);
  ASSERT_EQ(rects.size(), again.size());
  for (std::size_t i = 0; i < rects.size(); ++i) {
    EXPECT_EQ(rects[i].cx, again[i].cx);
    EXPECT_EQ(rects[i].angle, again[i].angle);
  }
}

TEST(ScoreAll, PureAndWithinUnitInterval) {
  RgbdImage img = smooth_image(60, 50, 3);
  NetworkParams net = random_small_net(12, 5);
  std::vector<GraspRect> rects = {GraspRect(30, 25, 0.4, 20, 12), GraspRect(20, 20, 1.2, 16, 10),
                                  GraspRect(30, 25, 0.4, 20, 12)};  // duplicate of [0]
  auto scores = score_all(net, img, rects);
  EXPECT_EQ(scores[0], scores[2]);
  for (double s : scores) {
    EXPECT_GT(s, 0.0);
    EXPECT_LT(s, 1.0);
  }
}

TEST(ScoreAll, ArgmaxMatchesScalarLoopOracle) {
  RgbdImage img = smooth_image(80, 60, 4);
  NetworkParams net = random_small_net(12, 6);
  Rng rng(9);
  std::vector<GraspRect> rects;
  for (int i = 0; i < 50; ++i)
    rects.emplace_back(rng.uniform(15, 65), rng.uniform(15, 45), rng.uniform(0.0, kPi),
                       rng.uniform(12, 26), rng.uniform(8, 16));
  auto scores = score_all(net, img, rects);

  std::size_t best = 0;
  for (std::size_t i = 0; i < rects.size(); ++i) {
    double s = forward(net, extract_model_input(img, rects[i], net)).p;
    EXPECT_EQ(s, scores[i]);
    if (s > scores[best]) best = i;
  }
  std::size_t argmax = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[argmax]) argmax = i;
  EXPECT_EQ(argmax, best);
}

TEST(DetectTwoStage, FullTEqualsExhaustiveLargeSearchBitwise) {
  RgbdImage img = smooth_image(70, 60, 5);
  CascadeParams cascade;
  cascade.small = random_small_net(12, 11, 5, 4);
  cascade.large = random_small_net(12, 12, 9, 7);

  SearchSpace space;
  space.position_stride = 12.0;
  space.angle_step = kPi / 4.0;
  space.len_set = {20.0, 30.0};
  space.wid_set = {12.0};

  auto total = enumerate_rects(img.width, img.height, space).size();
  ASSERT_GT(total, 0u);
  DetectionResult two = detect_two_stage(cascade, img, space, total + 50);
  DetectionResult ex = detect_exhaustive(cascade.large, img, space);
  ASSERT_TRUE(two.best && ex.best);
  EXPECT_EQ(two.best->rect.cx, ex.best->rect.cx);
  EXPECT_EQ(two.best->rect.cy, ex.best->rect.cy);
  EXPECT_EQ(two.best->rect.angle, ex.best->rect.angle);
  EXPECT_EQ(two.best->rect.len, ex.best->rect.len);
  EXPECT_EQ(two.best->rect.wid, ex.best->rect.wid);
  EXPECT_EQ(two.best->stage2_score, ex.best->stage2_score);  // bitwise
  EXPECT_EQ(two.best->enum_index, ex.best->enum_index);
  EXPECT_EQ(two.stage2_evals, total);
}

TEST(DetectTwoStage, DegenerateTOneRescoresStageOneArgmax) {
  RgbdImage img = smooth_image(60, 50, 6);
  CascadeParams cascade;
  cascade.small = random_small_net(12, 13, 5, 4);
  cascade.large = random_small_net(12, 14, 8, 6);
  SearchSpace space;
  space.position_stride = 14.0;
  space.angle_step = kPi / 3.0;
  space.len_set = {22.0};
  space.wid_set = {12.0};

  DetectionResult det = detect_two_stage(cascade, img, space, 1);
  ASSERT_TRUE(det.best);
  EXPECT_EQ(det.stage2_evals, 1u);
  DetectionResult stage1 = detect_exhaustive(cascade.small, img, space);
  EXPECT_EQ(det.best->enum_index, stage1.best->enum_index);
  double rescored = forward(cascade.large,
                            extract_model_input(img, stage1.best->rect, cascade.large)).p;
  EXPECT_EQ(det.best->stage2_score, rescored);
}

TEST(DetectTwoStage, BestScoreMonotoneInT) {
  RgbdImage img = smooth_image(70, 55, 7);
  CascadeParams cascade;
  cascade.small = random_small_net(12, 15, 5, 4);
  cascade.large = random_small_net(12, 16, 8, 6);
  SearchSpace space;
  space.position_stride = 11.0;
  space.angle_step = kPi / 4.0;
  space.len_set = {18.0, 26.0};
  space.wid_set = {10.0};

  double prev = -1.0;
  for (std::size_t t : {1u, 3u, 10u, 40u, 200u, 100000u}) {
    DetectionResult det = detect_two_stage(cascade, img, space, t);
    ASSERT_TRUE(det.best);
    EXPECT_GE(det.best->stage2_score, prev);
    prev = det.best->stage2_score;
    EXPECT_LE(det.stage2_evals, t);
  }
}

TEST(DetectTwoStage, NoCandidatesIsTypedOutcome) {
  RgbdImage img = smooth_image(50, 40, 8);
  CascadeParams cascade;
  cascade.small = random_small_net(12, 17, 5, 4);
  cascade.large = random_small_net(12, 18, 8, 6);
  SearchSpace space;
  space.len_set = {30.0};
  space.wid_set = {20.0};
  space.gripper.max_len = 10.0;  // filters everything

  DetectionResult det = detect_two_stage(cascade, img, space, 100);
  EXPECT_TRUE(det.no_candidates());
  EXPECT_EQ(det.stage1_evals, 0u);
  EXPECT_EQ(det.stage2_evals, 0u);
}

TEST(DetectTwoStage, DeterministicIncludingCounters) {
  RgbdImage img = smooth_image(60, 60, 9);
  CascadeParams cascade;
  cascade.small = random_small_net(12, 19, 5, 4);
  cascade.large = random_small_net(12, 20, 8, 6);
  SearchSpace space;
  space.position_stride = 13.0;
  space.angle_step = kPi / 6.0;
  space.len_set = {20.0};
  space.wid_set = {12.0};

  DetectionResult a = detect_two_stage(cascade, img, space, 25);
  DetectionResult b = detect_two_stage(cascade, img, space, 25);
  ASSERT_TRUE(a.best && b.best);
  EXPECT_EQ(a.best->enum_index, b.best->enum_index);
  EXPECT_EQ(a.best->stage2_score, b.best->stage2_score);
  EXPECT_EQ(a.stage1_evals, b.stage1_evals);
  ASSERT_EQ(a.top_t.size(), b.top_t.size());
  for (std::size_t i = 0; i < a.top_t.size(); ++i)
    EXPECT_EQ(a.top_t[i].enum_index, b.top_t[i].enum_index);
}

TEST(ScoreHeatmap, MaxEqualsGlobalBestScore) {
  RgbdImage img = smooth_image(60, 50, 10);
  NetworkParams net = random_small_net(12, 21);
  SearchSpace space;
  space.position_stride = 9.0;
  space.angle_step = kPi / 4.0;
  space.len_set = {18.0};
  space.wid_set = {10.0};

  ScoreHeatmap hm = score_heatmap(net, img, space);
  DetectionResult best = detect_exhaustive(net, img, space);
  ASSERT_TRUE(best.best);
  double hmax = 0.0;
  bool any = false;
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c) {
      if (hm.left_has(r, c)) {
        hmax = std::max(hmax, hm.left(r, c));
        any = true;
      }
      if (hm.right_has(r, c)) {
        hmax = std::max(hmax, hm.right(r, c));
        any = true;
      }
    }
  ASSERT_TRUE(any);
  EXPECT_EQ(hmax, best.best->stage2_score);
}

TEST(ScoreHeatmap, MirrorSymmetryWithModeConstantNet) {
  // width 126 with stride 10.5 keeps the position grid closed under the
  // continuous mirror x -> 126 - x while every candidate center and plate
  // point stays off integer pixel boundaries; a mode-constant net scores
  // mirrored patches identically, so the left plane must be the mirror of
  // the right plane
  const int w = 126, h = 61;
  RgbdImage img(w, h);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      double xm = std::min<double>(c, w - 1 - c);  // symmetric in x
      img.channels[kDepth](r, c) = 2.0 + 0.01 * xm + 0.003 * r;
      img.channels[kY](r, c) = 0.4 + 0.005 * xm;
    }
  img.channels[kNormalZ].setConstant(1.0);

  NetworkParams net = mode_constant_net(12, 22);
  SearchSpace space;
  space.position_stride = 10.5;
  space.angle_step = kPi / 6.0;
  space.len_set = {20.0};
  space.wid_set = {12.0};

  ScoreHeatmap hm = score_heatmap(net, img, space);
  // angle 0 mirrors onto itself (pi - 0 wraps back to 0), so its plate
  // labels do not swap; every other angle maps left <-> right exactly.
  int both = 0, label_mismatch = 0;
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      int mc = w - 1 - c;
      if (hm.left_has(r, c) && hm.right_has(r, mc)) {
        EXPECT_NEAR(hm.left(r, c), hm.right(r, mc), 1e-12);
        ++both;
      } else if (hm.left_has(r, c) != hm.right_has(r, mc)) {
        ++label_mismatch;  // wrap-angle splats only
      }
      // the per-pixel max over both plates is exactly mirror symmetric
      double m1 = -1.0, m2 = -1.0;
      if (hm.left_has(r, c)) m1 = std::max(m1, hm.left(r, c));
      if (hm.right_has(r, c)) m1 = std::max(m1, hm.right(r, c));
      if (hm.left_has(r, mc)) m2 = std::max(m2, hm.left(r, mc));
      if (hm.right_has(r, mc)) m2 = std::max(m2, hm.right(r, mc));
      EXPECT_NEAR(m1, m2, 1e-12) << r << "," << c;
    }
  EXPECT_GT(both, 200);
  EXPECT_LT(label_mismatch, both / 2);
}

TEST(ScoreHeatmap, SpotCheckAgainstDirectRecomputation) {
  RgbdImage img = smooth_image(55, 45, 11);
  NetworkParams net = random_small_net(12, 23);
  SearchSpace space;
  space.position_stride = 8.0;
  space.angle_step = kPi / 3.0;
  space.len_set = {16.0};
  space.wid_set = {10.0};

  ScoreHeatmap hm = score_heatmap(net, img, space);
  auto rects = enumerate_rects(img.width, img.height, space);
  auto scores = score_all(net, img, rects);

  Rng rng(12);
  int checked = 0;
  for (int tries = 0; tries < 500 && checked < 5; ++tries) {
    int r = rng.below_int(img.height), c = rng.below_int(img.width);
    if (!hm.left_has(r, c)) continue;
    double expect = -1.0;
    for (std::size_t i = 0; i < rects.size(); ++i) {
      Point2 p = rects[i].left_plate_center();
      if (static_cast<int>(std::floor(p.x)) == c && static_cast<int>(std::floor(p.y)) == r)
        expect = std::max(expect, scores[i]);
    }
    ASSERT_GE(expect, 0.0);
    EXPECT_EQ(hm.left(r, c), expect);
    ++checked;
  }
  EXPECT_EQ(checked, 5);
}
