#include <gtest/gtest.h>

#include "grasp/patch.hpp"
#include "testutil.hpp"

using namespace grasp;

namespace {

RgbdImage flat_image(int w, int h, double depth = 2.0) {
  RgbdImage img(w, h);
  img.channels[kDepth].setConstant(depth);
  img.channels[kY].setConstant(0.5);
  img.channels[kNormalZ].setConstant(1.0);
  return img;
}

int mode_mu_sum(const PatchInput& p, int mode, int side) {
  int sum = 0;
  for (int r = 0; r < side; ++r)
    for (int c = 0; c < side; ++c)
      sum += p.mu[flatten_index(mode, r, c, side)] != 0.0 ? 1 : 0;
  return sum;
}

}  // namespace

TEST(ExtractPatch, SquareRectFillsFieldFullyMaskedIn) {
  RgbdImage img = flat_image(64, 64);
  GraspRect rect(32, 32, 0.0, 24, 24);
  PatchInput p = extract_patch(img, rect, 24);
  EXPECT_EQ(p.mu.sum(), 7 * 24 * 24);
  EXPECT_EQ(p.x.size(), patch_input_size(24));
}

TEST(ExtractPatch, TwoToOneAspectMasksHalfTheRows) {
  RgbdImage img = flat_image(96, 96);
  GraspRect rect(48, 48, 0.3, 48, 24);  // len = 2 wid
  PatchInput p = extract_patch(img, rect, 24);
  for (int mode = 0; mode < kNumChannels; ++mode) {
    int in = mode_mu_sum(p, mode, 24);
    EXPECT_NEAR(in, 24 * 12, 24);  // half the rows, +-1 row of rounding
  }
  // active rows centered: row 6..17 in, rows 0..5 and 18..23 out
  EXPECT_EQ(p.mu[flatten_index(0, 0, 12, 24)], 0.0);
  EXPECT_EQ(p.mu[flatten_index(0, 12, 12, 24)], 1.0);
  EXPECT_EQ(p.mu[flatten_index(0, 23, 12, 24)], 0.0);
}

TEST(ExtractPatch, ConstantChannelSurvivesAnyRotation) {
  RgbdImage img = flat_image(100, 100);
  img.channels[kU].setConstant(-0.125);
  for (double angle : {0.0, 0.35, 1.1, 2.6}) {
    GraspRect rect(50, 48, angle, 30, 18);
    PatchInput p = extract_patch(img, rect, 24);
    int seen = 0;
    for (int r = 0; r < 24; ++r)
      for (int c = 0; c < 24; ++c) {
        int i = flatten_index(kU, r, c, 24);
        if (p.mu[i] == 0.0) {
          EXPECT_EQ(p.x[i], 0.0);
          continue;
        }
        EXPECT_NEAR(p.x[i], -0.125, 1e-6);
        ++seen;
      }
    EXPECT_GT(seen, 0);
  }
}

TEST(ExtractPatch, RotationConsistentOnSmoothImage) {
  const double cx = 40.0, cy = 36.0, theta = 0.6;
  auto field = [](double x, double y) { return std::sin(0.11 * x) * std::cos(0.13 * y) + 0.4; };

  RgbdImage a = flat_image(80, 72);
  RgbdImage b = flat_image(80, 72);
  for (int r = 0; r < a.height; ++r)
    for (int c = 0; c < a.width; ++c) {
      double px = c + 0.5, py = r + 0.5;
      a.channels[kY](r, c) = field(px, py);
      // b is a pre-rotated by -theta about the rect center
      double dx = px - cx, dy = py - cy;
      double rx = cx + std::cos(theta) * dx - std::sin(theta) * dy;
      double ry = cy + std::sin(theta) * dx + std::cos(theta) * dy;
      b.channels[kY](r, c) = field(rx, ry);
    }

  PatchInput pa = extract_patch(a, GraspRect(cx, cy, theta, 30, 20), 24);
  PatchInput pb = extract_patch(b, GraspRect(cx, cy, 0.0, 30, 20), 24);
  int compared = 0;
  for (int i = 0; i < pa.x.size(); ++i) {
    if (pa.mu[i] == 0.0 || pb.mu[i] == 0.0) continue;
    EXPECT_NEAR(pa.x[i], pb.x[i], 2e-2);
    ++compared;
  }
  EXPECT_GT(compared, 24 * 12);
}

TEST(ExtractPatch, InvalidSourcePixelsMaskOutTouchingCells) {
  RgbdImage img = flat_image(64, 64);
  for (int r = 28; r < 36; ++r)
    for (int c = 28; c < 36; ++c) img.valid(r, c) = false;
  GraspRect rect(32, 32, 0.0, 24, 24);
  PatchInput p = extract_patch(img, rect, 24);
  // 24x24 rect maps 1:1; the 8x8 invalid block plus a 1-cell bilinear halo
  int masked_out = 7 * 24 * 24 - static_cast<int>(p.mu.sum());
  EXPECT_GE(masked_out, 8 * 8 * 7);
  EXPECT_LE(masked_out, 10 * 10 * 7);
  for (int i = 0; i < p.x.size(); ++i)
    if (p.mu[i] == 0.0) {
      EXPECT_EQ(p.x[i], 0.0);
    }
}

TEST(ExtractPatch, PartiallyOutsideImageIsPaddedNotError) {
  RgbdImage img = flat_image(40, 40);
  GraspRect rect(2, 20, 0.0, 24, 24);  // sticks out on the left
  PatchInput p = extract_patch(img, rect, 24);
  EXPECT_GT(p.mu.sum(), 0.0);
  EXPECT_LT(p.mu.sum(), 7 * 24 * 24);
}

TEST(ExtractPatch, Errors) {
  RgbdImage img = flat_image(40, 40);
  EXPECT_THROW(extract_patch(img, GraspRect(-60, -60, 0.0, 20, 10), 24), DataError);
  EXPECT_THROW(extract_patch(img, GraspRect(20, 20, 0.0, 20, 10), 0), UsageError);
  EXPECT_THROW(extract_patch(img, GraspRect(20, 20, 0.0, 20, 10), -3), UsageError);
}

TEST(FlattenIndex, RoundTripsExactly) {
  const int side = 24;
  std::vector<int> seen(static_cast<std::size_t>(patch_input_size(side)), 0);
  for (int mode = 0; mode < kNumChannels; ++mode)
    for (int r = 0; r < side; ++r)
      for (int c = 0; c < side; ++c) {
        int i = flatten_index(mode, r, c, side);
        ASSERT_GE(i, 0);
        ASSERT_LT(i, patch_input_size(side));
        seen[static_cast<std::size_t>(i)] += 1;
        // unflatten
        int m2 = i / (side * side);
        int r2 = (i / side) % side;
        int c2 = i % side;
        EXPECT_EQ(m2, mode);
        EXPECT_EQ(r2, r);
        EXPECT_EQ(c2, c);
      }
  for (int v : seen) EXPECT_EQ(v, 1);
}

TEST(DefaultModality, BlocksOf576) {
  ModalityMask m = default_modality(24);
  EXPECT_EQ(m.num_modes(), 7);
  EXPECT_EQ(m.size(), 4032);
  for (int r = 0; r < 7; ++r) EXPECT_EQ(m.mode_count(r), 576);
  EXPECT_EQ(m.mode_of(0), 0);
  EXPECT_EQ(m.mode_of(576), 1);
  EXPECT_EQ(m.mode_of(4031), 6);
}

TEST(MaskScale, AllMaskedInIsIdentity) {
  RgbdImage img = flat_image(64, 64);
  img.channels[kV].setConstant(0.25);
  PatchInput p = extract_patch(img, GraspRect(32, 32, 0.0, 24, 24), 24);
  PatchInput scaled = mask_scale(p, default_modality(24), 2.0);
  for (int r = 0; r < 7; ++r) EXPECT_DOUBLE_EQ(scaled.psi[r], 1.0);
  EXPECT_TRUE(scaled.x.isApprox(p.x));
}

TEST(MaskScale, HalfMaskedModeGetsPsiTwo) {
  const int side = 24;
  ModalityMask modes = default_modality(side);
  PatchInput p;
  p.x = Vec::Zero(patch_input_size(side));
  p.mu = Vec::Ones(patch_input_size(side));
  p.psi = Vec::Ones(kNumChannels);
  for (int i = 0; i < 288; ++i) {  // mask out half of mode 0 (576 cells)
    p.mu[i] = 0.0;
    p.x[i] = 0.0;
  }
  for (int i = 288; i < 576; ++i) p.x[i] = 1.5;

  PatchInput s4 = mask_scale(p, modes, 4.0);
  EXPECT_DOUBLE_EQ(s4.psi[0], 2.0);
  EXPECT_DOUBLE_EQ(s4.x[300], 3.0);
  for (int r = 1; r < 7; ++r) EXPECT_DOUBLE_EQ(s4.psi[r], 1.0);

  // the cap limits the scaling factor
  PatchInput s15 = mask_scale(p, modes, 1.5);
  EXPECT_DOUBLE_EQ(s15.psi[0], 1.5);
  EXPECT_DOUBLE_EQ(s15.x[300], 2.25);
}

TEST(MaskScale, FullyMaskedOutModeContributesZeros) {
  const int side = 4;
  ModalityMask modes = default_modality(side);
  PatchInput p;
  p.x = Vec::Zero(patch_input_size(side));
  p.mu = Vec::Ones(patch_input_size(side));
  p.psi = Vec::Ones(kNumChannels);
  for (int i = 0; i < 16; ++i) p.mu[i] = 0.0;  // whole mode 0 out
  PatchInput s = mask_scale(p, modes, 2.0);
  EXPECT_DOUBLE_EQ(s.psi[0], 0.0);
  for (int i = 0; i < 16; ++i) EXPECT_EQ(s.x[i], 0.0);
}

TEST(MaskScale, RejectsBadCap) {
  PatchInput p;
  p.x = Vec::Zero(patch_input_size(4));
  p.mu = Vec::Ones(patch_input_size(4));
  p.psi = Vec::Ones(kNumChannels);
  EXPECT_THROW(mask_scale(p, default_modality(4), 0.5), UsageError);
}

TEST(MaskScale, UncappedScalingConservesConstantChannelSums) {
  // per-mode scaled sums must equal the full-patch sums regardless of mask
  const int side = 24;
  ModalityMask modes = default_modality(side);
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    Vec values(kNumChannels);
    for (int r = 0; r < kNumChannels; ++r) values[r] = rng.uniform(-2.0, 2.0);
    PatchInput p;
    p.x = Vec::Zero(patch_input_size(side));
    p.mu = Vec::Zero(patch_input_size(side));
    p.psi = Vec::Ones(kNumChannels);
    for (int i = 0; i < p.x.size(); ++i) {
      bool in = rng.uniform() < 0.6;
      p.mu[i] = in ? 1.0 : 0.0;
      p.x[i] = in ? values[modes.mode_of(i)] : 0.0;
    }
    for (int r = 0; r < kNumChannels; ++r)
      if (std::none_of(modes.mode_indices(r).begin(), modes.mode_indices(r).end(),
                       [&](int i) { return p.mu[i] != 0.0; }))
        p.mu[modes.mode_indices(r)[0]] = 1.0, p.x[modes.mode_indices(r)[0]] = values[r];

    PatchInput s = mask_scale(p, modes, 1e18);
    for (int r = 0; r < kNumChannels; ++r) {
      double scaled_sum = 0.0;
      for (int i : modes.mode_indices(r)) scaled_sum += s.x[i];
      double full_sum = values[r] * modes.mode_count(r);
      EXPECT_NEAR(scaled_sum, full_sum, 1e-9 * std::max(1.0, std::fabs(full_sum)));
    }
  }
}

TEST(NormStats, WhitensMaskedInCellsOnly) {
  const int side = 4;
  ModalityMask modes = default_modality(side);
  Rng rng(5);
  std::vector<PatchInput> patches;
  for (int t = 0; t < 30; ++t) {
    PatchInput p;
    p.x = Vec::Zero(patch_input_size(side));
    p.mu = Vec::Ones(patch_input_size(side));
    p.psi = Vec::Ones(kNumChannels);
    for (int i = 0; i < p.x.size(); ++i) {
      if (rng.uniform() < 0.2) {
        p.mu[i] = 0.0;
        continue;
      }
      p.x[i] = rng.normal(1.0 + modes.mode_of(i), 0.5);
    }
    patches.push_back(std::move(p));
  }
  NormStats stats = compute_norm_stats(patches, modes);
  for (int r = 0; r < kNumChannels; ++r) EXPECT_NEAR(stats.mean[r], 1.0 + r, 0.15);

  for (auto& p : patches) apply_norm_stats(p, stats, modes);
  Vec sum = Vec::Zero(kNumChannels), count = Vec::Zero(kNumChannels);
  for (const auto& p : patches)
    for (int i = 0; i < p.x.size(); ++i) {
      if (p.mu[i] == 0.0) {
        EXPECT_EQ(p.x[i], 0.0);  // padding untouched
        continue;
      }
      sum[modes.mode_of(i)] += p.x[i];
      count[modes.mode_of(i)] += 1.0;
    }
  for (int r = 0; r < kNumChannels; ++r) EXPECT_NEAR(sum[r] / count[r], 0.0, 1e-9);
}
