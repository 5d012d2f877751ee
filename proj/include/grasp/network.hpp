#pragma once

#include <cmath>

#include "grasp/common.hpp"
#include "grasp/modality.hpp"
#include "grasp/patch.hpp"
#include "grasp/rng.hpp"

namespace grasp {

/// Numerically stable logistic function. Output is clamped away from exact
/// 0/1 (by 1e-12) only when rounding would reach them, so downstream logs
/// stay finite.
inline double sigmoid(double a) {
  double s;
  if (a >= 0.0) {
    s = 1.0 / (1.0 + std::exp(-a));
  } else {
    double e = std::exp(a);
    s = e / (1.0 + e);
  }
  constexpr double eps = 1e-12;
  if (s <= 0.0) return eps;
  if (s >= 1.0) return 1.0 - eps;
  return s;
}

inline void sigmoid_inplace(Mat& m) {
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = sigmoid(m.data()[i]);
}
inline void sigmoid_inplace(Vec& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = sigmoid(v[i]);
}

/// Flattening-order tag stored in model files. Version 1: mode-major,
/// row-major within a mode.
inline constexpr std::uint32_t kFlattenModeMajor = 1;

/// Two-hidden-layer network: W1 (N x K1), W2 (K1 x K2), a K2-vector W3 and
/// biases. Weight column j holds the fan-in of hidden unit j. The modality
/// mask, whitening stats, patch side and scale cap ride along so the model
/// file fully determines the input pipeline.
struct NetworkParams {
  Mat W1;
  Vec b1;
  Mat W2;
  Vec b2;
  Vec W3;
  double b3 = 0.0;

  ModalityMask modality;
  NormStats norm;
  std::uint32_t flatten_order = kFlattenModeMajor;
  int patch_side = 24;
  double scale_cap = 2.0;

  int input_size() const { return static_cast<int>(W1.rows()); }
  int k1() const { return static_cast<int>(W1.cols()); }
  int k2() const { return static_cast<int>(W2.cols()); }

  void check_consistent() const {
    if (W2.rows() != W1.cols() || W3.size() != W2.cols() || b1.size() != W1.cols() ||
        b2.size() != W2.cols())
      throw DataError("NetworkParams: inconsistent layer dimensions");
    if (modality.size() != input_size())
      throw DataError("NetworkParams: modality mask does not match input size");
    if (!W1.allFinite() || !W2.allFinite() || !W3.allFinite() || !b1.allFinite() ||
        !b2.allFinite() || !std::isfinite(b3))
      throw NumericalError("NetworkParams: non-finite weights");
  }
};

struct ForwardActivations {
  Vec h1;
  Vec h2;
  double p = 0.5;  // P(graspable | x)
};

/// Full forward pass for one (already scaled) input vector.
inline ForwardActivations forward(const NetworkParams& net, const Vec& x) {
  if (x.size() != net.W1.rows())
    throw UsageError("forward: input length does not match W1");
  ForwardActivations act;
  act.h1 = net.W1.transpose() * x + net.b1;
  sigmoid_inplace(act.h1);
  act.h2 = net.W2.transpose() * act.h1 + net.b2;
  sigmoid_inplace(act.h2);
  act.p = sigmoid(net.W3.dot(act.h2) + net.b3);
  return act;
}

/// Batch forward over X (N x M, one example per column). Returns the
/// graspability row vector; optionally exposes the hidden activations.
inline Vec forward_batch(const NetworkParams& net, const Mat& X, Mat* h1_out = nullptr,
                         Mat* h2_out = nullptr) {
  if (X.rows() != net.W1.rows())
    throw UsageError("forward_batch: input rows do not match W1");
  Mat h1 = net.W1.transpose() * X;
  h1.colwise() += net.b1;
  sigmoid_inplace(h1);
  Mat h2 = net.W2.transpose() * h1;
  h2.colwise() += net.b2;
  sigmoid_inplace(h2);
  Vec p = h2.transpose() * net.W3;
  p.array() += net.b3;
  sigmoid_inplace(p);
  if (h1_out) *h1_out = std::move(h1);
  if (h2_out) *h2_out = std::move(h2);
  return p;
}

/// Tied-weights linear decode: x_hat = W h, no output nonlinearity.
inline Vec reconstruct(const Mat& W, const Vec& h) {
  if (h.size() != W.cols()) throw UsageError("reconstruct: hidden size does not match W");
  return W * h;
}

/// Uniform(-b, b) init with b = sqrt(6 / (fan_in + fan_out)); biases zero.
inline Mat init_weight_matrix(Rng& rng, int rows, int cols) {
  double bound = std::sqrt(6.0 / (rows + cols));
  Mat W(rows, cols);
  // column-major fill order so the draw sequence matches memory layout
  for (Eigen::Index i = 0; i < W.size(); ++i) W.data()[i] = rng.uniform(-bound, bound);
  return W;
}

inline NetworkParams init_params(std::uint64_t seed, int input, int k1, int k2,
                                 ModalityMask modality, NormStats norm,
                                 int patch_side = 24, double scale_cap = 2.0) {
  if (input <= 0 || k1 <= 0 || k2 <= 0) throw UsageError("init_params: sizes must be positive");
  Rng rng(seed);
  NetworkParams net;
  net.W1 = init_weight_matrix(rng, input, k1);
  net.b1 = Vec::Zero(k1);
  net.W2 = init_weight_matrix(rng, k1, k2);
  net.b2 = Vec::Zero(k2);
  net.W3 = init_weight_matrix(rng, k2, 1).col(0);
  net.b3 = 0.0;
  net.modality = std::move(modality);
  net.norm = std::move(norm);
  net.patch_side = patch_side;
  net.scale_cap = scale_cap;
  net.check_consistent();
  return net;
}

/// The small/large parameter pair for cascaded detection. Both nets must
/// agree on the input pipeline.
struct CascadeParams {
  NetworkParams small;
  NetworkParams large;

  void check_consistent() const {
    small.check_consistent();
    large.check_consistent();
    if (small.input_size() != large.input_size() || !(small.modality == large.modality) ||
        small.flatten_order != large.flatten_order || small.patch_side != large.patch_side)
      throw DataError("CascadeParams: stage networks disagree on the input pipeline");
  }
};

}  // namespace grasp
