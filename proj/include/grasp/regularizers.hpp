#pragma once

#include <cmath>
#include <string>

#include "grasp/common.hpp"
#include "grasp/modality.hpp"

namespace grasp {

enum class RegKind { kL1, kL2, kGroupPNorm, kGroupMaxLse, kGroupL0Max };

inline RegKind reg_kind_from_string(const std::string& s) {
  if (s == "l1") return RegKind::kL1;
  if (s == "l2") return RegKind::kL2;
  if (s == "group_pnorm") return RegKind::kGroupPNorm;
  if (s == "group_max_lse") return RegKind::kGroupMaxLse;
  if (s == "group_l0_max") return RegKind::kGroupL0Max;
  throw UsageError("unknown regularizer kind: " + s);
}

inline const char* reg_kind_name(RegKind k) {
  switch (k) {
    case RegKind::kL1: return "l1";
    case RegKind::kL2: return "l2";
    case RegKind::kGroupPNorm: return "group_pnorm";
    case RegKind::kGroupMaxLse: return "group_max_lse";
    case RegKind::kGroupL0Max: return "group_l0_max";
  }
  return "?";
}

/// Weight-penalty configuration. `beta` weights f(W), `lambda` weights the
/// activation sparsity g(h), `eps_g` smooths |.| so gradients exist at zero.
struct RegConfig {
  RegKind kind = RegKind::kL1;
  double p = 2.0;        // group_pnorm order
  double alpha = 20.0;   // log-sum-exp sharpness for the smooth-max kinds
  double beta = 3e-3;    // weight of f(W)
  double lambda = 3.0;   // weight of g(h)
  double eps_g = 1e-6;

  void validate() const {
    if (kind == RegKind::kGroupPNorm && p < 1.0)
      throw UsageError("group_pnorm requires p >= 1");
    if (alpha <= 0.0) throw UsageError("regularizer alpha must be positive");
    if (beta < 0.0 || lambda < 0.0) throw UsageError("beta and lambda must be non-negative");
    if (eps_g <= 0.0) throw UsageError("eps_g must be positive");
  }
};

namespace detail {

inline double smooth_abs(double w, double eps) { return std::sqrt(w * w + eps); }

inline double smooth_abs_deriv(double w, double eps) {
  double s = smooth_abs(w, eps);
  return s > 0.0 ? w / s : 0.0;
}

}  // namespace detail

/// Smoothed-L1 sparsity penalty over hidden activations:
/// g(h) = sum_j sqrt(h_j^2 + eps_g). Gradient written to `grad` when given.
inline double sparsity_g(const Vec& h, double eps_g, Vec* grad = nullptr) {
  double value = 0.0;
  if (grad) grad->resize(h.size());
  for (Eigen::Index j = 0; j < h.size(); ++j) {
    double s = detail::smooth_abs(h[j], eps_g);
    value += s;
    if (grad) (*grad)[j] = s > 0.0 ? h[j] / s : 0.0;
  }
  return value;
}

/// Smoothed L1 weight cost: sum of sqrt(w^2 + eps) over all entries.
/// eps = 0 gives the exact L1 norm (subgradient 0 at w == 0).
inline double reg_l1(const Mat& W, double eps, Mat* grad = nullptr) {
  double value = 0.0;
  if (grad) grad->resize(W.rows(), W.cols());
  for (Eigen::Index i = 0; i < W.size(); ++i) {
    double w = W.data()[i];
    double s = detail::smooth_abs(w, eps);
    value += s;
    if (grad) grad->data()[i] = s > 0.0 ? w / s : 0.0;
  }
  return value;
}

/// Squared L2 weight cost ||W||_2^2; exact gradient 2W.
inline double reg_l2(const Mat& W, Mat* grad = nullptr) {
  if (grad) *grad = 2.0 * W;
  return W.squaredNorm();
}

/// Group p-norm over (feature, mode) groups:
///   f(W) = sum_j sum_r ( sum_{i in r} |W_ij|^p )^{1/p}
/// with |.| smoothed by eps. Larger p penalizes the big weights of each mode
/// more strongly; the value decreases toward the sum of group maxima.
inline double group_pnorm(const Mat& W, const ModalityMask& modes, double p, double eps,
                          Mat* grad = nullptr) {
  if (p < 1.0) throw UsageError("group_pnorm: p must be >= 1");
  if (W.rows() != modes.size())
    throw UsageError("group_pnorm: weight rows do not match modality mask");
  if (grad) {
    grad->resize(W.rows(), W.cols());
    grad->setZero();
  }
  double value = 0.0;
  for (Eigen::Index j = 0; j < W.cols(); ++j) {
    for (int r = 0; r < modes.num_modes(); ++r) {
      const auto& idx = modes.mode_indices(r);
      if (idx.empty()) continue;
      double m = 0.0;
      for (int i : idx) m = std::max(m, detail::smooth_abs(W(i, j), eps));
      if (m == 0.0) continue;  // only possible with eps == 0 and all-zero group
      // factor out the max so s^p cannot overflow for large p
      double t = 0.0;
      for (int i : idx) {
        double u = detail::smooth_abs(W(i, j), eps) / m;
        t += std::pow(u, p);
      }
      double g = m * std::pow(t, 1.0 / p);
      value += g;
      if (grad)
        for (int i : idx) {
          double s = detail::smooth_abs(W(i, j), eps);
          (*grad)(i, j) = std::pow(s / g, p - 1.0) * detail::smooth_abs_deriv(W(i, j), eps);
        }
    }
  }
  return value;
}

namespace detail {

/// Log-sum-exp smooth maximum of the smoothed |W_ij| over one group, with
/// the softmax weights optionally written out for the chain rule.
inline double group_smooth_max(const Mat& W, const std::vector<int>& idx, Eigen::Index j,
                               double alpha, double eps, std::vector<double>* softmax = nullptr) {
  double m = -1.0;
  for (int i : idx) m = std::max(m, smooth_abs(W(i, j), eps));
  double z = 0.0;
  if (softmax) softmax->resize(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    double e = std::exp(alpha * (smooth_abs(W(idx[k], j), eps) - m));
    z += e;
    if (softmax) (*softmax)[k] = e;
  }
  if (softmax)
    for (auto& w : *softmax) w /= z;
  return m + std::log(z) / alpha;
}

}  // namespace detail

/// Smooth max-norm: per (feature, mode) group the log-sum-exp upper bound on
/// max |W_ij|, i.e. (1/alpha) ln sum exp(alpha * s(W_ij)), max-shifted for
/// overflow safety. Sandwich: group max <= value <= max + ln(group size)/alpha.
inline double group_max_lse(const Mat& W, const ModalityMask& modes, double alpha, double eps,
                            Mat* grad = nullptr) {
  if (W.rows() != modes.size())
    throw UsageError("group_max_lse: weight rows do not match modality mask");
  if (grad) {
    grad->resize(W.rows(), W.cols());
    grad->setZero();
  }
  double value = 0.0;
  std::vector<double> softmax;
  for (Eigen::Index j = 0; j < W.cols(); ++j)
    for (int r = 0; r < modes.num_modes(); ++r) {
      const auto& idx = modes.mode_indices(r);
      if (idx.empty()) continue;
      value += detail::group_smooth_max(W, idx, j, alpha, eps, grad ? &softmax : nullptr);
      if (grad)
        for (std::size_t k = 0; k < idx.size(); ++k)
          (*grad)(idx[k], j) = softmax[k] * detail::smooth_abs_deriv(W(idx[k], j), eps);
    }
  return value;
}

/// Smoothed L0-of-max: ln(1 + m^2) of each group's smooth max m. Penalizes a
/// mode's presence in a feature while staying nearly flat in the size of an
/// already-nonzero maximum.
inline double group_l0_max(const Mat& W, const ModalityMask& modes, double alpha, double eps,
                           Mat* grad = nullptr) {
  if (W.rows() != modes.size())
    throw UsageError("group_l0_max: weight rows do not match modality mask");
  if (grad) {
    grad->resize(W.rows(), W.cols());
    grad->setZero();
  }
  double value = 0.0;
  std::vector<double> softmax;
  for (Eigen::Index j = 0; j < W.cols(); ++j)
    for (int r = 0; r < modes.num_modes(); ++r) {
      const auto& idx = modes.mode_indices(r);
      if (idx.empty()) continue;
      double m = detail::group_smooth_max(W, idx, j, alpha, eps, grad ? &softmax : nullptr);
      value += std::log1p(m * m);
      if (grad) {
        double outer = 2.0 * m / (1.0 + m * m);
        for (std::size_t k = 0; k < idx.size(); ++k)
          (*grad)(idx[k], j) = outer * softmax[k] * detail::smooth_abs_deriv(W(idx[k], j), eps);
      }
    }
  return value;
}

/// Dispatch on kind; returns the unweighted f(W) (callers scale by beta).
inline double regularizer(const Mat& W, const ModalityMask& modes, const RegConfig& cfg,
                          Mat* grad = nullptr) {
  switch (cfg.kind) {
    case RegKind::kL1: return reg_l1(W, cfg.eps_g, grad);
    case RegKind::kL2: return reg_l2(W, grad);
    case RegKind::kGroupPNorm: return group_pnorm(W, modes, cfg.p, cfg.eps_g, grad);
    case RegKind::kGroupMaxLse: return group_max_lse(W, modes, cfg.alpha, cfg.eps_g, grad);
    case RegKind::kGroupL0Max: return group_l0_max(W, modes, cfg.alpha, cfg.eps_g, grad);
  }
  throw UsageError("regularizer: unhandled kind");
}

/// Smooth max of each (feature, mode) group, used by the mode-sparsity
/// diagnostics: entry (r, j) is the log-sum-exp max of mode r in feature j.
inline Mat per_group_smooth_max(const Mat& W, const ModalityMask& modes, double alpha,
                                double eps) {
  Mat out(modes.num_modes(), W.cols());
  for (Eigen::Index j = 0; j < W.cols(); ++j)
    for (int r = 0; r < modes.num_modes(); ++r) {
      const auto& idx = modes.mode_indices(r);
      out(r, j) = idx.empty() ? 0.0 : detail::group_smooth_max(W, idx, j, alpha, eps);
    }
  return out;
}

}  // namespace grasp
