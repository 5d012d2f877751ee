#pragma once

#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "grasp/dataset.hpp"
#include "grasp/network.hpp"
#include "grasp/optimize.hpp"
#include "grasp/regularizers.hpp"

namespace grasp {

struct TrainConfig {
  RegConfig reg1;  // f(W1), weighted by reg1.beta
  RegConfig reg2;  // f(W2), weighted by reg2.beta
  double lambda = 3.0;  // activation sparsity weight in pretraining
  OptMethod optimizer = OptMethod::kLbfgs;
  int max_iters = 400;
  double tol = 1e-6;
  std::uint64_t seed = 0;
  int max_examples = 0;  // optional cap on the patch count (0 = use all)
  double mask_scale_cap = 2.0;

  OptimOptions optim() const {
    OptimOptions o;
    o.method = optimizer;
    o.max_iters = max_iters;
    o.tol = tol;
    return o;
  }
  void validate() const {
    if (max_iters <= 0) throw UsageError("TrainConfig: max_iters must be positive");
    if (tol <= 0.0) throw UsageError("TrainConfig: tol must be positive");
    if (lambda < 0.0) throw UsageError("TrainConfig: lambda must be non-negative");
    reg1.validate();
    reg2.validate();
  }
};

/// Supervised training set: scaled inputs (one column per example), binary
/// labels, and the masks they were produced with.
struct LabeledDataset {
  Mat X;
  Vec y;
  Mat mu;  // optional: empty when the masks are already folded into X

  int size() const { return static_cast<int>(X.cols()); }
  void validate() const {
    if (X.cols() == 0) throw DataError("LabeledDataset: empty");
    if (y.size() != X.cols()) throw DataError("LabeledDataset: label count mismatch");
    if (mu.size() != 0 && (mu.rows() != X.rows() || mu.cols() != X.cols()))
      throw DataError("LabeledDataset: mask shape mismatch");
    for (Eigen::Index t = 0; t < y.size(); ++t)
      if (y[t] != 0.0 && y[t] != 1.0) throw DataError("LabeledDataset: labels must be 0/1");
  }
};

inline LabeledDataset to_labeled(const PatchDataset& ds) {
  LabeledDataset out;
  out.X = ds.inputs();
  out.y = ds.labels;
  out.mu.resize(out.X.rows(), out.X.cols());
  for (int t = 0; t < ds.size(); ++t) out.mu.col(t) = ds.scaled[static_cast<std::size_t>(t)].mu;
  out.validate();
  return out;
}

/// One layer's parameters as the flat vector [vec(W); b] (column-major).
inline Vec pack_layer(const Mat& W, const Vec& b) {
  Vec theta(W.size() + b.size());
  theta.head(W.size()) = Eigen::Map<const Vec>(W.data(), W.size());
  theta.tail(b.size()) = b;
  return theta;
}

inline void unpack_layer(const Vec& theta, Mat& W, Vec& b) {
  W = Eigen::Map<const Mat>(theta.data(), W.rows(), W.cols());
  b = theta.tail(b.size());
}

/// Whole-network flat layout: [vec(W1); b1; vec(W2); b2; W3; b3].
inline Vec pack_params(const NetworkParams& net) {
  Vec theta(net.W1.size() + net.b1.size() + net.W2.size() + net.b2.size() + net.W3.size() + 1);
  Eigen::Index o = 0;
  theta.segment(o, net.W1.size()) = Eigen::Map<const Vec>(net.W1.data(), net.W1.size());
  o += net.W1.size();
  theta.segment(o, net.b1.size()) = net.b1;
  o += net.b1.size();
  theta.segment(o, net.W2.size()) = Eigen::Map<const Vec>(net.W2.data(), net.W2.size());
  o += net.W2.size();
  theta.segment(o, net.b2.size()) = net.b2;
  o += net.b2.size();
  theta.segment(o, net.W3.size()) = net.W3;
  o += net.W3.size();
  theta[o] = net.b3;
  return theta;
}

inline void unpack_params(const Vec& theta, NetworkParams& net) {
  Eigen::Index o = 0;
  net.W1 = Eigen::Map<const Mat>(theta.data() + o, net.W1.rows(), net.W1.cols());
  o += net.W1.size();
  net.b1 = theta.segment(o, net.b1.size());
  o += net.b1.size();
  net.W2 = Eigen::Map<const Mat>(theta.data() + o, net.W2.rows(), net.W2.cols());
  o += net.W2.size();
  net.b2 = theta.segment(o, net.b2.size());
  o += net.b2.size();
  net.W3 = theta.segment(o, net.W3.size());
  o += net.W3.size();
  net.b3 = theta[o];
}

/// Inputs to one layer's autoencoder phase. For the first layer, `inputs`
/// are the psi-scaled patches, `targets` the unscaled ones, and `penalty`
/// carries mu * psi per coordinate (the masked, scaled reconstruction
/// weighting); for the second layer all three collapse to the layer-1
/// activations with unit weights.
struct PretrainData {
  Mat inputs;
  Mat targets;
  Mat penalty;
  ModalityMask modes;
};

/// Value and gradient of the layer autoencoder objective
///   sum_t sum_i penalty_it (xhat_it - target_it)^2
///   + lambda * sum_jt g(h_jt) + beta * f(W)
/// with tied weights (decode through W transpose-free: xhat = W h).
inline double pretrain_objective(const PretrainData& data, const Mat& W, const Vec& b,
                                 const RegConfig& reg, double lambda, Mat* gW = nullptr,
                                 Vec* gb = nullptr) {
  Mat Z = W.transpose() * data.inputs;
  Z.colwise() += b;
  Mat H = Z;
  sigmoid_inplace(H);
  Mat resid = W * H - data.targets;

  double value = (data.penalty.array() * resid.array().square()).sum();

  // smoothed-L1 activation sparsity
  double gsum = 0.0;
  Mat dH;
  if (gW) dH.resize(H.rows(), H.cols());
  for (Eigen::Index k = 0; k < H.size(); ++k) {
    double h = H.data()[k];
    double s = std::sqrt(h * h + reg.eps_g);
    gsum += s;
    if (gW) dH.data()[k] = lambda * (s > 0.0 ? h / s : 0.0);
  }
  value += lambda * gsum;

  Mat fgrad;
  value += reg.beta * regularizer(W, data.modes, reg, gW ? &fgrad : nullptr);

  if (gW) {
    Mat R = 2.0 * (data.penalty.array() * resid.array()).matrix();
    *gW = R * H.transpose();
    dH.noalias() += W.transpose() * R;
    Mat dZ = (dH.array() * H.array() * (1.0 - H.array())).matrix();
    gW->noalias() += data.inputs * dZ.transpose();
    *gW += reg.beta * fgrad;
    if (gb) *gb = dZ.rowwise().sum();
  }
  return value;
}

struct PhaseReport {
  std::string phase;
  std::vector<TraceRecord> trace;
  double final_objective = 0.0;
  double flops_per_iter = 0.0;

  void write_jsonl(std::ostream& os) const {
    for (const auto& rec : trace)
      os << "{\"phase\":\"" << phase << "\",\"iter\":" << rec.iter << ",\"objective\":"
         << rec.objective << ",\"grad_norm\":" << rec.grad_norm << ",\"wall_sec\":"
         << rec.wall_sec << ",\"flops_per_iter\":" << flops_per_iter << "}\n";
  }
};

/// Multiply-add count for one autoencoder objective evaluation.
inline double pretrain_flops(Eigen::Index d, Eigen::Index k, Eigen::Index m) {
  return 6.0 * static_cast<double>(d) * static_cast<double>(k) * static_cast<double>(m);
}

/// Unsupervised initialization of one hidden layer (reconstruction +
/// sparsity + weight penalty), minimized over [W; b] from a seeded uniform
/// start. Returns the weights, the bias, and the optimization trace.
inline std::pair<Mat, Vec> pretrain_layer(const PretrainData& data, int hidden,
                                          const RegConfig& reg, double lambda,
                                          const OptimOptions& opts, std::uint64_t seed,
                                          PhaseReport* report = nullptr) {
  reg.validate();
  const Eigen::Index d = data.inputs.rows();
  if (hidden <= 0) throw UsageError("pretrain_layer: hidden size must be positive");
  if (data.targets.rows() != d || data.penalty.rows() != d ||
      data.targets.cols() != data.inputs.cols() || data.penalty.cols() != data.inputs.cols())
    throw UsageError("pretrain_layer: input/target/penalty shapes disagree");
  if (data.modes.size() != d)
    throw UsageError("pretrain_layer: modality mask does not match input size");

  Rng rng(seed);
  Mat W = init_weight_matrix(rng, static_cast<int>(d), hidden);
  Vec b = Vec::Zero(hidden);

  Mat Wbuf = W;
  Vec bbuf = b;
  Mat gW;
  Vec gb;
  auto objective = [&](const Vec& theta, Vec& grad) {
    unpack_layer(theta, Wbuf, bbuf);
    double value = pretrain_objective(data, Wbuf, bbuf, reg, lambda, &gW, &gb);
    grad = pack_layer(gW, gb);
    return value;
  };

  std::vector<TraceRecord> trace;
  Vec theta = minimize(objective, pack_layer(W, b), opts, &trace);
  unpack_layer(theta, W, b);
  if (report) {
    report->trace = std::move(trace);
    report->final_objective = report->trace.empty() ? 0.0 : report->trace.back().objective;
    report->flops_per_iter = pretrain_flops(d, hidden, data.inputs.cols());
  }
  return {std::move(W), std::move(b)};
}

/// Value and gradient of the supervised objective (negated for
/// minimization): -log-likelihood + beta1 f(W1) + beta2 f(W2). The second
/// layer has no modality structure, so group kinds treat its input as one
/// group.
inline double full_objective(const NetworkParams& net, const LabeledDataset& data,
                             const TrainConfig& cfg, Vec* grad_out = nullptr) {
  Mat H1, H2;
  Vec p = forward_batch(net, data.X, &H1, &H2);

  double value = 0.0;
  for (Eigen::Index t = 0; t < p.size(); ++t)
    value -= data.y[t] * std::log(p[t]) + (1.0 - data.y[t]) * std::log(1.0 - p[t]);

  const ModalityMask w2_modes = ModalityMask::single_group(net.k1());
  Mat f1grad, f2grad;
  value += cfg.reg1.beta * regularizer(net.W1, net.modality, cfg.reg1,
                                       grad_out ? &f1grad : nullptr);
  value += cfg.reg2.beta * regularizer(net.W2, w2_modes, cfg.reg2,
                                       grad_out ? &f2grad : nullptr);
  if (!grad_out) return value;

  Vec dz3 = p - data.y;
  NetworkParams g = net;  // reuse the shape for the gradient container
  g.W3 = H2 * dz3;
  g.b3 = dz3.sum();
  Mat dH2 = net.W3 * dz3.transpose();
  Mat dZ2 = (dH2.array() * H2.array() * (1.0 - H2.array())).matrix();
  g.W2 = H1 * dZ2.transpose() + cfg.reg2.beta * f2grad;
  g.b2 = dZ2.rowwise().sum();
  Mat dH1 = net.W2 * dZ2;
  Mat dZ1 = (dH1.array() * H1.array() * (1.0 - H1.array())).matrix();
  g.W1 = data.X * dZ1.transpose() + cfg.reg1.beta * f1grad;
  g.b1 = dZ1.rowwise().sum();
  *grad_out = pack_params(g);
  return value;
}

inline double finetune_flops(Eigen::Index n, Eigen::Index k1, Eigen::Index k2, Eigen::Index m) {
  return 6.0 * static_cast<double>(m) *
         (static_cast<double>(n) * k1 + static_cast<double>(k1) * k2 + k2);
}

/// Supervised fine-tuning of all three layers by maximum likelihood (Eq.-2
/// style: the pretraining sparsity term is not carried over).
inline NetworkParams finetune(NetworkParams net, const LabeledDataset& data,
                              const TrainConfig& cfg, PhaseReport* report = nullptr) {
  cfg.validate();
  data.validate();
  net.check_consistent();
  if (data.X.rows() != net.input_size())
    throw UsageError("finetune: dataset input size does not match network");

  NetworkParams buf = net;
  Vec grad;
  auto objective = [&](const Vec& theta, Vec& g) {
    unpack_params(theta, buf);
    return full_objective(buf, data, cfg, &g);
  };

  std::vector<TraceRecord> trace;
  Vec theta = minimize(objective, pack_params(net), cfg.optim(), &trace);
  unpack_params(theta, net);
  if (report) {
    report->trace = std::move(trace);
    report->final_objective = report->trace.empty() ? 0.0 : report->trace.back().objective;
    report->flops_per_iter = finetune_flops(net.input_size(), net.k1(), net.k2(), data.size());
  }
  return net;
}

struct TrainReport {
  PhaseReport layer1;
  PhaseReport layer2;
  PhaseReport supervised;

  void write_jsonl(std::ostream& os) const {
    layer1.write_jsonl(os);
    layer2.write_jsonl(os);
    supervised.write_jsonl(os);
  }
};

/// Full two-phase pipeline for one network: pretrain layer 1 on the patches,
/// pretrain layer 2 on the resulting activations, then (unless `supervised`
/// is false) fine-tune everything with the classifier.
inline NetworkParams train_network(const PatchDataset& ds, int k1, int k2,
                                   const TrainConfig& cfg, TrainReport* report = nullptr,
                                   bool supervised = true) {
  cfg.validate();

  PretrainData l1;
  l1.inputs = ds.inputs();
  l1.targets = ds.targets();
  l1.penalty = ds.penalty_weights();
  l1.modes = ds.modality;
  Vec labels = ds.labels;
  if (cfg.max_examples > 0 && cfg.max_examples < ds.size()) {
    // deterministic subsample: seeded shuffle of example indices
    std::vector<int> order(static_cast<std::size_t>(ds.size()));
    for (int i = 0; i < ds.size(); ++i) order[static_cast<std::size_t>(i)] = i;
    Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
    rng.shuffle(order);
    order.resize(static_cast<std::size_t>(cfg.max_examples));
    auto take_cols = [&](const Mat& m) {
      Mat out(m.rows(), cfg.max_examples);
      for (int t = 0; t < cfg.max_examples; ++t) out.col(t) = m.col(order[static_cast<std::size_t>(t)]);
      return out;
    };
    l1.inputs = take_cols(l1.inputs);
    l1.targets = take_cols(l1.targets);
    l1.penalty = take_cols(l1.penalty);
    Vec sub(cfg.max_examples);
    for (int t = 0; t < cfg.max_examples; ++t) sub[t] = labels[order[static_cast<std::size_t>(t)]];
    labels = sub;
  }

  PhaseReport rep1{"pretrain_layer1", {}, 0.0, 0.0};
  auto [W1, b1] = pretrain_layer(l1, k1, cfg.reg1, cfg.lambda, cfg.optim(), cfg.seed, &rep1);

  PretrainData l2;
  {
    Mat Z = W1.transpose() * l1.inputs;
    Z.colwise() += b1;
    sigmoid_inplace(Z);
    l2.inputs = Z;
  }
  l2.targets = l2.inputs;
  l2.penalty = Mat::Ones(k1, l2.inputs.cols());
  l2.modes = ModalityMask::single_group(k1);
  PhaseReport rep2{"pretrain_layer2", {}, 0.0, 0.0};
  auto [W2, b2] = pretrain_layer(l2, k2, cfg.reg2, cfg.lambda, cfg.optim(), cfg.seed + 1, &rep2);

  NetworkParams net = init_params(cfg.seed + 2, ds.input_size(), k1, k2, ds.modality, ds.stats,
                                  ds.side, ds.scale_cap);
  net.W1 = std::move(W1);
  net.b1 = std::move(b1);
  net.W2 = std::move(W2);
  net.b2 = std::move(b2);

  PhaseReport rep3{"finetune", {}, 0.0, 0.0};
  if (supervised) {
    LabeledDataset labeled;
    labeled.X = l1.inputs;
    labeled.y = labels;
    net = finetune(std::move(net), labeled, cfg, &rep3);
  }

  if (report) {
    report->layer1 = std::move(rep1);
    report->layer2 = std::move(rep2);
    report->supervised = std::move(rep3);
  }
  return net;
}

struct CascadeSizes {
  int small_k1 = 50;
  int small_k2 = 50;
  int large_k1 = 200;
  int large_k2 = 200;
};

/// Trains the small and large networks independently on identical extracted
/// data, per the two-stage detection model.
inline CascadeParams train_cascade(const std::vector<AnnotatedScene>& scenes,
                                   const CascadeSizes& sizes, const TrainConfig& cfg,
                                   int side = 24, TrainReport* small_report = nullptr,
                                   TrainReport* large_report = nullptr, bool supervised = true) {
  PatchDataset ds = build_patch_dataset(scenes, side, cfg.mask_scale_cap);
  CascadeParams cascade;
  cascade.small = train_network(ds, sizes.small_k1, sizes.small_k2, cfg, small_report, supervised);
  cascade.large = train_network(ds, sizes.large_k1, sizes.large_k2, cfg, large_report, supervised);
  cascade.check_consistent();
  return cascade;
}

}  // namespace grasp
