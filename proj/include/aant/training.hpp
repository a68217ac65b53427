// Copyright 2026 The AANT Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef AANT_TRAINING_HPP_
#define AANT_TRAINING_HPP_

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "aant/autograd.hpp"
#include "aant/data_model.hpp"
#include "aant/error.hpp"
#include "aant/fusion.hpp"
#include "aant/rng.hpp"

namespace aant {

// ---------------------------------------------------------------------------
// Scalar reference forms. The graph versions below are what training uses;
// these exist for direct evaluation and tests.

/// -log softmax(z0, z1)[cls].
inline double ce(double z0, double z1, int cls) {
  require(cls == 0 || cls == 1, "ce: class must be 0 or 1");
  const double m = std::max(z0, z1);
  const double lse = m + std::log(std::exp(z0 - m) + std::exp(z1 - m));
  return lse - (cls == 0 ? z0 : z1);
}

/// -max(0, (toa - t - 1) / fps); zero from t = toa - 1 onwards.
inline double time_penalty(int t, int toa, double fps) {
  require(fps > 0.0, "time_penalty: fps must be positive");
  return -std::max(0.0, static_cast<double>(toa - t - 1) / fps);
}

/// exp(time_penalty) for each of n frames.
inline std::vector<double> frame_weights(int n, int toa, double fps) {
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int t = 0; t < n; ++t) w[static_cast<std::size_t>(t)] = std::exp(time_penalty(t, toa, fps));
  return w;
}

// ---------------------------------------------------------------------------
// Graph losses for a single video. `tau` is 1x1 and is subtracted from the
// accident logit before every cross-entropy.

inline ag::Var threshold_adjusted(const ag::Var& logits, const ag::Var& tau) {
  require_shape(logits.cols() == 2, "logits must be N x 2");
  return ag::add_row(logits, ag::concat_cols({ag::Var::scalar(0.0), ag::scale(tau, -1.0)}));
}

/// Cross-entropy of the per-class max over the pre-accident window.
inline ag::Var loss_ce(const ag::Var& logits, Label label, int toa, const ag::Var& tau) {
  const bool positive = label == Label::positive;
  require(!positive || toa >= 1, "loss_ce: positive video needs toa >= 1");
  const Eigen::Index end = positive ? std::min<Eigen::Index>(toa, logits.rows()) : logits.rows();
  const ag::Var pooled = ag::max_over_rows(threshold_adjusted(logits, tau), 0, end);
  return ag::cross_entropy_rows(pooled, {to_int(label)});
}

/// Time-weighted frame cross-entropy, averaged over the N frames.
inline ag::Var loss_frame(const ag::Var& logits, Label label, int toa, double fps, const ag::Var& tau) {
  const int n = static_cast<int>(logits.rows());
  const ag::Var per_frame =
      ag::cross_entropy_rows(threshold_adjusted(logits, tau), std::vector<int>(static_cast<std::size_t>(n), to_int(label)));
  Matrix w(n, 1);
  if (label == Label::positive) {
    const auto fw = frame_weights(n, toa, fps);
    for (int t = 0; t < n; ++t) w(t, 0) = fw[static_cast<std::size_t>(t)];
  } else {
    w.setOnes();
  }
  return ag::scale(ag::matmul(ag::Var::constant(w.transpose()), per_frame), 1.0 / n);
}

/// Cross-entropy of the per-class top-k mean similarity.
inline ag::Var loss_mil(const ag::Var& scores, Label label, int k = kDefaultTopK) {
  return ag::cross_entropy_rows(ag::top_k_mean_cols(scores, k), {to_int(label)});
}

// Plain-matrix conveniences (tau = 0 unless given).

inline double loss_ce(const Matrix& logits, Label label, int toa, double tau = 0.0) {
  return loss_ce(ag::Var::constant(logits), label, toa, ag::Var::scalar(tau)).item();
}
inline double loss_frame(const Matrix& logits, Label label, int toa, double fps, double tau = 0.0) {
  return loss_frame(ag::Var::constant(logits), label, toa, fps, ag::Var::scalar(tau)).item();
}
inline double loss_mil(const Matrix& scores, Label label, int k = kDefaultTopK) {
  return loss_mil(ag::Var::constant(scores), label, k).item();
}

inline double top_k_mean(const std::vector<double>& column, int k) {
  Matrix m(static_cast<Eigen::Index>(column.size()), 1);
  for (std::size_t i = 0; i < column.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = column[i];
  return ag::top_k_mean_cols(ag::Var::constant(m), k).item();
}

// ---------------------------------------------------------------------------
// Loss weighting.

struct LossBreakdown {
  double l_ce = 0.0;
  double l_t = 0.0;
  double l_mil = 0.0;
  std::array<double, 3> w{1.0, 1.0, 1.0};
  double total = 0.0;
};

/// w_i = 3 softplus(theta_i) / sum_j softplus(theta_j). theta starts at zero,
/// giving w = (1, 1, 1); the weights stay positive and sum to 3.
struct LossWeights {
  ag::Var theta = ag::Var::parameter(Matrix::Zero(1, 3));

  ag::Var weights() const {
    const ag::Var sp = ag::softplus(theta);
    return ag::scale(ag::div_scalar(sp, ag::sum(sp)), 3.0);
  }
  std::array<double, 3> values() const {
    const Matrix w = weights().value();
    return {w(0, 0), w(0, 1), w(0, 2)};
  }
  LossWeights clone() const { return LossWeights{ag::Var::parameter(theta.value())}; }
};

/// Weighted sum of a 1x3 row of loss parts.
inline ag::Var total_loss(const ag::Var& parts, const LossWeights& weights) {
  require_shape(parts.rows() == 1 && parts.cols() == 3, "total_loss: parts must be 1 x 3");
  return ag::sum(ag::hadamard(parts, weights.weights()));
}

inline LossBreakdown total_loss(double l_ce, double l_t, double l_mil, const LossWeights& weights) {
  LossBreakdown b{l_ce, l_t, l_mil, weights.values(), 0.0};
  Matrix parts(1, 3);
  parts << l_ce, l_t, l_mil;
  b.total = total_loss(ag::Var::constant(parts), weights).item();
  return b;
}

// ---------------------------------------------------------------------------
// Threshold calibration.

/// Mean binary cross-entropy of frame labels under p_t = sigmoid(z1 - z0 - tau).
inline double calibration_loss(const Matrix& logits, const std::vector<int>& y, double tau) {
  require_shape(logits.cols() == 2 && static_cast<std::size_t>(logits.rows()) == y.size(),
                "calibration_loss: logits and labels differ");
  double s = 0.0;
  for (Eigen::Index t = 0; t < logits.rows(); ++t) s += ce(logits(t, 0), logits(t, 1) - tau, y[static_cast<std::size_t>(t)]);
  return s / static_cast<double>(y.size());
}

/// d(calibration_loss)/d(tau) = (1/N) sum (y_t - p_t). A descent step raises
/// tau when predictions are over-confident and lowers it when under-confident.
inline double threshold_gradient(const std::vector<double>& p, const std::vector<int>& y) {
  require(!p.empty() && p.size() == y.size(), "threshold_gradient: need equal, non-empty inputs");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    require(p[i] > 0.0 && p[i] < 1.0, "threshold_gradient: probabilities must lie strictly inside (0, 1)");
    s += static_cast<double>(y[i]) - p[i];
  }
  return s / static_cast<double>(p.size());
}

// ---------------------------------------------------------------------------
// Batch objective.

struct BatchLoss {
  ag::Var total;
  ag::Var parts;  // 1 x 3: (L_ce, L_t, L_mil)
  LossBreakdown breakdown;
};

/// L_ce and L_t are summed over the batch, L_mil is averaged.
inline BatchLoss batch_loss(const AnticipationModel& model, const LossWeights& weights,
                            std::span<const VideoRecord* const> batch) {
  require(!batch.empty(), "batch_loss: empty batch");
  std::vector<ag::Var> ce_terms;
  std::vector<ag::Var> frame_terms;
  std::vector<ag::Var> mil_terms;
  const ag::Var& tau = model.tau_var();
  for (const VideoRecord* r : batch) {
    const ForwardGraph g = model.forward(*r);
    ce_terms.push_back(loss_ce(g.logits, r->label, r->toa, tau));
    frame_terms.push_back(loss_frame(g.logits, r->label, r->toa, r->fps, tau));
    mil_terms.push_back(loss_mil(g.scores, r->label, model.config().top_k));
  }
  const ag::Var l_ce = ag::sum(ag::concat_rows(ce_terms));
  const ag::Var l_t = ag::sum(ag::concat_rows(frame_terms));
  const ag::Var l_mil = ag::scale(ag::sum(ag::concat_rows(mil_terms)), 1.0 / static_cast<double>(batch.size()));
  BatchLoss out;
  out.parts = ag::concat_cols({l_ce, l_t, l_mil});
  out.total = total_loss(out.parts, weights);
  out.breakdown = {l_ce.item(), l_t.item(), l_mil.item(), weights.values(), out.total.item()};
  return out;
}

// ---------------------------------------------------------------------------
// Optimization.

/// Adam with decoupled weight decay, over groups that each carry a learning rate.
class AdamW {
 public:
  struct Group {
    std::vector<ag::Var> params;
    double lr = 1e-3;
    double weight_decay = 0.0;
  };

  AdamW(std::vector<Group> groups, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : groups_(std::move(groups)), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (const auto& g : groups_) {
      for (const auto& p : g.params) {
        m_.push_back(Matrix::Zero(p.rows(), p.cols()));
        v_.push_back(Matrix::Zero(p.rows(), p.cols()));
      }
    }
  }

  void zero_grad() {
    for (auto& g : groups_) {
      for (auto& p : g.params) p.zero_grad();
    }
  }

  void step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    std::size_t slot = 0;
    for (auto& g : groups_) {
      for (auto& p : g.params) {
        const Matrix grad = p.grad();
        Matrix& value = p.mutable_value();
        if (g.weight_decay > 0.0) value *= (1.0 - g.lr * g.weight_decay);
        m_[slot] = beta1_ * m_[slot] + (1.0 - beta1_) * grad;
        v_[slot] = beta2_ * v_[slot] + (1.0 - beta2_) * grad.cwiseProduct(grad);
        const Matrix m_hat = m_[slot] / bc1;
        const Matrix v_hat = v_[slot] / bc2;
        value -= g.lr * (m_hat.array() / (v_hat.array().sqrt() + eps_)).matrix();
        ++slot;
      }
    }
  }

  std::vector<Group>& groups() { return groups_; }
  const std::vector<Group>& groups() const { return groups_; }

 private:
  std::vector<Group> groups_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  double beta1_;
  double beta2_;
  double eps_;
  long long t_ = 0;
};

/// Multiplies every group's learning rate by `factor` once the monitored
/// value has failed to improve (relative margin 1e-4) for `patience`
/// consecutive epochs.
class PlateauScheduler {
 public:
  PlateauScheduler(double factor = 0.5, int patience = 3, double threshold = 1e-4)
      : factor_(factor), patience_(patience), threshold_(threshold) {}

  /// Returns true when the learning rates were reduced.
  bool step(double metric, AdamW& optimizer) {
    if (metric < best_ * (1.0 - threshold_)) {
      best_ = metric;
      bad_epochs_ = 0;
      return false;
    }
    if (++bad_epochs_ < patience_) return false;
    for (auto& g : optimizer.groups()) g.lr *= factor_;
    bad_epochs_ = 0;
    return true;
  }

  int bad_epochs() const { return bad_epochs_; }

 private:
  double factor_;
  int patience_;
  double threshold_;
  double best_ = std::numeric_limits<double>::infinity();
  int bad_epochs_ = 0;
};

struct TrainConfig {
  int epochs = 30;
  int batch_size = 10;
  double lr = 1e-3;
  double threshold_lr = 1e-1;
  double weight_decay = 1e-4;
  double plateau_factor = 0.5;
  int plateau_patience = 3;
  std::uint64_t seed = 0;
};

inline void validate_train_config(const TrainConfig& c) {
  require(c.epochs >= 1 && c.batch_size >= 1, "train: epochs and batch size must be positive");
  require(c.lr > 0.0 && c.threshold_lr > 0.0 && c.weight_decay >= 0.0, "train: learning rates must be positive");
  require(c.plateau_factor > 0.0 && c.plateau_factor < 1.0 && c.plateau_patience >= 1,
          "train: plateau factor in (0,1) and patience >= 1");
}

struct EpochStats {
  int epoch = 0;
  double l_ce = 0.0;
  double l_t = 0.0;
  double l_mil = 0.0;
  double total = 0.0;
  double lr = 0.0;
  double tau = 0.0;
};

struct TrainResult {
  std::vector<EpochStats> history;
  LossWeights weights;
  double final_tau = 0.0;
};

inline void write_history_csv(const std::vector<EpochStats>& history, std::ostream& out) {
  out << "epoch,l_ce,l_t,l_mil,total,lr,tau\n";
  char line[256];
  for (const auto& e : history) {
    std::snprintf(line, sizeof line, "%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", e.epoch, e.l_ce, e.l_t, e.l_mil, e.total,
                  e.lr, e.tau);
    out << line;
  }
}

/// Trains `model` in place. Parameters are updated per mini-batch; the
/// plateau scheduler watches the epoch-mean training total.
inline TrainResult train(const TrainConfig& config, const std::vector<VideoRecord>& dataset, AnticipationModel& model,
                         const std::function<void(const EpochStats&)>& on_epoch = {}) {
  validate_train_config(config);
  require(!dataset.empty(), "train: empty dataset");
  for (const auto& r : dataset) {
    validate_record(r);
    require_shape(r.dim() == model.config().dim, "train: record '" + r.id + "' width differs from model width");
  }

  TrainResult result;
  std::vector<ag::Var> main_group;
  for (auto& [name, var] : model.parameters()) {
    if (name != "threshold.tau") main_group.push_back(var);
  }
  AdamW optimizer({{main_group, config.lr, config.weight_decay},
                   {{result.weights.theta}, config.lr, 0.0},
                   {{model.tau_var()}, config.threshold_lr, 0.0}});
  PlateauScheduler scheduler(config.plateau_factor, config.plateau_patience);

  SplitMix64 rng(derive_seed(config.seed, "train-shuffle"));
  std::vector<const VideoRecord*> order;
  for (const auto& r : dataset) order.push_back(&r);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(order);
    EpochStats stats;
    stats.epoch = epoch;
    stats.lr = optimizer.groups()[0].lr;
    int batches = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(config.batch_size));
      const std::span<const VideoRecord* const> batch(order.data() + begin, end - begin);
      optimizer.zero_grad();
      const BatchLoss loss = batch_loss(model, result.weights, batch);
      if (!std::isfinite(loss.breakdown.total)) {
        throw RuntimeFailure("train: non-finite loss at epoch " + std::to_string(epoch) + " (l_ce=" +
                             std::to_string(loss.breakdown.l_ce) + ", l_t=" + std::to_string(loss.breakdown.l_t) +
                             ", l_mil=" + std::to_string(loss.breakdown.l_mil) + ")");
      }
      ag::backward(loss.total);
      optimizer.step();
      stats.l_ce += loss.breakdown.l_ce;
      stats.l_t += loss.breakdown.l_t;
      stats.l_mil += loss.breakdown.l_mil;
      stats.total += loss.breakdown.total;
      ++batches;
    }
    stats.l_ce /= batches;
    stats.l_t /= batches;
    stats.l_mil /= batches;
    stats.total /= batches;
    stats.tau = model.tau();
    scheduler.step(stats.total, optimizer);
    result.history.push_back(stats);
    if (on_epoch) on_epoch(stats);
  }
  optimizer.zero_grad();
  result.final_tau = model.tau();
  return result;
}

}  // namespace aant

#endif  // AANT_TRAINING_HPP_
