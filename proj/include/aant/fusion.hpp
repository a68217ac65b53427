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

#ifndef AANT_FUSION_HPP_
#define AANT_FUSION_HPP_

// Knowledge injection and the full forward pass.
//
//   O_f   = temporal_attention(V_f)
//   O     = classify(O_f)                          (N x 2 logits)
//   P_c   = L2(softmax_t(O[:, c])ᵀ O_f)             (video prompt, 2 x D)
//   I     = FFN(P + X) + X                          (instance class embedding)
//   S     = L2rows(O_f) · L2rows(I + MLP(I))ᵀ / T   (N x 2 similarities)
//   p_t   = sigmoid(O[t,1] - O[t,0] - tau)
//
// The attended features O_f play the role of the visual features in both the
// prompt and the similarity, so the similarity branch also trains attention.

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "aant/autograd.hpp"
#include "aant/data_model.hpp"
#include "aant/error.hpp"
#include "aant/text_branch.hpp"
#include "aant/visual_branch.hpp"

namespace aant {

inline constexpr double kSimilarityTemperature = 0.07;
inline constexpr int kDefaultTopK = 20;

struct FusionParams {
  ag::Var ffn_w1;  // D x D
  ag::Var ffn_b1;  // 1 x D
  ag::Var ffn_w2;  // D x D
  ag::Var ffn_b2;  // 1 x D
  ag::Var mlp_w;   // D x D
  ag::Var mlp_b;   // 1 x D

  static FusionParams init(int dim, std::uint64_t seed) {
    return {ag::Var::parameter(init_matrix(dim, dim, seed, "ffn-1")), ag::Var::parameter(Matrix::Zero(1, dim)),
            ag::Var::parameter(init_matrix(dim, dim, seed, "ffn-2")), ag::Var::parameter(Matrix::Zero(1, dim)),
            ag::Var::parameter(init_matrix(dim, dim, seed, "mlp")),   ag::Var::parameter(Matrix::Zero(1, dim))};
  }

  static FusionParams zeros(int dim) {
    auto z = [](int r, int c) { return ag::Var::parameter(Matrix::Zero(r, c)); };
    return {z(dim, dim), z(1, dim), z(dim, dim), z(1, dim), z(dim, dim), z(1, dim)};
  }
};

/// Per-class softmax over frames of the logits, used to pool frame features;
/// each pooled row is L2-normalized. When `weights` is given it receives the
/// N x 2 pooling weights.
inline ag::Var video_prompt(const ag::Var& logits, const ag::Var& features, Matrix* weights = nullptr) {
  require_shape(logits.rows() == features.rows(), "video_prompt: logits and features differ in frame count");
  const ag::Var w = ag::softmax_cols(logits);
  if (weights) *weights = w.value();
  return ag::l2_normalize_rows(ag::matmul(ag::transpose(w), features));
}

inline ag::Var instance_class_embedding(const ag::Var& prompt, const ag::Var& class_x, const FusionParams& f) {
  require_shape(prompt.rows() == class_x.rows() && prompt.cols() == class_x.cols(),
                "instance_class_embedding: prompt and class embeddings differ in shape");
  require_shape(f.ffn_w1.rows() == class_x.cols(), "instance_class_embedding: FFN width differs from embedding width");
  const ag::Var hidden = ag::gelu(ag::add_row(ag::matmul(ag::add(prompt, class_x), f.ffn_w1), f.ffn_b1));
  return ag::add(ag::add_row(ag::matmul(hidden, f.ffn_w2), f.ffn_b2), class_x);
}

inline ag::Var similarity_scores(const ag::Var& features, const ag::Var& instance, const FusionParams& f,
                                 double temperature = kSimilarityTemperature) {
  require(temperature > 0.0, "similarity temperature must be positive");
  require_shape(features.cols() == instance.cols(), "similarity_scores: feature width differs from class width");
  require_shape(f.mlp_w.rows() == instance.cols(), "similarity_scores: MLP width differs from class width");
  const ag::Var refined = ag::l2_normalize_rows(ag::add(instance, ag::add_row(ag::matmul(instance, f.mlp_w), f.mlp_b)));
  const ag::Var frames = ag::l2_normalize_rows(features);
  return ag::scale(ag::matmul(frames, ag::transpose(refined)), 1.0 / temperature);
}

// ---------------------------------------------------------------------------

struct ModelConfig {
  int dim = kDefaultFeatureDim;
  int heads = kDefaultHeads;
  int text_dim = kDefaultTextDim;
  int top_k = kDefaultTopK;
  double temperature = kSimilarityTemperature;
  std::uint64_t seed = 0;
};

/// Graph nodes of one forward pass, for training.
struct ForwardGraph {
  ag::Var attended;  // O_f, N x D
  ag::Var logits;    // O, N x 2
  ag::Var class_x;   // X, 2 x D
  ag::Var prompt;    // 2 x D
  ag::Var instance;  // I, 2 x D
  ag::Var scores;    // S, N x 2
};

struct AnticipationOutput {
  Matrix logits;                 // N x 2
  std::vector<double> p;         // adjusted accident probability per frame
  Matrix similarity;             // N x 2
  double video_score = 0.0;
};

class AnticipationModel {
 public:
  AnticipationModel() = default;

  AnticipationModel(const ModelConfig& config, TextBank bank)
      : config_(config),
        attention_(AttentionParams::init(config.dim, config.heads, config.seed)),
        classifier_(ClassifierHead::init(config.dim, config.seed)),
        projection_(ag::Var::parameter(init_projection(config.text_dim, config.dim, config.seed))),
        fusion_(FusionParams::init(config.dim, config.seed)),
        tau_(ag::Var::parameter(Matrix::Zero(1, 1))),
        bank_(std::move(bank)) {
    require(config.dim >= 1 && config.heads >= 1 && config.dim % config.heads == 0,
            "model: heads must divide the feature width");
    require(config.top_k >= 1, "model: top_k must be >= 1");
    require(config.temperature > 0.0, "model: temperature must be positive");
    require_shape(bank_.positive.cols() == config.text_dim && bank_.negative.cols() == config.text_dim,
                  "model: text bank width differs from text_dim");
    require(bank_.positive.rows() >= 1 && bank_.negative.rows() >= 1, "model: both text classes need a report");
  }

  const ModelConfig& config() const { return config_; }
  const TextBank& text_bank() const { return bank_; }
  AttentionParams& attention() { return attention_; }
  const AttentionParams& attention() const { return attention_; }
  ClassifierHead& classifier() { return classifier_; }
  const ClassifierHead& classifier() const { return classifier_; }
  FusionParams& fusion() { return fusion_; }
  const FusionParams& fusion() const { return fusion_; }
  ag::Var& projection() { return projection_; }
  const ag::Var& projection() const { return projection_; }
  ag::Var& tau_var() { return tau_; }
  const ag::Var& tau_var() const { return tau_; }
  double tau() const { return tau_.item(); }
  void set_tau(double t) { tau_.mutable_value()(0, 0) = t; }

  /// Every trainable tensor, in a fixed order.
  std::vector<std::pair<std::string, ag::Var>> parameters() const {
    return {{"attn.wq", attention_.wq},      {"attn.wk", attention_.wk},      {"attn.wv", attention_.wv},
            {"attn.wo", attention_.wo},      {"cls.weight", classifier_.weight}, {"cls.bias", classifier_.bias},
            {"text.projection", projection_}, {"ffn.w1", fusion_.ffn_w1},    {"ffn.b1", fusion_.ffn_b1},
            {"ffn.w2", fusion_.ffn_w2},      {"ffn.b2", fusion_.ffn_b2},      {"mlp.w", fusion_.mlp_w},
            {"mlp.b", fusion_.mlp_b},        {"threshold.tau", tau_}};
  }

  /// Deep copy; copies made with the copy constructor share parameter storage.
  AnticipationModel clone() const {
    AnticipationModel m = *this;
    auto fresh = [](const ag::Var& v) { return ag::Var::parameter(v.value()); };
    m.attention_ = {fresh(attention_.wq), fresh(attention_.wk), fresh(attention_.wv), fresh(attention_.wo),
                    attention_.heads};
    m.classifier_ = {fresh(classifier_.weight), fresh(classifier_.bias)};
    m.projection_ = fresh(projection_);
    m.fusion_ = {fresh(fusion_.ffn_w1), fresh(fusion_.ffn_b1), fresh(fusion_.ffn_w2),
                 fresh(fusion_.ffn_b2), fresh(fusion_.mlp_w),  fresh(fusion_.mlp_b)};
    m.tau_ = fresh(tau_);
    return m;
  }

  ag::Var class_embeddings() const { return aant::class_embeddings(bank_, projection_); }

  ForwardGraph forward(const Matrix& features) const {
    require_shape(features.cols() == config_.dim, "model: record feature width differs from model width");
    ForwardGraph g;
    g.attended = temporal_attention(ag::Var::constant(features), attention_);
    g.logits = classify(g.attended, classifier_);
    g.class_x = class_embeddings();
    g.prompt = video_prompt(g.logits, g.attended);
    g.instance = instance_class_embedding(g.prompt, g.class_x, fusion_);
    g.scores = similarity_scores(g.attended, g.instance, fusion_, config_.temperature);
    return g;
  }

  ForwardGraph forward(const VideoRecord& record) const { return forward(Matrix(record.features.cast<double>())); }

 private:
  ModelConfig config_;
  AttentionParams attention_;
  ClassifierHead classifier_;
  ag::Var projection_;
  FusionParams fusion_;
  ag::Var tau_;
  TextBank bank_;
};

/// p_t = softmax(O[t,0], O[t,1] - tau)[1].
inline std::vector<double> adjusted_probabilities(const Matrix& logits, double tau) {
  require_shape(logits.cols() == 2, "adjusted_probabilities: logits must be N x 2");
  std::vector<double> p(static_cast<std::size_t>(logits.rows()));
  for (Eigen::Index t = 0; t < logits.rows(); ++t) {
    p[static_cast<std::size_t>(t)] = ag::sigmoid_value(logits(t, 1) - logits(t, 0) - tau);
  }
  return p;
}

/// Max of p over [0, window_end).
inline double window_score(const std::vector<double>& p, int window_end) {
  require(window_end >= 1 && static_cast<std::size_t>(window_end) <= p.size(), "video score: empty window");
  return *std::max_element(p.begin(), p.begin() + window_end);
}

inline AnticipationOutput full_forward(const AnticipationModel& model, const Matrix& features, double tau,
                                       int window_end) {
  const ForwardGraph g = model.forward(features);
  AnticipationOutput out;
  out.logits = g.logits.value();
  out.similarity = g.scores.value();
  out.p = adjusted_probabilities(out.logits, tau);
  out.video_score = window_score(out.p, window_end);
  return out;
}

/// Scored over the record's pre-accident window (all frames for negatives).
inline AnticipationOutput full_forward(const AnticipationModel& model, const VideoRecord& record, double tau) {
  return full_forward(model, Matrix(record.features.cast<double>()), tau, record.window_end());
}

inline AnticipationOutput full_forward(const AnticipationModel& model, const VideoRecord& record) {
  return full_forward(model, record, model.tau());
}

}  // namespace aant

#endif  // AANT_FUSION_HPP_
