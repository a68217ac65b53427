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


#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "aant/pipeline.hpp"
#include "aant/selfcheck.hpp"
#include "aant/training.hpp"
#include "support.hpp"

namespace aant {
namespace {

using testing::random_matrix;

const double kLn2 = std::log(2.0);

Matrix rows2(std::initializer_list<std::pair<double, double>> rows) {
  Matrix m(static_cast<Eigen::Index>(rows.size()), 2);
  Eigen::Index i = 0;
  for (const auto& [a, b] : rows) {
    m(i, 0) = a;
    m(i, 1) = b;
    ++i;
  }
  return m;
}

ModelConfig tiny_config(std::uint64_t seed = 5) {
  ModelConfig mc;
  mc.dim = 4;
  mc.heads = 2;
  mc.text_dim = 8;
  mc.top_k = 3;
  mc.seed = seed;
  return mc;
}

std::vector<VideoRecord> tiny_data(int n_pos, int n_neg, int frames = 6, int toa = 5) {
  SyntheticSpec spec;
  spec.n_pos = n_pos;
  spec.n_neg = n_neg;
  spec.frames = frames;
  spec.dim = 4;
  spec.toa = toa;
  spec.separability = 2.0;
  return generate_synthetic_dataset(spec);
}

TEST(CrossEntropy, HandValues) {
  EXPECT_NEAR(ce(0, 0, 1), kLn2, 1e-15);
  EXPECT_NEAR(ce(0, 3, 1), 0.04859, 1e-5);
  EXPECT_NEAR(ce(0, 3, 0), 3.04859, 1e-5);
  EXPECT_NEAR(ce(0, 3, 1), std::log1p(std::exp(-3.0)), 1e-15);
  // Symmetric logits give ln 2 for either class.
  for (double a : {-7.0, 0.0, 2.5, 100.0}) {
    EXPECT_NEAR(ce(a, a, 0), kLn2, 1e-12);
    EXPECT_NEAR(ce(a, a, 1), kLn2, 1e-12);
  }
  // Large margins stay finite.
  EXPECT_TRUE(std::isfinite(ce(0, 1000, 0)));
}

TEST(LossCe, WindowMaxPooling) {
  EXPECT_NEAR(loss_ce(rows2({{0, 1}, {0, 3}}), Label::positive, 2), 0.04859, 1e-5);
  EXPECT_NEAR(loss_ce(rows2({{0, 0}, {0, 0}, {0, 0}}), Label::negative, 0), kLn2, 1e-15);
  // toa = 1: only frame 0 counts, the large later logit is ignored.
  EXPECT_NEAR(loss_ce(rows2({{0, 0}, {0, 9}}), Label::positive, 1), kLn2, 1e-15);
  // Per-class max can mix frames: (max z0, max z1) = (2, 3).
  EXPECT_NEAR(loss_ce(rows2({{2, 0}, {0, 3}}), Label::negative, 0), ce(2, 3, 0), 1e-15);
  EXPECT_THROW(loss_ce(rows2({{0, 0}}), Label::positive, 0), ValidationError);
}

TEST(TimePenalty, HandValues) {
  EXPECT_EQ(time_penalty(0, 90, 20), -4.45);
  EXPECT_EQ(time_penalty(89, 90, 20), 0.0);
  EXPECT_EQ(time_penalty(90, 90, 20), 0.0);
  EXPECT_EQ(time_penalty(120, 90, 20), 0.0);
  EXPECT_NEAR(std::exp(time_penalty(0, 90, 20)), 0.0117, 1e-4);
}

TEST(LossFrame, HandValues) {
  const double expect = (std::exp(-0.05) * kLn2 + kLn2) / 2.0;
  EXPECT_NEAR(loss_frame(rows2({{0, 0}, {0, 0}}), Label::positive, 2, 20.0), expect, 1e-15);
  EXPECT_NEAR(expect, 0.6763, 1e-4);
  EXPECT_NEAR(loss_frame(rows2({{0, 0}, {0, 0}, {0, 0}}), Label::negative, 0, 20.0), kLn2, 1e-15);
}

TEST(LossFrame, WeightsMonotone) {
  const auto w = frame_weights(100, 90, 20.0);
  ASSERT_EQ(w.size(), 100U);
  EXPECT_EQ(w[89], 1.0);
  for (int t = 1; t < 90; ++t) EXPECT_LE(w[static_cast<std::size_t>(t - 1)], w[static_cast<std::size_t>(t)]);
  for (int t = 89; t < 100; ++t) EXPECT_EQ(w[static_cast<std::size_t>(t)], 1.0);
  EXPECT_NEAR(w[0], std::exp(-4.45), 1e-15);
}

TEST(LossMil, HandValues) {
  EXPECT_NEAR(loss_mil(Matrix::Constant(7, 2, 1.3), Label::positive), kLn2, 1e-15);
  EXPECT_EQ(top_k_mean({3, 2, 1}, 2), 2.5);
  Matrix s(5, 2);
  s << 1, 0, 2, 0, 3, 0, 4, 0, 5, 10;
  // k = 20 clamps to 5: instance logits (3, 2).
  EXPECT_NEAR(loss_mil(s, Label::negative), ce(3, 2, 0), 1e-15);
  EXPECT_NEAR(loss_mil(s, Label::positive, 1), ce(5, 10, 1), 1e-15);
}

TEST(TotalLoss, InitialWeightsAndArithmetic) {
  LossWeights w;
  const auto v = w.values();
  EXPECT_EQ(v[0], 1.0);
  EXPECT_EQ(v[1], 1.0);
  EXPECT_EQ(v[2], 1.0);
  EXPECT_EQ(total_loss(1, 2, 3, w).total, 6.0);

  w.theta.mutable_value() << 0.7, 0.7, 0.7;
  const auto same = w.values();
  EXPECT_NEAR(same[0] + same[1] + same[2], 3.0, 1e-15);
  EXPECT_NEAR(same[1], 1.0, 1e-15);

  w.theta.mutable_value() << -2, 0.5, 4;
  const auto b = total_loss(1.5, 0.5, 2.0, w);
  EXPECT_NEAR(b.total, b.w[0] * 1.5 + b.w[1] * 0.5 + b.w[2] * 2.0, 1e-12);
}

TEST(TotalLoss, WeightsStayPositiveAndSumToThree) {
  LossWeights w;
  AdamW opt({{{w.theta}, 0.5, 0.0}});
  SplitMix64 rng(4);
  for (int step = 0; step < 200; ++step) {
    Matrix parts(1, 3);
    parts << rng.uniform() * 5, rng.uniform(), rng.uniform() * 0.1;
    opt.zero_grad();
    ag::backward(total_loss(ag::Var::constant(parts), w));
    opt.step();
    const auto v = w.values();
    EXPECT_GT(v[0], 0.0);
    EXPECT_GT(v[1], 0.0);
    EXPECT_GT(v[2], 0.0);
    EXPECT_NEAR(v[0] + v[1] + v[2], 3.0, 1e-9);
  }
}

TEST(ThresholdGradient, HandValues) {
  EXPECT_NEAR(threshold_gradient({0.3, 0.8}, {0, 1}), -0.05, 1e-15);
  // Calibrated limit: p at its labels up to 1e-12.
  EXPECT_NEAR(threshold_gradient({1e-12, 1.0 - 1e-12, 1e-12}, {0, 1, 0}), 0.0, 1e-12);
  EXPECT_DOUBLE_EQ(threshold_gradient({0.9}, {0}), -0.9);
  EXPECT_DOUBLE_EQ(threshold_gradient({0.5}, {1}), 0.5);
  EXPECT_THROW(threshold_gradient({1.0}, {1}), ValidationError);
  EXPECT_THROW(threshold_gradient({0.0}, {0}), ValidationError);
}

TEST(ThresholdGradient, MatchesFiniteDifferencesProperty) {
  SplitMix64 rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(10));
    const Matrix logits = random_matrix(rng, n, 2, 2.0);
    std::vector<int> y(static_cast<std::size_t>(n));
    for (auto& v : y) v = static_cast<int>(rng.below(2));
    const double tau = 2.0 * rng.uniform() - 1.0;
    const double h = 1e-5;
    const double numeric = (calibration_loss(logits, y, tau + h) - calibration_loss(logits, y, tau - h)) / (2 * h);
    EXPECT_NEAR(threshold_gradient(adjusted_probabilities(logits, tau), y), numeric, 1e-4);
  }
}

TEST(ThresholdGradient, DescentDirection) {
  // Over-confident: negatives scored high. A descent step raises tau.
  const Matrix over = rows2({{0, 2}, {0, 1.5}, {0, 3}});
  const std::vector<int> neg{0, 0, 0};
  const double g_over = threshold_gradient(adjusted_probabilities(over, 0.0), neg);
  EXPECT_GT(0.0 - 0.1 * g_over, 0.0);
  // Under-confident: positives scored low. A descent step lowers tau.
  const Matrix under = rows2({{2, 0}, {1, 0}, {3, 0}});
  const std::vector<int> pos{1, 1, 1};
  const double g_under = threshold_gradient(adjusted_probabilities(under, 0.0), pos);
  EXPECT_LT(0.0 - 0.1 * g_under, 0.0);
}

TEST(BatchLoss, GradientsMatchFiniteDifferences) {
  const auto data = tiny_data(1, 1);
  for (std::uint64_t seed : {5ULL, 6ULL}) {
    AnticipationModel model = make_model(tiny_config(seed), 4, default_text_bank(2, 1, 8));
    model.set_tau(0.3);
    LossWeights weights;
    weights.theta.mutable_value() << 0.2, -0.1, 0.4;
    std::vector<const VideoRecord*> batch{&data[0], &data[1]};
    std::vector<ag::Var> params;
    for (const auto& [name, var] : model.parameters()) params.push_back(var);
    params.push_back(weights.theta);
    const double err = max_gradient_error([&] { return batch_loss(model, weights, batch).total; }, params);
    EXPECT_LT(err, 1e-3) << "seed " << seed;
  }
}

TEST(BatchLoss, Reductions) {
  const auto data = tiny_data(2, 2);
  const AnticipationModel model = make_model(tiny_config(), 4, default_text_bank(2, 1, 8));
  const LossWeights w;
  double ce_sum = 0.0;
  double frame_sum = 0.0;
  double mil_sum = 0.0;
  for (const auto& r : data) {
    const auto g = model.forward(r);
    ce_sum += loss_ce(g.logits.value(), r.label, r.toa);
    frame_sum += loss_frame(g.logits.value(), r.label, r.toa, r.fps);
    mil_sum += loss_mil(g.scores.value(), r.label, 3);
  }
  std::vector<const VideoRecord*> batch;
  for (const auto& r : data) batch.push_back(&r);
  const auto b = batch_loss(model, w, batch).breakdown;
  EXPECT_NEAR(b.l_ce, ce_sum, 1e-12);
  EXPECT_NEAR(b.l_t, frame_sum, 1e-12);
  EXPECT_NEAR(b.l_mil, mil_sum / 4.0, 1e-12);
  EXPECT_NEAR(b.total, b.l_ce + b.l_t + b.l_mil, 1e-12);
}

TEST(AdamW, FirstStepMovesByLearningRate) {
  auto p = ag::Var::parameter((Matrix(1, 2) << 1.0, -2.0).finished());
  AdamW opt({{{p}, 0.01, 0.0}});
  ag::backward(ag::sum(ag::hadamard(p, ag::Var::constant((Matrix(1, 2) << 3.0, -0.5).finished()))));
  opt.step();
  // Bias-corrected first step is lr * g / (|g| + eps).
  EXPECT_NEAR(p.value()(0, 0), 1.0 - 0.01, 1e-9);
  EXPECT_NEAR(p.value()(0, 1), -2.0 + 0.01, 1e-9);
}

TEST(AdamW, DecoupledDecayWithZeroGradient) {
  auto p = ag::Var::parameter(Matrix::Constant(1, 1, 2.0));
  AdamW opt({{{p}, 0.1, 0.5}});
  opt.step();
  EXPECT_DOUBLE_EQ(p.item(), 2.0 * (1.0 - 0.05));
}

TEST(Plateau, HalvesAfterThreeStagnantEpochs) {
  auto p = ag::Var::parameter(Matrix::Zero(1, 1));
  AdamW opt({{{p}, 1e-3, 0.0}, {{p}, 1e-1, 0.0}});
  PlateauScheduler s(0.5, 3);
  EXPECT_FALSE(s.step(1.0, opt));
  EXPECT_FALSE(s.step(1.0, opt));
  EXPECT_FALSE(s.step(0.99995, opt));  // within the relative margin
  EXPECT_TRUE(s.step(1.2, opt));
  EXPECT_DOUBLE_EQ(opt.groups()[0].lr, 5e-4);
  EXPECT_DOUBLE_EQ(opt.groups()[1].lr, 5e-2);
  EXPECT_FALSE(s.step(0.5, opt));  // improvement resets
  EXPECT_EQ(s.bad_epochs(), 0);
}

TEST(Train, DeterministicForSeed) {
  const auto data = tiny_data(3, 3);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 4;
  cfg.seed = 2;
  AnticipationModel a = make_model(tiny_config(), 4, default_text_bank(2, 1, 8));
  AnticipationModel b = make_model(tiny_config(), 4, default_text_bank(2, 1, 8));
  const auto ra = train(cfg, data, a);
  const auto rb = train(cfg, data, b);
  const auto pa = a.parameters();
  const auto pb = b.parameters();
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_EQ(pa[i].second.value(), pb[i].second.value()) << pa[i].first;
  ASSERT_EQ(ra.history.size(), 3U);
  EXPECT_EQ(ra.history.back().total, rb.history.back().total);
  EXPECT_EQ(ra.final_tau, a.tau());
  EXPECT_NE(ra.final_tau, 0.0);
}

TEST(Train, HistoryCsv) {
  const auto data = tiny_data(2, 2);
  TrainConfig cfg;
  cfg.epochs = 2;
  AnticipationModel m = make_model(tiny_config(), 4, default_text_bank(2, 1, 8));
  int calls = 0;
  const auto r = train(cfg, data, m, [&](const EpochStats& e) { EXPECT_EQ(e.epoch, ++calls); });
  EXPECT_EQ(calls, 2);
  std::ostringstream out;
  write_history_csv(r.history, out);
  const std::string csv = out.str();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "epoch,l_ce,l_t,l_mil,total,lr,tau");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  EXPECT_DOUBLE_EQ(r.history[0].lr, 1e-3);
}

TEST(Train, Errors) {
  AnticipationModel m = make_model(tiny_config(), 4, default_text_bank(2, 1, 8));
  TrainConfig cfg;
  EXPECT_THROW(train(cfg, {}, m), ValidationError);
  cfg.batch_size = 0;
  EXPECT_THROW(train(cfg, tiny_data(1, 1), m), ValidationError);

  cfg = TrainConfig{};
  cfg.epochs = 1;
  m.classifier().weight.mutable_value()(0, 0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(train(cfg, tiny_data(1, 1), m), RuntimeFailure);
}

}  // namespace
}  // namespace aant
