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

#ifndef AANT_SELFCHECK_HPP_
#define AANT_SELFCHECK_HPP_

// Fast oracle battery behind `aant selfcheck`. Each check recomputes a value
// by an independent route (hand values, finite differences, brute force) and
// compares.

#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "aant/alert_feedback.hpp"
#include "aant/data_model.hpp"
#include "aant/evaluation.hpp"
#include "aant/fusion.hpp"
#include "aant/pipeline.hpp"
#include "aant/report_corpus.hpp"
#include "aant/robustness.hpp"
#include "aant/training.hpp"

namespace aant {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Largest per-tensor relative error between analytic and central-difference
/// gradients of `loss` with respect to `params`.
inline double max_gradient_error(const std::function<ag::Var()>& loss, std::vector<ag::Var> params,
                                 double step = 1e-6) {
  for (auto& p : params) p.zero_grad();
  ag::backward(loss());
  double worst = 0.0;
  for (auto& p : params) {
    const Matrix analytic = p.grad();
    Matrix numeric(p.rows(), p.cols());
    for (Eigen::Index i = 0; i < p.value().size(); ++i) {
      double& x = p.mutable_value().data()[i];
      const double saved = x;
      x = saved + step;
      const double up = loss().item();
      x = saved - step;
      const double down = loss().item();
      x = saved;
      numeric.data()[i] = (up - down) / (2.0 * step);
    }
    const double scale = std::max({analytic.norm(), numeric.norm(), 1e-8});
    worst = std::max(worst, (analytic - numeric).norm() / scale);
    p.zero_grad();
  }
  return worst;
}

/// AP by direct enumeration: every distinct score as a threshold, counts
/// recomputed from scratch.
inline double brute_force_ap(const std::vector<double>& scores, const std::vector<int>& labels) {
  std::vector<double> thr = scores;
  std::sort(thr.begin(), thr.end(), std::greater<>());
  thr.erase(std::unique(thr.begin(), thr.end()), thr.end());
  int pos = 0;
  for (int y : labels) pos += y;
  double ap = 0.0;
  double prev = 0.0;
  for (double t : thr) {
    int tp = 0;
    int predicted = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (scores[i] >= t) {
        ++predicted;
        tp += labels[i];
      }
    }
    const double recall = static_cast<double>(tp) / pos;
    ap += (static_cast<double>(tp) / predicted) * (recall - prev);
    prev = recall;
  }
  return ap;
}

inline std::vector<CheckResult> run_selfcheck() {
  std::vector<CheckResult> out;
  auto check = [&](std::string name, const std::function<std::string()>& body) {
    CheckResult r{std::move(name), false, {}};
    try {
      r.detail = body();
      r.pass = r.detail.empty();
    } catch (const std::exception& e) {
      r.detail = std::string("threw: ") + e.what();
    }
    out.push_back(std::move(r));
  };
  auto fmt = [](double v) {
    std::ostringstream s;
    s.precision(12);
    s << v;
    return s.str();
  };

  check("cross-entropy hand values", [&]() -> std::string {
    const double a = ce(0, 3, 1);
    const double b = ce(0, 3, 0);
    const double expect = std::log1p(std::exp(-3.0));
    if (std::abs(a - expect) > 1e-12 || std::abs(b - (3.0 + expect)) > 1e-12) return "got " + fmt(a) + ", " + fmt(b);
    if (std::abs(ce(0, 0, 1) - std::log(2.0)) > 1e-12) return "uniform logits do not give ln 2";
    return {};
  });
  check("time penalty", [&]() -> std::string {
    const double v = time_penalty(0, 90, 20);
    if (v != -4.45) return "time_penalty(0,90,20) = " + fmt(v);
    if (time_penalty(89, 90, 20) != 0.0 || time_penalty(95, 90, 20) != 0.0) return "penalty not zero from toa-1";
    return {};
  });
  check("top-k mean", [&]() -> std::string {
    const double v = top_k_mean({3, 2, 1}, 2);
    return v == 2.5 ? std::string() : "got " + fmt(v);
  });
  check("initial loss weights", [&]() -> std::string {
    const auto w = LossWeights{}.values();
    return w[0] == 1.0 && w[1] == 1.0 && w[2] == 1.0 ? std::string() : "weights not (1,1,1)";
  });
  check("average precision worked example", [&]() -> std::string {
    const double v = average_precision({0.9, 0.8, 0.1}, {0, 1, 0});
    return std::abs(v - 0.5) < 1e-12 ? std::string() : "got " + fmt(v);
  });
  check("average precision vs enumeration", [&]() -> std::string {
    SplitMix64 rng(derive_seed(1, "selfcheck-ap"));
    for (int trial = 0; trial < 100; ++trial) {
      const int n = 2 + static_cast<int>(rng.below(11));
      std::vector<double> s(static_cast<std::size_t>(n));
      std::vector<int> y(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) {
        s[static_cast<std::size_t>(i)] = static_cast<double>(rng.below(6)) / 5.0;
        y[static_cast<std::size_t>(i)] = static_cast<int>(rng.below(2));
      }
      y[0] = 0;
      y[1] = 1;
      const double a = average_precision(s, y);
      const double b = brute_force_ap(s, y);
      if (std::abs(a - b) > 1e-9) return "trial " + std::to_string(trial) + ": " + fmt(a) + " vs " + fmt(b);
    }
    return {};
  });
  check("mTTA constant detection", [&]() -> std::string {
    std::vector<VideoTrace> v{{std::vector<double>(10, 0.9), Label::positive, 8, 4.0},
                              {std::vector<double>(10, 0.2), Label::negative, 0, 4.0}};
    const double m = mtta(v).mtta;
    return m == 2.0 ? std::string() : "got " + fmt(m);
  });
  check("loss gradients vs finite differences", [&]() -> std::string {
    SyntheticSpec spec;
    spec.n_pos = 1;
    spec.n_neg = 1;
    spec.frames = 6;
    spec.dim = 4;
    spec.toa = 5;
    spec.separability = 1.0;
    const auto data = generate_synthetic_dataset(spec);
    ModelConfig mc;
    mc.dim = 4;
    mc.heads = 2;
    mc.text_dim = 8;
    mc.top_k = 3;
    mc.seed = 5;
    AnticipationModel model = make_model(mc, 4, default_text_bank(2, 1, 8));
    model.set_tau(0.3);
    LossWeights weights;
    weights.theta.mutable_value() << 0.2, -0.1, 0.4;
    std::vector<const VideoRecord*> batch{&data[0], &data[1]};
    std::vector<ag::Var> params;
    for (const auto& [name, var] : model.parameters()) params.push_back(var);
    params.push_back(weights.theta);
    const double err = max_gradient_error([&] { return batch_loss(model, weights, batch).total; }, params);
    return err < 1e-3 ? std::string() : "relative error " + fmt(err);
  });
  check("threshold gradient vs finite differences", [&]() -> std::string {
    Matrix logits(4, 2);
    logits << 0.1, 1.2, -0.3, 0.4, 0.5, -0.2, 0.0, 2.0;
    const std::vector<int> y{0, 1, 0, 1};
    const double tau = 0.25;
    const double h = 1e-5;
    const double numeric = (calibration_loss(logits, y, tau + h) - calibration_loss(logits, y, tau - h)) / (2 * h);
    const double analytic = threshold_gradient(adjusted_probabilities(logits, tau), y);
    return std::abs(numeric - analytic) < 1e-4 ? std::string() : fmt(analytic) + " vs " + fmt(numeric);
  });
  check("feature file round trip", [&]() -> std::string {
    SyntheticSpec spec;
    spec.n_pos = 1;
    spec.n_neg = 1;
    for (const auto& r : generate_synthetic_dataset(spec)) {
      const std::string bytes = encode_feature_file(r);
      const VideoRecord back = decode_feature_file(bytes);
      if (!(back == r) || encode_feature_file(back) != bytes) return "record " + r.id + " changed";
    }
    return {};
  });
  check("perturbation index sets", [&]() -> std::string {
    RawFrameSequence raw(100, 4, 4, 20.0);
    std::fill(raw.data.begin(), raw.data.end(), std::uint8_t{200});
    const auto blank = drop_frames(raw);
    for (int f = 0; f < 100; ++f) {
      const bool should = (f >= 20 && f < 30) || (f >= 60 && f < 70);
      if ((blank.at(f, 0, 0, 0) == 0) != should) return "frame " + std::to_string(f) + " misclassified";
    }
    if (drop_frames(raw, 10, 40, 20, DropMode::remove).n != 80) return "remove mode length";
    const auto occ = occlude_right_half(raw);
    for (int x = 0; x < 4; ++x) {
      if ((occ.at(0, 0, x, 0) == 0) != (x >= 2)) return "occlusion column " + std::to_string(x);
    }
    return {};
  });
  check("alert legality fuzz", [&]() -> std::string {
    const std::vector<std::string> pieces{"Brake now.", "Run the red light.", "Maintain a safe distance.",
                                          "Speed up to pass.", "", "Stay alert.", "Accelerate through the gap.",
                                          "Slow down."};
    SplitMix64 rng(derive_seed(3, "selfcheck-fuzz"));
    for (int i = 0; i < 200; ++i) {
      std::string text;
      const int parts = static_cast<int>(rng.below(4));
      for (int k = 0; k < parts; ++k) text += pieces[rng.below(pieces.size())] + " ";
      ScriptedLanguageModel client({text});
      AlertPrediction pred;
      pred.video_score = rng.uniform();
      const AlertMessage m = generate_alert(client, "frame", pred, SceneSummary{});
      if (!m.text.empty() && !verify_legality(m.text, m.urgency).pass) return "emitted illegal text: " + m.text;
    }
    return {};
  });
  check("reference corpus rear-end count", [&]() -> std::string {
    const auto stats = corpus_stats(collision_reference_corpus());
    const int n = stats.counts.at("collision_type").at("Rear End");
    return n == 108 ? std::string() : "got " + std::to_string(n);
  });
  return out;
}

}  // namespace aant

#endif  // AANT_SELFCHECK_HPP_
