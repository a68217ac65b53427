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

#ifndef AANT_EVALUATION_HPP_
#define AANT_EVALUATION_HPP_

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <optional>
#include <ostream>
#include <vector>

#include "aant/data_model.hpp"
#include "aant/error.hpp"
#include "aant/fusion.hpp"

namespace aant {

/// Probability a frame must reach to count as a detection once the learned
/// threshold has been folded into the logits.
inline constexpr double kDecisionProbability = 0.5;

struct PRPoint {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  int tp = 0;
  int fp = 0;
  int fn = 0;
  int tn = 0;

  double f1() const { return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0; }
};

struct PRCurve {
  std::vector<PRPoint> points;  // thresholds in descending order
};

namespace detail {

inline void check_scores(const std::vector<double>& scores, const std::vector<int>& labels) {
  require(!scores.empty() && scores.size() == labels.size(), "scores and labels must be equal-length and non-empty");
  for (std::size_t i = 0; i < scores.size(); ++i) {
    require(labels[i] == 0 || labels[i] == 1, "labels must be 0 or 1");
    require(std::isfinite(scores[i]), "scores must be finite");
  }
}

inline std::vector<double> unique_descending(std::vector<double> v) {
  std::sort(v.begin(), v.end(), std::greater<>());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

/// Confusion counts for "positive iff score >= threshold".
inline PRPoint confusion_at(const std::vector<double>& scores, const std::vector<int>& labels, double threshold) {
  PRPoint pt;
  pt.threshold = threshold;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    if (labels[i] == 1) {
      predicted ? ++pt.tp : ++pt.fn;
    } else {
      predicted ? ++pt.fp : ++pt.tn;
    }
  }
  pt.precision = pt.tp + pt.fp > 0 ? static_cast<double>(pt.tp) / (pt.tp + pt.fp) : 0.0;
  pt.recall = pt.tp + pt.fn > 0 ? static_cast<double>(pt.tp) / (pt.tp + pt.fn) : 0.0;
  return pt;
}

}  // namespace detail

inline std::vector<int> label_ints(const std::vector<VideoRecord>& records) {
  std::vector<int> y;
  y.reserve(records.size());
  for (const auto& r : records) y.push_back(to_int(r.label));
  return y;
}

/// One point per distinct score, descending; a video is predicted positive
/// when its score is at or above the point's threshold.
inline PRCurve pr_curve(const std::vector<double>& scores, const std::vector<int>& labels) {
  detail::check_scores(scores, labels);
  const int pos = std::accumulate(labels.begin(), labels.end(), 0);
  if (pos == 0 || pos == static_cast<int>(labels.size())) {
    throw ValidationError("pr_curve: labels must contain both classes");
  }
  // Single pass over the score-sorted order.
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  PRCurve curve;
  int tp = 0;
  int fp = 0;
  const int neg = static_cast<int>(labels.size()) - pos;
  for (std::size_t i = 0; i < order.size();) {
    const double thr = scores[order[i]];
    while (i < order.size() && scores[order[i]] == thr) {
      labels[order[i]] == 1 ? ++tp : ++fp;
      ++i;
    }
    PRPoint pt;
    pt.threshold = thr;
    pt.tp = tp;
    pt.fp = fp;
    pt.fn = pos - tp;
    pt.tn = neg - fp;
    pt.precision = static_cast<double>(tp) / (tp + fp);
    pt.recall = static_cast<double>(tp) / pos;
    curve.points.push_back(pt);
  }
  return curve;
}

/// Sum of P(k) * (R(k) - R(k-1)) with R(-1) = 0.
inline double average_precision(const PRCurve& curve) {
  double ap = 0.0;
  double prev_recall = 0.0;
  for (const auto& pt : curve.points) {
    ap += pt.precision * (pt.recall - prev_recall);
    prev_recall = pt.recall;
  }
  return ap;
}

inline double average_precision(const std::vector<double>& scores, const std::vector<int>& labels) {
  return average_precision(pr_curve(scores, labels));
}

/// Seconds between the first frame t < toa with p_t >= threshold and toa.
inline std::optional<double> tta(const std::vector<double>& p, double threshold, int toa, double fps) {
  require(toa >= 1 && static_cast<std::size_t>(toa) <= p.size(), "tta: toa must lie in [1, N]");
  require(fps > 0.0, "tta: fps must be positive");
  for (int t = 0; t < toa; ++t) {
    if (p[static_cast<std::size_t>(t)] >= threshold) return static_cast<double>(toa - t) / fps;
  }
  return std::nullopt;
}

/// Frame-probability trace of one video with what scoring needs to know.
struct VideoTrace {
  std::vector<double> p;
  Label label = Label::negative;
  int toa = 0;
  double fps = 20.0;

  int window_end() const { return label == Label::positive ? toa : static_cast<int>(p.size()); }
  double score() const { return window_score(p, window_end()); }
};

struct MttaRow {
  double threshold = 0.0;
  int detected = 0;       // positives detected at this threshold
  double mean_tta = 0.0;  // over detected positives; 0 when none
};

struct MttaResult {
  double mtta = 0.0;
  std::vector<MttaRow> table;
};

/// Sweeps the distinct video scores; at each threshold averages TTA over the
/// detected positives, then averages those means over thresholds with at
/// least one detection.
inline MttaResult mtta(const std::vector<VideoTrace>& videos) {
  require(!videos.empty(), "mtta: no videos");
  bool any_positive = false;
  std::vector<double> scores;
  for (const auto& v : videos) {
    any_positive = any_positive || v.label == Label::positive;
    scores.push_back(v.score());
  }
  require(any_positive, "mtta: needs at least one positive video");
  MttaResult out;
  double sum = 0.0;
  int counted = 0;
  for (double thr : detail::unique_descending(scores)) {
    MttaRow row;
    row.threshold = thr;
    double acc = 0.0;
    for (const auto& v : videos) {
      if (v.label != Label::positive) continue;
      if (const auto t = tta(v.p, thr, v.toa, v.fps)) {
        acc += *t;
        ++row.detected;
      }
    }
    if (row.detected > 0) {
      row.mean_tta = acc / row.detected;
      sum += row.mean_tta;
      ++counted;
    }
    out.table.push_back(row);
  }
  out.mtta = counted > 0 ? sum / counted : 0.0;
  return out;
}

struct F1Choice {
  double threshold = 0.0;
  double f1 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

/// Sweep maximum of F1; ties go to the larger threshold.
inline F1Choice best_f1_threshold(const std::vector<double>& scores, const std::vector<int>& labels) {
  const PRCurve curve = pr_curve(scores, labels);
  F1Choice best;
  best.f1 = -1.0;
  for (const auto& pt : curve.points) {
    if (pt.f1() > best.f1) best = {pt.threshold, pt.f1(), pt.precision, pt.recall};
  }
  return best;
}

struct OperatingPoint {
  double tau = 0.0;
  int tp = 0;
  int fp = 0;
  int fn = 0;
  int tn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double tta_s = 0.0;  // mean over detected positives, 0 when none
};

struct Metrics {
  int videos = 0;
  int positives = 0;
  double ap = 0.0;
  double mtta_s = 0.0;
  double tta_at_threshold_s = 0.0;
  F1Choice best_f1;
  OperatingPoint learned;     // decision rule with the learned tau
  OperatingPoint zero_tau;    // same rule with tau = 0
  PRCurve curve;
  std::vector<MttaRow> mtta_table;
};

/// Decision-rule statistics: a video is positive when its window score
/// reaches kDecisionProbability.
inline OperatingPoint operating_point(const std::vector<VideoTrace>& videos, double tau) {
  std::vector<double> scores;
  std::vector<int> labels;
  for (const auto& v : videos) {
    scores.push_back(v.score());
    labels.push_back(to_int(v.label));
  }
  const PRPoint pt = detail::confusion_at(scores, labels, kDecisionProbability);
  OperatingPoint op{tau, pt.tp, pt.fp, pt.fn, pt.tn, pt.precision, pt.recall, pt.f1(), 0.0};
  double acc = 0.0;
  int detected = 0;
  for (const auto& v : videos) {
    if (v.label != Label::positive) continue;
    if (const auto t = tta(v.p, kDecisionProbability, v.toa, v.fps)) {
      acc += *t;
      ++detected;
    }
  }
  op.tta_s = detected > 0 ? acc / detected : 0.0;
  return op;
}

/// Metrics from traces computed at the learned tau and at tau = 0.
inline Metrics summarize(const std::vector<VideoTrace>& learned, const std::vector<VideoTrace>& zero_tau,
                         double tau) {
  require(!learned.empty() && learned.size() == zero_tau.size(), "evaluate: trace sets differ");
  Metrics m;
  std::vector<double> scores;
  std::vector<int> labels;
  for (const auto& v : learned) {
    scores.push_back(v.score());
    labels.push_back(to_int(v.label));
  }
  m.videos = static_cast<int>(learned.size());
  m.positives = std::accumulate(labels.begin(), labels.end(), 0);
  m.curve = pr_curve(scores, labels);
  m.ap = average_precision(m.curve);
  const MttaResult mt = mtta(learned);
  m.mtta_s = mt.mtta;
  m.mtta_table = mt.table;
  m.best_f1 = best_f1_threshold(scores, labels);
  m.learned = operating_point(learned, tau);
  m.zero_tau = operating_point(zero_tau, 0.0);
  m.tta_at_threshold_s = m.learned.tta_s;
  return m;
}

inline VideoTrace trace_of(const AnticipationModel& model, const VideoRecord& r, double tau) {
  return VideoTrace{full_forward(model, r, tau).p, r.label, r.toa, r.fps};
}

/// Traces at both thresholds share one forward pass per video.
inline Metrics evaluate(const AnticipationModel& model, const std::vector<VideoRecord>& dataset, double tau) {
  require(!dataset.empty(), "evaluate: empty dataset");
  std::vector<VideoTrace> learned;
  std::vector<VideoTrace> zero;
  for (const auto& r : dataset) {
    validate_record(r);
    const Matrix logits = model.forward(r).logits.value();
    learned.push_back({adjusted_probabilities(logits, tau), r.label, r.toa, r.fps});
    zero.push_back({adjusted_probabilities(logits, 0.0), r.label, r.toa, r.fps});
  }
  return summarize(learned, zero, tau);
}

inline Metrics evaluate(const AnticipationModel& model, const std::vector<VideoRecord>& dataset) {
  return evaluate(model, dataset, model.tau());
}

// ---------------------------------------------------------------------------
// Output.

inline nlohmann::json to_json(const OperatingPoint& op) {
  return {{"tau", op.tau},           {"tp", op.tp},         {"fp", op.fp}, {"fn", op.fn},
          {"tn", op.tn},             {"precision", op.precision}, {"recall", op.recall},
          {"f1", op.f1},             {"tta_s", op.tta_s}};
}

inline nlohmann::json to_json(const Metrics& m) {
  nlohmann::json table = nlohmann::json::array();
  for (const auto& row : m.mtta_table) {
    table.push_back({{"threshold", row.threshold}, {"detected", row.detected}, {"mean_tta_s", row.mean_tta}});
  }
  return {{"videos", m.videos},
          {"positives", m.positives},
          {"ap", m.ap},
          {"mtta_s", m.mtta_s},
          {"tta_at_threshold_s", m.tta_at_threshold_s},
          {"best_f1", {{"threshold", m.best_f1.threshold}, {"f1", m.best_f1.f1},
                       {"precision", m.best_f1.precision}, {"recall", m.best_f1.recall}}},
          {"learned_threshold", to_json(m.learned)},
          {"zero_threshold", to_json(m.zero_tau)},
          {"mtta_by_threshold", table}};
}

inline void write_pr_csv(const PRCurve& curve, std::ostream& out) {
  out << "threshold,P,R,F1\n";
  char line[128];
  for (const auto& pt : curve.points) {
    std::snprintf(line, sizeof line, "%.9g,%.9g,%.9g,%.9g\n", pt.threshold, pt.precision, pt.recall, pt.f1());
    out << line;
  }
}

/// P/R/F1 on a uniform grid of probability thresholds in [0, 1].
inline std::vector<PRPoint> threshold_sweep(const std::vector<double>& scores, const std::vector<int>& labels,
                                            int steps = 100) {
  detail::check_scores(scores, labels);
  require(steps >= 1, "threshold sweep: steps must be >= 1");
  std::vector<PRPoint> out;
  for (int i = 0; i <= steps; ++i) {
    out.push_back(detail::confusion_at(scores, labels, static_cast<double>(i) / steps));
  }
  return out;
}

inline void write_sweep_csv(const std::vector<PRPoint>& sweep, std::ostream& out) {
  out << "threshold,precision,recall,f1,tp,fp,fn,tn\n";
  char line[192];
  for (const auto& pt : sweep) {
    std::snprintf(line, sizeof line, "%.9g,%.9g,%.9g,%.9g,%d,%d,%d,%d\n", pt.threshold, pt.precision, pt.recall,
                  pt.f1(), pt.tp, pt.fp, pt.fn, pt.tn);
    out << line;
  }
}

}  // namespace aant

#endif  // AANT_EVALUATION_HPP_
