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
#include <sstream>
#include <vector>

#include "aant/evaluation.hpp"
#include "aant/pipeline.hpp"
#include "aant/selfcheck.hpp"
#include "support.hpp"

namespace aant {
namespace {

// Random small datasets with both classes and frequent score ties.
struct Sample {
  std::vector<double> scores;
  std::vector<int> labels;
};

Sample random_sample(SplitMix64& rng) {
  Sample s;
  const int n = 2 + static_cast<int>(rng.below(11));
  for (int i = 0; i < n; ++i) {
    s.scores.push_back(static_cast<double>(rng.below(7)) / 6.0);
    s.labels.push_back(static_cast<int>(rng.below(2)));
  }
  s.labels[rng.below(static_cast<std::uint64_t>(n))] = 1;
  std::size_t j = 0;
  while (s.labels[j] == 1 && std::count(s.labels.begin(), s.labels.end(), 0) == 0) {
    j = rng.below(static_cast<std::uint64_t>(n));
    if (std::count(s.labels.begin(), s.labels.end(), 1) > 1) s.labels[j] = 0;
  }
  return s;
}

VideoTrace positive_trace(std::vector<double> p, int toa, double fps = 20.0) {
  return VideoTrace{std::move(p), Label::positive, toa, fps};
}

VideoTrace negative_trace(std::vector<double> p) { return VideoTrace{std::move(p), Label::negative, 0, 20.0}; }

TEST(PrCurve, TwoVideosByHand) {
  const auto c = pr_curve({0.9, 0.1}, {1, 0});
  ASSERT_EQ(c.points.size(), 2U);
  EXPECT_EQ(c.points[0].threshold, 0.9);
  EXPECT_EQ(c.points[0].precision, 1.0);
  EXPECT_EQ(c.points[0].recall, 1.0);
  EXPECT_EQ(c.points[1].threshold, 0.1);
  EXPECT_EQ(c.points[1].precision, 0.5);
  EXPECT_EQ(c.points[1].recall, 1.0);
  EXPECT_EQ(c.points[1].fp, 1);
  EXPECT_EQ(c.points[1].tn, 0);
}

TEST(PrCurve, TiesCollapse) {
  const auto c = pr_curve({0.5, 0.5, 0.5, 0.2}, {1, 0, 1, 0});
  ASSERT_EQ(c.points.size(), 2U);
  EXPECT_EQ(c.points[0].tp, 2);
  EXPECT_EQ(c.points[0].fp, 1);
}

TEST(PrCurve, SingleClassRejected) {
  EXPECT_THROW(pr_curve({0.3, 0.4}, {1, 1}), ValidationError);
  EXPECT_THROW(pr_curve({0.3, 0.4}, {0, 0}), ValidationError);
  EXPECT_THROW(pr_curve({0.3}, {1, 0}), ValidationError);
}

TEST(PrCurve, AllPositiveSweepHasUnitPrecision) {
  // The curve needs both classes; the grid sweep accepts one and shows the
  // precision directly.
  for (const auto& pt : threshold_sweep({0.2, 0.6, 0.9}, {1, 1, 1}, 10)) {
    if (pt.tp + pt.fp > 0) {
      EXPECT_EQ(pt.precision, 1.0);
    }
  }
}

TEST(PrCurve, InvariantsProperty) {
  SplitMix64 rng(derive_seed(2, "pr-invariants"));
  for (int trial = 0; trial < 200; ++trial) {
    const Sample s = random_sample(rng);
    const auto c = pr_curve(s.scores, s.labels);
    double prev_recall = 0.0;
    double prev_thr = std::numeric_limits<double>::infinity();
    for (const auto& pt : c.points) {
      EXPECT_GE(pt.recall, prev_recall);
      EXPECT_LT(pt.threshold, prev_thr);
      EXPECT_EQ(pt.tp + pt.fp + pt.fn + pt.tn, static_cast<int>(s.scores.size()));
      prev_recall = pt.recall;
      prev_thr = pt.threshold;
    }
    EXPECT_EQ(c.points.back().recall, 1.0);
  }
}

TEST(AveragePrecision, HandValues) {
  EXPECT_EQ(average_precision({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0}), 1.0);
  EXPECT_NEAR(average_precision({0.9, 0.8, 0.1}, {0, 1, 0}), 0.5, 1e-15);
  EXPECT_NEAR(average_precision({0.9, 0.1}, {0, 1}), 0.5, 1e-15);
}

TEST(AveragePrecision, MatchesEnumerationProperty) {
  SplitMix64 rng(derive_seed(5, "ap-oracle"));
  for (int trial = 0; trial < 500; ++trial) {
    const Sample s = random_sample(rng);
    EXPECT_NEAR(average_precision(s.scores, s.labels), brute_force_ap(s.scores, s.labels), 1e-12);
  }
}

TEST(AveragePrecision, MonotoneTransformInvariance) {
  SplitMix64 rng(derive_seed(6, "ap-monotone"));
  for (int trial = 0; trial < 200; ++trial) {
    const Sample s = random_sample(rng);
    std::vector<double> t;
    for (double v : s.scores) t.push_back(std::exp(3.0 * v) - 7.0);
    EXPECT_EQ(average_precision(s.scores, s.labels), average_precision(t, s.labels));
  }
}

TEST(Tta, HandValues) {
  std::vector<double> p(100, 0.0);
  p[50] = 0.8;
  EXPECT_DOUBLE_EQ(*tta(p, 0.5, 90, 20.0), 2.0);
  std::vector<double> late(100, 0.0);
  late[89] = 1.0;
  EXPECT_DOUBLE_EQ(*tta(late, 0.5, 90, 20.0), 1.0 / 20.0);
  // Crossing at or after toa does not count.
  std::vector<double> after(100, 0.0);
  after[90] = 1.0;
  EXPECT_FALSE(tta(after, 0.5, 90, 20.0).has_value());
  EXPECT_THROW(tta(p, 0.5, 0, 20.0), ValidationError);
}

TEST(Mtta, ConstantDetection) {
  const auto m = mtta({positive_trace(std::vector<double>(10, 0.9), 8, 4.0), negative_trace(std::vector<double>(10, 0.2))});
  EXPECT_DOUBLE_EQ(m.mtta, 2.0);
  ASSERT_EQ(m.table.size(), 2U);
  EXPECT_EQ(m.table[0].detected, 1);
}

TEST(Mtta, NoDetectionIsZero) {
  const auto m = mtta({positive_trace({0.1, 0.1, 0.9}, 2), negative_trace({0.9, 0.9, 0.9})});
  // Thresholds 0.9 and 0.1: at 0.9 the positive misses; at 0.1 it crosses at t=0.
  EXPECT_DOUBLE_EQ(m.mtta, 2.0 / 20.0);
  const auto none = mtta({positive_trace({0.0, 0.0, 0.9}, 2), negative_trace({0.9, 0.9, 0.9})});
  // Positive window score is 0, which is also a threshold, and p >= 0 holds.
  EXPECT_DOUBLE_EQ(none.mtta, 2.0 / 20.0);
}

TEST(Mtta, AveragesDetectedPositives) {
  // Crossings at 2 s and 4 s at every threshold.
  std::vector<double> a(100, 0.0);
  std::vector<double> b(100, 0.0);
  for (int t = 50; t < 100; ++t) a[static_cast<std::size_t>(t)] = 0.9;
  for (int t = 10; t < 100; ++t) b[static_cast<std::size_t>(t)] = 0.9;
  const auto m = mtta({positive_trace(a, 90), positive_trace(b, 90), negative_trace(std::vector<double>(100, 0.3))});
  EXPECT_DOUBLE_EQ(m.mtta, 3.0);
}

TEST(Mtta, BoundedByLongestLeadProperty) {
  SplitMix64 rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<VideoTrace> v;
    int max_toa = 0;
    for (int i = 0; i < 6; ++i) {
      const int n = 5 + static_cast<int>(rng.below(20));
      std::vector<double> p(static_cast<std::size_t>(n));
      for (auto& x : p) x = rng.uniform();
      if (i % 2 == 0) {
        const int toa = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
        max_toa = std::max(max_toa, toa);
        v.push_back(positive_trace(p, toa, 10.0));
      } else {
        v.push_back(negative_trace(p));
      }
    }
    const double m = mtta(v).mtta;
    EXPECT_GE(m, 0.0);
    EXPECT_LE(m, max_toa / 10.0 + 1e-12);
  }
}

TEST(BestF1, HandValues) {
  const auto c = best_f1_threshold({0.9, 0.8, 0.1}, {0, 1, 0});
  EXPECT_EQ(c.threshold, 0.8);
  EXPECT_NEAR(c.f1, 2.0 / 3.0, 1e-15);
  const auto sep = best_f1_threshold({0.9, 0.7, 0.3, 0.1}, {1, 1, 0, 0});
  EXPECT_EQ(sep.threshold, 0.7);
  EXPECT_EQ(sep.f1, 1.0);
  const auto flat = best_f1_threshold({0.4, 0.4, 0.4}, {1, 0, 1});
  EXPECT_EQ(flat.threshold, 0.4);
}

TEST(BestF1, TiesGoToLargerThreshold) {
  // Threshold 0.8: P=1, R=1/2, F1=2/3. Threshold 0.1: P=1/2, R=1, F1=2/3.
  const auto c = best_f1_threshold({0.8, 0.5, 0.2, 0.1}, {1, 0, 0, 1});
  EXPECT_EQ(c.threshold, 0.8);
}

TEST(BestF1, DominatesAnyOperatingPointProperty) {
  SplitMix64 rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const Sample s = random_sample(rng);
    const double best = best_f1_threshold(s.scores, s.labels).f1;
    for (double thr : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      EXPECT_GE(best + 1e-12, detail::confusion_at(s.scores, s.labels, thr).f1());
    }
  }
}

TEST(OperatingPoint, DecisionRuleAtHalf) {
  std::vector<VideoTrace> v{positive_trace({0.2, 0.5, 0.9}, 2), positive_trace({0.1, 0.4, 0.9}, 2),
                            negative_trace({0.1, 0.6}), negative_trace({0.49, 0.2})};
  const auto op = operating_point(v, 0.3);
  EXPECT_EQ(op.tp, 1);
  EXPECT_EQ(op.fn, 1);
  EXPECT_EQ(op.fp, 1);
  EXPECT_EQ(op.tn, 1);
  EXPECT_DOUBLE_EQ(op.tta_s, 1.0 / 20.0);
  EXPECT_EQ(op.tau, 0.3);
}

TEST(Evaluate, PerfectTracesAndInfiniteThreshold) {
  std::vector<VideoTrace> learned{positive_trace({0.2, 0.9, 0.9}, 3), negative_trace({0.1, 0.2, 0.3})};
  const auto m = summarize(learned, learned, 0.0);
  EXPECT_EQ(m.ap, 1.0);
  EXPECT_EQ(m.positives, 1);
  EXPECT_DOUBLE_EQ(m.tta_at_threshold_s, 2.0 / 20.0);

  ModelConfig mc;
  mc.dim = 8;
  mc.heads = 2;
  mc.text_dim = 8;
  const auto model = make_model(mc, 8, default_text_bank(2, 0, 8));
  SyntheticSpec spec;
  spec.n_pos = 3;
  spec.n_neg = 3;
  spec.frames = 10;
  spec.dim = 8;
  spec.toa = 8;
  const auto metrics = evaluate(model, generate_synthetic_dataset(spec), 1e6);
  EXPECT_EQ(metrics.learned.tp + metrics.learned.fp, 0);
  EXPECT_EQ(metrics.tta_at_threshold_s, 0.0);
}

TEST(Evaluate, UntrainedModelNearPrevalence) {
  SyntheticSpec spec;
  spec.n_pos = 40;
  spec.n_neg = 40;
  spec.frames = 20;
  spec.dim = 8;
  spec.toa = 18;
  spec.separability = 0.0;
  const auto data = generate_synthetic_dataset(spec);
  double mean_ap = 0.0;
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    ModelConfig mc;
    mc.dim = 8;
    mc.heads = 2;
    mc.text_dim = 8;
    mc.seed = seed;
    const double ap = evaluate(make_model(mc, 8, default_text_bank(2, 0, 8)), data, 0.0).ap;
    EXPECT_GE(ap, 0.3);
    EXPECT_LE(ap, 0.7);
    mean_ap += ap / 4.0;
  }
  EXPECT_NEAR(mean_ap, 0.5, 0.15);
}

TEST(Output, JsonAndCsv) {
  std::vector<VideoTrace> v{positive_trace({0.2, 0.9, 0.9}, 3), negative_trace({0.1, 0.6, 0.3})};
  const auto m = summarize(v, v, 0.1);
  const auto j = to_json(m);
  EXPECT_EQ(j.at("videos"), 2);
  EXPECT_TRUE(j.contains("mtta_s"));
  EXPECT_TRUE(j.contains("tta_at_threshold_s"));
  EXPECT_EQ(j.at("learned_threshold").at("tau"), 0.1);
  EXPECT_EQ(j.at("mtta_by_threshold").size(), m.mtta_table.size());

  std::ostringstream pr;
  write_pr_csv(m.curve, pr);
  EXPECT_EQ(pr.str(), "threshold,P,R,F1\n0.9,1,1,1\n0.6,0.5,1,0.666666667\n");

  const auto sweep = threshold_sweep({0.9, 0.6}, {1, 0}, 4);
  ASSERT_EQ(sweep.size(), 5U);
  EXPECT_EQ(sweep[2].threshold, 0.5);
  EXPECT_EQ(sweep[2].fp, 1);
  EXPECT_EQ(sweep[4].tp, 0);
}

}  // namespace
}  // namespace aant
