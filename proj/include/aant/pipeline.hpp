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

#ifndef AANT_PIPELINE_HPP_
#define AANT_PIPELINE_HPP_

// Glue shared by the command-line tool and the end-to-end tests.

#include <string>
#include <vector>

#include "aant/alert_feedback.hpp"
#include "aant/data_model.hpp"
#include "aant/evaluation.hpp"
#include "aant/fusion.hpp"
#include "aant/report_corpus.hpp"
#include "aant/text_branch.hpp"
#include "aant/training.hpp"

namespace aant {

/// Rendered report texts split by class, then encoded.
inline TextBank text_bank_from_reports(const std::vector<AccidentReport>& reports, const TextEncoder& encoder) {
  std::vector<std::string> pos;
  std::vector<std::string> neg;
  for (const auto& r : reports) (r.is_accident ? pos : neg).push_back(render_report_text(r));
  return build_text_bank(pos, neg, encoder);
}

/// Text bank from the built-in paired corpus and the hashing encoder.
inline TextBank default_text_bank(int pairs, std::uint64_t seed, int text_dim) {
  return text_bank_from_reports(sample_report_corpus(pairs, seed), MockTextEncoder(text_dim, seed));
}

/// Model sized to the data; config.dim = 0 means "take the data width".
inline AnticipationModel make_model(ModelConfig config, int data_dim, TextBank bank) {
  if (config.dim == 0) config.dim = data_dim;
  require_shape(config.dim == data_dim, "model width differs from data width");
  config.text_dim = bank.text_dim();
  return AnticipationModel(config, std::move(bank));
}

/// Summary of one video for the alert pipeline.
inline AlertPrediction predict_for_alert(const AnticipationModel& model, const VideoRecord& record, double tau) {
  const AnticipationOutput out = full_forward(model, record, tau);
  AlertPrediction p;
  p.video_id = record.id;
  p.video_score = out.video_score;
  p.fps = record.fps;
  const int k = model.config().top_k;
  std::vector<double> col0;
  std::vector<double> col1;
  for (Eigen::Index t = 0; t < out.similarity.rows(); ++t) {
    col0.push_back(out.similarity(t, 0));
    col1.push_back(out.similarity(t, 1));
  }
  p.non_accident_similarity = top_k_mean(col0, k);
  p.accident_similarity = top_k_mean(col1, k);
  for (int t = 0; t < record.window_end(); ++t) {
    if (out.p[static_cast<std::size_t>(t)] >= kDecisionProbability) {
      p.first_crossing_frame = t;
      break;
    }
  }
  return p;
}

}  // namespace aant

#endif  // AANT_PIPELINE_HPP_
