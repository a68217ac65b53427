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

#ifndef AANT_CONFIG_HPP_
#define AANT_CONFIG_HPP_

// Run configuration: one JSON document with sections data, model, train,
// eval, robustness and alerts. Every key is optional; unknown keys are
// errors. Command-line flags are applied on top by the CLI.

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include "aant/alert_feedback.hpp"
#include "aant/data_model.hpp"
#include "aant/error.hpp"
#include "aant/fusion.hpp"
#include "aant/robustness.hpp"
#include "aant/training.hpp"

namespace aant {

struct DataConfig {
  std::string dir = "data";
  std::string source = "features";  // "features" or "raw"
  SyntheticSpec features;
  RawSyntheticSpec raw;
  double test_fraction = 0.3;
  int report_pairs = 20;
};

/// Where embeddings come from. External text embeddings are an AANT file
/// with one row per text plus a JSON array of the texts in row order. The
/// feature-file frame encoder means features are only read from files, so
/// raw-pixel commands are unavailable.
struct EncoderConfig {
  std::string text_encoder = "mock";  // "mock" or "external"
  std::string text_embeddings;
  std::string text_index;
  std::string frame_encoder = "mock";  // "mock" or "feature-file"
};

struct EvalConfig {
  std::string out = "eval";
  int sweep_steps = 100;
};

struct RunConfig {
  DataConfig data;
  ModelConfig model = [] {
    ModelConfig m;
    m.dim = 0;  // take the data width
    return m;
  }();
  EncoderConfig encoders;
  TrainConfig train;
  std::string checkpoint = "checkpoint";
  EvalConfig eval;
  Perturbation robustness;
  AlertPolicy alerts;
  std::uint64_t llm_seed = 0;
};

namespace detail {

/// Reads fields of one JSON object and rejects keys nobody asked for.
class SectionReader {
 public:
  SectionReader(const nlohmann::json& obj, std::string where) : obj_(obj), where_(std::move(where)) {
    require(obj_.is_object(), "config: '" + where_ + "' must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end()) return;
    try {
      out = it->get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("config: " + where_ + "." + key + ": " + e.what());
    }
  }

  const nlohmann::json* child(const char* key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (const auto& [key, _] : obj_.items()) {
      if (!seen_.count(key)) throw ValidationError("config: unknown key '" + key + "' in " + where_);
    }
  }

 private:
  const nlohmann::json& obj_;
  std::string where_;
  std::set<std::string> seen_;
};

}  // namespace detail

inline void validate_run_config(const RunConfig& c) {
  require(c.data.source == "features" || c.data.source == "raw", "config: data.source must be 'features' or 'raw'");
  require(c.data.test_fraction > 0.0 && c.data.test_fraction < 1.0, "config: data.test_fraction must lie in (0,1)");
  require(c.data.report_pairs >= 1, "config: data.report_pairs must be >= 1");
  require(c.data.features.n_pos >= 1 && c.data.features.n_neg >= 1 && c.data.features.frames >= 1 &&
              c.data.features.dim >= 1 && c.data.features.fps > 0.0,
          "config: data sizes must be positive");
  require(c.data.features.toa >= 1 && c.data.features.toa <= c.data.features.frames,
          "config: data.toa must lie in [1, frames]");
  require(c.model.dim >= 0 && c.model.heads >= 1 && c.model.text_dim >= 1 && c.model.top_k >= 1 &&
              c.model.temperature > 0.0,
          "config: model fields must be positive");
  require(c.encoders.text_encoder == "mock" || c.encoders.text_encoder == "external",
          "config: model.text_encoder must be 'mock' or 'external'");
  require(c.encoders.text_encoder == "mock" || (!c.encoders.text_embeddings.empty() && !c.encoders.text_index.empty()),
          "config: model.text_encoder 'external' needs text_embeddings and text_index");
  require(c.encoders.frame_encoder == "mock" || c.encoders.frame_encoder == "feature-file",
          "config: model.frame_encoder must be 'mock' or 'feature-file'");
  require(c.data.source == "features" || c.encoders.frame_encoder == "mock",
          "config: data.source 'raw' needs model.frame_encoder 'mock'");
  validate_train_config(c.train);
  require(c.eval.sweep_steps >= 1, "config: eval.sweep_steps must be >= 1");
  validate_policy(c.alerts);
}

inline RunConfig parse_run_config(const nlohmann::json& doc, RunConfig c = {}) {
  detail::SectionReader top(doc, "config");

  if (const auto* j = top.child("data")) {
    detail::SectionReader r(*j, "data");
    r.get("dir", c.data.dir);
    r.get("source", c.data.source);
    r.get("test_fraction", c.data.test_fraction);
    r.get("report_pairs", c.data.report_pairs);
    r.get("n_pos", c.data.features.n_pos);
    r.get("n_neg", c.data.features.n_neg);
    r.get("frames", c.data.features.frames);
    r.get("dim", c.data.features.dim);
    r.get("fps", c.data.features.fps);
    r.get("toa", c.data.features.toa);
    r.get("separability", c.data.features.separability);
    r.get("ramp_seconds", c.data.features.ramp_seconds);
    r.get("seed", c.data.features.seed);
    if (const auto* raw = r.child("raw")) {
      detail::SectionReader rr(*raw, "data.raw");
      rr.get("n_pos", c.data.raw.n_pos);
      rr.get("n_neg", c.data.raw.n_neg);
      rr.get("frames", c.data.raw.frames);
      rr.get("height", c.data.raw.height);
      rr.get("width", c.data.raw.width);
      rr.get("fps", c.data.raw.fps);
      rr.get("toa", c.data.raw.toa);
      rr.get("risk_amplitude", c.data.raw.risk_amplitude);
      rr.get("texture_spread", c.data.raw.texture_spread);
      rr.get("right_half_max", c.data.raw.right_half_max);
      rr.get("seed", c.data.raw.seed);
      rr.finish();
    }
    r.finish();
  }
  if (const auto* j = top.child("model")) {
    detail::SectionReader r(*j, "model");
    r.get("dim", c.model.dim);
    r.get("heads", c.model.heads);
    r.get("text_dim", c.model.text_dim);
    r.get("top_k", c.model.top_k);
    r.get("temperature", c.model.temperature);
    r.get("seed", c.model.seed);
    r.get("text_encoder", c.encoders.text_encoder);
    r.get("text_embeddings", c.encoders.text_embeddings);
    r.get("text_index", c.encoders.text_index);
    r.get("frame_encoder", c.encoders.frame_encoder);
    r.finish();
  }
  if (const auto* j = top.child("train")) {
    detail::SectionReader r(*j, "train");
    r.get("epochs", c.train.epochs);
    r.get("batch_size", c.train.batch_size);
    r.get("lr", c.train.lr);
    r.get("threshold_lr", c.train.threshold_lr);
    r.get("weight_decay", c.train.weight_decay);
    r.get("plateau_factor", c.train.plateau_factor);
    r.get("plateau_patience", c.train.plateau_patience);
    r.get("seed", c.train.seed);
    r.get("checkpoint", c.checkpoint);
    r.finish();
  }
  if (const auto* j = top.child("eval")) {
    detail::SectionReader r(*j, "eval");
    r.get("out", c.eval.out);
    r.get("sweep_steps", c.eval.sweep_steps);
    r.finish();
  }
  if (const auto* j = top.child("robustness")) {
    detail::SectionReader r(*j, "robustness");
    std::string kind(name_of(c.robustness.kind));
    std::string mode = c.robustness.mode == DropMode::blank ? "blank" : "remove";
    r.get("kind", kind);
    r.get("block", c.robustness.block);
    r.get("period", c.robustness.period);
    r.get("offset", c.robustness.offset);
    r.get("mode", mode);
    r.get("mean", c.robustness.mean);
    r.get("std", c.robustness.std);
    r.get("seed", c.robustness.seed);
    r.finish();
    c.robustness.kind = parse_perturbation_kind(kind);
    c.robustness.mode = parse_drop_mode(mode);
  }
  if (const auto* j = top.child("alerts")) {
    detail::SectionReader r(*j, "alerts");
    r.get("advisory_from", c.alerts.advisory_from);
    r.get("warning_from", c.alerts.warning_from);
    r.get("critical_from", c.alerts.critical_from);
    r.get("vulnerable_min_score", c.alerts.vulnerable_min_score);
    r.get("vulnerable_agents", c.alerts.vulnerable_agents);
    r.get("friendly_reminders", c.alerts.friendly_reminders);
    r.get("llm_seed", c.llm_seed);
    r.finish();
  }
  top.finish();
  validate_run_config(c);
  return c;
}

inline RunConfig load_run_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ValidationError("cannot open config " + file.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("config " + file.string() + ": " + e.what());
  }
  return parse_run_config(doc);
}

/// The effective configuration, every key spelled out.
inline nlohmann::json to_json(const RunConfig& c) {
  const auto& f = c.data.features;
  const auto& r = c.data.raw;
  return {
      {"data",
       {{"dir", c.data.dir},
        {"source", c.data.source},
        {"test_fraction", c.data.test_fraction},
        {"report_pairs", c.data.report_pairs},
        {"n_pos", f.n_pos},
        {"n_neg", f.n_neg},
        {"frames", f.frames},
        {"dim", f.dim},
        {"fps", f.fps},
        {"toa", f.toa},
        {"separability", f.separability},
        {"ramp_seconds", f.ramp_seconds},
        {"seed", f.seed},
        {"raw",
         {{"n_pos", r.n_pos},
          {"n_neg", r.n_neg},
          {"frames", r.frames},
          {"height", r.height},
          {"width", r.width},
          {"fps", r.fps},
          {"toa", r.toa},
          {"risk_amplitude", r.risk_amplitude},
          {"texture_spread", r.texture_spread},
          {"right_half_max", r.right_half_max},
          {"seed", r.seed}}}}},
      {"model",
       {{"dim", c.model.dim},
        {"heads", c.model.heads},
        {"text_dim", c.model.text_dim},
        {"top_k", c.model.top_k},
        {"temperature", c.model.temperature},
        {"seed", c.model.seed},
        {"text_encoder", c.encoders.text_encoder},
        {"text_embeddings", c.encoders.text_embeddings},
        {"text_index", c.encoders.text_index},
        {"frame_encoder", c.encoders.frame_encoder}}},
      {"train",
       {{"epochs", c.train.epochs},
        {"batch_size", c.train.batch_size},
        {"lr", c.train.lr},
        {"threshold_lr", c.train.threshold_lr},
        {"weight_decay", c.train.weight_decay},
        {"plateau_factor", c.train.plateau_factor},
        {"plateau_patience", c.train.plateau_patience},
        {"seed", c.train.seed},
        {"checkpoint", c.checkpoint}}},
      {"eval", {{"out", c.eval.out}, {"sweep_steps", c.eval.sweep_steps}}},
      {"robustness",
       {{"kind", name_of(c.robustness.kind)},
        {"block", c.robustness.block},
        {"period", c.robustness.period},
        {"offset", c.robustness.offset},
        {"mode", c.robustness.mode == DropMode::blank ? "blank" : "remove"},
        {"mean", c.robustness.mean},
        {"std", c.robustness.std},
        {"seed", c.robustness.seed}}},
      {"alerts",
       {{"advisory_from", c.alerts.advisory_from},
        {"warning_from", c.alerts.warning_from},
        {"critical_from", c.alerts.critical_from},
        {"vulnerable_min_score", c.alerts.vulnerable_min_score},
        {"vulnerable_agents", c.alerts.vulnerable_agents},
        {"friendly_reminders", c.alerts.friendly_reminders},
        {"llm_seed", c.llm_seed}}},
  };
}

}  // namespace aant

#endif  // AANT_CONFIG_HPP_
