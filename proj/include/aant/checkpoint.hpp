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

#ifndef AANT_CHECKPOINT_HPP_
#define AANT_CHECKPOINT_HPP_

// A checkpoint is a directory: manifest.json plus one AANT blob per tensor.
// Blob headers reuse the feature-file fields (id = tensor name, n_frames =
// rows, dim = cols, fps = 1, toa = 0, label = 0). Values are stored as
// float32, so a loaded model equals the saved one rounded to float32 and a
// second save reproduces the first byte for byte.

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "aant/data_model.hpp"
#include "aant/error.hpp"
#include "aant/fusion.hpp"
#include "aant/training.hpp"

namespace aant {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  AnticipationModel model;
  LossWeights loss_weights;
};

namespace detail {

inline VideoRecord tensor_record(const std::string& name, const Matrix& m) {
  VideoRecord r;
  r.id = name;
  r.fps = 1.0;
  r.features = m.cast<float>();
  return r;
}

inline std::string blob_name(const std::string& tensor) {
  std::string s = tensor;
  for (char& c : s) {
    if (c == '.') c = '_';
  }
  return s + ".aant";
}

}  // namespace detail

inline Matrix round_to_float32(const Matrix& m) { return m.cast<float>().cast<double>(); }

/// Rounds every model parameter to float32 in place, matching what a
/// checkpoint round trip produces.
inline void round_to_float32(AnticipationModel& model) {
  for (auto& [name, var] : model.parameters()) var.mutable_value() = round_to_float32(var.value());
}

inline void save_checkpoint(const std::filesystem::path& dir, const AnticipationModel& model,
                            const LossWeights& weights = {}) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw RuntimeFailure("checkpoint: cannot create " + dir.string() + ": " + ec.message());

  const ModelConfig& c = model.config();
  nlohmann::json manifest;
  manifest["format"] = "aant-checkpoint";
  manifest["version"] = kCheckpointVersion;
  manifest["model"] = {{"dim", c.dim},     {"heads", c.heads},             {"text_dim", c.text_dim},
                       {"top_k", c.top_k}, {"temperature", c.temperature}, {"seed", c.seed}};
  manifest["tau"] = static_cast<double>(static_cast<float>(model.tau()));

  auto write = [&](const std::string& name, const Matrix& m) {
    const std::string file = detail::blob_name(name);
    save_feature_file(detail::tensor_record(name, m), dir / file);
    return nlohmann::json{{"name", name}, {"file", file}, {"rows", m.rows()}, {"cols", m.cols()}};
  };
  nlohmann::json params = nlohmann::json::array();
  for (const auto& [name, var] : model.parameters()) params.push_back(write(name, var.value()));
  manifest["params"] = params;
  manifest["loss_theta"] = write("loss.theta", weights.theta.value());
  manifest["text_bank"] = {{"negative", write("text.negative", model.text_bank().negative)},
                           {"positive", write("text.positive", model.text_bank().positive)}};

  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  if (!out) throw RuntimeFailure("checkpoint: cannot write manifest in " + dir.string());
  out << manifest.dump(2) << '\n';
}

inline Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw ValidationError("checkpoint: no manifest.json in " + dir.string());
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint manifest: ") + e.what());
  }

  auto read = [&](const nlohmann::json& entry, const std::string& expected) {
    const VideoRecord r = load_feature_file(dir / entry.at("file").get<std::string>());
    if (r.id != expected) throw FormatError("checkpoint: blob holds '" + r.id + "', expected '" + expected + "'");
    if (r.features.rows() != entry.at("rows").get<long long>() || r.features.cols() != entry.at("cols").get<long long>()) {
      throw FormatError("checkpoint: tensor '" + expected + "' shape differs from manifest");
    }
    return Matrix(r.features.cast<double>());
  };

  try {
    if (manifest.at("format") != "aant-checkpoint" || manifest.at("version") != kCheckpointVersion) {
      throw FormatError("checkpoint: unsupported format or version");
    }
    const auto& m = manifest.at("model");
    ModelConfig config;
    config.dim = m.at("dim").get<int>();
    config.heads = m.at("heads").get<int>();
    config.text_dim = m.at("text_dim").get<int>();
    config.top_k = m.at("top_k").get<int>();
    config.temperature = m.at("temperature").get<double>();
    config.seed = m.at("seed").get<std::uint64_t>();

    TextBank bank{read(manifest.at("text_bank").at("negative"), "text.negative"),
                  read(manifest.at("text_bank").at("positive"), "text.positive")};
    Checkpoint ck{AnticipationModel(config, std::move(bank)), LossWeights{}};

    const auto& params = manifest.at("params");
    auto targets = ck.model.parameters();
    if (params.size() != targets.size()) throw FormatError("checkpoint: parameter count differs from model");
    for (std::size_t i = 0; i < targets.size(); ++i) {
      const std::string& name = targets[i].first;
      if (params[i].at("name") != name) throw FormatError("checkpoint: parameter order differs at '" + name + "'");
      Matrix value = read(params[i], name);
      if (value.rows() != targets[i].second.rows() || value.cols() != targets[i].second.cols()) {
        throw FormatError("checkpoint: tensor '" + name + "' shape differs from model config");
      }
      targets[i].second.mutable_value() = std::move(value);
    }
    const Matrix theta = read(manifest.at("loss_theta"), "loss.theta");
    if (theta.rows() != 1 || theta.cols() != 3) throw FormatError("checkpoint: loss weights must be 1 x 3");
    ck.loss_weights.theta.mutable_value() = theta;
    return ck;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint manifest: ") + e.what());
  }
}

}  // namespace aant

#endif  // AANT_CHECKPOINT_HPP_
