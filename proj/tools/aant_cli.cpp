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

// aant: command-line front end. Exit codes: 0 success, 1 invalid input,
// 2 runtime failure. Diagnostics go to stderr, results to files or stdout.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "aant/aant.hpp"

namespace fs = std::filesystem;
using namespace aant;

namespace {

std::ofstream open_out(const fs::path& file, std::ios::openmode mode = std::ios::trunc) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream out(file, mode);
  if (!out) throw RuntimeFailure("cannot write " + file.string());
  return out;
}

nlohmann::json read_json(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw ValidationError("cannot open " + file.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(file.string() + ": " + e.what());
  }
}

/// Flags shared by most subcommands. Unset optionals leave the config value.
struct Common {
  std::string config;
  std::optional<std::string> data_dir;
  std::optional<std::string> checkpoint;

  RunConfig load() const {
    RunConfig c = config.empty() ? RunConfig{} : load_run_config(config);
    if (data_dir) c.data.dir = *data_dir;
    if (checkpoint) c.checkpoint = *checkpoint;
    return c;
  }
};

void add_common(CLI::App* cmd, Common& c, bool data, bool checkpoint) {
  cmd->add_option("--config", c.config, "JSON run configuration");
  if (data) cmd->add_option("--data", c.data_dir, "dataset directory (overrides data.dir)");
  if (checkpoint) cmd->add_option("--checkpoint", c.checkpoint, "checkpoint directory (overrides train.checkpoint)");
}

std::vector<VideoRecord> load_split(const RunConfig& c, const std::optional<std::string>& manifest,
                                    const std::string& split) {
  const fs::path file = manifest ? fs::path(*manifest) : fs::path(c.data.dir) / (split + ".json");
  return load_manifest(file);
}

MockFrameEncoder frame_encoder(const RunConfig& c) {
  require(c.encoders.frame_encoder == "mock", "raw frames need model.frame_encoder 'mock'");
  return MockFrameEncoder(c.data.features.dim, c.data.raw.seed);
}

TextBank text_bank(const RunConfig& c, const std::vector<AccidentReport>& reports) {
  if (c.encoders.text_encoder == "external") {
    return text_bank_from_reports(reports, PrecomputedTextEncoder::load(c.encoders.text_embeddings, c.encoders.text_index));
  }
  return text_bank_from_reports(reports, MockTextEncoder(c.model.text_dim, c.model.seed));
}

// ---------------------------------------------------------------------------

int cmd_gen_data(const RunConfig& c) {
  const fs::path dir = c.data.dir;
  fs::create_directories(dir / "features");
  std::vector<VideoRecord> records;
  if (c.data.source == "features") {
    records = generate_synthetic_dataset(c.data.features);
  } else {
    const auto raw = generate_synthetic_raw(c.data.raw);
    records = encode_videos(raw, frame_encoder(c));
  }
  const DatasetSplit split = split_dataset(records, c.data.test_fraction, c.data.features.seed);
  auto write_set = [&](const std::vector<VideoRecord>& set, const std::string& name) {
    std::vector<std::string> paths;
    for (const auto& r : set) {
      const std::string rel = "features/" + r.id + ".aant";
      save_feature_file(r, dir / rel);
      paths.push_back(rel);
    }
    write_manifest(paths, dir / (name + ".json"));
  };
  write_set(split.train, "train");
  write_set(split.test, "test");
  std::vector<std::string> all;
  for (const auto& r : records) all.push_back("features/" + r.id + ".aant");
  write_manifest(all, dir / "all.json");

  fs::create_directories(dir / "reports");
  const auto reports = sample_report_corpus(c.data.report_pairs, c.data.features.seed);
  for (const auto& r : reports) save_report(r, dir / "reports" / (r.id + ".json"));
  open_out(dir / "config.json") << to_json(c).dump(2) << '\n';
  std::cerr << "gen-data: " << records.size() << " videos (" << split.train.size() << " train, " << split.test.size()
            << " test), " << reports.size() << " reports in " << dir.string() << "\n";
  return 0;
}

int cmd_train(const RunConfig& c) {
  const auto train_set = load_split(c, std::nullopt, "train");
  require(!train_set.empty(), "train: empty training manifest");
  const auto reports = load_report_dir(fs::path(c.data.dir) / "reports");
  const TextBank bank = text_bank(c, reports);
  AnticipationModel model = make_model(c.model, train_set.front().dim(), bank);
  const fs::path out = c.checkpoint;
  fs::create_directories(out);
  const TrainResult result = train(c.train, train_set, model, [](const EpochStats& e) {
    std::cerr << "epoch " << e.epoch << " total " << e.total << " lr " << e.lr << " tau " << e.tau << "\n";
  });
  save_checkpoint(out, model, result.weights);
  auto history = open_out(out / "history.csv");
  write_history_csv(result.history, history);
  std::cerr << "train: checkpoint written to " << out.string() << " (tau " << result.final_tau << ")\n";
  return 0;
}

int cmd_eval(const RunConfig& c, const std::optional<std::string>& manifest) {
  const Checkpoint ck = load_checkpoint(c.checkpoint);
  const auto test = load_split(c, manifest, "test");
  const Metrics m = evaluate(ck.model, test);
  const fs::path out = c.eval.out;
  fs::create_directories(out);
  const nlohmann::json doc = to_json(m);
  open_out(out / "metrics.json") << doc.dump(2) << '\n';
  auto pr = open_out(out / "pr_curve.csv");
  write_pr_csv(m.curve, pr);
  std::cout << doc.dump(2) << '\n';
  return 0;
}

int cmd_sweep(const RunConfig& c, const std::optional<std::string>& manifest, const std::string& out_file) {
  const Checkpoint ck = load_checkpoint(c.checkpoint);
  const auto test = load_split(c, manifest, "test");
  std::vector<double> scores;
  for (const auto& r : test) scores.push_back(full_forward(ck.model, r).video_score);
  const auto sweep = threshold_sweep(scores, label_ints(test), c.eval.sweep_steps);
  if (out_file.empty()) {
    write_sweep_csv(sweep, std::cout);
  } else {
    auto out = open_out(out_file);
    write_sweep_csv(sweep, out);
  }
  return 0;
}

int cmd_perturb(const RunConfig& c, const std::string& kind, const std::string& video_id, const std::string& out_file) {
  const Checkpoint ck = load_checkpoint(c.checkpoint);
  const auto videos = generate_synthetic_raw(c.data.raw);
  const RawVideo* video = nullptr;
  for (const auto& v : videos) {
    if (video_id.empty() ? v.label == Label::positive : v.id == video_id) {
      video = &v;
      break;
    }
  }
  require(video != nullptr, "perturb: no raw video '" + video_id + "' in the configured scenario");

  std::vector<Perturbation> perts{Perturbation{}};
  auto with = [&](PerturbationKind k) {
    Perturbation p = c.robustness;
    p.kind = k;
    perts.push_back(p);
  };
  if (kind == "all") {
    for (auto k : {PerturbationKind::drop_frames, PerturbationKind::half_resolution, PerturbationKind::gaussian_noise,
                   PerturbationKind::occlude_right}) {
      with(k);
    }
  } else {
    const PerturbationKind k = parse_perturbation_kind(kind.empty() ? std::string(name_of(c.robustness.kind)) : kind);
    if (k != PerturbationKind::none) with(k);
  }
  const auto traces = robustness_sweep(ck.model, *video, frame_encoder(c), perts, ck.model.tau());
  if (out_file.empty()) {
    write_traces_csv(traces, std::cout);
  } else {
    auto out = open_out(out_file);
    write_traces_csv(traces, out);
  }
  for (const auto& t : traces) std::cerr << t.perturbation << ": video score " << t.video_score << "\n";
  return 0;
}

AlertPrediction prediction_from(const RunConfig& c, const std::string& video, std::optional<double> score) {
  if (score) {
    AlertPrediction p;
    p.video_id = video.empty() ? "manual" : fs::path(video).stem().string();
    p.video_score = *score;
    return p;
  }
  require(!video.empty(), "need --video (or --score)");
  const Checkpoint ck = load_checkpoint(c.checkpoint);
  return predict_for_alert(ck.model, load_feature_file(video), ck.model.tau());
}

int cmd_alert(const RunConfig& c, const std::string& video, std::optional<double> score, const std::string& scene_file,
              const std::string& frame_ref, const std::string& log_file) {
  const AlertPrediction pred = prediction_from(c, video, score);
  const SceneSummary scene = scene_file.empty() ? SceneSummary{} : scene_from_json(read_json(scene_file));
  MockLanguageModel client(c.llm_seed);
  const AlertMessage m = generate_alert(client, frame_ref, pred, scene, c.alerts);
  if (!log_file.empty()) {
    auto out = open_out(log_file, std::ios::app);
    AlertLog log(out);
    log.record(pred.video_id, m);
  }
  std::cout << nlohmann::json{{"video", pred.video_id},
                              {"score", pred.video_score},
                              {"urgency", name_of(m.urgency)},
                              {"text", m.text},
                              {"status", m.status},
                              {"source", name_of(m.source)},
                              {"legality", m.legality.pass ? "pass" : "fail"},
                              {"diagnostics", m.diagnostics}}
                   .dump(2)
            << '\n';
  return 0;
}

int cmd_archive(const RunConfig& c, const std::string& env_file, const std::string& video,
                std::optional<double> score, const std::string& archive_dir, const std::string& quarantine_dir) {
  const EnvironmentLog env = environment_log_from_json(read_json(env_file));
  const AlertPrediction pred = prediction_from(c, video, score);
  MockLanguageModel client(c.llm_seed);
  const ArchiveResult r = archive_accident(env, pred, client, archive_dir, quarantine_dir);
  nlohmann::json findings = nlohmann::json::array();
  for (const auto& f : r.findings) {
    findings.push_back({{"rule", f.rule_id}, {"severity", name_of(f.severity)}, {"message", f.message}});
  }
  std::cout << nlohmann::json{{"id", r.report.id},
                              {"archived", r.archived},
                              {"path", r.path.string()},
                              {"findings", findings}}
                   .dump(2)
            << '\n';
  if (!r.archived) {
    std::cerr << "archive: report " << r.report.id << " quarantined\n";
    return 1;
  }
  return 0;
}

int cmd_stats(const std::string& reports_dir, bool reference) {
  require(reference != !reports_dir.empty(), "report-stats: give exactly one of --reports or --reference");
  const auto reports = reference ? collision_reference_corpus() : load_report_dir(reports_dir);
  std::cout << to_json(corpus_stats(reports)).dump(2) << '\n';
  return 0;
}

int cmd_validate(const std::string& reports_dir) {
  const auto reports = load_report_dir(reports_dir);
  nlohmann::json out = nlohmann::json::array();
  bool errors = false;
  for (const auto& r : reports) {
    for (const auto& f : validate_report(r)) {
      errors = errors || f.severity == FindingSeverity::error;
      out.push_back({{"report", r.id}, {"rule", f.rule_id}, {"severity", name_of(f.severity)}, {"message", f.message}});
    }
  }
  nlohmann::json dups = nlohmann::json::array();
  for (const auto& d : deduplicate(reports)) {
    dups.push_back({{"first", d.first}, {"second", d.second}, {"similarity", d.similarity}});
  }
  std::cout << nlohmann::json{{"reports", reports.size()}, {"findings", out}, {"near_duplicates", dups}}.dump(2)
            << '\n';
  return errors ? 1 : 0;
}

int cmd_selfcheck() {
  bool ok = true;
  for (const auto& r : run_selfcheck()) {
    std::cout << (r.pass ? "PASS " : "FAIL ") << r.name;
    if (!r.pass) std::cout << ": " << r.detail;
    std::cout << '\n';
    ok = ok && r.pass;
  }
  return ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"aant: accident anticipation with textual knowledge"};
  app.require_subcommand(1);

  Common common;
  std::optional<std::string> manifest;
  std::string out_file;
  std::string kind;
  std::string video_id;
  std::string video;
  std::optional<double> score;
  std::string scene_file;
  std::string frame_ref = "frame";
  std::string log_file;
  std::string env_file;
  std::string archive_dir = "archive";
  std::string quarantine_dir = "quarantine";
  std::string reports_dir;
  bool reference = false;
  bool friendly = false;
  // Flag overrides.
  std::optional<std::uint64_t> seed;
  std::optional<std::string> source;
  std::optional<double> separability;
  std::optional<int> epochs;
  std::optional<int> steps;
  std::optional<std::string> mode;
  std::optional<int> block;
  std::optional<int> period;
  std::optional<int> offset;
  std::optional<double> noise_std;

  auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset and report corpus");
  add_common(gen, common, false, false);
  gen->add_option("--out", common.data_dir, "output directory (overrides data.dir)");
  gen->add_option("--seed", seed, "data seed");
  gen->add_option("--source", source, "features or raw");
  gen->add_option("--separability", separability, "risk signal strength");

  auto* tr = app.add_subcommand("train", "train a model and write a checkpoint");
  add_common(tr, common, true, false);
  tr->add_option("--out", common.checkpoint, "checkpoint directory (overrides train.checkpoint)");
  tr->add_option("--epochs", epochs, "number of epochs");
  tr->add_option("--seed", seed, "training seed");

  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint");
  add_common(ev, common, true, true);
  ev->add_option("--manifest", manifest, "manifest to evaluate (default <data>/test.json)");
  std::optional<std::string> eval_out;
  ev->add_option("--out", eval_out, "output directory (overrides eval.out)");

  auto* sw = app.add_subcommand("sweep-threshold", "precision/recall/F1 against the decision threshold");
  add_common(sw, common, true, true);
  sw->add_option("--manifest", manifest, "manifest to evaluate (default <data>/test.json)");
  sw->add_option("--out", out_file, "CSV output (default stdout)");
  sw->add_option("--steps", steps, "grid steps over [0,1]");

  auto* pe = app.add_subcommand("perturb", "probability traces under sensor perturbations");
  add_common(pe, common, false, true);
  pe->add_option("--kind", kind, "none, drop_frames, half_resolution, gaussian_noise, occlude_right or all");
  pe->add_option("--seed", seed, "noise seed");
  pe->add_option("--video", video_id, "raw video id (default first positive)");
  pe->add_option("--mode", mode, "drop mode: blank or remove");
  pe->add_option("--block", block, "dropped frames per period");
  pe->add_option("--period", period, "drop period");
  pe->add_option("--offset", offset, "drop offset");
  pe->add_option("--std", noise_std, "noise standard deviation");
  pe->add_option("--out", out_file, "CSV output (default stdout)");

  auto* al = app.add_subcommand("alert", "generate a driver alert for one video");
  add_common(al, common, false, true);
  al->add_option("--video", video, "feature file of the video");
  al->add_option("--score", score, "use this video score instead of running the model");
  al->add_option("--scene", scene_file, "scene summary JSON");
  al->add_option("--frame-ref", frame_ref, "frame reference quoted in the prompt");
  al->add_option("--log", log_file, "append the alert to this JSON-lines log");
  al->add_flag("--friendly", friendly, "emit friendly reminders instead of suppressing");

  auto* ar = app.add_subcommand("archive", "archive a detected incident as a report");
  add_common(ar, common, false, true);
  ar->add_option("--env", env_file, "environment log JSON")->required();
  ar->add_option("--video", video, "feature file of the video");
  ar->add_option("--score", score, "use this video score instead of running the model");
  ar->add_option("--archive-dir", archive_dir, "directory for accepted reports");
  ar->add_option("--quarantine-dir", quarantine_dir, "directory for rejected reports");

  auto* st = app.add_subcommand("report-stats", "factor counts over a report corpus");
  st->alias("stats");
  st->add_option("--reports", reports_dir, "directory of report JSON files");
  st->add_flag("--reference", reference, "use the built-in collision reference corpus");

  auto* va = app.add_subcommand("validate", "run the report consistency rules");
  va->add_option("--reports", reports_dir, "directory of report JSON files")->required();

  auto* sc = app.add_subcommand("selfcheck", "run the oracle battery");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return 1;
  }

  try {
    RunConfig c = common.load();
    if (eval_out) c.eval.out = *eval_out;
    if (steps) c.eval.sweep_steps = *steps;
    if (epochs) c.train.epochs = *epochs;
    if (source) c.data.source = *source;
    if (separability) c.data.features.separability = *separability;
    if (friendly) c.alerts.friendly_reminders = true;
    if (mode) c.robustness.mode = parse_drop_mode(*mode);
    if (block) c.robustness.block = *block;
    if (period) c.robustness.period = *period;
    if (offset) c.robustness.offset = *offset;
    if (noise_std) c.robustness.std = *noise_std;
    if (seed) {
      if (gen->parsed()) {
        c.data.features.seed = *seed;
        c.data.raw.seed = *seed;
      }
      if (tr->parsed()) c.train.seed = *seed;
      if (pe->parsed()) c.robustness.seed = *seed;
    }
    validate_run_config(c);

    if (gen->parsed()) return cmd_gen_data(c);
    if (tr->parsed()) return cmd_train(c);
    if (ev->parsed()) return cmd_eval(c, manifest);
    if (sw->parsed()) return cmd_sweep(c, manifest, out_file);
    if (pe->parsed()) return cmd_perturb(c, kind, video_id, out_file);
    if (al->parsed()) return cmd_alert(c, video, score, scene_file, frame_ref, log_file);
    if (ar->parsed()) return cmd_archive(c, env_file, video, score, archive_dir, quarantine_dir);
    if (st->parsed()) return cmd_stats(reports_dir, reference);
    if (va->parsed()) return cmd_validate(reports_dir);
    if (sc->parsed()) return cmd_selfcheck();
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
