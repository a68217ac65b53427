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

#ifndef AANT_ALERT_FEEDBACK_HPP_
#define AANT_ALERT_FEEDBACK_HPP_

// Driver alerts and incident archiving on top of a text-completion client.
//
// Alerts: score + scene -> urgency -> prompt -> completion -> legality check,
// with one tightened retry and a fixed fallback. Archiving: environment log +
// completion narrative -> report, kept only if report validation passes.

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "aant/error.hpp"
#include "aant/report_corpus.hpp"
#include "aant/rng.hpp"

namespace aant {

enum class DistanceClass { far, near, imminent };
enum class UrgencyLevel { none = 0, advisory = 1, warning = 2, critical = 3 };

inline std::string_view name_of(DistanceClass d) {
  switch (d) {
    case DistanceClass::far: return "far";
    case DistanceClass::near: return "near";
    case DistanceClass::imminent: return "imminent";
  }
  return "far";
}

inline std::string_view name_of(UrgencyLevel u) {
  switch (u) {
    case UrgencyLevel::none: return "none";
    case UrgencyLevel::advisory: return "advisory";
    case UrgencyLevel::warning: return "warning";
    case UrgencyLevel::critical: return "critical";
  }
  return "none";
}

inline DistanceClass parse_distance_class(std::string_view s) {
  for (auto d : {DistanceClass::far, DistanceClass::near, DistanceClass::imminent}) {
    if (s == name_of(d)) return d;
  }
  throw ValidationError("distance class must be far, near or imminent");
}

inline UrgencyLevel parse_urgency(std::string_view s) {
  for (auto u : {UrgencyLevel::none, UrgencyLevel::advisory, UrgencyLevel::warning, UrgencyLevel::critical}) {
    if (s == name_of(u)) return u;
  }
  throw ValidationError("urgency must be none, advisory, warning or critical");
}

struct SceneSummary {
  std::map<std::string, int> agent_counts;
  DistanceClass min_distance = DistanceClass::far;
  Weather weather = Weather::Clear;
  Lighting lighting = Lighting::Daylight;
  RoadwaySurface roadway_surface = RoadwaySurface::Dry;
};

inline void validate_scene(const SceneSummary& s) {
  for (const auto& [agent, count] : s.agent_counts) {
    require(!agent.empty(), "scene: agent type must be non-empty");
    require(count >= 0, "scene: agent count for '" + agent + "' must be >= 0");
  }
}

inline SceneSummary scene_from_json(const nlohmann::json& j) {
  detail::check_keys(j, "scene", {"agent_counts", "min_distance", "weather", "lighting", "roadway_surface"});
  SceneSummary s;
  try {
    if (j.contains("agent_counts")) s.agent_counts = j.at("agent_counts").get<std::map<std::string, int>>();
    if (j.contains("min_distance")) s.min_distance = parse_distance_class(j.at("min_distance").get<std::string>());
    if (j.contains("weather")) s.weather = parse_vocab<Weather>(j.at("weather").get<std::string>());
    if (j.contains("lighting")) s.lighting = parse_vocab<Lighting>(j.at("lighting").get<std::string>());
    if (j.contains("roadway_surface")) {
      s.roadway_surface = parse_vocab<RoadwaySurface>(j.at("roadway_surface").get<std::string>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("scene: ") + e.what());
  }
  validate_scene(s);
  return s;
}

/// Score bands and escalation. The numbers are tunable plumbing.
struct AlertPolicy {
  double advisory_from = 0.3;
  double warning_from = 0.5;
  double critical_from = 0.8;
  double vulnerable_min_score = 0.3;
  std::vector<std::string> vulnerable_agents{"pedestrian", "cyclist"};
  /// Emit a friendly reminder instead of suppressing at urgency none.
  bool friendly_reminders = false;
};

inline void validate_policy(const AlertPolicy& p) {
  require(0.0 <= p.advisory_from && p.advisory_from <= p.warning_from && p.warning_from <= p.critical_from &&
              p.critical_from <= 1.0,
          "alert policy: bands must satisfy 0 <= advisory <= warning <= critical <= 1");
  require(p.vulnerable_min_score >= 0.0 && p.vulnerable_min_score <= 1.0, "alert policy: vulnerable score in [0,1]");
}

inline UrgencyLevel assess_risk(double score, const SceneSummary& scene, const AlertPolicy& policy = {}) {
  require(std::isfinite(score) && score >= 0.0 && score <= 1.0, "assess_risk: score must lie in [0, 1]");
  validate_scene(scene);
  int level = 0;
  if (score >= policy.critical_from) {
    level = 3;
  } else if (score >= policy.warning_from) {
    level = 2;
  } else if (score >= policy.advisory_from) {
    level = 1;
  }
  bool vulnerable = false;
  for (const auto& a : policy.vulnerable_agents) {
    auto it = scene.agent_counts.find(a);
    vulnerable = vulnerable || (it != scene.agent_counts.end() && it->second > 0);
  }
  if (scene.min_distance == DistanceClass::imminent || (vulnerable && score >= policy.vulnerable_min_score)) {
    level = std::min(level + 1, 3);
  }
  return static_cast<UrgencyLevel>(level);
}

/// What the anticipation model said about the clip being alerted on.
struct AlertPrediction {
  std::string video_id;
  double video_score = 0.0;
  double accident_similarity = 0.0;      // mean top-k similarity, accident class
  double non_accident_similarity = 0.0;  // same, non-accident class
  int first_crossing_frame = -1;         // -1 when the decision rule never fired
  double fps = 20.0;
};

inline std::string format_number(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline std::string instruction_for(UrgencyLevel u) {
  switch (u) {
    case UrgencyLevel::none:
      return "Write a friendly reminder of at most one sentence encouraging attentive driving.";
    case UrgencyLevel::advisory:
      return "Write a calm advisory of at most two sentences naming the hazard and suggesting caution.";
    case UrgencyLevel::warning:
      return "Write a clear warning of at most two sentences. Tell the driver to reduce speed and to maintain a safe "
             "distance.";
    case UrgencyLevel::critical:
      return "Give urgent and direct feedback in at most two short sentences. Start with an action verb such as "
             "brake or stop, and tell the driver to maintain a safe distance.";
  }
  return {};
}

/// Three sections: scene facts, prediction summary, instruction. When
/// `violations` is non-empty the instruction block also lists what the
/// previous answer broke.
inline std::string build_alert_prompt(std::string_view frame_ref, const AlertPrediction& prediction,
                                      const SceneSummary& scene, UrgencyLevel urgency,
                                      const std::vector<std::string>& violations = {}) {
  std::ostringstream out;
  out << "[Scene]\n";
  out << "Frame: " << frame_ref << "\n";
  out << "Weather: " << name_of(scene.weather) << "\n";
  out << "Lighting: " << name_of(scene.lighting) << "\n";
  out << "Surface: " << name_of(scene.roadway_surface) << "\n";
  out << "Closest agent: " << name_of(scene.min_distance) << "\n";
  out << "Agents:";
  if (scene.agent_counts.empty()) out << " none";
  for (const auto& [agent, count] : scene.agent_counts) out << " " << agent << "=" << count;
  out << "\n\n[Prediction]\n";
  out << "Video: " << prediction.video_id << "\n";
  out << "Accident probability: " << format_number(prediction.video_score) << "\n";
  out << "Similarity to accident reports: " << format_number(prediction.accident_similarity) << "\n";
  out << "Similarity to safe-driving reports: " << format_number(prediction.non_accident_similarity) << "\n";
  if (prediction.first_crossing_frame >= 0) {
    out << "Risk first flagged at frame " << prediction.first_crossing_frame << "\n";
  }
  out << "\n[Instruction]\n";
  out << "Urgency: " << name_of(urgency) << "\n";
  out << instruction_for(urgency) << "\n";
  out << "Never advise running a signal or exceeding the speed limit.\n";
  if (!violations.empty()) {
    out << "Your previous answer broke these rules:";
    for (const auto& v : violations) out << " " << v;
    out << ". Rewrite it so that it follows every rule.\n";
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Completion clients.

class LanguageModelClient {
 public:
  virtual ~LanguageModelClient() = default;
  virtual std::string complete(const std::string& prompt) = 0;
};

namespace detail {

/// Value of the first "Key: value" line in a prompt.
inline std::string prompt_field(std::string_view prompt, std::string_view key) {
  std::size_t pos = 0;
  while (pos < prompt.size()) {
    const std::size_t end = std::min(prompt.find('\n', pos), prompt.size());
    const std::string_view line = prompt.substr(pos, end - pos);
    if (line.size() > key.size() + 1 && line.substr(0, key.size()) == key && line[key.size()] == ':') {
      std::string_view v = line.substr(key.size() + 1);
      while (!v.empty() && v.front() == ' ') v.remove_prefix(1);
      return std::string(v);
    }
    pos = end + 1;
  }
  return {};
}

}  // namespace detail

/// Deterministic stand-in. Alert prompts get an urgency-keyed canned line
/// (the variant picked by a hash of prompt and seed); narrative prompts get a
/// template filled from the prompt's fields.
class MockLanguageModel final : public LanguageModelClient {
 public:
  explicit MockLanguageModel(std::uint64_t seed = 0) : seed_(seed) {}

  std::string complete(const std::string& prompt) override {
    if (detail::prompt_field(prompt, "Task") == "accident narrative") return narrative(prompt);
    const std::string urgency = detail::prompt_field(prompt, "Urgency");
    const std::uint64_t pick = fnv1a64(prompt) ^ seed_;
    if (urgency == "critical") {
      return choose(pick, {"Potential accident detected. Brake now and be prepared to stop; maintain a safe distance.",
                           "Stop now: collision risk ahead. Brake firmly and keep a safe distance."});
    }
    if (urgency == "warning") {
      return choose(pick, {"Warning: hazard ahead. Slow down and maintain a safe distance from the vehicle in front.",
                           "Potential hazard ahead. Reduce speed and keep a safe distance."});
    }
    if (urgency == "advisory") {
      return choose(pick, {"Caution: traffic ahead may change suddenly. Stay alert.",
                           "Heads up: conditions ahead need attention. Be ready to slow down."});
    }
    return choose(pick, {"Friendly reminder: stay attentive and enjoy the drive.",
                         "All clear for now. Keep your eyes on the road."});
  }

 private:
  static std::string choose(std::uint64_t pick, std::initializer_list<const char*> options) {
    return *(options.begin() + static_cast<std::ptrdiff_t>(pick % options.size()));
  }

  static std::string narrative(const std::string& prompt) {
    const std::string weather = detail::prompt_field(prompt, "Weather");
    const std::string location = detail::prompt_field(prompt, "Location");
    const std::string collision = detail::prompt_field(prompt, "Collision");
    const std::string participants = detail::prompt_field(prompt, "Participants");
    std::string text = "Under " + detail::lower(weather.empty() ? "unknown" : weather) + " conditions";
    if (!location.empty()) text += " at the " + location;
    text += ", a " + detail::lower(collision.empty() ? "traffic" : collision) + " collision occurred";
    if (!participants.empty()) text += " involving " + participants;
    text += ". The anticipation system flagged the risk before impact.";
    return text;
  }

  std::uint64_t seed_;
};

/// Returns the given responses in order, cycling. For tests and fuzzing.
class ScriptedLanguageModel final : public LanguageModelClient {
 public:
  explicit ScriptedLanguageModel(std::vector<std::string> responses) : responses_(std::move(responses)) {
    require(!responses_.empty(), "scripted client needs at least one response");
  }
  std::string complete(const std::string& prompt) override {
    prompts_.push_back(prompt);
    return responses_[next_++ % responses_.size()];
  }
  const std::vector<std::string>& prompts() const { return prompts_; }

 private:
  std::vector<std::string> responses_;
  std::vector<std::string> prompts_;
  std::size_t next_ = 0;
};

// ---------------------------------------------------------------------------
// Legality.

struct LegalityRule {
  std::string id;
  std::string description;
  /// Returns true when the text violates the rule at the given urgency.
  std::function<bool(const std::vector<std::string>& tokens, UrgencyLevel urgency)> violated;
};

struct LegalityVerdict {
  bool pass = true;
  std::vector<std::string> violated;
};

/// Phrase lists behind the default rules. This is a stub of a traffic-law
/// database: extend the lists or append rules to the registry.
struct LegalityKeywords {
  std::vector<std::string> run_signal{"run the red",       "run the light",      "run a red",
                                      "running the red",   "ignore the signal",  "ignore the light",
                                      "accelerate through", "speed through",     "beat the light",
                                      "go through the red", "ignore the stop sign", "run the stop sign"};
  std::vector<std::string> excess_speed{"exceed the speed limit", "above the speed limit", "over the speed limit",
                                        "drive faster",           "go faster",             "speed up",
                                        "floor it",               "full throttle",         "ignore the speed limit"};
  std::vector<std::string> distance{"maintain a safe distance", "keep a safe distance", "safe following distance"};
  std::vector<std::string> action_verbs{"brake", "stop", "slow", "yield", "steer", "pull over", "reduce speed"};
};

inline std::vector<LegalityRule> default_legality_rules(const LegalityKeywords& kw = {}) {
  std::vector<LegalityRule> rules;
  rules.push_back({"empty-alert", "alert text must not be empty",
                   [](const std::vector<std::string>& t, UrgencyLevel) { return t.empty(); }});
  rules.push_back({"no-run-signal", "must not advise running a signal",
                   [p = kw.run_signal](const std::vector<std::string>& t, UrgencyLevel) {
                     return first_phrase(t, p).has_value();
                   }});
  rules.push_back({"no-excess-speed", "must not advise speeding",
                   [p = kw.excess_speed](const std::vector<std::string>& t, UrgencyLevel) {
                     return first_phrase(t, p).has_value();
                   }});
  rules.push_back({"distance-keeping", "warning and critical alerts must ask for a safe distance",
                   [p = kw.distance](const std::vector<std::string>& t, UrgencyLevel u) {
                     return u >= UrgencyLevel::warning && !first_phrase(t, p).has_value();
                   }});
  rules.push_back({"critical-action", "critical alerts must contain an explicit action verb",
                   [p = kw.action_verbs](const std::vector<std::string>& t, UrgencyLevel u) {
                     return u == UrgencyLevel::critical && !first_phrase(t, p).has_value();
                   }});
  return rules;
}

inline const std::vector<LegalityRule>& legality_rules() {
  static const std::vector<LegalityRule> rules = default_legality_rules();
  return rules;
}

inline LegalityVerdict verify_legality(std::string_view text, UrgencyLevel urgency,
                                       const std::vector<LegalityRule>& rules = legality_rules()) {
  const auto tokens = word_tokens(text);
  LegalityVerdict v;
  for (const auto& r : rules) {
    if (r.violated(tokens, urgency)) v.violated.push_back(r.id);
  }
  v.pass = v.violated.empty();
  return v;
}

// ---------------------------------------------------------------------------
// Alert generation.

enum class AlertSource { suppressed, model, retry, fallback };

inline std::string_view name_of(AlertSource s) {
  switch (s) {
    case AlertSource::suppressed: return "suppressed";
    case AlertSource::model: return "model";
    case AlertSource::retry: return "retry";
    case AlertSource::fallback: return "fallback";
  }
  return "model";
}

struct AlertMessage {
  UrgencyLevel urgency = UrgencyLevel::none;
  std::string text;    // empty when suppressed
  std::string status;  // one-line status, always set
  LegalityVerdict legality;
  AlertSource source = AlertSource::model;
  std::vector<std::string> diagnostics;
};

/// Fixed texts used when the client cannot produce a legal alert.
inline std::string fallback_alert(UrgencyLevel u) {
  switch (u) {
    case UrgencyLevel::none: return "Stay attentive to the road.";
    case UrgencyLevel::advisory: return "Caution ahead. Stay alert.";
    case UrgencyLevel::warning: return "Hazard ahead. Slow down and maintain a safe distance.";
    case UrgencyLevel::critical: return "Brake now. Maintain a safe distance.";
  }
  return {};
}

inline AlertMessage generate_alert(LanguageModelClient& client, std::string_view frame_ref,
                                   const AlertPrediction& prediction, const SceneSummary& scene,
                                   const AlertPolicy& policy = {},
                                   const std::vector<LegalityRule>& rules = legality_rules()) {
  validate_policy(policy);
  AlertMessage msg;
  msg.urgency = assess_risk(prediction.video_score, scene, policy);
  msg.status = "status: urgency " + std::string(name_of(msg.urgency)) + ", score " +
               format_number(prediction.video_score);
  if (msg.urgency == UrgencyLevel::none && !policy.friendly_reminders) {
    msg.source = AlertSource::suppressed;
    return msg;
  }

  std::vector<std::string> violations;
  for (int attempt = 0; attempt < 2; ++attempt) {
    const std::string prompt = build_alert_prompt(frame_ref, prediction, scene, msg.urgency, violations);
    std::string text;
    try {
      text = client.complete(prompt);
    } catch (const std::exception& e) {
      msg.diagnostics.push_back(std::string("client failure: ") + e.what());
      break;
    }
    const LegalityVerdict v = verify_legality(text, msg.urgency, rules);
    if (v.pass) {
      msg.text = std::move(text);
      msg.legality = v;
      msg.source = attempt == 0 ? AlertSource::model : AlertSource::retry;
      return msg;
    }
    std::string joined;
    for (const auto& id : v.violated) joined += (joined.empty() ? "" : ",") + id;
    msg.diagnostics.push_back("attempt " + std::to_string(attempt + 1) + " failed legality: " + joined);
    violations = v.violated;
  }

  msg.source = AlertSource::fallback;
  msg.legality = verify_legality(fallback_alert(msg.urgency), msg.urgency, rules);
  if (msg.legality.pass) {
    msg.text = fallback_alert(msg.urgency);
  } else {
    // A custom registry rejected even the fallback: emit nothing.
    msg.diagnostics.push_back("fallback text rejected by the rule registry; alert withheld");
    msg.text.clear();
    msg.legality = {true, {}};
    msg.source = AlertSource::suppressed;
  }
  return msg;
}

// ---------------------------------------------------------------------------
// Alert log: JSON lines (timestamp, video, urgency, text, legality, source).

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

class AlertLog {
 public:
  explicit AlertLog(std::ostream& sink, std::function<std::string()> clock = utc_timestamp)
      : sink_(sink), clock_(std::move(clock)) {}

  void record(const std::string& video_id, const AlertMessage& m) {
    const nlohmann::json line = {{"timestamp", clock_()},
                                 {"video", video_id},
                                 {"urgency", name_of(m.urgency)},
                                 {"text", m.text},
                                 {"status", m.status},
                                 {"legality", m.legality.pass ? "pass" : "fail"},
                                 {"violated", m.legality.violated},
                                 {"source", name_of(m.source)},
                                 {"diagnostics", m.diagnostics}};
    std::lock_guard<std::mutex> lock(mu_);
    sink_ << line.dump() << '\n';
  }

 private:
  std::ostream& sink_;
  std::function<std::string()> clock_;
  std::mutex mu_;
};

// ---------------------------------------------------------------------------
// Archiving.

/// Facts recorded around an incident, enough to fill a report.
struct EnvironmentLog {
  std::string id;
  PreAccident pre;
  std::vector<Participant> participants;
  std::string behaviors;
  PostAccident post;
};

inline EnvironmentLog environment_log_from_json(const nlohmann::json& j) {
  detail::check_keys(j, "environment log", {"id", "pre", "during", "post"});
  // Reuse the report codec: an environment log is a report without a narrative.
  nlohmann::json as_report = j;
  as_report["is_accident"] = true;
  as_report["narrative"] = "placeholder";
  const AccidentReport r = report_from_json(as_report);
  return EnvironmentLog{r.id, r.pre, r.during.participants, r.during.behaviors, *r.post};
}

inline std::string build_narrative_prompt(const EnvironmentLog& env, const AlertPrediction& prediction) {
  std::ostringstream out;
  out << "Task: accident narrative\n";
  out << "Weather: " << name_of(env.pre.weather) << "\n";
  out << "Lighting: " << name_of(env.pre.lighting) << "\n";
  out << "Surface: " << name_of(env.pre.roadway_surface) << "\n";
  out << "Location: " << env.pre.location << "\n";
  out << "Time: " << env.pre.time << "\n";
  out << "Collision: " << name_of(env.post.collision_type) << "\n";
  out << "Severity: " << name_of(env.post.severity) << "\n";
  std::string parts;
  for (const auto& p : env.participants) parts += (parts.empty() ? "a " : " and a ") + p.agent_type;
  out << "Participants: " << parts << "\n";
  out << "Accident probability: " << format_number(prediction.video_score) << "\n";
  out << "Write a factual two-sentence account of the incident without speculation.\n";
  return out.str();
}

struct ArchiveResult {
  AccidentReport report;
  std::vector<ValidationFinding> findings;
  bool archived = false;
  std::filesystem::path path;  // archive or quarantine file, empty if not written
};

/// Builds a report for a detected incident and persists it under
/// `archive_dir` when it validates; otherwise writes it under
/// `quarantine_dir` (if given). The prediction must have crossed the decision
/// rule (score >= decision_probability).
inline ArchiveResult archive_accident(const EnvironmentLog& env, const AlertPrediction& prediction,
                                      LanguageModelClient& client, const std::filesystem::path& archive_dir = {},
                                      const std::filesystem::path& quarantine_dir = {},
                                      double decision_probability = 0.5) {
  require(prediction.video_score >= decision_probability,
          "archive: prediction for '" + prediction.video_id + "' did not cross the decision rule");
  require(!env.id.empty(), "archive: environment log needs an id");

  ArchiveResult out;
  AccidentReport& r = out.report;
  r.id = "archive-" + env.id;
  r.is_accident = true;
  r.pre = env.pre;
  r.during.participants = env.participants;
  r.during.behaviors = env.behaviors;
  r.post = env.post;
  r.narrative = client.complete(build_narrative_prompt(env, prediction));

  out.findings = validate_report(r);
  bool ok = !has_errors(out.findings);
  if (ok) {
    try {
      ok = parse_report(serialize_report(r)) == r;
    } catch (const ReportError& e) {
      out.findings.push_back({"schema", FindingSeverity::error, e.what()});
      ok = false;
    }
  }
  out.archived = ok;

  static std::mutex write_mu;
  const std::filesystem::path& dir = ok ? archive_dir : quarantine_dir;
  if (!dir.empty()) {
    std::lock_guard<std::mutex> lock(write_mu);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw RuntimeFailure("archive: cannot create " + dir.string() + ": " + ec.message());
    out.path = dir / (r.id + ".json");
    if (ok) {
      save_report(r, out.path);
    } else {
      nlohmann::json q = to_json(r);
      nlohmann::json f = nlohmann::json::array();
      for (const auto& x : out.findings) {
        f.push_back({{"rule", x.rule_id}, {"severity", name_of(x.severity)}, {"message", x.message}});
      }
      std::ofstream file(out.path, std::ios::trunc);
      if (!file) throw RuntimeFailure("archive: cannot write " + out.path.string());
      file << nlohmann::json{{"report", q}, {"findings", f}}.dump(2) << '\n';
    }
  }
  return out;
}

}  // namespace aant

#endif  // AANT_ALERT_FEEDBACK_HPP_
