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

#ifndef AANT_REPORT_CORPUS_HPP_
#define AANT_REPORT_CORPUS_HPP_

// Structured accident / non-accident reports.
//
// A report records pre-accident environment, the participants and their
// behaviour, and (accidents only) the outcome. Every categorical field is a
// closed vocabulary; anything outside it is rejected at parse time.
//
// JSON layout:
//
//   {
//     "id": "rpt-0001",
//     "is_accident": true,
//     "pre":    {"weather": "Clear", "lighting": "Daylight",
//                "roadway_surface": "Dry", "road_conditions": "Usual",
//                "location": "...", "time": "..."},
//     "during": {"participants": [{"agent_type": "car",
//                                  "movement": "Proceeding Straight"}],
//                "behaviors": "..."},
//     "post":   {"collision_type": "Rear End", "severity": "Minor",
//                "damage_area": "Rear Bumper"},
//     "narrative": "..."
//   }
//
// "post" must be present for accidents and absent for non-accidents. Unknown
// keys are rejected.

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "aant/error.hpp"
#include "aant/rng.hpp"

namespace aant {

enum class Weather { Clear, Cloudy, Raining, FogVisibility };
enum class Lighting { Daylight, DuskDawn, DarkStreetLights, DarkNoStreetLights };
enum class RoadwaySurface { Dry, Wet };
enum class RoadCondition {
  Holes,
  LooseMaterial,
  Obstruction,
  Construction,
  ReducedWidth,
  OtherUnusual,
  Usual
};
enum class Movement {
  Stopped,
  ProceedingStraight,
  MakingRightTurn,
  MakingLeftTurn,
  MakingUTurn,
  Backing,
  SlowingStopping,
  PassingOtherVehicle,
  ChangingLanes,
  ParkingManeuver,
  EnteringTraffic,
  DrivingIntoOpposingLane,
  Parked,
  Merging,
  Other
};
enum class CollisionType { HeadOn, SideSwipe, RearEnd, Broadside, HitObject, VehiclePedestrian, Other };
enum class Severity { None, Minor, Moderate, Major };
enum class DamageArea {
  FrontBumper,
  FrontDriverSide,
  FrontPassengerSide,
  LeftFrontCorner,
  LeftRear,
  LeftRearPassenger,
  RearBumper,
  RightFrontCorner,
  RightRear,
  RightRearPassenger
};

template <typename E>
struct Vocabulary;

#define AANT_VOCABULARY(Enum, FieldName, ...)                                      \
  template <>                                                                      \
  struct Vocabulary<Enum> {                                                        \
    static constexpr std::string_view field = FieldName;                           \
    static constexpr auto names = std::to_array<std::string_view>({__VA_ARGS__}); \
  };

// Spellings follow the source distribution table, including "Parking Manuever".
AANT_VOCABULARY(Weather, "weather", "Clear", "Cloudy", "Raining", "Fog/Visibility")
AANT_VOCABULARY(Lighting, "lighting", "Daylight", "Dusk-Dawn", "Dark-Street Lights", "Dark-No Street Lights")
AANT_VOCABULARY(RoadwaySurface, "roadway_surface", "Dry", "Wet")
AANT_VOCABULARY(RoadCondition, "road_conditions", "Holes", "Loose Material on Roadway", "Obstruction",
                "Construction", "Reduced Roadway Width", "Other Unusual", "Usual")
AANT_VOCABULARY(Movement, "movement", "Stopped", "Proceeding Straight", "Making Right Turn", "Making Left Turn",
                "Making U Turn", "Backing", "Slowing/Stopping", "Passing Other Vehicle", "Changing Lanes",
                "Parking Manuever", "Entering Traffic", "Driving into Opposing Lane", "Parked", "Merging", "Other")
AANT_VOCABULARY(CollisionType, "collision_type", "Head-On", "Side Swipe", "Rear End", "Broadside", "Hit Object",
                "Vehicle/Pedestrian", "Other")
AANT_VOCABULARY(Severity, "severity", "None", "Minor", "Moderate", "Major")
AANT_VOCABULARY(DamageArea, "damage_area", "Front Bumper", "Front Driver Side", "Front Passenger Side",
                "Left Front Corner", "Left Rear", "Left Rear Passenger", "Rear Bumper", "Right Front Corner",
                "Right Rear", "Right Rear Passenger")

#undef AANT_VOCABULARY

/// Report decoding failure, tagged by cause.
class ReportError : public ValidationError {
 public:
  enum class Kind { malformed_json, unknown_vocabulary, missing_field, schema };
  ReportError(Kind kind, const std::string& what) : ValidationError(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

template <typename E>
std::string_view name_of(E value) {
  return Vocabulary<E>::names.at(static_cast<std::size_t>(value));
}

template <typename E>
E parse_vocab(std::string_view text) {
  const auto& names = Vocabulary<E>::names;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == text) return static_cast<E>(i);
  }
  throw ReportError(ReportError::Kind::unknown_vocabulary,
                    "unknown " + std::string(Vocabulary<E>::field) + " value '" + std::string(text) + "'");
}

template <typename E>
constexpr std::size_t vocab_size() {
  return Vocabulary<E>::names.size();
}

struct PreAccident {
  Weather weather = Weather::Clear;
  Lighting lighting = Lighting::Daylight;
  RoadwaySurface roadway_surface = RoadwaySurface::Dry;
  RoadCondition road_conditions = RoadCondition::Usual;
  std::string location;
  std::string time;
  bool operator==(const PreAccident&) const = default;
};

struct Participant {
  std::string agent_type;
  Movement movement = Movement::ProceedingStraight;
  bool operator==(const Participant&) const = default;
};

struct DuringAccident {
  std::vector<Participant> participants;
  std::string behaviors;
  bool operator==(const DuringAccident&) const = default;
};

struct PostAccident {
  CollisionType collision_type = CollisionType::Other;
  Severity severity = Severity::Minor;
  DamageArea damage_area = DamageArea::FrontBumper;
  bool operator==(const PostAccident&) const = default;
};

struct AccidentReport {
  std::string id;
  bool is_accident = false;
  PreAccident pre;
  DuringAccident during;
  std::optional<PostAccident> post;
  std::string narrative;
  bool operator==(const AccidentReport&) const = default;
};

// ---------------------------------------------------------------------------
// JSON codec.

inline nlohmann::json to_json(const AccidentReport& r) {
  nlohmann::json participants = nlohmann::json::array();
  for (const auto& p : r.during.participants) {
    participants.push_back({{"agent_type", p.agent_type}, {"movement", name_of(p.movement)}});
  }
  nlohmann::json j = {
      {"id", r.id},
      {"is_accident", r.is_accident},
      {"pre",
       {{"weather", name_of(r.pre.weather)},
        {"lighting", name_of(r.pre.lighting)},
        {"roadway_surface", name_of(r.pre.roadway_surface)},
        {"road_conditions", name_of(r.pre.road_conditions)},
        {"location", r.pre.location},
        {"time", r.pre.time}}},
      {"during", {{"participants", participants}, {"behaviors", r.during.behaviors}}},
      {"narrative", r.narrative},
  };
  if (r.post) {
    j["post"] = {{"collision_type", name_of(r.post->collision_type)},
                 {"severity", name_of(r.post->severity)},
                 {"damage_area", name_of(r.post->damage_area)}};
  }
  return j;
}

inline std::string serialize_report(const AccidentReport& r) { return to_json(r).dump(2) + "\n"; }

namespace detail {

inline void check_keys(const nlohmann::json& obj, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) {
    throw ReportError(ReportError::Kind::schema, std::string(where) + " must be an object");
  }
  for (const auto& [key, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ReportError(ReportError::Kind::schema, "unexpected key '" + key + "' in " + std::string(where));
    }
  }
}

inline const nlohmann::json& field(const nlohmann::json& obj, const std::string& key, std::string_view where) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw ReportError(ReportError::Kind::missing_field, "missing field '" + key + "' in " + std::string(where));
  }
  return *it;
}

inline std::string string_field(const nlohmann::json& obj, const std::string& key, std::string_view where) {
  const auto& v = field(obj, key, where);
  if (!v.is_string()) throw ReportError(ReportError::Kind::schema, std::string(where) + "." + key + " must be a string");
  return v.get<std::string>();
}

template <typename E>
E vocab_field(const nlohmann::json& obj, std::string_view where) {
  return parse_vocab<E>(string_field(obj, std::string(Vocabulary<E>::field), where));
}

}  // namespace detail

inline AccidentReport report_from_json(const nlohmann::json& j) {
  using detail::check_keys;
  using detail::field;
  using detail::string_field;
  check_keys(j, "report", {"id", "is_accident", "pre", "during", "post", "narrative"});

  AccidentReport r;
  r.id = string_field(j, "id", "report");
  const auto& acc = field(j, "is_accident", "report");
  if (!acc.is_boolean()) throw ReportError(ReportError::Kind::schema, "report.is_accident must be a boolean");
  r.is_accident = acc.get<bool>();

  const auto& pre = field(j, "pre", "report");
  check_keys(pre, "pre", {"weather", "lighting", "roadway_surface", "road_conditions", "location", "time"});
  r.pre.weather = detail::vocab_field<Weather>(pre, "pre");
  r.pre.lighting = detail::vocab_field<Lighting>(pre, "pre");
  r.pre.roadway_surface = detail::vocab_field<RoadwaySurface>(pre, "pre");
  r.pre.road_conditions = detail::vocab_field<RoadCondition>(pre, "pre");
  r.pre.location = string_field(pre, "location", "pre");
  r.pre.time = string_field(pre, "time", "pre");

  const auto& during = field(j, "during", "report");
  check_keys(during, "during", {"participants", "behaviors"});
  const auto& parts = field(during, "participants", "during");
  if (!parts.is_array()) throw ReportError(ReportError::Kind::schema, "during.participants must be an array");
  for (const auto& p : parts) {
    check_keys(p, "participant", {"agent_type", "movement"});
    r.during.participants.push_back(
        {string_field(p, "agent_type", "participant"), detail::vocab_field<Movement>(p, "participant")});
  }
  r.during.behaviors = string_field(during, "behaviors", "during");

  if (j.contains("post") && !j.at("post").is_null()) {
    if (!r.is_accident) {
      throw ReportError(ReportError::Kind::schema, "non-accident report '" + r.id + "' must not carry post-accident fields");
    }
    const auto& post = j.at("post");
    check_keys(post, "post", {"collision_type", "severity", "damage_area"});
    r.post = PostAccident{detail::vocab_field<CollisionType>(post, "post"), detail::vocab_field<Severity>(post, "post"),
                          detail::vocab_field<DamageArea>(post, "post")};
  } else if (r.is_accident) {
    throw ReportError(ReportError::Kind::missing_field, "accident report '" + r.id + "' is missing 'post'");
  }

  r.narrative = string_field(j, "narrative", "report");
  if (r.narrative.empty()) throw ReportError(ReportError::Kind::schema, "report '" + r.id + "' has an empty narrative");
  return r;
}

inline AccidentReport parse_report(std::string_view document) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(document);
  } catch (const nlohmann::json::parse_error& e) {
    throw ReportError(ReportError::Kind::malformed_json, std::string("malformed report JSON: ") + e.what());
  }
  return report_from_json(j);
}

/// Loads every *.json file of a directory, in filename order.
inline std::vector<AccidentReport> load_report_dir(const std::filesystem::path& dir) {
  require(std::filesystem::is_directory(dir), "not a report directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<AccidentReport> out;
  for (const auto& f : files) {
    std::ifstream in(f);
    std::stringstream buf;
    buf << in.rdbuf();
    try {
      out.push_back(parse_report(buf.str()));
    } catch (const ReportError& e) {
      throw ReportError(e.kind(), f.filename().string() + ": " + e.what());
    }
  }
  return out;
}

inline void save_report(const AccidentReport& r, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw RuntimeFailure("cannot write report " + file.string());
  out << serialize_report(r);
  if (!out) throw RuntimeFailure("failed writing report " + file.string());
}

// ---------------------------------------------------------------------------
// Text helpers shared by validation and deduplication.

/// Lowercased alphanumeric word tokens; every other byte separates words.
inline std::vector<std::string> word_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c) || c >= 0x80) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

/// True if the token sequence contains the phrase's tokens contiguously.
inline bool contains_phrase(const std::vector<std::string>& tokens, std::string_view phrase) {
  const auto needle = word_tokens(phrase);
  if (needle.empty() || needle.size() > tokens.size()) return false;
  return std::search(tokens.begin(), tokens.end(), needle.begin(), needle.end()) != tokens.end();
}

inline std::optional<std::string> first_phrase(const std::vector<std::string>& tokens,
                                               const std::vector<std::string>& phrases) {
  for (const auto& p : phrases) {
    if (contains_phrase(tokens, p)) return p;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Consistency rules.

enum class FindingSeverity { error, warning };

inline std::string_view name_of(FindingSeverity s) { return s == FindingSeverity::error ? "error" : "warning"; }

struct ValidationFinding {
  std::string rule_id;
  FindingSeverity severity = FindingSeverity::error;
  std::string message;
  bool operator==(const ValidationFinding&) const = default;
};

/// Keyword lists behind the built-in rules. These are editable data, not a
/// reference standard.
struct RuleKeywords {
  std::vector<std::string> high_speed{"high speed", "speeding", "excessive speed", "full speed", "top speed",
                                      "sped",       "racing",   "raced",           "fast",       "at speed"};
  std::vector<std::string> risk{"collision", "collided",  "collide",   "crash",      "crashed",
                                "failed to yield",        "hit",       "struck",     "rear end",
                                "impact",    "wreck",     "ran the red", "lost control", "swerved",
                                "sideswiped", "near miss", "skidded"};
};

inline const RuleKeywords& default_keywords() {
  static const RuleKeywords k;
  return k;
}

struct ValidationRule {
  std::string id;
  FindingSeverity severity = FindingSeverity::error;
  std::string description;
  /// Returns a message when the rule fires.
  std::function<std::optional<std::string>(const AccidentReport&)> check;
};

inline std::vector<ValidationRule> make_rules(const RuleKeywords& kw = default_keywords()) {
  std::vector<ValidationRule> rules;
  rules.push_back({"R1", FindingSeverity::error, "high-speed driving described in fog or rain",
                   [hs = kw.high_speed](const AccidentReport& r) -> std::optional<std::string> {
                     if (r.pre.weather != Weather::FogVisibility && r.pre.weather != Weather::Raining) return std::nullopt;
                     const auto tokens = word_tokens(r.narrative + " " + r.during.behaviors);
                     if (auto hit = first_phrase(tokens, hs)) {
                       return "narrative mentions '" + *hit + "' under " + std::string(name_of(r.pre.weather)) + " weather";
                     }
                     return std::nullopt;
                   }});
  rules.push_back({"R2", FindingSeverity::error, "non-accident report describing risky behaviour or a crash",
                   [risk = kw.risk](const AccidentReport& r) -> std::optional<std::string> {
                     if (r.is_accident) return std::nullopt;
                     const auto tokens = word_tokens(r.narrative + " " + r.during.behaviors);
                     if (auto hit = first_phrase(tokens, risk)) {
                       return "non-accident narrative contains risk phrase '" + *hit + "'";
                     }
                     return std::nullopt;
                   }});
  rules.push_back({"R3", FindingSeverity::warning, "no participants recorded",
                   [](const AccidentReport& r) -> std::optional<std::string> {
                     if (r.during.participants.empty()) return std::string("report lists no participants");
                     return std::nullopt;
                   }});
  return rules;
}

inline const std::vector<ValidationRule>& default_rules() {
  static const std::vector<ValidationRule> rules = make_rules();
  return rules;
}

/// Findings sorted by rule id, so the result does not depend on registry order.
inline std::vector<ValidationFinding> validate_report(const AccidentReport& report,
                                                      const std::vector<ValidationRule>& rules = default_rules()) {
  std::vector<ValidationFinding> out;
  for (const auto& rule : rules) {
    if (auto msg = rule.check(report)) out.push_back({rule.id, rule.severity, *msg});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return std::tie(a.rule_id, a.message) < std::tie(b.rule_id, b.message);
  });
  return out;
}

inline bool has_errors(const std::vector<ValidationFinding>& findings) {
  return std::any_of(findings.begin(), findings.end(),
                     [](const auto& f) { return f.severity == FindingSeverity::error; });
}

// ---------------------------------------------------------------------------
// Duplication.

/// Word 3-gram set; texts shorter than three words contribute one gram made
/// of all their words.
inline std::set<std::string> word_trigrams(std::string_view text) {
  const auto tokens = word_tokens(text);
  std::set<std::string> grams;
  if (tokens.empty()) return grams;
  if (tokens.size() < 3) {
    std::string g;
    for (const auto& t : tokens) g += t + ' ';
    grams.insert(g);
    return grams;
  }
  for (std::size_t i = 0; i + 3 <= tokens.size(); ++i) grams.insert(tokens[i] + ' ' + tokens[i + 1] + ' ' + tokens[i + 2]);
  return grams;
}

inline double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t inter = 0;
  for (const auto& g : a) inter += b.count(g);
  const std::size_t uni = a.size() + b.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

inline double narrative_similarity(std::string_view a, std::string_view b) {
  return jaccard(word_trigrams(a), word_trigrams(b));
}

struct DuplicatePair {
  std::string first;
  std::string second;
  double similarity = 0.0;
};

inline constexpr double kDefaultDuplicateThreshold = 0.6;

/// Pairs (i < j, input order) whose narrative 3-gram Jaccard reaches the threshold.
inline std::vector<DuplicatePair> deduplicate(const std::vector<AccidentReport>& reports,
                                              double overlap_threshold = kDefaultDuplicateThreshold) {
  require(overlap_threshold > 0.0 && overlap_threshold <= 1.0, "deduplicate: threshold must lie in (0, 1]");
  std::vector<std::set<std::string>> grams;
  grams.reserve(reports.size());
  for (const auto& r : reports) grams.push_back(word_trigrams(r.narrative));
  std::vector<DuplicatePair> out;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    for (std::size_t j = i + 1; j < reports.size(); ++j) {
      const double s = jaccard(grams[i], grams[j]);
      if (s >= overlap_threshold) out.push_back({reports[i].id, reports[j].id, s});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Corpus statistics.

struct CorpusStats {
  using Table = std::map<std::string, std::map<std::string, int>>;
  int reports = 0;
  int accidents = 0;
  /// factor -> value -> count, every vocabulary value present.
  Table counts;
  /// factor -> value -> severity -> count, over accident reports.
  std::map<std::string, Table> by_severity;

  int count(const std::string& factor, const std::string& value) const { return counts.at(factor).at(value); }
};

namespace detail {

template <typename E>
void seed_factor(CorpusStats& s) {
  const std::string f(Vocabulary<E>::field);
  for (auto name : Vocabulary<E>::names) {
    s.counts[f][std::string(name)] = 0;
    for (auto sev : Vocabulary<Severity>::names) s.by_severity[f][std::string(name)][std::string(sev)] = 0;
  }
}

template <typename E>
void tally(CorpusStats& s, E value, const std::optional<PostAccident>& post) {
  const std::string f(Vocabulary<E>::field);
  const std::string v(name_of(value));
  ++s.counts[f][v];
  if (post) ++s.by_severity[f][v][std::string(name_of(post->severity))];
}

}  // namespace detail

inline CorpusStats corpus_stats(const std::vector<AccidentReport>& reports) {
  CorpusStats s;
  detail::seed_factor<Weather>(s);
  detail::seed_factor<Lighting>(s);
  detail::seed_factor<RoadwaySurface>(s);
  detail::seed_factor<RoadCondition>(s);
  detail::seed_factor<Movement>(s);
  detail::seed_factor<CollisionType>(s);
  detail::seed_factor<Severity>(s);
  detail::seed_factor<DamageArea>(s);
  for (const auto& r : reports) {
    ++s.reports;
    if (r.is_accident) ++s.accidents;
    detail::tally(s, r.pre.weather, r.post);
    detail::tally(s, r.pre.lighting, r.post);
    detail::tally(s, r.pre.roadway_surface, r.post);
    detail::tally(s, r.pre.road_conditions, r.post);
    for (const auto& p : r.during.participants) detail::tally(s, p.movement, r.post);
    if (r.post) {
      detail::tally(s, r.post->collision_type, r.post);
      detail::tally(s, r.post->severity, r.post);
      detail::tally(s, r.post->damage_area, r.post);
    }
  }
  return s;
}

inline nlohmann::json to_json(const CorpusStats& s) {
  return {{"reports", s.reports}, {"accidents", s.accidents}, {"counts", s.counts}, {"by_severity", s.by_severity}};
}

// ---------------------------------------------------------------------------
// Canonical text rendering (input to the text encoder).

namespace detail {
inline std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}
}  // namespace detail

/// One "Key: sentence" line per factor. Environment and participant lines
/// depend only on pre/during facts; the Behavior, Outcome and Account lines
/// carry what distinguishes a crash from its safe counterpart.
inline std::string render_report_text(const AccidentReport& r) {
  std::ostringstream out;
  out << "Weather: the weather was " << detail::lower(name_of(r.pre.weather)) << ".\n";
  out << "Lighting: lighting was " << detail::lower(name_of(r.pre.lighting)) << ".\n";
  out << "Surface: the roadway surface was " << detail::lower(name_of(r.pre.roadway_surface)) << ".\n";
  out << "Road: road conditions were " << detail::lower(name_of(r.pre.road_conditions)) << ".\n";
  if (!r.pre.location.empty()) out << "Location: " << r.pre.location << ".\n";
  if (!r.pre.time.empty()) out << "Time: " << r.pre.time << ".\n";
  for (std::size_t i = 0; i < r.during.participants.size(); ++i) {
    const auto& p = r.during.participants[i];
    out << "Participant: participant " << (i + 1) << " was a " << p.agent_type << ", "
        << detail::lower(name_of(p.movement)) << ".\n";
  }
  if (!r.during.behaviors.empty()) out << "Behavior: " << r.during.behaviors << "\n";
  if (r.post) {
    out << "Outcome: " << detail::lower(name_of(r.post->collision_type)) << " collision of "
        << detail::lower(name_of(r.post->severity)) << " severity, damage to the "
        << detail::lower(name_of(r.post->damage_area)) << ".\n";
  } else {
    out << "Outcome: no collision occurred.\n";
  }
  out << "Account: " << r.narrative << "\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// Built-in corpora.

struct CollisionRow {
  CollisionType type;
  std::array<int, 4> by_severity;  // None, Minor, Moderate, Major
};

/// Collision-type rows of the reference damage distribution.
inline const std::array<CollisionRow, 7>& reference_collision_rows() {
  static const std::array<CollisionRow, 7> rows{{
      {CollisionType::HeadOn, {4, 25, 8, 1}},
      {CollisionType::SideSwipe, {5, 62, 14, 1}},
      {CollisionType::RearEnd, {15, 78, 12, 3}},
      {CollisionType::Broadside, {2, 12, 5, 3}},
      {CollisionType::HitObject, {0, 30, 7, 2}},
      {CollisionType::VehiclePedestrian, {1, 0, 0, 0}},
      {CollisionType::Other, {4, 19, 2, 0}},
  }};
  return rows;
}

/// One accident report per tallied incident of the collision rows.
inline std::vector<AccidentReport> collision_reference_corpus() {
  std::vector<AccidentReport> out;
  int serial = 0;
  for (const auto& row : reference_collision_rows()) {
    for (std::size_t sev = 0; sev < row.by_severity.size(); ++sev) {
      for (int k = 0; k < row.by_severity[sev]; ++k) {
        AccidentReport r;
        r.id = "ref-" + std::to_string(serial++);
        r.is_accident = true;
        r.during.participants = {{"car", Movement::ProceedingStraight}, {"car", Movement::Stopped}};
        r.during.behaviors = "One vehicle did not keep adequate distance.";
        r.post = PostAccident{row.type, static_cast<Severity>(sev), DamageArea::FrontBumper};
        r.narrative = "Reference incident of type " + std::string(name_of(row.type)) + ".";
        out.push_back(std::move(r));
      }
    }
  }
  return out;
}

/// Paired crash / safe-driving reports over the same environments. Narratives
/// are templated so that the built-in rules accept every report.
inline std::vector<AccidentReport> sample_report_corpus(int pairs, std::uint64_t seed) {
  require(pairs >= 1, "sample corpus: pairs must be >= 1");
  SplitMix64 rng(derive_seed(seed, "report-corpus"));
  const std::array<std::string_view, 5> agents{"car", "truck", "motorcycle", "bus", "van"};
  const std::array<std::string_view, 4> locations{"urban intersection", "two-lane highway", "residential street",
                                                  "freeway on-ramp"};
  const std::array<std::string_view, 4> times{"morning", "afternoon", "evening", "night"};
  struct CrashTemplate {
    CollisionType type;
    DamageArea area;
    Movement mover;
    std::string_view behaviour;
    std::string_view account;
  };
  const std::array<CrashTemplate, 5> crashes{{
      {CollisionType::RearEnd, DamageArea::RearBumper, Movement::ProceedingStraight,
       "The following driver did not slow down in time.",
       "The {agent} failed to slow down on the {surface} road, leading to a rear-end collision with a stopped vehicle."},
      {CollisionType::Broadside, DamageArea::RightFrontCorner, Movement::MakingLeftTurn,
       "A turning driver failed to yield to cross traffic.",
       "The {agent} failed to yield while turning left at the {location} and was struck broadside."},
      {CollisionType::SideSwipe, DamageArea::LeftRear, Movement::ChangingLanes,
       "A driver changed lanes without checking the blind spot.",
       "The {agent} changed lanes abruptly and sideswiped an adjacent vehicle on the {location}."},
      {CollisionType::HeadOn, DamageArea::FrontBumper, Movement::DrivingIntoOpposingLane,
       "A driver drifted across the center line.",
       "The {agent} drifted into the opposing lane in {weather} conditions and collided head-on with oncoming traffic."},
      {CollisionType::HitObject, DamageArea::FrontDriverSide, Movement::SlowingStopping,
       "The driver lost control on a {surface} surface.",
       "The {agent} lost control on the {surface} road and hit a roadside barrier near the {location}."},
  }};
  const std::array<std::string_view, 4> safe_accounts{
      "The {agent} reduced speed and maintained a safe following distance while navigating the {surface} road, "
      "avoiding potential incidents.",
      "The {agent} yielded to cross traffic at the {location} and completed the turn after the lane was clear.",
      "The {agent} signalled early, checked mirrors and merged smoothly into a wide gap on the {location}.",
      "The {agent} kept to its lane in {weather} conditions, adjusting speed to the visibility and traffic ahead."};

  auto fill = [](std::string text, std::string_view agent, const PreAccident& pre) {
    auto replace = [&](std::string_view key, std::string_view value) {
      for (auto pos = text.find(key); pos != std::string::npos; pos = text.find(key, pos + value.size())) {
        text.replace(pos, key.size(), value);
      }
    };
    replace("{agent}", agent);
    replace("{surface}", detail::lower(name_of(pre.roadway_surface)));
    replace("{location}", pre.location);
    replace("{weather}", detail::lower(name_of(pre.weather)));
    return text;
  };

  std::vector<AccidentReport> out;
  for (int i = 0; i < pairs; ++i) {
    PreAccident pre;
    pre.weather = static_cast<Weather>(rng.below(vocab_size<Weather>()));
    pre.lighting = static_cast<Lighting>(rng.below(vocab_size<Lighting>()));
    pre.roadway_surface = (pre.weather == Weather::Raining || rng.below(4) == 0) ? RoadwaySurface::Wet : RoadwaySurface::Dry;
    pre.road_conditions = rng.below(5) == 0 ? static_cast<RoadCondition>(rng.below(vocab_size<RoadCondition>()))
                                            : RoadCondition::Usual;
    pre.location = std::string(locations[rng.below(locations.size())]);
    pre.time = std::string(times[rng.below(times.size())]);
    const auto agent = agents[rng.below(agents.size())];
    const auto other = agents[rng.below(agents.size())];
    const auto& crash = crashes[rng.below(crashes.size())];

    AccidentReport acc;
    acc.id = "acc-" + std::to_string(i);
    acc.is_accident = true;
    acc.pre = pre;
    acc.during.participants = {{std::string(agent), crash.mover}, {std::string(other), Movement::ProceedingStraight}};
    acc.during.behaviors = fill(std::string(crash.behaviour), agent, pre);
    acc.post = PostAccident{crash.type, static_cast<Severity>(1 + rng.below(3)), crash.area};
    acc.narrative = fill(std::string(crash.account), agent, pre);

    AccidentReport safe;
    safe.id = "safe-" + std::to_string(i);
    safe.is_accident = false;
    safe.pre = pre;
    safe.during.participants = {{std::string(agent), Movement::ProceedingStraight},
                                {std::string(other), Movement::ProceedingStraight}};
    safe.during.behaviors = "Drivers kept their lanes and respected right of way.";
    safe.narrative = fill(std::string(safe_accounts[rng.below(safe_accounts.size())]), agent, pre);

    out.push_back(std::move(acc));
    out.push_back(std::move(safe));
  }
  return out;
}

}  // namespace aant

#endif  // AANT_REPORT_CORPUS_HPP_
