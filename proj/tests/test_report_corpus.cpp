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

#include <algorithm>
#include <fstream>
#include <string>
#include <vector>

#include "aant/report_corpus.hpp"
#include "support.hpp"

namespace aant {
namespace {

const char* kMinimalAccident = R"({
  "id": "r1",
  "is_accident": true,
  "pre": {"weather": "Clear", "lighting": "Daylight", "roadway_surface": "Dry", "road_conditions": "Usual",
          "location": "urban intersection", "time": "morning"},
  "during": {"participants": [{"agent_type": "car", "movement": "Proceeding Straight"}],
             "behaviors": "The driver followed too closely."},
  "post": {"collision_type": "Rear End", "severity": "Minor", "damage_area": "Front Bumper"},
  "narrative": "The car struck the vehicle ahead."
})";

AccidentReport safe_report() {
  AccidentReport r;
  r.id = "safe";
  r.is_accident = false;
  r.pre.location = "residential street";
  r.pre.time = "noon";
  r.during.participants = {{"car", Movement::ProceedingStraight}};
  r.during.behaviors = "Drivers kept their lanes.";
  r.narrative = "The car kept a steady pace and stopped at the sign.";
  return r;
}

bool has_rule(const std::vector<ValidationFinding>& f, const std::string& id) {
  return std::any_of(f.begin(), f.end(), [&](const auto& x) { return x.rule_id == id; });
}

ReportError::Kind kind_of(const std::string& doc) {
  try {
    parse_report(doc);
  } catch (const ReportError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error for document";
  return ReportError::Kind::schema;
}

TEST(ParseReport, MinimalAccident) {
  const auto r = parse_report(kMinimalAccident);
  EXPECT_EQ(r.id, "r1");
  EXPECT_TRUE(r.is_accident);
  EXPECT_EQ(r.pre.weather, Weather::Clear);
  EXPECT_EQ(r.pre.road_conditions, RoadCondition::Usual);
  ASSERT_TRUE(r.post.has_value());
  EXPECT_EQ(r.post->collision_type, CollisionType::RearEnd);
  EXPECT_EQ(r.post->severity, Severity::Minor);
  ASSERT_EQ(r.during.participants.size(), 1U);
  EXPECT_EQ(r.during.participants[0].movement, Movement::ProceedingStraight);
}

TEST(ParseReport, ErrorKinds) {
  std::string doc = kMinimalAccident;
  std::string snow = doc;
  snow.replace(snow.find("\"Clear\""), 7, "\"Snowing\"");
  EXPECT_EQ(kind_of(snow), ReportError::Kind::unknown_vocabulary);

  EXPECT_EQ(kind_of("{not json"), ReportError::Kind::malformed_json);

  auto j = nlohmann::json::parse(doc);
  j.erase("narrative");
  EXPECT_EQ(kind_of(j.dump()), ReportError::Kind::missing_field);

  j = nlohmann::json::parse(doc);
  j["is_accident"] = false;  // still carries post
  EXPECT_EQ(kind_of(j.dump()), ReportError::Kind::schema);

  j = nlohmann::json::parse(doc);
  j["extra"] = 1;
  EXPECT_EQ(kind_of(j.dump()), ReportError::Kind::schema);

  j = nlohmann::json::parse(doc);
  j["narrative"] = "";
  EXPECT_EQ(kind_of(j.dump()), ReportError::Kind::schema);

  j = nlohmann::json::parse(doc);
  j.erase("post");
  EXPECT_EQ(kind_of(j.dump()), ReportError::Kind::missing_field);
}

TEST(ParseReport, EveryVocabularyValueRoundTrips) {
  AccidentReport r = parse_report(kMinimalAccident);
  for (std::size_t i = 0; i < vocab_size<Weather>(); ++i) {
    r.pre.weather = static_cast<Weather>(i);
    EXPECT_EQ(parse_report(serialize_report(r)), r);
  }
  for (std::size_t i = 0; i < vocab_size<Movement>(); ++i) {
    r.during.participants[0].movement = static_cast<Movement>(i);
    EXPECT_EQ(parse_report(serialize_report(r)), r);
  }
  for (std::size_t i = 0; i < vocab_size<DamageArea>(); ++i) {
    r.post->damage_area = static_cast<DamageArea>(i);
    EXPECT_EQ(parse_report(serialize_report(r)), r);
  }
  EXPECT_EQ(name_of(Weather::FogVisibility), "Fog/Visibility");
  EXPECT_EQ(parse_vocab<CollisionType>("Vehicle/Pedestrian"), CollisionType::VehiclePedestrian);
}

TEST(ParseReport, SerializeParseIdentityOnSampleCorpus) {
  for (const auto& r : sample_report_corpus(30, 4)) {
    EXPECT_EQ(parse_report(serialize_report(r)), r) << r.id;
  }
}

TEST(ReportDir, LoadsInFilenameOrder) {
  testing::ScratchDir dir("reports");
  const auto corpus = sample_report_corpus(2, 1);
  for (const auto& r : corpus) save_report(r, dir / (r.id + ".json"));
  std::ofstream(dir / "notes.txt") << "ignored";
  const auto back = load_report_dir(dir.path());
  ASSERT_EQ(back.size(), 4U);
  EXPECT_EQ(back[0].id, "acc-0");
  EXPECT_EQ(back[1].id, "acc-1");
  EXPECT_EQ(back[2].id, "safe-0");
}

TEST(ValidateReport, HighSpeedInFog) {
  AccidentReport r = parse_report(kMinimalAccident);
  r.pre.weather = Weather::FogVisibility;
  r.narrative = "The car was traveling at high speed when it struck the vehicle ahead.";
  const auto f = validate_report(r);
  ASSERT_TRUE(has_rule(f, "R1"));
  EXPECT_TRUE(has_errors(f));
  r.pre.weather = Weather::Clear;
  EXPECT_FALSE(has_rule(validate_report(r), "R1"));
  r.pre.weather = Weather::Raining;
  EXPECT_TRUE(has_rule(validate_report(r), "R1"));
}

TEST(ValidateReport, NonAccidentDescribingCrash) {
  AccidentReport r = safe_report();
  r.narrative = "A rear-end collision occurred at the light.";
  const auto f = validate_report(r);
  ASSERT_TRUE(has_rule(f, "R2"));
  EXPECT_EQ(f.front().severity, FindingSeverity::error);
}

TEST(ValidateReport, CleanAndWarning) {
  EXPECT_TRUE(validate_report(safe_report()).empty());
  AccidentReport r = safe_report();
  r.during.participants.clear();
  const auto f = validate_report(r);
  ASSERT_EQ(f.size(), 1U);
  EXPECT_EQ(f[0].rule_id, "R3");
  EXPECT_EQ(f[0].severity, FindingSeverity::warning);
  EXPECT_FALSE(has_errors(f));
}

TEST(ValidateReport, OrderIndependentOverRegistry) {
  AccidentReport r = safe_report();
  r.pre.weather = Weather::FogVisibility;
  r.narrative = "Speeding through fog, the car crashed.";
  r.during.participants.clear();
  auto rules = make_rules();
  const auto forward = validate_report(r, rules);
  std::reverse(rules.begin(), rules.end());
  EXPECT_EQ(validate_report(r, rules), forward);
  EXPECT_EQ(forward.size(), 3U);
}

TEST(ValidateReport, SampleCorpusIsClean) {
  for (const auto& r : sample_report_corpus(40, 9)) EXPECT_TRUE(validate_report(r).empty()) << r.id;
}

TEST(ValidateReport, PhrasesMatchWholeWords) {
  AccidentReport r = safe_report();
  r.narrative = "The driver chose a white car.";  // "hit" inside "white" must not fire
  EXPECT_TRUE(validate_report(r).empty());
}

TEST(Deduplicate, IdenticalAndDisjoint) {
  AccidentReport a = safe_report();
  AccidentReport b = safe_report();
  b.id = "copy";
  EXPECT_DOUBLE_EQ(narrative_similarity(a.narrative, b.narrative), 1.0);
  EXPECT_EQ(deduplicate({a, b}, 1.0).size(), 1U);

  b.narrative = "Quiet night without other road users anywhere nearby today.";
  EXPECT_DOUBLE_EQ(narrative_similarity(a.narrative, b.narrative), 0.0);
  EXPECT_TRUE(deduplicate({a, b}, 1e-9).empty());
}

TEST(Deduplicate, HandBuiltTrigramSets) {
  // a: {w1 w2 w3, w2 w3 w4, w3 w4 w5}; b adds three more grams. Shared 3,
  // union 6, so the pair sits at 0.5.
  AccidentReport a = safe_report();
  AccidentReport b = safe_report();
  b.id = "b";
  a.narrative = "w1 w2 w3 w4 w5";
  b.narrative = "w1 w2 w3 w4 w5 w6 w7 w8";
  EXPECT_DOUBLE_EQ(narrative_similarity(a.narrative, b.narrative), 0.5);
  const auto flagged = deduplicate({a, b}, 0.4);
  ASSERT_EQ(flagged.size(), 1U);
  EXPECT_EQ(flagged[0].first, "safe");
  EXPECT_EQ(flagged[0].second, "b");
  EXPECT_TRUE(deduplicate({a, b}, 0.6).empty());

  // Each narrative keeps half its own grams: 1 shared of 3 in the union.
  a.narrative = "x1 x2 x3 x4";
  b.narrative = "x1 x2 x3 y4";
  EXPECT_DOUBLE_EQ(narrative_similarity(a.narrative, b.narrative), 1.0 / 3.0);
}

TEST(Deduplicate, SymmetryProperty) {
  SplitMix64 rng(21);
  const std::vector<std::string> words{"car", "truck", "stopped", "at", "the", "light", "slowly", "turned"};
  for (int trial = 0; trial < 200; ++trial) {
    auto sentence = [&] {
      std::string s;
      const int n = 1 + static_cast<int>(rng.below(9));
      for (int i = 0; i < n; ++i) s += words[rng.below(words.size())] + " ";
      return s;
    };
    const std::string x = sentence();
    const std::string y = sentence();
    EXPECT_DOUBLE_EQ(narrative_similarity(x, y), narrative_similarity(y, x));
    EXPECT_DOUBLE_EQ(narrative_similarity(x, x), 1.0);
  }
}

TEST(CorpusStats, ReferenceCollisionRows) {
  const auto stats = corpus_stats(collision_reference_corpus());
  EXPECT_EQ(stats.count("collision_type", "Rear End"), 108);
  EXPECT_EQ(stats.count("collision_type", "Head-On"), 38);
  EXPECT_EQ(stats.count("collision_type", "Vehicle/Pedestrian"), 1);
  EXPECT_EQ(stats.by_severity.at("collision_type").at("Rear End").at("Minor"), 78);
  EXPECT_EQ(stats.by_severity.at("collision_type").at("Rear End").at("Major"), 3);
  EXPECT_EQ(stats.reports, stats.accidents);
}

TEST(CorpusStats, EmptyAndUniform) {
  const auto empty = corpus_stats({});
  EXPECT_EQ(empty.reports, 0);
  for (const auto& [factor, values] : empty.counts) {
    for (const auto& [value, n] : values) EXPECT_EQ(n, 0) << factor << "/" << value;
  }
  EXPECT_EQ(empty.counts.at("weather").size(), 4U);

  std::vector<AccidentReport> three(3, safe_report());
  const auto s = corpus_stats(three);
  EXPECT_EQ(s.count("weather", "Clear"), 3);
  EXPECT_EQ(s.count("weather", "Cloudy"), 0);
  EXPECT_EQ(s.count("collision_type", "Rear End"), 0);
}

TEST(RenderText, DeterministicAndParticipantCount) {
  AccidentReport r = parse_report(kMinimalAccident);
  r.during.participants.push_back({"bicycle", Movement::Stopped});
  const std::string text = render_report_text(r);
  EXPECT_EQ(text, render_report_text(r));
  std::size_t lines = 0;
  for (std::size_t pos = text.find("Participant:"); pos != std::string::npos; pos = text.find("Participant:", pos + 1)) {
    ++lines;
  }
  EXPECT_EQ(lines, 2U);
}

TEST(RenderText, CrashAndSafeDifferOnlyInBehaviourAndOutcome) {
  const auto corpus = sample_report_corpus(6, 2);
  auto split_lines = [](const std::string& text) {
    std::vector<std::string> lines;
    std::string cur;
    for (char c : text) {
      if (c == '\n') {
        lines.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    return lines;
  };
  for (std::size_t i = 0; i + 1 < corpus.size(); i += 2) {
    AccidentReport crash = corpus[i];
    AccidentReport safe = corpus[i + 1];
    // Same scenario: align the participant movements, which are behaviour.
    crash.during.participants = safe.during.participants;
    const auto a = split_lines(render_report_text(crash));
    const auto b = split_lines(render_report_text(safe));
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
      const std::string key = a[k].substr(0, a[k].find(':'));
      if (key == "Behavior" || key == "Outcome" || key == "Account") continue;
      EXPECT_EQ(a[k], b[k]) << key;
    }
  }
}

}  // namespace
}  // namespace aant
