// Copyright 2026 The knnasr Authors
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

#include "knnasr/error.hpp"
#include "knnasr/manifest.hpp"

using namespace knnasr;

TEST(Manifest, JsonlFieldsAndLabels) {
  const auto recs = parse_manifest_jsonl(
      R"({"utterance_id":"u1","speaker_id":"s1","reference":"a b","hypothesis":"a","gender":"female_feminine","accents":"Wales, England","age":"twenties"})"
      "\n\n"
      R"({"utterance_id":"u2","speaker_id":"s2","reference":"c","age":"47"})"
      "\n");
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[0].hypothesis, "a");
  EXPECT_EQ(recs[0].gender, Gender::female);
  EXPECT_EQ(recs[0].accent, "Wales");
  EXPECT_EQ(recs[0].age_group, "twenties");
  EXPECT_FALSE(recs[1].hypothesis.has_value());
  EXPECT_EQ(recs[1].gender, Gender::unspecified);
  EXPECT_FALSE(recs[1].accent.has_value());
  EXPECT_EQ(recs[1].age_group, "forties");
}

TEST(Manifest, JsonlErrorsNameTheLine) {
  try {
    parse_manifest_jsonl("{\"utterance_id\":\"u1\",\"reference\":\"a\"}\n{not json}\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::invalid_value);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_manifest_jsonl("{\"reference\":\"a\"}\n"), Error);
  EXPECT_THROW(parse_manifest_jsonl("{\"utterance_id\":\"u\",\"reference\":3}\n"), Error);
}

TEST(Manifest, TsvWithHeader) {
  const auto recs = parse_manifest_tsv(
      "utterance_id\tspeaker_id\treference\tgender\n"
      "u1\ts1\thello there\tmale\n"
      "u2\ts2\tgeneral kenobi\t\n");
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[0].reference, "hello there");
  EXPECT_EQ(recs[0].gender, Gender::male);
  EXPECT_EQ(recs[1].gender, Gender::unspecified);
  EXPECT_THROW(parse_manifest_tsv("utterance_id\treference\nu1\ta\textra\n"), Error);
}

TEST(Manifest, JsonlRoundTrip) {
  UtteranceRecord r;
  r.utterance_id = "x";
  r.speaker_id = "s";
  r.reference = "r e f";
  r.hypothesis = "h";
  r.gender = Gender::male;
  r.accent = "scotland";
  r.age_group = "sixties";
  const std::vector<UtteranceRecord> in{r};
  const auto text = manifest_jsonl(in);
  const auto back = parse_manifest_jsonl(text);
  EXPECT_EQ(manifest_jsonl(back), text);
}
