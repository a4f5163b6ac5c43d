// Copyright 2026 The ivyfake Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <map>
#include <set>

#include "ivyfake/errors.hpp"
#include "ivyfake/hashing.hpp"
#include "ivyfake/instructions.hpp"
#include "mocks.hpp"

namespace ivyfake {
namespace {

/// Annotated set of `n` samples: every 7th non-compliant, every 5th
/// conditioned on the wrong label, every 11th teacher verdict flipped with
/// conditioning off.
AnnotatedManifest fixture(std::size_t n) {
  const auto m = testing::synthetic_manifest(n);
  AnnotatedManifest am;
  am.created_at = m.created_at;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = m.samples[i];
    AnnotationRecord r;
    r.sample_id = s.id;
    r.request_fingerprint = std::string(64, '0');
    r.attempts_used = 1;
    Label verdict = s.label;
    if (i % 5 == 4) {
      verdict = s.label == Label::fake ? Label::real : Label::fake;
      r.label_consistent = Consistency::no;
    } else if (i % 11 == 10) {
      verdict = s.label == Label::fake ? Label::real : Label::fake;
      r.conditioning = Conditioning::off;
    } else {
      r.label_consistent = Consistency::yes;
    }
    const auto raw = serialize_response("Reasoning about " + s.id + " with chromatic irregularity.", verdict);
    r.response = i % 7 == 6 ? ParseResult{NonCompliant{NonComplianceReason::missing_think, "nope"}}
                            : parse_and_tag(raw, s.modality);
    am.entries.push_back({s, r});
  }
  return am;
}

TEST(Stage2, UniformPromptAndBareTargets) {
  const auto am = fixture(60);
  const auto set = build_stage2(am);
  std::set<std::string> prompts;
  for (const auto& e : set.examples) {
    prompts.insert(e.prompt);
    EXPECT_TRUE(e.target == "real" || e.target == "fake");
    EXPECT_EQ(e.stage, Stage::s2);
  }
  EXPECT_EQ(prompts.size(), 1u);
  EXPECT_EQ(set.examples.size() + set.skipped.size(), am.entries.size());
  for (const auto& s : set.skipped) EXPECT_TRUE(s.reason == "non_compliant" || s.reason == "label_mismatch");
}

TEST(Stage3, SplitsByFractionAndKeepsAgreeingEntries) {
  const auto am = fixture(80);
  const auto set = build_stage3(am, 0.5, 42);
  std::map<std::string, Label> truth;
  for (const auto& e : am.entries) truth[e.sample.id] = e.sample.label;

  std::size_t detect = 0, explain = 0;
  for (const auto& e : set.examples) {
    if (e.stage == Stage::s3_detect) {
      ++detect;
      EXPECT_EQ(e.target, to_string(truth.at(e.sample_id)));
    } else {
      ASSERT_EQ(e.stage, Stage::s3_explain);
      ++explain;
      const auto parsed = parse_response(e.target);
      ASSERT_TRUE(is_compliant(parsed)) << e.target;
      EXPECT_EQ(std::get<StructuredResponse>(parsed).conclusion, truth.at(e.sample_id));
    }
  }
  const std::size_t usable = set.examples.size();
  EXPECT_EQ(detect, static_cast<std::size_t>(std::llround(usable * 0.5)));
  EXPECT_EQ(detect + explain + set.skipped.size(), am.entries.size());
}

TEST(Stage3, FractionExtremes) {
  const auto am = fixture(30);
  for (const auto& e : build_stage3(am, 0.0, 1).examples) EXPECT_EQ(e.stage, Stage::s3_explain);
  for (const auto& e : build_stage3(am, 1.0, 1).examples) EXPECT_EQ(e.stage, Stage::s3_detect);
  EXPECT_THROW(build_stage3(am, 1.5, 1), DomainError);
  EXPECT_THROW(build_stage3(am, -0.1, 1), DomainError);
}

TEST(Stage3, SeedDeterminesBytes) {
  const auto am = fixture(50);
  const auto a = instructions_to_jsonl(build_stage3(am, 0.5, 9).examples);
  EXPECT_EQ(sha256_hex(a), sha256_hex(instructions_to_jsonl(build_stage3(am, 0.5, 9).examples)));
  EXPECT_NE(a, instructions_to_jsonl(build_stage3(am, 0.5, 10).examples));
  // Input order does not matter.
  auto reversed = am;
  std::reverse(reversed.entries.begin(), reversed.entries.end());
  EXPECT_EQ(a, instructions_to_jsonl(build_stage3(reversed, 0.5, 9).examples));
}

TEST(Stage1, PassThrough) {
  const auto rows = convert_stage1(R"({"id":"v1","media":"a.mp4","prompt":"What happens?","target":"A dog runs."})");
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].stage, Stage::s1_general);
  EXPECT_EQ(rows[0].target, "A dog runs.");
  EXPECT_THROW(convert_stage1(R"({"id":"v1"})"), ParseError);
}

TEST(Examples, JsonlRoundTrip) {
  testing::TempDir dir;
  const auto set = build_stage3(fixture(20), 0.5, 3);
  const auto text = instructions_to_jsonl(set.examples);
  testing::spit(dir / "s3.jsonl", text);
  const auto back = read_instructions(dir / "s3.jsonl");
  EXPECT_EQ(instructions_to_jsonl(back), text);
  EXPECT_EQ(parse_stage("s3_explain"), Stage::s3_explain);
  EXPECT_THROW(parse_stage("s4"), ParseError);
}

}  // namespace
}  // namespace ivyfake
