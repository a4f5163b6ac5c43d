// Copyright 2026 The ivyfake Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <gtest/gtest.h>

#include <sstream>

#include "ivyfake/distill.hpp"
#include "ivyfake/evalkit.hpp"
#include "ivyfake/instructions.hpp"
#include "ivyfake/jsonl.hpp"
#include "ivyfake/protocol.hpp"
#include "mocks.hpp"

namespace ivyfake {
namespace {

using testing::TempDir;

/// Judge prompts carry no media; teacher prompts echo the label they state.
ChatReply universal_reply(const ChatRequest& r) {
  if (testing::image_part_count(r) == 0) {
    return {R"({"Completeness": 4, "Relevance": 5, "Level of Detail": 3, "Explanation": 4})", {}};
  }
  const auto text = testing::user_text(r);
  const Label l = text.find(" is real.") != std::string::npos ? Label::real : Label::fake;
  return {serialize_response("The fingers look distorted.", l), {}};
}

class CliTest : public ::testing::Test {
 protected:
  int run(std::vector<std::string> args) {
    out_.str({});
    err_.str({});
    return cli::run(args, out_, err_, hooks_);
  }
  void SetUp() override {
    backend_ = std::make_shared<testing::FnBackend>(universal_reply);
    hooks_.backend_factory = [this](const TeacherConfig&) { return backend_; };
    hooks_.encoder = &encoder_;
    hooks_.sleep = testing::no_sleep();
    hooks_.cancel = &cancel_;
    save_manifest(dir_ / "m.jsonl", testing::synthetic_manifest(24));
  }
  std::string p(const std::string& name) const { return (dir_ / name).string(); }

  TempDir dir_;
  testing::StubEncoder encoder_;
  std::shared_ptr<testing::FnBackend> backend_;
  std::atomic<bool> cancel_{false};
  cli::Hooks hooks_;
  std::ostringstream out_, err_;
};

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run({}), cli::kExitUsage);
  EXPECT_EQ(run({"frobnicate"}), cli::kExitUsage);
  EXPECT_EQ(run({"plan"}), cli::kExitUsage);
  EXPECT_EQ(run({"plan", "--width", "10", "--height", "10", "--duration", "3"}), cli::kExitUsage);
  EXPECT_EQ(run({"--help"}), cli::kExitOk);
}

TEST_F(CliTest, Plan) {
  ASSERT_EQ(run({"plan", "--width", "2304", "--height", "2304"}), 0) << err_.str();
  EXPECT_NE(out_.str().find("36 tiles"), std::string::npos);
  EXPECT_NE(out_.str().find("729 raw, 196 pooled"), std::string::npos);
  ASSERT_EQ(run({"plan", "--duration", "7.3", "--json"}), 0);
  const auto j = nlohmann::json::parse(out_.str());
  EXPECT_EQ(j.at("frames").at("frames"), 8);
}

TEST_F(CliTest, ValidateSampleSplit) {
  EXPECT_EQ(run({"validate", "--manifest", p("m.jsonl"), "--no-file-check"}), 0) << out_.str();
  EXPECT_EQ(run({"validate", "--manifest", p("m.jsonl")}), cli::kExitValidation);
  EXPECT_NE(out_.str().find("missing_file"), std::string::npos);

  ASSERT_EQ(run({"--seed", "3", "sample", "--manifest", p("m.jsonl"), "--total", "12", "--out", p("s.jsonl")}), 0)
      << err_.str();
  EXPECT_EQ(load_manifest(p("s.jsonl")).samples.size(), 12u);
  const auto first = testing::slurp(p("s.jsonl"));
  ASSERT_EQ(run({"sample", "--seed", "3", "--manifest", p("m.jsonl"), "--total", "12", "--out", p("s.jsonl")}), 0);
  EXPECT_EQ(testing::slurp(p("s.jsonl")), first);

  ASSERT_EQ(run({"split", "--manifest", p("m.jsonl"), "--test-fraction", "0.25", "--train", p("tr.jsonl"), "--test",
                 p("te.jsonl")}),
            0);
  EXPECT_EQ(load_manifest(p("tr.jsonl")).samples.size() + load_manifest(p("te.jsonl")).samples.size(), 24u);
}

TEST_F(CliTest, DistillFilterAndBuild) {
  ASSERT_EQ(run({"distill", "--manifest", p("m.jsonl"), "--out", p("a.jsonl"), "--parallelism", "3", "--checkpoint",
                 p("ck.jsonl")}),
            0)
      << err_.str();
  EXPECT_EQ(backend_->calls(), 24u);
  EXPECT_EQ(load_annotations(p("a.jsonl")).entries.size(), 24u);

  ASSERT_EQ(run({"distill", "--manifest", p("m.jsonl"), "--out", p("a2.jsonl"), "--checkpoint", p("ck.jsonl")}), 0);
  EXPECT_EQ(backend_->calls(), 24u);
  EXPECT_NE(out_.str().find("24 resumed"), std::string::npos);

  ASSERT_EQ(run({"filter", "--annotations", p("a.jsonl"), "--out", p("f.jsonl"), "--rejected", p("r.jsonl")}), 0);
  EXPECT_NE(out_.str().find("kept 24, rejected 0"), std::string::npos);

  ASSERT_EQ(run({"build-stage2", "--annotations", p("f.jsonl"), "--out", p("s2.jsonl")}), 0);
  const auto s2 = parse_jsonl(testing::slurp(p("s2.jsonl")));
  EXPECT_EQ(s2.size(), 24u);
  ASSERT_EQ(run({"build-stage3", "--annotations", p("f.jsonl"), "--out", p("s3.jsonl"), "--detect-fraction", "0.5"}),
            0);
  EXPECT_EQ(parse_jsonl(testing::slurp(p("s3.jsonl"))).size(), 24u);

  ASSERT_EQ(run({"distill", "--manifest", p("m.jsonl"), "--out", p("n.jsonl"), "--no-label"}), 0);
  ASSERT_EQ(run({"ablation", "--with", p("a.jsonl"), "--without", p("n.jsonl")}), 0);
  EXPECT_NE(out_.str().find("with label     1.000"), std::string::npos);
}

TEST_F(CliTest, DistillInterrupted) {
  cancel_ = true;
  EXPECT_EQ(run({"distill", "--manifest", p("m.jsonl"), "--out", p("a.jsonl")}), cli::kExitBackend);
  EXPECT_FALSE(std::filesystem::exists(p("a.jsonl")));
}

TEST_F(CliTest, EvaluateWithThresholds) {
  std::string jsonl;
  for (const auto& pr : testing::class_accuracy_fixture("g", 10, 9, 10, 8)) jsonl += to_json(pr).dump() + "\n";
  testing::spit(dir_ / "preds.jsonl", jsonl);
  ASSERT_EQ(run({"evaluate", "--preds", p("preds.jsonl")}), 0);
  EXPECT_NE(out_.str().find("90.00/80.00"), std::string::npos);
  ASSERT_EQ(run({"evaluate", "--preds", p("preds.jsonl"), "--json"}), 0);
  EXPECT_EQ(nlohmann::json::parse(out_.str()).at("fake_real"), "90.00/80.00");

  testing::spit(dir_ / "cfg.json", R"({"thresholds": {"min_acc": 0.9}})");
  EXPECT_EQ(run({"--config", p("cfg.json"), "evaluate", "--preds", p("preds.jsonl")}), cli::kExitValidation);
  EXPECT_NE(err_.str().find("Mean Acc 85.00 below threshold 90.00"), std::string::npos);

  testing::spit(dir_ / "bad.json", R"({"nope": 1})");
  EXPECT_EQ(run({"--config", p("bad.json"), "evaluate", "--preds", p("preds.jsonl")}), cli::kExitValidation);
}

TEST_F(CliTest, JudgeAndReport) {
  const auto ref = serialize_response("Six fingers on the left hand.", Label::fake);
  const auto cand = serialize_response("The left hand has six fingers.", Label::fake);
  std::string lines;
  lines += nlohmann::json{{"id", "a"}, {"reference", ref}, {"candidate", cand}}.dump() + "\n";
  lines += nlohmann::json{{"id", "b"}, {"reference", ref}, {"candidate", "no tags"}}.dump() + "\n";
  testing::spit(dir_ / "pairs.jsonl", lines);

  ASSERT_EQ(run({"judge", "--pairs", p("pairs.jsonl"), "--rounds", "3", "--transcript", p("t.jsonl")}), 0)
      << err_.str();
  EXPECT_EQ(backend_->calls(), 3u);
  const auto j = nlohmann::json::parse(out_.str());
  EXPECT_DOUBLE_EQ(j.at("summary").at("overall").get<double>(), 4.0);
  EXPECT_NE(err_.str().find("skipped b"), std::string::npos);
  EXPECT_EQ(parse_jsonl(testing::slurp(p("t.jsonl")), "t").size(), 3u);

  ASSERT_EQ(run({"report", "--pairs", p("pairs.jsonl"), "--json"}), 0);
  EXPECT_EQ(nlohmann::json::parse(out_.str()).at("pairs"), 2);
}

TEST_F(CliTest, DetectSingleAndManifest) {
  testing::spit(dir_ / "x.png", "px");
  hooks_.probe = [](const std::filesystem::path&, Modality) -> MediaProbe { return {100, 100, std::nullopt}; };
  ASSERT_EQ(run({"detect", "--media", p("x.png"), "--modality", "image"}), 0) << err_.str();
  EXPECT_EQ(nlohmann::json::parse(out_.str()).at("verdict"), "fake");
  EXPECT_EQ(run({"detect", "--manifest", p("m.jsonl"), "--out", p("preds.jsonl")}), cli::kExitBackend);
  EXPECT_NE(err_.str().find("undetermined"), std::string::npos);
}

TEST_F(CliTest, ProtocolShow) {
  ASSERT_EQ(run({"protocol", "show"}), 0);
  const auto text = out_.str();
  for (const auto& f : protocol_fixtures()) EXPECT_NE(text.find(f.sha256), std::string::npos);
  EXPECT_NE(text.find("== taxonomy"), std::string::npos);
}

}  // namespace
}  // namespace ivyfake
