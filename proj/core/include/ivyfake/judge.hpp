// Copyright 2026 The ivyfake Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ivyfake/chat_backend.hpp"
#include "ivyfake/protocol.hpp"

namespace ivyfake {

/// Completeness, Relevance, Level of Detail, Explanation; each 1..5.
struct JudgeRound {
  int completeness = 0;
  int relevance = 0;
  int detail = 0;
  int explanation = 0;

  std::array<int, 4> values() const noexcept { return {completeness, relevance, detail, explanation}; }
  friend bool operator==(const JudgeRound&, const JudgeRound&) = default;
};

enum class JudgeFailure { no_object, missing_key, not_integer, out_of_range };

std::string_view to_string(JudgeFailure f) noexcept;

struct JudgeParse {
  std::optional<JudgeRound> scores;
  JudgeFailure failure = JudgeFailure::no_object;
  std::string detail;

  bool ok() const noexcept { return scores.has_value(); }
};

/// Locates the first balanced `{...}` that is a valid JSON object and reads
/// the four integer scores from it. "Level of Detail" wins over "Detail" when
/// both are present. Keys are checked in dimension order; the first defect
/// decides the failure reason.
JudgeParse parse_judge_reply(std::string_view text);

/// System prompt from the judge fixture, user message with both texts
/// substituted in a single pass.
RenderedPrompt render_judge_prompt(std::string_view ground_truth, std::string_view model_output);

struct JudgeAttempt {
  int round = 0;
  int attempt = 0;
  std::string reply;
  JudgeParse parsed;
};

struct JudgeScore {
  /// Valid round values per dimension, in round order.
  std::array<std::vector<int>, 4> per_round;
  std::array<double, 4> avg_per_dim{};
  double overall_avg = 0.0;
  int rounds_requested = 0;
  int valid_rounds = 0;
  /// True when some rounds stayed unparseable after the retry.
  bool missing_rounds = false;
  std::vector<JudgeAttempt> transcript;
};

inline constexpr std::array<std::string_view, 4> kJudgeDimensions{"Completeness", "Relevance",
                                                                  "Level of Detail", "Explanation"};

/// Averages valid rounds per dimension; overall is the mean of the four
/// dimension means. Throws DomainError when `rounds` is empty.
JudgeScore score_rounds(const std::vector<JudgeRound>& rounds, int requested);

/// Runs `rounds` sequential judge calls. An unparseable reply is retried
/// once; if it still fails the round is recorded missing. Transport errors
/// are retried per cfg and otherwise propagate. Throws DomainError when no
/// round is valid or rounds < 1.
JudgeScore judge_pair(const StructuredResponse& ground_truth, const StructuredResponse& model_output,
                      ChatBackend& backend, const TeacherConfig& cfg, int rounds = 5,
                      const SleepFn& sleep = {});

struct JudgeSummary {
  std::size_t pairs = 0;
  std::array<double, 4> avg_per_dim{};
  double overall_avg = 0.0;
};

/// Unweighted mean over pairs of each dimension mean. Throws DomainError when empty.
JudgeSummary summarize(const std::vector<JudgeScore>& scores);

nlohmann::ordered_json to_json(const JudgeScore& s);
nlohmann::ordered_json to_json(const JudgeSummary& s);
/// One JSONL line per attempt, prefixed with `pair_id`.
std::string transcript_jsonl(std::string_view pair_id, const JudgeScore& s);

}  // namespace ivyfake
