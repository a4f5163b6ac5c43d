// Copyright 2026 The ivyfake Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ivyfake/types.hpp"

namespace ivyfake {

/// One detector decision. `score` is the confidence that the item is fake.
struct LabeledPrediction {
  std::string sample_id;
  Label truth = Label::fake;
  Label predicted = Label::fake;
  std::optional<double> score;
  std::string generator;
};

/// Keys: id, truth, predicted, generator, optional score in [0, 1].
LabeledPrediction prediction_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const LabeledPrediction& p);
std::vector<LabeledPrediction> parse_predictions(std::string_view jsonl, std::string_view source = "<predictions>");
std::vector<LabeledPrediction> load_predictions(const std::filesystem::path& path);

/// Confusion counts with "fake" as the positive class.
struct Confusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;
};

Confusion confusion(std::span<const LabeledPrediction> preds) noexcept;

// All metrics throw DomainError on empty input instead of returning NaN.
double accuracy(std::span<const LabeledPrediction> preds);
/// Mean of the real and fake F1 scores; a class with 2TP+FP+FN = 0 scores 0.
double macro_f1(std::span<const LabeledPrediction> preds);
/// Fraction of fake items predicted fake. Throws DomainError without fakes.
double recall(std::span<const LabeledPrediction> preds);
/// Ranks by descending score, ties by ascending sample id, and averages the
/// precision at each fake. Throws DomainError when a score is missing or no
/// item is fake.
double average_precision(std::span<const LabeledPrediction> preds);

// ---------------------------------------------------------------------------
// Text metrics

/// Lowercases ASCII, treats every other non-alphanumeric ASCII byte as a
/// separator, and keeps bytes >= 0x80 inside words.
std::vector<std::string> rouge_tokenize(std::string_view text);
std::vector<std::string> whitespace_tokenize(std::string_view text);

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);

inline constexpr double kRougeBeta = 1.2;

struct RougeL {
  double precision = 0.0;
  double recall = 0.0;
  double f = 0.0;
};

RougeL rouge_l_tokens(std::span<const std::string> candidate, std::span<const std::string> reference,
                      double beta = kRougeBeta);
RougeL rouge_l(std::string_view candidate, std::string_view reference, double beta = kRougeBeta);

/// Cosine similarity of token-count vectors under rouge_tokenize; 0 when
/// either side is empty.
double lexical_sim(std::string_view candidate, std::string_view reference);

using Tokenizer = std::function<std::vector<std::string>(std::string_view)>;

struct TokenLengthStats {
  double mean = 0.0;
  std::size_t texts = 0;
  std::size_t min = 0;
  std::size_t max = 0;
};

/// Throws DomainError on an empty corpus. Defaults to rouge_tokenize.
TokenLengthStats token_length_stats(std::span<const std::string> texts, const Tokenizer& tokenizer = {});

// ---------------------------------------------------------------------------
// Detection report

struct MetricRow {
  std::string name;
  std::size_t n = 0;
  std::optional<double> acc;
  std::optional<double> f1;
  /// Undefined for rows without fake items.
  std::optional<double> recall;
  /// Undefined without scores or without fake items.
  std::optional<double> ap;
};

struct DetectionReport {
  std::vector<MetricRow> generators;  // ascending by name
  /// Unweighted mean over generator rows of each defined cell.
  MetricRow mean;
  std::optional<double> fake_acc;
  std::optional<double> real_acc;
};

DetectionReport build_report(std::span<const LabeledPrediction> preds);

/// Percentages with two decimals; undefined cells render as "-".
std::string render_text(const DetectionReport& r);
/// Raw ratios; undefined cells are null.
nlohmann::ordered_json to_json(const DetectionReport& r);

/// "76.21/95.61" style class accuracy pair, or "-" when a class is absent.
std::string fake_real_cell(const DetectionReport& r);

struct Thresholds {
  std::optional<double> min_acc;
  std::optional<double> min_f1;
  std::optional<double> min_recall;
  std::optional<double> min_ap;
};

Thresholds thresholds_from_json(const nlohmann::json& j);

/// Checks the Mean row; returns one message per unmet threshold.
std::vector<std::string> check_thresholds(const DetectionReport& r, const Thresholds& t);

// ---------------------------------------------------------------------------
// Explanation report

struct ExplanationPair {
  std::string sample_id;
  std::string reference;
  std::string candidate;
};

struct ExplanationReport {
  std::size_t pairs = 0;
  double rouge_l_f = 0.0;
  /// Lexical cosine stand-in for the unspecified SIM metric.
  double sim = 0.0;
  TokenLengthStats candidate_length;
};

/// Means over pairs; throws DomainError when empty.
ExplanationReport explanation_report(std::span<const ExplanationPair> pairs, const Tokenizer& tokenizer = {});
nlohmann::ordered_json to_json(const ExplanationReport& r);
std::string render_text(const ExplanationReport& r);

}  // namespace ivyfake
