// Copyright 2026 The ivyfake Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ivyfake/corpus.hpp"
#include "ivyfake/distill.hpp"

namespace ivyfake {

enum class Stage { s1_general, s2, s3_detect, s3_explain };

std::string_view to_string(Stage s) noexcept;
Stage parse_stage(std::string_view s);

struct InstructionExample {
  std::string sample_id;
  std::string media_ref;
  std::string prompt;
  /// Bare "real"/"fake" for s2 and s3_detect, full tagged response for s3_explain.
  std::string target;
  Stage stage = Stage::s2;
};

nlohmann::ordered_json to_json(const InstructionExample& e);
InstructionExample example_from_json(const nlohmann::json& j);

struct SkippedRecord {
  std::string sample_id;
  std::string reason;
};

struct InstructionSet {
  std::vector<InstructionExample> examples;
  std::vector<SkippedRecord> skipped;
};

/// One detection pair per compliant, label-consistent entry. Every pair uses
/// the same classification question; the target is the ground truth verdict.
InstructionSet build_stage2(const AnnotatedManifest& am);

inline constexpr double kDefaultDetectFraction = 0.5;

/// Reuses every usable entry: round(n * detect_fraction) of them, chosen by a
/// seeded shuffle, become s3_detect pairs and the rest s3_explain pairs whose
/// target is the teacher response verbatim. The output order is a seeded
/// shuffle too. Entries whose conclusion disagrees with ground truth are
/// skipped (label_mismatch). Throws DomainError unless 0 <= fraction <= 1.
InstructionSet build_stage3(const AnnotatedManifest& am, double detect_fraction, std::uint64_t seed);

/// Pass-through for external general video-understanding data: expects JSONL
/// rows with {id, media, prompt, target} and tags them s1_general.
std::vector<InstructionExample> convert_stage1(std::string_view jsonl, std::string_view source = "<stage1>");

std::string instructions_to_jsonl(const std::vector<InstructionExample>& examples);
std::vector<InstructionExample> read_instructions(const std::filesystem::path& path);

}  // namespace ivyfake
