// Copyright 2026 The ivyfake Authors
// SPDX-License-Identifier: Apache-2.0

#include "ivyfake/instructions.hpp"

#include <algorithm>
#include <cmath>

#include "ivyfake/errors.hpp"
#include "ivyfake/jsonl.hpp"
#include "rng.hpp"

namespace ivyfake {
namespace {

constexpr std::string_view kClassifyPrompt =
    "Is this content real or fake? Answer with one word: real or fake.";

/// Entries usable for instruction data; the rest go to `skipped`.
std::vector<const AnnotatedSample*> usable(const AnnotatedManifest& am, bool need_agreement,
                                           std::vector<SkippedRecord>& skipped) {
  std::vector<const AnnotatedSample*> out;
  for (const auto& e : am.entries) {
    const auto* r = std::get_if<StructuredResponse>(&e.record.response);
    if (!r) {
      skipped.push_back({e.sample.id, "non_compliant"});
    } else if (e.record.label_consistent == Consistency::no ||
               (need_agreement && r->conclusion != e.sample.label)) {
      skipped.push_back({e.sample.id, "label_mismatch"});
    } else {
      out.push_back(&e);
    }
  }
  return out;
}

InstructionExample classify_example(const AnnotatedSample& e, Stage stage) {
  return {e.sample.id, e.sample.path, std::string(kClassifyPrompt), std::string(to_string(e.sample.label)),
          stage};
}

}  // namespace

std::string_view to_string(Stage s) noexcept {
  switch (s) {
    case Stage::s1_general: return "s1_general";
    case Stage::s2: return "s2";
    case Stage::s3_detect: return "s3_detect";
    case Stage::s3_explain: return "s3_explain";
  }
  return "unknown";
}

Stage parse_stage(std::string_view s) {
  for (auto st : {Stage::s1_general, Stage::s2, Stage::s3_detect, Stage::s3_explain}) {
    if (to_string(st) == s) return st;
  }
  throw ParseError("unknown stage '" + std::string(s) + "'");
}

nlohmann::ordered_json to_json(const InstructionExample& e) {
  nlohmann::ordered_json j;
  j["id"] = e.sample_id;
  j["media"] = e.media_ref;
  j["prompt"] = e.prompt;
  j["target"] = e.target;
  j["stage"] = to_string(e.stage);
  return j;
}

InstructionExample example_from_json(const nlohmann::json& j) {
  try {
    return {j.at("id").get<std::string>(), j.at("media").get<std::string>(),
            j.at("prompt").get<std::string>(), j.at("target").get<std::string>(),
            parse_stage(j.at("stage").get<std::string>())};
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed instruction example: ") + e.what());
  }
}

InstructionSet build_stage2(const AnnotatedManifest& am) {
  InstructionSet out;
  for (const auto* e : usable(am, /*need_agreement=*/false, out.skipped)) {
    out.examples.push_back(classify_example(*e, Stage::s2));
  }
  return out;
}

InstructionSet build_stage3(const AnnotatedManifest& am, double detect_fraction, std::uint64_t seed) {
  if (!(detect_fraction >= 0.0 && detect_fraction <= 1.0)) {
    throw DomainError("detect_fraction must lie in [0, 1]");
  }
  InstructionSet out;
  auto items = usable(am, /*need_agreement=*/true, out.skipped);
  const auto n_detect = static_cast<std::size_t>(std::llround(static_cast<double>(items.size()) * detect_fraction));

  std::sort(items.begin(), items.end(),
            [](const AnnotatedSample* a, const AnnotatedSample* b) { return a->sample.id < b->sample.id; });
  detail::seeded_shuffle(items, seed);
  for (std::size_t i = 0; i < items.size(); ++i) {
    const AnnotatedSample& e = *items[i];
    if (i < n_detect) {
      out.examples.push_back(classify_example(e, Stage::s3_detect));
      continue;
    }
    const auto& response = std::get<StructuredResponse>(e.record.response);
    const auto prompt = render_prompt(detect_kind(e.sample.modality), e.sample.modality, std::nullopt);
    out.examples.push_back({e.sample.id, e.sample.path, prompt.user, response.raw, Stage::s3_explain});
  }
  detail::seeded_shuffle(out.examples, detail::splitmix64(seed ^ detail::fnv1a64("stage3-order")));
  return out;
}

std::vector<InstructionExample> convert_stage1(std::string_view jsonl, std::string_view source) {
  std::vector<InstructionExample> out;
  for (const auto& row : parse_jsonl(jsonl, source)) {
    try {
      out.push_back({row.at("id").get<std::string>(), row.at("media").get<std::string>(),
                     row.at("prompt").get<std::string>(), row.at("target").get<std::string>(),
                     Stage::s1_general});
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string(source) + ": " + e.what());
    }
  }
  return out;
}

std::string instructions_to_jsonl(const std::vector<InstructionExample>& examples) {
  std::string out;
  for (const auto& e : examples) out += to_json(e).dump() + '\n';
  return out;
}

std::vector<InstructionExample> read_instructions(const std::filesystem::path& path) {
  std::vector<InstructionExample> out;
  for (const auto& row : parse_jsonl(read_text_file(path), path.string())) {
    out.push_back(example_from_json(row));
  }
  return out;
}

}  // namespace ivyfake
