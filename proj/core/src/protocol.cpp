// Copyright 2026 The ivyfake Authors
// SPDX-License-Identifier: Apache-2.0

#include "ivyfake/protocol.hpp"

#include <algorithm>
#include <array>

#include "embedded.hpp"
#include "ivyfake/errors.hpp"
#include "ivyfake/hashing.hpp"

namespace ivyfake {
namespace {

constexpr std::string_view kVersion = "v1";
constexpr std::string_view kDistillUser = "This {file_type} is {label}. Explain the reason.";
constexpr std::string_view kDetectUser =
    "Is this {file_type} real or fake? Provide the reasoning process, then give the final "
    "conclusion.";
constexpr std::string_view kJudgeUser =
    "GroundTruth:\n{ground_truth}\n\nModelOutput:\n{model_output}\n\n"
    "Return only a JSON object with integer scores from 1 to 5 under the keys "
    "\"Completeness\", \"Relevance\", \"Level of Detail\" and \"Explanation\".";

constexpr std::array<std::string_view, 4> kFixtureNames{
    "prompts/v1/image_system.txt", "prompts/v1/video_system.txt",
    "prompts/v1/judge_system.txt", "taxonomy.json"};

std::string fixture_text(std::string_view name) {
  return std::string(trim(detail::embedded_file(name)));
}

/// Drops the sentence tying the conclusion to a user-provided label; detection
/// prompts carry no label.
std::string without_label_alignment(std::string system) {
  constexpr std::string_view kSentence = " <conclusion> content must strictly align";
  if (const auto pos = system.find(kSentence); pos != std::string::npos) {
    const auto end = system.find('.', pos);
    system.erase(pos, end == std::string::npos ? std::string::npos : end + 1 - pos);
  }
  return system;
}

std::string replace_all(std::string text, std::string_view key, std::string_view value) {
  for (auto pos = text.find(key); pos != std::string::npos; pos = text.find(key, pos + value.size())) {
    text.replace(pos, key.size(), value);
  }
  return text;
}

Modality modality_of(TemplateKind k) {
  switch (k) {
    case TemplateKind::distill_image:
    case TemplateKind::detect_image: return Modality::image;
    case TemplateKind::distill_video:
    case TemplateKind::detect_video: return Modality::video;
    case TemplateKind::judge: break;
  }
  throw TemplateError("judge prompts have no file type");
}

std::size_t count_occurrences(std::string_view text, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string_view::npos; pos = text.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

bool all_space(std::string_view s) { return trim(s).empty(); }

}  // namespace

std::string_view to_string(TemplateKind k) noexcept {
  switch (k) {
    case TemplateKind::distill_image: return "distill_image";
    case TemplateKind::distill_video: return "distill_video";
    case TemplateKind::detect_image: return "detect_image";
    case TemplateKind::detect_video: return "detect_video";
    case TemplateKind::judge: return "judge";
  }
  return "unknown";
}

const PromptTemplate& prompt_template(TemplateKind kind) {
  static const std::array<PromptTemplate, 5> templates = [] {
    const std::string image = fixture_text("prompts/v1/image_system.txt");
    const std::string video = fixture_text("prompts/v1/video_system.txt");
    return std::array<PromptTemplate, 5>{{
        {TemplateKind::distill_image, std::string(kVersion), image, std::string(kDistillUser)},
        {TemplateKind::distill_video, std::string(kVersion), video, std::string(kDistillUser)},
        {TemplateKind::detect_image, std::string(kVersion), without_label_alignment(image),
         std::string(kDetectUser)},
        {TemplateKind::detect_video, std::string(kVersion), without_label_alignment(video),
         std::string(kDetectUser)},
        {TemplateKind::judge, std::string(kVersion), fixture_text("prompts/v1/judge_system.txt"),
         std::string(kJudgeUser)},
    }};
  }();
  return templates[static_cast<std::size_t>(kind)];
}

TemplateKind distill_kind(Modality m) noexcept {
  return m == Modality::image ? TemplateKind::distill_image : TemplateKind::distill_video;
}

TemplateKind detect_kind(Modality m) noexcept {
  return m == Modality::image ? TemplateKind::detect_image : TemplateKind::detect_video;
}

RenderedPrompt render_prompt(TemplateKind kind, Modality file_type, std::optional<Label> label,
                             Conditioning conditioning) {
  if (kind == TemplateKind::judge) {
    throw TemplateError("judge prompts are rendered from a GroundTruth/ModelOutput pair");
  }
  if (modality_of(kind) != file_type) {
    throw TemplateError(std::string(to_string(kind)) + " cannot render a " +
                        std::string(to_string(file_type)));
  }
  const bool distill = kind == TemplateKind::distill_image || kind == TemplateKind::distill_video;
  const bool wants_label = distill && conditioning == Conditioning::on;
  if (wants_label && !label) {
    throw TemplateError(std::string(to_string(kind)) + " with label conditioning requires a label");
  }
  if (!wants_label && label) {
    throw TemplateError(std::string(to_string(kind)) + " must not be given a label here");
  }

  const auto& tpl = prompt_template(kind);
  std::string user = wants_label ? tpl.user_text : std::string(kDetectUser);
  user = replace_all(std::move(user), "{file_type}", to_string(file_type));
  if (label) user = replace_all(std::move(user), "{label}", to_string(*label));
  if (user.find_first_of("{}") != std::string::npos) {
    throw TemplateError("unsubstituted placeholder in '" + user + "'");
  }
  return {tpl.system_text, std::move(user)};
}

std::vector<FixtureInfo> protocol_fixtures() {
  std::vector<FixtureInfo> out;
  for (const auto name : kFixtureNames) {
    const auto content = detail::embedded_file(name);
    out.push_back({std::string(name), sha256_hex(content), content.size()});
  }
  return out;
}

// ---------------------------------------------------------------------------

bool same_content(const StructuredResponse& a, const StructuredResponse& b) noexcept {
  return a.think == b.think && a.conclusion == b.conclusion;
}

std::string_view to_string(NonComplianceReason r) noexcept {
  switch (r) {
    case NonComplianceReason::missing_think: return "missing_think";
    case NonComplianceReason::missing_conclusion: return "missing_conclusion";
    case NonComplianceReason::multiple_blocks: return "multiple_blocks";
    case NonComplianceReason::bad_verdict: return "bad_verdict";
    case NonComplianceReason::interleaved_tags: return "interleaved_tags";
    case NonComplianceReason::extra_text: return "extra_text";
  }
  return "unknown";
}

NonComplianceReason parse_non_compliance_reason(std::string_view s) {
  for (auto r : {NonComplianceReason::missing_think, NonComplianceReason::missing_conclusion,
                 NonComplianceReason::multiple_blocks, NonComplianceReason::bad_verdict,
                 NonComplianceReason::interleaved_tags, NonComplianceReason::extra_text}) {
    if (to_string(r) == s) return r;
  }
  throw ParseError("unknown non-compliance reason '" + std::string(s) + "'");
}

ParseResult parse_response(std::string_view text) {
  auto reject = [&](NonComplianceReason r) { return ParseResult{NonCompliant{r, std::string(text)}}; };

  const std::size_t think_open = count_occurrences(text, kThinkOpen);
  const std::size_t think_close = count_occurrences(text, kThinkClose);
  const std::size_t concl_open = count_occurrences(text, kConclusionOpen);
  const std::size_t concl_close = count_occurrences(text, kConclusionClose);

  if (think_open > 1 || think_close > 1 || concl_open > 1 || concl_close > 1) {
    return reject(NonComplianceReason::multiple_blocks);
  }
  if (think_open == 0 || think_close == 0) return reject(NonComplianceReason::missing_think);
  if (concl_open == 0 || concl_close == 0) return reject(NonComplianceReason::missing_conclusion);

  const auto p_think_open = text.find(kThinkOpen);
  const auto p_think_close = text.find(kThinkClose);
  const auto p_concl_open = text.find(kConclusionOpen);
  const auto p_concl_close = text.find(kConclusionClose);
  if (!(p_think_open < p_think_close && p_think_close < p_concl_open && p_concl_open < p_concl_close)) {
    return reject(NonComplianceReason::interleaved_tags);
  }

  const auto think_begin = p_think_open + kThinkOpen.size();
  const auto between_begin = p_think_close + kThinkClose.size();
  const auto verdict_begin = p_concl_open + kConclusionOpen.size();
  const auto tail_begin = p_concl_close + kConclusionClose.size();
  if (!all_space(text.substr(0, p_think_open)) ||
      !all_space(text.substr(between_begin, p_concl_open - between_begin)) ||
      !all_space(text.substr(tail_begin))) {
    return reject(NonComplianceReason::extra_text);
  }

  const auto verdict = match_verdict(text.substr(verdict_begin, p_concl_close - verdict_begin));
  if (!verdict) return reject(NonComplianceReason::bad_verdict);

  StructuredResponse r;
  r.think = std::string(text.substr(think_begin, p_think_close - think_begin));
  r.conclusion = *verdict;
  r.raw = std::string(text);
  return r;
}

ParseResult parse_and_tag(std::string_view text, Modality modality) {
  auto result = parse_response(text);
  if (auto* r = std::get_if<StructuredResponse>(&result)) r->dimensions = tag_dimensions(r->think, modality);
  return result;
}

std::string serialize_response(std::string_view think, Label conclusion) {
  std::string out;
  out.reserve(think.size() + 48);
  out.append(kThinkOpen).append(think).append(kThinkClose);
  out.append(kConclusionOpen).append(to_string(conclusion)).append(kConclusionClose);
  return out;
}

}  // namespace ivyfake
