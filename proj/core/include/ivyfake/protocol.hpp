// Copyright 2026 The ivyfake Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "ivyfake/types.hpp"

namespace ivyfake {

// ---------------------------------------------------------------------------
// Artifact taxonomy: 8 spatial + 4 temporal dimensions.

enum class Axis { spatial, temporal };

enum class Dimension {
  ImpracticalLuminosity,
  LocalizedBlur,
  IllegibleLetters,
  DistortedComponents,
  OmittedComponents,
  SpatialRelationships,
  ChromaticIrregularity,
  AbnormalTexture,
  LuminanceDiscrepancy,
  AwkwardFacialExpression,
  DuplicatedComponents,
  NonSpatialRelationships,
};

inline constexpr std::array<Dimension, 8> kSpatialDimensions{
    Dimension::ImpracticalLuminosity, Dimension::LocalizedBlur,
    Dimension::IllegibleLetters,      Dimension::DistortedComponents,
    Dimension::OmittedComponents,     Dimension::SpatialRelationships,
    Dimension::ChromaticIrregularity, Dimension::AbnormalTexture,
};

inline constexpr std::array<Dimension, 4> kTemporalDimensions{
    Dimension::LuminanceDiscrepancy,
    Dimension::AwkwardFacialExpression,
    Dimension::DuplicatedComponents,
    Dimension::NonSpatialRelationships,
};

static_assert(kSpatialDimensions.size() == 8);
static_assert(kTemporalDimensions.size() == 4);

Axis axis_of(Dimension d) noexcept;
std::string_view to_string(Dimension d) noexcept;
std::string_view to_string(Axis a) noexcept;
Dimension parse_dimension(std::string_view name);

/// Keyword lists used for lexical dimension tagging.
class Taxonomy {
 public:
  struct Entry {
    Dimension dimension;
    std::vector<std::string> synonyms;  // normalized: lowercase words, single spaces
  };

  /// Expects {"dimensions":[{"name","axis","synonyms":[...]}]} covering all 12 names.
  static Taxonomy from_json(const nlohmann::json& j);

  const std::vector<Entry>& entries() const noexcept { return entries_; }

  /// Dimensions whose canonical name or a synonym occurs in `think` as whole
  /// words (case-insensitive). Overlapping matches resolve to the longest
  /// phrase. Image modality never yields temporal dimensions.
  std::set<Dimension> tag(std::string_view think, Modality modality) const;

 private:
  std::vector<Entry> entries_;
};

/// The shipped taxonomy fixture.
const Taxonomy& default_taxonomy();

/// Lowercases, maps every non-alphanumeric ASCII byte to a space, splits
/// CamelCase, and collapses runs of spaces.
std::string normalize_phrase(std::string_view text);

std::set<Dimension> tag_dimensions(std::string_view think, Modality modality);

// ---------------------------------------------------------------------------
// Prompt templates

enum class TemplateKind { distill_image, distill_video, detect_image, detect_video, judge };

std::string_view to_string(TemplateKind k) noexcept;

struct PromptTemplate {
  TemplateKind kind;
  std::string version;
  std::string system_text;
  /// May contain {file_type} and {label}.
  std::string user_text;
};

const PromptTemplate& prompt_template(TemplateKind kind);

struct RenderedPrompt {
  std::string system;
  std::string user;
};

enum class Conditioning { on, off };

/// Distill kinds with conditioning on require a label; every other
/// combination requires its absence. `file_type` must match the kind.
/// Throws TemplateError on violation.
RenderedPrompt render_prompt(TemplateKind kind, Modality file_type, std::optional<Label> label,
                             Conditioning conditioning = Conditioning::on);

TemplateKind distill_kind(Modality m) noexcept;
TemplateKind detect_kind(Modality m) noexcept;

struct FixtureInfo {
  std::string name;
  std::string sha256;
  std::size_t bytes = 0;
};

/// Prompt and taxonomy fixtures with checksums, for audit output.
std::vector<FixtureInfo> protocol_fixtures();

// ---------------------------------------------------------------------------
// Response grammar

inline constexpr std::string_view kThinkOpen = "<think>";
inline constexpr std::string_view kThinkClose = "</think>";
inline constexpr std::string_view kConclusionOpen = "<conclusion>";
inline constexpr std::string_view kConclusionClose = "</conclusion>";

struct StructuredResponse {
  std::string think;
  Label conclusion = Label::fake;
  std::set<Dimension> dimensions;
  std::string raw;
};

/// Equality on the semantic pair (think, conclusion).
bool same_content(const StructuredResponse& a, const StructuredResponse& b) noexcept;

enum class NonComplianceReason {
  missing_think,
  missing_conclusion,
  multiple_blocks,
  bad_verdict,
  interleaved_tags,
  extra_text,
};

std::string_view to_string(NonComplianceReason r) noexcept;
NonComplianceReason parse_non_compliance_reason(std::string_view s);

struct NonCompliant {
  NonComplianceReason reason;
  std::string raw;
};

using ParseResult = std::variant<StructuredResponse, NonCompliant>;

/// Total: every string is either a compliant response or NonCompliant.
///
/// Compliant means, after ignoring whitespace outside the blocks: exactly one
/// `<think>...</think>` followed by exactly one `<conclusion>...</conclusion>`
/// whose trimmed, case-folded body is "real" or "fake". The think body is kept
/// verbatim. When several defects apply the first of multiple_blocks,
/// missing_think, missing_conclusion, interleaved_tags, extra_text,
/// bad_verdict wins. Dimensions are left empty; see tag_dimensions.
ParseResult parse_response(std::string_view text);

/// parse_response plus dimension tagging for the given modality.
ParseResult parse_and_tag(std::string_view text, Modality modality);

std::string serialize_response(std::string_view think, Label conclusion);

inline bool is_compliant(const ParseResult& r) noexcept {
  return std::holds_alternative<StructuredResponse>(r);
}

}  // namespace ivyfake
