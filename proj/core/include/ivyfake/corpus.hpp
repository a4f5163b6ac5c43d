// Copyright 2026 The ivyfake Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ivyfake/media.hpp"
#include "ivyfake/types.hpp"

namespace ivyfake {

/// One image or video with its ground truth.
///
/// Real samples carry a generator of the form "real-<source>" so that
/// stratification treats real provenance the same way as a generator.
struct MediaSample {
  std::string id;
  Modality modality = Modality::image;
  Label label = Label::fake;
  std::string generator;
  std::string source;
  std::string path;
  std::optional<int> width;
  std::optional<int> height;
  std::optional<double> duration_s;

  friend bool operator==(const MediaSample&, const MediaSample&) = default;
};

inline constexpr int kManifestSchemaVersion = 1;
inline constexpr std::string_view kManifestHeader = "#ivyfake-manifest v1";

struct Manifest {
  int schema_version = kManifestSchemaVersion;
  std::string created_at;
  std::vector<MediaSample> samples;
};

nlohmann::ordered_json to_json(const MediaSample& s);
MediaSample sample_from_json(const nlohmann::json& j);

/// Sorts samples ascending by id (canonical order).
void canonicalize(Manifest& m);

/// Header line followed by one JSON object per sample.
void write_manifest(std::ostream& out, const Manifest& m);
std::string manifest_to_string(const Manifest& m);
Manifest read_manifest(std::istream& in, std::string_view source = "<manifest>");
Manifest load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const Manifest& m);

/// "<generator>|<label>"
std::string stratum_key(const MediaSample& s);

// ---------------------------------------------------------------------------
// Ingestion

/// Maps files matching `glob` (fnmatch syntax against the path relative to
/// the ingest root, '/'-separated) onto labels. An empty generator on a real
/// rule becomes "real-<source>".
struct IngestRule {
  std::string glob;
  Modality modality = Modality::image;
  Label label = Label::fake;
  std::string generator;
  std::string source;
};

std::vector<IngestRule> rules_from_json(const nlohmann::json& j);

/// Returns dimensions/duration or throws IoError when the file cannot be decoded.
using ProbeFn = std::function<MediaProbe(const std::filesystem::path&, Modality)>;

struct IngestOptions {
  std::size_t threads = 1;
  /// Defaults to the OpenCV-backed probe.
  ProbeFn probe;
  /// ISO-8601 UTC; empty means SOURCE_DATE_EPOCH or the current time.
  std::string created_at;
};

struct SkipReport {
  std::string path;
  std::string reason;
};

struct IngestResult {
  Manifest manifest;
  std::vector<SkipReport> skipped;
  std::vector<std::string> unmatched;
  std::vector<std::string> warnings;
};

IngestResult ingest_directory(const std::filesystem::path& root,
                              const std::vector<IngestRule>& rules,
                              const IngestOptions& options = {});

// ---------------------------------------------------------------------------
// Validation

enum class ViolationKind {
  duplicate_id,
  missing_file,
  bad_duration,
  modality_field_mismatch,
  bad_dimensions,
  real_generator,
  empty_field,
  not_canonical,
};

std::string_view to_string(ViolationKind k) noexcept;

struct Violation {
  ViolationKind kind;
  std::string sample_id;
  std::string detail;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool valid() const noexcept { return violations.empty(); }
  std::size_t count(ViolationKind k) const noexcept;
};

struct ValidationOptions {
  bool check_files = true;
  /// Allowed generators for real samples; empty means any "real-" prefix.
  std::vector<std::string> real_generators;
};

ValidationReport validate_manifest(const Manifest& m, const ValidationOptions& options = {});

// ---------------------------------------------------------------------------
// Sampling and splitting

enum class QuotaMode { proportional, fixed_per_generator };

struct SamplingSpec {
  QuotaMode quota_mode = QuotaMode::proportional;
  std::size_t total = 0;
  std::uint64_t seed = 0;
};

/// Largest-remainder apportionment of `total` over `sizes`; ties go to the
/// lower index. Exposed for testing.
std::vector<std::size_t> apportion(const std::vector<std::size_t>& sizes, std::size_t total);

Manifest stratified_sample(const Manifest& m, const SamplingSpec& spec);

struct Split {
  Manifest train;
  Manifest test;
};

/// Stratified by (generator,label). round(|m|*test_fraction) samples go to test.
Split split(const Manifest& m, double test_fraction, std::uint64_t seed);

}  // namespace ivyfake
