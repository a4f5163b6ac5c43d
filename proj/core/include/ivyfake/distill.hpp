// Copyright 2026 The ivyfake Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ivyfake/chat_backend.hpp"
#include "ivyfake/corpus.hpp"
#include "ivyfake/media.hpp"
#include "ivyfake/protocol.hpp"

namespace ivyfake {

enum class Consistency { yes, no, not_applicable };

std::string_view to_string(Consistency c) noexcept;
Consistency parse_consistency(std::string_view s);

struct AnnotationRecord {
  std::string sample_id;
  /// sha256 over the rendered prompt, model name and temperature.
  std::string request_fingerprint;
  ParseResult response;
  int attempts_used = 0;
  Conditioning conditioning = Conditioning::on;
  /// yes iff conditioning is on and the conclusion equals the sample label;
  /// no when conditioning is on and they differ; n/a otherwise.
  Consistency label_consistent = Consistency::not_applicable;
};

nlohmann::ordered_json to_json(const AnnotationRecord& r);
AnnotationRecord record_from_json(const nlohmann::json& j);

std::string request_fingerprint(const RenderedPrompt& prompt, const TeacherConfig& cfg);

/// Renders the distill prompt for `sample` under cfg.label_conditioning.
RenderedPrompt distill_prompt(const MediaSample& sample, const TeacherConfig& cfg);

/// Builds the chat request: system text, then a user turn holding the media
/// parts followed by the prompt text.
ChatRequest build_request(const RenderedPrompt& prompt, std::vector<ContentPart> media,
                          const TeacherConfig& cfg);

/// Annotates one sample. NonCompliant replies after all attempts become a
/// record, not an exception; transport failures propagate as TransportError.
AnnotationRecord distill_sample(const MediaSample& sample, const TeacherConfig& cfg,
                                ChatBackend& backend, const MediaEncoder& encoder,
                                const SleepFn& sleep = {});

struct AnnotatedSample {
  MediaSample sample;
  AnnotationRecord record;
};

inline constexpr std::string_view kAnnotationsHeader = "#ivyfake-annotations v1";

/// Canonical order: ascending sample id.
struct AnnotatedManifest {
  std::string created_at;
  std::vector<AnnotatedSample> entries;
};

void write_annotations(std::ostream& out, const AnnotatedManifest& am);
std::string annotations_to_string(const AnnotatedManifest& am);
AnnotatedManifest read_annotations(std::istream& in, std::string_view source = "<annotations>");
AnnotatedManifest load_annotations(const std::filesystem::path& path);
void save_annotations(const std::filesystem::path& path, const AnnotatedManifest& am);

struct DistillOptions {
  std::size_t parallelism = 1;
  /// Append-only JSONL of AnnotationRecord; empty disables checkpointing.
  std::filesystem::path checkpoint;
  /// Defaults to OpenCvMediaEncoder.
  const MediaEncoder* encoder = nullptr;
  SleepFn sleep;
  /// Workers stop picking up new samples once set; in-flight samples finish
  /// and are checkpointed.
  const std::atomic<bool>* cancel = nullptr;
  /// Extra passes over samples whose transport failed.
  int max_requeues = 1;
  /// Called after each record is checkpointed (from worker threads, serialized).
  std::function<void(const AnnotationRecord&)> on_record;
};

struct DistillResult {
  AnnotatedManifest annotated;
  /// Backend calls issued by this run (retries included).
  std::size_t new_calls = 0;
  std::size_t resumed = 0;
  std::size_t completed = 0;
  /// True when stopped by the cancel flag; `annotated` is then empty.
  bool cancelled = false;
};

/// Reads an existing checkpoint. A trailing line without newline (torn
/// write) is dropped and the file truncated to the last complete record.
std::vector<AnnotationRecord> load_checkpoint(const std::filesystem::path& path);

/// Annotates every sample of `m` with a bounded worker pool, resuming from
/// options.checkpoint. Throws CheckpointMismatch before any backend call when
/// the checkpoint holds unknown ids or stale fingerprints, and TransportError
/// when samples still fail after requeueing (the checkpoint keeps the rest).
DistillResult run_distill(const Manifest& m, const TeacherConfig& cfg, ChatBackend& backend,
                          const DistillOptions& options = {});

struct Rejection {
  AnnotatedSample entry;
  /// "non_compliant:<reason>" or "label_mismatch".
  std::string reason;
};

struct FilterResult {
  AnnotatedManifest kept;
  std::vector<Rejection> rejected;
};

/// kept = compliant and not label-inconsistent.
FilterResult filter_compliant(const AnnotatedManifest& am);

nlohmann::ordered_json to_json(const Rejection& r);

struct LabelAblation {
  double acc_with = 0.0;
  double acc_without = 0.0;
  std::size_t compliant_with = 0;
  std::size_t compliant_without = 0;
};

/// Accuracy of teacher conclusions against ground truth over compliant
/// records, with and without label conditioning. Both inputs must cover the
/// same ids; throws DomainError on mismatch or when a side has no compliant
/// record.
LabelAblation measure_label_ablation(const AnnotatedManifest& with_label,
                                     const AnnotatedManifest& without_label);

}  // namespace ivyfake
