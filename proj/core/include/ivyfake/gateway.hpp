// Copyright 2026 The ivyfake Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ivyfake/chat_backend.hpp"
#include "ivyfake/corpus.hpp"
#include "ivyfake/evalkit.hpp"
#include "ivyfake/media.hpp"
#include "ivyfake/protocol.hpp"

namespace ivyfake {

struct DetectionResult {
  std::string sample_id;
  Label verdict = Label::fake;
  std::string think;
  std::set<Dimension> dimensions;
  /// Probability that the item is fake, from verdict-token log-probabilities.
  std::optional<double> confidence;
  double latency_ms = 0.0;
  int attempts = 0;
};

nlohmann::ordered_json to_json(const DetectionResult& r);

/// Fake-probability read off the first verdict token after `<conclusion>`
/// in an OpenAI-style token log-probability list. Absent when the list is
/// empty or holds no such token.
std::optional<double> verdict_confidence(const std::vector<TokenLogprob>& logprobs, Label verdict);

struct DetectOptions {
  MediaLimits limits;
  /// Defaults to OpenCvMediaEncoder.
  const MediaEncoder* encoder = nullptr;
  /// Defaults to probe_media.
  ProbeFn probe;
  /// Skips probing the duration when known.
  std::optional<double> duration_s;
  SleepFn sleep;
};

/// Renders the detect prompt, encodes the media (tiles for images, 1-fps
/// frames for videos), and asks the backend for a verdict. Throws
/// MediaLimitError before any network call for oversize media,
/// UndeterminedError when no compliant reply arrives, and TransportError on
/// backend failure.
DetectionResult detect(const std::filesystem::path& media, Modality modality, std::string sample_id,
                       ChatBackend& backend, const TeacherConfig& cfg, const DetectOptions& options = {});

/// Prediction row for evaluation; score is the confidence when present.
LabeledPrediction to_prediction(const DetectionResult& r, const MediaSample& sample);

// ---------------------------------------------------------------------------
// Configuration

struct ServerConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::size_t threads = 8;
};

/// One JSON file with backend, limit, seed and server sections. Secrets are
/// never read from it; each backend names the environment variable holding
/// its API key.
struct GatewayConfig {
  TeacherConfig teacher;
  TeacherConfig detector;
  TeacherConfig judge;
  MediaLimits limits;
  std::uint64_t seed = 0;
  std::size_t parallelism = 4;
  double detect_fraction = 0.5;
  int judge_rounds = 5;
  Thresholds thresholds;
  ServerConfig server;
};

GatewayConfig gateway_config_from_json(const nlohmann::json& j);
GatewayConfig load_gateway_config(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// HTTP service

/// Endpoints:
///   GET  /v1/healthz
///   GET  /v1/taxonomy
///   POST /v1/detect    multipart (media, modality, id, duration_s) or JSON {url, modality, id}
///   POST /v1/evaluate  predictions JSONL body -> DetectionReport JSON
class DetectionService {
 public:
  DetectionService(GatewayConfig config, std::shared_ptr<ChatBackend> detector,
                   std::shared_ptr<const MediaEncoder> encoder = nullptr, ProbeFn probe = {});
  ~DetectionService();
  DetectionService(const DetectionService&) = delete;
  DetectionService& operator=(const DetectionService&) = delete;

  /// Binds to config.server.host:port; port 0 picks a free port. Returns the bound port.
  int bind();
  /// Serves until stop(); call bind() first.
  void listen();
  void stop();
  bool running() const;
  std::uint64_t requests_served() const noexcept;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// JSON served by /v1/taxonomy.
nlohmann::ordered_json taxonomy_json();

}  // namespace ivyfake
