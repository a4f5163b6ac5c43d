// Copyright 2026 The ivyfake Authors
// SPDX-License-Identifier: Apache-2.0

#include "ivyfake/gateway.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>

#include "ivyfake/distill.hpp"
#include "ivyfake/errors.hpp"
#include "ivyfake/jsonl.hpp"

namespace ivyfake {
namespace {

bool is_prefix_of(std::string_view part, std::string_view word) {
  return !part.empty() && part.size() <= word.size() && word.substr(0, part.size()) == part;
}

}  // namespace

nlohmann::ordered_json to_json(const DetectionResult& r) {
  nlohmann::ordered_json j;
  j["sample_id"] = r.sample_id;
  j["verdict"] = to_string(r.verdict);
  j["think"] = r.think;
  auto dims = nlohmann::ordered_json::array();
  for (const auto d : r.dimensions) dims.push_back(to_string(d));
  j["dimensions"] = std::move(dims);
  j["confidence"] = r.confidence ? nlohmann::ordered_json(*r.confidence) : nlohmann::ordered_json(nullptr);
  j["latency_ms"] = r.latency_ms;
  j["attempts"] = r.attempts;
  return j;
}

std::optional<double> verdict_confidence(const std::vector<TokenLogprob>& logprobs, Label verdict) {
  std::string text;
  std::vector<std::size_t> starts;
  for (const auto& t : logprobs) {
    starts.push_back(text.size());
    text += t.token;
  }
  const auto marker = text.find(kConclusionOpen);
  if (marker == std::string::npos) return std::nullopt;
  const auto body = marker + kConclusionOpen.size();

  for (std::size_t i = 0; i < logprobs.size(); ++i) {
    const auto end = starts[i] + logprobs[i].token.size();
    if (end <= body) continue;
    const auto from = std::max(starts[i], body) - starts[i];
    const auto piece = to_lower_ascii(trim(std::string_view(logprobs[i].token).substr(from)));
    if (piece.empty()) continue;
    const auto word = to_string(verdict);
    if (!is_prefix_of(piece, word) && piece.rfind(word, 0) != 0) return std::nullopt;
    const double p = std::clamp(std::exp(logprobs[i].logprob), 0.0, 1.0);
    return verdict == Label::fake ? p : 1.0 - p;
  }
  return std::nullopt;
}

DetectionResult detect(const std::filesystem::path& media, Modality modality, std::string sample_id,
                       ChatBackend& backend, const TeacherConfig& cfg, const DetectOptions& options) {
  const auto started = std::chrono::steady_clock::now();
  if (!std::filesystem::is_regular_file(media)) throw IoError("no such media file " + media.string());

  MediaProbe probe;
  if (modality == Modality::video && options.duration_s) {
    probe.duration_s = options.duration_s;
  } else {
    probe = options.probe ? options.probe(media, modality) : probe_media(media, modality);
  }
  check_media_limits(media, modality, probe, options.limits);

  const OpenCvMediaEncoder default_encoder;
  const MediaEncoder& encoder = options.encoder ? *options.encoder : default_encoder;
  const auto prompt = render_prompt(detect_kind(modality), modality, std::nullopt, Conditioning::off);
  auto parts = encoder.encode(media, modality, probe.duration_s);
  const ChatRequest req = build_request(prompt, std::move(parts), cfg);

  const StructuredCall call = call_for_structured_response(backend, cfg, req, options.sleep);
  const auto* response = std::get_if<StructuredResponse>(&call.response);
  if (!response) {
    const auto& nc = std::get<NonCompliant>(call.response);
    throw UndeterminedError("no compliant verdict after " + std::to_string(call.attempts) +
                            " attempt(s); last reply was " + std::string(to_string(nc.reason)));
  }

  DetectionResult r;
  r.sample_id = std::move(sample_id);
  r.verdict = response->conclusion;
  r.think = response->think;
  r.dimensions = tag_dimensions(response->think, modality);
  if (call.reply) r.confidence = verdict_confidence(call.reply->logprobs, r.verdict);
  r.attempts = call.attempts;
  r.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
  return r;
}

LabeledPrediction to_prediction(const DetectionResult& r, const MediaSample& sample) {
  return {sample.id, sample.label, r.verdict, r.confidence, sample.generator};
}

GatewayConfig gateway_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static constexpr std::array<std::string_view, 10> kKeys{
      "teacher", "detector", "judge", "limits", "seed", "parallelism", "detect_fraction",
      "judge_rounds", "thresholds", "server"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(kKeys.begin(), kKeys.end(), key) == kKeys.end()) {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  try {
    GatewayConfig c;
    if (j.contains("teacher")) c.teacher = teacher_config_from_json(j.at("teacher"));
    if (j.contains("detector")) c.detector = teacher_config_from_json(j.at("detector"));
    if (j.contains("judge")) c.judge = teacher_config_from_json(j.at("judge"));
    if (j.contains("limits")) c.limits = media_limits_from_json(j.at("limits"));
    if (j.contains("thresholds")) c.thresholds = thresholds_from_json(j.at("thresholds"));
    c.seed = j.value("seed", c.seed);
    c.parallelism = j.value("parallelism", c.parallelism);
    c.detect_fraction = j.value("detect_fraction", c.detect_fraction);
    c.judge_rounds = j.value("judge_rounds", c.judge_rounds);
    if (const auto it = j.find("server"); it != j.end()) {
      c.server.host = it->value("host", c.server.host);
      c.server.port = it->value("port", c.server.port);
      c.server.threads = it->value("threads", c.server.threads);
    }
    if (c.parallelism < 1) throw ConfigError("parallelism must be >= 1");
    if (!(c.detect_fraction >= 0.0 && c.detect_fraction <= 1.0)) {
      throw ConfigError("detect_fraction must lie in [0, 1]");
    }
    if (c.judge_rounds < 1) throw ConfigError("judge_rounds must be >= 1");
    if (c.server.port < 0 || c.server.port > 65535) throw ConfigError("server.port out of range");
    if (c.server.threads < 1) throw ConfigError("server.threads must be >= 1");
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
}

GatewayConfig load_gateway_config(const std::filesystem::path& path) {
  const auto text = read_text_file(path);
  auto j = nlohmann::json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) throw ConfigError(path.string() + " is not valid JSON");
  return gateway_config_from_json(j);
}

nlohmann::ordered_json taxonomy_json() {
  nlohmann::ordered_json j;
  auto dims = nlohmann::ordered_json::array();
  auto add = [&](Dimension d) {
    nlohmann::ordered_json e;
    e["name"] = to_string(d);
    e["axis"] = to_string(axis_of(d));
    dims.push_back(std::move(e));
  };
  for (const auto d : kSpatialDimensions) add(d);
  for (const auto d : kTemporalDimensions) add(d);
  j["dimensions"] = std::move(dims);
  j["spatial"] = kSpatialDimensions.size();
  j["temporal"] = kTemporalDimensions.size();
  return j;
}

}  // namespace ivyfake
