// Copyright 2026 The ivyfake Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ivyfake/protocol.hpp"

namespace ivyfake {

/// Connection and sampling settings for any chat-completion style backend.
/// Used for the distillation teacher, the detector, and the judge.
struct TeacherConfig {
  /// Full URL of the completions endpoint, e.g.
  /// "https://api.example.com/v1/chat/completions".
  std::string endpoint;
  std::string model_name;
  int max_attempts = 3;
  double timeout_s = 120.0;
  double temperature = 0.7;
  Conditioning label_conditioning = Conditioning::on;
  /// Name of the environment variable holding the bearer token.
  std::string api_key_env = "IVYFAKE_API_KEY";
  double backoff_base_s = 1.0;
  double backoff_max_s = 30.0;
  /// Ask the backend for token log-probabilities (confidence proxy).
  bool request_logprobs = false;

  /// Throws ConfigError when an invariant is violated.
  void validate() const;
};

TeacherConfig teacher_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TeacherConfig& c);

struct ContentPart {
  enum class Kind { text, image };
  Kind kind = Kind::text;
  std::string text;
  /// data: URL or remote URL for image parts.
  std::string image_url;

  static ContentPart from_text(std::string t) { return {Kind::text, std::move(t), {}}; }
  static ContentPart from_image_url(std::string url) { return {Kind::image, {}, std::move(url)}; }
};

struct ChatMessage {
  std::string role;
  std::vector<ContentPart> content;
};

struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  bool logprobs = false;
};

/// OpenAI-compatible request body.
nlohmann::json to_wire(const ChatRequest& r);

struct TokenLogprob {
  std::string token;
  double logprob = 0.0;
};

struct ChatReply {
  std::string content;
  std::vector<TokenLogprob> logprobs;
};

/// Extracts choices[0].message.content (+ logprobs) from a completion body.
/// Throws ParseError when the body has no message content.
ChatReply reply_from_wire(const nlohmann::json& body);

/// One request, one attempt. Implementations throw TransportError on failure.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual ChatReply complete(const ChatRequest& request) = 0;
};

/// HTTP(S) POST to TeacherConfig::endpoint. Safe to share between threads;
/// every call opens its own connection.
class HttpChatBackend final : public ChatBackend {
 public:
  explicit HttpChatBackend(TeacherConfig config);
  ChatReply complete(const ChatRequest& request) override;

 private:
  TeacherConfig config_;
  std::string scheme_host_port_;
  std::string path_;
  std::string api_key_;
};

/// Splits "http://host:port/path" into ("http://host:port", "/path").
std::pair<std::string, std::string> split_endpoint(const std::string& url);

/// Result of asking for a `<think>/<conclusion>` reply with retries.
struct StructuredCall {
  ParseResult response;
  int attempts = 0;
  std::optional<ChatReply> reply;
};

using SleepFn = std::function<void(std::chrono::duration<double>)>;

/// Issues up to config.max_attempts calls, retrying on retryable transport
/// errors and on non-compliant replies with exponential backoff and jitter.
/// Returns the first compliant reply, or the last NonCompliant one. Throws
/// TransportError when no attempt produced any reply (or on a non-retryable
/// transport failure).
StructuredCall call_for_structured_response(ChatBackend& backend, const TeacherConfig& config,
                                            const ChatRequest& request,
                                            const SleepFn& sleep = {});

/// Delay before retry number `attempt` (1-based): base*2^(attempt-1) capped at
/// max, with full jitter.
std::chrono::duration<double> backoff_delay(const TeacherConfig& config, int attempt);

}  // namespace ivyfake
