// Copyright 2026 The ivyfake Authors
// SPDX-License-Identifier: Apache-2.0

#include "ivyfake/chat_backend.hpp"

#include <httplib.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <random>
#include <thread>

#include "ivyfake/errors.hpp"

namespace ivyfake {
namespace {

nlohmann::json part_to_wire(const ContentPart& p) {
  if (p.kind == ContentPart::Kind::text) return {{"type", "text"}, {"text", p.text}};
  return {{"type", "image_url"}, {"image_url", {{"url", p.image_url}}}};
}

std::mt19937_64& jitter_rng() {
  thread_local std::mt19937_64 gen{std::random_device{}()};
  return gen;
}

}  // namespace

void TeacherConfig::validate() const {
  if (max_attempts < 1) throw ConfigError("max_attempts must be >= 1");
  if (!(timeout_s > 0.0)) throw ConfigError("timeout_s must be > 0");
  if (!(temperature >= 0.0)) throw ConfigError("temperature must be >= 0");
  if (!(backoff_base_s >= 0.0) || !(backoff_max_s >= 0.0)) throw ConfigError("backoff must be >= 0");
}

TeacherConfig teacher_config_from_json(const nlohmann::json& j) {
  TeacherConfig c;
  if (!j.is_object()) throw ConfigError("backend config must be an object");
  c.endpoint = j.value("endpoint", c.endpoint);
  c.model_name = j.value("model", j.value("model_name", c.model_name));
  c.max_attempts = j.value("max_attempts", c.max_attempts);
  c.timeout_s = j.value("timeout_s", c.timeout_s);
  c.temperature = j.value("temperature", c.temperature);
  c.api_key_env = j.value("api_key_env", c.api_key_env);
  c.backoff_base_s = j.value("backoff_base_s", c.backoff_base_s);
  c.backoff_max_s = j.value("backoff_max_s", c.backoff_max_s);
  c.request_logprobs = j.value("request_logprobs", c.request_logprobs);
  if (const auto it = j.find("label_conditioning"); it != j.end()) {
    if (it->is_boolean()) {
      c.label_conditioning = it->get<bool>() ? Conditioning::on : Conditioning::off;
    } else {
      const auto v = it->get<std::string>();
      if (v != "on" && v != "off") throw ConfigError("label_conditioning must be \"on\" or \"off\"");
      c.label_conditioning = v == "on" ? Conditioning::on : Conditioning::off;
    }
  }
  c.validate();
  return c;
}

nlohmann::json to_json(const TeacherConfig& c) {
  return {{"endpoint", c.endpoint},
          {"model", c.model_name},
          {"max_attempts", c.max_attempts},
          {"timeout_s", c.timeout_s},
          {"temperature", c.temperature},
          {"label_conditioning", c.label_conditioning == Conditioning::on ? "on" : "off"},
          {"api_key_env", c.api_key_env},
          {"backoff_base_s", c.backoff_base_s},
          {"backoff_max_s", c.backoff_max_s},
          {"request_logprobs", c.request_logprobs}};
}

nlohmann::json to_wire(const ChatRequest& r) {
  nlohmann::json messages = nlohmann::json::array();
  for (const auto& m : r.messages) {
    nlohmann::json content;
    if (m.content.size() == 1 && m.content.front().kind == ContentPart::Kind::text) {
      content = m.content.front().text;
    } else {
      content = nlohmann::json::array();
      for (const auto& p : m.content) content.push_back(part_to_wire(p));
    }
    messages.push_back({{"role", m.role}, {"content", std::move(content)}});
  }
  nlohmann::json body{{"model", r.model}, {"messages", std::move(messages)}, {"temperature", r.temperature}};
  if (r.logprobs) body["logprobs"] = true;
  return body;
}

ChatReply reply_from_wire(const nlohmann::json& body) {
  const auto choices = body.find("choices");
  if (choices == body.end() || !choices->is_array() || choices->empty()) {
    throw ParseError("completion body has no choices");
  }
  const auto& choice = choices->front();
  const auto message = choice.find("message");
  if (message == choice.end() || !message->contains("content")) {
    throw ParseError("completion choice has no message content");
  }
  ChatReply reply;
  const auto& content = message->at("content");
  if (content.is_string()) {
    reply.content = content.get<std::string>();
  } else if (content.is_array()) {
    for (const auto& part : content) {
      if (part.value("type", "") == "text") reply.content += part.value("text", "");
    }
  } else {
    throw ParseError("completion message content is neither text nor parts");
  }
  if (const auto lp = choice.find("logprobs"); lp != choice.end() && lp->is_object()) {
    if (const auto tokens = lp->find("content"); tokens != lp->end() && tokens->is_array()) {
      for (const auto& t : *tokens) {
        reply.logprobs.push_back({t.value("token", ""), t.value("logprob", 0.0)});
      }
    }
  }
  return reply;
}

std::pair<std::string, std::string> split_endpoint(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("endpoint must be an http(s) URL: " + url);
  const auto scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") throw ConfigError("unsupported endpoint scheme: " + scheme);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

HttpChatBackend::HttpChatBackend(TeacherConfig config) : config_(std::move(config)) {
  config_.validate();
  if (config_.endpoint.empty()) throw ConfigError("backend endpoint is not configured");
  std::tie(scheme_host_port_, path_) = split_endpoint(config_.endpoint);
  if (!config_.api_key_env.empty()) {
    if (const char* key = std::getenv(config_.api_key_env.c_str())) api_key_ = key;
  }
}

ChatReply HttpChatBackend::complete(const ChatRequest& request) {
  httplib::Client client(scheme_host_port_);
  const auto seconds = static_cast<time_t>(config_.timeout_s);
  const auto usec = static_cast<time_t>((config_.timeout_s - static_cast<double>(seconds)) * 1e6);
  client.set_connection_timeout(seconds, usec);
  client.set_read_timeout(seconds, usec);
  client.set_write_timeout(seconds, usec);

  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
  const auto res = client.Post(path_, headers, to_wire(request).dump(), "application/json");
  if (!res) {
    throw TransportError("request to " + config_.endpoint + " failed: " + httplib::to_string(res.error()),
                         /*retryable=*/true);
  }
  if (res->status != 200) {
    const bool retryable = res->status == 408 || res->status == 429 || res->status >= 500;
    throw TransportError("backend returned HTTP " + std::to_string(res->status), retryable, res->status);
  }
  try {
    return reply_from_wire(nlohmann::json::parse(res->body));
  } catch (const std::exception& e) {
    throw TransportError(std::string("malformed completion body: ") + e.what(), /*retryable=*/true,
                         res->status);
  }
}

std::chrono::duration<double> backoff_delay(const TeacherConfig& config, int attempt) {
  const double cap = std::min(config.backoff_max_s,
                              config.backoff_base_s * std::ldexp(1.0, std::max(0, attempt - 1)));
  if (cap <= 0.0) return std::chrono::duration<double>(0.0);
  std::uniform_real_distribution<double> dist(0.0, cap);
  return std::chrono::duration<double>(dist(jitter_rng()));
}

StructuredCall call_for_structured_response(ChatBackend& backend, const TeacherConfig& config,
                                            const ChatRequest& request, const SleepFn& sleep) {
  auto pause = [&](int attempt) {
    const auto delay = backoff_delay(config, attempt);
    if (delay.count() <= 0.0) return;
    if (sleep) {
      sleep(delay);
    } else {
      std::this_thread::sleep_for(delay);
    }
  };

  std::optional<StructuredCall> last_non_compliant;
  std::string last_transport_error;
  for (int attempt = 1; attempt <= config.max_attempts; ++attempt) {
    try {
      ChatReply reply = backend.complete(request);
      ParseResult parsed = parse_response(reply.content);
      if (is_compliant(parsed)) return {std::move(parsed), attempt, std::move(reply)};
      last_non_compliant = StructuredCall{std::move(parsed), attempt, std::move(reply)};
    } catch (const TransportError& e) {
      if (!e.retryable()) throw;
      last_transport_error = e.what();
    }
    if (attempt < config.max_attempts) pause(attempt);
  }
  if (last_non_compliant) {
    last_non_compliant->attempts = config.max_attempts;
    return std::move(*last_non_compliant);
  }
  throw TransportError(last_transport_error + " (after " + std::to_string(config.max_attempts) +
                           " attempts)",
                       /*retryable=*/true);
}

}  // namespace ivyfake
