// Copyright 2026 The ivyfake Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cstdlib>

#include "ivyfake/chat_backend.hpp"
#include "ivyfake/errors.hpp"
#include "mock_server.hpp"
#include "mocks.hpp"

namespace ivyfake {
namespace {

using testing::MockChatServer;
using testing::ScriptedBackend;

const std::string kGood = "<think>ok</think><conclusion>fake</conclusion>";

ChatRequest sample_request() {
  ChatRequest r;
  r.model = "m";
  r.temperature = 0.5;
  r.messages = {{"system", {ContentPart::from_text("sys")}},
                {"user", {ContentPart::from_image_url("data:image/png;base64,AA=="), ContentPart::from_text("q")}}};
  return r;
}

TEST(Wire, RequestShape) {
  auto r = sample_request();
  r.logprobs = true;
  const auto j = to_wire(r);
  EXPECT_EQ(j.at("model"), "m");
  EXPECT_EQ(j.at("temperature"), 0.5);
  EXPECT_EQ(j.at("logprobs"), true);
  EXPECT_EQ(j.at("messages")[0].at("content"), "sys");
  const auto& parts = j.at("messages")[1].at("content");
  ASSERT_EQ(parts.size(), 2u);
  EXPECT_EQ(parts[0].at("type"), "image_url");
  EXPECT_EQ(parts[0].at("image_url").at("url"), "data:image/png;base64,AA==");
  EXPECT_EQ(parts[1].at("type"), "text");
  EXPECT_FALSE(to_wire(sample_request()).contains("logprobs"));
}

TEST(Wire, ReplyParsing) {
  const auto body = nlohmann::json::parse(R"({"choices":[{"message":{"role":"assistant","content":"hi"},
      "logprobs":{"content":[{"token":"h","logprob":-0.5},{"token":"i","logprob":-0.25}]}}]})");
  const auto r = reply_from_wire(body);
  EXPECT_EQ(r.content, "hi");
  ASSERT_EQ(r.logprobs.size(), 2u);
  EXPECT_EQ(r.logprobs[1].token, "i");
  EXPECT_DOUBLE_EQ(r.logprobs[1].logprob, -0.25);
  const auto parts = nlohmann::json::parse(
      R"({"choices":[{"message":{"content":[{"type":"text","text":"a"},{"type":"text","text":"b"}]}}]})");
  EXPECT_EQ(reply_from_wire(parts).content, "ab");
  EXPECT_THROW(reply_from_wire(nlohmann::json::parse(R"({"choices":[]})")), ParseError);
}

TEST(Config, FromJsonAndValidation) {
  const auto c = teacher_config_from_json(
      {{"endpoint", "http://x/v1"}, {"model", "t"}, {"max_attempts", 5}, {"label_conditioning", "off"}});
  EXPECT_EQ(c.model_name, "t");
  EXPECT_EQ(c.max_attempts, 5);
  EXPECT_EQ(c.label_conditioning, Conditioning::off);
  EXPECT_EQ(teacher_config_from_json({{"label_conditioning", true}}).label_conditioning, Conditioning::on);
  EXPECT_THROW(teacher_config_from_json({{"max_attempts", 0}}), ConfigError);
  EXPECT_THROW(teacher_config_from_json({{"timeout_s", 0}}), ConfigError);
  EXPECT_THROW(teacher_config_from_json({{"label_conditioning", "maybe"}}), ConfigError);
  EXPECT_THROW(teacher_config_from_json(nlohmann::json::array()), ConfigError);
  EXPECT_EQ(teacher_config_from_json(to_json(c)).endpoint, c.endpoint);
}

TEST(Config, SplitEndpoint) {
  EXPECT_EQ(split_endpoint("http://h:9/v1/chat"), (std::pair<std::string, std::string>{"http://h:9", "/v1/chat"}));
  EXPECT_EQ(split_endpoint("https://h").second, "/");
  EXPECT_THROW(split_endpoint("ftp://h/x"), ConfigError);
  EXPECT_THROW(split_endpoint("h/x"), ConfigError);
}

TEST(Backoff, FullJitterWithinCap) {
  TeacherConfig c;
  c.backoff_base_s = 1.0;
  c.backoff_max_s = 5.0;
  for (int attempt = 1; attempt <= 6; ++attempt) {
    const double cap = std::min(5.0, std::ldexp(1.0, attempt - 1));
    for (int i = 0; i < 200; ++i) {
      const double d = backoff_delay(c, attempt).count();
      ASSERT_GE(d, 0.0);
      ASSERT_LE(d, cap);
    }
  }
  c.backoff_base_s = 0.0;
  EXPECT_EQ(backoff_delay(c, 3).count(), 0.0);
}

TEST(HttpBackend, TalksToCompletionsEndpoint) {
  std::string seen_auth;
  MockChatServer server([&](const nlohmann::json& body) {
    EXPECT_EQ(body.at("model"), "mock-teacher");
    return MockChatServer::Reply{200, kGood, {{"fake", -0.1}}};
  });
  ::setenv("IVYFAKE_TEST_KEY", "secret", 1);
  auto cfg = testing::mock_config(server.endpoint());
  cfg.api_key_env = "IVYFAKE_TEST_KEY";
  HttpChatBackend backend(cfg);
  auto req = sample_request();
  req.model = "mock-teacher";
  const auto reply = backend.complete(req);
  EXPECT_EQ(reply.content, kGood);
  ASSERT_EQ(reply.logprobs.size(), 1u);
  EXPECT_EQ(server.requests(), 1u);
}

TEST(HttpBackend, StatusCodesMapToRetryability) {
  for (const auto& [status, retryable] : std::vector<std::pair<int, bool>>{{500, true}, {503, true}, {429, true},
                                                                          {408, true}, {400, false}, {401, false}}) {
    MockChatServer server([status = status](const nlohmann::json&) { return MockChatServer::Reply{status, "", {}}; });
    HttpChatBackend backend(testing::mock_config(server.endpoint()));
    try {
      backend.complete(sample_request());
      ADD_FAILURE() << "no error for " << status;
    } catch (const TransportError& e) {
      EXPECT_EQ(e.retryable(), retryable) << status;
      EXPECT_EQ(e.http_status(), status);
    }
  }
}

TEST(HttpBackend, UnreachableIsRetryable) {
  auto cfg = testing::mock_config("http://127.0.0.1:1/v1/chat/completions");
  cfg.timeout_s = 1.0;
  HttpChatBackend backend(cfg);
  try {
    backend.complete(sample_request());
    ADD_FAILURE();
  } catch (const TransportError& e) {
    EXPECT_TRUE(e.retryable());
  }
  EXPECT_THROW(HttpChatBackend(testing::mock_config("")), ConfigError);
}

TEST(StructuredCall, RetriesNonCompliantThenSucceeds) {
  ScriptedBackend backend({{"garbage"}, {"<think>x</think>"}, {kGood}});
  const auto call = call_for_structured_response(backend, testing::mock_config(), sample_request(), testing::no_sleep());
  EXPECT_TRUE(is_compliant(call.response));
  EXPECT_EQ(call.attempts, 3);
  EXPECT_EQ(backend.calls(), 3u);
}

TEST(StructuredCall, ReturnsLastNonCompliant) {
  ScriptedBackend backend({{"garbage"}, {"<think>x</think>"}});
  int sleeps = 0;
  const auto call = call_for_structured_response(backend, testing::mock_config(), sample_request(),
                                                 [&](std::chrono::duration<double>) { ++sleeps; });
  ASSERT_FALSE(is_compliant(call.response));
  EXPECT_EQ(std::get<NonCompliant>(call.response).reason, NonComplianceReason::missing_conclusion);
  EXPECT_EQ(call.attempts, 3);
  EXPECT_EQ(backend.calls(), 3u);
  EXPECT_EQ(sleeps, 0);  // zero backoff in the mock config
}

TEST(StructuredCall, RetriesRetryableTransportErrors) {
  ScriptedBackend backend({{"", 503}, {"", 429}, {kGood}});
  auto cfg = testing::mock_config();
  cfg.backoff_base_s = 0.5;
  cfg.backoff_max_s = 4.0;
  std::vector<double> delays;
  const auto call = call_for_structured_response(backend, cfg, sample_request(),
                                                 [&](std::chrono::duration<double> d) { delays.push_back(d.count()); });
  EXPECT_TRUE(is_compliant(call.response));
  EXPECT_EQ(call.attempts, 3);
  EXPECT_LE(delays.size(), 2u);
  for (const double d : delays) EXPECT_LE(d, 1.0);
}

TEST(StructuredCall, NonRetryableFailsFast) {
  ScriptedBackend backend({{"", 401}, {kGood}});
  EXPECT_THROW(call_for_structured_response(backend, testing::mock_config(), sample_request(), testing::no_sleep()),
               TransportError);
  EXPECT_EQ(backend.calls(), 1u);
}

TEST(StructuredCall, ExhaustedTransportThrows) {
  ScriptedBackend backend({{"", 500}});
  try {
    call_for_structured_response(backend, testing::mock_config(), sample_request(), testing::no_sleep());
    ADD_FAILURE();
  } catch (const TransportError& e) {
    EXPECT_NE(std::string(e.what()).find("after 3 attempts"), std::string::npos);
  }
  EXPECT_EQ(backend.calls(), 3u);
}

}  // namespace
}  // namespace ivyfake
