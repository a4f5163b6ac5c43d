// Copyright 2026 The ivyfake Authors
// SPDX-License-Identifier: Apache-2.0

#include "mock_server.hpp"

#include <httplib.h>

#include <thread>

#include "ivyfake/errors.hpp"

namespace ivyfake::testing {

struct MockChatServer::Impl {
  httplib::Server server;
  std::thread thread;
};

MockChatServer::MockChatServer(Handler handler) : impl_(std::make_unique<Impl>()) {
  impl_->server.Post("/v1/chat/completions", [this, handler](const httplib::Request& req, httplib::Response& res) {
    requests_.fetch_add(1);
    const auto body = nlohmann::json::parse(req.body, nullptr, false);
    if (body.is_discarded()) {
      res.status = 400;
      return;
    }
    const Reply r = handler(body);
    res.status = r.status;
    if (r.status != 200) {
      res.set_content(R"({"error":"scripted"})", "application/json");
      return;
    }
    nlohmann::json out;
    out["id"] = "mock";
    out["object"] = "chat.completion";
    nlohmann::json choice;
    choice["index"] = 0;
    choice["message"] = {{"role", "assistant"}, {"content", r.content}};
    choice["finish_reason"] = "stop";
    if (!r.logprobs.empty()) {
      auto content = nlohmann::json::array();
      for (const auto& t : r.logprobs) content.push_back({{"token", t.token}, {"logprob", t.logprob}});
      choice["logprobs"] = {{"content", content}};
    }
    out["choices"] = nlohmann::json::array({choice});
    res.set_content(out.dump(), "application/json");
  });
  port_ = impl_->server.bind_to_any_port("127.0.0.1");
  if (port_ < 0) throw IoError("mock server cannot bind");
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

MockChatServer::~MockChatServer() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

std::string MockChatServer::endpoint() const {
  return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions";
}

std::string wire_image_url(const nlohmann::json& body) {
  for (const auto& m : body.at("messages")) {
    if (!m.at("content").is_array()) continue;
    for (const auto& p : m.at("content")) {
      if (p.value("type", "") == "image_url") return p.at("image_url").at("url").get<std::string>();
    }
  }
  return {};
}

std::string wire_user_text(const nlohmann::json& body) {
  std::string out;
  for (const auto& m : body.at("messages")) {
    if (m.value("role", "") != "user") continue;
    out.clear();
    const auto& c = m.at("content");
    if (c.is_string()) {
      out = c.get<std::string>();
      continue;
    }
    for (const auto& p : c) {
      if (p.value("type", "") == "text") out += p.at("text").get<std::string>();
    }
  }
  return out;
}

}  // namespace ivyfake::testing
