// Copyright 2026 The ivyfake Authors
// SPDX-License-Identifier: Apache-2.0

#include "mocks.hpp"

#include <fmt/format.h>
#include <unistd.h>

#include <fstream>
#include <random>
#include <sstream>

#include "ivyfake/errors.hpp"
#include "ivyfake/preproc.hpp"

namespace ivyfake::testing {

ChatReply ScriptedBackend::complete(const ChatRequest& request) {
  std::lock_guard lock(mu_);
  const auto i = std::min(seen_.size(), steps_.size() - 1);
  seen_.push_back(request);
  const auto& step = steps_.at(i);
  if (step.status != 0) {
    const bool retryable = step.status == 408 || step.status == 429 || step.status >= 500;
    throw TransportError(fmt::format("scripted HTTP {}", step.status), retryable, step.status);
  }
  return {step.content, step.logprobs};
}

std::size_t ScriptedBackend::calls() const {
  std::lock_guard lock(mu_);
  return seen_.size();
}

std::vector<ChatRequest> ScriptedBackend::requests() const {
  std::lock_guard lock(mu_);
  return seen_;
}

std::vector<ContentPart> StubEncoder::encode(const std::filesystem::path& path, Modality modality,
                                             std::optional<double> duration_s) const {
  const auto name = "mock://" + path.filename().string();
  if (modality == Modality::image) return {ContentPart::from_image_url(name)};
  std::vector<ContentPart> parts;
  for (const double t : plan_frames(duration_s.value_or(1.0)).timestamps_s) {
    parts.push_back(ContentPart::from_image_url(fmt::format("{}#{}", name, t)));
  }
  return parts;
}

std::string first_image_url(const ChatRequest& r) {
  for (const auto& m : r.messages) {
    for (const auto& p : m.content) {
      if (p.kind == ContentPart::Kind::image) return p.image_url;
    }
  }
  return {};
}

std::size_t image_part_count(const ChatRequest& r) {
  std::size_t n = 0;
  for (const auto& m : r.messages) {
    for (const auto& p : m.content) n += p.kind == ContentPart::Kind::image;
  }
  return n;
}

std::string user_text(const ChatRequest& r) {
  std::string out;
  for (auto it = r.messages.rbegin(); it != r.messages.rend(); ++it) {
    if (it->role != "user") continue;
    for (const auto& p : it->content) {
      if (p.kind == ContentPart::Kind::text) out += p.text;
    }
    break;
  }
  return out;
}

TempDir::TempDir() {
  std::string pattern = (std::filesystem::temp_directory_path() / "ivyfake-test-XXXXXX").string();
  if (!::mkdtemp(pattern.data())) throw IoError("mkdtemp failed");
  path_ = pattern;
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

Manifest synthetic_manifest(std::size_t n, std::uint64_t seed) {
  static const char* kGenerators[] = {"gen-alpha", "gen-beta", "gen-gamma"};
  std::mt19937_64 rng(seed);
  Manifest m;
  m.created_at = "2026-01-01T00:00:00Z";
  for (std::size_t i = 0; i < n; ++i) {
    MediaSample s;
    s.id = fmt::format("s{:04}", i);
    s.modality = rng() % 4 == 0 ? Modality::video : Modality::image;
    s.label = i % 2 == 0 ? Label::fake : Label::real;
    s.generator = s.label == Label::fake ? kGenerators[rng() % 3] : "real-camera";
    s.source = s.label == Label::fake ? "synthetic" : "camera";
    if (s.modality == Modality::image) {
      s.path = s.id + ".jpg";
      s.width = 256 + static_cast<int>(rng() % 2048);
      s.height = 256 + static_cast<int>(rng() % 2048);
    } else {
      s.path = s.id + ".mp4";
      s.duration_s = 1.0 + static_cast<double>(rng() % 90) / 10.0;
    }
    m.samples.push_back(std::move(s));
  }
  canonicalize(m);
  return m;
}

SleepFn no_sleep() {
  return [](std::chrono::duration<double>) {};
}

TeacherConfig mock_config(std::string endpoint) {
  TeacherConfig c;
  c.endpoint = std::move(endpoint);
  c.model_name = "mock-teacher";
  c.max_attempts = 3;
  c.timeout_s = 10.0;
  c.backoff_base_s = 0.0;
  c.backoff_max_s = 0.0;
  return c;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
}

std::vector<LabeledPrediction> class_accuracy_fixture(const std::string& generator, std::size_t fakes,
                                                      std::size_t fake_hits, std::size_t reals,
                                                      std::size_t real_hits) {
  std::vector<LabeledPrediction> out;
  out.reserve(fakes + reals);
  for (std::size_t i = 0; i < fakes; ++i) {
    const Label pred = i < fake_hits ? Label::fake : Label::real;
    out.push_back({fmt::format("{}-f{:05}", generator, i), Label::fake, pred, std::nullopt, generator});
  }
  for (std::size_t i = 0; i < reals; ++i) {
    const Label pred = i < real_hits ? Label::real : Label::fake;
    out.push_back({fmt::format("{}-r{:05}", generator, i), Label::real, pred, std::nullopt, generator});
  }
  return out;
}

}  // namespace ivyfake::testing
