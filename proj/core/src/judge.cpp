// Copyright 2026 The ivyfake Authors
// SPDX-License-Identifier: Apache-2.0

#include "ivyfake/judge.hpp"

#include <thread>

#include "ivyfake/errors.hpp"

namespace ivyfake {
namespace {

/// End of the balanced object starting at `open`, honoring JSON strings.
std::optional<std::size_t> matching_brace(std::string_view text, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = open; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
    } else if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}' && --depth == 0) {
      return i;
    }
  }
  return std::nullopt;
}

std::optional<nlohmann::json> first_object(std::string_view text) {
  for (auto open = text.find('{'); open != std::string_view::npos; open = text.find('{', open + 1)) {
    const auto close = matching_brace(text, open);
    if (!close) continue;
    auto j = nlohmann::json::parse(text.substr(open, *close - open + 1), nullptr, /*allow_exceptions=*/false);
    if (j.is_object()) return j;
  }
  return std::nullopt;
}

JudgeParse failed(JudgeFailure f, std::string detail) {
  JudgeParse p;
  p.failure = f;
  p.detail = std::move(detail);
  return p;
}

ChatReply complete_with_retries(ChatBackend& backend, const TeacherConfig& cfg, const ChatRequest& req,
                                const SleepFn& sleep) {
  for (int attempt = 1;; ++attempt) {
    try {
      return backend.complete(req);
    } catch (const TransportError& e) {
      if (!e.retryable() || attempt >= cfg.max_attempts) throw;
    }
    const auto delay = backoff_delay(cfg, attempt);
    if (delay.count() > 0.0) {
      if (sleep) {
        sleep(delay);
      } else {
        std::this_thread::sleep_for(delay);
      }
    }
  }
}

std::string response_text(const StructuredResponse& r) {
  return r.raw.empty() ? serialize_response(r.think, r.conclusion) : r.raw;
}

}  // namespace

std::string_view to_string(JudgeFailure f) noexcept {
  switch (f) {
    case JudgeFailure::no_object: return "no_object";
    case JudgeFailure::missing_key: return "missing_key";
    case JudgeFailure::not_integer: return "not_integer";
    case JudgeFailure::out_of_range: return "out_of_range";
  }
  return "unknown";
}

JudgeParse parse_judge_reply(std::string_view text) {
  const auto obj = first_object(text);
  if (!obj) return failed(JudgeFailure::no_object, "no JSON object in reply");

  std::array<int, 4> values{};
  for (std::size_t d = 0; d < kJudgeDimensions.size(); ++d) {
    auto it = obj->find(std::string(kJudgeDimensions[d]));
    if (d == 2 && it == obj->end()) it = obj->find("Detail");
    const std::string key(kJudgeDimensions[d]);
    if (it == obj->end()) return failed(JudgeFailure::missing_key, key);
    if (!it->is_number_integer()) return failed(JudgeFailure::not_integer, key);
    const auto v = it->get<long long>();
    if (v < 1 || v > 5) return failed(JudgeFailure::out_of_range, key + "=" + std::to_string(v));
    values[d] = static_cast<int>(v);
  }
  JudgeParse p;
  p.scores = JudgeRound{values[0], values[1], values[2], values[3]};
  return p;
}

RenderedPrompt render_judge_prompt(std::string_view ground_truth, std::string_view model_output) {
  const auto& tpl = prompt_template(TemplateKind::judge);
  constexpr std::string_view kGt = "{ground_truth}";
  constexpr std::string_view kOut = "{model_output}";
  std::string user;
  std::string_view rest = tpl.user_text;
  while (!rest.empty()) {
    const auto a = rest.find(kGt);
    const auto b = rest.find(kOut);
    const auto pos = std::min(a, b);
    if (pos == std::string_view::npos) {
      user += rest;
      break;
    }
    user += rest.substr(0, pos);
    user += pos == a ? ground_truth : model_output;
    rest.remove_prefix(pos + (pos == a ? kGt.size() : kOut.size()));
  }
  return {tpl.system_text, std::move(user)};
}

JudgeScore score_rounds(const std::vector<JudgeRound>& rounds, int requested) {
  if (rounds.empty()) throw DomainError("no valid judge rounds to average");
  JudgeScore s;
  s.rounds_requested = requested;
  s.valid_rounds = static_cast<int>(rounds.size());
  s.missing_rounds = s.valid_rounds < requested;
  for (const auto& r : rounds) {
    const auto v = r.values();
    for (std::size_t d = 0; d < 4; ++d) s.per_round[d].push_back(v[d]);
  }
  double total = 0.0;
  for (std::size_t d = 0; d < 4; ++d) {
    long long sum = 0;
    for (const int v : s.per_round[d]) sum += v;
    s.avg_per_dim[d] = static_cast<double>(sum) / static_cast<double>(rounds.size());
    total += s.avg_per_dim[d];
  }
  s.overall_avg = total / 4.0;
  return s;
}

JudgeScore judge_pair(const StructuredResponse& ground_truth, const StructuredResponse& model_output,
                      ChatBackend& backend, const TeacherConfig& cfg, int rounds, const SleepFn& sleep) {
  if (rounds < 1) throw DomainError("judge needs at least one round");
  const auto prompt = render_judge_prompt(response_text(ground_truth), response_text(model_output));
  ChatRequest req;
  req.model = cfg.model_name;
  req.temperature = cfg.temperature;
  req.messages.push_back({"system", {ContentPart::from_text(prompt.system)}});
  req.messages.push_back({"user", {ContentPart::from_text(prompt.user)}});

  std::vector<JudgeRound> valid;
  std::vector<JudgeAttempt> transcript;
  for (int round = 1; round <= rounds; ++round) {
    for (int attempt = 1; attempt <= 2; ++attempt) {
      ChatReply reply = complete_with_retries(backend, cfg, req, sleep);
      JudgeParse parsed = parse_judge_reply(reply.content);
      const bool ok = parsed.ok();
      if (ok) valid.push_back(*parsed.scores);
      transcript.push_back({round, attempt, std::move(reply.content), std::move(parsed)});
      if (ok) break;
    }
  }
  if (valid.empty()) throw DomainError("every judge round was unparseable");
  JudgeScore s = score_rounds(valid, rounds);
  s.transcript = std::move(transcript);
  return s;
}

JudgeSummary summarize(const std::vector<JudgeScore>& scores) {
  if (scores.empty()) throw DomainError("no judged pairs to summarize");
  JudgeSummary out;
  out.pairs = scores.size();
  for (const auto& s : scores) {
    for (std::size_t d = 0; d < 4; ++d) out.avg_per_dim[d] += s.avg_per_dim[d];
  }
  double total = 0.0;
  for (auto& v : out.avg_per_dim) {
    v /= static_cast<double>(scores.size());
    total += v;
  }
  out.overall_avg = total / 4.0;
  return out;
}

nlohmann::ordered_json to_json(const JudgeScore& s) {
  nlohmann::ordered_json j;
  for (std::size_t d = 0; d < 4; ++d) j[std::string(kJudgeDimensions[d])] = s.avg_per_dim[d];
  j["overall"] = s.overall_avg;
  j["rounds"] = s.rounds_requested;
  j["valid_rounds"] = s.valid_rounds;
  j["missing_rounds"] = s.missing_rounds;
  return j;
}

nlohmann::ordered_json to_json(const JudgeSummary& s) {
  nlohmann::ordered_json j;
  j["pairs"] = s.pairs;
  for (std::size_t d = 0; d < 4; ++d) j[std::string(kJudgeDimensions[d])] = s.avg_per_dim[d];
  j["overall"] = s.overall_avg;
  return j;
}

std::string transcript_jsonl(std::string_view pair_id, const JudgeScore& s) {
  std::string out;
  for (const auto& a : s.transcript) {
    nlohmann::ordered_json j;
    j["pair_id"] = pair_id;
    j["round"] = a.round;
    j["attempt"] = a.attempt;
    j["reply"] = a.reply;
    if (a.parsed.ok()) {
      j["scores"] = a.parsed.scores->values();
    } else {
      j["failure"] = to_string(a.parsed.failure);
      j["detail"] = a.parsed.detail;
    }
    out += j.dump() + '\n';
  }
  return out;
}

}  // namespace ivyfake
