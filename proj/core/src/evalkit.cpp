// Copyright 2026 The ivyfake Authors
// SPDX-License-Identifier: Apache-2.0

#include "ivyfake/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "ivyfake/errors.hpp"
#include "ivyfake/jsonl.hpp"

namespace ivyfake {
namespace {

void require_nonempty(std::span<const LabeledPrediction> preds, const char* metric) {
  if (preds.empty()) throw DomainError(std::string(metric) + " of an empty prediction set is undefined");
}

double f1(std::size_t tp, std::size_t fp, std::size_t fn) {
  const std::size_t denom = 2 * tp + fp + fn;
  return denom == 0 ? 0.0 : static_cast<double>(2 * tp) / static_cast<double>(denom);
}

}  // namespace

LabeledPrediction prediction_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("prediction must be a JSON object");
  try {
    LabeledPrediction p;
    p.sample_id = j.at("id").get<std::string>();
    p.truth = parse_label(j.at("truth").get<std::string>());
    p.predicted = parse_label(j.at("predicted").get<std::string>());
    p.generator = j.at("generator").get<std::string>();
    if (const auto it = j.find("score"); it != j.end() && !it->is_null()) {
      if (!it->is_number()) throw ParseError("score must be a number");
      const double s = it->get<double>();
      if (!(s >= 0.0 && s <= 1.0)) throw ParseError("score must lie in [0, 1]");
      p.score = s;
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed prediction: ") + e.what());
  }
}

nlohmann::ordered_json to_json(const LabeledPrediction& p) {
  nlohmann::ordered_json j;
  j["id"] = p.sample_id;
  j["truth"] = to_string(p.truth);
  j["predicted"] = to_string(p.predicted);
  if (p.score) j["score"] = *p.score;
  j["generator"] = p.generator;
  return j;
}

std::vector<LabeledPrediction> parse_predictions(std::string_view jsonl, std::string_view source) {
  std::vector<LabeledPrediction> out;
  for (const auto& row : parse_jsonl(jsonl, source)) {
    try {
      out.push_back(prediction_from_json(row));
    } catch (const ParseError& e) {
      throw ParseError(std::string(source) + ": prediction " + std::to_string(out.size() + 1) + ": " + e.what());
    }
  }
  return out;
}

std::vector<LabeledPrediction> load_predictions(const std::filesystem::path& path) {
  return parse_predictions(read_text_file(path), path.string());
}

Confusion confusion(std::span<const LabeledPrediction> preds) noexcept {
  Confusion c;
  for (const auto& p : preds) {
    if (p.truth == Label::fake) {
      ++(p.predicted == Label::fake ? c.tp : c.fn);
    } else {
      ++(p.predicted == Label::fake ? c.fp : c.tn);
    }
  }
  return c;
}

double accuracy(std::span<const LabeledPrediction> preds) {
  require_nonempty(preds, "accuracy");
  const auto c = confusion(preds);
  return static_cast<double>(c.tp + c.tn) / static_cast<double>(preds.size());
}

double macro_f1(std::span<const LabeledPrediction> preds) {
  require_nonempty(preds, "macro-F1");
  const auto c = confusion(preds);
  // The real class swaps the roles of positives and negatives.
  return (f1(c.tp, c.fp, c.fn) + f1(c.tn, c.fn, c.fp)) / 2.0;
}

double recall(std::span<const LabeledPrediction> preds) {
  require_nonempty(preds, "recall");
  const auto c = confusion(preds);
  if (c.tp + c.fn == 0) throw DomainError("recall is undefined without fake items");
  return static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
}

double average_precision(std::span<const LabeledPrediction> preds) {
  require_nonempty(preds, "average precision");
  std::vector<const LabeledPrediction*> ranked;
  ranked.reserve(preds.size());
  for (const auto& p : preds) {
    if (!p.score) {
      throw DomainError("average precision needs a score on every prediction ('" + p.sample_id +
                        "' has none); report accuracy/F1 for hard labels instead");
    }
    ranked.push_back(&p);
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const LabeledPrediction* a, const LabeledPrediction* b) {
    return *a->score != *b->score ? *a->score > *b->score : a->sample_id < b->sample_id;
  });
  // Extended precision so small rational results round to the nearest double.
  std::size_t hits = 0;
  long double sum = 0.0L;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (ranked[i]->truth != Label::fake) continue;
    ++hits;
    sum += static_cast<long double>(hits) / static_cast<long double>(i + 1);
  }
  if (hits == 0) throw DomainError("average precision is undefined without fake items");
  return static_cast<double>(sum / static_cast<long double>(hits));
}

// ---------------------------------------------------------------------------

std::vector<std::string> rouge_tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (const char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c >= 0x80 || (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z')) {
      cur.push_back(ch);
    } else if (c >= 'A' && c <= 'Z') {
      cur.push_back(static_cast<char>(c - 'A' + 'a'));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::vector<std::string> whitespace_tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  for (std::string w; in >> w;) out.push_back(std::move(w));
  return out;
}

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> prev(b.size() + 1, 0);
  std::vector<std::size_t> cur(b.size() + 1, 0);
  for (const auto& x : a) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = x == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

RougeL rouge_l_tokens(std::span<const std::string> candidate, std::span<const std::string> reference,
                      double beta) {
  if (candidate.empty() || reference.empty()) return {};
  const auto lcs = static_cast<double>(lcs_length(candidate, reference));
  if (lcs == 0.0) return {};
  RougeL r;
  r.precision = lcs / static_cast<double>(candidate.size());
  r.recall = lcs / static_cast<double>(reference.size());
  const double b2 = beta * beta;
  r.f = ((1.0 + b2) * r.precision * r.recall) / (r.recall + b2 * r.precision);
  return r;
}

RougeL rouge_l(std::string_view candidate, std::string_view reference, double beta) {
  const auto c = rouge_tokenize(candidate);
  const auto r = rouge_tokenize(reference);
  return rouge_l_tokens(c, r, beta);
}

double lexical_sim(std::string_view candidate, std::string_view reference) {
  std::map<std::string, std::pair<double, double>> counts;
  for (auto& t : rouge_tokenize(candidate)) counts[std::move(t)].first += 1.0;
  for (auto& t : rouge_tokenize(reference)) counts[std::move(t)].second += 1.0;
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (const auto& [token, ab] : counts) {
    dot += ab.first * ab.second;
    na += ab.first * ab.first;
    nb += ab.second * ab.second;
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::min(1.0, dot / (std::sqrt(na) * std::sqrt(nb)));
}

TokenLengthStats token_length_stats(std::span<const std::string> texts, const Tokenizer& tokenizer) {
  if (texts.empty()) throw DomainError("token length statistics of an empty corpus are undefined");
  TokenLengthStats s;
  s.texts = texts.size();
  s.min = static_cast<std::size_t>(-1);
  std::size_t total = 0;
  for (const auto& t : texts) {
    const std::size_t n = tokenizer ? tokenizer(t).size() : rouge_tokenize(t).size();
    total += n;
    s.min = std::min(s.min, n);
    s.max = std::max(s.max, n);
  }
  s.mean = static_cast<double>(total) / static_cast<double>(texts.size());
  return s;
}

}  // namespace ivyfake
