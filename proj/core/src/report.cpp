// Copyright 2026 The ivyfake Authors
// SPDX-License-Identifier: Apache-2.0

#include <fmt/format.h>

#include <algorithm>
#include <map>

#include "ivyfake/errors.hpp"
#include "ivyfake/evalkit.hpp"

namespace ivyfake {
namespace {

template <typename F>
std::optional<double> defined(F&& metric) {
  try {
    return metric();
  } catch (const DomainError&) {
    return std::nullopt;
  }
}

std::optional<double> mean_of(const std::vector<MetricRow>& rows, std::optional<double> MetricRow::*cell) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : rows) {
    if (const auto& v = r.*cell) {
      sum += *v;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

std::string pct(std::optional<double> v) { return v ? fmt::format("{:.2f}", *v * 100.0) : "-"; }

nlohmann::ordered_json cell(std::optional<double> v) { return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr); }

nlohmann::ordered_json row_json(const MetricRow& r) {
  nlohmann::ordered_json j;
  j["generator"] = r.name;
  j["n"] = r.n;
  j["acc"] = cell(r.acc);
  j["f1"] = cell(r.f1);
  j["recall"] = cell(r.recall);
  j["ap"] = cell(r.ap);
  return j;
}

std::optional<double> class_accuracy(std::span<const LabeledPrediction> preds, Label cls) {
  std::size_t total = 0, correct = 0;
  for (const auto& p : preds) {
    if (p.truth != cls) continue;
    ++total;
    if (p.predicted == cls) ++correct;
  }
  if (total == 0) return std::nullopt;
  return static_cast<double>(correct) / static_cast<double>(total);
}

}  // namespace

DetectionReport build_report(std::span<const LabeledPrediction> preds) {
  std::map<std::string, std::vector<LabeledPrediction>> groups;
  for (const auto& p : preds) {
    if (p.generator.empty()) throw DomainError("prediction '" + p.sample_id + "' carries no generator");
    groups[p.generator].push_back(p);
  }
  DetectionReport r;
  for (const auto& [name, group] : groups) {
    MetricRow row;
    row.name = name;
    row.n = group.size();
    row.acc = accuracy(group);
    row.f1 = macro_f1(group);
    row.recall = defined([&] { return recall(group); });
    row.ap = defined([&] { return average_precision(group); });
    r.generators.push_back(std::move(row));
  }
  r.mean.name = "Mean";
  r.mean.n = preds.size();
  r.mean.acc = mean_of(r.generators, &MetricRow::acc);
  r.mean.f1 = mean_of(r.generators, &MetricRow::f1);
  r.mean.recall = mean_of(r.generators, &MetricRow::recall);
  r.mean.ap = mean_of(r.generators, &MetricRow::ap);
  r.fake_acc = class_accuracy(preds, Label::fake);
  r.real_acc = class_accuracy(preds, Label::real);
  return r;
}

std::string fake_real_cell(const DetectionReport& r) {
  if (!r.fake_acc || !r.real_acc) return "-";
  return pct(r.fake_acc) + "/" + pct(r.real_acc);
}

std::string render_text(const DetectionReport& r) {
  std::size_t width = std::string_view("Fake/Real").size();
  for (const auto& g : r.generators) width = std::max(width, g.name.size());

  std::string out = fmt::format("{:<{}}  {:>7}  {:>7}  {:>7}  {:>7}  {:>7}\n", "Generator", width, "N", "Acc",
                                "F1", "Recall", "AP");
  auto line = [&](const MetricRow& row) {
    out += fmt::format("{:<{}}  {:>7}  {:>7}  {:>7}  {:>7}  {:>7}\n", row.name, width, row.n, pct(row.acc),
                       pct(row.f1), pct(row.recall), pct(row.ap));
  };
  for (const auto& g : r.generators) line(g);
  line(r.mean);
  out += fmt::format("{:<{}}  {:>7}  {:>7}\n", "Fake/Real", width, "", fake_real_cell(r));
  return out;
}

nlohmann::ordered_json to_json(const DetectionReport& r) {
  nlohmann::ordered_json j;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& g : r.generators) rows.push_back(row_json(g));
  j["generators"] = std::move(rows);
  j["mean"] = row_json(r.mean);
  j["fake_acc"] = cell(r.fake_acc);
  j["real_acc"] = cell(r.real_acc);
  j["fake_real"] = fake_real_cell(r);
  return j;
}

Thresholds thresholds_from_json(const nlohmann::json& j) {
  Thresholds t;
  if (j.is_null()) return t;
  if (!j.is_object()) throw ConfigError("thresholds must be an object");
  auto read = [&](const char* key, std::optional<double>& slot) {
    if (const auto it = j.find(key); it != j.end()) {
      const double v = it->get<double>();
      if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(std::string(key) + " must lie in [0, 1]");
      slot = v;
    }
  };
  read("min_acc", t.min_acc);
  read("min_f1", t.min_f1);
  read("min_recall", t.min_recall);
  read("min_ap", t.min_ap);
  return t;
}

std::vector<std::string> check_thresholds(const DetectionReport& r, const Thresholds& t) {
  std::vector<std::string> failures;
  auto check = [&](const char* name, std::optional<double> actual, std::optional<double> minimum) {
    if (!minimum) return;
    if (!actual) {
      failures.push_back(fmt::format("{} is undefined, threshold {:.2f}", name, *minimum * 100.0));
    } else if (*actual < *minimum) {
      failures.push_back(fmt::format("{} {:.2f} below threshold {:.2f}", name, *actual * 100.0, *minimum * 100.0));
    }
  };
  check("Mean Acc", r.mean.acc, t.min_acc);
  check("Mean F1", r.mean.f1, t.min_f1);
  check("Mean Recall", r.mean.recall, t.min_recall);
  check("Mean AP", r.mean.ap, t.min_ap);
  return failures;
}

ExplanationReport explanation_report(std::span<const ExplanationPair> pairs, const Tokenizer& tokenizer) {
  if (pairs.empty()) throw DomainError("explanation report of an empty set is undefined");
  ExplanationReport r;
  r.pairs = pairs.size();
  std::vector<std::string> candidates;
  candidates.reserve(pairs.size());
  for (const auto& p : pairs) {
    r.rouge_l_f += rouge_l(p.candidate, p.reference).f;
    r.sim += lexical_sim(p.candidate, p.reference);
    candidates.push_back(p.candidate);
  }
  r.rouge_l_f /= static_cast<double>(pairs.size());
  r.sim /= static_cast<double>(pairs.size());
  r.candidate_length = token_length_stats(candidates, tokenizer);
  return r;
}

nlohmann::ordered_json to_json(const ExplanationReport& r) {
  nlohmann::ordered_json j;
  j["pairs"] = r.pairs;
  j["rouge_l"] = r.rouge_l_f;
  j["sim"] = r.sim;
  j["mean_tokens"] = r.candidate_length.mean;
  j["min_tokens"] = r.candidate_length.min;
  j["max_tokens"] = r.candidate_length.max;
  return j;
}

std::string render_text(const ExplanationReport& r) {
  return fmt::format("pairs        {}\nROUGE-L      {:.2f}\nSIM          {:.2f}\nmean tokens  {:.1f}\n", r.pairs,
                     r.rouge_l_f * 100.0, r.sim * 100.0, r.candidate_length.mean);
}

}  // namespace ivyfake
