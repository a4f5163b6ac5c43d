// Copyright 2026 The ivyfake Authors
// SPDX-License-Identifier: Apache-2.0

#include "oracles.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <functional>
#include <map>
#include <regex>

#include <nlohmann/json.hpp>

namespace ivyfake::oracle {
namespace {

constexpr std::string_view kWs = " \t\r\n\f\v";

bool only_whitespace(std::string_view s) { return s.find_first_not_of(kWs) == std::string_view::npos; }

bool has_complete_tag(std::string_view s) {
  for (const std::string_view t : {"<think>", "</think>", "<conclusion>", "</conclusion>"}) {
    if (s.find(t) != std::string_view::npos) return true;
  }
  return false;
}

template <typename T>
const T& pick(std::mt19937_64& rng, const std::vector<T>& v) {
  return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
}

std::size_t uniform(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

}  // namespace

GrammarVerdict classify_response(std::string_view text) {
  static const std::regex kTag("<(/?)(think|conclusion)>");
  enum Kind { think_open, think_close, concl_open, concl_close };
  struct Tag {
    Kind kind;
    std::size_t begin;
    std::size_t end;
  };
  const std::string s(text);
  std::vector<Tag> tags;
  std::array<int, 4> counts{};
  for (auto it = std::sregex_iterator(s.begin(), s.end(), kTag); it != std::sregex_iterator(); ++it) {
    const bool close = (*it)[1].length() == 1;
    const bool think = (*it)[2].str() == "think";
    const Kind k = think ? (close ? think_close : think_open) : (close ? concl_close : concl_open);
    const auto begin = static_cast<std::size_t>(it->position());
    tags.push_back({k, begin, begin + static_cast<std::size_t>(it->length())});
    ++counts[k];
  }

  GrammarVerdict v;
  if (*std::max_element(counts.begin(), counts.end()) > 1) {
    v.reason = NonComplianceReason::multiple_blocks;
  } else if (counts[think_open] == 0 || counts[think_close] == 0) {
    v.reason = NonComplianceReason::missing_think;
  } else if (counts[concl_open] == 0 || counts[concl_close] == 0) {
    v.reason = NonComplianceReason::missing_conclusion;
  } else if (tags[0].kind != think_open || tags[1].kind != think_close || tags[2].kind != concl_open ||
             tags[3].kind != concl_close) {
    v.reason = NonComplianceReason::interleaved_tags;
  } else if (!only_whitespace(s.substr(0, tags[0].begin)) ||
             !only_whitespace(s.substr(tags[1].end, tags[2].begin - tags[1].end)) ||
             !only_whitespace(s.substr(tags[3].end))) {
    v.reason = NonComplianceReason::extra_text;
  } else {
    std::string body = s.substr(tags[2].end, tags[3].begin - tags[2].end);
    const auto first = body.find_first_not_of(kWs);
    body = first == std::string::npos ? "" : body.substr(first, body.find_last_not_of(kWs) - first + 1);
    std::transform(body.begin(), body.end(), body.begin(),
                   [](unsigned char c) { return c >= 'A' && c <= 'Z' ? static_cast<char>(c + 32) : c; });
    if (body == "real") {
      v.conclusion = Label::real;
    } else if (body == "fake") {
      v.conclusion = Label::fake;
    } else {
      v.reason = NonComplianceReason::bad_verdict;
    }
    v.think = s.substr(tags[0].end, tags[1].begin - tags[0].end);
  }
  return v;
}

std::string random_think(std::mt19937_64& rng, std::size_t max_pieces) {
  static const std::vector<std::string> kPieces{
      "the",   "hand",  " ",     " ",    "\n",   "\t", "<",      ">",        "/",      "think",
      "conc",  "lusion", "<thin", "k>",  "</",   "é",  "光",     "{",        "}",      "\"",
      "fake",  "real",  "<conclusion", "think>", "blur", ".",  "  \n", "</thinking>", "<b>", "\r\n"};
  for (;;) {
    std::string out;
    const auto n = uniform(rng, 0, max_pieces);
    for (std::size_t i = 0; i < n; ++i) out += pick(rng, kPieces);
    if (!has_complete_tag(out)) return out;
  }
}

std::string mutate_response(std::string text, std::mt19937_64& rng) {
  static const std::vector<std::string> kTags{"<think>", "</think>", "<conclusion>", "</conclusion>"};
  static const std::vector<std::string> kJunk{"x", "Answer:", "```", "fake", "note", "}", "."};
  static const std::vector<std::string> kVerdicts{"maybe", "realfake", "rea l", "", "fakee", "unknown", "REAL!", "0", "real fake"};
  const std::string original = text;
  for (int tries = 0;; ++tries) {
    text = original;
    const auto ops = uniform(rng, 1, 3);
    for (std::size_t o = 0; o < ops; ++o) {
      switch (uniform(rng, 0, 6)) {
        case 0: {  // delete one tag occurrence
          const auto& t = pick(rng, kTags);
          if (const auto at = text.find(t); at != std::string::npos) text.erase(at, t.size());
          break;
        }
        case 1:  // duplicate a tag somewhere
        case 2:  // stray tag somewhere
          text.insert(uniform(rng, 0, text.size()), pick(rng, kTags));
          break;
        case 3: {  // junk outside or inside the blocks
          const auto where = uniform(rng, 0, 2);
          const auto& junk = pick(rng, kJunk);
          if (where == 0) {
            text.insert(0, junk);
          } else if (where == 1) {
            text += junk;
          } else if (const auto at = text.find("</think>"); at != std::string::npos) {
            text.insert(at + 8, junk);
          }
          break;
        }
        case 4: {  // replace the verdict body
          const auto a = text.find("<conclusion>");
          const auto b = text.find("</conclusion>");
          if (a != std::string::npos && b != std::string::npos && b >= a + 12) {
            text.replace(a + 12, b - a - 12, pick(rng, kVerdicts));
          }
          break;
        }
        case 5: {  // conclusion block first
          const auto a = text.find("<conclusion>");
          if (a != std::string::npos && a > 0) text = text.substr(a) + text.substr(0, a);
          break;
        }
        default:  // truncate
          text.resize(uniform(rng, 0, text.size()));
          break;
      }
    }
    if (classify_response(text).reason) return text;
  }
}

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
  std::function<std::size_t(std::size_t, std::size_t)> go = [&](std::size_t i, std::size_t j) -> std::size_t {
    if (i == a.size() || j == b.size()) return 0;
    if (const auto it = memo.find({i, j}); it != memo.end()) return it->second;
    const std::size_t r = a[i] == b[j] ? 1 + go(i + 1, j + 1) : std::max(go(i + 1, j), go(i, j + 1));
    memo[{i, j}] = r;
    return r;
  };
  return go(0, 0);
}

RougeClosedForm rouge_closed_form(std::size_t lcs, std::size_t cand, std::size_t ref, double beta) {
  RougeClosedForm out;
  if (lcs == 0) return out;
  out.p = static_cast<double>(lcs) / static_cast<double>(cand);
  out.r = static_cast<double>(lcs) / static_cast<double>(ref);
  const double b2 = beta * beta;
  out.f = (1.0 + b2) * out.p * out.r / (out.r + b2 * out.p);
  return out;
}

double accuracy(const std::vector<LabeledPrediction>& preds) {
  const auto hits = std::count_if(preds.begin(), preds.end(), [](const auto& p) { return p.truth == p.predicted; });
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

double macro_f1(const std::vector<LabeledPrediction>& preds) {
  double sum = 0.0;
  for (const Label c : {Label::real, Label::fake}) {
    double tp = 0, predicted = 0, actual = 0;
    for (const auto& p : preds) {
      tp += p.truth == c && p.predicted == c;
      predicted += p.predicted == c;
      actual += p.truth == c;
    }
    const double precision = predicted > 0 ? tp / predicted : 0.0;
    const double rec = actual > 0 ? tp / actual : 0.0;
    sum += precision + rec > 0 ? 2 * precision * rec / (precision + rec) : 0.0;
  }
  return sum / 2.0;
}

std::optional<double> recall(const std::vector<LabeledPrediction>& preds) {
  double fakes = 0, caught = 0;
  for (const auto& p : preds) {
    if (p.truth != Label::fake) continue;
    ++fakes;
    caught += p.predicted == Label::fake;
  }
  if (fakes == 0) return std::nullopt;
  return caught / fakes;
}

std::optional<double> average_precision(const std::vector<LabeledPrediction>& preds) {
  std::vector<LabeledPrediction> ranked = preds;
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.sample_id < b.sample_id; });
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return *a.score > *b.score; });

  std::vector<std::pair<std::int64_t, std::int64_t>> terms;  // precision at each fake
  for (std::size_t k = 0; k < ranked.size(); ++k) {
    if (ranked[k].truth != Label::fake) continue;
    std::int64_t fakes_above = 0;
    for (std::size_t i = 0; i <= k; ++i) fakes_above += ranked[i].truth == Label::fake;
    terms.emplace_back(fakes_above, static_cast<std::int64_t>(k + 1));
  }
  if (terms.empty()) return std::nullopt;

  if (ranked.size() <= 16) {
    __int128 num = 0, den = 1;
    for (const auto& [a, b] : terms) {
      num = num * b + a * den;
      den *= b;
      __int128 x = num, y = den;
      while (y != 0) {
        const __int128 t = x % y;
        x = y;
        y = t;
      }
      num /= x;
      den /= x;
    }
    den *= static_cast<std::int64_t>(terms.size());
    return static_cast<double>(static_cast<long double>(num) / static_cast<long double>(den));
  }
  long double sum = 0;
  for (const auto& [a, b] : terms) sum += static_cast<long double>(a) / static_cast<long double>(b);
  return static_cast<double>(sum / static_cast<long double>(terms.size()));
}

JudgeVerdict classify_judge_reply(std::string_view text) {
  JudgeVerdict v;
  std::optional<nlohmann::json> obj;
  for (std::size_t i = 0; i < text.size() && !obj; ++i) {
    if (text[i] != '{') continue;
    for (std::size_t j = i + 1; j < text.size(); ++j) {
      if (text[j] != '}') continue;
      auto parsed = nlohmann::json::parse(text.substr(i, j - i + 1), nullptr, false);
      if (!parsed.is_discarded() && parsed.is_object()) {
        obj = std::move(parsed);
        break;
      }
    }
  }
  if (!obj) {
    v.failure = JudgeFailure::no_object;
    return v;
  }
  std::array<int, 4> values{};
  const std::array<std::vector<std::string>, 4> keys{{{"Completeness"},
                                                      {"Relevance"},
                                                      {"Level of Detail", "Detail"},
                                                      {"Explanation"}}};
  for (std::size_t d = 0; d < 4; ++d) {
    const nlohmann::json* value = nullptr;
    for (const auto& k : keys[d]) {
      if (obj->contains(k)) {
        value = &obj->at(k);
        break;
      }
    }
    if (!value) {
      v.failure = JudgeFailure::missing_key;
      return v;
    }
    if (!value->is_number_integer()) {
      v.failure = JudgeFailure::not_integer;
      return v;
    }
    const bool in_range = value->is_number_unsigned() ? value->get<std::uint64_t>() >= 1 && value->get<std::uint64_t>() <= 5
                                                      : value->get<std::int64_t>() >= 1 && value->get<std::int64_t>() <= 5;
    if (!in_range) {
      v.failure = JudgeFailure::out_of_range;
      return v;
    }
    values[d] = value->get<int>();
  }
  v.scores = JudgeRound{values[0], values[1], values[2], values[3]};
  return v;
}

std::string random_judge_reply(std::mt19937_64& rng) {
  static const std::vector<std::string> kPrefixes{"", "Scores:\n", "Here is my rating {draft}: ", "```json\n",
                                                  "Note {\"x\": 1} first. ", "I think \"{\" is fine. "};
  static const std::vector<std::string> kSuffixes{"", "\n```", " Hope this helps.", " {\"Completeness\": 9}", "}"};
  static const std::vector<std::string> kValues{"1", "2", "3", "4", "5", "0", "6", "-1", "4.0", "4.5",
                                                "\"4\"", "true", "null", "[4]", "5e0", "18446744073709551615"};
  const std::array<std::string, 4> names{"Completeness", "Relevance",
                                         uniform(rng, 0, 3) == 0 ? "Detail" : "Level of Detail", "Explanation"};
  std::vector<std::string> fields;
  for (const auto& n : names) {
    const bool valid = uniform(rng, 0, 3) != 0;
    const std::string value = valid ? std::to_string(uniform(rng, 1, 5)) : pick(rng, kValues);
    switch (uniform(rng, 0, 9)) {
      case 0: break;                                                     // drop key
      case 1: fields.push_back(fmt::format("\"{}\": {}", n + "s", value)); break;  // misspelt
      default: fields.push_back(fmt::format("\"{}\": {}", n, value));
    }
  }
  if (uniform(rng, 0, 4) == 0) fields.push_back("\"Comment\": \"braces } and { inside\"");
  std::shuffle(fields.begin(), fields.end(), rng);
  std::string obj = "{";
  for (std::size_t i = 0; i < fields.size(); ++i) obj += (i ? ", " : "") + fields[i];
  obj += "}";
  switch (uniform(rng, 0, 7)) {
    case 0: obj.pop_back(); break;                    // unterminated
    case 1: obj = "[" + obj + "]"; break;              // wrapped in an array
    case 2: obj.insert(1, "\"Level of Detail\": 2, "); break;
    case 3: obj = "{\"scores\": " + obj + "}"; break;  // nested
    case 4: obj.replace(0, 1, "("); break;
    default: break;
  }
  return pick(rng, kPrefixes) + obj + pick(rng, kSuffixes);
}

}  // namespace ivyfake::oracle
