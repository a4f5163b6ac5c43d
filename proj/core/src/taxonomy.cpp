// Copyright 2026 The ivyfake Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cctype>
#include <sstream>

#include "embedded.hpp"
#include "ivyfake/errors.hpp"
#include "ivyfake/protocol.hpp"

namespace ivyfake {
namespace {

constexpr std::array<std::string_view, 12> kNames{
    "ImpracticalLuminosity", "LocalizedBlur",           "IllegibleLetters",
    "DistortedComponents",   "OmittedComponents",       "SpatialRelationships",
    "ChromaticIrregularity", "AbnormalTexture",         "LuminanceDiscrepancy",
    "AwkwardFacialExpression", "DuplicatedComponents",  "NonSpatialRelationships",
};

std::vector<std::string> split_words(std::string_view normalized) {
  std::vector<std::string> words;
  std::istringstream in{std::string(normalized)};
  for (std::string w; in >> w;) words.push_back(std::move(w));
  return words;
}

}  // namespace

Axis axis_of(Dimension d) noexcept {
  return static_cast<int>(d) < 8 ? Axis::spatial : Axis::temporal;
}

std::string_view to_string(Dimension d) noexcept { return kNames[static_cast<std::size_t>(d)]; }

std::string_view to_string(Axis a) noexcept { return a == Axis::spatial ? "spatial" : "temporal"; }

Dimension parse_dimension(std::string_view name) {
  const auto it = std::find(kNames.begin(), kNames.end(), name);
  if (it == kNames.end()) throw ParseError("unknown taxonomy dimension '" + std::string(name) + "'");
  return static_cast<Dimension>(it - kNames.begin());
}

std::string normalize_phrase(std::string_view text) {
  std::string out;
  out.reserve(text.size() + 8);
  char prev = ' ';
  for (const char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c >= 0x80 || std::isalnum(c)) {
      if (std::isupper(c) && std::islower(static_cast<unsigned char>(prev))) out.push_back(' ');
      out.push_back(static_cast<char>(std::tolower(c)));
    } else if (!out.empty() && out.back() != ' ') {
      out.push_back(' ');
    }
    prev = ch;
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

Taxonomy Taxonomy::from_json(const nlohmann::json& j) {
  Taxonomy t;
  std::array<bool, 12> present{};
  for (const auto& d : j.at("dimensions")) {
    const Dimension dim = parse_dimension(d.at("name").get<std::string>());
    const Axis axis = d.at("axis").get<std::string>() == "temporal" ? Axis::temporal : Axis::spatial;
    if (axis != axis_of(dim)) {
      throw ParseError("taxonomy puts " + std::string(to_string(dim)) + " on the wrong axis");
    }
    Entry entry{dim, {normalize_phrase(to_string(dim))}};
    for (const auto& syn : d.value("synonyms", nlohmann::json::array())) {
      auto norm = normalize_phrase(syn.get<std::string>());
      if (!norm.empty() && std::find(entry.synonyms.begin(), entry.synonyms.end(), norm) == entry.synonyms.end()) {
        entry.synonyms.push_back(std::move(norm));
      }
    }
    present[static_cast<std::size_t>(dim)] = true;
    t.entries_.push_back(std::move(entry));
  }
  if (!std::all_of(present.begin(), present.end(), [](bool b) { return b; })) {
    throw ParseError("taxonomy must list all 12 dimensions");
  }
  return t;
}

std::set<Dimension> Taxonomy::tag(std::string_view think, Modality modality) const {
  const auto words = split_words(normalize_phrase(think));

  struct Match {
    std::size_t start;
    std::size_t length;
    Dimension dimension;
  };
  std::vector<Match> matches;
  for (const auto& entry : entries_) {
    for (const auto& synonym : entry.synonyms) {
      const auto phrase = split_words(synonym);
      if (phrase.empty() || phrase.size() > words.size()) continue;
      for (std::size_t i = 0; i + phrase.size() <= words.size(); ++i) {
        if (std::equal(phrase.begin(), phrase.end(), words.begin() + static_cast<std::ptrdiff_t>(i))) {
          matches.push_back({i, phrase.size(), entry.dimension});
        }
      }
    }
  }
  std::sort(matches.begin(), matches.end(), [](const Match& a, const Match& b) {
    return a.length != b.length ? a.length > b.length : a.start < b.start;
  });

  std::vector<bool> used(words.size(), false);
  std::set<Dimension> tags;
  for (const auto& m : matches) {
    const auto begin = used.begin() + static_cast<std::ptrdiff_t>(m.start);
    const auto end = begin + static_cast<std::ptrdiff_t>(m.length);
    if (std::any_of(begin, end, [](bool b) { return b; })) continue;
    std::fill(begin, end, true);
    if (modality == Modality::image && axis_of(m.dimension) == Axis::temporal) continue;
    tags.insert(m.dimension);
  }
  return tags;
}

const Taxonomy& default_taxonomy() {
  static const Taxonomy taxonomy =
      Taxonomy::from_json(nlohmann::json::parse(detail::embedded_file("taxonomy.json")));
  return taxonomy;
}

std::set<Dimension> tag_dimensions(std::string_view think, Modality modality) {
  return default_taxonomy().tag(think, modality);
}

}  // namespace ivyfake
