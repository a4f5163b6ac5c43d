// Copyright 2026 The ivyfake Authors
// SPDX-License-Identifier: Apache-2.0

#include "ivyfake/types.hpp"

#include <algorithm>

#include "ivyfake/errors.hpp"

namespace ivyfake {

ShortfallError::ShortfallError(std::string stratum, std::size_t available,
                               std::size_t requested)
    : Error("stratum '" + stratum + "' has " + std::to_string(available) +
            " samples but the quota requires " + std::to_string(requested)),
      stratum_(std::move(stratum)),
      available_(available),
      requested_(requested) {}

std::string_view to_string(Modality m) noexcept {
  return m == Modality::image ? "image" : "video";
}

std::string_view to_string(Label l) noexcept { return l == Label::real ? "real" : "fake"; }

Modality parse_modality(std::string_view text) {
  if (text == "image") return Modality::image;
  if (text == "video") return Modality::video;
  throw ParseError("unknown modality '" + std::string(text) + "'");
}

Label parse_label(std::string_view text) {
  if (text == "real") return Label::real;
  if (text == "fake") return Label::fake;
  throw ParseError("unknown label '" + std::string(text) + "'");
}

std::optional<Label> match_verdict(std::string_view text) noexcept {
  const std::string lowered = to_lower_ascii(trim(text));
  if (lowered == "real") return Label::real;
  if (lowered == "fake") return Label::fake;
  return std::nullopt;
}

std::string_view trim(std::string_view s) noexcept {
  constexpr std::string_view kSpace = " \t\r\n\f\v";
  const auto first = s.find_first_not_of(kSpace);
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(kSpace);
  return s.substr(first, last - first + 1);
}

std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c);
  });
  return out;
}

}  // namespace ivyfake
