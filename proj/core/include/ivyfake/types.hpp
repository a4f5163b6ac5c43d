// Copyright 2026 The ivyfake Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace ivyfake {

enum class Modality { image, video };
enum class Label { real, fake };

std::string_view to_string(Modality m) noexcept;
std::string_view to_string(Label l) noexcept;

/// Exact lowercase spelling ("image"/"video"); throws ParseError otherwise.
Modality parse_modality(std::string_view text);
/// Exact lowercase spelling ("real"/"fake"); throws ParseError otherwise.
Label parse_label(std::string_view text);

/// Case-insensitive, whitespace-trimmed verdict match. Used on model output.
std::optional<Label> match_verdict(std::string_view text) noexcept;

std::string_view trim(std::string_view s) noexcept;
std::string to_lower_ascii(std::string_view s);

}  // namespace ivyfake
