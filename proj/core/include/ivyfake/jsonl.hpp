// Copyright 2026 The ivyfake Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace ivyfake {

/// Parses JSON Lines text. Blank lines and lines starting with '#' are skipped.
/// Throws ParseError naming `source` and the 1-based line number.
std::vector<nlohmann::json> parse_jsonl(std::string_view text, std::string_view source = "<input>");

std::string read_text_file(const std::filesystem::path& path);

/// Writes through a sibling temp file and renames it over `path`.
void write_text_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace ivyfake
