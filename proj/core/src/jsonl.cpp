// Copyright 2026 The ivyfake Authors
// SPDX-License-Identifier: Apache-2.0

#include "ivyfake/jsonl.hpp"

#include <fstream>
#include <sstream>

#include "ivyfake/errors.hpp"
#include "ivyfake/types.hpp"

namespace ivyfake {

std::vector<nlohmann::json> parse_jsonl(std::string_view text, std::string_view source) {
  std::vector<nlohmann::json> rows;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = text.find('\n', pos);
    const auto line = text.substr(pos, end == std::string_view::npos ? text.size() - pos : end - pos);
    ++line_no;
    const auto body = trim(line);
    if (!body.empty() && body.front() != '#') {
      try {
        rows.push_back(nlohmann::json::parse(body));
      } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string(source) + ":" + std::to_string(line_no) + ": " + e.what());
      }
    }
    if (end == std::string_view::npos) break;
    pos = end + 1;
  }
  return rows;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path.string());
  return std::move(buf).str();
}

void write_text_file_atomic(const std::filesystem::path& path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("rename " + tmp.string() + " -> " + path.string() + ": " + ec.message());
}

}  // namespace ivyfake
