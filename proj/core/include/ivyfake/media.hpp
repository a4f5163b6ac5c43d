// Copyright 2026 The ivyfake Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ivyfake/types.hpp"

namespace ivyfake {

struct ContentPart;

struct MediaProbe {
  std::optional<int> width;
  std::optional<int> height;
  std::optional<double> duration_s;
};

/// Decodes enough of the file to report image dimensions or video duration.
/// Throws IoError when the file cannot be opened or decoded.
MediaProbe probe_media(const std::filesystem::path& path, Modality modality);

struct MediaLimits {
  std::uintmax_t max_bytes = 512ull * 1024 * 1024;
  int max_image_side = 16384;
  double max_video_s = 600.0;
};

MediaLimits media_limits_from_json(const nlohmann::json& j);

/// Throws MediaLimitError when the file or its probe exceeds `limits`.
void check_media_limits(const std::filesystem::path& path, Modality modality,
                        const MediaProbe& probe, const MediaLimits& limits);

/// Turns a media file into request content parts: one inline image for
/// images, one 384x384 JPEG per planned 1-fps frame for videos.
class MediaEncoder {
 public:
  virtual ~MediaEncoder() = default;
  virtual std::vector<ContentPart> encode(const std::filesystem::path& path, Modality modality,
                                          std::optional<double> duration_s) const = 0;
};

class OpenCvMediaEncoder final : public MediaEncoder {
 public:
  explicit OpenCvMediaEncoder(int jpeg_quality = 90) : jpeg_quality_(jpeg_quality) {}
  std::vector<ContentPart> encode(const std::filesystem::path& path, Modality modality,
                                  std::optional<double> duration_s) const override;

 private:
  int jpeg_quality_;
};

/// MIME type guessed from the extension; empty when unknown.
std::string image_mime_type(const std::filesystem::path& path);

}  // namespace ivyfake
