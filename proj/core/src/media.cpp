// Copyright 2026 The ivyfake Authors
// SPDX-License-Identifier: Apache-2.0

#include "ivyfake/media.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>
#include <opencv2/videoio.hpp>

#include <cmath>
#include <fstream>
#include <iterator>

#include "ivyfake/chat_backend.hpp"
#include "ivyfake/errors.hpp"
#include "ivyfake/hashing.hpp"
#include "ivyfake/preproc.hpp"

namespace ivyfake {
namespace {

namespace fs = std::filesystem;

std::string read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string data_url(std::string_view mime, std::string_view bytes) {
  return "data:" + std::string(mime) + ";base64," + base64_encode(bytes);
}

std::string encode_jpeg(const cv::Mat& img, int quality) {
  std::vector<std::uint8_t> buf;
  if (!cv::imencode(".jpg", img, buf, {cv::IMWRITE_JPEG_QUALITY, quality})) {
    throw IoError("JPEG encoding failed");
  }
  return data_url("image/jpeg", std::string_view(reinterpret_cast<const char*>(buf.data()), buf.size()));
}

cv::VideoCapture open_video(const fs::path& path) {
  cv::VideoCapture cap(path.string());
  if (!cap.isOpened()) throw IoError("cannot open video " + path.string());
  return cap;
}

}  // namespace

MediaProbe probe_media(const fs::path& path, Modality modality) {
  if (!fs::is_regular_file(path)) throw IoError("no such file " + path.string());
  MediaProbe probe;
  if (modality == Modality::image) {
    const cv::Mat img = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
    if (img.empty()) throw IoError("cannot decode image " + path.string());
    probe.width = img.cols;
    probe.height = img.rows;
    return probe;
  }
  auto cap = open_video(path);
  const double fps = cap.get(cv::CAP_PROP_FPS);
  const double frames = cap.get(cv::CAP_PROP_FRAME_COUNT);
  if (!(fps > 0.0) || !(frames > 0.0)) throw IoError("cannot determine duration of " + path.string());
  // FFmpeg reports plausible metadata for some garbage inputs; demand one frame.
  cv::Mat first;
  if (!cap.read(first) || first.empty()) throw IoError("video has no decodable frames: " + path.string());
  probe.width = static_cast<int>(cap.get(cv::CAP_PROP_FRAME_WIDTH));
  probe.height = static_cast<int>(cap.get(cv::CAP_PROP_FRAME_HEIGHT));
  probe.duration_s = frames / fps;
  return probe;
}

MediaLimits media_limits_from_json(const nlohmann::json& j) {
  MediaLimits l;
  if (!j.is_object()) throw ConfigError("limits must be an object");
  l.max_bytes = j.value("max_bytes", l.max_bytes);
  l.max_image_side = j.value("max_image_side", l.max_image_side);
  l.max_video_s = j.value("max_video_s", l.max_video_s);
  if (l.max_bytes == 0 || l.max_image_side < 1 || !(l.max_video_s > 0.0)) {
    throw ConfigError("limits must be positive");
  }
  return l;
}

void check_media_limits(const fs::path& path, Modality modality, const MediaProbe& probe,
                        const MediaLimits& limits) {
  std::error_code ec;
  const auto size = fs::file_size(path, ec);
  if (ec) throw IoError("cannot stat " + path.string() + ": " + ec.message());
  if (size > limits.max_bytes) {
    throw MediaLimitError(path.filename().string() + " is " + std::to_string(size) +
                          " bytes, limit " + std::to_string(limits.max_bytes));
  }
  if (modality == Modality::image) {
    const int side = std::max(probe.width.value_or(0), probe.height.value_or(0));
    if (side > limits.max_image_side) {
      throw MediaLimitError("image side " + std::to_string(side) + " px exceeds limit " +
                            std::to_string(limits.max_image_side));
    }
  } else if (probe.duration_s && *probe.duration_s > limits.max_video_s) {
    throw MediaLimitError("video lasts " + std::to_string(*probe.duration_s) + " s, limit " +
                          std::to_string(limits.max_video_s));
  }
}

std::string image_mime_type(const fs::path& path) {
  auto ext = to_lower_ascii(path.extension().string());
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".png") return "image/png";
  if (ext == ".webp") return "image/webp";
  if (ext == ".gif") return "image/gif";
  if (ext == ".bmp") return "image/bmp";
  return {};
}

std::vector<ContentPart> OpenCvMediaEncoder::encode(const fs::path& path, Modality modality,
                                                    std::optional<double> duration_s) const {
  if (modality == Modality::image) {
    if (const auto mime = image_mime_type(path); !mime.empty()) {
      return {ContentPart::from_image_url(data_url(mime, read_bytes(path)))};
    }
    const cv::Mat img = cv::imread(path.string(), cv::IMREAD_COLOR);
    if (img.empty()) throw IoError("cannot decode image " + path.string());
    return {ContentPart::from_image_url(encode_jpeg(img, jpeg_quality_))};
  }

  if (!duration_s) duration_s = probe_media(path, modality).duration_s;
  const FramePlan plan = plan_frames(duration_s.value_or(0.0));
  auto cap = open_video(path);
  const double fps = cap.get(cv::CAP_PROP_FPS);
  if (!(fps > 0.0)) throw IoError("video has no frame rate: " + path.string());

  std::vector<ContentPart> parts;
  parts.reserve(plan.frames());
  cv::Mat frame;
  cv::Mat last;
  long long position = -1;
  for (const double t : plan.timestamps_s) {
    const auto wanted = static_cast<long long>(std::llround(t * fps));
    while (position < wanted && cap.read(frame)) {
      ++position;
      last = frame;
    }
    if (last.empty()) throw IoError("video has no decodable frames: " + path.string());
    cv::Mat resized;
    cv::resize(last, resized, cv::Size(plan.frame_px, plan.frame_px), 0, 0, cv::INTER_AREA);
    parts.push_back(ContentPart::from_image_url(encode_jpeg(resized, jpeg_quality_)));
  }
  return parts;
}

}  // namespace ivyfake
