// Copyright 2026 The ivyfake Authors
// SPDX-License-Identifier: Apache-2.0

#include <httplib.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <tuple>

#include "ivyfake/errors.hpp"
#include "ivyfake/gateway.hpp"

namespace ivyfake {
namespace {

namespace fs = std::filesystem;

/// Uploaded or downloaded media, removed on scope exit.
class TempMedia {
 public:
  TempMedia(std::string_view bytes, const std::string& extension) {
    std::string pattern = (fs::temp_directory_path() / "ivyfake-XXXXXX").string() + extension;
    const int fd = ::mkstemps(pattern.data(), static_cast<int>(extension.size()));
    if (fd < 0) throw IoError("cannot create temporary media file");
    ::close(fd);
    path_ = pattern;
    std::ofstream out(path_, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("cannot write temporary media file");
  }
  ~TempMedia() {
    std::error_code ec;
    fs::remove(path_, ec);
  }
  TempMedia(const TempMedia&) = delete;
  TempMedia& operator=(const TempMedia&) = delete;

  const fs::path& path() const noexcept { return path_; }

 private:
  fs::path path_;
};

void send_json(httplib::Response& res, int status, const nlohmann::ordered_json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& reason) {
  nlohmann::ordered_json body;
  body["error"] = reason;
  send_json(res, status, body);
}

std::string extension_of(const std::string& name) {
  const auto ext = fs::path(name).extension().string();
  // mkstemps needs a bounded, plain suffix.
  if (ext.size() > 8 || ext.find_first_of("/\\") != std::string::npos) return {};
  return ext;
}

Modality modality_from(const std::string& field, const std::string& content_type) {
  if (!field.empty()) return parse_modality(field);
  if (content_type.rfind("image/", 0) == 0) return Modality::image;
  if (content_type.rfind("video/", 0) == 0) return Modality::video;
  throw ParseError("modality is required (image or video)");
}

struct DetectRequest {
  std::string bytes;
  std::string extension;
  Modality modality = Modality::image;
  std::string id;
  std::optional<double> duration_s;
};

}  // namespace

struct DetectionService::Impl {
  GatewayConfig config;
  std::shared_ptr<ChatBackend> detector;
  std::shared_ptr<const MediaEncoder> encoder;
  ProbeFn probe;
  httplib::Server server;
  std::atomic<std::uint64_t> requests{0};

  DetectRequest read_multipart(const httplib::Request& req) {
    if (!req.has_file("media")) throw ParseError("multipart field 'media' is missing");
    const auto file = req.get_file_value("media");
    DetectRequest d;
    d.bytes = file.content;
    d.extension = extension_of(file.filename);
    d.modality = modality_from(req.has_file("modality") ? req.get_file_value("modality").content : "",
                               file.content_type);
    d.id = req.has_file("id") ? req.get_file_value("id").content : file.filename;
    if (req.has_file("duration_s")) {
      const auto text = req.get_file_value("duration_s").content;
      char* end = nullptr;
      const double v = std::strtod(text.c_str(), &end);
      if (end == text.c_str() || *end != '\0' || !std::isfinite(v)) throw ParseError("duration_s must be a number");
      d.duration_s = v;
    }
    return d;
  }

  DetectRequest read_url(const httplib::Request& req) {
    const auto body = nlohmann::json::parse(req.body, nullptr, /*allow_exceptions=*/false);
    if (!body.is_object() || !body.contains("url") || !body.at("url").is_string()) {
      throw ParseError("expected multipart media or a JSON object with a 'url' string");
    }
    const auto url = body.at("url").get<std::string>();
    std::string base, path;
    try {
      std::tie(base, path) = split_endpoint(url);
    } catch (const ConfigError& e) {
      throw ParseError(e.what());
    }
    httplib::Client client(base);
    client.set_follow_location(true);
    client.set_connection_timeout(30, 0);
    client.set_read_timeout(60, 0);

    DetectRequest d;
    bool too_large = false;
    const auto res = client.Get(path, [&](const char* data, std::size_t len) {
      if (d.bytes.size() + len > config.limits.max_bytes) {
        too_large = true;
        return false;
      }
      d.bytes.append(data, len);
      return true;
    });
    if (too_large) throw MediaLimitError("media at " + url + " exceeds " + std::to_string(config.limits.max_bytes) + " bytes");
    if (!res || res->status != 200) throw ParseError("could not fetch " + url);
    d.extension = extension_of(path.substr(0, path.find('?')));
    d.modality = modality_from(body.value("modality", ""), res->get_header_value("Content-Type"));
    d.id = body.value("id", url);
    if (body.contains("duration_s")) d.duration_s = body.at("duration_s").get<double>();
    return d;
  }

  void handle_detect(const httplib::Request& req, httplib::Response& res) {
    try {
      const DetectRequest d = req.is_multipart_form_data() ? read_multipart(req) : read_url(req);
      const TempMedia media(d.bytes, d.extension);
      DetectOptions options;
      options.limits = config.limits;
      options.encoder = encoder.get();
      options.probe = probe;
      options.duration_s = d.duration_s;
      const auto result = detect(media.path(), d.modality, d.id, *detector, config.detector, options);
      send_json(res, 200, to_json(result));
    } catch (const MediaLimitError& e) {
      send_error(res, 413, e.what());
    } catch (const UndeterminedError& e) {
      send_error(res, 422, e.what());
    } catch (const TransportError& e) {
      res.set_header("Retry-After", std::to_string(static_cast<long>(std::ceil(config.detector.backoff_max_s))));
      send_error(res, 502, e.what());
    } catch (const ConfigError& e) {
      send_error(res, 500, e.what());
    } catch (const Error& e) {
      send_error(res, 400, e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, e.what());
    }
  }

  void handle_evaluate(const httplib::Request& req, httplib::Response& res) {
    try {
      const std::string& body = req.has_file("preds") ? req.get_file_value("preds").content : req.body;
      const auto preds = parse_predictions(body, "request body");
      send_json(res, 200, to_json(build_report(preds)));
    } catch (const Error& e) {
      send_error(res, 400, e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, e.what());
    }
  }

  void install_routes() {
    server.set_payload_max_length(static_cast<std::size_t>(config.limits.max_bytes) + (1u << 20));
    const std::size_t threads = config.server.threads;
    server.new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
    server.set_pre_routing_handler([this](const httplib::Request&, httplib::Response&) {
      requests.fetch_add(1, std::memory_order_relaxed);
      return httplib::Server::HandlerResponse::Unhandled;
    });
    server.Get("/v1/healthz", [this](const httplib::Request&, httplib::Response& res) {
      nlohmann::ordered_json body;
      body["status"] = "ok";
      body["requests"] = requests.load();
      send_json(res, 200, body);
    });
    server.Get("/v1/taxonomy",
               [](const httplib::Request&, httplib::Response& res) { send_json(res, 200, taxonomy_json()); });
    server.Post("/v1/detect", [this](const httplib::Request& req, httplib::Response& res) { handle_detect(req, res); });
    server.Post("/v1/evaluate",
                [this](const httplib::Request& req, httplib::Response& res) { handle_evaluate(req, res); });
  }
};

DetectionService::DetectionService(GatewayConfig config, std::shared_ptr<ChatBackend> detector,
                                   std::shared_ptr<const MediaEncoder> encoder, ProbeFn probe)
    : impl_(std::make_unique<Impl>()) {
  if (!detector) throw ConfigError("detection service needs a detector backend");
  impl_->config = std::move(config);
  impl_->detector = std::move(detector);
  impl_->encoder = encoder ? std::move(encoder) : std::make_shared<OpenCvMediaEncoder>();
  impl_->probe = std::move(probe);
  impl_->install_routes();
}

DetectionService::~DetectionService() { stop(); }

int DetectionService::bind() {
  const auto& s = impl_->config.server;
  if (s.port == 0) {
    const int port = impl_->server.bind_to_any_port(s.host);
    if (port < 0) throw IoError("cannot bind " + s.host);
    return port;
  }
  if (!impl_->server.bind_to_port(s.host, s.port)) {
    throw IoError("cannot bind " + s.host + ":" + std::to_string(s.port));
  }
  return s.port;
}

void DetectionService::listen() {
  if (!impl_->server.listen_after_bind()) throw IoError("HTTP server stopped with an error");
}

void DetectionService::stop() {
  if (impl_) impl_->server.stop();
}

bool DetectionService::running() const { return impl_->server.is_running(); }

std::uint64_t DetectionService::requests_served() const noexcept { return impl_->requests.load(); }

}  // namespace ivyfake
