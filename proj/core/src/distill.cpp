// Copyright 2026 The ivyfake Authors
// SPDX-License-Identifier: Apache-2.0

#include "ivyfake/distill.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "ivyfake/errors.hpp"
#include "ivyfake/hashing.hpp"
#include "ivyfake/jsonl.hpp"

namespace ivyfake {
namespace {

namespace fs = std::filesystem;

constexpr std::string_view kCheckpointHeader = "#ivyfake-checkpoint v1";

class CountingBackend final : public ChatBackend {
 public:
  explicit CountingBackend(ChatBackend& inner) : inner_(inner) {}
  ChatReply complete(const ChatRequest& request) override {
    calls_.fetch_add(1, std::memory_order_relaxed);
    return inner_.complete(request);
  }
  std::size_t calls() const noexcept { return calls_.load(); }

 private:
  ChatBackend& inner_;
  std::atomic<std::size_t> calls_{0};
};

/// Serializes checkpoint appends; each record is flushed before the next
/// sample is reported complete.
class CheckpointAppender {
 public:
  explicit CheckpointAppender(const fs::path& path) {
    if (path.empty()) return;
    const bool fresh = !fs::exists(path) || fs::file_size(path) == 0;
    out_.open(path, std::ios::binary | std::ios::app);
    if (!out_) throw IoError("cannot open checkpoint " + path.string());
    if (fresh) out_ << kCheckpointHeader << '\n' << std::flush;
  }

  void append(const AnnotationRecord& r, const std::function<void(const AnnotationRecord&)>& hook) {
    std::lock_guard lock(mu_);
    if (out_.is_open()) {
      out_ << to_json(r).dump() << '\n' << std::flush;
      if (!out_) throw IoError("checkpoint write failed");
    }
    if (hook) hook(r);
  }

 private:
  std::mutex mu_;
  std::ofstream out_;
};

Consistency consistency_of(const ParseResult& response, Conditioning conditioning, Label truth) {
  const auto* r = std::get_if<StructuredResponse>(&response);
  if (!r || conditioning == Conditioning::off) return Consistency::not_applicable;
  return r->conclusion == truth ? Consistency::yes : Consistency::no;
}

}  // namespace

std::string_view to_string(Consistency c) noexcept {
  switch (c) {
    case Consistency::yes: return "yes";
    case Consistency::no: return "no";
    case Consistency::not_applicable: return "n/a";
  }
  return "n/a";
}

Consistency parse_consistency(std::string_view s) {
  if (s == "yes") return Consistency::yes;
  if (s == "no") return Consistency::no;
  if (s == "n/a") return Consistency::not_applicable;
  throw ParseError("label_consistent must be yes, no or n/a, got '" + std::string(s) + "'");
}

nlohmann::ordered_json to_json(const AnnotationRecord& r) {
  nlohmann::ordered_json j;
  j["sample_id"] = r.sample_id;
  j["request_fingerprint"] = r.request_fingerprint;
  if (const auto* s = std::get_if<StructuredResponse>(&r.response)) {
    j["status"] = "compliant";
    j["think"] = s->think;
    j["conclusion"] = to_string(s->conclusion);
    auto dims = nlohmann::ordered_json::array();
    for (const auto d : s->dimensions) dims.push_back(to_string(d));
    j["dimensions"] = std::move(dims);
    j["raw"] = s->raw;
  } else {
    const auto& n = std::get<NonCompliant>(r.response);
    j["status"] = "non_compliant";
    j["reason"] = to_string(n.reason);
    j["raw"] = n.raw;
  }
  j["attempts_used"] = r.attempts_used;
  j["conditioning"] = r.conditioning == Conditioning::on ? "on" : "off";
  j["label_consistent"] = to_string(r.label_consistent);
  return j;
}

AnnotationRecord record_from_json(const nlohmann::json& j) {
  try {
    AnnotationRecord r;
    r.sample_id = j.at("sample_id").get<std::string>();
    r.request_fingerprint = j.at("request_fingerprint").get<std::string>();
    const auto status = j.at("status").get<std::string>();
    if (status == "compliant") {
      StructuredResponse s;
      s.think = j.at("think").get<std::string>();
      s.conclusion = parse_label(j.at("conclusion").get<std::string>());
      for (const auto& d : j.at("dimensions")) s.dimensions.insert(parse_dimension(d.get<std::string>()));
      s.raw = j.at("raw").get<std::string>();
      r.response = std::move(s);
    } else if (status == "non_compliant") {
      r.response = NonCompliant{parse_non_compliance_reason(j.at("reason").get<std::string>()),
                                j.at("raw").get<std::string>()};
    } else {
      throw ParseError("unknown record status '" + status + "'");
    }
    r.attempts_used = j.at("attempts_used").get<int>();
    const auto cond = j.at("conditioning").get<std::string>();
    if (cond != "on" && cond != "off") throw ParseError("conditioning must be on or off");
    r.conditioning = cond == "on" ? Conditioning::on : Conditioning::off;
    r.label_consistent = parse_consistency(j.at("label_consistent").get<std::string>());
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed annotation record: ") + e.what());
  }
}

std::string request_fingerprint(const RenderedPrompt& prompt, const TeacherConfig& cfg) {
  nlohmann::ordered_json j;
  j["system"] = prompt.system;
  j["user"] = prompt.user;
  j["model"] = cfg.model_name;
  j["temperature"] = cfg.temperature;
  return sha256_hex(j.dump());
}

RenderedPrompt distill_prompt(const MediaSample& sample, const TeacherConfig& cfg) {
  const bool on = cfg.label_conditioning == Conditioning::on;
  return render_prompt(distill_kind(sample.modality), sample.modality,
                       on ? std::optional<Label>(sample.label) : std::nullopt, cfg.label_conditioning);
}

ChatRequest build_request(const RenderedPrompt& prompt, std::vector<ContentPart> media,
                          const TeacherConfig& cfg) {
  ChatRequest req;
  req.model = cfg.model_name;
  req.temperature = cfg.temperature;
  req.logprobs = cfg.request_logprobs;
  req.messages.push_back({"system", {ContentPart::from_text(prompt.system)}});
  media.push_back(ContentPart::from_text(prompt.user));
  req.messages.push_back({"user", std::move(media)});
  return req;
}

AnnotationRecord distill_sample(const MediaSample& sample, const TeacherConfig& cfg,
                                ChatBackend& backend, const MediaEncoder& encoder,
                                const SleepFn& sleep) {
  const RenderedPrompt prompt = distill_prompt(sample, cfg);
  auto media = encoder.encode(sample.path, sample.modality, sample.duration_s);
  const ChatRequest req = build_request(prompt, std::move(media), cfg);

  StructuredCall call = call_for_structured_response(backend, cfg, req, sleep);
  if (auto* r = std::get_if<StructuredResponse>(&call.response)) {
    r->dimensions = tag_dimensions(r->think, sample.modality);
  }
  AnnotationRecord rec;
  rec.sample_id = sample.id;
  rec.request_fingerprint = request_fingerprint(prompt, cfg);
  rec.attempts_used = call.attempts;
  rec.conditioning = cfg.label_conditioning;
  rec.label_consistent = consistency_of(call.response, cfg.label_conditioning, sample.label);
  rec.response = std::move(call.response);
  return rec;
}

// ---------------------------------------------------------------------------
// Annotated manifest I/O

void write_annotations(std::ostream& out, const AnnotatedManifest& am) {
  out << kAnnotationsHeader << " created_at=" << am.created_at << '\n';
  for (const auto& e : am.entries) {
    nlohmann::ordered_json j;
    j["sample"] = to_json(e.sample);
    j["record"] = to_json(e.record);
    out << j.dump() << '\n';
  }
}

std::string annotations_to_string(const AnnotatedManifest& am) {
  std::ostringstream out;
  write_annotations(out, am);
  return std::move(out).str();
}

AnnotatedManifest read_annotations(std::istream& in, std::string_view source) {
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = std::move(buf).str();
  const auto first_nl = text.find('\n');
  const std::string header = text.substr(0, first_nl);
  if (header.rfind(kAnnotationsHeader, 0) != 0) {
    throw ParseError(std::string(source) + ": missing '" + std::string(kAnnotationsHeader) + "' header");
  }
  AnnotatedManifest am;
  if (const auto pos = header.find("created_at="); pos != std::string::npos) {
    am.created_at = std::string(trim(std::string_view(header).substr(pos + 11)));
  }
  for (const auto& row : parse_jsonl(text, source)) {
    try {
      AnnotatedSample e{sample_from_json(row.at("sample")), record_from_json(row.at("record"))};
      if (e.sample.id != e.record.sample_id) throw ParseError("sample/record id mismatch");
      am.entries.push_back(std::move(e));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string(source) + ": " + e.what());
    } catch (const ParseError& e) {
      throw ParseError(std::string(source) + ": entry " + std::to_string(am.entries.size() + 1) + ": " +
                       e.what());
    }
  }
  return am;
}

AnnotatedManifest load_annotations(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open annotations " + path.string());
  return read_annotations(in, path.string());
}

void save_annotations(const fs::path& path, const AnnotatedManifest& am) {
  write_text_file_atomic(path, annotations_to_string(am));
}

// ---------------------------------------------------------------------------
// Pipeline

std::vector<AnnotationRecord> load_checkpoint(const fs::path& path) {
  if (path.empty() || !fs::exists(path)) return {};
  std::string text = read_text_file(path);
  if (!text.empty() && text.back() != '\n') {
    const auto last_nl = text.rfind('\n');
    const auto keep = last_nl == std::string::npos ? 0 : last_nl + 1;
    text.resize(keep);
    fs::resize_file(path, keep);
  }
  std::vector<AnnotationRecord> out;
  for (const auto& row : parse_jsonl(text, path.string())) out.push_back(record_from_json(row));
  return out;
}

DistillResult run_distill(const Manifest& m, const TeacherConfig& cfg, ChatBackend& backend,
                          const DistillOptions& options) {
  if (options.parallelism < 1) throw DomainError("parallelism must be >= 1");
  cfg.validate();

  std::unordered_map<std::string, const MediaSample*> by_id;
  for (const auto& s : m.samples) {
    if (!by_id.emplace(s.id, &s).second) throw DomainError("duplicate sample id " + s.id);
  }

  std::map<std::string, AnnotationRecord> done;
  for (auto& rec : load_checkpoint(options.checkpoint)) {
    const auto it = by_id.find(rec.sample_id);
    if (it == by_id.end()) {
      throw CheckpointMismatch("checkpoint record '" + rec.sample_id + "' is not in the manifest");
    }
    if (rec.request_fingerprint != request_fingerprint(distill_prompt(*it->second, cfg), cfg)) {
      throw CheckpointMismatch("checkpoint record '" + rec.sample_id +
                               "' was produced with a different prompt, model or temperature");
    }
    const std::string id = rec.sample_id;
    if (!done.emplace(id, std::move(rec)).second) {
      throw CheckpointMismatch("checkpoint holds sample '" + id + "' twice");
    }
  }

  DistillResult result;
  result.resumed = done.size();

  std::vector<const MediaSample*> pending;
  for (const auto& s : m.samples) {
    if (!done.count(s.id)) pending.push_back(&s);
  }
  std::sort(pending.begin(), pending.end(),
            [](const MediaSample* a, const MediaSample* b) { return a->id < b->id; });

  const OpenCvMediaEncoder default_encoder;
  const MediaEncoder& encoder = options.encoder ? *options.encoder : default_encoder;
  CountingBackend counted(backend);
  CheckpointAppender appender(options.checkpoint);

  std::mutex mu;
  std::exception_ptr fatal;
  std::atomic<bool> abort{false};
  auto stopped = [&] {
    return abort.load() || (options.cancel && options.cancel->load());
  };

  for (int pass = 0; pass <= options.max_requeues && !pending.empty() && !stopped(); ++pass) {
    std::vector<const MediaSample*> failed;
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i; !stopped() && (i = next.fetch_add(1)) < pending.size();) {
        const MediaSample& sample = *pending[i];
        try {
          AnnotationRecord rec = distill_sample(sample, cfg, counted, encoder, options.sleep);
          appender.append(rec, options.on_record);
          std::lock_guard lock(mu);
          done.emplace(sample.id, std::move(rec));
        } catch (const TransportError& e) {
          if (!e.retryable()) {
            std::lock_guard lock(mu);
            if (!fatal) fatal = std::current_exception();
            abort = true;
            return;
          }
          std::lock_guard lock(mu);
          failed.push_back(&sample);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!fatal) fatal = std::current_exception();
          abort = true;
          return;
        }
      }
    };
    {
      std::vector<std::jthread> pool;
      const std::size_t n = std::min(options.parallelism, pending.size());
      pool.reserve(n);
      for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
    }
    if (fatal) std::rethrow_exception(fatal);
    std::sort(failed.begin(), failed.end(),
              [](const MediaSample* a, const MediaSample* b) { return a->id < b->id; });
    pending = std::move(failed);
  }

  result.new_calls = counted.calls();
  result.completed = done.size() - result.resumed;
  if (stopped()) {
    result.cancelled = true;
    return result;
  }
  if (!pending.empty()) {
    std::string ids;
    for (const auto* s : pending) ids += (ids.empty() ? "" : ", ") + s->id;
    throw TransportError("backend unavailable for " + std::to_string(pending.size()) +
                             " sample(s) after requeue: " + ids,
                         /*retryable=*/true);
  }

  result.annotated.created_at = m.created_at;
  result.annotated.entries.reserve(done.size());
  for (auto& [id, rec] : done) {
    result.annotated.entries.push_back({*by_id.at(id), std::move(rec)});
  }
  return result;
}

FilterResult filter_compliant(const AnnotatedManifest& am) {
  FilterResult out;
  out.kept.created_at = am.created_at;
  for (const auto& e : am.entries) {
    if (const auto* n = std::get_if<NonCompliant>(&e.record.response)) {
      out.rejected.push_back({e, "non_compliant:" + std::string(to_string(n->reason))});
    } else if (e.record.label_consistent == Consistency::no) {
      out.rejected.push_back({e, "label_mismatch"});
    } else {
      out.kept.entries.push_back(e);
    }
  }
  return out;
}

nlohmann::ordered_json to_json(const Rejection& r) {
  nlohmann::ordered_json j;
  j["id"] = r.entry.sample.id;
  j["reason"] = r.reason;
  return j;
}

LabelAblation measure_label_ablation(const AnnotatedManifest& with_label,
                                     const AnnotatedManifest& without_label) {
  auto ids = [](const AnnotatedManifest& am) {
    std::set<std::string> s;
    for (const auto& e : am.entries) s.insert(e.sample.id);
    return s;
  };
  if (ids(with_label) != ids(without_label)) {
    throw DomainError("label ablation needs both record sets to cover the same sample ids");
  }
  auto accuracy = [](const AnnotatedManifest& am, std::size_t& compliant, const char* side) {
    std::size_t correct = 0;
    compliant = 0;
    for (const auto& e : am.entries) {
      if (const auto* r = std::get_if<StructuredResponse>(&e.record.response)) {
        ++compliant;
        if (r->conclusion == e.sample.label) ++correct;
      }
    }
    if (compliant == 0) throw DomainError(std::string("no compliant records ") + side + " label");
    return static_cast<double>(correct) / static_cast<double>(compliant);
  };
  LabelAblation out;
  out.acc_with = accuracy(with_label, out.compliant_with, "with");
  out.acc_without = accuracy(without_label, out.compliant_without, "without");
  return out;
}

}  // namespace ivyfake
