// Copyright 2026 The ivyfake Authors
// SPDX-License-Identifier: Apache-2.0

#include "ivyfake/corpus.hpp"

#include <fnmatch.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "ivyfake/errors.hpp"
#include "ivyfake/jsonl.hpp"
#include "rng.hpp"

namespace ivyfake {
namespace {

namespace fs = std::filesystem;

std::string format_utc(std::time_t t) {
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string default_created_at() {
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch && *epoch) {
    char* end = nullptr;
    const long long v = std::strtoll(epoch, &end, 10);
    if (end && *end == '\0' && v >= 0) return format_utc(static_cast<std::time_t>(v));
  }
  return format_utc(std::chrono::system_clock::to_time_t(std::chrono::system_clock::now()));
}

std::string require_string(const nlohmann::json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_string()) {
    throw ParseError(std::string("sample field '") + key + "' missing or not a string");
  }
  return it->get<std::string>();
}

std::optional<int> optional_int(const nlohmann::json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) return std::nullopt;
  if (!it->is_number_integer()) {
    throw ParseError(std::string("sample field '") + key + "' must be an integer");
  }
  return it->get<int>();
}

using StratumKey = std::pair<std::string, std::string>;  // (generator, label)

/// Strata ordered by generator name, then label.
std::map<StratumKey, std::vector<const MediaSample*>> group_strata(const Manifest& m) {
  std::map<StratumKey, std::vector<const MediaSample*>> strata;
  for (const auto& s : m.samples) {
    strata[{s.generator, std::string(to_string(s.label))}].push_back(&s);
  }
  for (auto& [key, members] : strata) {
    std::sort(members.begin(), members.end(),
              [](const MediaSample* a, const MediaSample* b) { return a->id < b->id; });
  }
  return strata;
}

std::uint64_t stratum_seed(std::uint64_t seed, const StratumKey& key) {
  return detail::splitmix64(seed ^ detail::fnv1a64(key.first + "|" + key.second));
}

Manifest derived_from(const Manifest& m) {
  Manifest out;
  out.schema_version = m.schema_version;
  out.created_at = m.created_at;
  return out;
}

}  // namespace

nlohmann::ordered_json to_json(const MediaSample& s) {
  nlohmann::ordered_json j;
  j["id"] = s.id;
  j["modality"] = to_string(s.modality);
  j["label"] = to_string(s.label);
  j["generator"] = s.generator;
  j["source"] = s.source;
  j["path"] = s.path;
  if (s.width) j["width"] = *s.width;
  if (s.height) j["height"] = *s.height;
  if (s.duration_s) j["duration_s"] = *s.duration_s;
  return j;
}

MediaSample sample_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("sample must be a JSON object");
  static constexpr std::array<std::string_view, 9> kKeys{
      "id", "modality", "label", "generator", "source", "path", "width", "height", "duration_s"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(kKeys.begin(), kKeys.end(), key) == kKeys.end()) {
      throw ParseError("unknown sample field '" + key + "'");
    }
  }
  MediaSample s;
  s.id = require_string(j, "id");
  s.modality = parse_modality(require_string(j, "modality"));
  s.label = parse_label(require_string(j, "label"));
  s.generator = require_string(j, "generator");
  s.source = require_string(j, "source");
  s.path = require_string(j, "path");
  s.width = optional_int(j, "width");
  s.height = optional_int(j, "height");
  if (const auto it = j.find("duration_s"); it != j.end()) {
    if (!it->is_number()) throw ParseError("sample field 'duration_s' must be a number");
    s.duration_s = it->get<double>();
  }
  return s;
}

void canonicalize(Manifest& m) {
  std::stable_sort(m.samples.begin(), m.samples.end(),
                   [](const MediaSample& a, const MediaSample& b) { return a.id < b.id; });
}

void write_manifest(std::ostream& out, const Manifest& m) {
  out << kManifestHeader << " created_at=" << m.created_at << '\n';
  for (const auto& s : m.samples) out << to_json(s).dump() << '\n';
}

std::string manifest_to_string(const Manifest& m) {
  std::ostringstream out;
  write_manifest(out, m);
  return std::move(out).str();
}

Manifest read_manifest(std::istream& in, std::string_view source) {
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = std::move(buf).str();

  const auto first_nl = text.find('\n');
  const std::string_view header =
      trim(std::string_view(text).substr(0, first_nl == std::string::npos ? text.size() : first_nl));
  if (header.substr(0, std::string_view("#ivyfake-manifest v").size()) != "#ivyfake-manifest v") {
    throw ParseError(std::string(source) + ": missing '#ivyfake-manifest' header line");
  }
  Manifest m;
  std::istringstream hs{std::string(header)};
  std::string tag, version, field;
  hs >> tag >> version;
  if (version != "v1") throw ParseError(std::string(source) + ": unsupported manifest " + version);
  m.schema_version = 1;
  while (hs >> field) {
    if (field.rfind("created_at=", 0) == 0) m.created_at = field.substr(11);
  }
  const std::string_view body =
      first_nl == std::string::npos ? std::string_view{} : std::string_view(text).substr(first_nl + 1);
  std::size_t index = 0;
  for (const auto& row : parse_jsonl(body, source)) {
    ++index;
    try {
      m.samples.push_back(sample_from_json(row));
    } catch (const ParseError& e) {
      throw ParseError(std::string(source) + ": sample " + std::to_string(index) + ": " + e.what());
    }
  }
  return m;
}

Manifest load_manifest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open manifest " + path.string());
  return read_manifest(in, path.string());
}

void save_manifest(const fs::path& path, const Manifest& m) {
  write_text_file_atomic(path, manifest_to_string(m));
}

std::string stratum_key(const MediaSample& s) {
  return s.generator + "|" + std::string(to_string(s.label));
}

// ---------------------------------------------------------------------------
// Ingestion

std::vector<IngestRule> rules_from_json(const nlohmann::json& j) {
  const nlohmann::json& list = j.is_object() && j.contains("rules") ? j.at("rules") : j;
  if (!list.is_array()) throw ParseError("ingest rules must be a JSON array");
  std::vector<IngestRule> rules;
  for (const auto& r : list) {
    IngestRule rule;
    rule.glob = require_string(r, "glob");
    rule.modality = parse_modality(require_string(r, "modality"));
    rule.label = parse_label(require_string(r, "label"));
    rule.generator = r.value("generator", std::string{});
    rule.source = r.value("source", std::string{});
    rules.push_back(std::move(rule));
  }
  return rules;
}

IngestResult ingest_directory(const fs::path& root, const std::vector<IngestRule>& rules,
                              const IngestOptions& options) {
  if (rules.empty()) throw DomainError("ingest requires at least one rule");
  for (const auto& r : rules) {
    if (r.glob.empty()) throw DomainError("ingest rule with empty glob");
    if (r.label == Label::fake && r.generator.empty()) {
      throw DomainError("fake rule '" + r.glob + "' must name a generator");
    }
    if (r.label == Label::real && r.generator.empty() && r.source.empty()) {
      throw DomainError("real rule '" + r.glob + "' needs a source or generator");
    }
  }
  std::error_code ec;
  if (!fs::is_directory(root, ec)) throw IoError("ingest root is not a readable directory: " + root.string());

  std::vector<std::string> files;
  fs::recursive_directory_iterator it(root, fs::directory_options::none, ec);
  if (ec) throw IoError("cannot read " + root.string() + ": " + ec.message());
  for (const fs::recursive_directory_iterator end; it != end; it.increment(ec)) {
    if (ec) throw IoError("cannot read " + root.string() + ": " + ec.message());
    if (it->is_regular_file(ec)) {
      files.push_back(fs::relative(it->path(), root, ec).generic_string());
    }
  }
  std::sort(files.begin(), files.end());

  IngestResult result;
  result.manifest.created_at = options.created_at.empty() ? default_created_at() : options.created_at;

  struct Pending {
    std::string rel;
    const IngestRule* rule;
  };
  std::vector<Pending> pending;
  for (const auto& rel : files) {
    const auto match = std::find_if(rules.begin(), rules.end(), [&](const IngestRule& r) {
      return fnmatch(r.glob.c_str(), rel.c_str(), 0) == 0;
    });
    if (match == rules.end()) {
      result.unmatched.push_back(rel);
    } else {
      pending.push_back({rel, &*match});
    }
  }

  const ProbeFn probe = options.probe ? options.probe : ProbeFn(&probe_media);
  std::vector<std::optional<MediaSample>> samples(pending.size());
  std::vector<std::string> failures(pending.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < pending.size(); i = next++) {
      const auto& p = pending[i];
      const fs::path full = root / fs::path(p.rel);
      try {
        const MediaProbe info = probe(full, p.rule->modality);
        MediaSample s;
        s.id = p.rel;
        s.modality = p.rule->modality;
        s.label = p.rule->label;
        s.source = p.rule->source;
        s.generator = !p.rule->generator.empty() ? p.rule->generator : "real-" + p.rule->source;
        s.path = full.generic_string();
        if (s.modality == Modality::image) {
          s.width = info.width;
          s.height = info.height;
        } else {
          s.width = info.width;
          s.height = info.height;
          s.duration_s = info.duration_s;
        }
        samples[i] = std::move(s);
      } catch (const std::exception& e) {
        failures[i] = e.what();
      }
    }
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(options.threads, pending.size()));
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
  }

  for (std::size_t i = 0; i < pending.size(); ++i) {
    if (samples[i]) {
      result.manifest.samples.push_back(std::move(*samples[i]));
    } else {
      result.skipped.push_back({pending[i].rel, failures[i]});
    }
  }
  canonicalize(result.manifest);
  if (pending.empty()) result.warnings.push_back("no files under " + root.string() + " matched the ingest rules");
  return result;
}

// ---------------------------------------------------------------------------
// Validation

std::string_view to_string(ViolationKind k) noexcept {
  switch (k) {
    case ViolationKind::duplicate_id: return "duplicate_id";
    case ViolationKind::missing_file: return "missing_file";
    case ViolationKind::bad_duration: return "bad_duration";
    case ViolationKind::modality_field_mismatch: return "modality_field_mismatch";
    case ViolationKind::bad_dimensions: return "bad_dimensions";
    case ViolationKind::real_generator: return "real_generator";
    case ViolationKind::empty_field: return "empty_field";
    case ViolationKind::not_canonical: return "not_canonical";
  }
  return "unknown";
}

std::size_t ValidationReport::count(ViolationKind k) const noexcept {
  return static_cast<std::size_t>(std::count_if(violations.begin(), violations.end(),
                                                [k](const Violation& v) { return v.kind == k; }));
}

ValidationReport validate_manifest(const Manifest& m, const ValidationOptions& options) {
  ValidationReport report;
  auto add = [&](ViolationKind kind, const std::string& id, std::string detail) {
    report.violations.push_back({kind, id, std::move(detail)});
  };

  std::map<std::string, std::size_t> seen;
  for (const auto& s : m.samples) ++seen[s.id];
  for (const auto& [id, n] : seen) {
    if (n > 1) add(ViolationKind::duplicate_id, id, "id appears " + std::to_string(n) + " times");
  }
  for (std::size_t i = 1; i < m.samples.size(); ++i) {
    if (m.samples[i - 1].id > m.samples[i].id) {
      add(ViolationKind::not_canonical, m.samples[i].id, "samples are not sorted by id");
      break;
    }
  }

  for (const auto& s : m.samples) {
    if (s.id.empty()) add(ViolationKind::empty_field, s.id, "empty id");
    if (s.generator.empty()) add(ViolationKind::empty_field, s.id, "empty generator");
    if (s.path.empty()) add(ViolationKind::empty_field, s.id, "empty path");

    if ((s.width && *s.width <= 0) || (s.height && *s.height <= 0)) {
      add(ViolationKind::bad_dimensions, s.id, "width/height must be positive");
    }
    if (s.modality == Modality::image) {
      if (s.duration_s) add(ViolationKind::modality_field_mismatch, s.id, "image sample carries duration_s");
    } else if (!s.duration_s || !std::isfinite(*s.duration_s) || *s.duration_s <= 0.0) {
      add(ViolationKind::bad_duration, s.id, "video sample needs duration_s > 0");
    }

    if (s.label == Label::real) {
      const bool allowed =
          options.real_generators.empty()
              ? s.generator.rfind("real-", 0) == 0
              : std::find(options.real_generators.begin(), options.real_generators.end(),
                          s.generator) != options.real_generators.end();
      if (!allowed) {
        add(ViolationKind::real_generator, s.id,
            "real sample has non-real generator '" + s.generator + "'");
      }
    }

    if (options.check_files && !s.path.empty()) {
      std::error_code ec;
      if (!fs::is_regular_file(s.path, ec)) add(ViolationKind::missing_file, s.id, "no file at " + s.path);
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Sampling and splitting

std::vector<std::size_t> apportion(const std::vector<std::size_t>& sizes, std::size_t total) {
  const std::size_t population = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
  std::vector<std::size_t> quotas(sizes.size(), 0);
  if (population == 0 || total == 0) return quotas;
  if (total > population) throw DomainError("cannot apportion more than the population");

  std::vector<std::size_t> remainders(sizes.size());
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    const unsigned __int128 scaled = static_cast<unsigned __int128>(total) * sizes[i];
    quotas[i] = static_cast<std::size_t>(scaled / population);
    remainders[i] = static_cast<std::size_t>(scaled % population);
    assigned += quotas[i];
  }
  std::vector<std::size_t> order(sizes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainders[a] > remainders[b]; });
  for (std::size_t k = 0; assigned < total; ++k, ++assigned) ++quotas[order[k]];
  return quotas;
}

Manifest stratified_sample(const Manifest& m, const SamplingSpec& spec) {
  if (spec.total > m.samples.size()) {
    throw DomainError("sample total " + std::to_string(spec.total) + " exceeds manifest size " +
                      std::to_string(m.samples.size()));
  }
  const auto strata = group_strata(m);
  std::vector<std::size_t> sizes;
  for (const auto& [key, members] : strata) sizes.push_back(members.size());

  std::vector<std::size_t> quotas;
  if (spec.quota_mode == QuotaMode::proportional) {
    quotas = apportion(sizes, spec.total);
  } else {
    const std::size_t k = strata.size();
    if (k == 0 || spec.total < k) {
      throw DomainError("fixed_per_generator needs total >= number of strata (" + std::to_string(k) + ")");
    }
    if (spec.total % k != 0) {
      throw DomainError("fixed_per_generator total " + std::to_string(spec.total) +
                        " is not a multiple of the stratum count " + std::to_string(k));
    }
    const std::size_t quota = spec.total / k;
    std::size_t i = 0;
    for (const auto& [key, members] : strata) {
      if (members.size() < quota) throw ShortfallError(key.first + "|" + key.second, members.size(), quota);
      quotas.push_back(quota);
      ++i;
    }
  }

  Manifest out = derived_from(m);
  out.samples.reserve(spec.total);
  std::size_t i = 0;
  for (const auto& [key, members] : strata) {
    auto picked = members;
    detail::seeded_shuffle(picked, stratum_seed(spec.seed, key));
    for (std::size_t n = 0; n < quotas[i]; ++n) out.samples.push_back(*picked[n]);
    ++i;
  }
  canonicalize(out);
  return out;
}

Split split(const Manifest& m, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw DomainError("test_fraction must lie in (0,1), got " + std::to_string(test_fraction));
  }
  const auto strata = group_strata(m);
  std::vector<std::size_t> sizes;
  for (const auto& [key, members] : strata) sizes.push_back(members.size());
  const auto test_total =
      static_cast<std::size_t>(std::llround(static_cast<double>(m.samples.size()) * test_fraction));
  const auto quotas = apportion(sizes, test_total);

  Split result{derived_from(m), derived_from(m)};
  std::size_t i = 0;
  for (const auto& [key, members] : strata) {
    auto order = members;
    detail::seeded_shuffle(order, stratum_seed(seed, key));
    for (std::size_t n = 0; n < order.size(); ++n) {
      (n < quotas[i] ? result.test : result.train).samples.push_back(*order[n]);
    }
    ++i;
  }
  canonicalize(result.train);
  canonicalize(result.test);
  return result;
}

}  // namespace ivyfake
