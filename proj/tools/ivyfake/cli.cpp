// Copyright 2026 The ivyfake Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include <csignal>
#include <mutex>
#include <optional>
#include <ostream>
#include <thread>

#include "ivyfake/distill.hpp"
#include "ivyfake/errors.hpp"
#include "ivyfake/evalkit.hpp"
#include "ivyfake/gateway.hpp"
#include "ivyfake/instructions.hpp"
#include "ivyfake/jsonl.hpp"
#include "ivyfake/judge.hpp"
#include "ivyfake/preproc.hpp"
#include "ivyfake/protocol.hpp"

namespace ivyfake::cli {
namespace {

namespace fs = std::filesystem;

std::atomic<bool> g_interrupted{false};

extern "C" void on_sigint(int) { g_interrupted = true; }

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
};

struct Context {
  std::ostream& out;
  std::ostream& err;
  const Hooks& hooks;
  GatewayConfig config;

  std::uint64_t seed(const Common& c) const { return c.seed.value_or(config.seed); }

  std::shared_ptr<ChatBackend> backend(const TeacherConfig& cfg) const {
    if (hooks.backend_factory) return hooks.backend_factory(cfg);
    return std::make_shared<HttpChatBackend>(cfg);
  }

  const std::atomic<bool>& cancel() const { return hooks.cancel ? *hooks.cancel : g_interrupted; }
};

void write_output(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << content;
  } else {
    write_text_file_atomic(path, content);
  }
}

std::vector<ExplanationPair> load_pairs(const std::string& path) {
  std::vector<ExplanationPair> pairs;
  for (const auto& row : parse_jsonl(read_text_file(path), path)) {
    try {
      pairs.push_back({row.at("id").get<std::string>(), row.at("reference").get<std::string>(),
                       row.at("candidate").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path + ": pair " + std::to_string(pairs.size() + 1) + ": " + e.what());
    }
  }
  return pairs;
}

// ---------------------------------------------------------------------------
// Subcommand bodies

int cmd_ingest(Context& ctx, const std::string& root, const std::string& rules_path, const std::string& out_path,
               std::size_t threads) {
  const auto rules = rules_from_json(nlohmann::json::parse(read_text_file(rules_path)));
  IngestOptions options;
  options.threads = threads;
  options.probe = ctx.hooks.probe;
  const auto result = ingest_directory(root, rules, options);
  for (const auto& w : result.warnings) ctx.err << "warning: " << w << '\n';
  for (const auto& s : result.skipped) ctx.err << "skipped " << s.path << ": " << s.reason << '\n';
  write_output(out_path, manifest_to_string(result.manifest), ctx.out);
  ctx.err << fmt::format("ingested {} samples ({} skipped, {} unmatched)\n", result.manifest.samples.size(),
                         result.skipped.size(), result.unmatched.size());
  return kExitOk;
}

int cmd_validate(Context& ctx, const std::string& manifest_path, bool check_files) {
  const auto m = load_manifest(manifest_path);
  ValidationOptions options;
  options.check_files = check_files;
  const auto report = validate_manifest(m, options);
  for (const auto& v : report.violations) {
    ctx.out << to_string(v.kind) << '\t' << v.sample_id << '\t' << v.detail << '\n';
  }
  ctx.out << fmt::format("{} samples, {} violations\n", m.samples.size(), report.violations.size());
  return report.valid() ? kExitOk : kExitValidation;
}

int cmd_sample(Context& ctx, const Common& common, const std::string& manifest_path, std::size_t total,
               const std::string& mode, const std::string& out_path) {
  SamplingSpec spec;
  spec.total = total;
  spec.seed = ctx.seed(common);
  spec.quota_mode = mode == "fixed" ? QuotaMode::fixed_per_generator : QuotaMode::proportional;
  const auto sampled = stratified_sample(load_manifest(manifest_path), spec);
  write_output(out_path, manifest_to_string(sampled), ctx.out);
  ctx.err << fmt::format("sampled {} samples\n", sampled.samples.size());
  return kExitOk;
}

int cmd_split(Context& ctx, const Common& common, const std::string& manifest_path, double test_fraction,
              const std::string& train_path, const std::string& test_path) {
  const auto parts = split(load_manifest(manifest_path), test_fraction, ctx.seed(common));
  save_manifest(train_path, parts.train);
  save_manifest(test_path, parts.test);
  ctx.out << fmt::format("train {}\ntest {}\n", parts.train.samples.size(), parts.test.samples.size());
  return kExitOk;
}

int cmd_plan(Context& ctx, std::optional<int> width, std::optional<int> height, std::optional<double> duration,
             const std::string& pooling, bool as_json) {
  const PoolingRule rule = pooling == "floor" ? PoolingRule::floor : PoolingRule::ceil;
  if (duration) {
    if (width || height) throw CLI::ValidationError("--duration excludes --width/--height");
    const auto plan = plan_frames(*duration);
    const auto budget = token_budget(plan, rule);
    if (as_json) {
      nlohmann::ordered_json j;
      j["frames"] = to_json(plan);
      j["tokens"] = to_json(budget);
      ctx.out << j.dump(2) << '\n';
    } else {
      ctx.out << fmt::format("{} frames at 1 fps, {}x{} px each\n", plan.frames(), plan.frame_px, plan.frame_px);
      ctx.out << fmt::format("tokens per frame {} raw, {} pooled\n", budget.per_unit_raw, budget.per_unit_pooled);
      ctx.out << fmt::format("total {} raw, {} pooled\n", budget.total_raw, budget.total_pooled);
    }
    return kExitOk;
  }
  if (!width || !height) throw CLI::ValidationError("plan needs --width and --height, or --duration");
  const auto grid = plan_tiles(*width, *height);
  const auto budget = token_budget(grid, rule);
  if (as_json) {
    nlohmann::ordered_json j;
    j["tiles"] = to_json(grid);
    j["tokens"] = to_json(budget);
    ctx.out << j.dump(2) << '\n';
  } else {
    ctx.out << fmt::format("grid {}x{}, {} tiles of {} px, canvas {}x{}, content {}x{}\n", grid.cols, grid.rows,
                           grid.tiles(), grid.tile_px, grid.resized_w, grid.resized_h, grid.content_w,
                           grid.content_h);
    ctx.out << fmt::format("tokens per tile {} raw, {} pooled\n", budget.per_unit_raw, budget.per_unit_pooled);
    ctx.out << fmt::format("total {} raw, {} pooled\n", budget.total_raw, budget.total_pooled);
  }
  return kExitOk;
}

int cmd_distill(Context& ctx, const std::string& manifest_path, const std::string& out_path,
                std::size_t parallelism, const std::string& checkpoint, bool no_label) {
  TeacherConfig teacher = ctx.config.teacher;
  if (no_label) teacher.label_conditioning = Conditioning::off;
  const auto m = load_manifest(manifest_path);
  const auto backend = ctx.backend(teacher);

  DistillOptions options;
  options.parallelism = parallelism > 0 ? parallelism : ctx.config.parallelism;
  options.checkpoint = checkpoint;
  options.encoder = ctx.hooks.encoder;
  options.sleep = ctx.hooks.sleep;
  options.cancel = &ctx.cancel();
  const auto result = run_distill(m, teacher, *backend, options);
  ctx.out << fmt::format("{} records ({} resumed, {} new), {} new calls\n", result.resumed + result.completed,
                         result.resumed, result.completed, result.new_calls);
  if (result.cancelled) {
    ctx.err << "interrupted; rerun with the same --checkpoint to resume\n";
    return kExitBackend;
  }
  save_annotations(out_path, result.annotated);
  return kExitOk;
}

int cmd_filter(Context& ctx, const std::string& in_path, const std::string& out_path,
               const std::string& rejected_path) {
  const auto filtered = filter_compliant(load_annotations(in_path));
  save_annotations(out_path, filtered.kept);
  if (!rejected_path.empty()) {
    std::string lines;
    for (const auto& r : filtered.rejected) lines += to_json(r).dump() + '\n';
    write_text_file_atomic(rejected_path, lines);
  }
  ctx.out << fmt::format("kept {}, rejected {}\n", filtered.kept.entries.size(), filtered.rejected.size());
  return kExitOk;
}

void report_skipped(Context& ctx, const InstructionSet& set) {
  for (const auto& s : set.skipped) ctx.err << "skipped " << s.sample_id << ": " << s.reason << '\n';
}

int cmd_stage2(Context& ctx, const std::string& in_path, const std::string& out_path) {
  const auto set = build_stage2(load_annotations(in_path));
  report_skipped(ctx, set);
  write_output(out_path, instructions_to_jsonl(set.examples), ctx.out);
  ctx.err << fmt::format("{} stage-2 examples\n", set.examples.size());
  return kExitOk;
}

int cmd_stage3(Context& ctx, const Common& common, const std::string& in_path, const std::string& out_path,
               std::optional<double> fraction) {
  const auto set = build_stage3(load_annotations(in_path), fraction.value_or(ctx.config.detect_fraction),
                                ctx.seed(common));
  report_skipped(ctx, set);
  write_output(out_path, instructions_to_jsonl(set.examples), ctx.out);
  std::size_t detect = 0;
  for (const auto& e : set.examples) detect += e.stage == Stage::s3_detect ? 1 : 0;
  ctx.err << fmt::format("{} stage-3 examples ({} detect, {} explain)\n", set.examples.size(), detect,
                         set.examples.size() - detect);
  return kExitOk;
}

int cmd_detect(Context& ctx, const std::string& media, const std::string& modality, const std::string& id,
               std::optional<double> duration, const std::string& manifest_path, const std::string& out_path) {
  const auto backend = ctx.backend(ctx.config.detector);
  DetectOptions options;
  options.limits = ctx.config.limits;
  options.encoder = ctx.hooks.encoder;
  options.probe = ctx.hooks.probe;
  options.sleep = ctx.hooks.sleep;

  if (manifest_path.empty()) {
    if (media.empty() || modality.empty()) throw CLI::ValidationError("detect needs --media and --modality, or --manifest");
    options.duration_s = duration;
    const auto r = detect(media, parse_modality(modality), id.empty() ? fs::path(media).filename().string() : id,
                          *backend, ctx.config.detector, options);
    ctx.out << to_json(r).dump(2) << '\n';
    return kExitOk;
  }

  const auto m = load_manifest(manifest_path);
  std::vector<std::optional<LabeledPrediction>> rows(m.samples.size());
  std::vector<std::string> failures(m.samples.size());
  std::atomic<std::size_t> next{0};
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < std::min(ctx.config.parallelism, m.samples.size()); ++t) {
      pool.emplace_back([&] {
        for (std::size_t i; !ctx.cancel() && (i = next.fetch_add(1)) < m.samples.size();) {
          const auto& s = m.samples[i];
          DetectOptions local = options;
          local.duration_s = s.duration_s;
          try {
            rows[i] = to_prediction(detect(s.path, s.modality, s.id, *backend, ctx.config.detector, local), s);
          } catch (const Error& e) {
            failures[i] = e.what();
          }
        }
      });
    }
  }
  std::string lines;
  std::size_t failed = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i]) {
      lines += to_json(*rows[i]).dump() + '\n';
    } else {
      ++failed;
      ctx.err << "undetermined " << m.samples[i].id << ": "
              << (failures[i].empty() ? "interrupted" : failures[i]) << '\n';
    }
  }
  write_output(out_path, lines, ctx.out);
  ctx.err << fmt::format("{} predictions, {} undetermined\n", rows.size() - failed, failed);
  return failed == 0 ? kExitOk : kExitBackend;
}

int cmd_evaluate(Context& ctx, const std::string& preds_path, bool as_json, const std::string& out_path) {
  const auto preds = load_predictions(preds_path);
  const auto report = build_report(preds);
  write_output(out_path, as_json ? to_json(report).dump(2) + "\n" : render_text(report), ctx.out);
  const auto failures = check_thresholds(report, ctx.config.thresholds);
  for (const auto& f : failures) ctx.err << "threshold: " << f << '\n';
  return failures.empty() ? kExitOk : kExitValidation;
}

int cmd_judge(Context& ctx, const std::string& pairs_path, std::optional<int> rounds, const std::string& transcript,
              const std::string& out_path) {
  const auto pairs = load_pairs(pairs_path);
  const auto backend = ctx.backend(ctx.config.judge);
  const int n_rounds = rounds.value_or(ctx.config.judge_rounds);

  std::vector<JudgeScore> scores;
  std::string transcript_lines;
  nlohmann::ordered_json per_pair = nlohmann::ordered_json::array();
  for (const auto& p : pairs) {
    const auto gt = parse_response(p.reference);
    const auto out = parse_response(p.candidate);
    if (!is_compliant(gt) || !is_compliant(out)) {
      ctx.err << "skipped " << p.sample_id << ": reference and candidate must both be compliant\n";
      continue;
    }
    auto score = judge_pair(std::get<StructuredResponse>(gt), std::get<StructuredResponse>(out), *backend,
                            ctx.config.judge, n_rounds, ctx.hooks.sleep);
    if (score.missing_rounds) {
      ctx.err << fmt::format("{}: {} of {} rounds valid\n", p.sample_id, score.valid_rounds, n_rounds);
    }
    transcript_lines += transcript_jsonl(p.sample_id, score);
    auto j = to_json(score);
    j["id"] = p.sample_id;
    per_pair.push_back(std::move(j));
    scores.push_back(std::move(score));
  }
  if (!transcript.empty()) write_text_file_atomic(transcript, transcript_lines);
  nlohmann::ordered_json result;
  result["summary"] = to_json(summarize(scores));
  result["pairs"] = std::move(per_pair);
  write_output(out_path, result.dump(2) + "\n", ctx.out);
  return kExitOk;
}

int cmd_report(Context& ctx, const std::string& pairs_path, bool as_json) {
  const auto pairs = load_pairs(pairs_path);
  const auto report = explanation_report(pairs);
  ctx.out << (as_json ? to_json(report).dump(2) + "\n" : render_text(report));
  return kExitOk;
}

int cmd_ablation(Context& ctx, const std::string& with_path, const std::string& without_path) {
  const auto r = measure_label_ablation(load_annotations(with_path), load_annotations(without_path));
  ctx.out << fmt::format("with label     {:.3f} ({} compliant)\nwithout label  {:.3f} ({} compliant)\n", r.acc_with,
                         r.compliant_with, r.acc_without, r.compliant_without);
  return kExitOk;
}

int cmd_serve(Context& ctx, const std::string& host, std::optional<int> port) {
  GatewayConfig config = ctx.config;
  if (!host.empty()) config.server.host = host;
  if (port) config.server.port = *port;
  const auto backend = ctx.backend(config.detector);
  std::shared_ptr<const MediaEncoder> encoder;
  if (ctx.hooks.encoder) encoder = std::shared_ptr<const MediaEncoder>(ctx.hooks.encoder, [](const MediaEncoder*) {});
  DetectionService service(config, backend, encoder, ctx.hooks.probe);
  const int bound = service.bind();
  ctx.err << fmt::format("listening on {}:{}\n", config.server.host, bound);
  if (ctx.hooks.on_listening) ctx.hooks.on_listening(bound);
  std::jthread watcher([&](std::stop_token st) {
    while (!st.stop_requested() && !ctx.cancel()) std::this_thread::sleep_for(std::chrono::milliseconds(50));
    service.stop();
  });
  service.listen();
  return kExitOk;
}

int cmd_protocol_show(Context& ctx) {
  for (const auto kind : {TemplateKind::distill_image, TemplateKind::distill_video, TemplateKind::detect_image,
                          TemplateKind::detect_video, TemplateKind::judge}) {
    const auto& t = prompt_template(kind);
    ctx.out << fmt::format("== {} ({})\n[system]\n{}\n[user]\n{}\n\n", to_string(kind), t.version, t.system_text,
                           t.user_text);
  }
  ctx.out << "== taxonomy\n";
  for (const auto& e : default_taxonomy().entries()) {
    ctx.out << fmt::format("{:<24} {:<8}", to_string(e.dimension), to_string(axis_of(e.dimension)));
    for (std::size_t i = 0; i < e.synonyms.size(); ++i) ctx.out << (i ? ", " : " ") << e.synonyms[i];
    ctx.out << '\n';
  }
  ctx.out << "\n== fixtures\n";
  for (const auto& f : protocol_fixtures()) {
    ctx.out << fmt::format("{}  {:>6}  {}\n", f.sha256, f.bytes, f.name);
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const Hooks& hooks) {
  CLI::App app{"ivyfake: explainable AIGC detection toolkit", "ivyfake"};
  app.require_subcommand(1);
  app.fallthrough();

  Common common;
  app.add_option("--config", common.config_path, "JSON config with backends, limits, seed and server")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", common.seed, "Override the config seed");

  std::function<int(Context&)> action;

  auto* ingest = app.add_subcommand("ingest", "Scan a directory into a manifest");
  std::string root, rules, out_path;
  std::size_t threads = 4;
  ingest->add_option("--root", root)->required()->check(CLI::ExistingDirectory);
  ingest->add_option("--rules", rules, "JSON list of {glob, modality, label, generator, source}")
      ->required()
      ->check(CLI::ExistingFile);
  ingest->add_option("--out", out_path, "Manifest path ('-' for stdout)")->required();
  ingest->add_option("--threads", threads)->check(CLI::PositiveNumber);
  ingest->callback([&] { action = [&](Context& c) { return cmd_ingest(c, root, rules, out_path, threads); }; });

  auto* validate = app.add_subcommand("validate", "Check manifest invariants");
  std::string manifest;
  bool no_file_check = false;
  validate->add_option("--manifest", manifest)->required()->check(CLI::ExistingFile);
  validate->add_flag("--no-file-check", no_file_check, "Skip checking that media files exist");
  validate->callback([&] { action = [&](Context& c) { return cmd_validate(c, manifest, !no_file_check); }; });

  auto* sample = app.add_subcommand("sample", "Stratified sample by (generator, label)");
  std::size_t total = 0;
  std::string mode = "proportional";
  sample->add_option("--manifest", manifest)->required()->check(CLI::ExistingFile);
  sample->add_option("--total", total)->required();
  sample->add_option("--mode", mode)->check(CLI::IsMember({"proportional", "fixed"}));
  sample->add_option("--out", out_path)->required();
  sample->callback([&] { action = [&](Context& c) { return cmd_sample(c, common, manifest, total, mode, out_path); }; });

  auto* split_cmd = app.add_subcommand("split", "Stratified train/test split");
  double test_fraction = 0.0;
  std::string train_path, test_path;
  split_cmd->add_option("--manifest", manifest)->required()->check(CLI::ExistingFile);
  split_cmd->add_option("--test-fraction", test_fraction)->required()->check(CLI::Range(0.0, 1.0));
  split_cmd->add_option("--train", train_path)->required();
  split_cmd->add_option("--test", test_path)->required();
  split_cmd->callback([&] {
    action = [&](Context& c) { return cmd_split(c, common, manifest, test_fraction, train_path, test_path); };
  });

  auto* plan = app.add_subcommand("plan", "Tile or frame plan with token budget");
  std::optional<int> width, height;
  std::optional<double> duration;
  std::string pooling = "ceil";
  bool as_json = false;
  plan->add_option("--width", width);
  plan->add_option("--height", height);
  plan->add_option("--duration", duration, "Video duration in seconds");
  plan->add_option("--pooling", pooling)->check(CLI::IsMember({"ceil", "floor"}));
  plan->add_flag("--json", as_json);
  plan->callback([&] { action = [&](Context& c) { return cmd_plan(c, width, height, duration, pooling, as_json); }; });

  auto* distill = app.add_subcommand("distill", "Annotate a manifest with the teacher model");
  std::size_t parallelism = 0;
  std::string checkpoint;
  bool no_label = false;
  distill->add_option("--manifest", manifest)->required()->check(CLI::ExistingFile);
  distill->add_option("--out", out_path)->required();
  distill->add_option("--parallelism", parallelism, "Worker count (default from config)");
  distill->add_option("--checkpoint", checkpoint, "Append-only JSONL used to resume");
  distill->add_flag("--no-label", no_label, "Disable label conditioning");
  distill->callback([&] {
    action = [&](Context& c) { return cmd_distill(c, manifest, out_path, parallelism, checkpoint, no_label); };
  });

  auto* filter = app.add_subcommand("filter", "Drop non-compliant and label-inconsistent records");
  std::string annotations, rejected;
  filter->add_option("--annotations", annotations)->required()->check(CLI::ExistingFile);
  filter->add_option("--out", out_path)->required();
  filter->add_option("--rejected", rejected, "JSONL of rejected ids with reasons");
  filter->callback([&] { action = [&](Context& c) { return cmd_filter(c, annotations, out_path, rejected); }; });

  auto* stage2 = app.add_subcommand("build-stage2", "Binary detection instruction pairs");
  stage2->add_option("--annotations", annotations)->required()->check(CLI::ExistingFile);
  stage2->add_option("--out", out_path)->required();
  stage2->callback([&] { action = [&](Context& c) { return cmd_stage2(c, annotations, out_path); }; });

  auto* stage3 = app.add_subcommand("build-stage3", "Joint detection and explanation mixture");
  std::optional<double> detect_fraction;
  stage3->add_option("--annotations", annotations)->required()->check(CLI::ExistingFile);
  stage3->add_option("--out", out_path)->required();
  stage3->add_option("--detect-fraction", detect_fraction)->check(CLI::Range(0.0, 1.0));
  stage3->callback([&] {
    action = [&](Context& c) { return cmd_stage3(c, common, annotations, out_path, detect_fraction); };
  });

  auto* detect_cmd = app.add_subcommand("detect", "Explainable detection through the configured backend");
  std::string media, modality, id;
  detect_cmd->add_option("--media", media)->check(CLI::ExistingFile);
  detect_cmd->add_option("--modality", modality)->check(CLI::IsMember({"image", "video"}));
  detect_cmd->add_option("--id", id);
  detect_cmd->add_option("--duration", duration, "Video duration in seconds (skips probing)");
  detect_cmd->add_option("--manifest", manifest, "Detect every sample and write predictions")
      ->check(CLI::ExistingFile);
  detect_cmd->add_option("--out", out_path, "Predictions JSONL for --manifest");
  detect_cmd->callback([&] {
    action = [&](Context& c) { return cmd_detect(c, media, modality, id, duration, manifest, out_path); };
  });

  auto* evaluate = app.add_subcommand("evaluate", "Per-generator detection report");
  std::string preds;
  evaluate->add_option("--preds", preds)->required()->check(CLI::ExistingFile);
  evaluate->add_flag("--json", as_json);
  evaluate->add_option("--out", out_path);
  evaluate->callback([&] { action = [&](Context& c) { return cmd_evaluate(c, preds, as_json, out_path); }; });

  auto* judge = app.add_subcommand("judge", "Score explanations with the judge backend");
  std::string pairs, transcript;
  std::optional<int> rounds;
  judge->add_option("--pairs", pairs, "JSONL of {id, reference, candidate}")->required()->check(CLI::ExistingFile);
  judge->add_option("--rounds", rounds)->check(CLI::PositiveNumber);
  judge->add_option("--transcript", transcript, "JSONL audit log of every judge reply");
  judge->add_option("--out", out_path);
  judge->callback([&] { action = [&](Context& c) { return cmd_judge(c, pairs, rounds, transcript, out_path); }; });

  auto* report = app.add_subcommand("report", "ROUGE-L, SIM and token length of explanations");
  report->add_option("--pairs", pairs, "JSONL of {id, reference, candidate}")->required()->check(CLI::ExistingFile);
  report->add_flag("--json", as_json);
  report->callback([&] { action = [&](Context& c) { return cmd_report(c, pairs, as_json); }; });

  auto* ablation = app.add_subcommand("ablation", "Teacher conclusion accuracy with and without the label");
  std::string with_path, without_path;
  ablation->add_option("--with", with_path)->required()->check(CLI::ExistingFile);
  ablation->add_option("--without", without_path)->required()->check(CLI::ExistingFile);
  ablation->callback([&] { action = [&](Context& c) { return cmd_ablation(c, with_path, without_path); }; });

  auto* serve = app.add_subcommand("serve", "Run the HTTP detection service");
  std::string host;
  std::optional<int> port;
  serve->add_option("--host", host);
  serve->add_option("--port", port)->check(CLI::Range(0, 65535));
  serve->callback([&] { action = [&](Context& c) { return cmd_serve(c, host, port); }; });

  auto* protocol = app.add_subcommand("protocol", "Prompt and taxonomy fixtures");
  protocol->require_subcommand(1);
  auto* show = protocol->add_subcommand("show", "Print templates, taxonomy and fixture checksums");
  show->callback([&] { action = [&](Context& c) { return cmd_protocol_show(c); }; });

  std::vector<const char*> argv{"ivyfake"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  const bool install_sigint = !hooks.cancel;
  if (install_sigint) {
    g_interrupted = false;
    std::signal(SIGINT, on_sigint);
    std::signal(SIGTERM, on_sigint);
  }
  try {
    Context ctx{out, err, hooks, common.config_path.empty() ? GatewayConfig{} : load_gateway_config(common.config_path)};
    return action(ctx);
  } catch (const CLI::ValidationError& e) {
    err << "error: " << e.what() << '\n' << app.help();
    return kExitUsage;
  } catch (const TransportError& e) {
    err << "backend error: " << e.what() << '\n';
    return kExitBackend;
  } catch (const UndeterminedError& e) {
    err << "undetermined: " << e.what() << '\n';
    return kExitBackend;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
}

}  // namespace ivyfake::cli
