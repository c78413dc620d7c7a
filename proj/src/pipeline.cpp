// SPDX-License-Identifier: Apache-2.0
#include "codesynth/pipeline.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <mutex>
#include <random>
#include <thread>

#include "codesynth/hashing.hpp"
#include "codesynth/parsers.hpp"
#include "codesynth/prompt.hpp"

namespace codesynth {
namespace {

using Clock = std::chrono::steady_clock;
using ojson = nlohmann::ordered_json;

// Raised inside run_job when a stage runs out of attempts.
struct StageFailed {
  Stage stage;
  ErrorCode code;
  int attempts;
  std::string message;
};

bool retryable(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kEmptyOutput:
    case ErrorCode::kCountMismatch:
    case ErrorCode::kNoObjectFound:
    case ErrorCode::kMalformedPayload:
    case ErrorCode::kNoCodeBlock:
    case ErrorCode::kMultipleAmbiguousBlocks:
    case ErrorCode::kZeroValidTriplets:
    case ErrorCode::kCompileError:
    case ErrorCode::kTimeout:
    case ErrorCode::kNoOutputImage:
    case ErrorCode::kUndecodableImage:
    case ErrorCode::kImageRejected:
    case ErrorCode::kZeroMarkersFound:
    case ErrorCode::kDimensionMismatch:
      return true;
    default:
      return false;
  }
}

// Runs `fn(attempt, seed, cache_hit)` until it succeeds, a non-retryable
// error occurs, or attempts run out. Appends one outcome to `log`.
template <typename Fn>
auto run_stage(Stage stage, std::uint64_t job_seed, int max_attempts, std::vector<StageOutcome>& log, Fn&& fn)
    -> decltype(fn(0, std::uint64_t{0}, std::declval<bool&>())) {
  const auto start = Clock::now();
  StageOutcome outcome{stage, 0, false, 0.0, false};
  ErrorCode last_code = ErrorCode::kStageExhausted;
  std::string last_message;
  for (int attempt = 0; attempt < std::max(1, max_attempts); ++attempt) {
    outcome.attempts = attempt + 1;
    bool cache_hit = true;
    try {
      auto value = fn(attempt, derive_stage_seed(job_seed, static_cast<int>(stage), attempt), cache_hit);
      outcome.ok = true;
      outcome.cache_hit = cache_hit;
      outcome.duration_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
      log.push_back(outcome);
      return value;
    } catch (const Error& e) {
      last_code = e.code();
      last_message = e.what();
      if (!retryable(e.code())) break;
    }
  }
  outcome.duration_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
  log.push_back(outcome);
  throw StageFailed{stage, last_code, outcome.attempts, last_message};
}

LlmRequest make_request(const StageModel& model, Stage stage, std::string prompt, std::uint64_t seed) {
  LlmRequest r;
  r.provider_id = model.provider_id;
  r.model_id = model.model_id;
  r.prompt = std::move(prompt);
  r.temperature = model.temperature;
  r.top_p = model.top_p;
  r.sampling_seed = seed;
  r.stage = stage;
  return r;
}

RenderedImage render_checked(const CodeArtifact& artifact, const std::filesystem::path& dir,
                             const PipelineDeps& deps, const PipelineConfig& config, std::size_t job_index,
                             int attempt) {
  SandboxPolicy policy = config.sandbox;
  policy.working_dir = dir;
  RenderedImage img = deps.renderer.render(artifact, policy, RenderContext{job_index, attempt});
  const auto verdict = validate_image(img, config.constraints);
  if (!verdict) {
    throw Error(ErrorCode::kImageRejected, verdict.constraint + " = " + std::to_string(verdict.measured));
  }
  return img;
}

void write_failure(const std::filesystem::path& workspace, const JobFailure& f) {
  std::error_code ec;
  std::filesystem::create_directories(workspace, ec);
  ojson j;
  j["record_id"] = f.record_id;
  j["job_index"] = f.job_index;
  j["pipeline_id"] = f.pipeline_id;
  j["stage"] = to_string(f.stage);
  j["error"] = to_string(f.code);
  j["kind"] = to_string(f.kind);
  j["attempts"] = f.attempts;
  j["message"] = f.message;
  std::ofstream(workspace / "failure.json") << j.dump(2, ' ', false, ojson::error_handler_t::replace) << "\n";
}

template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) fn(i);
  };
  const int count = std::max(1, std::min<int>(workers, static_cast<int>(n)));
  std::vector<std::jthread> pool;
  for (int t = 1; t < count; ++t) pool.emplace_back(worker);
  worker();
}

struct BatchState {
  std::vector<std::optional<JobResult>> results;
  std::vector<std::filesystem::path> workspaces;
};

std::string stage_key(Stage s) {
  std::string k(to_string(s));
  std::replace(k.begin(), k.end(), '-', '_');
  return k;
}

void check_output(const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (fs::exists(out_dir, ec) && (!fs::is_directory(out_dir, ec) || !fs::is_empty(out_dir, ec))) {
    throw Error(ErrorCode::kOutputExists, out_dir.string() + " already exists and is not empty");
  }
  const auto parent = fs::absolute(out_dir).parent_path();
  fs::create_directories(parent, ec);
  if (ec || ::access(parent.c_str(), W_OK) != 0) {
    throw Error(ErrorCode::kOutputUnwritable, parent.string() + " is not writable");
  }
}

std::filesystem::path work_root_for(const PipelineConfig& config, const std::filesystem::path& out_dir) {
  auto root = config.work_root.empty() ? std::filesystem::path(out_dir.string() + ".work") : config.work_root;
  std::error_code ec;
  std::filesystem::create_directories(root, ec);
  if (ec) throw Error(ErrorCode::kOutputUnwritable, "cannot create " + root.string() + ": " + ec.message());
  return root;
}

BatchResult finish_batch(BatchState& state, const PipelineDeps& deps, const PipelineConfig& config,
                         const GatewayStats& before, const std::filesystem::path& out_dir,
                         const std::filesystem::path& work_root, const std::optional<ojson>& effective_config) {
  namespace fs = std::filesystem;
  BatchReport report;
  report.jobs = state.results.size();
  std::vector<DatasetRecord> records;
  std::vector<std::pair<fs::path, std::string>> failed_workspaces;
  for (std::size_t i = 0; i < state.results.size(); ++i) {
    auto& result = *state.results[i];
    if (auto* rec = std::get_if<DatasetRecord>(&result)) {
      ++report.per_pipeline[rec->pipeline_id].succeeded;
      records.push_back(std::move(*rec));
    } else {
      auto& f = std::get<JobFailure>(result);
      ++report.failed;
      ++report.failures_by_stage[stage_key(f.stage)];
      ++report.failures_by_kind[std::string(to_string(f.kind))];
      ++report.per_pipeline[f.pipeline_id].failed;
      failed_workspaces.emplace_back(state.workspaces[i], f.record_id);
      report.failures.push_back(std::move(f));
    }
  }
  if (config.dedup) {
    auto [kept, dropped] = dedup(std::move(records));
    records = std::move(kept);
    report.deduplicated = dropped;
  }
  report.succeeded = records.size();
  const GatewayStats after = deps.gateway.stats();
  report.llm_requests = after.requests - before.requests;
  report.cache_hits = after.cache_hits - before.cache_hits;
  report.cache_hit_rate =
      report.llm_requests ? static_cast<double>(report.cache_hits) / static_cast<double>(report.llm_requests) : 0.0;

  if (records.empty()) {
    throw Error(ErrorCode::kAllJobsFailed, "all " + std::to_string(report.jobs) +
                                               " jobs failed; workspaces kept under " + work_root.string());
  }
  ShardExtras extras;
  extras.styles = config.styles;
  extras.run.failures_by_stage = report.failures_by_stage;
  extras.run.cache_hit_rate = report.cache_hit_rate;
  extras.report = report_to_json(report);
  extras.config = effective_config;
  DatasetShard shard = write_shard(std::move(records), out_dir, extras);

  std::error_code ec;
  if (!failed_workspaces.empty()) {
    fs::create_directories(out_dir / "failures", ec);
    for (const auto& [ws, id] : failed_workspaces) fs::rename(ws, out_dir / "failures" / id, ec);
  }
  fs::remove_all(work_root, ec);
  return BatchResult{std::move(shard), std::move(report)};
}

}  // namespace

std::string_view to_string(FailureKind kind) noexcept {
  switch (kind) {
    case FailureKind::kRender: return "render-failed";
    case FailureKind::kParse: return "parse-failed";
    case FailureKind::kProvider: return "provider-failed";
    case FailureKind::kOther: return "other";
  }
  return "other";
}

FailureKind classify_failure(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kToolMissing:
    case ErrorCode::kCompileError:
    case ErrorCode::kTimeout:
    case ErrorCode::kNoOutputImage:
    case ErrorCode::kUndecodableImage:
    case ErrorCode::kImageRejected:
    case ErrorCode::kZeroMarkersFound:
    case ErrorCode::kMarkerCollision:
    case ErrorCode::kDimensionMismatch:
      return FailureKind::kRender;
    case ErrorCode::kEmptyOutput:
    case ErrorCode::kCountMismatch:
    case ErrorCode::kNoObjectFound:
    case ErrorCode::kMalformedPayload:
    case ErrorCode::kNoCodeBlock:
    case ErrorCode::kMultipleAmbiguousBlocks:
    case ErrorCode::kZeroValidTriplets:
      return FailureKind::kParse;
    case ErrorCode::kProviderUnavailable:
    case ErrorCode::kRateLimitExhausted:
    case ErrorCode::kTransportError:
      return FailureKind::kProvider;
    default:
      return FailureKind::kOther;
  }
}

std::vector<GenerationJob> plan_jobs(const GenerationQuery& query, const PipelineDeps& deps) {
  std::vector<GenerationJob> jobs;
  for (const auto& alloc : select_pipelines(query, deps.registry)) {
    for (int k = 0; k < alloc.count; ++k) {
      GenerationJob job;
      job.query = query;
      job.index = jobs.size();
      job.pipeline = alloc.spec;
      job.job_seed = derive_job_seed(query.seed, job.index);
      job.persona_id = sample_persona(deps.personas, job.job_seed).id;
      jobs.push_back(std::move(job));
    }
  }
  return jobs;
}

PointingResult synthesize_pointing(const CodeArtifact& code, const Image& original, const PointEditContext& context,
                                   const PromptTemplate& tpl, const PipelineDeps& deps, const PipelineConfig& config,
                                   const std::filesystem::path& workspace, std::size_t job_index,
                                   std::vector<StageOutcome>& log) {
  MarkerSpec marker;
  try {
    marker = choose_marker(original, config.marker);
  } catch (const Error&) {
    log.push_back({Stage::kPointEdit, 0, false, 0.0, false});
    throw;
  }
  try {
    return run_stage(Stage::kPointEdit, context.sampling_seed, config.max_attempts, log,
                     [&](int attempt, std::uint64_t seed, bool& hit) {
                       PointEditContext ctx = context;
                       ctx.sampling_seed = seed;
                       PointEdit edit =
                           generate_point_edit(code, marker, ctx, tpl, config.point_edit_model, deps.gateway);
                       hit = edit.response.cached;
                       const auto dir = workspace / ("point-" + std::to_string(attempt));
                       const RenderedImage img = render_checked(edit.edited, dir, deps, config, job_index, attempt);
                       if (img.width != original.width || img.height != original.height) {
                         throw Error(ErrorCode::kDimensionMismatch, "edited render size differs from the original");
                       }
                       return PointingResult{annotate_points(edit.question, img.pixels(), marker), edit.prompt_hash};
                     });
  } catch (const StageFailed& f) {
    throw Error(f.code, f.message);
  }
}

JobResult run_job(GenerationJob& job, const PipelineDeps& deps, const PipelineConfig& config,
                  const std::filesystem::path& workspace) {
  const PipelineSpec& spec = *job.pipeline;
  const Persona& persona = deps.personas.at(job.persona_id);
  const std::string record_id = make_record_id(job.query.seed, job.index, spec.id);
  const std::string figure_type = job.query.text;
  job.stage_log.clear();

  auto fail = [&](Stage stage, ErrorCode code, int attempts, std::string message) -> JobResult {
    JobFailure f{job.index, record_id, spec.id, stage, code, classify_failure(code), attempts, std::move(message)};
    write_failure(workspace, f);
    return f;
  };

  DatasetRecord rec;
  rec.id = record_id;
  rec.category = std::string(to_string(spec.category));
  rec.pipeline_id = spec.id;
  rec.tool = std::string(to_string(spec.tool));
  rec.persona = persona.text;
  rec.query = job.query.text;
  rec.provenance.job_index = job.index;
  rec.provenance.job_seed = job.job_seed;
  rec.provenance.persona_id = persona.id;
  rec.provenance.code_model = config.code_model.model_id;
  rec.provenance.instruction_model =
      spec.is_pointing() ? config.point_edit_model.model_id : config.instruction_model.model_id;

  try {
    const PromptTemplate topic_tpl = load_template(spec.prompts.topic, Stage::kTopic);
    const PromptTemplate data_tpl = load_template(spec.prompts.data, Stage::kData);
    const PromptTemplate code_tpl = load_template(spec.prompts.code, Stage::kCode);
    const PromptTemplate last_tpl =
        load_template(spec.prompts.instruction, spec.is_pointing() ? Stage::kPointEdit : Stage::kInstruction);

    rec.topic = run_stage(Stage::kTopic, job.job_seed, config.max_attempts, job.stage_log,
                          [&](int, std::uint64_t seed, bool& hit) {
                            auto req = make_request(config.topic_model, Stage::kTopic,
                                                    render_template(topic_tpl, {{"PERSONA", persona.text},
                                                                                {"FIGURE_TYPE", figure_type},
                                                                                {"NUM_TOPICS", std::to_string(config.num_topics)}}),
                                                    seed);
                            const auto res = deps.gateway.complete(req);
                            hit = res.cached;
                            std::vector<std::string> topics;
                            try {
                              topics = parse_topics(res.text, static_cast<std::size_t>(config.num_topics));
                            } catch (const CountMismatch& m) {
                              topics = m.parsed();  // any non-empty list is usable
                            }
                            rec.provenance.prompt_hashes["topic"] = sha256_hex(req.prompt);
                            std::mt19937_64 rng(seed);
                            return topics[uniform_below(rng, topics.size())];
                          });

    const DataContent data = run_stage(Stage::kData, job.job_seed, config.max_attempts, job.stage_log,
                                       [&](int, std::uint64_t seed, bool& hit) {
                                         auto req = make_request(config.data_model, Stage::kData,
                                                                 render_template(data_tpl, {{"PERSONA", persona.text},
                                                                                            {"TOPIC", rec.topic},
                                                                                            {"FIGURE_TYPE", figure_type}}),
                                                                 seed);
                                         const auto res = deps.gateway.complete(req);
                                         hit = res.cached;
                                         rec.provenance.prompt_hashes["data"] = sha256_hex(req.prompt);
                                         return parse_json_payload(res.text);
                                       });

    struct CodeResult {
      CodeArtifact artifact;
      RenderedImage image;
    };
    const CodeResult code = run_stage(
        Stage::kCode, job.job_seed, config.max_attempts, job.stage_log, [&](int attempt, std::uint64_t seed, bool& hit) {
          auto req = make_request(config.code_model, Stage::kCode,
                                  render_template(code_tpl, {{"PERSONA", persona.text},
                                                             {"TOPIC", rec.topic},
                                                             {"FIGURE_TYPE", figure_type},
                                                             {"DATA", data.payload.dump(2)}}),
                                  seed);
          const auto res = deps.gateway.complete(req);
          hit = res.cached;
          rec.provenance.prompt_hashes["code"] = sha256_hex(req.prompt);
          CodeBlock block = extract_code_block(res.text, fence_tag(spec.tool));
          CodeArtifact artifact{std::move(block.source), spec.tool, std::move(block.tag), block.tag_mismatch};
          auto image = render_checked(artifact, workspace / ("code-" + std::to_string(attempt)), deps, config,
                                      job.index, attempt);
          return CodeResult{std::move(artifact), std::move(image)};
        });
    rec.code = code.artifact.source;
    rec.source_image = code.image.path;
    rec.width = code.image.width;
    rec.height = code.image.height;

    if (spec.is_pointing()) {
      const Image original = code.image.pixels();
      try {
        auto pr = synthesize_pointing(code.artifact, original,
                                      PointEditContext{persona.text, rec.topic, figure_type, job.job_seed}, last_tpl,
                                      deps, config, workspace, job.index, job.stage_log);
        rec.points.push_back(std::move(pr.annotation));
        rec.provenance.prompt_hashes[std::string(to_string(Stage::kPointEdit))] = pr.prompt_hash;
      } catch (const Error& e) {
        return fail(Stage::kPointEdit, e.code(), job.stage_log.back().attempts, e.what());
      }
    } else {
      auto set = run_stage(Stage::kInstruction, job.job_seed, config.max_attempts, job.stage_log,
                           [&](int, std::uint64_t seed, bool& hit) {
                             auto [s, res] = generate_instructions(
                                 code.artifact, data, InstructionContext{persona.text, rec.topic, figure_type, seed},
                                 last_tpl, config.instruction_model, deps.gateway);
                             hit = res.cached;
                             return s;
                           });
      rec.provenance.prompt_hashes["instruction"] = set.prompt_hash;
      rec.qa = std::move(set.triplets);
    }
  } catch (const StageFailed& f) {
    return fail(f.stage, f.code, f.attempts, f.message);
  } catch (const Error& e) {
    // Template or configuration problems: not tied to an attempt.
    const Stage stage = job.stage_log.empty() ? Stage::kTopic : job.stage_log.back().stage;
    return fail(stage, e.code(), 0, e.what());
  }
  return rec;
}

ojson report_to_json(const BatchReport& r) {
  ojson j;
  j["jobs"] = r.jobs;
  j["succeeded"] = r.succeeded;
  j["failed"] = r.failed;
  j["deduplicated"] = r.deduplicated;
  j["failures_by_stage"] = r.failures_by_stage;
  j["failures_by_kind"] = r.failures_by_kind;
  j["per_pipeline"] = ojson::object();
  for (const auto& [id, t] : r.per_pipeline) j["per_pipeline"][id] = {{"succeeded", t.succeeded}, {"failed", t.failed}};
  j["llm_requests"] = r.llm_requests;
  j["cache_hits"] = r.cache_hits;
  j["cache_hit_rate"] = r.cache_hit_rate;
  j["failures"] = ojson::array();
  for (const auto& f : r.failures) {
    j["failures"].push_back({{"record_id", f.record_id},
                             {"job_index", f.job_index},
                             {"pipeline_id", f.pipeline_id},
                             {"stage", to_string(f.stage)},
                             {"error", to_string(f.code)},
                             {"kind", to_string(f.kind)},
                             {"attempts", f.attempts}});
  }
  return j;
}

BatchResult run_batch(const GenerationQuery& query, const PipelineDeps& deps, const PipelineConfig& config,
                      const std::filesystem::path& out_dir, const std::optional<ojson>& effective_config) {
  query.validate();
  check_output(out_dir);
  auto jobs = plan_jobs(query, deps);
  const auto work_root = work_root_for(config, out_dir);
  const GatewayStats before = deps.gateway.stats();

  BatchState state;
  state.results.resize(jobs.size());
  state.workspaces.resize(jobs.size());
  parallel_for(jobs.size(), config.workers, [&](std::size_t i) {
    auto& job = jobs[i];
    const auto ws = work_root / make_record_id(query.seed, job.index, job.pipeline->id);
    state.workspaces[i] = ws;
    state.results[i] = run_job(job, deps, config, ws);
  });
  return finish_batch(state, deps, config, before, out_dir, work_root, effective_config);
}

BatchResult run_point_batch(const std::vector<DatasetRecord>& source, const std::vector<Tool>& tools,
                            std::uint64_t seed, const PipelineDeps& deps, const PipelineConfig& config,
                            const std::filesystem::path& out_dir, const std::optional<ojson>& effective_config) {
  const auto& pointing_ids = deps.registry.ids_for(Category::kPointing);
  if (pointing_ids.empty()) throw Error(ErrorCode::kConfigInvalid, "registry has no pointing pipeline");
  const PipelineSpec& spec = deps.registry.at(pointing_ids.front());
  std::vector<const DatasetRecord*> targets;
  for (const auto& r : source) {
    const auto tool = parse_tool(r.tool);
    if (tool && std::find(tools.begin(), tools.end(), *tool) != tools.end() && !r.is_pointing()) targets.push_back(&r);
  }
  if (targets.empty()) throw Error(ErrorCode::kConfigInvalid, "no record uses a tool that supports point editing");
  check_output(out_dir);
  const PromptTemplate tpl = load_template(spec.prompts.instruction, Stage::kPointEdit);
  const auto work_root = work_root_for(config, out_dir);
  const GatewayStats before = deps.gateway.stats();

  BatchState state;
  state.results.resize(targets.size());
  state.workspaces.resize(targets.size());
  parallel_for(targets.size(), config.workers, [&](std::size_t i) {
    const DatasetRecord& src = *targets[i];
    const std::uint64_t job_seed = derive_job_seed(seed, i);
    const std::string id = make_record_id(seed, i, spec.id);
    const auto ws = work_root / id;
    state.workspaces[i] = ws;
    std::vector<StageOutcome> log;
    try {
      const Image original = read_png(src.source_image);
      const CodeArtifact code{src.code, *parse_tool(src.tool), std::string(fence_tag(*parse_tool(src.tool))), false};
      auto pr = synthesize_pointing(code, original, PointEditContext{src.persona, src.topic, src.query, job_seed}, tpl,
                                    deps, config, ws, i, log);
      DatasetRecord rec;
      rec.id = id;
      rec.category = std::string(to_string(Category::kPointing));
      rec.pipeline_id = spec.id;
      rec.tool = src.tool;
      rec.persona = src.persona;
      rec.topic = src.topic;
      rec.query = src.query;
      rec.code = src.code;
      rec.source_image = src.source_image;
      rec.width = original.width;
      rec.height = original.height;
      rec.points.push_back(std::move(pr.annotation));
      rec.provenance.job_index = i;
      rec.provenance.job_seed = job_seed;
      rec.provenance.persona_id = src.provenance.persona_id;
      rec.provenance.code_model = src.provenance.code_model;
      rec.provenance.instruction_model = config.point_edit_model.model_id;
      rec.provenance.prompt_hashes[std::string(to_string(Stage::kPointEdit))] = pr.prompt_hash;
      rec.provenance.source_record = src.id;
      state.results[i] = std::move(rec);
    } catch (const Error& e) {
      JobFailure f{i, id, spec.id, Stage::kPointEdit, e.code(), classify_failure(e.code()),
                   log.empty() ? 0 : log.back().attempts, e.what()};
      write_failure(ws, f);
      state.results[i] = std::move(f);
    }
  });
  return finish_batch(state, deps, config, before, out_dir, work_root, effective_config);
}

}  // namespace codesynth
