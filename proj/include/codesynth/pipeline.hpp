// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "codesynth/dataset.hpp"
#include "codesynth/error.hpp"
#include "codesynth/gateway.hpp"
#include "codesynth/instruction.hpp"
#include "codesynth/persona_store.hpp"
#include "codesynth/pointing.hpp"
#include "codesynth/registry.hpp"
#include "codesynth/render.hpp"

namespace codesynth {

struct PipelineConfig {
  StageModel topic_model{"mock", "mock", 1.0, 1.0};
  StageModel data_model{"mock", "mock", 0.7, 1.0};
  StageModel code_model{"mock", "mock", 0.7, 1.0};
  StageModel instruction_model{"mock", "mock", 0.3, 1.0};
  StageModel point_edit_model{"mock", "mock", 0.7, 1.0};
  int num_topics = 10;
  int workers = 4;
  int max_attempts = 3;  // per stage
  SandboxPolicy sandbox;  // working_dir is set per render
  ImageConstraints constraints;
  MarkerSpec marker;
  std::vector<TrainingStyle> styles{TrainingStyle::kCoT, TrainingStyle::kShortAnswer};
  bool dedup = true;
  /// Job workspaces; "<out>.work" when empty.
  std::filesystem::path work_root;
};

struct PipelineDeps {
  const PipelineRegistry& registry;
  const PersonaStore& personas;
  Gateway& gateway;
  Renderer& renderer;
};

struct StageOutcome {
  Stage stage;
  int attempts = 0;
  bool cache_hit = false;  // every request of the final attempt was served from cache
  double duration_ms = 0.0;
  bool ok = false;
};

struct GenerationJob {
  GenerationQuery query;
  std::size_t index = 0;
  const PipelineSpec* pipeline = nullptr;
  std::size_t persona_id = 0;
  std::uint64_t job_seed = 0;
  std::vector<StageOutcome> stage_log;
};

/// Failure classes counted in the batch report.
enum class FailureKind { kRender, kParse, kProvider, kOther };
std::string_view to_string(FailureKind kind) noexcept;
FailureKind classify_failure(ErrorCode code) noexcept;

struct JobFailure {
  std::size_t job_index = 0;
  std::string record_id;
  std::string pipeline_id;
  Stage stage = Stage::kTopic;
  ErrorCode code = ErrorCode::kStageExhausted;
  FailureKind kind = FailureKind::kOther;
  int attempts = 0;
  std::string message;
};

using JobResult = std::variant<DatasetRecord, JobFailure>;

/// Builds the job list for a query: allocations in id order, job indices
/// assigned consecutively, personas drawn from each job seed.
std::vector<GenerationJob> plan_jobs(const GenerationQuery& query, const PipelineDeps& deps);

/// Runs topic -> data -> code -> instruction (point-edit for pointing specs).
/// Each stage gets `max_attempts` tries with fresh seeds; a render failure
/// retries the code stage. Never throws for per-job failures.
JobResult run_job(GenerationJob& job, const PipelineDeps& deps, const PipelineConfig& config,
                  const std::filesystem::path& workspace);

struct PointingResult {
  PointAnnotation annotation;
  std::string prompt_hash;
};

/// Renders an edited copy of `code` that draws markers and recovers the
/// points. `original` is the unedited render, used to pick a marker color
/// that does not already occur. `context.sampling_seed` is the job seed;
/// each attempt derives its own request seed from it. Retries like any
/// stage; throws the last Error when attempts run out. Records the stage
/// outcome in `log`.
PointingResult synthesize_pointing(const CodeArtifact& code, const Image& original, const PointEditContext& context,
                                   const PromptTemplate& tpl, const PipelineDeps& deps, const PipelineConfig& config,
                                   const std::filesystem::path& workspace, std::size_t job_index,
                                   std::vector<StageOutcome>& log);

struct PipelineTally {
  std::size_t succeeded = 0;
  std::size_t failed = 0;
};

struct BatchReport {
  std::size_t jobs = 0;
  std::size_t succeeded = 0;  // records written, after dedup
  std::size_t failed = 0;
  std::size_t deduplicated = 0;
  std::map<std::string, std::size_t> failures_by_stage;
  std::map<std::string, std::size_t> failures_by_kind;  // render-failed, parse-failed, ...
  std::map<std::string, PipelineTally> per_pipeline;
  std::uint64_t llm_requests = 0;
  std::uint64_t cache_hits = 0;
  double cache_hit_rate = 0.0;
  std::vector<JobFailure> failures;  // by job index
};

/// Deterministic part of the report (no timings), as written to report.json.
nlohmann::ordered_json report_to_json(const BatchReport& report);

struct BatchResult {
  DatasetShard shard;
  BatchReport report;
};

/// Runs every job on `config.workers` threads, dedups, and writes the shard
/// atomically. Failed workspaces move to <out>/failures/. Throws
/// Error(kOutputExists), Error(kOutputUnwritable) or Error(kAllJobsFailed).
BatchResult run_batch(const GenerationQuery& query, const PipelineDeps& deps, const PipelineConfig& config,
                      const std::filesystem::path& out_dir,
                      const std::optional<nlohmann::ordered_json>& effective_config = std::nullopt);

/// Pointing shard from the code of existing records: each record's image is
/// reused as the original render, its code is edited to draw markers.
/// Records whose tool is not in `tools` are skipped. Throws like run_batch,
/// plus Error(kConfigInvalid) when no record qualifies.
BatchResult run_point_batch(const std::vector<DatasetRecord>& source, const std::vector<Tool>& tools,
                            std::uint64_t seed, const PipelineDeps& deps, const PipelineConfig& config,
                            const std::filesystem::path& out_dir,
                            const std::optional<nlohmann::ordered_json>& effective_config = std::nullopt);

}  // namespace codesynth
