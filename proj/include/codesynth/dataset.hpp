// SPDX-License-Identifier: Apache-2.0
#pragma once

// Shard layout (format version 1):
//
//   manifest.jsonl   one record per line, sorted by id, keys in the order below
//   training.jsonl   formatted training rows, one per (triplet, style)
//   images/<id>.png  one image per record
//   stats.json       ShardStats
//   report.json      run report (optional)
//   config.json      effective run configuration (optional)
//
// Manifest keys: id, category, pipeline_id, tool, persona, topic, query,
// code, image, width, height, qa, points, provenance. qa entries are
// {question, explanation, answer}; points entries are {question, points,
// pixel_points, image_size, marker}; provenance is {job_index, job_seed,
// persona_id, code_model, instruction_model, prompt_hashes, source_record}.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "codesynth/instruction.hpp"
#include "codesynth/pointing.hpp"
#include "codesynth/types.hpp"

namespace codesynth {

inline constexpr int kShardFormatVersion = 1;

struct Provenance {
  std::uint64_t job_index = 0;
  std::uint64_t job_seed = 0;
  std::uint64_t persona_id = 0;
  std::string code_model;
  std::string instruction_model;
  std::map<std::string, std::string> prompt_hashes;  // stage tag -> SHA-256 of the sent prompt
  std::string source_record;                         // pointing records derived from another shard
};

struct DatasetRecord {
  std::string id;
  std::string category;
  std::string pipeline_id;
  std::string tool;
  std::string persona;
  std::string topic;
  std::string query;
  std::string code;
  std::string image;  // shard-relative, images/<id>.png
  int width = 0;
  int height = 0;
  std::vector<InstructionTriplet> qa;
  std::vector<PointAnnotation> points;
  Provenance provenance;

  /// Where write_shard copies the PNG from. Not serialized.
  std::filesystem::path source_image;

  bool is_pointing() const noexcept { return category == "pointing"; }
};

/// "<pipeline_id>-<job index, 8 digits>-<16 hex of SHA-256(query seed, job index, pipeline id)>".
/// Sorting these ids sorts records by (pipeline id, job index).
std::string make_record_id(std::uint64_t query_seed, std::uint64_t job_index, const std::string& pipeline_id);

nlohmann::ordered_json record_to_json(const DatasetRecord& record);
/// Throws Error(kMalformedPayload) on a missing or mistyped key.
DatasetRecord record_from_json(const nlohmann::ordered_json& j);

struct ShardStats {
  std::map<std::string, std::size_t> per_category;
  std::map<std::string, std::size_t> per_pipeline;
  std::size_t records = 0;
  std::size_t triplets = 0;
  std::size_t training_rows = 0;
  double qa_per_image = 0.0;  // raw triplets per QA record
  std::size_t point_annotations = 0;
  std::map<std::string, std::size_t> failures_by_stage;
  std::optional<double> cache_hit_rate;
};

nlohmann::ordered_json stats_to_json(const ShardStats& stats);

struct RunSummary {
  std::map<std::string, std::size_t> failures_by_stage;
  std::optional<double> cache_hit_rate;
};

/// Counts over the records; run-level fields come from `run` when given.
ShardStats compute_stats(const std::vector<DatasetRecord>& records, const std::vector<TrainingStyle>& styles,
                         const RunSummary* run = nullptr);

struct ShardExtras {
  std::vector<TrainingStyle> styles{TrainingStyle::kCoT, TrainingStyle::kShortAnswer};
  RunSummary run;
  std::optional<nlohmann::ordered_json> report;  // written as report.json
  std::optional<nlohmann::ordered_json> config;  // written as config.json
};

struct DatasetShard {
  std::filesystem::path dir;
  std::vector<DatasetRecord> records;  // manifest order
  ShardStats stats;
};

/// Writes atomically (temp dir, then rename). `out_dir` must be absent or
/// empty. Throws Error(kOutputExists), Error(kDuplicateId) before touching
/// the disk, Error(kInvalidArgument) for an empty record list, or
/// Error(kIoError).
DatasetShard write_shard(std::vector<DatasetRecord> records, const std::filesystem::path& out_dir,
                         const ShardExtras& extras = {});

/// Drops records whose code equals an earlier one, scanning in id order.
std::pair<std::vector<DatasetRecord>, std::size_t> dedup(std::vector<DatasetRecord> records);

/// Reads manifest.jsonl. Throws Error(kIoError) or Error(kMalformedPayload).
std::vector<DatasetRecord> read_manifest(const std::filesystem::path& shard_dir);

/// Reads the manifest and recomputes stats, picking up run-level fields from
/// stats.json when present.
ShardStats stats(const std::filesystem::path& shard_dir);

struct Violation {
  std::string kind;  // manifest-parse, schema, missing-image, undecodable-image, duplicate-id,
                     // coordinate-range, image-path, unreferenced-image, empty-qa, empty-points, order
  std::string record_id;
  std::string detail;
};

/// Empty result means the shard passes.
std::vector<Violation> validate_shard(const std::filesystem::path& shard_dir);

}  // namespace codesynth
