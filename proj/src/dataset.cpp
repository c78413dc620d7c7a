// SPDX-License-Identifier: Apache-2.0
#include "codesynth/dataset.hpp"

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "codesynth/error.hpp"
#include "codesynth/fixture_raster.hpp"
#include "codesynth/hashing.hpp"
#include "codesynth/image.hpp"

namespace codesynth {
namespace {

using ojson = nlohmann::ordered_json;

const std::vector<std::string>& manifest_keys() {
  static const std::vector<std::string> keys{"id",     "category", "pipeline_id", "tool",  "persona",
                                             "topic",  "query",    "code",        "image", "width",
                                             "height", "qa",       "points",      "provenance"};
  return keys;
}

double round2(double v) { return std::round(v * 100.0) / 100.0; }

std::string dump_line(const ojson& j) { return j.dump(-1, ' ', false, ojson::error_handler_t::replace); }

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.flush();
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
}

template <typename T>
T get_key(const ojson& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw Error(ErrorCode::kMalformedPayload, std::string("missing key ") + key);
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::kMalformedPayload, std::string("wrong type for key ") + key);
  }
}

std::pair<double, double> pair_of(const ojson& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw Error(ErrorCode::kMalformedPayload, "expected [x, y]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

std::string training_rows(const std::vector<DatasetRecord>& records, const std::vector<TrainingStyle>& styles) {
  std::string out;
  for (const auto& r : records) {
    for (std::size_t k = 0; k < r.qa.size(); ++k) {
      for (TrainingStyle style : styles) {
        const auto ex = format_training_example(r.qa[k], style);
        ojson row;
        row["record_id"] = r.id;
        row["triplet"] = k;
        row["style"] = to_string(style);
        row["prompt"] = ex.prompt;
        row["target"] = ex.target;
        out += dump_line(row);
        out += '\n';
      }
    }
  }
  return out;
}

std::vector<TrainingStyle> styles_from_json(const ojson& j) {
  std::vector<TrainingStyle> styles;
  for (const auto& s : j) {
    if (s == "cot") styles.push_back(TrainingStyle::kCoT);
    if (s == "short_answer") styles.push_back(TrainingStyle::kShortAnswer);
  }
  return styles;
}

}  // namespace

std::string make_record_id(std::uint64_t query_seed, std::uint64_t job_index, const std::string& pipeline_id) {
  char index[16];
  std::snprintf(index, sizeof index, "%08llu", static_cast<unsigned long long>(job_index));
  const std::string digest = sha256_fields({std::to_string(query_seed), std::to_string(job_index), pipeline_id});
  return pipeline_id + "-" + index + "-" + digest.substr(0, 16);
}

ojson record_to_json(const DatasetRecord& r) {
  ojson j;
  j["id"] = r.id;
  j["category"] = r.category;
  j["pipeline_id"] = r.pipeline_id;
  j["tool"] = r.tool;
  j["persona"] = r.persona;
  j["topic"] = r.topic;
  j["query"] = r.query;
  j["code"] = r.code;
  j["image"] = r.image;
  j["width"] = r.width;
  j["height"] = r.height;
  j["qa"] = ojson::array();
  for (const auto& t : r.qa) {
    ojson q;
    q["question"] = t.question;
    q["explanation"] = t.explanation;
    q["answer"] = t.answer;
    j["qa"].push_back(std::move(q));
  }
  j["points"] = ojson::array();
  for (const auto& a : r.points) {
    ojson p;
    p["question"] = a.question;
    p["points"] = ojson::array();
    for (const auto& [x, y] : a.points) p["points"].push_back({round2(x), round2(y)});
    p["pixel_points"] = ojson::array();
    for (const auto& px : a.pixel_points) p["pixel_points"].push_back({round2(px.x), round2(px.y)});
    p["image_size"] = {a.width, a.height};
    p["marker"] = fixture::to_hex_color(a.marker);
    j["points"].push_back(std::move(p));
  }
  ojson prov;
  prov["job_index"] = r.provenance.job_index;
  prov["job_seed"] = r.provenance.job_seed;
  prov["persona_id"] = r.provenance.persona_id;
  prov["code_model"] = r.provenance.code_model;
  prov["instruction_model"] = r.provenance.instruction_model;
  prov["prompt_hashes"] = ojson::object();
  for (const auto& [stage, hash] : r.provenance.prompt_hashes) prov["prompt_hashes"][stage] = hash;
  prov["source_record"] = r.provenance.source_record;
  j["provenance"] = std::move(prov);
  return j;
}

DatasetRecord record_from_json(const ojson& j) {
  DatasetRecord r;
  r.id = get_key<std::string>(j, "id");
  r.category = get_key<std::string>(j, "category");
  r.pipeline_id = get_key<std::string>(j, "pipeline_id");
  r.tool = get_key<std::string>(j, "tool");
  r.persona = get_key<std::string>(j, "persona");
  r.topic = get_key<std::string>(j, "topic");
  r.query = get_key<std::string>(j, "query");
  r.code = get_key<std::string>(j, "code");
  r.image = get_key<std::string>(j, "image");
  r.width = get_key<int>(j, "width");
  r.height = get_key<int>(j, "height");
  const auto qa = get_key<ojson>(j, "qa");
  if (!qa.is_array()) throw Error(ErrorCode::kMalformedPayload, "qa is not an array");
  for (const auto& q : qa) {
    r.qa.push_back({get_key<std::string>(q, "question"), get_key<std::string>(q, "explanation"),
                    get_key<std::string>(q, "answer")});
  }
  const auto points = get_key<ojson>(j, "points");
  if (!points.is_array()) throw Error(ErrorCode::kMalformedPayload, "points is not an array");
  for (const auto& p : points) {
    PointAnnotation a;
    a.question = get_key<std::string>(p, "question");
    for (const auto& xy : get_key<ojson>(p, "points")) a.points.push_back(pair_of(xy));
    for (const auto& xy : get_key<ojson>(p, "pixel_points")) {
      const auto [x, y] = pair_of(xy);
      a.pixel_points.push_back({x, y, 0});
    }
    const auto [w, h] = pair_of(get_key<ojson>(p, "image_size"));
    a.width = static_cast<int>(w);
    a.height = static_cast<int>(h);
    if (!fixture::parse_hex_color(get_key<std::string>(p, "marker"), a.marker)) {
      throw Error(ErrorCode::kMalformedPayload, "bad marker color");
    }
    r.points.push_back(std::move(a));
  }
  const auto prov = get_key<ojson>(j, "provenance");
  r.provenance.job_index = get_key<std::uint64_t>(prov, "job_index");
  r.provenance.job_seed = get_key<std::uint64_t>(prov, "job_seed");
  r.provenance.persona_id = get_key<std::uint64_t>(prov, "persona_id");
  r.provenance.code_model = get_key<std::string>(prov, "code_model");
  r.provenance.instruction_model = get_key<std::string>(prov, "instruction_model");
  r.provenance.prompt_hashes = get_key<std::map<std::string, std::string>>(prov, "prompt_hashes");
  r.provenance.source_record = get_key<std::string>(prov, "source_record");
  return r;
}

ojson stats_to_json(const ShardStats& s) {
  ojson j;
  j["format_version"] = kShardFormatVersion;
  j["records"] = s.records;
  j["per_category"] = s.per_category;
  j["per_pipeline"] = s.per_pipeline;
  j["triplets"] = s.triplets;
  j["training_rows"] = s.training_rows;
  j["qa_per_image"] = s.qa_per_image;
  j["point_annotations"] = s.point_annotations;
  j["failures_by_stage"] = s.failures_by_stage;
  j["cache_hit_rate"] = s.cache_hit_rate ? ojson(*s.cache_hit_rate) : ojson(nullptr);
  return j;
}

ShardStats compute_stats(const std::vector<DatasetRecord>& records, const std::vector<TrainingStyle>& styles,
                         const RunSummary* run) {
  ShardStats s;
  std::size_t qa_records = 0;
  for (const auto& r : records) {
    ++s.per_category[r.category];
    ++s.per_pipeline[r.pipeline_id];
    s.triplets += r.qa.size();
    s.point_annotations += r.points.size();
    if (!r.is_pointing()) ++qa_records;
  }
  s.records = records.size();
  s.training_rows = s.triplets * styles.size();
  s.qa_per_image = qa_records ? static_cast<double>(s.triplets) / static_cast<double>(qa_records) : 0.0;
  if (run) {
    s.failures_by_stage = run->failures_by_stage;
    s.cache_hit_rate = run->cache_hit_rate;
  }
  return s;
}

DatasetShard write_shard(std::vector<DatasetRecord> records, const std::filesystem::path& out_dir,
                         const ShardExtras& extras) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (fs::exists(out_dir, ec) && (!fs::is_directory(out_dir, ec) || !fs::is_empty(out_dir, ec))) {
    throw Error(ErrorCode::kOutputExists, out_dir.string() + " already exists and is not empty");
  }
  if (records.empty()) throw Error(ErrorCode::kInvalidArgument, "refusing to write an empty shard");
  std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].id == records[i - 1].id) throw Error(ErrorCode::kDuplicateId, "duplicate record id " + records[i].id);
  }
  for (const auto& r : records) {
    if (r.id.empty() || r.id.find('/') != std::string::npos || r.id.find("..") != std::string::npos) {
      throw Error(ErrorCode::kInvalidArgument, "record id is not a safe file name: " + r.id);
    }
  }

  const fs::path target = fs::absolute(out_dir).lexically_normal();
  const fs::path parent = target.parent_path();
  fs::create_directories(parent, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + parent.string() + ": " + ec.message());
  const fs::path tmp = parent / ("." + target.filename().string() + ".tmp-" + std::to_string(::getpid()));
  fs::remove_all(tmp, ec);
  fs::create_directories(tmp / "images", ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + tmp.string() + ": " + ec.message());

  try {
    std::string manifest;
    for (auto& r : records) {
      r.image = "images/" + r.id + ".png";
      fs::copy_file(r.source_image, tmp / r.image, fs::copy_options::overwrite_existing, ec);
      if (ec) throw Error(ErrorCode::kIoError, "cannot copy image for " + r.id + ": " + ec.message());
      manifest += dump_line(record_to_json(r));
      manifest += '\n';
    }
    write_text(tmp / "manifest.jsonl", manifest);
    write_text(tmp / "training.jsonl", training_rows(records, extras.styles));

    const ShardStats s = compute_stats(records, extras.styles, &extras.run);
    ojson sj = stats_to_json(s);
    sj["training_styles"] = ojson::array();
    for (auto style : extras.styles) sj["training_styles"].push_back(to_string(style));
    write_text(tmp / "stats.json", sj.dump(2) + "\n");
    if (extras.report) write_text(tmp / "report.json", extras.report->dump(2, ' ', false, ojson::error_handler_t::replace) + "\n");
    if (extras.config) write_text(tmp / "config.json", extras.config->dump(2, ' ', false, ojson::error_handler_t::replace) + "\n");

    if (fs::exists(target, ec)) fs::remove(target, ec);
    fs::rename(tmp, target, ec);
    if (ec) throw Error(ErrorCode::kIoError, "cannot move shard into " + target.string() + ": " + ec.message());
    return DatasetShard{out_dir, std::move(records), s};
  } catch (...) {
    fs::remove_all(tmp, ec);
    throw;
  }
}

std::pair<std::vector<DatasetRecord>, std::size_t> dedup(std::vector<DatasetRecord> records) {
  std::stable_sort(records.begin(), records.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  std::unordered_set<std::string> seen;
  std::vector<DatasetRecord> kept;
  std::size_t dropped = 0;
  for (auto& r : records) {
    if (seen.insert(sha256_hex(r.code)).second) {
      kept.push_back(std::move(r));
    } else {
      ++dropped;
    }
  }
  return {std::move(kept), dropped};
}

std::vector<DatasetRecord> read_manifest(const std::filesystem::path& shard_dir) {
  std::ifstream in(shard_dir / "manifest.jsonl", std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + (shard_dir / "manifest.jsonl").string());
  std::vector<DatasetRecord> records;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.empty()) continue;
    auto j = ojson::parse(line, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::kMalformedPayload, "manifest line " + std::to_string(line_no));
    records.push_back(record_from_json(j));
    records.back().source_image = shard_dir / records.back().image;
  }
  return records;
}

ShardStats stats(const std::filesystem::path& shard_dir) {
  const auto records = read_manifest(shard_dir);
  std::vector<TrainingStyle> styles{TrainingStyle::kCoT, TrainingStyle::kShortAnswer};
  RunSummary run;
  std::ifstream in(shard_dir / "stats.json", std::ios::binary);
  if (in) {
    auto j = ojson::parse(in, nullptr, false);
    if (!j.is_discarded() && j.is_object()) {
      if (j.contains("training_styles") && j["training_styles"].is_array()) styles = styles_from_json(j["training_styles"]);
      if (j.contains("failures_by_stage") && j["failures_by_stage"].is_object()) {
        for (const auto& [k, v] : j["failures_by_stage"].items())
          if (v.is_number_unsigned()) run.failures_by_stage[k] = v.get<std::size_t>();
      }
      if (j.contains("cache_hit_rate") && j["cache_hit_rate"].is_number()) run.cache_hit_rate = j["cache_hit_rate"].get<double>();
    }
  }
  return compute_stats(records, styles, &run);
}

std::vector<Violation> validate_shard(const std::filesystem::path& shard_dir) {
  namespace fs = std::filesystem;
  std::vector<Violation> out;
  std::ifstream in(shard_dir / "manifest.jsonl", std::ios::binary);
  if (!in) return {{"manifest-parse", "", "manifest.jsonl missing"}};

  std::set<std::string> ids;
  std::set<std::string> referenced;
  std::string previous_id;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.empty()) continue;
    auto j = ojson::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      out.push_back({"manifest-parse", "", "line " + std::to_string(line_no)});
      continue;
    }
    std::vector<std::string> keys;
    for (const auto& [k, v] : j.items()) keys.push_back(k);
    const std::string id = j.contains("id") && j["id"].is_string() ? j["id"].get<std::string>() : std::string();
    if (keys != manifest_keys()) out.push_back({"schema", id, "keys differ from the format-version key list"});
    DatasetRecord r;
    try {
      r = record_from_json(j);
    } catch (const Error& e) {
      out.push_back({"schema", id, e.what()});
      continue;
    }
    if (!ids.insert(r.id).second) out.push_back({"duplicate-id", r.id, ""});
    if (!previous_id.empty() && r.id < previous_id) out.push_back({"order", r.id, "manifest not sorted by id"});
    previous_id = r.id;

    const fs::path rel(r.image);
    bool safe = !r.image.empty() && rel.is_relative();
    for (const auto& part : rel) safe = safe && part != "..";
    if (!safe) {
      out.push_back({"image-path", r.id, r.image});
    } else {
      referenced.insert(rel.lexically_normal().string());
      const fs::path img_path = shard_dir / rel;
      if (!fs::is_regular_file(img_path)) {
        out.push_back({"missing-image", r.id, r.image});
      } else {
        try {
          const Image img = read_png(img_path);
          if (img.width != r.width || img.height != r.height) {
            out.push_back({"schema", r.id, "width/height differ from the image file"});
          }
        } catch (const Error& e) {
          out.push_back({"undecodable-image", r.id, e.what()});
        }
      }
    }

    if (r.is_pointing()) {
      if (r.points.empty()) out.push_back({"empty-points", r.id, ""});
      for (const auto& a : r.points) {
        if (a.points.empty()) out.push_back({"empty-points", r.id, a.question});
        if (a.points.size() != a.pixel_points.size()) out.push_back({"schema", r.id, "points and pixel_points differ in length"});
        for (const auto& [x, y] : a.points) {
          if (!(x >= 0.0 && x <= 100.0 && y >= 0.0 && y <= 100.0)) {
            out.push_back({"coordinate-range", r.id, "(" + std::to_string(x) + ", " + std::to_string(y) + ")"});
          }
        }
      }
    } else {
      if (r.qa.empty()) out.push_back({"empty-qa", r.id, ""});
      for (const auto& t : r.qa) {
        if (t.question.empty() || t.explanation.empty() || t.answer.empty()) out.push_back({"schema", r.id, "empty triplet field"});
      }
    }
  }

  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(shard_dir / "images", ec)) {
    const std::string rel = (fs::path("images") / entry.path().filename()).string();
    if (!referenced.count(rel)) out.push_back({"unreferenced-image", "", rel});
  }
  return out;
}

}  // namespace codesynth
