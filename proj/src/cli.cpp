// SPDX-License-Identifier: Apache-2.0
#include "codesynth/cli.hpp"

#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "codesynth/dataset.hpp"
#include "codesynth/diversity.hpp"
#include "codesynth/error.hpp"
#include "codesynth/fixture_raster.hpp"
#include "codesynth/hashing.hpp"
#include "codesynth/pipeline.hpp"
#include "codesynth/providers.hpp"

#ifndef CODESYNTH_DEFAULT_DATA_DIR
#define CODESYNTH_DEFAULT_DATA_DIR "data"
#endif

namespace codesynth {
namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

fs::path data_dir() {
  if (const char* d = std::getenv("CODESYNTH_DATA_DIR"); d && *d) return d;
  return CODESYNTH_DEFAULT_DATA_DIR;
}

// Fixture tool next to this executable, when not configured otherwise.
fs::path sibling_fixture_binary() {
  std::error_code ec;
  const auto self = fs::read_symlink("/proc/self/exe", ec);
  if (ec) return {};
  const auto candidate = self.parent_path() / "codesynth-fixture-render";
  return fs::exists(candidate, ec) ? candidate : fs::path();
}

struct RunConfig {
  std::string query;
  std::string category = "auto";
  int count = 1;
  std::uint64_t seed = 0;
  int workers = 4;
  std::string registry;
  std::string personas;
  std::string cache_dir;
  std::string provider = "http";  // "http" or "mock"
  std::string endpoint;
  std::string mock_dir;
  std::string topic_model = "claude-3-5-sonnet";
  std::string data_model = "claude-3-5-sonnet";
  std::string code_model = "claude-3-5-sonnet";
  std::string instruction_model = "gpt-4o-mini";
  std::string point_edit_model = "claude-3-5-sonnet";
  double topic_temperature = 1.0;
  double data_temperature = 0.7;
  double code_temperature = 0.7;
  double instruction_temperature = 0.3;
  double point_edit_temperature = 0.7;
  int num_topics = 10;
  int max_attempts = 3;
  int max_concurrent_requests = 8;
  int max_concurrent_renders = 4;
  double timeout_seconds = 60.0;
  std::size_t max_output_bytes = 1 << 20;
  bool network_disabled = true;
  bool fixture_renderer = false;
  std::map<std::string, std::string> binaries;
  std::string harness;
  std::vector<std::string> styles{"cot", "short_answer"};
  bool dedup = true;
  std::vector<std::string> point_tools{"html"};
};

template <typename T>
void take(const ojson& j, const char* key, T& field) {
  if (!j.contains(key)) return;
  try {
    field = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::kConfigInvalid, std::string("config key '") + key + "' has the wrong type");
  }
}

void apply_config_file(RunConfig& c, const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kConfigInvalid, "cannot read config " + path.string());
  auto j = ojson::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::kConfigInvalid, "config is not a JSON object");
  take(j, "query", c.query);
  take(j, "category", c.category);
  take(j, "count", c.count);
  take(j, "seed", c.seed);
  take(j, "workers", c.workers);
  take(j, "registry", c.registry);
  take(j, "personas", c.personas);
  take(j, "cache_dir", c.cache_dir);
  take(j, "provider", c.provider);
  take(j, "endpoint", c.endpoint);
  take(j, "mock_dir", c.mock_dir);
  take(j, "topic_model", c.topic_model);
  take(j, "data_model", c.data_model);
  take(j, "code_model", c.code_model);
  take(j, "instruction_model", c.instruction_model);
  take(j, "point_edit_model", c.point_edit_model);
  take(j, "topic_temperature", c.topic_temperature);
  take(j, "data_temperature", c.data_temperature);
  take(j, "code_temperature", c.code_temperature);
  take(j, "instruction_temperature", c.instruction_temperature);
  take(j, "point_edit_temperature", c.point_edit_temperature);
  take(j, "num_topics", c.num_topics);
  take(j, "max_attempts", c.max_attempts);
  take(j, "max_concurrent_requests", c.max_concurrent_requests);
  take(j, "max_concurrent_renders", c.max_concurrent_renders);
  take(j, "timeout_seconds", c.timeout_seconds);
  take(j, "max_output_bytes", c.max_output_bytes);
  take(j, "network_disabled", c.network_disabled);
  take(j, "fixture_renderer", c.fixture_renderer);
  take(j, "binaries", c.binaries);
  take(j, "harness", c.harness);
  take(j, "styles", c.styles);
  take(j, "dedup", c.dedup);
  take(j, "point_tools", c.point_tools);
}

ojson config_to_json(const RunConfig& c) {
  ojson j;
  j["query"] = c.query;
  j["category"] = c.category;
  j["count"] = c.count;
  j["seed"] = c.seed;
  j["workers"] = c.workers;
  j["registry"] = c.registry;
  j["personas"] = c.personas;
  j["provider"] = c.provider;
  j["endpoint"] = c.endpoint;
  j["topic_model"] = c.topic_model;
  j["data_model"] = c.data_model;
  j["code_model"] = c.code_model;
  j["instruction_model"] = c.instruction_model;
  j["point_edit_model"] = c.point_edit_model;
  j["topic_temperature"] = c.topic_temperature;
  j["data_temperature"] = c.data_temperature;
  j["code_temperature"] = c.code_temperature;
  j["instruction_temperature"] = c.instruction_temperature;
  j["point_edit_temperature"] = c.point_edit_temperature;
  j["num_topics"] = c.num_topics;
  j["max_attempts"] = c.max_attempts;
  j["timeout_seconds"] = c.timeout_seconds;
  j["max_output_bytes"] = c.max_output_bytes;
  j["network_disabled"] = c.network_disabled;
  j["fixture_renderer"] = c.fixture_renderer;
  j["styles"] = c.styles;
  j["dedup"] = c.dedup;
  j["point_tools"] = c.point_tools;
  j["format_version"] = kShardFormatVersion;
  return j;
}

std::vector<TrainingStyle> parse_styles(const std::vector<std::string>& names) {
  std::vector<TrainingStyle> out;
  for (const auto& n : names) {
    if (n == "cot") {
      out.push_back(TrainingStyle::kCoT);
    } else if (n == "short_answer") {
      out.push_back(TrainingStyle::kShortAnswer);
    } else {
      throw Error(ErrorCode::kConfigInvalid, "unknown training style '" + n + "'");
    }
  }
  if (out.empty()) throw Error(ErrorCode::kConfigInvalid, "at least one training style is required");
  return out;
}

void check_ranges(const RunConfig& c) {
  if (c.workers < 1) throw Error(ErrorCode::kConfigInvalid, "workers must be >= 1");
  if (c.max_attempts < 1) throw Error(ErrorCode::kConfigInvalid, "max_attempts must be >= 1");
  if (c.num_topics < 1) throw Error(ErrorCode::kConfigInvalid, "num_topics must be >= 1");
  if (!(c.timeout_seconds > 0.0)) throw Error(ErrorCode::kConfigInvalid, "timeout_seconds must be > 0");
  if (c.provider != "mock" && c.provider != "http") {
    throw Error(ErrorCode::kConfigInvalid, "provider must be 'mock' or 'http'");
  }
  if (c.provider == "http" && c.endpoint.empty()) {
    throw Error(ErrorCode::kConfigInvalid, "the http provider needs --endpoint (or use --mock-provider)");
  }
}

// Everything a batch needs, built from a validated RunConfig.
struct Runtime {
  PipelineRegistry registry;
  PersonaStore personas;
  std::shared_ptr<ResponseCache> cache;
  std::unique_ptr<Gateway> gateway;
  std::unique_ptr<AdapterRenderer> renderer;
  PipelineConfig pipeline;
};

std::unique_ptr<Runtime> build_runtime(RunConfig& c) {
  check_ranges(c);
  if (c.registry.empty()) c.registry = (data_dir() / "registry.jsonl").string();
  if (c.personas.empty()) c.personas = (data_dir() / "personas_fixture.txt").string();
  if (c.provider == "mock" && c.mock_dir.empty()) c.mock_dir = (data_dir() / "mock").string();

  auto registry = [&] {
    try {
      return load_registry(c.registry);
    } catch (const Error& e) {
      throw Error(ErrorCode::kConfigInvalid, e.what());
    }
  }();
  auto personas = [&] {
    try {
      return load_personas(c.personas);
    } catch (const Error& e) {
      throw Error(ErrorCode::kConfigInvalid, e.what());
    }
  }();
  auto cache = c.cache_dir.empty() ? std::make_shared<ResponseCache>() : std::make_shared<ResponseCache>(c.cache_dir);
  GatewayOptions gopts;
  gopts.max_attempts = c.max_attempts;
  gopts.max_concurrent_requests = c.max_concurrent_requests;
  auto gateway = std::make_unique<Gateway>(cache, gopts);
  if (c.provider == "mock") {
    gateway->register_provider(std::make_shared<FixtureProvider>(c.mock_dir, "mock"));
  } else {
    HttpProviderConfig hc;
    hc.endpoint = c.endpoint;
    gateway->register_provider(std::make_shared<HttpProvider>(hc));
  }

  RendererConfig rc;
  rc.binaries = c.binaries;
  rc.harness = c.harness;
  rc.fixture_for_all_tools = c.fixture_renderer;
  rc.max_concurrent_renders = c.max_concurrent_renders;
  if (!std::getenv("CODESYNTH_FIXTURE_RENDER")) rc.fixture_binary = sibling_fixture_binary();

  PipelineConfig pc;
  const std::string& pid = c.provider;
  pc.topic_model = {pid, c.topic_model, c.topic_temperature, 1.0};
  pc.data_model = {pid, c.data_model, c.data_temperature, 1.0};
  pc.code_model = {pid, c.code_model, c.code_temperature, 1.0};
  pc.instruction_model = {pid, c.instruction_model, c.instruction_temperature, 1.0};
  pc.point_edit_model = {pid, c.point_edit_model, c.point_edit_temperature, 1.0};
  pc.num_topics = c.num_topics;
  pc.workers = c.workers;
  pc.max_attempts = c.max_attempts;
  pc.sandbox.wall_timeout_seconds = c.timeout_seconds;
  pc.sandbox.max_output_bytes = c.max_output_bytes;
  pc.sandbox.network_disabled = c.network_disabled;
  pc.styles = parse_styles(c.styles);
  pc.dedup = c.dedup;

  return std::unique_ptr<Runtime>(new Runtime{std::move(registry), std::move(personas), std::move(cache),
                                              std::move(gateway), std::make_unique<AdapterRenderer>(rc), pc});
}

int exit_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::kConfigInvalid:
    case ErrorCode::kUnknownCategory:
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kEmptyCorpus:
      return kExitConfigInvalid;
    case ErrorCode::kOutputExists:
      return kExitOutputExists;
    default:
      return kExitFailure;
  }
}

void print_batch(const BatchReport& r, std::ostream& out, std::ostream& err) {
  out << report_to_json(r).dump(2) << "\n";
  err << "jobs " << r.jobs << ", records " << r.succeeded << ", failed " << r.failed << ", deduplicated "
      << r.deduplicated << ", cache hit rate " << std::fixed << std::setprecision(1) << 100.0 * r.cache_hit_rate
      << "%\n";
  for (const auto& f : r.failures) {
    err << "  job " << f.job_index << " " << f.pipeline_id << ": " << to_string(f.stage) << " " << to_string(f.kind)
        << " after " << f.attempts << " attempt(s): " << f.message.substr(0, 300) << "\n";
  }
}

// Flags shared by generate and point.
struct CommonFlags {
  std::string config;
  bool mock = false;
};

void add_run_flags(CLI::App* cmd, RunConfig& c, CommonFlags& f) {
  cmd->add_option("--config", f.config, "JSON config file; flags override its values");
  cmd->add_option("--seed", c.seed, "64-bit reproducibility seed");
  cmd->add_option("--workers", c.workers, "parallel jobs");
  cmd->add_option("--registry", c.registry, "pipeline registry (JSON lines)");
  cmd->add_option("--personas", c.personas, "persona corpus, one per line");
  cmd->add_option("--cache-dir", c.cache_dir, "persistent LLM response cache");
  cmd->add_flag("--mock-provider", f.mock, "answer every stage from fixture files (no network)");
  cmd->add_option("--mock-dir", c.mock_dir, "fixture directory for --mock-provider");
  cmd->add_option("--endpoint", c.endpoint, "OpenAI-compatible endpoint; key from CODESYNTH_API_KEY");
  cmd->add_flag("--fixture-renderer", c.fixture_renderer, "render every tool with the fixture renderer");
  cmd->add_option("--timeout", c.timeout_seconds, "render wall timeout in seconds");
  cmd->add_option("--max-attempts", c.max_attempts, "attempts per stage");
  cmd->add_option("--num-topics", c.num_topics, "topics requested per job");
  cmd->add_option("--code-model", c.code_model, "model for topic/data/code stages")->each([&](const std::string& m) {
    c.topic_model = c.data_model = m;
  });
  cmd->add_option("--instruction-model", c.instruction_model, "model for the instruction stage");
  cmd->add_option("--styles", c.styles, "training styles: cot, short_answer")->delimiter(',');
}

// Loads the config file first, then replays the parsed flags over it.
void resolve(CLI::App* cmd, RunConfig& c, const CommonFlags& f) {
  if (!f.config.empty()) {
    RunConfig from_file;
    apply_config_file(from_file, f.config);
    RunConfig flags = c;
    c = from_file;
    auto set = [&](const char* name, auto member) {
      if (cmd->get_option_no_throw(name) && cmd->count(name) > 0) c.*member = flags.*member;
    };
    set("--query", &RunConfig::query);
    set("--category", &RunConfig::category);
    set("--count", &RunConfig::count);
    set("--seed", &RunConfig::seed);
    set("--workers", &RunConfig::workers);
    set("--registry", &RunConfig::registry);
    set("--personas", &RunConfig::personas);
    set("--cache-dir", &RunConfig::cache_dir);
    set("--mock-dir", &RunConfig::mock_dir);
    set("--endpoint", &RunConfig::endpoint);
    set("--fixture-renderer", &RunConfig::fixture_renderer);
    set("--timeout", &RunConfig::timeout_seconds);
    set("--max-attempts", &RunConfig::max_attempts);
    set("--num-topics", &RunConfig::num_topics);
    set("--code-model", &RunConfig::code_model);
    set("--code-model", &RunConfig::topic_model);
    set("--code-model", &RunConfig::data_model);
    set("--instruction-model", &RunConfig::instruction_model);
    set("--styles", &RunConfig::styles);
    set("--tools", &RunConfig::point_tools);
  }
  if (f.mock) c.provider = "mock";
}

int cmd_generate(RunConfig& c, const fs::path& out_dir, std::ostream& out, std::ostream& err) {
  auto rt = build_runtime(c);
  GenerationQuery q{c.query, c.category, c.count, c.seed};
  q.validate();
  PipelineDeps deps{rt->registry, rt->personas, *rt->gateway, *rt->renderer};
  const auto result = run_batch(q, deps, rt->pipeline, out_dir, config_to_json(c));
  print_batch(result.report, out, err);
  return result.shard.records.empty() ? kExitFailure : kExitOk;
}

int cmd_point(RunConfig& c, const fs::path& shard_dir, const fs::path& out_dir, std::ostream& out,
              std::ostream& err) {
  auto rt = build_runtime(c);
  std::vector<DatasetRecord> source;
  try {
    source = read_manifest(shard_dir);
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfigInvalid, e.what());
  }
  std::vector<Tool> tools;
  for (const auto& t : c.point_tools) {
    auto tool = parse_tool(t);
    if (!tool) throw Error(ErrorCode::kConfigInvalid, "unknown tool '" + t + "'");
    tools.push_back(*tool);
  }
  PipelineDeps deps{rt->registry, rt->personas, *rt->gateway, *rt->renderer};
  const auto result = run_point_batch(source, tools, c.seed, deps, rt->pipeline, out_dir, config_to_json(c));
  print_batch(result.report, out, err);
  return result.shard.records.empty() ? kExitFailure : kExitOk;
}

int cmd_validate(const fs::path& shard_dir, std::ostream& out, std::ostream& err) {
  if (!fs::is_directory(shard_dir)) {
    err << "not a directory: " << shard_dir.string() << "\n";
    return kExitConfigInvalid;
  }
  const auto violations = validate_shard(shard_dir);
  for (const auto& v : violations) {
    out << ojson{{"kind", v.kind}, {"record_id", v.record_id}, {"detail", v.detail}}.dump(
               -1, ' ', false, ojson::error_handler_t::replace)
        << "\n";
  }
  err << (violations.empty() ? "shard ok" : std::to_string(violations.size()) + " violation(s)") << "\n";
  return violations.empty() ? kExitOk : kExitFailure;
}

int cmd_stats(const fs::path& shard_dir, bool as_json, std::ostream& out) {
  const ShardStats s = stats(shard_dir);
  if (as_json) {
    out << stats_to_json(s).dump(2) << "\n";
    return kExitOk;
  }
  auto table = [&](const char* title, const std::map<std::string, std::size_t>& rows) {
    out << std::left << std::setw(28) << title << "records\n";
    for (const auto& [k, v] : rows) out << std::left << std::setw(28) << k << v << "\n";
    out << "\n";
  };
  table("category", s.per_category);
  table("pipeline", s.per_pipeline);
  out << "records          " << s.records << "\n"
      << "triplets         " << s.triplets << "\n"
      << "qa per image     " << std::fixed << std::setprecision(2) << s.qa_per_image << "\n"
      << "training rows    " << s.training_rows << "\n"
      << "point annots     " << s.point_annotations << "\n";
  if (s.cache_hit_rate) out << "cache hit rate   " << std::setprecision(1) << 100.0 * *s.cache_hit_rate << "%\n";
  for (const auto& [stage, n] : s.failures_by_stage) out << "failed at " << stage << "  " << n << "\n";
  return kExitOk;
}

int cmd_diversity(const fs::path& shard_dir, const std::string& embedder_kind, const std::string& endpoint,
                  std::size_t sample_size, std::uint64_t seed, const std::string& out_path, std::ostream& out) {
  const auto records = read_manifest(shard_dir);
  std::unique_ptr<Embedder> embedder;
  if (embedder_kind == "mock") {
    embedder = std::make_unique<HashEmbedder>();
  } else if (embedder_kind == "http") {
    HttpEmbedderConfig ec;
    ec.endpoint = endpoint;
    embedder = std::make_unique<HttpEmbedder>(ec);
  } else {
    throw Error(ErrorCode::kConfigInvalid, "embedder must be 'mock' or 'http'");
  }
  const auto report = compute_report(records, *embedder, sample_size, seed);
  const std::string text = report_to_json(report).dump(2) + "\n";
  out << text;
  if (!out_path.empty()) {
    std::ofstream f(out_path, std::ios::binary);
    f << text;
    if (!f) throw Error(ErrorCode::kIoError, "cannot write " + out_path);
  }
  return kExitOk;
}

std::string html_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

int cmd_gallery(const fs::path& shard_dir, fs::path out_path, std::size_t sample, std::uint64_t seed,
                std::ostream& err) {
  auto records = read_manifest(shard_dir);
  std::vector<std::size_t> idx(records.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(mix64(seed));
  const std::size_t k = std::min(sample, idx.size());
  for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + uniform_below(rng, idx.size() - i)]);
  idx.resize(k);
  std::sort(idx.begin(), idx.end());

  if (out_path.empty()) out_path = shard_dir / "gallery.html";
  const fs::path base = fs::relative(fs::absolute(shard_dir), fs::absolute(out_path).parent_path());
  std::ostringstream html;
  html << "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>" << html_escape(shard_dir.filename().string())
       << "</title>\n<style>body{font-family:sans-serif;margin:2em}figure{display:inline-block;vertical-align:top;"
          "width:420px;margin:1em}.frame{position:relative}.frame img{width:100%}.dot{position:absolute;width:10px;"
          "height:10px;margin:-5px;border-radius:50%;background:#e0f;border:1px solid #fff}figcaption{font-size:"
          "12px}</style></head><body>\n<h1>"
       << html_escape(shard_dir.filename().string()) << "</h1>\n<p>" << k << " of " << records.size()
       << " records</p>\n";
  for (auto i : idx) {
    const auto& r = records[i];
    html << "<figure><div class=\"frame\"><img src=\"" << html_escape((base / r.image).generic_string()) << "\">";
    for (const auto& a : r.points)
      for (const auto& [x, y] : a.points) html << "<span class=\"dot\" style=\"left:" << x << "%;top:" << y << "%\"></span>";
    html << "</div><figcaption><b>" << html_escape(r.pipeline_id) << "</b> " << html_escape(r.topic) << "<br><i>"
         << html_escape(r.persona) << "</i><ul>";
    for (const auto& t : r.qa) html << "<li>" << html_escape(t.question) << " <b>" << html_escape(t.answer) << "</b></li>";
    for (const auto& a : r.points) html << "<li>" << html_escape(a.question) << "</li>";
    html << "</ul></figcaption></figure>\n";
  }
  html << "</body></html>\n";
  std::ofstream f(out_path, std::ios::binary);
  f << html.str();
  if (!f) throw Error(ErrorCode::kIoError, "cannot write " + out_path.string());
  err << "wrote " << out_path.string() << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Synthetic text-rich image dataset generator", "codesynth"};
  app.require_subcommand(1);

  RunConfig gen_cfg;
  CommonFlags gen_flags;
  std::string gen_out;
  auto* gen = app.add_subcommand("generate", "Run the generation pipelines for a query");
  gen->add_option("--query", gen_cfg.query, "query text, e.g. \"book covers\"");
  gen->add_option("--category", gen_cfg.category, "category tag or auto");
  gen->add_option("--count", gen_cfg.count, "target record count");
  gen->add_option("--out", gen_out, "output shard directory")->required();
  add_run_flags(gen, gen_cfg, gen_flags);

  RunConfig pt_cfg;
  CommonFlags pt_flags;
  std::string pt_shard, pt_out;
  auto* pt = app.add_subcommand("point", "Derive pointing records from a shard's code");
  pt->add_option("--shard", pt_shard, "input shard")->required();
  pt->add_option("--out", pt_out, "output shard directory")->required();
  pt->add_option("--tools", pt_cfg.point_tools, "tools whose code may be edited")->delimiter(',');
  add_run_flags(pt, pt_cfg, pt_flags);

  std::string shard_arg;
  auto* val = app.add_subcommand("validate", "Check a shard");
  val->add_option("shard", shard_arg)->required();

  bool stats_json = false;
  std::string stats_shard;
  auto* st = app.add_subcommand("stats", "Print shard statistics");
  st->add_option("shard", stats_shard)->required();
  st->add_flag("--json", stats_json, "print JSON instead of a table");

  std::string div_shard, div_embedder = "http", div_endpoint, div_out;
  std::size_t div_sample = 10000;
  std::uint64_t div_seed = 0;
  bool div_mock = false;
  auto* div = app.add_subcommand("diversity", "Image and text diversity of a shard");
  div->add_option("shard", div_shard)->required();
  div->add_option("--embedder", div_embedder, "mock or http");
  div->add_flag("--mock-provider", div_mock, "use the deterministic mock embedder");
  div->add_option("--endpoint", div_endpoint, "embeddings endpoint for --embedder http");
  div->add_option("--sample-size", div_sample, "records sampled");
  div->add_option("--seed", div_seed, "sampling seed");
  div->add_option("--out", div_out, "also write the report here");

  std::string gal_shard, gal_out;
  std::size_t gal_sample = 24;
  std::uint64_t gal_seed = 0;
  auto* gal = app.add_subcommand("gallery", "Write a static HTML page of sampled records");
  gal->add_option("shard", gal_shard)->required();
  gal->add_option("--out", gal_out, "HTML file (default <shard>/gallery.html)");
  gal->add_option("--sample", gal_sample, "records shown");
  gal->add_option("--seed", gal_seed, "sampling seed");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfigInvalid;
  }

  try {
    if (gen->parsed()) {
      resolve(gen, gen_cfg, gen_flags);
      return cmd_generate(gen_cfg, gen_out, out, err);
    }
    if (pt->parsed()) {
      resolve(pt, pt_cfg, pt_flags);
      return cmd_point(pt_cfg, pt_shard, pt_out, out, err);
    }
    if (val->parsed()) return cmd_validate(shard_arg, out, err);
    if (st->parsed()) return cmd_stats(stats_shard, stats_json, out);
    if (div->parsed()) {
      return cmd_diversity(div_shard, div_mock ? "mock" : div_embedder, div_endpoint, div_sample, div_seed, div_out,
                           out);
    }
    if (gal->parsed()) return cmd_gallery(gal_shard, gal_out, gal_sample, gal_seed, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_for(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitConfigInvalid;
}

}  // namespace codesynth
