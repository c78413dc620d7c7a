// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <functional>
#include <map>
#include <mutex>
#include <set>

#include "codesynth/error.hpp"
#include "codesynth/hashing.hpp"
#include "codesynth/pipeline.hpp"
#include "codesynth/providers.hpp"
#include "test_util.hpp"

using namespace codesynth;

namespace {

// Fixture answers for every stage unless a stage is overridden.
class StageProvider : public Provider {
 public:
  using Fn = std::function<std::string(const LlmRequest&)>;
  std::string id() const override { return "mock"; }
  std::string complete(const LlmRequest& r) override {
    {
      std::lock_guard lock(mutex_);
      prompts_[r.stage].push_back(r.prompt);
    }
    if (auto it = overrides.find(r.stage); it != overrides.end()) return it->second(r);
    return fixtures_.complete(r);
  }
  std::vector<std::string> prompts(Stage s) {
    std::lock_guard lock(mutex_);
    return prompts_[s];
  }
  std::map<Stage, Fn> overrides;

 private:
  FixtureProvider fixtures_{testutil::data_dir() / "mock"};
  std::mutex mutex_;
  std::map<Stage, std::vector<std::string>> prompts_;
};

// Swaps in a non-terminating scene for the chosen jobs.
class HangingRenderer : public Renderer {
 public:
  HangingRenderer(Renderer& inner, std::set<std::size_t> jobs) : inner_(inner), jobs_(std::move(jobs)) {}
  RenderedImage render(const CodeArtifact& a, const SandboxPolicy& p, const RenderContext& ctx) override {
    if (!jobs_.count(ctx.job_index)) return inner_.render(a, p, ctx);
    CodeArtifact spin = a;
    spin.source = "canvas 300 300 #ffffff\nspin\n";
    SandboxPolicy quick = p;
    quick.wall_timeout_seconds = 0.3;
    return inner_.render(spin, quick, ctx);
  }

 private:
  Renderer& inner_;
  std::set<std::size_t> jobs_;
};

RendererConfig fixture_renderer() {
  RendererConfig rc;
  rc.fixture_binary = testutil::fixture_binary();
  rc.fixture_for_all_tools = true;
  return rc;
}

GatewayOptions fast() {
  GatewayOptions o;
  o.base_backoff = std::chrono::milliseconds(1);
  return o;
}

struct Hermetic {
  PipelineRegistry registry = load_registry(testutil::data_dir() / "registry.jsonl");
  PersonaStore personas = load_personas(testutil::data_dir() / "personas_fixture.txt");
  std::shared_ptr<StageProvider> provider = std::make_shared<StageProvider>();
  Gateway gateway{std::make_shared<ResponseCache>(), fast()};
  AdapterRenderer renderer{fixture_renderer()};
  PipelineConfig config;

  explicit Hermetic(std::vector<std::string> persona_texts = {}) {
    if (!persona_texts.empty()) personas = PersonaStore(std::move(persona_texts));
    gateway.register_provider(provider);
    config.workers = 2;
  }
  PipelineDeps deps() { return {registry, personas, gateway, renderer}; }
  PipelineDeps deps(Renderer& r) { return {registry, personas, gateway, r}; }
};

std::string manifest_of(const std::filesystem::path& dir) { return testutil::read_file(dir / "manifest.jsonl"); }

}  // namespace

TEST_CASE("job plan") {
  Hermetic h;
  const auto jobs = plan_jobs({"bar charts", "charts", 12, 4}, h.deps());
  REQUIRE(jobs.size() == 12);
  std::map<std::string, int> per;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    CHECK(jobs[i].index == i);
    CHECK(jobs[i].job_seed == derive_job_seed(4, i));
    CHECK(jobs[i].persona_id < h.personas.size());
    ++per[jobs[i].pipeline->id];
  }
  CHECK(per.size() == 5);
  CHECK(per["charts-html"] == 3);
  CHECK(per["charts-vegalite"] == 2);
}

TEST_CASE("persona and topic flow into later stages") {
  const std::string persona = "a sci-fi novelist who likes alien worlds";
  const std::string topic = "a novel about Extraterrestrial Flora & Fauna";
  Hermetic h({persona});
  h.config.num_topics = 1;
  h.provider->overrides[Stage::kTopic] = [&](const LlmRequest&) { return topic; };
  auto jobs = plan_jobs({"book cover", "auto", 1, 7}, h.deps());
  REQUIRE(jobs.size() == 1);
  CHECK(jobs[0].pipeline->category == Category::kDocuments);
  testutil::TempDir ws;
  const auto result = run_job(jobs[0], h.deps(), h.config, ws.path());
  REQUIRE(std::holds_alternative<DatasetRecord>(result));
  const auto& rec = std::get<DatasetRecord>(result);
  CHECK(rec.persona == persona);
  CHECK(rec.topic == topic);
  CHECK(rec.query == "book cover");
  CHECK(rec.category == "documents");
  CHECK(rec.qa.size() == 6);
  CHECK(rec.width == 512);
  CHECK(rec.height == 384);
  CHECK(std::filesystem::is_regular_file(rec.source_image));
  for (Stage s : {Stage::kData, Stage::kCode}) {
    const auto prompts = h.provider->prompts(s);
    REQUIRE(prompts.size() == 1);
    CHECK(prompts[0].find(topic) != std::string::npos);
    CHECK(prompts[0].find(persona) != std::string::npos);
  }
  for (const char* stage : {"topic", "data", "code", "instruction"}) CHECK(rec.provenance.prompt_hashes.count(stage) == 1);
  CHECK(rec.provenance.job_seed == derive_job_seed(7, 0));
  CHECK(rec.provenance.code_model == "mock");
  std::set<Stage> logged;
  for (const auto& o : jobs[0].stage_log) {
    CHECK(o.ok);
    logged.insert(o.stage);
  }
  CHECK(logged.size() == 4);
}

TEST_CASE("code that never compiles exhausts the code stage") {
  Hermetic h;
  h.provider->overrides[Stage::kCode] = [](const LlmRequest& r) {
    return "```" + std::string(r.prompt.find("```latex") != std::string::npos ? "latex" : "html") +
           "\ncanvas 300 300 #ffffff\nwobble\n```\n";
  };
  auto jobs = plan_jobs({"menus", "documents", 1, 1}, h.deps());
  testutil::TempDir ws;
  const auto result = run_job(jobs[0], h.deps(), h.config, ws.path());
  REQUIRE(std::holds_alternative<JobFailure>(result));
  const auto& f = std::get<JobFailure>(result);
  CHECK(f.stage == Stage::kCode);
  CHECK(f.attempts == 3);
  CHECK(f.code == ErrorCode::kCompileError);
  CHECK(f.kind == FailureKind::kRender);
  CHECK(h.provider->prompts(Stage::kCode).size() == 3);
  CHECK(h.provider->prompts(Stage::kInstruction).empty());
}

TEST_CASE("unparseable data is a parse failure") {
  Hermetic h;
  h.config.max_attempts = 2;
  h.provider->overrides[Stage::kData] = [](const LlmRequest&) { return std::string("no object here"); };
  auto jobs = plan_jobs({"menus", "documents", 1, 1}, h.deps());
  testutil::TempDir ws;
  const auto result = run_job(jobs[0], h.deps(), h.config, ws.path());
  REQUIRE(std::holds_alternative<JobFailure>(result));
  CHECK(std::get<JobFailure>(result).stage == Stage::kData);
  CHECK(std::get<JobFailure>(result).attempts == 2);
  CHECK(std::get<JobFailure>(result).kind == FailureKind::kParse);
}

TEST_CASE("blank renders are rejected and retried") {
  Hermetic h;
  h.provider->overrides[Stage::kCode] = [](const LlmRequest&) {
    return std::string("```html\ncanvas 400 400 #ffffff\n```\n");
  };
  auto jobs = plan_jobs({"menus", "documents", 1, 1}, h.deps());
  testutil::TempDir ws;
  const auto result = run_job(jobs[0], h.deps(), h.config, ws.path());
  REQUIRE(std::holds_alternative<JobFailure>(result));
  CHECK(std::get<JobFailure>(result).code == ErrorCode::kImageRejected);
  CHECK(std::get<JobFailure>(result).attempts == 3);
}

TEST_CASE("batch with injected render timeouts") {
  Hermetic h;
  HangingRenderer faulty(h.renderer, {3, 7});
  testutil::TempDir out;
  const auto result = run_batch({"bar charts", "charts", 10, 11}, h.deps(faulty), h.config, out / "shard");
  CHECK(result.report.jobs == 10);
  CHECK(result.report.failed == 2);
  CHECK(result.report.succeeded == 8);
  CHECK(result.shard.records.size() == 8);
  CHECK(result.report.failures_by_kind.at("render-failed") == 2);
  CHECK(result.report.failures_by_stage.at("code") == 2);
  REQUIRE(result.report.failures.size() == 2);
  CHECK(result.report.failures[0].job_index == 3);
  CHECK(result.report.failures[1].job_index == 7);
  CHECK(result.report.failures[0].code == ErrorCode::kTimeout);
  CHECK(validate_shard(out / "shard").empty());
  for (const auto& f : result.report.failures) {
    CHECK(std::filesystem::is_regular_file(out / "shard" / "failures" / f.record_id / "failure.json"));
  }
  CHECK_FALSE(std::filesystem::exists(out / "shard.work"));
  const auto report = nlohmann::json::parse(testutil::read_file(out / "shard" / "report.json"));
  CHECK(report["failed"] == 2);
}

TEST_CASE("failure in one job leaves the others untouched") {
  testutil::TempDir out;
  std::vector<DatasetRecord> clean, faulted;
  {
    Hermetic h;
    clean = run_batch({"tables", "tables", 8, 5}, h.deps(), h.config, out / "clean").shard.records;
  }
  {
    Hermetic h;
    HangingRenderer faulty(h.renderer, {2});
    faulted = run_batch({"tables", "tables", 8, 5}, h.deps(faulty), h.config, out / "faulted").shard.records;
  }
  REQUIRE(clean.size() == 8);
  REQUIRE(faulted.size() == 7);
  std::size_t j = 0;
  for (const auto& r : clean) {
    if (r.provenance.job_index == 2) continue;
    CHECK(record_to_json(r).dump() == record_to_json(faulted[j]).dump());
    ++j;
  }
}

TEST_CASE("worker count does not change the output") {
  testutil::TempDir out;
  std::string reference;
  for (int workers : {1, 3, 6}) {
    Hermetic h;
    h.config.workers = workers;
    const auto dir = out / ("w" + std::to_string(workers));
    run_batch({"flow charts", "diagrams", 9, 21}, h.deps(), h.config, dir);
    if (reference.empty()) reference = manifest_of(dir);
    CHECK(manifest_of(dir) == reference);
  }
}

TEST_CASE("warm rerun reproduces the manifest from cache") {
  testutil::TempDir out;
  Hermetic h;
  const auto cold = run_batch({"bar charts", "charts", 6, 2}, h.deps(), h.config, out / "cold");
  const auto calls = h.provider->prompts(Stage::kTopic).size();
  const auto warm = run_batch({"bar charts", "charts", 6, 2}, h.deps(), h.config, out / "warm");
  CHECK(h.provider->prompts(Stage::kTopic).size() == calls);
  CHECK(warm.report.cache_hit_rate == 1.0);
  CHECK(cold.report.cache_hit_rate == 0.0);
  CHECK(manifest_of(out / "cold") == manifest_of(out / "warm"));
  CHECK(testutil::read_file(out / "cold" / "training.jsonl") == testutil::read_file(out / "warm" / "training.jsonl"));
}

TEST_CASE("all jobs failing is an error and keeps workspaces") {
  Hermetic h;
  h.config.max_attempts = 1;
  h.provider->overrides[Stage::kTopic] = [](const LlmRequest&) { return std::string(" | | "); };
  testutil::TempDir out;
  try {
    run_batch({"bar charts", "charts", 2, 2}, h.deps(), h.config, out / "s");
    FAIL("expected all_jobs_failed");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kAllJobsFailed);
  }
  CHECK_FALSE(std::filesystem::exists(out / "s" / "manifest.jsonl"));
}

TEST_CASE("existing output is refused before any work") {
  Hermetic h;
  testutil::TempDir out;
  testutil::write_file(out / "s" / "x.txt", "x");
  try {
    run_batch({"bar charts", "charts", 2, 2}, h.deps(), h.config, out / "s");
    FAIL("expected output_exists");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kOutputExists);
  }
  CHECK(h.provider->prompts(Stage::kTopic).empty());
}

TEST_CASE("pointing batch from generated records") {
  Hermetic h;
  testutil::TempDir out;
  const auto src = run_batch({"web pages", "documents", 4, 3}, h.deps(), h.config, out / "qa");
  const auto records = read_manifest(out / "qa");
  const auto pointed = run_point_batch(records, {Tool::kHtml, Tool::kLatex}, 5, h.deps(), h.config, out / "pt");
  CHECK(pointed.shard.records.size() == 4);
  for (const auto& r : pointed.shard.records) {
    CHECK(r.category == "pointing");
    REQUIRE(r.points.size() == 1);
    CHECK(r.points[0].points.size() == 1);
    CHECK(r.qa.empty());
    CHECK(!r.provenance.source_record.empty());
    CHECK(r.provenance.prompt_hashes.count("point-edit") == 1);
  }
  CHECK(validate_shard(out / "pt").empty());
  try {
    run_point_batch(records, {Tool::kSvg}, 5, h.deps(), h.config, out / "none");
    FAIL("expected config_invalid");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kConfigInvalid);
  }
}

TEST_CASE("failure classification") {
  CHECK(classify_failure(ErrorCode::kTimeout) == FailureKind::kRender);
  CHECK(classify_failure(ErrorCode::kCompileError) == FailureKind::kRender);
  CHECK(classify_failure(ErrorCode::kNoCodeBlock) == FailureKind::kParse);
  CHECK(classify_failure(ErrorCode::kTransportError) == FailureKind::kProvider);
  CHECK(to_string(FailureKind::kRender) == "render-failed");
  CHECK(to_string(FailureKind::kParse) == "parse-failed");
}
