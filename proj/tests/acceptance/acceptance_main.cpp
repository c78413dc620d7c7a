// SPDX-License-Identifier: Apache-2.0
// One line per acceptance criterion: "PASS <name>: <detail>" or "FAIL ...".
// Exit status is the number of failed criteria (capped at 1).

#include <signal.h>
#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "codesynth/diversity.hpp"
#include "codesynth/error.hpp"
#include "codesynth/fixture_raster.hpp"
#include "codesynth/instruction.hpp"
#include "codesynth/parsers.hpp"
#include "codesynth/pipeline.hpp"
#include "codesynth/pointing.hpp"
#include "codesynth/providers.hpp"
#include "codesynth/registry.hpp"
#include "codesynth/render.hpp"

namespace fs = std::filesystem;
using namespace codesynth;
using Clock = std::chrono::steady_clock;

namespace {

const fs::path kSource = CODESYNTH_SOURCE_DIR;
const fs::path kData = kSource / "data";

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Outcome {
  bool ok = true;
  std::string detail;
  void fail(const std::string& why) {
    if (ok) detail = why;
    ok = false;
  }
};

class Scratch {
 public:
  Scratch() {
    path_ = fs::temp_directory_path() / ("codesynth-acceptance-" + std::to_string(::getpid()));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  fs::path operator/(const std::string& s) const { return path_ / s; }

 private:
  fs::path path_;
};

// ---------------------------------------------------------------- registry

Outcome registry_fidelity() {
  Outcome o;
  const auto t0 = Clock::now();
  const auto reg = load_registry(kData / "registry.jsonl");
  const double took = seconds_since(t0);
  // Reference category -> tools table, one line per category.
  const std::vector<std::pair<std::string, std::vector<std::string>>> reference{
      {"charts", {"matplotlib", "plotly", "vegalite", "latex", "html"}},
      {"documents", {"latex", "html"}},
      {"math", {"latex"}},
      {"tables", {"latex", "matplotlib", "plotly", "html"}},
      {"diagrams", {"graphviz", "latex", "mermaid"}},
      {"vector-graphics", {"svg", "asymptote"}},
      {"sheet-music", {"lilypond"}},
      {"circuits", {"latex"}},
      {"chemical-structures", {"rdkit"}},
  };
  std::set<std::pair<std::string, std::string>> want_qa, got_qa;
  std::set<std::string> want_tools;
  for (const auto& [cat, tools] : reference)
    for (const auto& t : tools) {
      want_qa.emplace(cat, t);
      want_tools.insert(t);
    }
  std::set<std::string> got_tools, got_cats;
  std::size_t pointing = 0;
  for (const auto& s : reg.specs()) {
    if (s.is_pointing()) {
      ++pointing;
      if (s.tool != Tool::kHtml) o.fail("pointing pipeline is not html");
      continue;
    }
    got_qa.emplace(std::string(to_string(s.category)), std::string(to_string(s.tool)));
    got_tools.insert(std::string(to_string(s.tool)));
    got_cats.insert(std::string(to_string(s.category)));
  }
  if (want_qa.size() != 20 || want_tools.size() != 11) o.fail("oracle table malformed");
  if (got_qa != want_qa) o.fail("category/tool pairs differ from the reference table");
  if (got_cats.size() != 9) o.fail("QA categories = " + std::to_string(got_cats.size()));
  if (got_tools != want_tools) o.fail("tool set differs");
  if (pointing != 1) o.fail("pointing pipelines = " + std::to_string(pointing));
  if (reg.qa_spec_count() != 20 || reg.qa_category_count() != 9 || reg.tool_count() != 11 ||
      reg.pointing_spec_count() != 1)
    o.fail("registry counters disagree");
  if (took >= 1.0) o.fail("load took " + std::to_string(took) + " s");
  if (o.ok) {
    std::ostringstream d;
    d << "9 categories, 11 tools, 20 QA pipelines, 1 pointing pipeline, " << took * 1000 << " ms";
    o.detail = d.str();
  }
  return o;
}

// ---------------------------------------------------------------- diversity

double naive_distance(const std::vector<std::vector<double>>& vs) {
  const std::size_t n = vs.size();
  double sum = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      double dot = 0, a = 0, b = 0;
      for (std::size_t k = 0; k < vs[i].size(); ++k) {
        dot += vs[i][k] * vs[j][k];
        a += vs[i][k] * vs[i][k];
        b += vs[j][k] * vs[j][k];
      }
      sum += 1.0 - dot / std::sqrt(a * b);
    }
  return sum / static_cast<double>(n * n - n);
}

std::vector<FeatureVector> wrap(const std::vector<std::vector<double>>& vs) {
  std::vector<FeatureVector> out;
  out.reserve(vs.size());
  for (const auto& v : vs) out.emplace_back(v);
  return out;
}

Outcome diversity_oracle() {
  Outcome o;
  std::mt19937_64 rng(20241019);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> pos(0.01, 1.0);
  double worst = 0, impl_seconds = 0;
  const auto t0 = Clock::now();
  for (int set = 0; set < 200; ++set) {
    // The first set pins the extremes.
    const std::size_t n = set == 0 ? 256 : 2 + rng() % 255;
    const std::size_t dim = set == 0 ? 512 : 1 + rng() % 512;
    std::vector<std::vector<double>> vs(n, std::vector<double>(dim));
    for (auto& v : vs)
      for (auto& x : v) x = (set % 2) ? gauss(rng) : pos(rng);
    const auto t = Clock::now();
    const double got = mean_pairwise_cosine_distance(wrap(vs));
    impl_seconds += seconds_since(t);
    worst = std::max(worst, std::abs(got - naive_distance(vs)));
  }
  const double total = seconds_since(t0);
  if (worst > 1e-12) o.fail("max deviation from oracle " + std::to_string(worst));
  const std::vector<double> u{0.3, -1.2, 4.0};
  if (std::abs(mean_pairwise_cosine_distance(wrap({u, u, u, u}))) > 1e-12) o.fail("identical set is not 0");
  if (std::abs(mean_pairwise_cosine_distance(wrap({{2, 0, 0}, {0, 0, 5}})) - 1.0) > 1e-12)
    o.fail("orthogonal pair is not 1");
  if (impl_seconds >= 10.0) o.fail("implementation took " + std::to_string(impl_seconds) + " s");
  if (o.ok) {
    std::ostringstream d;
    d << "200 sets, max |impl - oracle| = " << worst << ", impl " << impl_seconds << " s, with oracle " << total << " s";
    o.detail = d.str();
  }
  return o;
}

// ---------------------------------------------------------------- point extraction

// 8x8 supersampled coverage of a disk over pixel (x, y), whose square spans
// [x - 0.5, x + 0.5] x [y - 0.5, y + 0.5].
double coverage(int x, int y, double cx, double cy, double r) {
  int inside = 0;
  for (int sy = 0; sy < 8; ++sy)
    for (int sx = 0; sx < 8; ++sx) {
      const double px = x - 0.5 + (sx + 0.5) / 8.0;
      const double py = y - 0.5 + (sy + 0.5) / 8.0;
      if ((px - cx) * (px - cx) + (py - cy) * (py - cy) <= r * r) ++inside;
    }
  return inside / 64.0;
}

Outcome point_extraction() {
  Outcome o;
  constexpr int kSize = 1024;
  const Rgb marker{255, 0, 255};
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst_px = 0, worst_norm = 0, extract_seconds = 0;
  std::size_t planted_total = 0;
  const auto t0 = Clock::now();
  for (int img_i = 0; img_i < 100; ++img_i) {
    Image img(kSize, kSize, {250, 250, 245});
    // Distractor blocks in non-marker colors.
    for (int b = 0; b < 6; ++b) {
      const int bx = rng() % 900, by = rng() % 900, bw = 20 + rng() % 100, bh = 20 + rng() % 100;
      const Rgb c{static_cast<std::uint8_t>(rng() % 120), static_cast<std::uint8_t>(60 + rng() % 150),
                  static_cast<std::uint8_t>(rng() % 120)};
      for (int y = by; y < by + bh; ++y)
        for (int x = bx; x < bx + bw; ++x) img.set_rgb(x, y, c);
    }
    struct Planted {
      double x, y, r;
    };
    std::vector<Planted> planted;
    const int count = 1 + static_cast<int>(rng() % 5);
    while (static_cast<int>(planted.size()) < count) {
      const Planted p{20 + unit(rng) * (kSize - 40), 20 + unit(rng) * (kSize - 40), 3 + unit(rng) * 3};
      const bool apart = std::all_of(planted.begin(), planted.end(), [&](const Planted& q) {
        return std::hypot(p.x - q.x, p.y - q.y) > p.r + q.r + 4;
      });
      if (apart) planted.push_back(p);
    }
    for (const auto& p : planted) {
      for (int y = int(p.y - p.r) - 1; y <= int(p.y + p.r) + 1; ++y)
        for (int x = int(p.x - p.r) - 1; x <= int(p.x + p.r) + 1; ++x) {
          const double a = coverage(x, y, p.x, p.y, p.r);
          if (a <= 0) continue;
          const Rgb bg = img.rgb_at(x, y);
          Rgb blended;
          for (int k = 0; k < 3; ++k) blended[k] = static_cast<std::uint8_t>(std::lround(bg[k] * (1 - a) + marker[k] * a));
          img.set_rgb(x, y, blended);
        }
    }
    planted_total += planted.size();

    const auto te = Clock::now();
    PointAnnotation ann;
    try {
      ann = annotate_points("q", img, MarkerSpec{});
    } catch (const Error& e) {
      o.fail("image " + std::to_string(img_i) + ": " + e.what());
      continue;
    }
    extract_seconds += seconds_since(te);
    if (ann.pixel_points.size() != planted.size()) {
      o.fail("image " + std::to_string(img_i) + ": " + std::to_string(ann.pixel_points.size()) + " components for " +
             std::to_string(planted.size()) + " disks");
      continue;
    }
    for (const auto& p : planted) {
      double best = 1e9;
      for (const auto& c : ann.pixel_points) best = std::min(best, std::max(std::abs(c.x - p.x), std::abs(c.y - p.y)));
      worst_px = std::max(worst_px, best);
    }
    for (std::size_t i = 0; i < ann.points.size(); ++i) {
      worst_norm = std::max(worst_norm, std::abs(ann.points[i].first - 100.0 * ann.pixel_points[i].x / kSize));
      worst_norm = std::max(worst_norm, std::abs(ann.points[i].second - 100.0 * ann.pixel_points[i].y / kSize));
    }
  }
  const double total = seconds_since(t0);
  if (worst_px > 1.0) o.fail("worst centroid error " + std::to_string(worst_px) + " px");
  if (worst_norm > 1e-6) o.fail("normalization error " + std::to_string(worst_norm));
  if (total >= 30.0) o.fail("took " + std::to_string(total) + " s");
  if (o.ok) {
    std::ostringstream d;
    d << planted_total << " disks in 100 images, worst centroid error " << worst_px << " px, normalization error "
      << worst_norm << ", no false components, " << total << " s (extraction " << extract_seconds << " s)";
    o.detail = d.str();
  }
  return o;
}

// ---------------------------------------------------------------- hermetic end-to-end

struct Proc {
  int code = -1;
  std::string out;
};

Proc run_process(const std::vector<std::string>& argv) {
  int pipefd[2];
  if (::pipe(pipefd) != 0) return {};
  const pid_t pid = ::fork();
  if (pid == 0) {
    ::dup2(pipefd[1], 1);
    const int devnull = ::open("/dev/null", O_WRONLY);
    if (devnull >= 0) ::dup2(devnull, 2);
    ::close(pipefd[0]);
    ::close(pipefd[1]);
    std::vector<char*> args;
    for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
    args.push_back(nullptr);
    ::execv(args[0], args.data());
    ::_exit(127);
  }
  ::close(pipefd[1]);
  Proc p;
  char buf[4096];
  for (ssize_t n; (n = ::read(pipefd[0], buf, sizeof buf)) > 0;) p.out.append(buf, static_cast<std::size_t>(n));
  ::close(pipefd[0]);
  int status = 0;
  ::waitpid(pid, &status, 0);
  p.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return p;
}

Outcome hermetic_end_to_end(const Scratch& scratch) {
  Outcome o;
  const std::string cli = CODESYNTH_CLI_BIN;
  auto generate = [&](const fs::path& out) {
    return run_process({cli, "generate", "--query", "bar charts", "--count", "50", "--seed", "7", "--mock-provider",
                        "--fixture-renderer", "--cache-dir", (scratch / "cache").string(), "--out", out.string()});
  };
  const auto t0 = Clock::now();
  const auto cold = generate(scratch / "cold");
  if (cold.code != 0) {
    o.fail("cold generate exited " + std::to_string(cold.code));
    return o;
  }
  const auto manifest = read_file(scratch / "cold" / "manifest.jsonl");
  std::set<std::string> ids;
  std::istringstream lines(manifest);
  std::size_t n = 0;
  for (std::string line; std::getline(lines, line); ++n) {
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("id")) {
      o.fail("manifest line " + std::to_string(n) + " is not a record");
      break;
    }
    ids.insert(j["id"].get<std::string>());
    if (!fs::is_regular_file(scratch / "cold" / j["image"].get<std::string>())) o.fail("image missing for a record");
  }
  if (n != 50 || ids.size() != 50) o.fail("manifest has " + std::to_string(n) + " lines, " + std::to_string(ids.size()) + " ids");
  const auto v = run_process({cli, "validate", (scratch / "cold").string()});
  if (v.code != 0) o.fail("validate exited " + std::to_string(v.code));

  const auto warm = generate(scratch / "warm");
  if (warm.code != 0) {
    o.fail("warm generate exited " + std::to_string(warm.code));
    return o;
  }
  const double took = seconds_since(t0);
  for (const char* f : {"manifest.jsonl", "training.jsonl", "config.json"})
    if (read_file(scratch / "cold" / f) != read_file(scratch / "warm" / f)) o.fail(std::string(f) + " differs on rerun");
  std::size_t images = 0;
  for (const auto& e : fs::directory_iterator(scratch / "cold" / "images")) {
    ++images;
    if (read_file(e.path()) != read_file(scratch / "warm" / "images" / e.path().filename())) o.fail("image bytes differ");
  }
  if (images != 50) o.fail(std::to_string(images) + " images");
  const auto report = nlohmann::json::parse(warm.out, nullptr, false);
  if (report.is_discarded() || report.value("cache_hit_rate", -1.0) != 1.0)
    o.fail("warm cache hit rate is not 100%");
  const auto file_report = nlohmann::json::parse(read_file(scratch / "warm" / "report.json"), nullptr, false);
  if (file_report.is_discarded() || file_report.value("cache_hit_rate", -1.0) != 1.0)
    o.fail("report.json does not record 100% cache hits");
  if (took >= 60.0) o.fail("took " + std::to_string(took) + " s");
  if (o.ok) {
    std::ostringstream d;
    d << "50 records, validate ok, warm rerun byte-identical with 100% cache hits, " << took << " s";
    o.detail = d.str();
  }
  return o;
}

// ---------------------------------------------------------------- parsers

Outcome parser_robustness() {
  Outcome o;
  std::mt19937_64 rng(4242);
  const std::string salt = "{}[]\"'|`\n\n\\:,.-0123456789abcjsonhtml ";
  std::size_t values = 0, errors = 0;
  for (int i = 0; i < 100000; ++i) {
    std::string s(rng() % 256, '\0');
    const int mode = i % 3;
    for (auto& c : s) {
      if (mode == 0) c = static_cast<char>(rng());
      else if (mode == 1) c = salt[rng() % salt.size()];
      else c = (rng() % 4) ? salt[rng() % salt.size()] : static_cast<char>(rng());
    }
    if (i % 7 == 0) s = "```" + s.substr(0, s.size() / 2) + "\n```";
    const std::vector<std::function<void()>> parsers{
        [&] { parse_topics(s, 1 + rng() % 5); }, [&] { parse_json_payload(s); },
        [&] { extract_code_block(s, "html"); }, [&] { parse_qa_triplets(s); }};
    for (const auto& p : parsers) {
      try {
        p();
        ++values;
      } catch (const Error&) {
        ++errors;
      } catch (const std::exception& e) {
        o.fail(std::string("untyped exception: ") + e.what());
      }
    }
  }

  // Example strings from the stage prompts.
  if (parse_topics("topic1 | topic2 | topic3", 3) != std::vector<std::string>{"topic1", "topic2", "topic3"})
    o.fail("topic example");
  if (parse_json_payload("```json\n{\"name\":\"Acme\"}\n```").payload["name"] != "Acme") o.fail("json example");
  if (extract_code_block("```html\n<html></html>\n```", "html").source != "<html></html>") o.fail("code example");
  const auto revenue = parse_qa_triplets(
      "what is the total revenue? | The total revenue is the sum of all revenue sources in the document, which is "
      "$2000 + $3000 + $5000 = $10000. | $10000");
  if (revenue.triplets.size() != 1 || revenue.triplets[0].question != "what is the total revenue?" ||
      revenue.triplets[0].explanation !=
          "The total revenue is the sum of all revenue sources in the document, which is $2000 + $3000 + $5000 = "
          "$10000." ||
      revenue.triplets[0].answer != "$10000")
    o.fail("$10000 example line");
  if (parse_qa_triplets("q1 | e1 | a1\n\nq2 | e2 | a2").triplets.size() != 2) o.fail("double-newline separator");
  if (o.ok) {
    std::ostringstream d;
    d << "1e5 inputs x 4 parsers: " << values << " values, " << errors << " typed errors, 0 crashes; prompt example strings exact";
    o.detail = d.str();
  }
  return o;
}

// ---------------------------------------------------------------- sandbox

bool process_gone(pid_t pid) {
  if (::kill(pid, 0) != 0) return true;
  const auto stat = read_file("/proc/" + std::to_string(pid) + "/stat");
  const auto close = stat.rfind(')');
  return close != std::string::npos && close + 2 < stat.size() && stat[close + 2] == 'Z';
}

class HangingRenderer : public Renderer {
 public:
  HangingRenderer(Renderer& inner, std::set<std::size_t> jobs) : inner_(inner), jobs_(std::move(jobs)) {}
  RenderedImage render(const CodeArtifact& a, const SandboxPolicy& p, const RenderContext& ctx) override {
    if (!jobs_.count(ctx.job_index)) return inner_.render(a, p, ctx);
    CodeArtifact spin = a;
    spin.source = "canvas 300 300 #ffffff\nspin\n";
    SandboxPolicy quick = p;
    quick.wall_timeout_seconds = 0.5;
    return inner_.render(spin, quick, ctx);
  }

 private:
  Renderer& inner_;
  std::set<std::size_t> jobs_;
};

Outcome sandbox(const Scratch& scratch) {
  Outcome o;
  std::ostringstream d;

  // Infinite loop in the fixture tool.
  {
    RendererConfig rc;
    rc.fixture_binary = CODESYNTH_FIXTURE_RENDER_BIN;
    AdapterRenderer r(rc);
    SandboxPolicy p;
    p.working_dir = scratch / "spin";
    p.wall_timeout_seconds = 2.0;
    const auto t0 = Clock::now();
    try {
      r.render(CodeArtifact{"canvas 300 300 #ffffff\nspin\n", Tool::kFixture, "fixture", false}, p, {});
      o.fail("spin rendered");
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kTimeout) o.fail(std::string("spin: ") + e.what());
    }
    const double took = seconds_since(t0);
    if (took >= 3.0) o.fail("timeout returned after " + std::to_string(took) + " s");
    d << "timeout in " << took << " s; ";
  }

  // A looping tool that also leaves a background child behind.
  {
    const auto harness = scratch / "harness.sh";
    const auto pid_file = scratch / "child.pid";
    std::ofstream(harness) << "sleep 120 &\necho $! > \"" << pid_file.string() << "\"\nwhile :; do :; done\n";
    RendererConfig rc;
    rc.python = "/bin/sh";
    rc.harness = harness;
    AdapterRenderer r(rc);
    SandboxPolicy p;
    p.working_dir = scratch / "loop";
    p.wall_timeout_seconds = 2.0;
    const auto t0 = Clock::now();
    try {
      r.render(CodeArtifact{"x", Tool::kMatplotlib, "python", false}, p, {});
      o.fail("looping harness rendered");
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kTimeout) o.fail(std::string("loop: ") + e.what());
    }
    const double took = seconds_since(t0);
    if (took >= 3.0) o.fail("looping harness returned after " + std::to_string(took) + " s");
    const pid_t child = std::atoi(read_file(pid_file).c_str());
    if (child <= 0) o.fail("background child never started");
    else if (!process_gone(child)) o.fail("background child " + std::to_string(child) + " survived");
    d << "no survivors; ";
  }

  // Ten-job batch with two injected render failures.
  {
    auto registry = load_registry(kData / "registry.jsonl");
    auto personas = load_personas(kData / "personas_fixture.txt");
    GatewayOptions go;
    go.base_backoff = std::chrono::milliseconds(1);
    Gateway gateway(std::make_shared<ResponseCache>(), go);
    gateway.register_provider(std::make_shared<FixtureProvider>(kData / "mock", "mock"));
    RendererConfig rc;
    rc.fixture_binary = CODESYNTH_FIXTURE_RENDER_BIN;
    rc.fixture_for_all_tools = true;
    AdapterRenderer base(rc);
    const std::set<std::size_t> injected{1, 6};
    HangingRenderer faulty(base, injected);
    PipelineConfig config;
    config.workers = 2;
    PipelineDeps deps{registry, personas, gateway, faulty};
    try {
      const auto res = run_batch({"bar charts", "charts", 10, 99}, deps, config, scratch / "batch");
      std::set<std::size_t> failed;
      for (const auto& f : res.report.failures) failed.insert(f.job_index);
      if (res.report.failed != injected.size() || failed != injected) o.fail("report lists the wrong failures");
      const auto kinds = res.report.failures_by_kind;
      if (!kinds.count("render-failed") || kinds.at("render-failed") != injected.size())
        o.fail("render-failed count is off");
      if (res.shard.records.size() != 10 - injected.size()) o.fail("shard has the wrong record count");
      for (const auto& rec : res.shard.records)
        if (injected.count(rec.provenance.job_index)) o.fail("failed job produced a record");
      if (!validate_shard(scratch / "batch").empty()) o.fail("batch shard does not validate");
      d << "10-job batch: 2 injected, 2 reported render-failed, 8 records";
    } catch (const Error& e) {
      o.fail(std::string("batch: ") + e.what());
    }
  }
  if (o.ok) o.detail = d.str();
  return o;
}

// ---------------------------------------------------------------- formatting

Outcome formatting_fidelity() {
  Outcome o;
  const InstructionTriplet t{"What is the total?", "Add 2000, 3000 and 5000.", "$10000"};
  const auto cot = format_training_example(t, TrainingStyle::kCoT);
  const auto sa = format_training_example(t, TrainingStyle::kShortAnswer);
  if (cot.prompt != "What is the total? Provide reasoning steps and then give the short answer.") o.fail("CoT prompt");
  if (cot.target != "Add 2000, 3000 and 5000.\nAnswer: $10000") o.fail("CoT target");
  if (sa.prompt != "What is the total? Answer with as few words as possible.") o.fail("short-answer prompt");
  if (sa.target != "$10000") o.fail("short-answer target");
  if (o.ok) o.detail = "both suffixes reproduced character-for-character";
  return o;
}

}  // namespace

int main() {
  Scratch scratch;
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {"registry-fidelity", registry_fidelity},
      {"diversity-oracle", diversity_oracle},
      {"point-extraction", point_extraction},
      {"hermetic-end-to-end", [&] { return hermetic_end_to_end(scratch); }},
      {"parser-robustness", parser_robustness},
      {"sandbox", [&] { return sandbox(scratch); }},
      {"formatting-fidelity", formatting_fidelity},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.fail(std::string("uncaught: ") + e.what());
    }
    std::cout << (o.ok ? "PASS " : "FAIL ") << c.name << ": " << o.detail << std::endl;
    if (!o.ok) ++failed;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
