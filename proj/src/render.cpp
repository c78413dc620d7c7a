// SPDX-License-Identifier: Apache-2.0
#include "codesynth/render.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <unordered_map>

#include "codesynth/error.hpp"

namespace codesynth {
namespace {

constexpr const char* kCanonicalOutput = "render.png";
constexpr const char* kLogName = "render.log";
constexpr std::size_t kErrorTail = 4000;

std::string env_name_for(const std::string& program) {
  std::string out = "CODESYNTH_BIN_";
  for (char c : program) out.push_back(std::isalnum(static_cast<unsigned char>(c)) ? static_cast<char>(std::toupper(c)) : '_');
  return out;
}

std::string substitute(const std::string& token, const Adapter& a, const SandboxPolicy& p, const RendererConfig& c) {
  if (token == "{src}") return a.source_name;
  if (token == "{out}") return a.output_name;
  if (token == "{wd}") return p.working_dir.string();
  if (token == "{dpi}") return std::to_string(c.pdf_dpi);
  std::string out = token;
  for (auto [key, value] : {std::pair<std::string, std::string>{"{wd}", p.working_dir.string()},
                            {"{dpi}", std::to_string(c.pdf_dpi)}}) {
    for (auto pos = out.find(key); pos != std::string::npos; pos = out.find(key, pos + value.size())) {
      out.replace(pos, key.size(), value);
    }
  }
  return out;
}

std::string tail(const std::string& s) { return s.size() <= kErrorTail ? s : s.substr(s.size() - kErrorTail); }

// Removes everything in the working dir except the declared files.
void tidy_working_dir(const std::filesystem::path& wd, const std::vector<std::string>& keep) {
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(wd, ec)) {
    const auto name = entry.path().filename().string();
    if (std::find(keep.begin(), keep.end(), name) != keep.end()) continue;
    std::filesystem::remove_all(entry.path(), ec);
  }
}

// Crops rows at the bottom that match the bottom-left pixel exactly, keeping
// a small margin below the last content row.
bool trim_trailing_rows(Image& img) {
  if (img.height < 2) return false;
  const Rgb bg = img.rgb_at(0, img.height - 1);
  int last = img.height - 1;
  for (; last > 0; --last) {
    bool blank = true;
    for (int x = 0; x < img.width && blank; ++x) blank = img.rgb_at(x, last) == bg;
    if (!blank) break;
  }
  const int keep = std::min(img.height, last + 1 + 16);
  if (keep == img.height) return false;
  img.height = keep;
  img.rgba.resize(static_cast<std::size_t>(img.width) * keep * 4);
  return true;
}

}  // namespace

double blank_fraction(const Image& img, int epsilon) {
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
  if (n == 0) return 1.0;
  std::unordered_map<std::uint32_t, std::size_t> histogram;
  std::uint32_t mode = 0;
  std::size_t mode_count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto* p = &img.rgba[i * 4];
    const std::uint32_t key = (std::uint32_t(p[0]) << 16) | (std::uint32_t(p[1]) << 8) | p[2];
    const std::size_t c = ++histogram[key];
    // Ties resolve to the smaller color value so the mode is scan-order independent.
    if (c > mode_count || (c == mode_count && key < mode)) {
      mode = key;
      mode_count = c;
    }
  }
  const int mr = (mode >> 16) & 0xff, mg = (mode >> 8) & 0xff, mb = mode & 0xff;
  std::size_t near = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto* p = &img.rgba[i * 4];
    if (std::abs(p[0] - mr) <= epsilon && std::abs(p[1] - mg) <= epsilon && std::abs(p[2] - mb) <= epsilon) ++near;
  }
  return static_cast<double>(near) / static_cast<double>(n);
}

ValidationResult validate_image(const Image& img, const ImageConstraints& c) {
  if (c.min_side <= 0 || c.min_side > c.max_side) {
    throw Error(ErrorCode::kInvalidArgument, "image constraints need 0 < min_side <= max_side");
  }
  const int shorter = std::min(img.width, img.height);
  const int longer = std::max(img.width, img.height);
  if (shorter < c.min_side) return {false, "min-side", static_cast<double>(shorter)};
  if (longer > c.max_side) return {false, "max-side", static_cast<double>(longer)};
  const double blank = blank_fraction(img, c.blank_epsilon);
  if (blank > c.max_blank_fraction) return {false, "blank-fraction", blank};
  return {true, "", blank};
}

ValidationResult validate_image(const RenderedImage& img, const ImageConstraints& c) {
  return validate_image(img.pixels(), c);
}

std::vector<Tool> advertised_tools() {
  std::vector<Tool> tools = rendering_tools();
  tools.push_back(Tool::kFixture);
  return tools;
}

Adapter adapter_for(Tool tool, const RendererConfig& c) {
  const std::string harness = c.harness.empty() ? std::string() : c.harness.string();
  switch (tool) {
    case Tool::kLatex:
      return {"main.tex", "page.png",
              {{"pdflatex", "-interaction=nonstopmode", "-halt-on-error", "-no-shell-escape", "{src}"},
               {"pdftoppm", "-png", "-r", "{dpi}", "-f", "1", "-l", "1", "-singlefile", "main.pdf", "page"}},
              false, {}};
    case Tool::kHtml:
      return {"index.html", "screenshot.png",
              {{"chromium", "--headless", "--disable-gpu", "--no-sandbox", "--hide-scrollbars",
                "--screenshot={wd}/screenshot.png",
                "--window-size=" + std::to_string(c.html_viewport_width) + "," + std::to_string(c.html_max_height),
                "file://{wd}/index.html"}},
              true, {}};
    case Tool::kMermaid:
      return {"diagram.mmd", "diagram.png", {{"mmdc", "-i", "{src}", "-o", "{out}", "-b", "white"}}, false, {}};
    case Tool::kGraphviz:
      return {"graph.dot", "graph.png", {{"dot", "-Tpng", "-o", "{out}", "{src}"}}, false, {}};
    case Tool::kVegaLite:
      return {"chart.vl.json", "chart.png", {{"vl2png", "{src}", "{out}"}}, false, {}};
    case Tool::kSvg:
      return {"image.svg", "image.png", {{"rsvg-convert", "-o", "{out}", "{src}"}}, false, {}};
    case Tool::kAsymptote:
      return {"figure.asy", "figure.png", {{"asy", "-f", "png", "-render=4", "-o", "figure", "{src}"}}, false, {}};
    case Tool::kLilyPond:
      return {"score.ly", "score.png", {{"lilypond", "--png", "-dresolution={dpi}", "-o", "score", "{src}"}}, false,
              {"score-page1.png"}};
    case Tool::kMatplotlib:
    case Tool::kPlotly:
    case Tool::kRdkit:
      return {"script.py", "figure.png", {{c.python, harness, std::string(to_string(tool)), "{src}", "{out}"}}, false, {}};
    case Tool::kFixture:
      return {"scene.fix", "scene.png",
              {{c.fixture_binary.empty() ? std::string("codesynth-fixture-render") : c.fixture_binary.string(), "{src}",
                "{out}"}},
              false, {}};
  }
  throw Error(ErrorCode::kInvalidArgument, "no adapter for tool");
}

AdapterRenderer::AdapterRenderer(RendererConfig config)
    : config_(std::move(config)),
      slots_(std::make_unique<std::counting_semaphore<1024>>(std::clamp(config_.max_concurrent_renders, 1, 1024))) {
  if (config_.harness.empty()) {
    if (const char* h = std::getenv("CODESYNTH_HARNESS"); h && *h) config_.harness = h;
  }
  if (config_.fixture_binary.empty()) {
    if (const char* f = std::getenv("CODESYNTH_FIXTURE_RENDER"); f && *f) config_.fixture_binary = f;
  }
}

std::string AdapterRenderer::resolve_program(const std::string& name) const {
  std::vector<std::string> candidates;
  if (auto it = config_.binaries.find(name); it != config_.binaries.end()) candidates.push_back(it->second);
  if (const char* v = std::getenv(env_name_for(name).c_str()); v && *v) candidates.emplace_back(v);
  candidates.push_back(name);
  if (name == "chromium") {
    for (const char* alt : {"chromium-browser", "google-chrome", "google-chrome-stable", "headless_shell"})
      candidates.emplace_back(alt);
  }
  for (const auto& c : candidates) {
    if (auto found = find_executable(c)) return found->string();
  }
  throw Error(ErrorCode::kToolMissing, "'" + name + "' not found (set " + env_name_for(name) + " or PATH)");
}

RenderedImage AdapterRenderer::render(const CodeArtifact& artifact, const SandboxPolicy& policy,
                                      const RenderContext&) {
  policy.validate();
  if (artifact.source.empty()) throw Error(ErrorCode::kCompileError, "empty source");
  const Tool tool = config_.fixture_for_all_tools ? Tool::kFixture : artifact.tool;
  const Adapter adapter = adapter_for(tool, config_);

  // Resolve every program first so a missing tool fails before any work.
  std::vector<std::vector<std::string>> commands;
  for (const auto& step : adapter.steps) {
    std::vector<std::string> argv;
    for (const auto& tok : step) argv.push_back(substitute(tok, adapter, policy, config_));
    argv[0] = resolve_program(argv[0]);
    commands.push_back(std::move(argv));
  }
  if (tool == Tool::kMatplotlib || tool == Tool::kPlotly || tool == Tool::kRdkit) {
    if (config_.harness.empty() || !std::filesystem::is_regular_file(config_.harness)) {
      throw Error(ErrorCode::kToolMissing, "render harness not found (set CODESYNTH_HARNESS)");
    }
  }

  std::error_code ec;
  std::filesystem::create_directories(policy.working_dir, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + policy.working_dir.string() + ": " + ec.message());
  {
    std::ofstream src(policy.working_dir / adapter.source_name, std::ios::binary | std::ios::trunc);
    src.write(artifact.source.data(), static_cast<std::streamsize>(artifact.source.size()));
    if (!src) throw Error(ErrorCode::kIoError, "cannot write source into " + policy.working_dir.string());
  }
  const std::vector<std::string> keep{adapter.source_name, kCanonicalOutput, kLogName};
  std::string log;
  auto finish = [&] {
    std::ofstream(policy.working_dir / kLogName, std::ios::binary | std::ios::trunc) << log;
    tidy_working_dir(policy.working_dir, keep);
  };

  slots_->acquire();
  struct Release {
    std::counting_semaphore<1024>& s;
    ~Release() { s.release(); }
  } release{*slots_};

  const auto deadline = std::chrono::steady_clock::now() +
                        std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                            std::chrono::duration<double>(policy.wall_timeout_seconds));
  for (const auto& argv : commands) {
    ProcessResult r;
    try {
      r = run_sandboxed(argv, policy, deadline);
    } catch (...) {
      finish();
      throw;
    }
    log += r.output;
    if (r.timed_out) {
      finish();
      throw Error(ErrorCode::kTimeout, std::filesystem::path(argv[0]).filename().string() + " exceeded " +
                                           std::to_string(policy.wall_timeout_seconds) + "s");
    }
    if (r.signal != 0 || r.exit_code != 0) {
      finish();
      const std::string status = r.signal ? "signal " + std::to_string(r.signal) : "exit " + std::to_string(r.exit_code);
      throw Error(ErrorCode::kCompileError,
                  std::filesystem::path(argv[0]).filename().string() + " failed (" + status + "):\n" + tail(r.output));
    }
  }

  auto produced = policy.working_dir / adapter.output_name;
  for (const auto& alt : adapter.extra_outputs) {
    if (!std::filesystem::exists(produced)) produced = policy.working_dir / alt;
  }
  const auto final_path = policy.working_dir / kCanonicalOutput;
  if (!std::filesystem::is_regular_file(produced)) {
    finish();
    throw Error(ErrorCode::kNoOutputImage, "adapter exited cleanly but wrote no " + adapter.output_name);
  }
  std::filesystem::rename(produced, final_path, ec);
  Image img;
  try {
    img = read_png(final_path);
    if (adapter.trim_trailing_background && trim_trailing_rows(img)) write_png(final_path, img);
  } catch (const Error&) {
    finish();
    throw;
  }
  finish();
  return RenderedImage{final_path, img.width, img.height, "png"};
}

}  // namespace codesynth
