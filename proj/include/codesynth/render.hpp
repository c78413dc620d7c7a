// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <semaphore>
#include <string>
#include <vector>

#include "codesynth/image.hpp"
#include "codesynth/sandbox.hpp"
#include "codesynth/types.hpp"

namespace codesynth {

struct RenderedImage {
  std::filesystem::path path;
  int width = 0;
  int height = 0;
  std::string format = "png";

  /// Decodes the file. Throws Error(kUndecodableImage).
  Image pixels() const { return read_png(path); }
};

struct ImageConstraints {
  int min_side = 256;
  int max_side = 4096;
  double max_blank_fraction = 0.98;
  int blank_epsilon = 8;  // max per-channel difference from the modal color
};

struct ValidationResult {
  bool ok = true;
  std::string constraint;  // "min-side", "max-side" or "blank-fraction" on failure
  double measured = 0.0;

  explicit operator bool() const noexcept { return ok; }
};

/// Fraction of pixels within `epsilon` (per channel) of the most common color.
double blank_fraction(const Image& img, int epsilon);

ValidationResult validate_image(const Image& img, const ImageConstraints& constraints);
ValidationResult validate_image(const RenderedImage& img, const ImageConstraints& constraints);

/// Who is asking; lets wrappers (fault injection, logging) key on the job.
struct RenderContext {
  std::size_t job_index = 0;
  int attempt = 0;
};

class Renderer {
 public:
  virtual ~Renderer() = default;
  /// Throws Error with kToolMissing, kCompileError, kTimeout,
  /// kNoOutputImage or kUndecodableImage.
  virtual RenderedImage render(const CodeArtifact& artifact, const SandboxPolicy& policy,
                               const RenderContext& context) = 0;
};

struct RendererConfig {
  /// Binary overrides by program name (e.g. "dot" -> /opt/graphviz/bin/dot).
  /// Unset names fall back to CODESYNTH_BIN_<NAME> in the environment, then PATH.
  std::map<std::string, std::string> binaries;
  /// Python harness for matplotlib/plotly/rdkit; CODESYNTH_HARNESS if empty.
  std::filesystem::path harness;
  std::string python = "python3";
  /// Fixture tool binary; CODESYNTH_FIXTURE_RENDER or PATH if empty.
  std::filesystem::path fixture_binary;
  /// Route every tool to the fixture adapter (hermetic runs).
  bool fixture_for_all_tools = false;
  int html_viewport_width = 1024;
  int html_max_height = 4096;
  int pdf_dpi = 144;
  int max_concurrent_renders = 4;
};

/// One argv per step; tokens {src}, {out}, {wd} and {dpi} are substituted.
struct Adapter {
  std::string source_name;
  std::string output_name;
  std::vector<std::vector<std::string>> steps;
  bool trim_trailing_background = false;  // headless-browser full-page capture
  std::vector<std::string> extra_outputs; // accepted alternative output names
};

/// Adapter table for a tool under a config.
Adapter adapter_for(Tool tool, const RendererConfig& config);

/// Tools this renderer advertises: the eleven rendering tools plus the fixture.
std::vector<Tool> advertised_tools();

/// Subprocess adapters for every tool. Stateless apart from the concurrency
/// cap, so one instance is shared by all workers.
class AdapterRenderer : public Renderer {
 public:
  explicit AdapterRenderer(RendererConfig config = {});

  RenderedImage render(const CodeArtifact& artifact, const SandboxPolicy& policy,
                       const RenderContext& context) override;

  const RendererConfig& config() const noexcept { return config_; }

 private:
  std::string resolve_program(const std::string& name) const;

  RendererConfig config_;
  std::unique_ptr<std::counting_semaphore<1024>> slots_;
};

}  // namespace codesynth
