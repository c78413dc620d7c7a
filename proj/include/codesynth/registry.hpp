// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace codesynth {

enum class Category {
  kCharts,
  kDocuments,
  kTables,
  kDiagrams,
  kMath,
  kVectorGraphics,
  kSheetMusic,
  kCircuits,
  kChemicalStructures,
  kPointing,
};

/// Rendering tools. kFixture is the hermetic test tool and never appears in a
/// shipped pipeline.
enum class Tool {
  kMatplotlib,
  kPlotly,
  kVegaLite,
  kLatex,
  kHtml,
  kMermaid,
  kGraphviz,
  kSvg,
  kAsymptote,
  kLilyPond,
  kRdkit,
  kFixture,
};

enum class Stage { kTopic, kData, kCode, kInstruction, kPointEdit };

std::string_view to_string(Category c) noexcept;
std::string_view to_string(Tool t) noexcept;
std::string_view to_string(Stage s) noexcept;
std::optional<Category> parse_category(std::string_view s) noexcept;
std::optional<Tool> parse_tool(std::string_view s) noexcept;
std::optional<Stage> parse_stage(std::string_view s) noexcept;

/// Fence tag the code prompt asks the model to use for a tool.
std::string_view fence_tag(Tool t) noexcept;

/// The eleven rendering tools used by shipped pipelines.
const std::vector<Tool>& rendering_tools();

/// Every (category, tool) pair a registry may contain: the twenty QA pipelines
/// plus the HTML pointing pipeline.
const std::vector<std::pair<Category, Tool>>& allowed_pipeline_pairs();

struct GenerationQuery {
  std::string text;
  std::string category = "auto";  // category tag or "auto"
  int count = 1;
  std::uint64_t seed = 0;

  /// Throws Error(kInvalidArgument) when count < 1 or text is blank.
  void validate() const;
};

struct PromptSet {
  std::filesystem::path topic;
  std::filesystem::path data;
  std::filesystem::path code;
  std::filesystem::path instruction;  // point-edit template for pointing specs
};

struct PipelineSpec {
  std::string id;
  Category category;
  Tool tool;
  PromptSet prompts;
  double weight = 1.0;

  bool is_pointing() const noexcept { return category == Category::kPointing; }
};

class PipelineRegistry {
 public:
  /// Validates ids, pairs and cardinalities. Throws Error(kConfigInvalid).
  explicit PipelineRegistry(std::vector<PipelineSpec> specs);

  const std::vector<PipelineSpec>& specs() const noexcept { return specs_; }
  const PipelineSpec& at(std::string_view id) const;
  const PipelineSpec* find(std::string_view id) const noexcept;
  /// Spec ids for a category, sorted.
  const std::vector<std::string>& ids_for(Category c) const;
  bool has_category(Category c) const noexcept;

  std::size_t qa_spec_count() const noexcept;
  std::size_t qa_category_count() const noexcept;
  std::size_t tool_count() const noexcept;
  std::size_t pointing_spec_count() const noexcept;

 private:
  std::vector<PipelineSpec> specs_;  // sorted by id
  std::map<Category, std::vector<std::string>> category_index_;
};

/// Loads a JSON-lines registry: one object per line with keys
/// id, category, tool, weight, templates{topic,data,code,instruction|point_edit}.
/// Template paths are resolved against the registry file's directory.
PipelineRegistry load_registry(const std::filesystem::path& path);

/// Keyword table lookup for category "auto". Falls back to documents.
Category resolve_category(std::string_view query_text);

struct Allocation {
  const PipelineSpec* spec;
  int count;
};

/// Splits query.count across the matching specs in id order, proportional to
/// weight; the remainder goes one each to the earliest ids with weight > 0.
std::vector<Allocation> select_pipelines(const GenerationQuery& query, const PipelineRegistry& registry);

}  // namespace codesynth
