// SPDX-License-Identifier: Apache-2.0
#include "codesynth/registry.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "codesynth/error.hpp"

namespace codesynth {

namespace {

constexpr std::array<std::pair<Category, std::string_view>, 10> kCategoryNames{{
    {Category::kCharts, "charts"},
    {Category::kDocuments, "documents"},
    {Category::kTables, "tables"},
    {Category::kDiagrams, "diagrams"},
    {Category::kMath, "math"},
    {Category::kVectorGraphics, "vector-graphics"},
    {Category::kSheetMusic, "sheet-music"},
    {Category::kCircuits, "circuits"},
    {Category::kChemicalStructures, "chemical-structures"},
    {Category::kPointing, "pointing"},
}};

constexpr std::array<std::pair<Tool, std::string_view>, 12> kToolNames{{
    {Tool::kMatplotlib, "matplotlib"},
    {Tool::kPlotly, "plotly"},
    {Tool::kVegaLite, "vegalite"},
    {Tool::kLatex, "latex"},
    {Tool::kHtml, "html"},
    {Tool::kMermaid, "mermaid"},
    {Tool::kGraphviz, "graphviz"},
    {Tool::kSvg, "svg"},
    {Tool::kAsymptote, "asymptote"},
    {Tool::kLilyPond, "lilypond"},
    {Tool::kRdkit, "rdkit"},
    {Tool::kFixture, "fixture"},
}};

constexpr std::array<std::pair<Stage, std::string_view>, 5> kStageNames{{
    {Stage::kTopic, "topic"},
    {Stage::kData, "data"},
    {Stage::kCode, "code"},
    {Stage::kInstruction, "instruction"},
    {Stage::kPointEdit, "point-edit"},
}};

template <typename E, std::size_t N>
std::string_view name_of(const std::array<std::pair<E, std::string_view>, N>& table, E e) noexcept {
  for (const auto& [k, v] : table)
    if (k == e) return v;
  return "?";
}

template <typename E, std::size_t N>
std::optional<E> value_of(const std::array<std::pair<E, std::string_view>, N>& table, std::string_view s) noexcept {
  for (const auto& [k, v] : table)
    if (v == s) return k;
  return std::nullopt;
}

// Ordered by priority: the first entry found in the query wins, so specific
// phrases precede the single words they contain.
constexpr std::pair<std::string_view, Category> kKeywords[] = {
    // multi-word phrases
    {"book cover", Category::kDocuments},
    {"restaurant menu", Category::kDocuments},
    {"financial report", Category::kDocuments},
    {"policy document", Category::kDocuments},
    {"transaction document", Category::kDocuments},
    {"meeting minutes", Category::kDocuments},
    {"infographic", Category::kDocuments},
    {"infographics", Category::kDocuments},
    {"solid geometry", Category::kMath},
    {"analytic geometry", Category::kMath},
    {"linear equations", Category::kMath},
    {"linear algebra", Category::kMath},
    {"number theory", Category::kMath},
    {"complex numbers", Category::kMath},
    {"plane geometry", Category::kVectorGraphics},
    {"graph theory", Category::kVectorGraphics},
    {"polynomial graphs", Category::kVectorGraphics},
    {"intelligence test", Category::kVectorGraphics},
    {"coordinate system", Category::kVectorGraphics},
    {"polar coordinates", Category::kVectorGraphics},
    {"perimeter and area", Category::kVectorGraphics},
    {"vector graphics", Category::kVectorGraphics},
    {"sheet music", Category::kSheetMusic},
    {"music sheet", Category::kSheetMusic},
    {"rhythm and blues", Category::kSheetMusic},
    {"hip hop", Category::kSheetMusic},
    {"mobile device", Category::kCircuits},
    {"flow chart", Category::kDiagrams},
    {"gantt", Category::kDiagrams},
    {"mind map", Category::kDiagrams},
    {"concept map", Category::kDiagrams},
    {"decision tree", Category::kDiagrams},
    {"family tree", Category::kDiagrams},
    {"state machine", Category::kDiagrams},
    {"quadrant chart", Category::kDiagrams},
    {"directed graph", Category::kDiagrams},
    {"undirected graph", Category::kDiagrams},
    {"time series", Category::kCharts},
    {"flammable liquids", Category::kChemicalStructures},
    {"toxic chemicals", Category::kChemicalStructures},
    {"hazardous chemicals", Category::kChemicalStructures},
    // tables
    {"table", Category::kTables},
    {"tables", Category::kTables},
    {"timetable", Category::kTables},
    // diagrams
    {"diagram", Category::kDiagrams},
    {"diagrams", Category::kDiagrams},
    {"flowchart", Category::kDiagrams},
    {"timeline", Category::kDiagrams},
    {"sankey", Category::kDiagrams},
    {"graphviz", Category::kDiagrams},
    {"mermaid", Category::kDiagrams},
    // charts
    {"chart", Category::kCharts},
    {"charts", Category::kCharts},
    {"plot", Category::kCharts},
    {"plots", Category::kCharts},
    {"distplots", Category::kCharts},
    {"histogram", Category::kCharts},
    {"heatmap", Category::kCharts},
    {"scatter", Category::kCharts},
    {"bubble", Category::kCharts},
    {"bar", Category::kCharts},
    {"pie", Category::kCharts},
    {"line", Category::kCharts},
    {"area", Category::kCharts},
    {"contour", Category::kCharts},
    // circuits
    {"circuit", Category::kCircuits},
    {"circuits", Category::kCircuits},
    {"electrical", Category::kCircuits},
    {"appliance", Category::kCircuits},
    {"appliances", Category::kCircuits},
    {"parallel", Category::kCircuits},
    {"hybrid", Category::kCircuits},
    {"resistor", Category::kCircuits},
    // chemical structures
    {"chemical", Category::kChemicalStructures},
    {"chemicals", Category::kChemicalStructures},
    {"molecule", Category::kChemicalStructures},
    {"molecules", Category::kChemicalStructures},
    {"compound", Category::kChemicalStructures},
    {"compounds", Category::kChemicalStructures},
    {"drug", Category::kChemicalStructures},
    {"drugs", Category::kChemicalStructures},
    {"organic", Category::kChemicalStructures},
    {"inorganic", Category::kChemicalStructures},
    {"protein", Category::kChemicalStructures},
    {"acids", Category::kChemicalStructures},
    {"bases", Category::kChemicalStructures},
    {"gases", Category::kChemicalStructures},
    {"liquids", Category::kChemicalStructures},
    {"solids", Category::kChemicalStructures},
    {"oxidizers", Category::kChemicalStructures},
    {"polymers", Category::kChemicalStructures},
    {"metals", Category::kChemicalStructures},
    {"alloys", Category::kChemicalStructures},
    {"electrolytes", Category::kChemicalStructures},
    // math
    {"math", Category::kMath},
    {"algebra", Category::kMath},
    {"precalculus", Category::kMath},
    {"prealgebra", Category::kMath},
    {"calculus", Category::kMath},
    {"geometry", Category::kMath},
    {"probability", Category::kMath},
    {"counting", Category::kMath},
    {"statistics", Category::kMath},
    {"functions", Category::kMath},
    {"logarithms", Category::kMath},
    {"inequalities", Category::kMath},
    {"exponents", Category::kMath},
    {"series", Category::kMath},
    {"arithmetic", Category::kMath},
    {"equation", Category::kMath},
    {"equations", Category::kMath},
    // vector graphics
    {"svg", Category::kVectorGraphics},
    {"trigonometry", Category::kVectorGraphics},
    {"topology", Category::kVectorGraphics},
    {"vectors", Category::kVectorGraphics},
    {"angles", Category::kVectorGraphics},
    // sheet music
    {"music", Category::kSheetMusic},
    {"song", Category::kSheetMusic},
    {"classical", Category::kSheetMusic},
    {"pop", Category::kSheetMusic},
    {"rock", Category::kSheetMusic},
    {"jazz", Category::kSheetMusic},
    {"blues", Category::kSheetMusic},
    {"rap", Category::kSheetMusic},
    {"electronic", Category::kSheetMusic},
    {"country", Category::kSheetMusic},
    {"folk", Category::kSheetMusic},
    {"soul", Category::kSheetMusic},
    {"reggae", Category::kSheetMusic},
    {"metal", Category::kSheetMusic},
    {"punk", Category::kSheetMusic},
    {"theme", Category::kSheetMusic},
    {"dance", Category::kSheetMusic},
};

bool is_word_char(char c) noexcept { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

bool contains_phrase(std::string_view haystack, std::string_view phrase) noexcept {
  for (std::size_t pos = haystack.find(phrase); pos != std::string_view::npos;
       pos = haystack.find(phrase, pos + 1)) {
    const bool left = pos == 0 || !is_word_char(haystack[pos - 1]);
    const std::size_t end = pos + phrase.size();
    const bool right = end == haystack.size() || !is_word_char(haystack[end]);
    if (left && right) return true;
  }
  return false;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

std::string_view to_string(Category c) noexcept { return name_of(kCategoryNames, c); }
std::string_view to_string(Tool t) noexcept { return name_of(kToolNames, t); }
std::string_view to_string(Stage s) noexcept { return name_of(kStageNames, s); }
std::optional<Category> parse_category(std::string_view s) noexcept { return value_of(kCategoryNames, s); }
std::optional<Tool> parse_tool(std::string_view s) noexcept { return value_of(kToolNames, s); }
std::optional<Stage> parse_stage(std::string_view s) noexcept { return value_of(kStageNames, s); }

std::string_view fence_tag(Tool t) noexcept {
  switch (t) {
    case Tool::kMatplotlib:
    case Tool::kPlotly:
    case Tool::kRdkit: return "python";
    case Tool::kVegaLite: return "json";
    case Tool::kLatex: return "latex";
    case Tool::kHtml: return "html";
    case Tool::kMermaid: return "mermaid";
    case Tool::kGraphviz: return "dot";
    case Tool::kSvg: return "svg";
    case Tool::kAsymptote: return "asy";
    case Tool::kLilyPond: return "lilypond";
    case Tool::kFixture: return "fixture";
  }
  return "";
}

const std::vector<Tool>& rendering_tools() {
  static const std::vector<Tool> tools{Tool::kMatplotlib, Tool::kPlotly,   Tool::kVegaLite, Tool::kLatex,
                                      Tool::kHtml,       Tool::kMermaid,  Tool::kGraphviz, Tool::kSvg,
                                      Tool::kAsymptote,  Tool::kLilyPond, Tool::kRdkit};
  return tools;
}

const std::vector<std::pair<Category, Tool>>& allowed_pipeline_pairs() {
  using C = Category;
  using T = Tool;
  static const std::vector<std::pair<Category, Tool>> pairs{
      {C::kCharts, T::kMatplotlib},         {C::kCharts, T::kVegaLite},   {C::kCharts, T::kPlotly},
      {C::kCharts, T::kLatex},              {C::kCharts, T::kHtml},       {C::kDocuments, T::kLatex},
      {C::kDocuments, T::kHtml},            {C::kTables, T::kLatex},      {C::kTables, T::kMatplotlib},
      {C::kTables, T::kPlotly},             {C::kTables, T::kHtml},       {C::kDiagrams, T::kGraphviz},
      {C::kDiagrams, T::kLatex},            {C::kDiagrams, T::kMermaid},  {C::kMath, T::kLatex},
      {C::kVectorGraphics, T::kSvg},        {C::kVectorGraphics, T::kAsymptote},
      {C::kSheetMusic, T::kLilyPond},       {C::kCircuits, T::kLatex},    {C::kChemicalStructures, T::kRdkit},
      {C::kPointing, T::kHtml},
  };
  return pairs;
}

void GenerationQuery::validate() const {
  if (count < 1) throw Error(ErrorCode::kInvalidArgument, "query count must be >= 1");
  if (std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c) != 0; })) {
    throw Error(ErrorCode::kInvalidArgument, "query text is blank");
  }
  if (category != "auto" && !parse_category(category)) {
    throw Error(ErrorCode::kUnknownCategory, "unknown category '" + category + "'");
  }
}

PipelineRegistry::PipelineRegistry(std::vector<PipelineSpec> specs) : specs_(std::move(specs)) {
  std::sort(specs_.begin(), specs_.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  const auto& allowed = allowed_pipeline_pairs();
  std::set<std::pair<Category, Tool>> seen_pairs;
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    const auto& s = specs_[i];
    if (s.id.empty()) throw Error(ErrorCode::kConfigInvalid, "pipeline with empty id");
    if (i > 0 && specs_[i - 1].id == s.id) throw Error(ErrorCode::kConfigInvalid, "duplicate pipeline id " + s.id);
    if (!(s.weight >= 0.0) || !std::isfinite(s.weight)) {
      throw Error(ErrorCode::kConfigInvalid, "pipeline " + s.id + " has invalid weight");
    }
    const std::pair<Category, Tool> pair{s.category, s.tool};
    if (std::find(allowed.begin(), allowed.end(), pair) == allowed.end()) {
      throw Error(ErrorCode::kConfigInvalid, "pipeline " + s.id + " uses unsupported pair (" +
                                                 std::string(to_string(s.category)) + ", " +
                                                 std::string(to_string(s.tool)) + ")");
    }
    if (!seen_pairs.insert(pair).second) {
      throw Error(ErrorCode::kConfigInvalid, "pipeline " + s.id + " duplicates an existing (category, tool) pair");
    }
    category_index_[s.category].push_back(s.id);
  }
  if (qa_spec_count() != 20 || qa_category_count() != 9 || tool_count() != 11 || pointing_spec_count() != 1) {
    throw Error(ErrorCode::kConfigInvalid,
                "registry must hold 20 QA pipelines over 9 categories and 11 tools plus 1 pointing pipeline; got " +
                    std::to_string(qa_spec_count()) + " QA, " + std::to_string(qa_category_count()) +
                    " categories, " + std::to_string(tool_count()) + " tools, " +
                    std::to_string(pointing_spec_count()) + " pointing");
  }
}

const PipelineSpec* PipelineRegistry::find(std::string_view id) const noexcept {
  auto it = std::lower_bound(specs_.begin(), specs_.end(), id, [](const auto& s, std::string_view v) { return s.id < v; });
  return it != specs_.end() && it->id == id ? &*it : nullptr;
}

const PipelineSpec& PipelineRegistry::at(std::string_view id) const {
  if (const auto* s = find(id)) return *s;
  throw Error(ErrorCode::kInvalidArgument, "no pipeline with id " + std::string(id));
}

const std::vector<std::string>& PipelineRegistry::ids_for(Category c) const {
  static const std::vector<std::string> kEmpty;
  auto it = category_index_.find(c);
  return it == category_index_.end() ? kEmpty : it->second;
}

bool PipelineRegistry::has_category(Category c) const noexcept { return category_index_.count(c) != 0; }

std::size_t PipelineRegistry::qa_spec_count() const noexcept {
  return static_cast<std::size_t>(std::count_if(specs_.begin(), specs_.end(), [](const auto& s) { return !s.is_pointing(); }));
}

std::size_t PipelineRegistry::qa_category_count() const noexcept {
  return category_index_.size() - (has_category(Category::kPointing) ? 1 : 0);
}

std::size_t PipelineRegistry::tool_count() const noexcept {
  std::set<Tool> tools;
  for (const auto& s : specs_) tools.insert(s.tool);
  return tools.size();
}

std::size_t PipelineRegistry::pointing_spec_count() const noexcept { return ids_for(Category::kPointing).size(); }

PipelineRegistry load_registry(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open registry " + path.string());
  const auto base = path.parent_path();
  std::vector<PipelineSpec> specs;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    try {
      auto j = nlohmann::json::parse(line);
      PipelineSpec spec;
      spec.id = j.at("id").get<std::string>();
      auto cat = parse_category(j.at("category").get<std::string>());
      auto tool = parse_tool(j.at("tool").get<std::string>());
      if (!cat) throw Error(ErrorCode::kConfigInvalid, where + ": unknown category");
      if (!tool || *tool == Tool::kFixture) throw Error(ErrorCode::kConfigInvalid, where + ": unknown tool");
      spec.category = *cat;
      spec.tool = *tool;
      spec.weight = j.value("weight", 1.0);
      const auto& t = j.at("templates");
      spec.prompts.topic = base / t.at("topic").get<std::string>();
      spec.prompts.data = base / t.at("data").get<std::string>();
      spec.prompts.code = base / t.at("code").get<std::string>();
      spec.prompts.instruction =
          base / (spec.is_pointing() ? t.at("point_edit") : t.at("instruction")).get<std::string>();
      specs.push_back(std::move(spec));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kConfigInvalid, where + ": " + e.what());
    }
  }
  return PipelineRegistry(std::move(specs));
}

Category resolve_category(std::string_view query_text) {
  const std::string text = lower(query_text);
  for (const auto& [keyword, category] : kKeywords) {
    if (contains_phrase(text, keyword)) return category;
  }
  return Category::kDocuments;
}

std::vector<Allocation> select_pipelines(const GenerationQuery& query, const PipelineRegistry& registry) {
  query.validate();
  const Category category =
      query.category == "auto" ? resolve_category(query.text) : *parse_category(query.category);
  if (!registry.has_category(category)) {
    throw Error(ErrorCode::kUnknownCategory, "registry has no pipelines for " + std::string(to_string(category)));
  }
  std::vector<Allocation> out;
  double total_weight = 0.0;
  for (const auto& id : registry.ids_for(category)) {
    const auto& spec = registry.at(id);
    if (spec.weight > 0.0) {
      out.push_back({&spec, 0});
      total_weight += spec.weight;
    }
  }
  if (out.empty()) {
    throw Error(ErrorCode::kUnknownCategory, "all pipelines for " + std::string(to_string(category)) + " have zero weight");
  }
  int assigned = 0;
  for (auto& a : out) {
    a.count = static_cast<int>(std::floor(query.count * (a.spec->weight / total_weight)));
    assigned += a.count;
  }
  // Floating rounding can overshoot by one in degenerate weight ratios.
  for (std::size_t i = out.size(); assigned > query.count; i = (i == 0 ? out.size() : i) - 1) {
    if (i < out.size() && out[i].count > 0) {
      --out[i].count;
      --assigned;
    }
  }
  for (std::size_t i = 0; assigned < query.count; i = (i + 1) % out.size()) {
    ++out[i].count;
    ++assigned;
  }
  return out;
}

}  // namespace codesynth
