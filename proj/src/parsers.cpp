// SPDX-License-Identifier: Apache-2.0
#include "codesynth/parsers.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace codesynth {
namespace {

constexpr std::string_view kSpace = " \t\r\n\v\f";
constexpr int kMaxJsonDepth = 256;
constexpr int kMaxJsonCandidates = 64;

std::string_view trim(std::string_view s) noexcept {
  const auto b = s.find_first_not_of(kSpace);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(kSpace);
  return s.substr(b, e - b + 1);
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Splits into lines without their terminators; records each line's offset.
struct Line {
  std::string_view text;
  std::size_t begin;
};

std::vector<Line> split_lines(std::string_view text) {
  std::vector<Line> lines;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    lines.push_back({text.substr(pos, nl - pos), pos});
    pos = nl + 1;
  }
  return lines;
}

// Returns the length of the balanced object starting at text[start] == '{',
// or 0 when the braces never balance (or nest too deeply).
std::size_t balanced_object_length(std::string_view text, std::size_t start) {
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = start; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{' || c == '[') {
      if (++depth > kMaxJsonDepth) return 0;
    } else if (c == '}' || c == ']') {
      if (--depth == 0) return c == '}' ? i - start + 1 : 0;
      if (depth < 0) return 0;
    }
  }
  return 0;
}

bool tags_match(std::string_view got, std::string_view expected) {
  static constexpr std::array<std::array<std::string_view, 4>, 9> kAliases{{
      {"python", "py", "python3", ""},
      {"latex", "tex", "", ""},
      {"html", "htm", "", ""},
      {"dot", "graphviz", "gv", ""},
      {"json", "vega-lite", "vegalite", "vega"},
      {"asy", "asymptote", "", ""},
      {"lilypond", "ly", "", ""},
      {"svg", "xml", "", ""},
      {"mermaid", "mmd", "", ""},
  }};
  const std::string g = lower(got);
  const std::string e = lower(expected);
  if (g == e) return true;
  for (const auto& group : kAliases) {
    const bool has_g = std::find(group.begin(), group.end(), g) != group.end();
    const bool has_e = std::find(group.begin(), group.end(), e) != group.end();
    if (has_g && has_e && !g.empty()) return true;
  }
  return false;
}

}  // namespace

CountMismatch::CountMismatch(std::vector<std::string> parsed, std::size_t expected)
    : Error(ErrorCode::kCountMismatch,
            "parsed=" + std::to_string(parsed.size()) + ", expected=" + std::to_string(expected)),
      parsed_(std::move(parsed)),
      expected_(expected) {}

std::vector<std::string> parse_topics(std::string_view text, std::size_t expected) {
  if (expected < 1) throw Error(ErrorCode::kInvalidArgument, "expected topic count must be >= 1");
  std::vector<std::string> topics;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t bar = text.find('|', pos);
    if (bar == std::string_view::npos) bar = text.size();
    if (auto piece = trim(text.substr(pos, bar - pos)); !piece.empty()) topics.emplace_back(piece);
    pos = bar + 1;
  }
  if (topics.empty()) throw Error(ErrorCode::kEmptyOutput, "no topics in response");
  if (topics.size() != expected) throw CountMismatch(std::move(topics), expected);
  return topics;
}

DataContent parse_json_payload(std::string_view text) {
  std::size_t start = text.find('{');
  if (start == std::string_view::npos) throw Error(ErrorCode::kNoObjectFound, "response contains no '{'");
  std::string last_error = "unbalanced braces";
  for (int attempt = 0; start != std::string_view::npos && attempt < kMaxJsonCandidates; ++attempt) {
    const std::size_t len = balanced_object_length(text, start);
    if (len == 0) {
      start = text.find('{', start + 1);
      continue;
    }
    const auto candidate = text.substr(start, len);
    auto parsed = nlohmann::ordered_json::parse(candidate.begin(), candidate.end(), nullptr, false);
    if (!parsed.is_discarded() && parsed.is_object()) {
      return DataContent{std::move(parsed), std::string(text)};
    }
    last_error = "candidate at offset " + std::to_string(start) + " is not valid JSON";
    start = text.find('{', start + len);
  }
  throw Error(ErrorCode::kMalformedPayload, last_error);
}

std::vector<CodeBlock> find_code_blocks(std::string_view text) {
  std::vector<CodeBlock> blocks;
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string_view line = lines[i].text;
    const auto indent = line.find_first_not_of(' ');
    if (indent == std::string_view::npos || indent > 3 || line.substr(indent, 3) != "```") continue;
    std::string_view info = trim(line.substr(indent + 3));
    if (info.find('`') != std::string_view::npos) continue;
    const auto space = info.find_first_of(kSpace);
    const std::string tag(info.substr(0, space));

    std::size_t close = i + 1;
    for (; close < lines.size(); ++close) {
      if (trim(lines[close].text) == "```") break;
    }
    if (close >= lines.size()) break;  // unclosed fence: not a block

    const std::size_t begin = i + 1 < lines.size() ? lines[i + 1].begin : text.size();
    const std::size_t end = lines[close].begin;
    std::string_view body = begin < end ? text.substr(begin, end - 1 - begin) : std::string_view{};
    if (!body.empty() && body.back() == '\r') body.remove_suffix(1);
    if (!trim(body).empty()) blocks.push_back(CodeBlock{std::string(body), tag, false});
    i = close;
  }
  return blocks;
}

CodeBlock extract_code_block(std::string_view text, std::string_view expected_tag) {
  auto blocks = find_code_blocks(text);
  for (auto& b : blocks) {
    if (tags_match(b.tag, expected_tag)) return std::move(b);
  }
  if (blocks.empty()) throw Error(ErrorCode::kNoCodeBlock, "response contains no fenced code block");
  if (blocks.size() == 1) {
    blocks.front().tag_mismatch = true;
    return std::move(blocks.front());
  }
  throw Error(ErrorCode::kMultipleAmbiguousBlocks,
              std::to_string(blocks.size()) + " fenced blocks, none tagged '" + std::string(expected_tag) + "'");
}

TripletParse parse_qa_triplets(std::string_view text) {
  TripletParse out;
  std::vector<std::string_view> record;
  auto flush = [&] {
    if (record.empty()) return;
    // Lines of one record are rejoined before splitting on '|'.
    std::string joined;
    for (std::size_t i = 0; i < record.size(); ++i) {
      if (i) joined += '\n';
      joined.append(record[i]);
    }
    record.clear();
    std::vector<std::string_view> fields;
    std::string_view rest = joined;
    while (true) {
      const auto bar = rest.find('|');
      fields.push_back(trim(rest.substr(0, bar)));
      if (bar == std::string_view::npos) break;
      rest = rest.substr(bar + 1);
    }
    const bool ok = fields.size() == 3 &&
                    std::none_of(fields.begin(), fields.end(), [](auto f) { return f.empty(); });
    if (ok) {
      out.triplets.push_back({std::string(fields[0]), std::string(fields[1]), std::string(fields[2])});
    } else {
      ++out.dropped;
    }
  };
  for (const auto& line : split_lines(text)) {
    if (trim(line.text).empty()) {
      flush();
    } else {
      record.push_back(line.text);
    }
  }
  flush();
  if (out.triplets.empty()) {
    throw Error(ErrorCode::kZeroValidTriplets, std::to_string(out.dropped) + " malformed records, none valid");
  }
  return out;
}

std::string format_qa_triplets(const std::vector<InstructionTriplet>& triplets) {
  std::string out;
  for (std::size_t i = 0; i < triplets.size(); ++i) {
    if (i) out += "\n\n";
    out += triplets[i].question + " | " + triplets[i].explanation + " | " + triplets[i].answer;
  }
  return out;
}

}  // namespace codesynth
