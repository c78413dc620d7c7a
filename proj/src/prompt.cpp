// SPDX-License-Identifier: Apache-2.0
#include "codesynth/prompt.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "codesynth/error.hpp"
#include "codesynth/hashing.hpp"

namespace codesynth {
namespace {

bool is_token_char(char c) noexcept { return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_'; }

bool is_placeholder(std::string_view tok) {
  const auto& allowed = allowed_placeholders();
  return std::find(allowed.begin(), allowed.end(), tok) != allowed.end();
}

// Calls fn(token, begin) for each whole token; fn's return is ignored.
template <typename Fn>
void for_each_token(std::string_view text, Fn&& fn) {
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_token_char(text[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && is_token_char(text[j])) ++j;
    fn(text.substr(i, j - i), i);
    i = j;
  }
}

}  // namespace

const std::vector<std::string>& allowed_placeholders() {
  static const std::vector<std::string> names{"PERSONA", "TOPIC",       "FIGURE_TYPE", "DATA",
                                              "CODE",    "NUM_TOPICS",  "MARKER_COLOR"};
  return names;
}

PromptTemplate::PromptTemplate(Stage stage, std::string body) : stage_(stage), body_(std::move(body)) {
  if (body_.empty()) throw Error(ErrorCode::kInvalidArgument, "prompt template body is empty");
  id_ = sha256_hex(body_);
  for_each_token(body_, [&](std::string_view tok, std::size_t) {
    if (is_placeholder(tok) &&
        std::find(placeholders_.begin(), placeholders_.end(), tok) == placeholders_.end()) {
      placeholders_.emplace_back(tok);
    }
  });
}

PromptTemplate load_template(const std::filesystem::path& path, Stage stage) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open template " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return PromptTemplate(stage, ss.str());
}

std::string render_template(const PromptTemplate& tpl, const Bindings& bindings) {
  for (const auto& name : tpl.placeholders()) {
    if (bindings.find(name) == bindings.end()) {
      throw Error(ErrorCode::kMissingBinding, name);
    }
  }
  const std::string_view body = tpl.body();
  std::string out;
  out.reserve(body.size());
  std::size_t copied = 0;
  for_each_token(body, [&](std::string_view tok, std::size_t at) {
    if (!is_placeholder(tok)) return;
    out.append(body.substr(copied, at - copied));
    out.append(bindings.find(tok)->second);
    copied = at + tok.size();
  });
  out.append(body.substr(copied));
  return out;
}

}  // namespace codesynth
