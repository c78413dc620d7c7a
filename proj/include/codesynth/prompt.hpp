// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "codesynth/registry.hpp"

namespace codesynth {

/// Placeholders are bare upper-case words from a fixed set, matched only as
/// whole tokens ([A-Za-z0-9_] runs), so "DATA" in "<data>" or "PERSONAS" is
/// never substituted.
const std::vector<std::string>& allowed_placeholders();

class PromptTemplate {
 public:
  /// Throws Error(kInvalidArgument) on an empty body.
  PromptTemplate(Stage stage, std::string body);

  Stage stage() const noexcept { return stage_; }
  const std::string& body() const noexcept { return body_; }
  /// SHA-256 of the body.
  const std::string& id() const noexcept { return id_; }
  /// Distinct placeholders present, in first-occurrence order.
  const std::vector<std::string>& placeholders() const noexcept { return placeholders_; }

 private:
  Stage stage_;
  std::string body_;
  std::string id_;
  std::vector<std::string> placeholders_;
};

PromptTemplate load_template(const std::filesystem::path& path, Stage stage);

using Bindings = std::map<std::string, std::string, std::less<>>;

/// Single-pass substitution: bound values are inserted verbatim and never
/// rescanned. Throws Error(kMissingBinding) naming the first unbound
/// placeholder.
std::string render_template(const PromptTemplate& tpl, const Bindings& bindings);

}  // namespace codesynth
