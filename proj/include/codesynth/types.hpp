// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "codesynth/registry.hpp"

namespace codesynth {

/// Generated source plus the tool that renders it.
struct CodeArtifact {
  std::string source;
  Tool tool = Tool::kFixture;
  std::string lang_tag;       // fence tag as received
  bool tag_mismatch = false;  // accepted as the only block despite a different tag
};

/// (question, explanation, short answer) row.
struct InstructionTriplet {
  std::string question;
  std::string explanation;
  std::string answer;

  friend bool operator==(const InstructionTriplet&, const InstructionTriplet&) = default;
};

/// Stage-2 materials. `payload` keeps the model's key order.
struct DataContent {
  nlohmann::ordered_json payload;
  std::string raw;
};

}  // namespace codesynth
