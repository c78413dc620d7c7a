// SPDX-License-Identifier: Apache-2.0
#pragma once

// Strict parsers for each stage's completion format. All of them are total:
// any input yields a value or a codesynth::Error, never a crash.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "codesynth/error.hpp"
#include "codesynth/types.hpp"

namespace codesynth {

/// Raised by parse_topics when the parsed count differs from the request.
/// Carries the parsed list so the caller can accept it or retry.
class CountMismatch : public Error {
 public:
  CountMismatch(std::vector<std::string> parsed, std::size_t expected);
  const std::vector<std::string>& parsed() const noexcept { return parsed_; }
  std::size_t expected() const noexcept { return expected_; }

 private:
  std::vector<std::string> parsed_;
  std::size_t expected_;
};

/// "topic1 | topic2 | ... | topicN": split on '|', trim, drop empty pieces.
std::vector<std::string> parse_topics(std::string_view text, std::size_t expected);

/// First balanced top-level JSON object in the text, tolerating prose or
/// fences around it. No repair is attempted.
DataContent parse_json_payload(std::string_view text);

struct CodeBlock {
  std::string source;
  std::string tag;
  bool tag_mismatch = false;
};

/// All fenced blocks (``` at line start, closed by a ``` line), in order.
std::vector<CodeBlock> find_code_blocks(std::string_view text);

/// First block whose tag matches `expected_tag` (case-insensitive, common
/// aliases accepted). A sole block with another tag is returned with
/// tag_mismatch set.
CodeBlock extract_code_block(std::string_view text, std::string_view expected_tag);

struct TripletParse {
  std::vector<InstructionTriplet> triplets;
  std::size_t dropped = 0;  // records without exactly three non-empty fields
};

/// Records separated by blank lines; each "question | explanation | answer".
TripletParse parse_qa_triplets(std::string_view text);

/// Inverse of parse_qa_triplets for fields without '|' or blank lines.
std::string format_qa_triplets(const std::vector<InstructionTriplet>& triplets);

}  // namespace codesynth
