// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "codesynth/gateway.hpp"
#include "codesynth/prompt.hpp"
#include "codesynth/types.hpp"

namespace codesynth {

struct InstructionSet {
  std::vector<InstructionTriplet> triplets;
  std::size_t dropped = 0;       // malformed records skipped by the parser
  std::string source_code_hash;  // SHA-256 of the code the questions were asked about
  std::string prompt_hash;       // SHA-256 of the sent prompt
};

/// Model settings for one stage request.
struct StageModel {
  std::string provider_id = "mock";
  std::string model_id = "mock";
  double temperature = 0.7;
  double top_p = 1.0;
};

/// Everything an instruction prompt may reference besides DATA and CODE.
struct InstructionContext {
  std::string persona;
  std::string topic;
  std::string figure_type;
  std::uint64_t sampling_seed = 0;
};

/// Renders the instruction template with DATA and CODE (never the image),
/// sends it, and parses the triplets. Returns the response alongside so the
/// caller can log cache hits.
std::pair<InstructionSet, LlmResponse> generate_instructions(const CodeArtifact& code, const DataContent& data,
                                                             const InstructionContext& context,
                                                             const PromptTemplate& tpl, const StageModel& model,
                                                             Gateway& gateway);

enum class TrainingStyle { kCoT, kShortAnswer };

inline constexpr std::string_view kCoTSuffix = " Provide reasoning steps and then give the short answer.";
inline constexpr std::string_view kShortAnswerSuffix = " Answer with as few words as possible.";

struct TrainingExample {
  std::string prompt;
  std::string target;
  friend bool operator==(const TrainingExample&, const TrainingExample&) = default;
};

/// CoT: prompt = question + kCoTSuffix, target = explanation + "\nAnswer: " + answer.
/// ShortAnswer: prompt = question + kShortAnswerSuffix, target = answer.
TrainingExample format_training_example(const InstructionTriplet& triplet, TrainingStyle style);

std::string_view to_string(TrainingStyle style) noexcept;

}  // namespace codesynth
