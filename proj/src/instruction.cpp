// SPDX-License-Identifier: Apache-2.0
#include "codesynth/instruction.hpp"

#include "codesynth/hashing.hpp"
#include "codesynth/parsers.hpp"

namespace codesynth {

std::pair<InstructionSet, LlmResponse> generate_instructions(const CodeArtifact& code, const DataContent& data,
                                                             const InstructionContext& context,
                                                             const PromptTemplate& tpl, const StageModel& model,
                                                             Gateway& gateway) {
  const Bindings bindings{
      {"PERSONA", context.persona},
      {"TOPIC", context.topic},
      {"FIGURE_TYPE", context.figure_type},
      {"DATA", data.payload.dump(2)},
      {"CODE", code.source},
  };
  LlmRequest request;
  request.provider_id = model.provider_id;
  request.model_id = model.model_id;
  request.prompt = render_template(tpl, bindings);
  request.temperature = model.temperature;
  request.top_p = model.top_p;
  request.sampling_seed = context.sampling_seed;
  request.stage = Stage::kInstruction;

  LlmResponse response = gateway.complete(request);
  TripletParse parsed = parse_qa_triplets(response.text);
  InstructionSet set{std::move(parsed.triplets), parsed.dropped, sha256_hex(code.source), sha256_hex(request.prompt)};
  return {std::move(set), std::move(response)};
}

TrainingExample format_training_example(const InstructionTriplet& t, TrainingStyle style) {
  if (style == TrainingStyle::kCoT) {
    return {t.question + std::string(kCoTSuffix), t.explanation + "\nAnswer: " + t.answer};
  }
  return {t.question + std::string(kShortAnswerSuffix), t.answer};
}

std::string_view to_string(TrainingStyle style) noexcept {
  return style == TrainingStyle::kCoT ? "cot" : "short_answer";
}

}  // namespace codesynth
