// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <set>

#include "codesynth/error.hpp"
#include "codesynth/hashing.hpp"
#include "codesynth/instruction.hpp"
#include "codesynth/parsers.hpp"
#include "codesynth/prompt.hpp"
#include "codesynth/providers.hpp"

using namespace codesynth;

namespace {

struct Setup {
  std::shared_ptr<ScriptedProvider> provider = std::make_shared<ScriptedProvider>("mock");
  Gateway gateway{std::make_shared<ResponseCache>()};
  PromptTemplate tpl{Stage::kInstruction, "PERSONA / TOPIC / FIGURE_TYPE\n<data>DATA</data>\n<code>CODE</code>"};
  CodeArtifact code{"canvas 300 300 #ffffff\n", Tool::kFixture, "fixture", false};
  DataContent data{nlohmann::ordered_json::parse(R"({"title":"Sales","values":[1,2]})"), ""};
  Setup() { gateway.register_provider(provider); }
  std::pair<InstructionSet, LlmResponse> run() {
    return generate_instructions(code, data, {"an analyst", "sales", "chart", 5}, tpl, StageModel{}, gateway);
  }
};

}  // namespace

TEST_CASE("five well-formed records") {
  Setup s;
  std::string prompt_seen;
  s.provider->set_fallback([&](const LlmRequest& r) {
    prompt_seen = r.prompt;
    std::string out;
    for (int i = 0; i < 5; ++i) out += "q" + std::to_string(i) + " | e" + std::to_string(i) + " | a" + std::to_string(i) + "\n\n";
    return out;
  });
  const auto [set, response] = s.run();
  CHECK(set.triplets.size() == 5);
  CHECK(set.dropped == 0);
  CHECK(set.source_code_hash == sha256_hex(s.code.source));
  CHECK(set.prompt_hash == sha256_hex(prompt_seen));
  CHECK(prompt_seen.find(s.code.source) != std::string::npos);
  CHECK(prompt_seen.find("\"title\": \"Sales\"") != std::string::npos);
  CHECK(prompt_seen.find("an analyst / sales / chart") == 0);
  CHECK_FALSE(response.cached);
}

TEST_CASE("malformed records are dropped and counted") {
  Setup s;
  s.provider->push("q1 | e1 | a1\n\nq2 | e2 | a2\n\nbroken record\n\nq3 | e3 | a3\n\nq4 | e4 | a4\n");
  const auto set = s.run().first;
  CHECK(set.triplets.size() == 4);
  CHECK(set.dropped == 1);
}

TEST_CASE("all records malformed") {
  Setup s;
  s.provider->push("nothing useful\n\nstill | nothing\n");
  try {
    s.run();
    FAIL("expected zero_valid_triplets");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kZeroValidTriplets);
  }
}

TEST_CASE("training example templates") {
  const InstructionTriplet t{"What is the peak?", "The tallest bar is March at 40.", "40"};
  const auto s = format_training_example(t, TrainingStyle::kShortAnswer);
  CHECK(s.prompt == "What is the peak? Answer with as few words as possible.");
  CHECK(s.target == "40");
  const auto c = format_training_example(t, TrainingStyle::kCoT);
  CHECK(c.prompt == "What is the peak? Provide reasoning steps and then give the short answer.");
  CHECK(c.target == "The tallest bar is March at 40.\nAnswer: 40");

  const auto cut = c.target.rfind("Answer: ");
  CHECK(c.target.substr(0, cut - 1) == t.explanation);
  CHECK(c.target.substr(cut + 8) == t.answer);

  CHECK(to_string(TrainingStyle::kCoT) == "cot");
  CHECK(to_string(TrainingStyle::kShortAnswer) == "short_answer");
}

TEST_CASE("formatting is injective over triplet and style") {
  const std::vector<InstructionTriplet> ts{{"a", "b", "c"}, {"a", "b", "d"}, {"a", "bc", ""}, {"a b", "c", "d"}};
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& t : ts)
    for (auto style : {TrainingStyle::kCoT, TrainingStyle::kShortAnswer}) {
      const auto ex = format_training_example(t, style);
      seen.emplace(ex.prompt, ex.target);
    }
  CHECK(seen.size() == ts.size() * 2);
}
