// SPDX-License-Identifier: Apache-2.0
#include "codesynth/providers.hpp"

#include <cstdlib>
#include <fstream>
#include <regex>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "codesynth/hashing.hpp"

namespace codesynth {

void ScriptedProvider::push(std::string text) {
  std::lock_guard lock(mutex_);
  steps_.emplace_back(std::move(text));
}

void ScriptedProvider::push_failure(ErrorCode code) {
  std::lock_guard lock(mutex_);
  steps_.emplace_back(code);
}

void ScriptedProvider::set_fallback(Fallback fn) {
  std::lock_guard lock(mutex_);
  fallback_ = std::move(fn);
}

std::string ScriptedProvider::complete(const LlmRequest& request) {
  ++calls_;
  Step step;
  Fallback fallback;
  {
    std::lock_guard lock(mutex_);
    if (steps_.empty()) {
      if (!fallback_) throw Error(ErrorCode::kProviderUnavailable, "script exhausted");
      fallback = fallback_;
    } else {
      step = std::move(steps_.front());
      steps_.pop_front();
    }
  }
  if (fallback) return fallback(request);
  if (auto* code = std::get_if<ErrorCode>(&step)) throw Error(*code, "scripted failure");
  return std::get<std::string>(std::move(step));
}

namespace {

constexpr std::string_view kTopicWords[] = {
    "quarterly", "seasonal", "regional", "annual",  "weekly",   "community", "historical", "comparative",
    "budget",    "travel",   "harvest",  "library", "festival", "clinic",    "studio",     "observatory",
};
constexpr std::string_view kTopicNouns[] = {
    "overview", "summary", "schedule", "breakdown", "report", "guide", "plan", "ledger",
};

std::uint64_t prompt_hash(const LlmRequest& r) {
  const std::string hex = sha256_fields({r.prompt, std::to_string(r.sampling_seed)});
  return std::stoull(hex.substr(0, 16), nullptr, 16);
}

std::string first_match(const std::string& text, const std::regex& re, const std::string& fallback) {
  std::smatch m;
  return std::regex_search(text, m, re) ? m[1].str() : fallback;
}

std::string expand(std::string_view fixture, const LlmRequest& r) {
  const std::uint64_t base = prompt_hash(r);
  std::uint64_t draw_index = 0;
  auto draw = [&] { return mix64(base ^ mix64(++draw_index)); };

  std::string out;
  std::size_t pos = 0;
  while (pos < fixture.size()) {
    const auto open = fixture.find("{{", pos);
    if (open == std::string_view::npos) break;
    const auto close = fixture.find("}}", open + 2);
    if (close == std::string_view::npos) break;
    out.append(fixture.substr(pos, open - pos));
    const std::string macro(fixture.substr(open + 2, close - open - 2));
    pos = close + 2;

    if (macro == "topics") {
      static const std::regex kCount(R"(generate (\d+) topics)");
      const int n = std::max(1, std::stoi(first_match(r.prompt, kCount, "1")));
      for (int i = 0; i < n; ++i) {
        if (i) out += " | ";
        const auto w = draw();
        out += "the ";
        out += kTopicWords[w % std::size(kTopicWords)];
        out += ' ';
        out += kTopicNouns[(w >> 8) % std::size(kTopicNouns)];
        out += " no. " + std::to_string((w >> 16) % 1000);
      }
    } else if (macro.rfind("int:", 0) == 0) {
      const auto colon = macro.find(':', 4);
      const long lo = std::stol(macro.substr(4, colon - 4));
      const long hi = std::stol(macro.substr(colon + 1));
      out += std::to_string(lo + static_cast<long>(draw() % static_cast<std::uint64_t>(hi - lo + 1)));
    } else if (macro.rfind("pick:", 0) == 0) {
      std::vector<std::string> options;
      std::stringstream ss(macro.substr(5));
      for (std::string opt; std::getline(ss, opt, ',');) options.push_back(opt);
      out += options.empty() ? std::string() : options[draw() % options.size()];
    } else if (macro == "fence") {
      static const std::regex kFence("Put ```([A-Za-z0-9_+-]+) at the beginning");
      out += first_match(r.prompt, kFence, "fixture");
    } else if (macro == "code") {
      static const std::regex kCode(R"(<code>\n([\s\S]*?)\n</code>)");
      out += first_match(r.prompt, kCode, "");
    } else if (macro == "marker") {
      static const std::regex kMarker("color (#[0-9a-fA-F]{6})");
      out += first_match(r.prompt, kMarker, "#ff00ff");
    } else if (macro == "topic") {
      static const std::regex kTopic(R"(about "([^"\n]+)\"|about ([^\n]+?) which)");
      std::smatch m;
      if (std::regex_search(r.prompt, m, kTopic)) out += m[1].matched ? m[1].str() : m[2].str();
    } else {
      out += "{{" + macro + "}}";
    }
  }
  out.append(fixture.substr(pos));
  return out;
}

}  // namespace

FixtureProvider::FixtureProvider(std::filesystem::path dir, std::string id) : id_(std::move(id)) {
  for (Stage s : {Stage::kTopic, Stage::kData, Stage::kCode, Stage::kInstruction, Stage::kPointEdit}) {
    const auto path = dir / (std::string(to_string(s)) + ".txt");
    std::ifstream in(path, std::ios::binary);
    if (!in) continue;
    std::ostringstream ss;
    ss << in.rdbuf();
    fixtures_[s] = ss.str();
  }
  if (fixtures_.empty()) throw Error(ErrorCode::kProviderUnavailable, "no fixture files in " + dir.string());
}

std::string FixtureProvider::complete(const LlmRequest& request) {
  ++calls_;
  auto it = fixtures_.find(request.stage);
  if (it == fixtures_.end()) {
    throw Error(ErrorCode::kProviderUnavailable, "no fixture for stage " + std::string(to_string(request.stage)));
  }
  return expand(it->second, request);
}

HttpProvider::HttpProvider(HttpProviderConfig config) : config_(std::move(config)) {
  if (config_.endpoint.empty()) throw Error(ErrorCode::kProviderUnavailable, "http provider has no endpoint");
}

std::string HttpProvider::complete(const LlmRequest& request) {
  httplib::Client client(config_.endpoint);
  client.set_connection_timeout(config_.timeout_seconds, 0);
  client.set_read_timeout(config_.timeout_seconds, 0);
  httplib::Headers headers;
  if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key) {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }
  const nlohmann::json body = {
      {"model", request.model_id},
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", request.prompt}}})},
      {"temperature", request.temperature},
      {"top_p", request.top_p},
      // Most endpoints take a signed 32-bit seed.
      {"seed", static_cast<std::int64_t>(request.sampling_seed & 0x7fffffffULL)},
  };
  auto res = client.Post(config_.path, headers, body.dump(), "application/json");
  if (!res) {
    throw Error(ErrorCode::kTransportError, config_.endpoint + ": " + httplib::to_string(res.error()));
  }
  if (res->status == 429) throw Error(ErrorCode::kRateLimitExhausted, "HTTP 429 from " + config_.endpoint);
  if (res->status >= 500) {
    throw Error(ErrorCode::kTransportError, "HTTP " + std::to_string(res->status) + " from " + config_.endpoint);
  }
  if (res->status != 200) {
    throw Error(ErrorCode::kProviderUnavailable,
                "HTTP " + std::to_string(res->status) + " from " + config_.endpoint + ": " + res->body.substr(0, 200));
  }
  auto reply = nlohmann::json::parse(res->body, nullptr, false);
  if (reply.is_discarded() || !reply.contains("choices") || !reply["choices"].is_array() || reply["choices"].empty()) {
    throw Error(ErrorCode::kTransportError, "unexpected response body from " + config_.endpoint);
  }
  const auto& message = reply["choices"][0]["message"];
  if (!message.is_object() || !message.contains("content") || !message["content"].is_string()) {
    throw Error(ErrorCode::kTransportError, "response has no message content");
  }
  return message["content"].get<std::string>();
}

}  // namespace codesynth
