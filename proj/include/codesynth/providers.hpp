// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <variant>

#include "codesynth/error.hpp"
#include "codesynth/gateway.hpp"

namespace codesynth {

/// Plays back a queue of responses or failures, in call order. An empty
/// queue falls back to `fallback` when set, else throws provider_unavailable.
class ScriptedProvider : public Provider {
 public:
  using Step = std::variant<std::string, ErrorCode>;
  using Fallback = std::function<std::string(const LlmRequest&)>;

  explicit ScriptedProvider(std::string id = "scripted") : id_(std::move(id)) {}

  void push(std::string text);
  void push_failure(ErrorCode code);
  void set_fallback(Fallback fn);

  std::string id() const override { return id_; }
  std::string complete(const LlmRequest& request) override;
  std::size_t calls() const noexcept { return calls_.load(); }

 private:
  std::string id_;
  std::mutex mutex_;
  std::deque<Step> steps_;
  Fallback fallback_;
  std::atomic<std::size_t> calls_{0};
};

/// Hermetic mock that answers each stage from `<dir>/<stage>.txt`. Fixture
/// text may contain macros expanded deterministically from the request:
///
///   {{topics}}        N topics joined by " | ", N read from the prompt's
///                     "generate N topics"
///   {{int:LO:HI}}     integer in [LO, HI]
///   {{pick:a,b,...}}  one of the comma-separated options
///   {{fence}}         fence tag the prompt asks for ("Put ```tag at ...")
///   {{code}}          text between <code> and </code> in the prompt
///   {{marker}}        first "color #rrggbb" in the prompt
///   {{topic}}         first quoted or "about X which" topic in the prompt
///
/// Every draw is a function of (prompt, sampling seed, draw index).
class FixtureProvider : public Provider {
 public:
  explicit FixtureProvider(std::filesystem::path dir, std::string id = "mock");

  std::string id() const override { return id_; }
  std::string complete(const LlmRequest& request) override;
  std::size_t calls() const noexcept { return calls_.load(); }

 private:
  std::string id_;
  std::map<Stage, std::string> fixtures_;
  std::atomic<std::size_t> calls_{0};
};

struct HttpProviderConfig {
  std::string id = "http";
  std::string endpoint;          // e.g. https://api.example.com
  std::string path = "/v1/chat/completions";
  std::string api_key_env = "CODESYNTH_API_KEY";
  int timeout_seconds = 120;
};

/// OpenAI-compatible chat-completions client. The API key is read from the
/// environment variable named in the config, never from flags.
class HttpProvider : public Provider {
 public:
  explicit HttpProvider(HttpProviderConfig config);

  std::string id() const override { return config_.id; }
  std::string complete(const LlmRequest& request) override;

 private:
  HttpProviderConfig config_;
};

}  // namespace codesynth
