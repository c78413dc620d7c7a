// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <httplib.h>
#include <json.hpp>

#include <random>
#include <thread>
#include <unordered_set>

#include "codesynth/error.hpp"
#include "codesynth/gateway.hpp"
#include "codesynth/providers.hpp"
#include "test_util.hpp"

using namespace codesynth;

namespace {

LlmRequest request(std::string prompt, std::uint64_t seed = 0, std::string provider = "scripted") {
  LlmRequest r;
  r.provider_id = std::move(provider);
  r.model_id = "m";
  r.prompt = std::move(prompt);
  r.sampling_seed = seed;
  return r;
}

GatewayOptions fast() {
  GatewayOptions o;
  o.base_backoff = std::chrono::milliseconds(1);
  return o;
}

}  // namespace

TEST_CASE("second identical request is a cache hit") {
  Gateway gw(std::make_shared<ResponseCache>(), fast());
  auto p = std::make_shared<ScriptedProvider>();
  p->push("hello");
  gw.register_provider(p);
  const auto a = gw.complete(request("x"));
  const auto b = gw.complete(request("x"));
  CHECK_FALSE(a.cached);
  CHECK(b.cached);
  CHECK(a.text == b.text);
  CHECK(b.attempts == 0);
  CHECK(p->calls() == 1);
  CHECK(gw.stats().cache_hits == 1);
}

TEST_CASE("sampling seed is part of the key") {
  CHECK_FALSE(CacheKey::of(request("x", 1)) == CacheKey::of(request("x", 2)));
  auto r = request("x");
  auto s = r;
  s.stage = Stage::kCode;
  CHECK_FALSE(CacheKey::of(r) == CacheKey::of(s));
  s = r;
  s.temperature = 0.71;
  CHECK_FALSE(CacheKey::of(r) == CacheKey::of(s));
}

TEST_CASE("transient failures are retried") {
  Gateway gw(std::make_shared<ResponseCache>(), fast());
  auto p = std::make_shared<ScriptedProvider>();
  p->push_failure(ErrorCode::kTransportError);
  p->push_failure(ErrorCode::kRateLimitExhausted);
  p->push("ok");
  gw.register_provider(p);
  const auto r = gw.complete(request("x"));
  CHECK(r.text == "ok");
  CHECK(r.attempts == 3);
  CHECK(gw.stats().retries == 2);
}

TEST_CASE("retries run out") {
  Gateway gw(std::make_shared<ResponseCache>(), fast());
  auto p = std::make_shared<ScriptedProvider>();
  for (int i = 0; i < 3; ++i) p->push_failure(ErrorCode::kTransportError);
  p->push("late");
  gw.register_provider(p);
  try {
    gw.complete(request("x"));
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kTransportError);
  }
  CHECK(p->calls() == 3);
}

TEST_CASE("permanent failures are not retried") {
  Gateway gw(std::make_shared<ResponseCache>(), fast());
  auto p = std::make_shared<ScriptedProvider>();
  p->push_failure(ErrorCode::kProviderUnavailable);
  gw.register_provider(p);
  CHECK_THROWS_AS(gw.complete(request("x")), Error);
  CHECK(p->calls() == 1);
  CHECK_THROWS_AS(gw.complete(request("x", 0, "nobody")), Error);
}

TEST_CASE("warm cache never calls the provider") {
  auto cache = std::make_shared<ResponseCache>();
  {
    Gateway gw(cache, fast());
    auto p = std::make_shared<ScriptedProvider>();
    p->set_fallback([](const LlmRequest& r) { return "echo " + r.prompt; });
    gw.register_provider(p);
    for (int i = 0; i < 50; ++i) gw.complete(request("p" + std::to_string(i)));
  }
  Gateway gw(cache, fast());
  auto p = std::make_shared<ScriptedProvider>();
  gw.register_provider(p);  // empty script: any call would throw
  for (int i = 0; i < 50; ++i) CHECK(gw.complete(request("p" + std::to_string(i))).text == "echo p" + std::to_string(i));
  CHECK(p->calls() == 0);
}

TEST_CASE("directory cache survives a restart") {
  testutil::TempDir dir;
  {
    Gateway gw(std::make_shared<ResponseCache>(dir.path()), fast());
    auto p = std::make_shared<ScriptedProvider>();
    p->push("persisted");
    gw.register_provider(p);
    gw.complete(request("x"));
  }
  auto cache = std::make_shared<ResponseCache>(dir.path());
  CHECK(cache->get(CacheKey::of(request("x"))) == std::optional<std::string>("persisted"));
  cache->put(CacheKey::of(request("x")), "other");
  CHECK(cache->get(CacheKey::of(request("x"))) == std::optional<std::string>("persisted"));
}

TEST_CASE("concurrent callers share the cache") {
  Gateway gw(std::make_shared<ResponseCache>(), fast());
  auto p = std::make_shared<ScriptedProvider>();
  p->set_fallback([](const LlmRequest& r) { return r.prompt; });
  gw.register_provider(p);
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t)
    threads.emplace_back([&] {
      for (int i = 0; i < 100; ++i) gw.complete(request("k" + std::to_string(i % 20)));
    });
  for (auto& t : threads) t.join();
  CHECK(gw.stats().requests == 400);
  CHECK(gw.stats().cache_hits + gw.stats().provider_calls == 400);
}

TEST_CASE("cache keys do not collide over a million random requests") {
  std::mt19937_64 rng(2024);
  std::unordered_set<std::string> digests;
  digests.reserve(1000000);
  for (int i = 0; i < 1000000; ++i) {
    LlmRequest r = request("prompt-" + std::to_string(rng()), rng());
    r.temperature = static_cast<double>(rng() % 200) / 100.0;
    r.stage = static_cast<Stage>(rng() % 5);
    digests.insert(CacheKey::of(r).digest);
  }
  CHECK(digests.size() == 1000000u);
}

TEST_CASE("request validation") {
  auto r = request("");
  CHECK_THROWS_AS(r.validate(), Error);
  r = request("x");
  r.top_p = 0;
  CHECK_THROWS_AS(r.validate(), Error);
}

TEST_CASE("http provider status handling") {
  httplib::Server server;
  std::atomic<int> hits{0};
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    const auto body = nlohmann::json::parse(req.body);
    const std::string prompt = body["messages"][0]["content"];
    ++hits;
    if (prompt == "limited") {
      res.status = 429;
    } else if (prompt == "broken") {
      res.status = 503;
    } else if (prompt == "denied") {
      res.status = 401;
    } else {
      res.set_content(nlohmann::json{{"choices", {{{"message", {{"content", "re: " + prompt}}}}}}}.dump(),
                      "application/json");
    }
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread loop([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  HttpProviderConfig cfg;
  cfg.endpoint = "http://127.0.0.1:" + std::to_string(port);
  cfg.timeout_seconds = 5;
  HttpProvider provider(cfg);
  CHECK(provider.complete(request("hi", 0, "http")) == "re: hi");
  auto code = [&](const char* prompt) {
    try {
      provider.complete(request(prompt, 0, "http"));
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kInvalidArgument;
  };
  CHECK(code("limited") == ErrorCode::kRateLimitExhausted);
  CHECK(code("broken") == ErrorCode::kTransportError);
  CHECK(code("denied") == ErrorCode::kProviderUnavailable);

  Gateway gw(std::make_shared<ResponseCache>(), fast());
  gw.register_provider(std::make_shared<HttpProvider>(cfg));
  const int before = hits;
  CHECK_THROWS_AS(gw.complete(request("broken", 0, "http")), Error);
  CHECK(hits - before == 3);

  server.stop();
  loop.join();
}
