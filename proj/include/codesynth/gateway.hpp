// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <shared_mutex>
#include <string>
#include <unordered_map>

#include "codesynth/registry.hpp"

namespace codesynth {

struct LlmRequest {
  std::string provider_id;
  std::string model_id;
  std::string prompt;
  double temperature = 0.7;
  double top_p = 1.0;
  std::uint64_t sampling_seed = 0;
  Stage stage = Stage::kTopic;

  /// Throws Error(kInvalidArgument) on an empty prompt or out-of-range
  /// sampling parameters.
  void validate() const;
};

struct LlmResponse {
  std::string text;
  bool cached = false;
  double latency_ms = 0.0;
  int attempts = 0;  // provider calls made; 0 on a cache hit
};

/// SHA-256 over every request field that can change the completion.
struct CacheKey {
  std::string digest;

  static CacheKey of(const LlmRequest& request);
  friend bool operator==(const CacheKey&, const CacheKey&) = default;
};

/// Thread-safe response cache. With a directory, entries persist as
/// <dir>/<d0d1>/<digest>.txt and survive restarts. Entries are immutable:
/// a second put for a key keeps the first value.
class ResponseCache {
 public:
  ResponseCache() = default;  // memory only
  explicit ResponseCache(std::filesystem::path dir);

  std::optional<std::string> get(const CacheKey& key) const;
  void put(const CacheKey& key, const std::string& text);
  std::size_t size() const;
  const std::optional<std::filesystem::path>& directory() const noexcept { return dir_; }

 private:
  std::filesystem::path entry_path(const CacheKey& key) const;

  std::optional<std::filesystem::path> dir_;
  mutable std::shared_mutex mutex_;
  mutable std::unordered_map<std::string, std::string> entries_;
};

/// A completion backend. Implementations throw Error with kTransportError or
/// kRateLimitExhausted for transient failures (the gateway retries those) and
/// kProviderUnavailable for permanent ones.
class Provider {
 public:
  virtual ~Provider() = default;
  virtual std::string id() const = 0;
  virtual std::string complete(const LlmRequest& request) = 0;
};

struct GatewayOptions {
  int max_attempts = 3;
  std::chrono::milliseconds base_backoff{250};
  double backoff_factor = 2.0;
  int max_concurrent_requests = 8;
};

struct GatewayStats {
  std::uint64_t requests = 0;
  std::uint64_t cache_hits = 0;
  std::uint64_t provider_calls = 0;
  std::uint64_t retries = 0;
};

/// Shared by all workers. Cache lookups bypass the concurrency ceiling;
/// provider dispatch holds one of `max_concurrent_requests` slots.
class Gateway {
 public:
  Gateway(std::shared_ptr<ResponseCache> cache, GatewayOptions options = {});

  void register_provider(std::shared_ptr<Provider> provider);
  bool has_provider(std::string_view id) const;

  /// Cache first; on miss dispatches with exponential backoff on transient
  /// errors, stores the response, then returns it.
  LlmResponse complete(const LlmRequest& request);

  GatewayStats stats() const;
  const GatewayOptions& options() const noexcept { return options_; }

 private:
  std::shared_ptr<ResponseCache> cache_;
  GatewayOptions options_;
  std::map<std::string, std::shared_ptr<Provider>, std::less<>> providers_;
  mutable std::mutex providers_mutex_;
  std::counting_semaphore<4096> slots_;
  std::atomic<std::uint64_t> requests_{0}, cache_hits_{0}, provider_calls_{0}, retries_{0};
};

}  // namespace codesynth
