// SPDX-License-Identifier: Apache-2.0
#include "codesynth/gateway.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include <unistd.h>

#include "codesynth/error.hpp"
#include "codesynth/hashing.hpp"

namespace codesynth {
namespace {

std::string exact(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

// Releases a semaphore slot on scope exit.
class SlotGuard {
 public:
  explicit SlotGuard(std::counting_semaphore<4096>& sem) : sem_(sem) { sem_.acquire(); }
  ~SlotGuard() { sem_.release(); }
  SlotGuard(const SlotGuard&) = delete;
  SlotGuard& operator=(const SlotGuard&) = delete;

 private:
  std::counting_semaphore<4096>& sem_;
};

}  // namespace

void LlmRequest::validate() const {
  if (prompt.empty()) throw Error(ErrorCode::kInvalidArgument, "request prompt is empty");
  if (!(temperature >= 0.0) || !std::isfinite(temperature)) {
    throw Error(ErrorCode::kInvalidArgument, "temperature must be >= 0");
  }
  if (!(top_p > 0.0 && top_p <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "top_p must be in (0, 1]");
}

CacheKey CacheKey::of(const LlmRequest& r) {
  const std::string temp = exact(r.temperature);
  const std::string top_p = exact(r.top_p);
  const std::string seed = std::to_string(r.sampling_seed);
  return CacheKey{sha256_fields({r.provider_id, r.model_id, r.prompt, temp, top_p, seed, to_string(r.stage)})};
}

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(*dir_, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create cache dir " + dir_->string() + ": " + ec.message());
}

std::filesystem::path ResponseCache::entry_path(const CacheKey& key) const {
  return *dir_ / key.digest.substr(0, 2) / (key.digest + ".txt");
}

std::optional<std::string> ResponseCache::get(const CacheKey& key) const {
  {
    std::shared_lock lock(mutex_);
    if (auto it = entries_.find(key.digest); it != entries_.end()) return it->second;
  }
  if (!dir_) return std::nullopt;
  std::ifstream in(entry_path(key), std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  std::unique_lock lock(mutex_);
  auto [it, inserted] = entries_.emplace(key.digest, ss.str());
  return it->second;
}

void ResponseCache::put(const CacheKey& key, const std::string& text) {
  {
    std::unique_lock lock(mutex_);
    if (!entries_.emplace(key.digest, text).second) return;
  }
  if (!dir_) return;
  const auto path = entry_path(key);
  std::error_code ec;
  std::filesystem::create_directories(path.parent_path(), ec);
  if (std::filesystem::exists(path, ec)) return;
  // Unique temp name per writer, then rename into place.
  const auto tmp = path.string() + ".tmp." + std::to_string(::getpid()) + "." + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw Error(ErrorCode::kIoError, "cannot write cache entry " + tmp);
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot commit cache entry " + path.string() + ": " + ec.message());
}

std::size_t ResponseCache::size() const {
  if (!dir_) {
    std::shared_lock lock(mutex_);
    return entries_.size();
  }
  std::size_t n = 0;
  for (const auto& e : std::filesystem::recursive_directory_iterator(*dir_)) {
    if (e.is_regular_file() && e.path().extension() == ".txt") ++n;
  }
  return n;
}

Gateway::Gateway(std::shared_ptr<ResponseCache> cache, GatewayOptions options)
    : cache_(cache ? std::move(cache) : std::make_shared<ResponseCache>()),
      options_(options),
      slots_(std::max(1, options.max_concurrent_requests)) {
  if (options_.max_attempts < 1) throw Error(ErrorCode::kInvalidArgument, "max_attempts must be >= 1");
  if (options_.max_concurrent_requests < 1 || options_.max_concurrent_requests > 4096) {
    throw Error(ErrorCode::kInvalidArgument, "max_concurrent_requests must be in [1, 4096]");
  }
}

void Gateway::register_provider(std::shared_ptr<Provider> provider) {
  std::lock_guard lock(providers_mutex_);
  auto id = provider->id();
  providers_[id] = std::move(provider);
}

bool Gateway::has_provider(std::string_view id) const {
  std::lock_guard lock(providers_mutex_);
  return providers_.find(id) != providers_.end();
}

LlmResponse Gateway::complete(const LlmRequest& request) {
  request.validate();
  ++requests_;
  const CacheKey key = CacheKey::of(request);
  if (auto hit = cache_->get(key)) {
    ++cache_hits_;
    return LlmResponse{std::move(*hit), true, 0.0, 0};
  }

  std::shared_ptr<Provider> provider;
  {
    std::lock_guard lock(providers_mutex_);
    auto it = providers_.find(request.provider_id);
    if (it == providers_.end()) {
      throw Error(ErrorCode::kProviderUnavailable, "no provider registered as '" + request.provider_id + "'");
    }
    provider = it->second;
  }

  auto backoff = options_.base_backoff;
  for (int attempt = 1;; ++attempt) {
    try {
      const auto start = std::chrono::steady_clock::now();
      std::string text;
      {
        SlotGuard slot(slots_);
        ++provider_calls_;
        text = provider->complete(request);
      }
      const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      cache_->put(key, text);
      return LlmResponse{std::move(text), false, ms, attempt};
    } catch (const Error& e) {
      const bool transient = e.code() == ErrorCode::kTransportError || e.code() == ErrorCode::kRateLimitExhausted;
      if (!transient) throw;
      if (attempt >= options_.max_attempts) {
        throw Error(e.code(), "gave up after " + std::to_string(attempt) + " attempts: " + e.what());
      }
      ++retries_;
      std::this_thread::sleep_for(backoff);
      backoff = std::chrono::milliseconds(static_cast<long>(backoff.count() * options_.backoff_factor));
    }
  }
}

GatewayStats Gateway::stats() const {
  return GatewayStats{requests_.load(), cache_hits_.load(), provider_calls_.load(), retries_.load()};
}

}  // namespace codesynth
