// SPDX-License-Identifier: Apache-2.0
#include "codesynth/diversity.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <httplib.h>

#include "codesynth/error.hpp"
#include "codesynth/hashing.hpp"
#include "codesynth/image.hpp"

namespace codesynth {

FeatureVector::FeatureVector(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw Error(ErrorCode::kDimensionMismatch, "feature vector is empty");
  double sq = 0.0;
  for (double v : values_) sq += v * v;
  norm_ = std::sqrt(sq);
  if (!(norm_ > 0.0) || !std::isfinite(norm_)) throw Error(ErrorCode::kZeroNormVector, "feature vector has zero norm");
}

// Sum over ordered pairs i != j of cos = |sum u|^2 - sum |u|^2 for unit u,
// which turns the O(n^2 d) double loop into O(n d).
double mean_pairwise_cosine_distance(const std::vector<FeatureVector>& vectors) {
  const std::size_t n = vectors.size();
  if (n < 2) throw Error(ErrorCode::kTooFewVectors, "need at least 2 vectors, got " + std::to_string(n));
  const std::size_t d = vectors.front().size();
  for (const auto& v : vectors) {
    if (v.size() != d) throw Error(ErrorCode::kDimensionMismatch, "vectors differ in length");
  }
  std::vector<double> sum(d, 0.0);
  double self = 0.0;
  for (const auto& v : vectors) {
    const double inv = 1.0 / v.norm();
    double sq = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double u = v.values()[k] * inv;
      sum[k] += u;
      sq += u * u;
    }
    self += sq;
  }
  double total = 0.0;
  for (double s : sum) total += s * s;
  const double pairs = static_cast<double>(n) * static_cast<double>(n - 1);
  const double mean_cos = (total - self) / pairs;
  return std::clamp(1.0 - mean_cos, 0.0, 2.0);
}

std::vector<FeatureVector> HashEmbedder::embed_images(const std::vector<std::filesystem::path>& paths) {
  constexpr int kGrid = 16;
  std::vector<FeatureVector> out;
  for (const auto& p : paths) {
    const Image img = read_png(p);
    std::vector<double> f(kGrid * kGrid * 3 + 1, 0.0);
    std::vector<double> counts(kGrid * kGrid, 0.0);
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) {
        const int cell = (y * kGrid / img.height) * kGrid + (x * kGrid / img.width);
        const Rgb c = img.rgb_at(x, y);
        for (int ch = 0; ch < 3; ++ch) f[cell * 3 + ch] += c[ch];
        counts[cell] += 1.0;
      }
    }
    for (int cell = 0; cell < kGrid * kGrid; ++cell) {
      if (counts[cell] > 0) {
        for (int ch = 0; ch < 3; ++ch) f[cell * 3 + ch] /= 255.0 * counts[cell];
      }
    }
    f.back() = 1.0;  // keeps all-black images embeddable
    out.emplace_back(std::move(f));
  }
  return out;
}

std::vector<FeatureVector> HashEmbedder::embed_texts(const std::vector<std::string>& texts) {
  constexpr std::size_t kBuckets = 512;
  std::vector<FeatureVector> out;
  for (const auto& t : texts) {
    std::vector<double> f(kBuckets + 1, 0.0);
    std::string word;
    auto flush = [&] {
      if (word.empty()) return;
      const std::string h = sha256_hex(word);
      f[std::stoull(h.substr(0, 12), nullptr, 16) % kBuckets] += 1.0;
      word.clear();
    };
    for (char c : t) {
      if (std::isalnum(static_cast<unsigned char>(c))) {
        word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
      } else {
        flush();
      }
    }
    flush();
    f.back() = 1.0;
    out.emplace_back(std::move(f));
  }
  return out;
}

HttpEmbedder::HttpEmbedder(HttpEmbedderConfig config) : config_(std::move(config)) {
  if (config_.endpoint.empty()) throw Error(ErrorCode::kProviderUnavailable, "embedder has no endpoint");
}

std::vector<FeatureVector> HttpEmbedder::embed(const std::string& model, const std::vector<std::string>& inputs) {
  httplib::Client client(config_.endpoint);
  client.set_connection_timeout(config_.timeout_seconds, 0);
  client.set_read_timeout(config_.timeout_seconds, 0);
  httplib::Headers headers;
  if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key) {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }
  std::vector<FeatureVector> out;
  const std::size_t batch = static_cast<std::size_t>(std::max(1, config_.batch_size));
  for (std::size_t start = 0; start < inputs.size(); start += batch) {
    const auto end = std::min(inputs.size(), start + batch);
    const nlohmann::json body = {{"model", model},
                                 {"input", std::vector<std::string>(inputs.begin() + start, inputs.begin() + end)}};
    auto res = client.Post(config_.path, headers, body.dump(), "application/json");
    if (!res) throw Error(ErrorCode::kProviderUnavailable, config_.endpoint + ": " + httplib::to_string(res.error()));
    if (res->status != 200) {
      throw Error(ErrorCode::kProviderUnavailable, "HTTP " + std::to_string(res->status) + " from " + config_.endpoint);
    }
    auto reply = nlohmann::json::parse(res->body, nullptr, false);
    if (reply.is_discarded() || !reply.contains("data") || !reply["data"].is_array() ||
        reply["data"].size() != end - start) {
      throw Error(ErrorCode::kProviderUnavailable, "unexpected embeddings response");
    }
    // Entries may arrive out of order; "index" is authoritative.
    std::vector<std::vector<double>> batch_out(end - start);
    for (const auto& item : reply["data"]) {
      const auto idx = item.value("index", std::size_t{0});
      if (idx >= batch_out.size() || !item.contains("embedding")) {
        throw Error(ErrorCode::kProviderUnavailable, "bad embedding entry");
      }
      batch_out[idx] = item["embedding"].get<std::vector<double>>();
    }
    for (auto& v : batch_out) out.emplace_back(std::move(v));
  }
  return out;
}

std::vector<FeatureVector> HttpEmbedder::embed_texts(const std::vector<std::string>& texts) {
  return embed(config_.text_model, texts);
}

std::vector<FeatureVector> HttpEmbedder::embed_images(const std::vector<std::filesystem::path>& paths) {
  std::vector<std::string> inputs;
  for (const auto& p : paths) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error(ErrorCode::kIoError, "cannot read " + p.string());
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::string b64(4 * ((bytes.size() + 2) / 3) + 1, '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(b64.data()),
                                  reinterpret_cast<const unsigned char*>(bytes.data()), static_cast<int>(bytes.size()));
    b64.resize(static_cast<std::size_t>(n));
    inputs.push_back("data:image/png;base64," + b64);
  }
  return embed(config_.image_model, inputs);
}

nlohmann::ordered_json report_to_json(const DiversityReport& r) {
  nlohmann::ordered_json j;
  j["image_diversity"] = r.image_diversity;
  j["text_diversity"] = r.text_diversity;
  j["n"] = r.n;
  j["sample_seed"] = r.sample_seed;
  return j;
}

std::string record_text(const DatasetRecord& r) {
  std::string text;
  for (const auto& t : r.qa) text += t.question + " " + t.answer + "\n";
  for (const auto& a : r.points) text += a.question + "\n";
  return text;
}

DiversityReport compute_report(const std::vector<DatasetRecord>& records, Embedder& embedder, std::size_t sample_size,
                               std::uint64_t seed) {
  const std::size_t n = records.size();
  if (n < 2) throw Error(ErrorCode::kTooFewRecords, "diversity needs at least 2 records");
  const std::size_t k = std::clamp<std::size_t>(sample_size, 2, n);

  // Partial Fisher-Yates; the chosen indices are scored in ascending order.
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(mix64(seed));
  for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + uniform_below(rng, n - i)]);
  idx.resize(k);
  std::sort(idx.begin(), idx.end());

  std::vector<std::filesystem::path> images;
  std::vector<std::string> texts;
  for (auto i : idx) {
    images.push_back(records[i].source_image);
    texts.push_back(record_text(records[i]));
  }
  DiversityReport r;
  r.image_diversity = mean_pairwise_cosine_distance(embedder.embed_images(images));
  r.text_diversity = mean_pairwise_cosine_distance(embedder.embed_texts(texts));
  r.n = k;
  r.sample_seed = seed;
  return r;
}

}  // namespace codesynth
