// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "codesynth/dataset.hpp"

namespace codesynth {

class FeatureVector {
 public:
  /// Throws Error(kDimensionMismatch) for an empty vector,
  /// Error(kZeroNormVector) for a zero or non-finite norm.
  explicit FeatureVector(std::vector<double> values);

  const std::vector<double>& values() const noexcept { return values_; }
  double norm() const noexcept { return norm_; }
  std::size_t size() const noexcept { return values_.size(); }

 private:
  std::vector<double> values_;
  double norm_ = 0.0;
};

/// (1 / (n^2 - n)) * sum over ordered pairs i != j of (1 - cos(v_i, v_j)),
/// clamped to [0, 2]. Throws Error(kTooFewVectors) or
/// Error(kDimensionMismatch).
double mean_pairwise_cosine_distance(const std::vector<FeatureVector>& vectors);

/// Feature source for images and texts. Implementations must be
/// deterministic for the report to be reproducible.
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::vector<FeatureVector> embed_images(const std::vector<std::filesystem::path>& paths) = 0;
  virtual std::vector<FeatureVector> embed_texts(const std::vector<std::string>& texts) = 0;
};

/// Deterministic stand-in: images become a 16x16 grid of mean RGB values,
/// texts a 512-bucket hashed bag of words. Identical inputs give identical
/// features.
class HashEmbedder : public Embedder {
 public:
  std::vector<FeatureVector> embed_images(const std::vector<std::filesystem::path>& paths) override;
  std::vector<FeatureVector> embed_texts(const std::vector<std::string>& texts) override;
};

struct HttpEmbedderConfig {
  std::string endpoint;
  std::string path = "/v1/embeddings";
  std::string text_model = "text-embedding";
  std::string image_model = "image-embedding";
  std::string api_key_env = "CODESYNTH_API_KEY";
  int timeout_seconds = 120;
  int batch_size = 64;
};

/// OpenAI-compatible embeddings endpoint. Images are sent as PNG data URLs.
/// Failures throw Error(kProviderUnavailable).
class HttpEmbedder : public Embedder {
 public:
  explicit HttpEmbedder(HttpEmbedderConfig config);
  std::vector<FeatureVector> embed_images(const std::vector<std::filesystem::path>& paths) override;
  std::vector<FeatureVector> embed_texts(const std::vector<std::string>& texts) override;

 private:
  std::vector<FeatureVector> embed(const std::string& model, const std::vector<std::string>& inputs);
  HttpEmbedderConfig config_;
};

struct DiversityReport {
  double image_diversity = 0.0;
  double text_diversity = 0.0;
  std::size_t n = 0;
  std::uint64_t sample_seed = 0;
};

nlohmann::ordered_json report_to_json(const DiversityReport& report);

/// Text fed to the text embedder for one record: its QA pairs, or pointing
/// questions for pointing records, one "question answer" per line.
std::string record_text(const DatasetRecord& record);

/// Samples min(sample_size, n) records uniformly without replacement using
/// `seed`, then scores images and QA text. Throws Error(kTooFewRecords).
DiversityReport compute_report(const std::vector<DatasetRecord>& records, Embedder& embedder, std::size_t sample_size,
                               std::uint64_t seed);

}  // namespace codesynth
