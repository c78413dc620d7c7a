// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "codesynth/gateway.hpp"
#include "codesynth/image.hpp"
#include "codesynth/instruction.hpp"
#include "codesynth/prompt.hpp"
#include "codesynth/types.hpp"

namespace codesynth {

struct MarkerSpec {
  Rgb color{255, 0, 255};
  double match_tolerance = 30.0;  // Euclidean RGB distance, inclusive
  int min_component_area = 4;

  /// Throws Error(kInvalidArgument) on a negative tolerance or area < 1.
  void validate() const;
  bool matches(Rgb c) const noexcept;
};

/// Default marker first, then the fallbacks tried on a collision.
const std::vector<Rgb>& marker_palette();

struct PixelPoint {
  double x = 0.0;
  double y = 0.0;
  int area = 0;
};

struct PointAnnotation {
  std::string question;
  std::vector<std::pair<double, double>> points;  // normalized to [0, 100]
  std::vector<PixelPoint> pixel_points;
  int width = 0;
  int height = 0;
  Rgb marker{255, 0, 255};
};

struct PointEditContext {
  std::string persona;
  std::string topic;
  std::string figure_type;
  std::uint64_t sampling_seed = 0;
};

struct PointEdit {
  std::string question;
  std::string prompt_hash;  // SHA-256 of the sent prompt
  CodeArtifact edited;  // keeps the original tool
  LlmResponse response;
};

/// Asks the model for a pointing question and an edited source that draws
/// markers. The response must hold a "Question: ..." line and a fenced block.
/// Throws the gateway's errors, Error(kMalformedPayload) without a question,
/// or the code-block errors of extract_code_block.
PointEdit generate_point_edit(const CodeArtifact& code, const MarkerSpec& marker, const PointEditContext& context,
                              const PromptTemplate& tpl, const StageModel& model, Gateway& gateway);

/// Centroids (mean of member pixel centers) of 8-connected marker-colored
/// components with at least min_component_area pixels, sorted by (y, x).
/// Throws Error(kZeroMarkersFound).
std::vector<PixelPoint> extract_points(const Image& edited, const MarkerSpec& marker);

/// True when any pixel of the unedited render already matches the marker.
bool marker_collides(const Image& original, const MarkerSpec& marker);

/// First palette color (starting with `preferred`) absent from the original.
/// Throws Error(kMarkerCollision) when every candidate collides.
MarkerSpec choose_marker(const Image& original, const MarkerSpec& preferred);

/// x = 100 px / width, y = 100 py / height. Throws Error(kOutOfRange) when
/// the point lies outside [0, width] x [0, height] or a side is < 1.
std::pair<double, double> normalize_coords(double px, double py, int width, int height);

/// extract_points plus normalization.
PointAnnotation annotate_points(std::string question, const Image& edited, const MarkerSpec& marker);

}  // namespace codesynth
