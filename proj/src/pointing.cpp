// SPDX-License-Identifier: Apache-2.0
#include "codesynth/pointing.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "codesynth/error.hpp"
#include "codesynth/fixture_raster.hpp"
#include "codesynth/hashing.hpp"
#include "codesynth/parsers.hpp"

namespace codesynth {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

// First line (outside any fence) that starts with "Question:".
std::optional<std::string> find_question(std::string_view text) {
  bool in_fence = false;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string line = trim(text.substr(pos, end - pos));
    if (line.rfind("```", 0) == 0) {
      in_fence = !in_fence;
    } else if (!in_fence) {
      std::string body = line;
      for (std::string_view lead : {"**Question:**", "Question:"}) {
        if (body.rfind(lead, 0) == 0) {
          body = trim(std::string_view(body).substr(lead.size()));
          if (!body.empty()) return body;
        }
      }
    }
    pos = end + 1;
  }
  return std::nullopt;
}

}  // namespace

void MarkerSpec::validate() const {
  if (!(match_tolerance >= 0.0) || !std::isfinite(match_tolerance)) {
    throw Error(ErrorCode::kInvalidArgument, "marker tolerance must be >= 0");
  }
  if (min_component_area < 1) throw Error(ErrorCode::kInvalidArgument, "min component area must be >= 1");
}

bool MarkerSpec::matches(Rgb c) const noexcept {
  return static_cast<double>(rgb_distance_sq(c, color)) <= match_tolerance * match_tolerance;
}

const std::vector<Rgb>& marker_palette() {
  static const std::vector<Rgb> palette{{255, 0, 255}, {0, 255, 255}, {255, 128, 0}};
  return palette;
}

PointEdit generate_point_edit(const CodeArtifact& code, const MarkerSpec& marker, const PointEditContext& context,
                              const PromptTemplate& tpl, const StageModel& model, Gateway& gateway) {
  marker.validate();
  LlmRequest request;
  request.provider_id = model.provider_id;
  request.model_id = model.model_id;
  request.prompt = render_template(tpl, {{"PERSONA", context.persona},
                                         {"TOPIC", context.topic},
                                         {"FIGURE_TYPE", context.figure_type},
                                         {"CODE", code.source},
                                         {"MARKER_COLOR", fixture::to_hex_color(marker.color)}});
  request.temperature = model.temperature;
  request.top_p = model.top_p;
  request.sampling_seed = context.sampling_seed;
  request.stage = Stage::kPointEdit;

  LlmResponse response = gateway.complete(request);
  auto question = find_question(response.text);
  if (!question) throw Error(ErrorCode::kMalformedPayload, "point-edit response has no 'Question:' line");
  CodeBlock block = extract_code_block(response.text, fence_tag(code.tool));
  CodeArtifact edited{std::move(block.source), code.tool, std::move(block.tag), block.tag_mismatch};
  return {std::move(*question), sha256_hex(request.prompt), std::move(edited), std::move(response)};
}

std::vector<PixelPoint> extract_points(const Image& img, const MarkerSpec& marker) {
  marker.validate();
  const int w = img.width, h = img.height;
  const std::size_t n = static_cast<std::size_t>(w) * h;
  std::vector<std::uint8_t> mask(n, 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) mask[static_cast<std::size_t>(y) * w + x] = marker.matches(img.rgb_at(x, y));

  // Flood fill with an explicit stack; integer sums keep centroids exact and
  // independent of visit order.
  std::vector<std::uint8_t> seen(n, 0);
  std::vector<int> stack;
  std::vector<PixelPoint> points;
  for (std::size_t start = 0; start < n; ++start) {
    if (!mask[start] || seen[start]) continue;
    long long sx = 0, sy = 0;
    int area = 0;
    seen[start] = 1;
    stack.assign(1, static_cast<int>(start));
    while (!stack.empty()) {
      const int p = stack.back();
      stack.pop_back();
      const int px = p % w, py = p / w;
      sx += px;
      sy += py;
      ++area;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int qx = px + dx, qy = py + dy;
          if ((dx == 0 && dy == 0) || qx < 0 || qy < 0 || qx >= w || qy >= h) continue;
          const std::size_t q = static_cast<std::size_t>(qy) * w + qx;
          if (mask[q] && !seen[q]) {
            seen[q] = 1;
            stack.push_back(static_cast<int>(q));
          }
        }
      }
    }
    if (area >= marker.min_component_area) {
      points.push_back({static_cast<double>(sx) / area, static_cast<double>(sy) / area, area});
    }
  }
  if (points.empty()) throw Error(ErrorCode::kZeroMarkersFound, "no marker-colored component in the edited render");
  std::sort(points.begin(), points.end(),
            [](const PixelPoint& a, const PixelPoint& b) { return std::tie(a.y, a.x) < std::tie(b.y, b.x); });
  return points;
}

bool marker_collides(const Image& img, const MarkerSpec& marker) {
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      if (marker.matches(img.rgb_at(x, y))) return true;
  return false;
}

MarkerSpec choose_marker(const Image& original, const MarkerSpec& preferred) {
  std::vector<Rgb> candidates{preferred.color};
  for (const Rgb& c : marker_palette())
    if (c != preferred.color) candidates.push_back(c);
  for (const Rgb& c : candidates) {
    MarkerSpec m = preferred;
    m.color = c;
    if (!marker_collides(original, m)) return m;
  }
  throw Error(ErrorCode::kMarkerCollision, "every marker color already appears in the original render");
}

std::pair<double, double> normalize_coords(double px, double py, int width, int height) {
  if (width < 1 || height < 1) throw Error(ErrorCode::kOutOfRange, "image side must be >= 1");
  if (!(px >= 0.0 && px <= width && py >= 0.0 && py <= height)) {
    throw Error(ErrorCode::kOutOfRange, "point outside the image");
  }
  const double x = std::clamp(100.0 * px / width, 0.0, 100.0);
  const double y = std::clamp(100.0 * py / height, 0.0, 100.0);
  return {x, y};
}

PointAnnotation annotate_points(std::string question, const Image& edited, const MarkerSpec& marker) {
  PointAnnotation a;
  a.question = std::move(question);
  a.pixel_points = extract_points(edited, marker);
  a.width = edited.width;
  a.height = edited.height;
  a.marker = marker.color;
  for (const auto& p : a.pixel_points) a.points.push_back(normalize_coords(p.x, p.y, edited.width, edited.height));
  return a;
}

}  // namespace codesynth
