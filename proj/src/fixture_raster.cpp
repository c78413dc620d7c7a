// SPDX-License-Identifier: Apache-2.0
#include "codesynth/fixture_raster.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "codesynth/error.hpp"

namespace codesynth::fixture {
namespace {

constexpr int kMaxSide = 16384;

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

[[noreturn]] void bad(int line_no, const std::string& why) {
  throw Error(ErrorCode::kCompileError, "line " + std::to_string(line_no) + ": " + why);
}

double number(std::string_view tok, int line_no) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size() || !std::isfinite(v)) {
    bad(line_no, "expected number, got '" + std::string(tok) + "'");
  }
  return v;
}

int integer(std::string_view tok, int line_no) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
    bad(line_no, "expected integer, got '" + std::string(tok) + "'");
  }
  return v;
}

Rgb color(std::string_view tok, int line_no) {
  Rgb c{};
  if (!parse_hex_color(tok, c)) bad(line_no, "expected #rrggbb, got '" + std::string(tok) + "'");
  return c;
}

std::uint8_t blend(std::uint8_t bg, std::uint8_t fg, double a) {
  return static_cast<std::uint8_t>(std::lround(bg * (1.0 - a) + fg * a));
}

}  // namespace

bool parse_hex_color(std::string_view text, Rgb& out) {
  if (text.size() != 7 || text[0] != '#') return false;
  for (int i = 0; i < 3; ++i) {
    unsigned v = 0;
    auto s = text.substr(1 + 2 * i, 2);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + 2, v, 16);
    if (ec != std::errc{} || ptr != s.data() + 2) return false;
    out[i] = static_cast<std::uint8_t>(v);
  }
  return true;
}

std::string to_hex_color(Rgb c) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string s = "#";
  for (auto v : c) {
    s.push_back(kHex[v >> 4]);
    s.push_back(kHex[v & 0xf]);
  }
  return s;
}

Scene parse(std::string_view source) {
  Scene scene;
  bool have_canvas = false;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= source.size()) {
    std::size_t nl = source.find('\n', pos);
    if (nl == std::string_view::npos) nl = source.size();
    std::string_view line = source.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    auto tok = split_ws(line);
    if (tok.empty() || tok[0].front() == '#') continue;
    const std::string_view op = tok[0];

    if (op == "canvas") {
      if (tok.size() != 4) bad(line_no, "canvas takes <w> <h> <#rrggbb>");
      scene.width = integer(tok[1], line_no);
      scene.height = integer(tok[2], line_no);
      if (scene.width < 1 || scene.height < 1 || scene.width > kMaxSide || scene.height > kMaxSide) {
        bad(line_no, "canvas size out of range");
      }
      scene.background = color(tok[3], line_no);
      have_canvas = true;
    } else if (!have_canvas && op != "spin" && op != "fail") {
      bad(line_no, "'" + std::string(op) + "' before canvas");
    } else if (op == "scale") {
      if (tok.size() != 2) bad(line_no, "scale takes <k>");
      scene.scale = integer(tok[1], line_no);
      if (scene.scale < 1 || scene.scale > 8) bad(line_no, "scale must be 1..8");
    } else if (op == "rect") {
      if (tok.size() != 6) bad(line_no, "rect takes <x> <y> <w> <h> <#rrggbb>");
      scene.shapes.emplace_back(Rect{number(tok[1], line_no), number(tok[2], line_no), number(tok[3], line_no),
                                     number(tok[4], line_no), color(tok[5], line_no)});
    } else if (op == "disk") {
      if (tok.size() != 5) bad(line_no, "disk takes <cx> <cy> <r> <#rrggbb>");
      Disk d{number(tok[1], line_no), number(tok[2], line_no), number(tok[3], line_no), color(tok[4], line_no)};
      if (d.r <= 0) bad(line_no, "disk radius must be positive");
      scene.shapes.emplace_back(d);
    } else if (op == "spin") {
      scene.spin = true;
    } else if (op == "fail") {
      std::string msg;
      for (std::size_t i = 1; i < tok.size(); ++i) {
        if (i > 1) msg += ' ';
        msg += tok[i];
      }
      scene.fail_message = msg.empty() ? "fail" : msg;
    } else {
      bad(line_no, "unknown directive '" + std::string(op) + "'");
    }
  }
  if (!have_canvas && !scene.spin && scene.fail_message.empty()) bad(line_no, "missing canvas directive");
  if (have_canvas && (static_cast<long>(scene.width) * scene.scale > kMaxSide ||
                      static_cast<long>(scene.height) * scene.scale > kMaxSide)) {
    bad(line_no, "scaled canvas exceeds maximum side");
  }
  return scene;
}

Image rasterize(const Scene& scene) {
  const double k = scene.scale;
  Image img(scene.width * scene.scale, scene.height * scene.scale, scene.background);
  for (const auto& shape : scene.shapes) {
    if (const auto* r = std::get_if<Rect>(&shape)) {
      const int x0 = std::max(0, static_cast<int>(std::lround(r->x * k)));
      const int y0 = std::max(0, static_cast<int>(std::lround(r->y * k)));
      const int x1 = std::min(img.width, static_cast<int>(std::lround((r->x + r->w) * k)));
      const int y1 = std::min(img.height, static_cast<int>(std::lround((r->y + r->h) * k)));
      for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) img.set_rgb(x, y, r->color);
    } else {
      const auto& d = std::get<Disk>(shape);
      const double cx = d.cx * k, cy = d.cy * k, rad = d.r * k;
      const int x0 = std::max(0, static_cast<int>(std::floor(cx - rad - 1)));
      const int y0 = std::max(0, static_cast<int>(std::floor(cy - rad - 1)));
      const int x1 = std::min(img.width - 1, static_cast<int>(std::ceil(cx + rad + 1)));
      const int y1 = std::min(img.height - 1, static_cast<int>(std::ceil(cy + rad + 1)));
      constexpr int kSub = 4;
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          int hits = 0;
          for (int sy = 0; sy < kSub; ++sy) {
            for (int sx = 0; sx < kSub; ++sx) {
              const double px = x - 0.5 + (sx + 0.5) / kSub;
              const double py = y - 0.5 + (sy + 0.5) / kSub;
              if ((px - cx) * (px - cx) + (py - cy) * (py - cy) <= rad * rad) ++hits;
            }
          }
          if (hits == 0) continue;
          const double a = static_cast<double>(hits) / (kSub * kSub);
          const Rgb bg = img.rgb_at(x, y);
          img.set_rgb(x, y, {blend(bg[0], d.color[0], a), blend(bg[1], d.color[1], a), blend(bg[2], d.color[2], a)});
        }
      }
    }
  }
  return img;
}

}  // namespace codesynth::fixture
