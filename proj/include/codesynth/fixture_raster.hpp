// SPDX-License-Identifier: Apache-2.0
#pragma once

// Declarative raster format rendered by the fixture tool. One directive per
// line; a line whose first token starts with '#' is a comment:
//
//   canvas <w> <h> <#rrggbb>      required, first directive
//   scale <k>                     integer 1..8, multiplies every coordinate
//   rect <x> <y> <w> <h> <#rrggbb>
//   disk <cx> <cy> <r> <#rrggbb>  anti-aliased (4x4 supersampling)
//   spin                          never terminates (timeout testing)
//   fail <message...>             exits nonzero with message on stderr
//
// Pixel (x, y) has its center at coordinate (x, y). Any unrecognized
// directive is a compile error; the output is a pure function of the text.

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "codesynth/image.hpp"

namespace codesynth::fixture {

struct Rect {
  double x, y, w, h;
  Rgb color;
};
struct Disk {
  double cx, cy, r;
  Rgb color;
};

struct Scene {
  int width = 0;
  int height = 0;
  Rgb background{255, 255, 255};
  int scale = 1;
  bool spin = false;
  std::string fail_message;  // non-empty when a `fail` directive was seen
  std::vector<std::variant<Rect, Disk>> shapes;
};

/// Throws Error(kCompileError) naming the offending line.
Scene parse(std::string_view source);

/// Rasterizes a parsed scene at its scale factor. Ignores spin/fail.
Image rasterize(const Scene& scene);

/// Parses "#rrggbb". Returns false on malformed input.
bool parse_hex_color(std::string_view text, Rgb& out);
std::string to_hex_color(Rgb c);

}  // namespace codesynth::fixture
