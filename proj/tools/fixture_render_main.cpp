// SPDX-License-Identifier: Apache-2.0
// codesynth-fixture-render <scene.fix> <out.png>
//
// Exit codes: 0 written, 1 usage or I/O, 2 compile error, 3 `fail` directive.
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "codesynth/error.hpp"
#include "codesynth/fixture_raster.hpp"

int main(int argc, char** argv) {
  if (argc != 3) {
    std::cerr << "usage: codesynth-fixture-render <scene.fix> <out.png>\n";
    return 1;
  }
  std::ifstream in(argv[1], std::ios::binary);
  if (!in) {
    std::cerr << "cannot read " << argv[1] << "\n";
    return 1;
  }
  std::ostringstream text;
  text << in.rdbuf();

  codesynth::fixture::Scene scene;
  try {
    scene = codesynth::fixture::parse(text.str());
  } catch (const codesynth::Error& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
  if (!scene.fail_message.empty()) {
    std::cerr << "fail: " << scene.fail_message << "\n";
    return 3;
  }
  if (scene.spin) {
    for (;;) std::this_thread::sleep_for(std::chrono::seconds(1));
  }
  try {
    codesynth::write_png(argv[2], codesynth::fixture::rasterize(scene));
  } catch (const codesynth::Error& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
  return 0;
}
