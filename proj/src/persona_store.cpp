// SPDX-License-Identifier: Apache-2.0
#include "codesynth/persona_store.hpp"

#include <fstream>
#include <random>

#include "codesynth/error.hpp"
#include "codesynth/hashing.hpp"

namespace codesynth {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

PersonaStore::PersonaStore(std::vector<std::string> texts) {
  personas_.reserve(texts.size());
  for (auto& t : texts) {
    std::string clean = trim(t);
    if (clean.empty()) continue;
    personas_.push_back(Persona{personas_.size(), std::move(clean)});
  }
  if (personas_.empty()) throw Error(ErrorCode::kEmptyCorpus, "persona corpus has no entries");
}

PersonaStore load_personas(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open persona corpus " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(std::move(line));
  if (in.bad()) throw Error(ErrorCode::kIoError, "read failed on " + path.string());
  return PersonaStore(std::move(lines));
}

const Persona& sample_persona(const PersonaStore& store, std::uint64_t seed) {
  if (store.size() == 0) throw Error(ErrorCode::kEmptyStore, "cannot sample from an empty store");
  std::mt19937_64 engine(mix64(seed));
  return store.at(static_cast<std::size_t>(uniform_below(engine, store.size())));
}

}  // namespace codesynth
