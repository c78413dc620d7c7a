// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace codesynth {

struct Persona {
  std::size_t id = 0;
  std::string text;
};

/// Immutable persona corpus. Ids are dense line-order indices over the
/// non-blank lines of the source file.
class PersonaStore {
 public:
  /// Throws Error(kEmptyCorpus) when `texts` holds no non-blank entry.
  explicit PersonaStore(std::vector<std::string> texts);

  std::size_t size() const noexcept { return personas_.size(); }
  const Persona& at(std::size_t id) const { return personas_.at(id); }
  const std::vector<Persona>& all() const noexcept { return personas_; }

 private:
  std::vector<Persona> personas_;
};

/// One persona per line, UTF-8. Blank lines are skipped, surrounding
/// whitespace trimmed. Throws Error(kIoError) or Error(kEmptyCorpus).
PersonaStore load_personas(const std::filesystem::path& path);

/// Uniform draw over the store, a pure function of (store, seed).
const Persona& sample_persona(const PersonaStore& store, std::uint64_t seed);

}  // namespace codesynth
