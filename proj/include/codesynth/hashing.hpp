// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>

namespace codesynth {

/// Lower-case hex SHA-256 of `bytes`.
std::string sha256_hex(std::string_view bytes);

/// SHA-256 over a field list. Each field is length-prefixed (8-byte
/// little-endian) so that no two distinct field tuples share an encoding.
std::string sha256_fields(std::initializer_list<std::string_view> fields);

/// SplitMix64 finalizer. Used for every derived seed in the engine.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// job_seed = mix64(query_seed ^ mix64(job_index)).
constexpr std::uint64_t derive_job_seed(std::uint64_t query_seed, std::uint64_t job_index) noexcept {
  return mix64(query_seed ^ mix64(job_index));
}

/// Seed for a (stage, attempt) request inside a job. Attempt 0 of every stage
/// is distinct, and each retry gets a fresh offset.
constexpr std::uint64_t derive_stage_seed(std::uint64_t job_seed, int stage_index, int attempt) noexcept {
  return mix64(job_seed + 0x100000001b3ULL * static_cast<std::uint64_t>(stage_index + 1) +
               static_cast<std::uint64_t>(attempt));
}

/// Uniform integer in [0, bound) from a 64-bit generator, by rejection.
/// Platform independent, unlike std::uniform_int_distribution.
template <typename Engine>
std::uint64_t uniform_below(Engine& engine, std::uint64_t bound) {
  if (bound == 0) return 0;
  // 2^64 mod bound; values below it would bias the low residues.
  const std::uint64_t threshold = (0 - bound) % bound;
  while (true) {
    const std::uint64_t v = engine();
    if (v >= threshold) return v % bound;
  }
}

}  // namespace codesynth
