// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <random>
#include <set>
#include <vector>

#include "codesynth/hashing.hpp"

using namespace codesynth;

TEST_CASE("sha256 matches published digests") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("field hashing separates field boundaries") {
  CHECK(sha256_fields({"ab", "c"}) != sha256_fields({"a", "bc"}));
  CHECK(sha256_fields({"", "x"}) != sha256_fields({"x", ""}));
  CHECK(sha256_fields({"a", "b"}) == sha256_fields({"a", "b"}));
}

TEST_CASE("mix64 is the SplitMix64 output function") {
  // First output of the reference SplitMix64 generator seeded with 0.
  CHECK(mix64(0) == 0xe220a8397b1dcdafULL);
  // Reference generator: state += golden; out = finalize(state).
  std::uint64_t state = 1234567;
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  z ^= z >> 31;
  CHECK(mix64(1234567) == z);
}

TEST_CASE("derived seeds are pure and distinct across jobs, stages and attempts") {
  CHECK(derive_job_seed(7, 3) == derive_job_seed(7, 3));
  std::set<std::uint64_t> seen;
  for (std::uint64_t job = 0; job < 200; ++job) {
    const auto js = derive_job_seed(42, job);
    for (int stage = 0; stage < 5; ++stage)
      for (int attempt = 0; attempt < 3; ++attempt) seen.insert(derive_stage_seed(js, stage, attempt));
  }
  CHECK(seen.size() == 200u * 5 * 3);
}

TEST_CASE("uniform_below stays in range and is unbiased") {
  std::mt19937_64 rng(99);
  CHECK(uniform_below(rng, 0) == 0);
  CHECK(uniform_below(rng, 1) == 0);
  // Chi-square over 7 buckets, 70k draws; critical value df=6, alpha=0.001 is 22.458.
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) {
    const auto v = uniform_below(rng, 7);
    REQUIRE(v < 7);
    ++counts[v];
  }
  double chi2 = 0;
  for (int c : counts) chi2 += (c - 10000.0) * (c - 10000.0) / 10000.0;
  CHECK(chi2 < 22.458);
}
