// Copyright 2026 The Polaron Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "polaron/formats.hpp"

namespace polaron::suites {

/// FNV-1a over everything a suite computed; equal digests mean equal outputs.
class Digest {
 public:
  void add_u64(std::uint64_t v);
  void add_double(double v);
  void add_string(std::string_view s);
  std::uint64_t value() const { return h_; }
  std::string hex() const;

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ull;
};

struct SuiteReport {
  std::string name;
  std::int64_t cases = 0;
  std::int64_t failures = 0;
  /// First few mismatches, bit-exact.
  std::vector<std::string> counterexamples;
  std::vector<std::string> notes;
  Digest digest;

  bool passed() const { return failures == 0 && cases > 0; }
  void fail(std::string what);
};

inline constexpr std::size_t kMaxCounterexamples = 10;

/// decode -> encode round trip and value monotonicity over every bit pattern.
SuiteReport codec_roundtrip(std::span<const FormatDescriptor> formats);

/// vector_ops for `macs` multiply-accumulates in every default mode against
/// the 16:4:1 lane groups.
SuiteReport throughput(std::int64_t macs, std::uint64_t seed);

/// Exhaustive 8x8 tile products plus random 16x16 ones against integer multiplication.
SuiteReport multiplier(std::int64_t random_trials, std::uint64_t seed);

/// Random finite vectors of length 1..max_len per default mode against the
/// exact oracle rounded toward +inf.
SuiteReport dot_exact(std::int64_t trials_per_mode, std::uint64_t seed, int max_len = 64);

/// posit8: the full 256 x 256 product table plus `samples` length-2 dot
/// products drawn in canonical form (each pair ordered, pairs ordered).
SuiteReport posit8_pairs(std::int64_t samples, std::uint64_t seed);

/// Zero-skip on and off give identical bits, both accumulation modes.
SuiteReport zero_skip(std::int64_t trials_per_mode, std::uint64_t seed);

/// Exact accumulation is invariant under operand swaps and pair permutations.
SuiteReport permutation(std::int64_t trials_per_mode, std::uint64_t seed);

/// "name=... cases=... failures=... result=pass|FAIL digest=..." plus counterexamples.
std::string format_report(const SuiteReport& r);

}  // namespace polaron::suites
