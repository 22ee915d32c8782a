// Copyright 2026 The Polaron Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <gmpxx.h>

#include <span>
#include <string>

#include "polaron/formats.hpp"

namespace polaron::oracle {

/// Exact dyadic rational: numerator * 2^exponent, numerator odd unless zero.
class RationalAcc {
 public:
  RationalAcc() = default;
  RationalAcc(mpz_class numerator, long exponent);
  static RationalAcc from_exact(const ExactReal& x);
  static RationalAcc from_decoded(const EncodedScalar& s);

  const mpz_class& numerator() const { return num_; }
  long exponent() const { return exp_; }
  int sign() const { return sgn(num_); }
  bool is_zero() const { return num_ == 0; }

  RationalAcc operator+(const RationalAcc& o) const;
  RationalAcc operator-(const RationalAcc& o) const;
  RationalAcc operator*(const RationalAcc& o) const;
  RationalAcc operator-() const { return RationalAcc(-num_, exp_); }
  friend int compare(const RationalAcc& a, const RationalAcc& b);
  friend bool operator==(const RationalAcc& a, const RationalAcc& b) { return compare(a, b) == 0; }
  friend bool operator<(const RationalAcc& a, const RationalAcc& b) { return compare(a, b) < 0; }
  friend bool operator<=(const RationalAcc& a, const RationalAcc& b) { return compare(a, b) <= 0; }

  /// "num*2^exp" in decimal.
  std::string to_string() const;

 private:
  void normalize();
  mpz_class num_ = 0;
  long exp_ = 0;
};

RationalAcc oracle_dot(std::span<const ExactReal> a, std::span<const ExactReal> b);
/// Decodes finite scalars and forwards to the exact dot product.
RationalAcc oracle_dot(std::span<const EncodedScalar> a, std::span<const EncodedScalar> b);

/// Correct rounding by searching the sorted table of every finite value of
/// the format (built from decode). Overflow, zero-sign and never-to-zero
/// posit rules are stated here explicitly rather than shared with encode.
EncodedScalar oracle_round(const RationalAcc& x, const FormatDescriptor& f, RoundingMode mode,
                           bool negative_zero_hint = false);

}  // namespace polaron::oracle
