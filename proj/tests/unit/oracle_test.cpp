// Copyright 2026 The Polaron Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "polaron/golden_oracle.hpp"
#include "polaron/wide_int.hpp"

using namespace polaron;
using polaron::oracle::RationalAcc;

namespace {

mpz_class to_mpz(const WideInt& w) {
  const WideInt m = w.abs();
  mpz_class z;
  mpz_import(z.get_mpz_t(), WideInt::kLimbs, -1, sizeof(std::uint64_t), 0, 0, m.limbs().data());
  return w.is_negative() ? mpz_class(-z) : z;
}

RationalAcc rat(long num, long exp) { return RationalAcc(mpz_class(num), exp); }

// Random dyadic rational spread around the format's dynamic range.
RationalAcc random_rational(std::mt19937_64& rng, const FormatDescriptor& f) {
  const int bits = 1 + static_cast<int>(rng() % 40);
  mpz_class n = static_cast<unsigned long>(rng() >> (64 - bits));
  if (rng() & 1) n = -n;
  const int lo = f.min_scale() - f.sig_width() - 6 - bits;
  const int hi = f.max_scale() + 4 - bits;
  const long e = lo + static_cast<long>(rng() % static_cast<unsigned>(hi - lo + 1));
  return RationalAcc(n, e);
}

ExactReal to_exact(const RationalAcc& r) {
  // Only for values whose numerator fits 64 bits.
  const mpz_class m = abs(r.numerator());
  return ExactReal{r.sign() < 0, m.get_ui(), static_cast<int>(r.exponent())};
}

}  // namespace

TEST(RationalAcc, NormalizesToOddNumerator) {
  const RationalAcc r(mpz_class(12), 0);
  EXPECT_EQ(r.numerator(), 3);
  EXPECT_EQ(r.exponent(), 2);
  EXPECT_EQ(RationalAcc(mpz_class(0), 9).exponent(), 0);
}

TEST(RationalAcc, ArithmeticAndOrdering) {
  EXPECT_EQ(rat(3, -3) + rat(1, -1), rat(7, -3));
  EXPECT_EQ(rat(3, -3) * rat(-1, 1), rat(-3, -2));
  EXPECT_LT(rat(-1, 10), rat(1, -10));
  EXPECT_LT(rat(1, -10), rat(3, -10));
  EXPECT_EQ(compare(rat(5, 0), rat(5, 0)), 0);
}

TEST(OracleDot, HandExamples) {
  EXPECT_TRUE(oracle::oracle_dot(std::span<const ExactReal>{}, std::span<const ExactReal>{}).is_zero());
  const ExactReal x{true, 7, -5};
  const std::vector<ExactReal> one = {{false, 1, 0}};
  const std::vector<ExactReal> xs = {x};
  EXPECT_EQ(oracle::oracle_dot(one, xs), RationalAcc::from_exact(x));
  const std::vector<ExactReal> a = {{false, 3, -3}, {true, 1, -1}};
  const std::vector<ExactReal> b = {{false, 2, 0}, {false, 4, 0}};
  EXPECT_EQ(oracle::oracle_dot(a, b), rat(-5, -2));
}

TEST(OracleRound, RepresentableValuesMapToThemselves) {
  for (const auto& f : all_default_formats()) {
    for (std::uint32_t b = 0; b <= f.mask(); ++b) {
      const EncodedScalar s(b, f);
      const Decoded d = decode(s);
      if (!d.is_finite() || d.value.is_zero()) continue;
      ASSERT_EQ(oracle::oracle_round(RationalAcc::from_exact(d.value), f, RoundingMode::NearestEven), s);
    }
  }
}

TEST(OracleRound, MidpointGoesToEvenMantissa) {
  const auto f = FormatDescriptor::fp8_e4m3();
  EXPECT_EQ(oracle::oracle_round(rat(17, -4), f, RoundingMode::NearestEven).bits(), 0x38u);
  EXPECT_EQ(oracle::oracle_round(rat(19, -4), f, RoundingMode::NearestEven).bits(), 0x3Au);
}

TEST(OracleRound, AgreesWithEncodeOnRandomRationals) {
  std::mt19937_64 rng(11);
  for (const auto& f : all_default_formats()) {
    for (int i = 0; i < 10000; ++i) {
      const RationalAcc r = random_rational(rng, f);
      const ExactReal x = to_exact(r);
      for (auto mode : {RoundingMode::NearestEven, RoundingMode::TowardPositive}) {
        ASSERT_EQ(oracle::oracle_round(r, f, mode), encode(x, f, mode))
            << f.name() << " " << r.to_string() << " mode " << static_cast<int>(mode);
      }
    }
  }
}

TEST(OracleRound, AgreesWithEncodeAroundEveryEightBitMidpoint) {
  for (const auto& f : all_default_formats()) {
    if (f.total_bits != 8 && f.total_bits != 4) continue;
    std::vector<RationalAcc> values;
    for (std::uint32_t b = 0; b <= f.mask(); ++b) {
      const Decoded d = decode(EncodedScalar(b, f));
      if (d.is_finite()) values.push_back(RationalAcc::from_exact(d.value));
    }
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    for (std::size_t i = 0; i + 1 < values.size(); ++i) {
      const RationalAcc gap = values[i + 1] - values[i];
      const RationalAcc mid = values[i] + RationalAcc(gap.numerator(), gap.exponent() - 1);
      const RationalAcc eps(gap.numerator(), gap.exponent() - 20);
      for (const RationalAcc& x : {mid, mid + eps, mid - eps}) {
        for (auto mode : {RoundingMode::NearestEven, RoundingMode::TowardPositive}) {
          ASSERT_EQ(oracle::oracle_round(x, f, mode), encode(to_exact(x), f, mode))
              << f.name() << " " << x.to_string();
        }
      }
    }
  }
}

TEST(OracleRound, PackNormalizeRoundIsTowardPositive) {
  // Random accumulator states across the full quire/Kulisch/FxP ranges.
  std::mt19937_64 rng(5);
  for (const auto& f : all_default_formats()) {
    int lsb;
    int width;
    if (f.is_posit()) {
      lsb = -2 * f.max_scale();
      width = 4 * f.max_scale() + 32;
    } else if (f.is_fxp()) {
      lsb = -2 * f.frac_bits;
      width = 2 * f.total_bits + 32;
    } else {
      lsb = 2 * (f.min_scale() - f.sig_width() + 1);
      width = 2 * (f.max_scale() - f.min_scale()) + 2 * f.sig_width() + 32;
    }
    for (int i = 0; i < 10000; ++i) {
      const int len = 1 + static_cast<int>(rng() % (width - 1));
      const int low = std::max(0, len - 1 - static_cast<int>(rng() % 80));
      WideInt w;
      for (int pos = low; pos < len; pos += 60)
        w |= WideInt::from_uint64_shifted(rng() & ((std::uint64_t{1} << 60) - 1), pos);
      w &= WideInt::from_int64(1).shl(len) - WideInt::from_int64(1);
      if (rng() & 1) w = -w;
      const RationalAcc exact(to_mpz(w), lsb);
      const EncodedScalar got = pack_normalize_round(w, lsb, f).scalar;
      const EncodedScalar want = oracle::oracle_round(exact, f, RoundingMode::TowardPositive);
      ASSERT_EQ(got, want) << f.name() << " " << exact.to_string();
    }
  }
}
