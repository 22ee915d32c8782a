// Copyright 2026 The Polaron Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "polaron/golden_oracle.hpp"
#include "polaron/mac_engine.hpp"
#include "polaron/parallel.hpp"

using namespace polaron;
using polaron::oracle::RationalAcc;

namespace {

mpz_class to_mpz(const WideInt& w) {
  const WideInt m = w.abs();
  mpz_class z;
  mpz_import(z.get_mpz_t(), WideInt::kLimbs, -1, sizeof(std::uint64_t), 0, 0, m.limbs().data());
  return w.is_negative() ? mpz_class(-z) : z;
}

EncodedScalar S(std::uint32_t bits, const FormatDescriptor& f) { return EncodedScalar(bits, f); }

// Random finite pattern; one in `zero_every` draws is zero.
EncodedScalar random_finite(std::mt19937_64& rng, const FormatDescriptor& f, int zero_every = 8) {
  if (zero_every > 0 && rng() % zero_every == 0) return S(0, f);
  for (;;) {
    const EncodedScalar s(static_cast<std::uint32_t>(rng()) & f.mask(), f);
    if (decode(s).is_finite()) return s;
  }
}

std::vector<EncodedScalar> random_vector(std::mt19937_64& rng, const FormatDescriptor& f, std::size_t n) {
  std::vector<EncodedScalar> v;
  for (std::size_t i = 0; i < n; ++i) v.push_back(random_finite(rng, f));
  return v;
}

EncodedScalar oracle_dot_rounded(const std::vector<EncodedScalar>& a, const std::vector<EncodedScalar>& b,
                                 const FormatDescriptor& out) {
  return oracle::oracle_round(oracle::oracle_dot(a, b), out, RoundingMode::TowardPositive);
}

}  // namespace

TEST(PrecisionMode, LaneTable) {
  const std::vector<std::pair<FormatDescriptor, int>> table = {
      {FormatDescriptor::fxp(4), 16},         {FormatDescriptor::fp8_e4m3(), 16},
      {FormatDescriptor::fp8_e5m2(), 16},     {FormatDescriptor::fxp(8), 4},
      {FormatDescriptor::posit(8), 4},        {FormatDescriptor::bf16(), 4},
      {FormatDescriptor::fxp(16), 1},         {FormatDescriptor::fp16_e5m10(), 1},
      {FormatDescriptor::fp16_e6m9(), 1},     {FormatDescriptor::posit(16), 1}};
  for (const auto& [f, lanes] : table) {
    const PrecisionMode m = PrecisionMode::for_format(f);
    EXPECT_EQ(m.lanes, lanes) << f.name();
    const int d = (f.sig_width() + 3) / 4;
    EXPECT_EQ(m.tiles_per_lane, d * d);
    EXPECT_EQ(m.lanes, 16 / m.tiles_per_lane);
    EXPECT_LE(m.lanes * f.total_bits, 128);
  }
}

TEST(VectorWord, LaneLayoutAndHex) {
  const auto mode = PrecisionMode::for_format(FormatDescriptor::fxp(4));
  std::vector<EncodedScalar> lanes;
  for (std::uint32_t i = 0; i < 16; ++i) lanes.push_back(S(i, mode.format));
  const VectorWord w = VectorWord::pack(lanes, mode);
  EXPECT_EQ(w.payload()[0], 0xFEDCBA9876543210ull);
  EXPECT_EQ(w.payload()[1], 0u);
  EXPECT_EQ(w.to_hex(), "0xFEDCBA9876543210");
  EXPECT_EQ(VectorWord::from_hex("fedcba9876543210", mode).payload(), w.payload());
  for (int i = 0; i < 16; ++i) EXPECT_EQ(w.lane(i).bits(), static_cast<std::uint32_t>(i));
  const auto bf = PrecisionMode::for_format(FormatDescriptor::bf16());
  EXPECT_THROW(VectorWord::from_hex("1" + std::string(16, '0'), bf), ConfigError);
}

TEST(Booth, ExhaustiveAgainstIntegerProduct) {
  for (int a = -8; a <= 7; ++a)
    for (int b = -8; b <= 7; ++b) ASSERT_EQ(booth_multiply_4x4(a, b), a * b) << a << "*" << b;
  EXPECT_EQ(booth_multiply_4x4(0, 5), 0);
  EXPECT_EQ(booth_multiply_4x4(1, -3), -3);
  EXPECT_EQ(booth_multiply_4x4(-8, 7), -56);
  EXPECT_THROW(booth_multiply_4x4(8, 1), std::invalid_argument);
}

TEST(TileMultiply, ExhaustiveWidthEightAndFour) {
  for (std::uint32_t a = 0; a < 256; ++a)
    for (std::uint32_t b = 0; b < 256; ++b) ASSERT_EQ(tile_multiply(a, b, 8), a * b);
  for (std::uint32_t a = 0; a < 16; ++a)
    for (std::uint32_t b = 0; b < 16; ++b) ASSERT_EQ(tile_multiply(a, b, 4), a * b);
}

TEST(TileMultiply, RandomWideOperands) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 200000; ++i) {
    const auto a = static_cast<std::uint32_t>(rng() & 0xFFFF);
    const auto b = static_cast<std::uint32_t>(rng() & 0xFFFF);
    ASSERT_EQ(tile_multiply(a, b, 16), static_cast<std::uint64_t>(a) * b);
    ASSERT_EQ(tile_multiply(a & 0xFFF, b & 0xFFF, 12), (a & 0xFFF) * (b & 0xFFF));
  }
  EXPECT_EQ(tile_multiply(0xFF, 0xFF, 8), 0xFE01u);
  EXPECT_EQ(tile_multiply(0xFFFF, 0xFFFF, 16), 0xFFFE0001u);
  EXPECT_EQ(tile_multiply(1, 0xBEEF, 16), 0xBEEFu);
  EXPECT_THROW(tile_multiply(0x100, 1, 8), std::invalid_argument);
}

TEST(LaneMultiply, ProductsAndSpecials) {
  const auto f = FormatDescriptor::fp8_e4m3();
  const auto mode = PrecisionMode::for_format(f);
  const LaneProduct p = lane_multiply(unpack(S(0x44, f)), unpack(S(0x40, f)), mode);
  EXPECT_FALSE(p.negative);
  EXPECT_EQ(std::ldexp(static_cast<double>(p.sig), p.lsb_exponent), 6.0);
  EXPECT_EQ(p.product_scale, 2);

  const auto p8 = FormatDescriptor::posit(8);
  const auto pm = PrecisionMode::for_format(p8);
  EXPECT_TRUE(lane_multiply(unpack(S(0x80, p8)), unpack(S(0x40, p8)), pm).is_nan);
  const LaneProduct one = lane_multiply(unpack(S(0x40, p8)), unpack(S(0x5A, p8)), pm);
  EXPECT_EQ(std::ldexp(static_cast<double>(one.sig), one.lsb_exponent), decode(S(0x5A, p8)).to_double());

  const auto h = FormatDescriptor::fp16_e5m10();
  const auto hm = PrecisionMode::for_format(h);
  EXPECT_TRUE(lane_multiply(unpack(S(0x7C00, h)), unpack(S(0x0000, h)), hm).is_nan);
  const LaneProduct inf = lane_multiply(unpack(S(0x7C00, h)), unpack(S(0xBC00, h)), hm);
  EXPECT_TRUE(inf.is_inf);
  EXPECT_TRUE(inf.negative);
}

TEST(ExponentMaxAlign, ShiftsAndJamsLowerProducts) {
  LaneProduct a{false, 0xB5, 3, -4};
  LaneProduct b{true, 0xC7, 0, -7};
  const std::vector<LaneProduct> single = {a};
  const AlignedProducts s = exponent_max_align(single, 0);
  EXPECT_EQ(s.aligned[0].low_int64(), 0xB5);
  const std::vector<LaneProduct> equal = {a, a};
  EXPECT_EQ(exponent_max_align(equal, 0).aligned[1].low_int64(), 0xB5);

  const std::vector<LaneProduct> two = {a, b};
  const AlignedProducts al = exponent_max_align(two, 0);
  EXPECT_EQ(al.max_scale, 3);
  EXPECT_EQ(al.anchor_lsb, -4);
  // -0xC7 >> 3 = floor(-24.875) = -25, with a jammed sticky bit -> -25 | 1.
  EXPECT_EQ(al.aligned[1].low_int64(), -25);
  const double exact = 0xB5 * std::ldexp(1.0, -4) - 0xC7 * std::ldexp(1.0, -7);
  const double got = (al.aligned[0] + al.aligned[1]).to_double() * std::ldexp(1.0, al.anchor_lsb);
  EXPECT_LT(std::fabs(got - exact), std::ldexp(1.0, -4));

  // Shift beyond the register leaves only the sticky bit.
  LaneProduct tiny{false, 1, -2000, -2000};
  const std::vector<LaneProduct> far = {a, tiny};
  EXPECT_EQ(exponent_max_align(far, 0).aligned[1].low_int64(), 1);
  tiny.negative = true;
  const std::vector<LaneProduct> far_neg = {a, tiny};
  EXPECT_EQ(exponent_max_align(far_neg, 0).aligned[1].low_int64(), -1);
}

TEST(CsaReduce, ExactSums) {
  const std::vector<WideInt> one = {WideInt::from_int64(-77)};
  EXPECT_EQ(csa_reduce(one).low_int64(), -77);
  std::vector<WideInt> cancel;
  for (int i = 0; i < 4; ++i) cancel.push_back(WideInt::from_int64(i % 2 ? -1 : 1));
  EXPECT_TRUE(csa_reduce(cancel).is_zero());
  EXPECT_TRUE(csa_reduce({}).is_zero());

  std::mt19937_64 rng(2);
  for (int t = 0; t < 100000; ++t) {
    const std::size_t n = 1 + rng() % 16;
    std::vector<WideInt> v;
    __int128 want = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::int64_t x = static_cast<std::int64_t>(rng() % (1u << 24)) - (1 << 23);
      v.push_back(WideInt::from_int64(x));
      want += x;
    }
    ASSERT_EQ(csa_reduce(v).low_int64(), static_cast<std::int64_t>(want));
  }
}

TEST(CsaReduce, TraceShowsCompressorLayers) {
  std::vector<WideInt> v(16, WideInt::from_int64(3));
  CsaTrace trace;
  EXPECT_EQ(csa_reduce(v, &trace).low_int64(), 48);
  ASSERT_EQ(trace.lines.size(), 4u);
  EXPECT_EQ(trace.lines[0], "csa layer=0 in=16 out=8");
  EXPECT_EQ(trace.lines[2], "csa layer=2 in=4 out=2");
  EXPECT_EQ(trace.lines[3], "csla sum=0x30");
}

TEST(SimdMacStep, ZeroVectorLeavesAccumulator) {
  const auto cfg = MacConfig::make(FormatDescriptor::posit(8));
  const WideAccumulator acc = WideAccumulator::for_config(cfg);
  const VectorWord zero(cfg.mode);
  StepReport rep;
  const WideAccumulator out = simd_mac_step(zero, zero, acc, cfg, &rep);
  EXPECT_TRUE(out.value.is_zero());
  EXPECT_EQ(rep.skipped_lanes, cfg.mode.lanes);
}

TEST(SimdMacStep, OneTimesOneIsExact) {
  const auto f = FormatDescriptor::posit(8);
  const auto cfg = MacConfig::make(f);
  VectorWord a(cfg.mode);
  a.set_lane(0, S(0x40, f));
  const WideAccumulator out = simd_mac_step(a, a, WideAccumulator::for_config(cfg), cfg);
  EXPECT_EQ(read_accumulator(out, f).bits(), 0x40u);
  EXPECT_EQ(out.value, WideInt::from_int64(1).shl(-out.unit_scale));
}

TEST(SimdMacStep, FxpFourMatchesIntegerDot) {
  const auto f = FormatDescriptor::fxp(4, 2);
  const auto cfg = MacConfig::make(f);
  std::mt19937_64 rng(4);
  for (int t = 0; t < 1000; ++t) {
    VectorWord a(cfg.mode), b(cfg.mode);
    std::int64_t want = 0;
    for (int i = 0; i < 16; ++i) {
      const auto x = static_cast<std::uint32_t>(rng() & 0xF);
      const auto y = static_cast<std::uint32_t>(rng() & 0xF);
      a.set_lane(i, S(x, f));
      b.set_lane(i, S(y, f));
      want += (x >= 8 ? int(x) - 16 : int(x)) * (y >= 8 ? int(y) - 16 : int(y));
    }
    const WideAccumulator out = simd_mac_step(a, b, WideAccumulator::for_config(cfg), cfg);
    ASSERT_EQ(out.unit_scale, -4);
    ASSERT_EQ(out.value.low_int64(), want);
  }
}

TEST(SimdMacStep, RejectsMismatchedModes) {
  const auto cfg = MacConfig::make(FormatDescriptor::posit(8));
  const VectorWord other(PrecisionMode::for_format(FormatDescriptor::bf16()));
  EXPECT_THROW(simd_mac_step(other, other, WideAccumulator::for_config(cfg), cfg), ConfigError);
  EXPECT_THROW(MacConfig::make(FormatDescriptor::fxp(8), Accumulation::AlignToMax), ConfigError);
}

TEST(DotProduct, CycleAccounting) {
  const auto p16 = FormatDescriptor::posit(16);
  const std::vector<EncodedScalar> one = {S(0x4000, p16)};
  const DotResult r = dot_product(one, one, MacConfig::make(p16));
  EXPECT_EQ(r.result.bits(), 0x4000u);
  EXPECT_EQ(r.stats.cycles, 5);

  const DotResult empty = dot_product({}, {}, MacConfig::make(p16));
  EXPECT_EQ(empty.result.bits(), 0u);
  EXPECT_EQ(empty.stats.vector_ops, 0);
  EXPECT_EQ(empty.stats.cycles, 0);

  const auto fx4 = FormatDescriptor::fxp(4);
  const std::vector<EncodedScalar> ones(1024, S(0x1, fx4));
  const DotResult fx = dot_product(ones, ones, MacConfig::make(fx4));
  EXPECT_EQ(fx.stats.vector_ops, 64);
  EXPECT_EQ(fx.stats.cycles, 68);
  EXPECT_EQ(fx.stats.mac_ops, 1024);
  EXPECT_EQ(fx.stats.lane_utilization, 1.0);
}

TEST(DotProduct, ThroughputRatiosFollowLaneLaw) {
  const std::int64_t n = 1024;
  std::map<int, std::int64_t> ops_by_lanes;
  for (const auto& f : all_default_formats()) {
    const std::vector<EncodedScalar> v(n, f.is_fxp() ? S(1, f) : encode(1.0, f));
    const DotResult r = dot_product(v, v, MacConfig::make(f));
    ops_by_lanes[PrecisionMode::for_format(f).lanes] = r.stats.vector_ops;
    EXPECT_EQ(r.stats.vector_ops * PrecisionMode::for_format(f).lanes, n) << f.name();
  }
  EXPECT_EQ(ops_by_lanes[16], 64);
  EXPECT_EQ(ops_by_lanes[4], 256);
  EXPECT_EQ(ops_by_lanes[1], 1024);
}

TEST(DotProduct, TailPaddingCountsAsSkipped) {
  const auto f = FormatDescriptor::posit(8);
  const std::vector<EncodedScalar> v(5, S(0x40, f));
  for (bool zs : {true, false}) {
    const DotResult r = dot_product(v, v, MacConfig::make(f, Accumulation::ExactWide, zs));
    EXPECT_EQ(r.stats.vector_ops, 2);
    EXPECT_EQ(r.stats.skipped_lanes, 3);
    EXPECT_EQ(r.stats.mac_ops, 5);
    EXPECT_DOUBLE_EQ(r.stats.lane_utilization, 5.0 / 8.0);
  }
}

TEST(DotProduct, PositEightProductTableMatchesOracle) {
  const auto f = FormatDescriptor::posit(8);
  const auto cfg = MacConfig::make(f);
  for (std::uint32_t x = 0; x < 256; ++x) {
    for (std::uint32_t y = 0; y < 256; ++y) {
      const std::vector<EncodedScalar> a = {S(x, f)};
      const std::vector<EncodedScalar> b = {S(y, f)};
      const EncodedScalar got = dot_product(a, b, cfg).result;
      if (x == 0x80 || y == 0x80) {
        ASSERT_EQ(got.bits(), 0x80u);
        continue;
      }
      ASSERT_EQ(got, oracle_dot_rounded(a, b, f)) << x << " " << y;
    }
  }
}

TEST(DotProduct, SingleRoundingAgainstOracleEveryMode) {
  std::mt19937_64 rng(8);
  for (const auto& f : all_default_formats()) {
    const auto cfg = MacConfig::make(f);
    for (int t = 0; t < 500; ++t) {
      const std::size_t n = rng() % 65;
      const auto a = random_vector(rng, f, n);
      const auto b = random_vector(rng, f, n);
      ASSERT_EQ(dot_product(a, b, cfg).result, oracle_dot_rounded(a, b, f)) << f.name() << " trial " << t;
    }
  }
}

TEST(DotProduct, AccumulatorHoldsExactSum) {
  std::mt19937_64 rng(9);
  for (const auto& f : all_default_formats()) {
    const auto cfg = MacConfig::make(f);
    for (int t = 0; t < 100; ++t) {
      const auto a = random_vector(rng, f, 40);
      const auto b = random_vector(rng, f, 40);
      const DotResult r = dot_product(a, b, cfg);
      ASSERT_EQ(RationalAcc(to_mpz(r.accumulator.value), r.accumulator.unit_scale), oracle::oracle_dot(a, b));
      ASSERT_TRUE(r.accumulator.value.fits_signed(r.accumulator.width_bits));
    }
  }
}

TEST(DotProduct, OutputFormatMayDiffer) {
  const auto p8 = FormatDescriptor::posit(8);
  auto cfg = MacConfig::make(p8);
  cfg.output_format = FormatDescriptor::fp16_e5m10();
  std::mt19937_64 rng(12);
  for (int t = 0; t < 300; ++t) {
    const auto a = random_vector(rng, p8, 12);
    const auto b = random_vector(rng, p8, 12);
    ASSERT_EQ(dot_product(a, b, cfg).result, oracle_dot_rounded(a, b, cfg.output_format));
  }
}

TEST(DotProduct, GuardBitsAbsorbWorstCaseAccumulation) {
  for (const auto& f : all_default_formats()) {
    const EncodedScalar big = f.is_fxp() ? S(1u << (f.total_bits - 1), f) : max_finite(f, true);
    const std::vector<EncodedScalar> v(1 << 16, big);
    const DotResult r = dot_product(v, v, MacConfig::make(f));
    EXPECT_FALSE(r.accumulator.sticky_overflow) << f.name();
    EXPECT_EQ(RationalAcc(to_mpz(r.accumulator.value), r.accumulator.unit_scale),
              oracle::oracle_dot(std::span<const EncodedScalar>(v), std::span<const EncodedScalar>(v)));
  }
}

TEST(DotProduct, SpecialValuesPoison) {
  const auto p8 = FormatDescriptor::posit(8);
  const std::vector<EncodedScalar> a = {S(0x40, p8), S(0x80, p8), S(0x00, p8)};
  const std::vector<EncodedScalar> b = {S(0x40, p8), S(0x00, p8), S(0x40, p8)};
  EXPECT_EQ(dot_product(a, b, MacConfig::make(p8)).result.bits(), 0x80u);

  const auto h = FormatDescriptor::fp16_e5m10();
  const auto cfg = MacConfig::make(h);
  const std::vector<EncodedScalar> inf = {S(0x7C00, h), S(0x3C00, h)};
  const std::vector<EncodedScalar> ones = {S(0x3C00, h), S(0x3C00, h)};
  EXPECT_EQ(dot_product(inf, ones, cfg).result.bits(), 0x7C00u);
  const std::vector<EncodedScalar> mixed = {S(0x7C00, h), S(0xFC00, h)};
  EXPECT_TRUE(decode(dot_product(mixed, ones, cfg).result).is_nan());
  const std::vector<EncodedScalar> zeros = {S(0x0000, h), S(0x0000, h)};
  EXPECT_TRUE(decode(dot_product(inf, zeros, cfg).result).is_nan());

  auto to_posit = cfg;
  to_posit.output_format = p8;
  EXPECT_EQ(dot_product(inf, ones, to_posit).result.bits(), 0x80u);
}

TEST(DotProduct, ZeroSkipIsTransparent) {
  std::mt19937_64 rng(13);
  for (const auto& f : all_default_formats()) {
    for (auto acc : {Accumulation::ExactWide, Accumulation::AlignToMax}) {
      if (acc == Accumulation::AlignToMax && f.is_fxp()) continue;
      for (int t = 0; t < 200; ++t) {
        const std::size_t n = rng() % 50;
        const auto a = random_vector(rng, f, n);
        const auto b = random_vector(rng, f, n);
        const DotResult on = dot_product(a, b, MacConfig::make(f, acc, true));
        const DotResult off = dot_product(a, b, MacConfig::make(f, acc, false));
        ASSERT_EQ(on.result, off.result);
        ASSERT_EQ(on.stats.vector_ops, off.stats.vector_ops);
        ASSERT_GE(on.stats.skipped_lanes, off.stats.skipped_lanes);
      }
    }
  }
}

TEST(DotProduct, CommutativeAndPermutationInvariant) {
  std::mt19937_64 rng(14);
  for (const auto& f : all_default_formats()) {
    const auto cfg = MacConfig::make(f);
    for (int t = 0; t < 200; ++t) {
      const std::size_t n = rng() % 64;
      auto a = random_vector(rng, f, n);
      auto b = random_vector(rng, f, n);
      const EncodedScalar base = dot_product(a, b, cfg).result;
      ASSERT_EQ(dot_product(b, a, cfg).result, base);
      std::vector<std::size_t> idx(n);
      std::iota(idx.begin(), idx.end(), 0);
      std::shuffle(idx.begin(), idx.end(), rng);
      std::vector<EncodedScalar> pa, pb;
      for (auto i : idx) {
        pa.push_back(a[i]);
        pb.push_back(b[i]);
      }
      ASSERT_EQ(dot_product(pa, pb, cfg).result, base);
    }
  }
}

TEST(AlignToMax, StepErrorBelowOneUlpOfAnchor) {
  std::mt19937_64 rng(15);
  for (const auto& f : all_default_formats()) {
    if (f.is_fxp()) continue;
    const auto cfg = MacConfig::make(f, Accumulation::AlignToMax);
    for (int t = 0; t < 200; ++t) {
      WideAccumulator acc = WideAccumulator::for_config(cfg);
      RationalAcc exact;
      RationalAcc prev_err;
      for (int step = 0; step < 6; ++step) {
        const auto a = random_vector(rng, f, cfg.mode.lanes);
        const auto b = random_vector(rng, f, cfg.mode.lanes);
        acc = simd_mac_step(VectorWord::pack(a, cfg.mode), VectorWord::pack(b, cfg.mode), acc, cfg);
        exact = exact + oracle::oracle_dot(a, b);
        const RationalAcc err = RationalAcc(to_mpz(acc.value), acc.unit_scale) - exact;
        const RationalAcc step_err = err - prev_err;
        const RationalAcc ulp(mpz_class(1), acc.unit_scale + kAlignGuardBits);
        const RationalAcc mag = step_err.sign() < 0 ? -step_err : step_err;
        ASSERT_LT(mag, ulp) << f.name() << " step " << step;
        prev_err = err;
      }
    }
  }
}

TEST(DotProductBatch, MatchesSequentialForAnyThreadCount) {
  std::mt19937_64 rng(16);
  const auto f = FormatDescriptor::bf16();
  std::vector<DotJob> jobs;
  for (int i = 0; i < 64; ++i) jobs.push_back({random_vector(rng, f, 33), random_vector(rng, f, 33)});
  const auto cfg = MacConfig::make(f);
  std::vector<EncodedScalar> seq;
  for (const auto& j : jobs) seq.push_back(dot_product(j.a, j.b, cfg).result);
  for (int threads : {1, 3, 8}) {
    ScopedThreadCount scope(threads);
    const auto par = dot_product_batch(jobs, cfg);
    for (std::size_t i = 0; i < jobs.size(); ++i) ASSERT_EQ(par[i].result, seq[i]);
  }
}

TEST(DotProduct, TraceHasFiveStagesPerOp) {
  const auto f = FormatDescriptor::posit(8);
  const std::vector<EncodedScalar> v(9, S(0x40, f));
  PipelineTrace trace;
  const DotResult r = dot_product(v, v, MacConfig::make(f), &trace);
  EXPECT_EQ(trace.lines.size(), 5u * 3u);
  EXPECT_EQ(trace.lines.front(), "cycle=0 stage=1:fetch op=0 a=0x40404040 b=0x40404040");
  EXPECT_EQ(trace.lines.back(), "cycle=6 stage=5:output op=2 result=" + hex_bits(r.result));
}

TEST(RunPipeline, CycleModel) {
  EXPECT_EQ(run_pipeline({}).total.cycles, 0);
  const auto m8 = PrecisionMode::for_format(FormatDescriptor::posit(8));
  const std::vector<VectorOp> hundred(100, VectorOp{m8, 4});
  const PipelineReport r = run_pipeline(hundred);
  EXPECT_EQ(r.total.cycles, 104);
  EXPECT_EQ(r.total.mac_ops, 400);

  // 3 posit8 ops (one half full), 2 fxp4 ops, 1 posit8 op: two mode switches.
  const auto m4 = PrecisionMode::for_format(FormatDescriptor::fxp(4));
  const std::vector<VectorOp> mixed = {{m8, 4}, {m8, 2}, {m8, 4}, {m4, 16}, {m4, 8}, {m8, 4}};
  const PipelineReport mr = run_pipeline(mixed);
  EXPECT_EQ(mr.mode_switches, 2);
  EXPECT_EQ(mr.total.cycles, 6 + 4);
  EXPECT_EQ(mr.per_mode.at("posit8").vector_ops, 4);
  EXPECT_EQ(mr.per_mode.at("posit8").mac_ops, 14);
  EXPECT_DOUBLE_EQ(mr.per_mode.at("posit8").lane_utilization, 14.0 / 16.0);
  EXPECT_EQ(mr.per_mode.at("fxp4:f2").skipped_lanes, 8);
  EXPECT_DOUBLE_EQ(mr.total.lane_utilization, 38.0 / 48.0);
  EXPECT_EQ(run_pipeline(mixed, PipelineConfig{3}).total.cycles, 6 + 4 + 6);
}
