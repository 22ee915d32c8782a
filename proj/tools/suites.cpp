// Copyright 2026 The Polaron Authors.
// SPDX-License-Identifier: Apache-2.0

#include "suites.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "polaron/golden_oracle.hpp"
#include "polaron/mac_engine.hpp"
#include "polaron/parallel.hpp"

namespace polaron::suites {
namespace {

std::string vec_hex(std::span<const EncodedScalar> v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + hex_bits(v[i]);
  return s + "]";
}

// Finite, non-special patterns of a format, in bit order.
std::vector<std::uint32_t> finite_patterns(const FormatDescriptor& f) {
  std::vector<std::uint32_t> out;
  for (std::uint32_t b = 0; b <= f.mask(); ++b)
    if (decode(EncodedScalar(b, f)).is_finite()) out.push_back(b);
  return out;
}

// Bit patterns in ascending value order.
std::vector<std::uint32_t> value_order(const FormatDescriptor& f) {
  std::vector<std::uint32_t> out;
  const std::uint32_t half = 1u << (f.total_bits - 1);
  if (f.is_float()) {
    for (std::uint32_t b = f.mask(); b >= half; --b) out.push_back(b);
    for (std::uint32_t b = 0; b < half; ++b) out.push_back(b);
  } else {
    for (std::uint32_t b = half; b <= f.mask(); ++b) out.push_back(b);
    for (std::uint32_t b = 0; b < half; ++b) out.push_back(b);
  }
  return out;
}

EncodedScalar oracle_result(std::span<const EncodedScalar> a, std::span<const EncodedScalar> b,
                            const FormatDescriptor& f) {
  return oracle::oracle_round(oracle::oracle_dot(a, b), f, RoundingMode::TowardPositive);
}

struct Case {
  std::vector<EncodedScalar> a;
  std::vector<EncodedScalar> b;
};

// Random operands: mostly finite patterns, some exact zeros.
Case random_case(std::mt19937_64& rng, const FormatDescriptor& f, const std::vector<std::uint32_t>& finite,
                 int max_len, double zero_rate, double special_rate) {
  const int len = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(max_len));
  Case c;
  auto draw = [&]() {
    const double u = static_cast<double>(rng() >> 11) * 0x1p-53;
    if (u < special_rate) {
      const std::uint32_t pick = static_cast<std::uint32_t>(rng() % 3);
      if (pick == 0 || !f.has_infinity()) return canonical_nan(f);
      return infinity(f, pick == 2);
    }
    if (u < special_rate + zero_rate) return EncodedScalar(0, f);
    return EncodedScalar(finite[rng() % finite.size()], f);
  };
  for (int i = 0; i < len; ++i) {
    c.a.push_back(draw());
    c.b.push_back(draw());
  }
  return c;
}

}  // namespace

void Digest::add_u64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    h_ ^= (v >> (8 * i)) & 0xffu;
    h_ *= 0x100000001b3ull;
  }
}

void Digest::add_double(double v) { add_u64(std::bit_cast<std::uint64_t>(v)); }

void Digest::add_string(std::string_view s) {
  for (unsigned char c : s) {
    h_ ^= c;
    h_ *= 0x100000001b3ull;
  }
  add_u64(s.size());
}

std::string Digest::hex() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h_));
  return buf;
}

void SuiteReport::fail(std::string what) {
  ++failures;
  if (counterexamples.size() < kMaxCounterexamples) counterexamples.push_back(std::move(what));
}

SuiteReport codec_roundtrip(std::span<const FormatDescriptor> formats) {
  SuiteReport r;
  r.name = "codec-roundtrip";
  for (const auto& f : formats) {
    std::int64_t before = r.failures;
    for (std::uint32_t b = 0; b <= f.mask(); ++b) {
      const EncodedScalar s(b, f);
      const Decoded d = decode(s);
      ++r.cases;
      r.digest.add_u64(b);
      r.digest.add_double(d.to_double());
      if (d.is_nan()) {
        if (!decode(canonical_nan(f)).is_nan()) r.fail(f.name() + " canonical NaN does not decode as NaN");
        continue;
      }
      const EncodedScalar back = d.is_inf() ? encode(d.to_double(), f) : encode(d.value, f);
      if (back != s) r.fail(f.name() + " " + hex_bits(s) + " re-encodes as " + hex_bits(back));
    }
    double prev = 0.0;
    bool first = true, prev_zero = false;
    for (std::uint32_t b : value_order(f)) {
      const Decoded d = decode(EncodedScalar(b, f));
      if (d.is_nan()) continue;
      const double v = d.to_double();
      const bool zero = v == 0.0;
      if (!first && !(v > prev) && !(zero && prev_zero))
        r.fail(f.name() + " not monotone at " + hex_bits(EncodedScalar(b, f)));
      prev = v;
      prev_zero = zero;
      first = false;
    }
    r.notes.push_back("format=" + f.name() + " cases=" + std::to_string(f.mask() + 1) +
                      " failures=" + std::to_string(r.failures - before));
  }
  return r;
}

SuiteReport throughput(std::int64_t macs, std::uint64_t seed) {
  SuiteReport r;
  r.name = "throughput";
  std::mt19937_64 rng(seed);
  const std::vector<std::pair<std::string, int>> groups = {
      {"fxp4", 16}, {"fp8e4m3", 16}, {"fp8e5m2", 16}, {"fxp8", 4}, {"posit8", 4},
      {"bf16", 4},  {"fxp16", 1},    {"fp16e5m10", 1}, {"fp16e6m9", 1}, {"posit16", 1}};
  for (const auto& [name, ratio] : groups) {
    const FormatDescriptor f = parse_format(name);
    const auto finite = finite_patterns(f);
    std::vector<EncodedScalar> a, b;
    for (std::int64_t i = 0; i < macs; ++i) {
      a.emplace_back(finite[rng() % finite.size()], f);
      b.emplace_back(finite[rng() % finite.size()], f);
    }
    const DotResult d = dot_product(a, b, MacConfig::make(f));
    const std::int64_t want = macs / ratio;
    ++r.cases;
    r.digest.add_u64(static_cast<std::uint64_t>(d.stats.vector_ops));
    r.digest.add_u64(d.result.bits());
    if (d.stats.vector_ops != want)
      r.fail(f.name() + " vector_ops=" + std::to_string(d.stats.vector_ops) + " want " + std::to_string(want));
    r.notes.push_back("format=" + f.name() + " lanes=" + std::to_string(PrecisionMode::for_format(f).lanes) +
                      " vector_ops=" + std::to_string(d.stats.vector_ops) + " cycles=" +
                      std::to_string(d.stats.cycles));
  }
  return r;
}

SuiteReport multiplier(std::int64_t random_trials, std::uint64_t seed) {
  SuiteReport r;
  r.name = "multiplier";
  for (std::uint32_t a = 0; a < 256; ++a) {
    for (std::uint32_t b = 0; b < 256; ++b) {
      const std::uint32_t p = tile_multiply(a, b, 8);
      ++r.cases;
      r.digest.add_u64(p);
      if (p != a * b) r.fail("8x8 " + std::to_string(a) + "*" + std::to_string(b) + " = " + std::to_string(p));
    }
  }
  std::mt19937_64 rng(seed);
  std::vector<std::uint32_t> xs(static_cast<std::size_t>(random_trials)), ys(xs.size()), ps(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    xs[i] = static_cast<std::uint32_t>(rng() & 0xffff);
    ys[i] = static_cast<std::uint32_t>(rng() & 0xffff);
  }
  parallel_for(xs.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) ps[i] = tile_multiply(xs[i], ys[i], 16);
  });
  for (std::size_t i = 0; i < xs.size(); ++i) {
    ++r.cases;
    r.digest.add_u64(ps[i]);
    if (ps[i] != xs[i] * ys[i])
      r.fail("16x16 " + std::to_string(xs[i]) + "*" + std::to_string(ys[i]) + " = " + std::to_string(ps[i]));
  }
  return r;
}

SuiteReport dot_exact(std::int64_t trials_per_mode, std::uint64_t seed, int max_len) {
  SuiteReport r;
  r.name = "dot-exact";
  std::mt19937_64 rng(seed);
  for (const auto& f : all_default_formats()) {
    const auto finite = finite_patterns(f);
    std::vector<Case> cases;
    for (std::int64_t t = 0; t < trials_per_mode; ++t) cases.push_back(random_case(rng, f, finite, max_len, 0.1, 0.0));
    const MacConfig cfg = MacConfig::make(f);
    std::vector<EncodedScalar> got(cases.size()), want(cases.size());
    parallel_for(cases.size(), [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        got[i] = dot_product(cases[i].a, cases[i].b, cfg).result;
        want[i] = oracle_result(cases[i].a, cases[i].b, f);
      }
    });
    for (std::size_t i = 0; i < cases.size(); ++i) {
      ++r.cases;
      r.digest.add_u64(got[i].bits());
      if (got[i] != want[i])
        r.fail(f.name() + " a=" + vec_hex(cases[i].a) + " b=" + vec_hex(cases[i].b) + " got=" + hex_bits(got[i]) +
               " want=" + hex_bits(want[i]));
    }
  }
  return r;
}

SuiteReport posit8_pairs(std::int64_t samples, std::uint64_t seed) {
  SuiteReport r;
  r.name = "posit8-pairs";
  const FormatDescriptor f = FormatDescriptor::posit(8);
  const MacConfig cfg = MacConfig::make(f);
  const EncodedScalar nar = canonical_nan(f);

  std::vector<EncodedScalar> table(65536);
  parallel_for(table.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const EncodedScalar a(static_cast<std::uint32_t>(i >> 8), f), b(static_cast<std::uint32_t>(i & 0xff), f);
      table[i] = dot_product(std::span(&a, 1), std::span(&b, 1), cfg).result;
    }
  });
  for (std::size_t i = 0; i < table.size(); ++i) {
    const EncodedScalar a(static_cast<std::uint32_t>(i >> 8), f), b(static_cast<std::uint32_t>(i & 0xff), f);
    const bool special = a == nar || b == nar;
    const EncodedScalar want = special ? nar : oracle_result(std::span(&a, 1), std::span(&b, 1), f);
    ++r.cases;
    r.digest.add_u64(table[i].bits());
    if (table[i] != want) r.fail("product " + hex_bits(a) + "*" + hex_bits(b) + " got=" + hex_bits(table[i]) +
                                 " want=" + hex_bits(want));
  }

  // Length-2 sums: the result is symmetric under swapping a_i with b_i and
  // under swapping the two pairs, so only canonical quadruples are drawn.
  std::mt19937_64 rng(seed);
  const auto finite = finite_patterns(f);
  constexpr std::size_t kBlock = 1 << 16;
  std::vector<std::array<EncodedScalar, 4>> block;
  std::vector<EncodedScalar> got, want;
  for (std::int64_t done = 0; done < samples;) {
    const std::size_t n = static_cast<std::size_t>(std::min<std::int64_t>(kBlock, samples - done));
    block.resize(n);
    for (auto& q : block) {
      std::uint32_t v[4];
      for (auto& x : v) x = finite[rng() % finite.size()];
      if (v[0] > v[1]) std::swap(v[0], v[1]);
      if (v[2] > v[3]) std::swap(v[2], v[3]);
      if (std::pair(v[0], v[1]) > std::pair(v[2], v[3])) {
        std::swap(v[0], v[2]);
        std::swap(v[1], v[3]);
      }
      q = {EncodedScalar(v[0], f), EncodedScalar(v[2], f), EncodedScalar(v[1], f), EncodedScalar(v[3], f)};
    }
    got.resize(n);
    want.resize(n);
    parallel_for(n, [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        const std::span<const EncodedScalar> a(block[i].data(), 2), b(block[i].data() + 2, 2);
        got[i] = dot_product(a, b, cfg).result;
        want[i] = oracle_result(a, b, f);
      }
    });
    for (std::size_t i = 0; i < n; ++i) {
      ++r.cases;
      r.digest.add_u64(got[i].bits());
      if (got[i] != want[i]) {
        const std::span<const EncodedScalar> a(block[i].data(), 2), b(block[i].data() + 2, 2);
        r.fail("a=" + vec_hex(a) + " b=" + vec_hex(b) + " got=" + hex_bits(got[i]) + " want=" + hex_bits(want[i]));
      }
    }
    done += static_cast<std::int64_t>(n);
  }
  return r;
}

SuiteReport zero_skip(std::int64_t trials_per_mode, std::uint64_t seed) {
  SuiteReport r;
  r.name = "zero-skip";
  std::mt19937_64 rng(seed);
  for (const auto& f : all_default_formats()) {
    const auto finite = finite_patterns(f);
    std::vector<Accumulation> modes = {Accumulation::ExactWide};
    if (!f.is_fxp()) modes.push_back(Accumulation::AlignToMax);
    for (auto acc : modes) {
      std::vector<Case> cases;
      for (std::int64_t t = 0; t < trials_per_mode; ++t)
        cases.push_back(random_case(rng, f, finite, 64, 0.3, 0.01));
      const MacConfig on = MacConfig::make(f, acc, true);
      const MacConfig off = MacConfig::make(f, acc, false);
      std::vector<EncodedScalar> x(cases.size()), y(cases.size());
      parallel_for(cases.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
          x[i] = dot_product(cases[i].a, cases[i].b, on).result;
          y[i] = dot_product(cases[i].a, cases[i].b, off).result;
        }
      });
      for (std::size_t i = 0; i < cases.size(); ++i) {
        ++r.cases;
        r.digest.add_u64(x[i].bits());
        if (x[i] != y[i])
          r.fail(f.name() + " " + accumulation_name(acc) + " a=" + vec_hex(cases[i].a) + " b=" + vec_hex(cases[i].b) +
                 " skip=" + hex_bits(x[i]) + " noskip=" + hex_bits(y[i]));
      }
    }
  }
  return r;
}

SuiteReport permutation(std::int64_t trials_per_mode, std::uint64_t seed) {
  SuiteReport r;
  r.name = "permutation";
  std::mt19937_64 rng(seed);
  for (const auto& f : all_default_formats()) {
    const auto finite = finite_patterns(f);
    std::vector<Case> cases, permuted;
    for (std::int64_t t = 0; t < trials_per_mode; ++t) {
      Case c = random_case(rng, f, finite, 64, 0.1, 0.01);
      Case p = c;
      for (std::size_t i = p.a.size(); i > 1; --i) {
        const std::size_t j = rng() % i;
        std::swap(p.a[i - 1], p.a[j]);
        std::swap(p.b[i - 1], p.b[j]);
      }
      for (std::size_t i = 0; i < p.a.size(); ++i)
        if (rng() & 1) std::swap(p.a[i], p.b[i]);
      cases.push_back(std::move(c));
      permuted.push_back(std::move(p));
    }
    const MacConfig cfg = MacConfig::make(f);
    std::vector<EncodedScalar> x(cases.size()), y(cases.size());
    parallel_for(cases.size(), [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        x[i] = dot_product(cases[i].a, cases[i].b, cfg).result;
        y[i] = dot_product(permuted[i].a, permuted[i].b, cfg).result;
      }
    });
    for (std::size_t i = 0; i < cases.size(); ++i) {
      ++r.cases;
      r.digest.add_u64(x[i].bits());
      if (x[i] != y[i])
        r.fail(f.name() + " a=" + vec_hex(cases[i].a) + " b=" + vec_hex(cases[i].b) + " original=" + hex_bits(x[i]) +
               " permuted=" + hex_bits(y[i]));
    }
  }
  return r;
}

std::string format_report(const SuiteReport& r) {
  std::ostringstream os;
  os << "suite=" << r.name << " cases=" << r.cases << " failures=" << r.failures
     << " result=" << (r.passed() ? "pass" : "FAIL") << " digest=" << r.digest.hex() << "\n";
  for (const auto& n : r.notes) os << "  " << n << "\n";
  for (const auto& c : r.counterexamples) os << "  counterexample " << c << "\n";
  return os.str();
}

}  // namespace polaron::suites
