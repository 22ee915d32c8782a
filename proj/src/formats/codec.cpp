// Copyright 2026 The Polaron Authors.
// SPDX-License-Identifier: Apache-2.0

#include <bit>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <vector>
#include <algorithm>

#include "polaron/formats.hpp"
#include "polaron/wide_int.hpp"

namespace polaron {
namespace {

constexpr int kInfinitesimalExp = -(1 << 20);

int msb_index(std::uint64_t v) { return 63 - std::countl_zero(v); }

int floor_div_pow2(int v, int log2d) { return v >= 0 ? v >> log2d : -((-v + (1 << log2d) - 1) >> log2d); }

std::int32_t sign_extend(std::uint32_t bits, int width) {
  const std::uint32_t sign = 1u << (width - 1);
  return static_cast<std::int32_t>((bits ^ sign)) - static_cast<std::int32_t>(sign);
}

// Three-way comparison of a * 2^ea and b * 2^eb, both non-zero.
int compare_dyadic(std::uint64_t a, int ea, std::uint64_t b, int eb) {
  const int pa = msb_index(a) + ea;
  const int pb = msb_index(b) + eb;
  if (pa != pb) return pa < pb ? -1 : 1;
  const int e = std::min(ea, eb);
  const unsigned __int128 wa = static_cast<unsigned __int128>(a) << (ea - e);
  const unsigned __int128 wb = static_cast<unsigned __int128>(b) << (eb - e);
  return wa < wb ? -1 : (wa > wb ? 1 : 0);
}

// Drops the low `shift` bits of sig, returning the guard bit and whether any
// lower bit (or the incoming sticky) was set.
struct Shifted {
  std::uint64_t kept;
  bool guard;
  bool rest;
};

Shifted shift_right_grs(std::uint64_t sig, int shift, bool sticky) {
  if (shift <= 0) return {sig, false, sticky};
  if (shift > 64) return {0, false, sig != 0 || sticky};
  if (shift == 64) return {0, (sig >> 63) != 0, (sig << 1) != 0 || sticky};
  const std::uint64_t low = sig & ((std::uint64_t{1} << shift) - 1);
  const std::uint64_t half = std::uint64_t{1} << (shift - 1);
  return {sig >> shift, (low & half) != 0, (low & (half - 1)) != 0 || sticky};
}

bool round_up(RoundingMode mode, bool negative, bool guard, bool rest, bool lsb) {
  if (mode == RoundingMode::NearestEven) return guard && (rest || lsb);
  return !negative && (guard || rest);
}

// ---------------------------------------------------------------- posit

struct PositFields {
  int scale = 0;
  std::uint32_t fraction = 0;
  int frac_bits = 0;
};

// Fields of a positive posit magnitude pattern (non-zero, sign bit clear).
PositFields posit_fields(std::uint32_t mag, int n, int es) {
  const int body_bits = n - 1;
  int pos = body_bits - 1;
  const bool r0 = (mag >> pos) & 1u;
  int run = 0;
  while (pos >= 0 && (((mag >> pos) & 1u) != 0) == r0) {
    ++run;
    --pos;
  }
  --pos;  // terminating bit, may fall off the end
  const int k = r0 ? run - 1 : -run;
  const int remaining = std::max(pos + 1, 0);
  std::uint32_t rest = remaining > 0 ? mag & ((1u << remaining) - 1) : 0;

  int e = 0;
  if (remaining >= es) {
    e = static_cast<int>(rest >> (remaining - es));
  } else {
    e = static_cast<int>(rest << (es - remaining));
  }
  PositFields f;
  f.frac_bits = std::max(remaining - es, 0);
  f.fraction = f.frac_bits > 0 ? rest & ((1u << f.frac_bits) - 1) : 0;
  f.scale = k * (1 << es) + e;
  return f;
}

std::uint32_t posit_negate(std::uint32_t pattern, int n) {
  return (~pattern + 1u) & ((1u << n) - 1u);
}

EncodeResult round_posit(bool negative, std::uint64_t sig, int exp, bool sticky,
                         const FormatDescriptor& f, RoundingMode mode) {
  const int n = f.total_bits;
  const int es = f.es;
  const int maxscale = f.max_scale();
  const std::uint32_t maxpos = (1u << (n - 1)) - 1;

  auto finish = [&](std::uint32_t mag, bool inexact, bool overflow) {
    const std::uint32_t pattern = negative && mag != 0 ? posit_negate(mag, n) : mag;
    return EncodeResult{EncodedScalar(pattern, f), inexact, overflow};
  };

  int p = msb_index(sig);
  if (p > 40) {
    const int sh = p - 40;
    sticky = sticky || (sig & ((std::uint64_t{1} << sh) - 1)) != 0;
    sig >>= sh;
    exp += sh;
    p = 40;
  }
  const int scale = p + exp;
  const bool power_of_two = sig == (std::uint64_t{1} << p) && !sticky;
  if (scale > maxscale || (scale == maxscale && !power_of_two)) return finish(maxpos, true, true);
  if (scale == maxscale) return finish(maxpos, false, false);

  std::uint32_t lo = 0;
  bool dropped = true;
  if (scale >= -maxscale) {
    const int k = floor_div_pow2(scale, es);
    const int e = scale - k * (1 << es);
    std::uint64_t str;
    int len;
    if (k >= 0) {
      str = ((std::uint64_t{1} << (k + 1)) - 1) << 1;
      len = k + 2;
    } else {
      str = 1;
      len = -k + 1;
    }
    str = (str << es) | static_cast<std::uint64_t>(e);
    len += es;
    str = (str << p) | (sig & ((std::uint64_t{1} << p) - 1));
    len += p;
    const int body = n - 1;
    if (len <= body) {
      lo = static_cast<std::uint32_t>(str << (body - len));
      dropped = sticky;
    } else {
      const int d = len - body;
      lo = static_cast<std::uint32_t>(str >> d);
      dropped = (str & ((std::uint64_t{1} << d) - 1)) != 0 || sticky;
    }
  }
  if (!dropped) return finish(lo, false, false);
  const std::uint32_t hi = lo + 1;

  if (mode == RoundingMode::TowardPositive) return finish(negative ? lo : hi, true, false);
  // Posits never round a non-zero value to zero.
  if (lo == 0) return finish(1, true, false);

  const PositFields flo = posit_fields(lo, n, es);
  const PositFields fhi = posit_fields(hi, n, es);
  const std::uint64_t slo = (std::uint64_t{1} << flo.frac_bits) | flo.fraction;
  const std::uint64_t shi = (std::uint64_t{1} << fhi.frac_bits) | fhi.fraction;
  const int elo = flo.scale - flo.frac_bits;
  const int ehi = fhi.scale - fhi.frac_bits;
  const int emid = std::min(elo, ehi);
  const std::uint64_t mid = (slo << (elo - emid)) + (shi << (ehi - emid));
  int cmp = compare_dyadic(sig, exp + 1, mid, emid);
  if (cmp == 0 && sticky) cmp = 1;
  std::uint32_t mag;
  if (cmp < 0) {
    mag = lo;
  } else if (cmp > 0) {
    mag = hi;
  } else {
    mag = (lo & 1u) == 0 ? lo : hi;
  }
  return finish(mag, true, false);
}

// ---------------------------------------------------------------- float

EncodeResult round_float(bool negative, std::uint64_t sig, int exp, bool sticky,
                         const FormatDescriptor& f, RoundingMode mode) {
  const int m = f.mant_bits;
  const int emin = f.min_scale();
  const int emax = f.max_scale();
  const std::uint32_t sign_bit = negative ? 1u << (f.total_bits - 1) : 0u;

  int e = std::max(msb_index(sig) + exp, emin);
  const int quantum = e - m;
  Shifted s = exp >= quantum ? Shifted{sig << (exp - quantum), false, sticky}
                             : shift_right_grs(sig, quantum - exp, sticky);
  std::uint64_t mant = s.kept;
  const bool inexact = s.guard || s.rest;
  if (round_up(mode, negative, s.guard, s.rest, (mant & 1u) != 0)) {
    ++mant;
    if (mant == (std::uint64_t{1} << (m + 1))) {
      mant >>= 1;
      ++e;
    }
  }

  const std::uint64_t all_ones = (std::uint64_t{1} << (m + 1)) - 1;
  const bool overflow =
      e > emax || (f.is_ofp8_e4m3() && e == emax && mant == all_ones);
  if (overflow) {
    if (f.has_infinity() && (mode == RoundingMode::NearestEven || !negative))
      return {infinity(f, negative), true, true};
    return {max_finite(f, negative), true, true};
  }

  std::uint32_t bits;
  if (mant < (std::uint64_t{1} << m)) {
    bits = static_cast<std::uint32_t>(mant);
  } else {
    bits = (static_cast<std::uint32_t>(e + f.bias) << m) |
           static_cast<std::uint32_t>(mant - (std::uint64_t{1} << m));
  }
  return {EncodedScalar(sign_bit | bits, f), inexact, false};
}

// ---------------------------------------------------------------- fxp

EncodeResult round_fxp(bool negative, std::uint64_t sig, int exp, bool sticky,
                       const FormatDescriptor& f, RoundingMode mode) {
  const int n = f.total_bits;
  const std::uint64_t pos_limit = (std::uint64_t{1} << (n - 1)) - 1;
  const std::uint64_t neg_limit = std::uint64_t{1} << (n - 1);
  const int sh = exp + f.frac_bits;

  auto saturate = [&]() {
    const std::uint32_t pattern =
        negative ? static_cast<std::uint32_t>(neg_limit) : static_cast<std::uint32_t>(pos_limit);
    return EncodeResult{EncodedScalar(pattern, f), true, true};
  };

  std::uint64_t q;
  bool inexact = false;
  if (sh >= 0) {
    if (sh >= 63 || (sig >> (63 - sh)) != 0) return saturate();
    q = sig << sh;
    if (sticky && round_up(mode, negative, false, true, false)) ++q;
    inexact = sticky;
  } else {
    const Shifted s = shift_right_grs(sig, -sh, sticky);
    q = s.kept;
    inexact = s.guard || s.rest;
    if (round_up(mode, negative, s.guard, s.rest, (q & 1u) != 0)) ++q;
  }
  if (negative ? q > neg_limit : q > pos_limit) return saturate();
  const std::uint32_t pattern = negative ? static_cast<std::uint32_t>(-q) & f.mask()
                                         : static_cast<std::uint32_t>(q);
  return {EncodedScalar(pattern, f), inexact, false};
}

// ---------------------------------------------------------------- decimal

// Little-endian base-10 digit vector helpers.
void mul_small(std::vector<int>& d, int k) {
  int carry = 0;
  for (int& x : d) {
    const int v = x * k + carry;
    x = v % 10;
    carry = v / 10;
  }
  while (carry > 0) {
    d.push_back(carry % 10);
    carry /= 10;
  }
}

}  // namespace

// ------------------------------------------------------------------ ExactReal

ExactReal ExactReal::normalized() const {
  if (magnitude == 0) return {negative, 0, 0};
  const int tz = std::countr_zero(magnitude);
  return {negative, magnitude >> tz, exponent + tz};
}

double ExactReal::to_double() const {
  const double v = std::ldexp(static_cast<double>(magnitude), exponent);
  return negative ? -v : v;
}

ExactReal ExactReal::from_double(double value) {
  ExactReal r;
  r.negative = std::signbit(value);
  if (value == 0.0) return r;
  int e = 0;
  const double frac = std::frexp(std::fabs(value), &e);
  r.magnitude = static_cast<std::uint64_t>(std::ldexp(frac, 53));
  r.exponent = e - 53;
  return r.normalized();
}

bool ExactReal::same_value(const ExactReal& other) const {
  const ExactReal a = normalized();
  const ExactReal b = other.normalized();
  if (a.magnitude == 0 || b.magnitude == 0) return a.magnitude == b.magnitude;
  return a.negative == b.negative && a.magnitude == b.magnitude && a.exponent == b.exponent;
}

double Decoded::to_double() const {
  switch (cls) {
    case ValueClass::NaN:
      return std::numeric_limits<double>::quiet_NaN();
    case ValueClass::Infinite:
      return value.negative ? -std::numeric_limits<double>::infinity()
                            : std::numeric_limits<double>::infinity();
    default:
      return value.to_double();
  }
}

// ------------------------------------------------------------------ decode / unpack

UnpackedOperand unpack(const EncodedScalar& s) {
  const FormatDescriptor& f = s.format();
  const std::uint32_t bits = s.bits();
  UnpackedOperand u;
  u.sig_width = f.sig_width();

  switch (f.kind) {
    case FormatKind::FxP: {
      const std::int32_t q = sign_extend(bits, f.total_bits);
      u.negative = q < 0;
      u.significand = static_cast<std::uint32_t>(q < 0 ? -q : q);
      u.scale = f.max_scale();
      u.is_zero = q == 0;
      return u;
    }
    case FormatKind::Posit: {
      const int n = f.total_bits;
      u.scale = f.min_scale();
      if (bits == 0) {
        u.is_zero = true;
        return u;
      }
      if (bits == (1u << (n - 1))) {
        u.is_nar_or_nan = true;
        return u;
      }
      u.negative = (bits >> (n - 1)) != 0;
      const PositFields pf = posit_fields(u.negative ? posit_negate(bits, n) : bits, n, f.es);
      u.scale = pf.scale;
      u.significand = ((1u << pf.frac_bits) | pf.fraction) << (u.sig_width - 1 - pf.frac_bits);
      return u;
    }
    case FormatKind::Float:
    case FormatKind::Bfloat: {
      const int m = f.mant_bits;
      const std::uint32_t emask = (1u << f.exp_bits) - 1;
      const std::uint32_t ef = (bits >> m) & emask;
      const std::uint32_t mf = bits & ((1u << m) - 1);
      u.negative = (bits >> (f.total_bits - 1)) != 0;
      if (f.is_ofp8_e4m3()) {
        if (ef == emask && mf == (1u << m) - 1) {
          u.is_nar_or_nan = true;
          return u;
        }
      } else if (ef == emask) {
        u.is_inf = mf == 0;
        u.is_nar_or_nan = mf != 0;
        return u;
      }
      if (ef == 0) {
        u.scale = f.min_scale();
        u.significand = mf;
        u.is_zero = mf == 0;
        u.is_subnormal = mf != 0;
      } else {
        u.scale = static_cast<int>(ef) - f.bias;
        u.significand = (1u << m) | mf;
      }
      return u;
    }
  }
  return u;
}

Decoded decode(const EncodedScalar& s) {
  const UnpackedOperand u = unpack(s);
  Decoded d;
  d.value.negative = u.negative;
  if (u.is_nar_or_nan) {
    d.cls = ValueClass::NaN;
    d.value.negative = false;
    return d;
  }
  if (u.is_inf) {
    d.cls = ValueClass::Infinite;
    return d;
  }
  d.value.magnitude = u.significand;
  d.value.exponent = u.significand == 0 ? 0 : u.lsb_exponent();
  d.value = d.value.normalized();
  return d;
}

// ------------------------------------------------------------------ encode

EncodedScalar canonical_nan(const FormatDescriptor& f) {
  switch (f.kind) {
    case FormatKind::FxP:
      return EncodedScalar(0, f);
    case FormatKind::Posit:
      return EncodedScalar(1u << (f.total_bits - 1), f);
    default:
      if (f.is_ofp8_e4m3()) return EncodedScalar(0x7F, f);
      return EncodedScalar((((1u << f.exp_bits) - 1) << f.mant_bits) | (1u << (f.mant_bits - 1)), f);
  }
}

EncodedScalar infinity(const FormatDescriptor& f, bool negative) {
  if (!f.has_infinity()) throw std::logic_error(f.name() + " has no infinity");
  const std::uint32_t sign = negative ? 1u << (f.total_bits - 1) : 0u;
  return EncodedScalar(sign | (((1u << f.exp_bits) - 1) << f.mant_bits), f);
}

EncodedScalar max_finite(const FormatDescriptor& f, bool negative) {
  const int n = f.total_bits;
  switch (f.kind) {
    case FormatKind::FxP:
      return EncodedScalar(negative ? 1u << (n - 1) : (1u << (n - 1)) - 1, f);
    case FormatKind::Posit: {
      const std::uint32_t maxpos = (1u << (n - 1)) - 1;
      return EncodedScalar(negative ? posit_negate(maxpos, n) : maxpos, f);
    }
    default: {
      const std::uint32_t sign = negative ? 1u << (n - 1) : 0u;
      if (f.is_ofp8_e4m3()) return EncodedScalar(sign | 0x7E, f);
      const std::uint32_t e = (1u << f.exp_bits) - 2;
      return EncodedScalar(sign | (e << f.mant_bits) | ((1u << f.mant_bits) - 1), f);
    }
  }
}

EncodeResult round_to_format(bool negative, std::uint64_t sig, int exp, bool sticky,
                             const FormatDescriptor& f, RoundingMode mode) {
  if (sig == 0) {
    if (!sticky) {
      const std::uint32_t sign = negative && f.is_float() ? 1u << (f.total_bits - 1) : 0u;
      return {EncodedScalar(sign, f), false, false};
    }
    sig = 1;
    exp = kInfinitesimalExp;
    sticky = false;
  }
  switch (f.kind) {
    case FormatKind::FxP:
      return round_fxp(negative, sig, exp, sticky, f, mode);
    case FormatKind::Posit:
      return round_posit(negative, sig, exp, sticky, f, mode);
    default:
      return round_float(negative, sig, exp, sticky, f, mode);
  }
}

EncodedScalar encode(const ExactReal& x, const FormatDescriptor& f, RoundingMode mode) {
  return round_to_format(x.negative, x.magnitude, x.exponent, false, f, mode).scalar;
}

EncodedScalar encode(double x, const FormatDescriptor& f, RoundingMode mode) {
  if (std::isnan(x)) return canonical_nan(f);
  if (std::isinf(x)) {
    if (f.has_infinity()) return infinity(f, x < 0);
    if (f.is_posit()) return canonical_nan(f);
    return max_finite(f, x < 0);
  }
  return encode(ExactReal::from_double(x), f, mode);
}

EncodeResult pack_normalize_round(const WideInt& wide_sum, int scale_anchor,
                                  const FormatDescriptor& f) {
  if (wide_sum.is_zero()) return {EncodedScalar(0, f), false, false};
  const bool negative = wide_sum.is_negative();

  if (f.is_fxp()) {
    // Regularized mantissa: shift onto the frac_bits grid, ceil, saturate.
    const int n = f.total_bits;
    const int sh = scale_anchor + f.frac_bits;
    auto saturate = [&]() { return EncodeResult{max_finite(f, negative), true, true}; };
    std::int64_t q;
    bool inexact = false;
    if (sh >= 0) {
      if (n - sh <= 0 || !wide_sum.fits_signed(n - sh)) return saturate();
      q = wide_sum.low_int64() << sh;
    } else {
      WideInt v = wide_sum.ashr_sticky(-sh, inexact);
      if (inexact) v += WideInt::from_int64(1);
      if (!v.fits_signed(n)) return saturate();
      q = v.low_int64();
    }
    return {EncodedScalar(static_cast<std::uint32_t>(q) & f.mask(), f), inexact, false};
  }

  // Leading-zero anticipation on the magnitude, then a single rounding.
  const WideInt mag = wide_sum.abs();
  const int len = mag.bit_length();
  std::uint64_t sig;
  int exp = scale_anchor;
  bool sticky = false;
  if (len <= 64) {
    sig = mag.limbs()[0];
  } else {
    const int sh = len - 64;
    sig = mag.extract64(sh);
    sticky = mag.any_below(sh);
    exp += sh;
  }
  return round_to_format(negative, sig, exp, sticky, f, RoundingMode::TowardPositive);
}

// ------------------------------------------------------------------ text

std::string exact_decimal(const ExactReal& x) {
  const ExactReal v = x.normalized();
  std::string out = v.negative ? "-" : "";
  if (v.magnitude == 0) return out + "0";

  std::vector<int> digits;
  for (std::uint64_t m = v.magnitude; m > 0; m /= 10) digits.push_back(static_cast<int>(m % 10));
  int point = 0;  // digits to the right of the decimal point
  if (v.exponent >= 0) {
    for (int i = 0; i < v.exponent; ++i) mul_small(digits, 2);
  } else {
    // m / 2^k == m * 5^k / 10^k
    for (int i = 0; i < -v.exponent; ++i) mul_small(digits, 5);
    point = -v.exponent;
  }
  while (static_cast<int>(digits.size()) <= point) digits.push_back(0);
  for (int i = static_cast<int>(digits.size()) - 1; i >= 0; --i) {
    out += static_cast<char>('0' + digits[i]);
    if (i == point && point > 0) out += '.';
  }
  return out;
}

std::string hex_bits(const EncodedScalar& s) {
  static const char* kDigits = "0123456789ABCDEF";
  std::string out = "0x";
  for (int d = (s.format().total_bits + 3) / 4 - 1; d >= 0; --d) out += kDigits[(s.bits() >> (4 * d)) & 0xFu];
  return out;
}

std::ostream& operator<<(std::ostream& os, const EncodedScalar& s) {
  return os << s.format().name() << ' ' << hex_bits(s);
}

std::string conformance_csv(const FormatDescriptor& f) {
  std::string out = "bits_hex,value_decimal,flags\n";
  for (std::uint32_t b = 0; b <= f.mask(); ++b) {
    const EncodedScalar s(b, f);
    const UnpackedOperand u = unpack(s);
    const Decoded d = decode(s);
    std::string value;
    std::string flags;
    if (d.is_nan()) {
      value = "nan";
      flags = f.is_posit() ? "nar" : "nan";
    } else if (d.is_inf()) {
      value = d.value.negative ? "-inf" : "inf";
      flags = "inf";
    } else {
      value = exact_decimal(d.value);
      flags = u.is_zero ? "zero" : (u.is_subnormal ? "subnormal" : "normal");
    }
    out += hex_bits(s) + "," + value + "," + flags + "\n";
  }
  return out;
}

}  // namespace polaron
