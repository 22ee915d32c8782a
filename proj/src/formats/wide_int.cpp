// Copyright 2026 The Polaron Authors.
// SPDX-License-Identifier: Apache-2.0

#include "polaron/wide_int.hpp"

#include <bit>
#include <cmath>
#include <cstdio>

namespace polaron {

WideInt WideInt::from_int64(std::int64_t v) {
  WideInt r;
  const std::uint64_t fill = v < 0 ? ~std::uint64_t{0} : 0;
  r.limbs_.fill(fill);
  r.limbs_[0] = static_cast<std::uint64_t>(v);
  return r;
}

WideInt WideInt::from_uint64_shifted(std::uint64_t v, int shift) {
  WideInt r;
  if (v == 0) return r;
  const int limb = shift / 64;
  const int bit = shift % 64;
  r.limbs_[limb] = v << bit;
  if (bit != 0 && limb + 1 < kLimbs) r.limbs_[limb + 1] = v >> (64 - bit);
  return r;
}

bool WideInt::is_zero() const {
  for (auto l : limbs_)
    if (l != 0) return false;
  return true;
}

WideInt WideInt::operator~() const {
  WideInt r;
  for (int i = 0; i < kLimbs; ++i) r.limbs_[i] = ~limbs_[i];
  return r;
}

WideInt WideInt::operator-() const {
  WideInt r = ~*this;
  for (int i = 0; i < kLimbs; ++i) {
    if (++r.limbs_[i] != 0) break;
  }
  return r;
}

WideInt& WideInt::operator+=(const WideInt& o) {
  unsigned carry = 0;
  for (int i = 0; i < kLimbs; ++i) {
    const std::uint64_t a = limbs_[i];
    const std::uint64_t s = a + o.limbs_[i];
    const unsigned c1 = s < a;
    const std::uint64_t t = s + carry;
    const unsigned c2 = t < s;
    limbs_[i] = t;
    carry = c1 | c2;
  }
  return *this;
}

WideInt& WideInt::operator-=(const WideInt& o) { return *this += -o; }

WideInt& WideInt::operator&=(const WideInt& o) {
  for (int i = 0; i < kLimbs; ++i) limbs_[i] &= o.limbs_[i];
  return *this;
}

WideInt& WideInt::operator|=(const WideInt& o) {
  for (int i = 0; i < kLimbs; ++i) limbs_[i] |= o.limbs_[i];
  return *this;
}

WideInt& WideInt::operator^=(const WideInt& o) {
  for (int i = 0; i < kLimbs; ++i) limbs_[i] ^= o.limbs_[i];
  return *this;
}

WideInt WideInt::shl(int n) const {
  WideInt r;
  if (n >= kBits) return r;
  if (n <= 0) return n == 0 ? *this : ashr(-n);
  const int limb = n / 64;
  const int bit = n % 64;
  for (int i = kLimbs - 1; i >= limb; --i) {
    std::uint64_t v = limbs_[i - limb] << bit;
    if (bit != 0 && i - limb - 1 >= 0) v |= limbs_[i - limb - 1] >> (64 - bit);
    r.limbs_[i] = v;
  }
  return r;
}

WideInt WideInt::ashr(int n) const {
  if (n <= 0) return n == 0 ? *this : shl(-n);
  const std::uint64_t fill = is_negative() ? ~std::uint64_t{0} : 0;
  WideInt r;
  if (n >= kBits) {
    r.limbs_.fill(fill);
    return r;
  }
  const int limb = n / 64;
  const int bit = n % 64;
  for (int i = 0; i < kLimbs; ++i) {
    const int src = i + limb;
    const std::uint64_t lo = src < kLimbs ? limbs_[src] : fill;
    const std::uint64_t hi = src + 1 < kLimbs ? limbs_[src + 1] : fill;
    r.limbs_[i] = bit == 0 ? lo : (lo >> bit) | (hi << (64 - bit));
  }
  return r;
}

bool WideInt::any_below(int pos) const {
  if (pos <= 0) return false;
  if (pos >= kBits) return !is_zero();
  const int limb = pos / 64;
  const int bit = pos % 64;
  for (int i = 0; i < limb; ++i)
    if (limbs_[i] != 0) return true;
  return bit != 0 && (limbs_[limb] & ((std::uint64_t{1} << bit) - 1)) != 0;
}

WideInt WideInt::ashr_sticky(int n, bool& sticky) const {
  sticky = any_below(n);
  return ashr(n);
}

WideInt WideInt::ashr_jam(int n) const {
  bool sticky = false;
  WideInt r = ashr_sticky(n, sticky);
  if (sticky) r.limbs_[0] |= 1u;
  return r;
}

std::uint64_t WideInt::extract64(int pos) const {
  if (pos < 0) return extract64(0) << -pos;
  return ashr(pos).limbs_[0];
}

int WideInt::bit_length() const {
  for (int i = kLimbs - 1; i >= 0; --i) {
    if (limbs_[i] != 0) return i * 64 + (64 - std::countl_zero(limbs_[i]));
  }
  return 0;
}

bool WideInt::fits_signed(int width) const {
  if (width >= kBits) return true;
  const WideInt m = is_negative() ? ~*this : *this;
  return m.bit_length() <= width - 1;
}

double WideInt::to_double() const {
  const bool neg = is_negative();
  const WideInt m = neg ? -*this : *this;
  const int len = m.bit_length();
  if (len == 0) return 0.0;
  // Round the magnitude to 64 bits with sticky, then let the hardware
  // conversion round once more to 53 bits; the sticky bit keeps that
  // second rounding correct.
  double r;
  if (len <= 64) {
    r = static_cast<double>(m.limbs_[0]);
  } else {
    const int shift = len - 63;
    std::uint64_t top = m.extract64(shift);
    if (m.any_below(shift)) top |= 1u;
    r = std::ldexp(static_cast<double>(top), shift);
  }
  return neg ? -r : r;
}

std::string WideInt::to_hex() const {
  std::string out;
  char buf[20];
  bool started = false;
  for (int i = kLimbs - 1; i >= 0; --i) {
    if (!started && limbs_[i] == 0 && i != 0) continue;
    std::snprintf(buf, sizeof buf, started ? "%016llx" : "%llx",
                  static_cast<unsigned long long>(limbs_[i]));
    out += buf;
    started = true;
  }
  return out;
}

bool operator<(const WideInt& a, const WideInt& b) {
  const bool an = a.is_negative();
  const bool bn = b.is_negative();
  if (an != bn) return an;
  for (int i = WideInt::kLimbs - 1; i >= 0; --i) {
    if (a.limbs_[i] != b.limbs_[i]) return a.limbs_[i] < b.limbs_[i];
  }
  return false;
}

}  // namespace polaron
