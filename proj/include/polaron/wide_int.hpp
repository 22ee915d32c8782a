// Copyright 2026 The Polaron Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <string>

namespace polaron {

/// Fixed-capacity two's-complement integer used as the accumulator register.
///
/// Arithmetic wraps modulo 2^kBits; callers keep values inside their register
/// width and check with fits_signed(). kBits covers the widest Kulisch
/// register (BF16, 554 bits).
class WideInt {
 public:
  static constexpr int kLimbs = 10;
  static constexpr int kBits = kLimbs * 64;

  WideInt() = default;
  static WideInt from_int64(std::int64_t v);
  /// v * 2^shift; shift must keep the value inside kBits.
  static WideInt from_uint64_shifted(std::uint64_t v, int shift);
  static WideInt from_limbs(const std::array<std::uint64_t, kLimbs>& limbs) {
    WideInt r;
    r.limbs_ = limbs;
    return r;
  }

  bool is_zero() const;
  bool is_negative() const { return (limbs_[kLimbs - 1] >> 63) != 0; }
  int sign() const { return is_zero() ? 0 : (is_negative() ? -1 : 1); }

  WideInt operator-() const;
  WideInt operator~() const;
  WideInt& operator+=(const WideInt& o);
  WideInt& operator-=(const WideInt& o);
  WideInt& operator&=(const WideInt& o);
  WideInt& operator|=(const WideInt& o);
  WideInt& operator^=(const WideInt& o);
  friend WideInt operator+(WideInt a, const WideInt& b) { return a += b; }
  friend WideInt operator-(WideInt a, const WideInt& b) { return a -= b; }
  friend WideInt operator&(WideInt a, const WideInt& b) { return a &= b; }
  friend WideInt operator|(WideInt a, const WideInt& b) { return a |= b; }
  friend WideInt operator^(WideInt a, const WideInt& b) { return a ^= b; }

  WideInt shl(int n) const;
  /// Arithmetic shift right (floor division by 2^n).
  WideInt ashr(int n) const;
  /// Arithmetic shift right reporting whether any 1 bit was shifted out.
  WideInt ashr_sticky(int n, bool& sticky) const;
  /// Arithmetic shift right with the shifted-out bits ORed into bit 0.
  WideInt ashr_jam(int n) const;

  bool bit(int i) const { return (limbs_[i / 64] >> (i % 64)) & 1u; }
  /// Bits [pos, pos + 64) of the two's-complement pattern.
  std::uint64_t extract64(int pos) const;
  /// Any 1 bit strictly below position `pos`.
  bool any_below(int pos) const;
  /// Index of the highest set bit + 1 for a non-negative value; 0 for zero.
  int bit_length() const;
  /// True when the value lies in [-2^(width-1), 2^(width-1)).
  bool fits_signed(int width) const;
  WideInt abs() const { return is_negative() ? -*this : *this; }

  double to_double() const;
  std::string to_hex() const;

  std::int64_t low_int64() const { return static_cast<std::int64_t>(limbs_[0]); }
  const std::array<std::uint64_t, kLimbs>& limbs() const { return limbs_; }

  bool operator==(const WideInt&) const = default;
  friend bool operator<(const WideInt& a, const WideInt& b);

 private:
  std::array<std::uint64_t, kLimbs> limbs_{};
};

}  // namespace polaron
