// Copyright 2026 The Polaron Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <iosfwd>
#include <string>
#include <string_view>

namespace polaron {

class WideInt;

/// Raised for malformed format strings, mismatched modes and other
/// configuration problems detected before any arithmetic happens.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class FormatKind : std::uint8_t { FxP, Float, Bfloat, Posit };

enum class RoundingMode : std::uint8_t { NearestEven, TowardPositive };

/// Static description of one numeric format.
///
/// Only the fields relevant to `kind` are meaningful; the others stay zero so
/// that defaulted equality compares formats by value.
struct FormatDescriptor {
  FormatKind kind = FormatKind::FxP;
  int total_bits = 8;
  int exp_bits = 0;   // Float / Bfloat
  int mant_bits = 0;  // Float / Bfloat, explicit mantissa bits
  int es = 0;         // Posit
  int frac_bits = 0;  // FxP
  int bias = 0;       // Float / Bfloat

  static FormatDescriptor fxp(int total_bits, int frac_bits);
  static FormatDescriptor fxp(int total_bits) { return fxp(total_bits, total_bits - 2); }
  static FormatDescriptor fp8_e4m3();
  static FormatDescriptor fp8_e5m2();
  static FormatDescriptor fp16_e5m10();
  static FormatDescriptor fp16_e6m9();
  static FormatDescriptor bf16();
  static FormatDescriptor posit(int total_bits, int es = 2);

  bool operator==(const FormatDescriptor&) const = default;

  bool is_fxp() const { return kind == FormatKind::FxP; }
  bool is_posit() const { return kind == FormatKind::Posit; }
  bool is_float() const { return kind == FormatKind::Float || kind == FormatKind::Bfloat; }
  /// E4M3 follows the OFP8 convention: no infinities, S.1111.111 is NaN.
  bool is_ofp8_e4m3() const { return kind == FormatKind::Float && exp_bits == 4 && mant_bits == 3; }
  bool has_infinity() const { return is_float() && !is_ofp8_e4m3(); }

  /// Significand width on the datapath, hidden bit included.
  /// FxP: total_bits (magnitude of a two's-complement value).
  /// Posit: total_bits - 2, wide enough for the es = 0 fraction.
  int sig_width() const;

  /// Unbiased exponent range of the leading significand bit.
  /// Float: [1 - bias, emax]; Posit: [-maxscale, maxscale];
  /// FxP: both equal to total_bits - 1 - frac_bits.
  int min_scale() const;
  int max_scale() const;

  std::uint32_t mask() const { return (1u << total_bits) - 1u; }
  std::string name() const;

  void validate() const;
};

/// Parses `fxp8:f4`, `fp8e4m3`, `bf16`, `posit16`, `posit8:es1`, ...
/// Throws ConfigError listing the canonical names on failure.
FormatDescriptor parse_format(std::string_view text);

/// Canonical format names accepted by parse_format (FxP shown as `fxpN:f<k>`).
std::span<const std::string_view> canonical_format_names();

/// Every supported format instance with default parameters, in a stable order.
std::span<const FormatDescriptor> all_default_formats();

class EncodedScalar {
 public:
  EncodedScalar() = default;
  EncodedScalar(std::uint32_t bits, FormatDescriptor format);

  std::uint16_t bits() const { return bits_; }
  const FormatDescriptor& format() const { return format_; }

  bool operator==(const EncodedScalar&) const = default;

 private:
  std::uint16_t bits_ = 0;
  FormatDescriptor format_{};
};

/// Exact dyadic value (-1)^negative * magnitude * 2^exponent.
/// A zero magnitude with `negative` set is the IEEE negative zero.
struct ExactReal {
  bool negative = false;
  std::uint64_t magnitude = 0;
  int exponent = 0;

  bool is_zero() const { return magnitude == 0; }
  /// Strips trailing zero bits so that equal values compare equal.
  ExactReal normalized() const;
  double to_double() const;
  static ExactReal from_double(double value);
  /// Numeric equality; +0 and -0 are equal.
  bool same_value(const ExactReal& other) const;
};

enum class ValueClass : std::uint8_t { Finite, Infinite, NaN };

struct Decoded {
  ValueClass cls = ValueClass::Finite;
  ExactReal value;  // sign is meaningful for Infinite as well

  bool is_finite() const { return cls == ValueClass::Finite; }
  bool is_nan() const { return cls == ValueClass::NaN; }
  bool is_inf() const { return cls == ValueClass::Infinite; }
  double to_double() const;
};

struct UnpackedOperand {
  bool negative = false;
  int scale = 0;                  // exponent of the significand's leading bit position
  std::uint32_t significand = 0;  // hidden bit explicit for normal values
  int sig_width = 1;
  bool is_zero = false;
  bool is_nar_or_nan = false;
  bool is_inf = false;
  bool is_subnormal = false;

  bool is_special() const { return is_nar_or_nan || is_inf; }
  /// Weight of the significand's least-significant bit.
  int lsb_exponent() const { return scale - (sig_width - 1); }
};

struct EncodeResult {
  EncodedScalar scalar;
  bool inexact = false;
  bool overflow = false;
};

Decoded decode(const EncodedScalar& s);
UnpackedOperand unpack(const EncodedScalar& s);

/// Rounds sig * 2^exp (plus an infinitesimal when `sticky` is set) into `f`.
/// Shared core of encode and pack_normalize_round.
EncodeResult round_to_format(bool negative, std::uint64_t sig, int exp, bool sticky,
                             const FormatDescriptor& f, RoundingMode mode);

EncodedScalar encode(const ExactReal& x, const FormatDescriptor& f,
                     RoundingMode mode = RoundingMode::NearestEven);
/// NaN maps to the canonical NaN/NaR (zero for FxP); infinities saturate
/// where the format has none (NaR for posit).
EncodedScalar encode(double x, const FormatDescriptor& f,
                     RoundingMode mode = RoundingMode::NearestEven);

EncodedScalar canonical_nan(const FormatDescriptor& f);
EncodedScalar infinity(const FormatDescriptor& f, bool negative);
EncodedScalar max_finite(const FormatDescriptor& f, bool negative);

/// Output restructuring stage: leading-zero anticipation, normalization and
/// RoundTowardPositive re-encoding of an accumulator whose least-significant
/// bit weighs 2^scale_anchor. FxP targets skip the exponent logic and produce
/// the shifted, saturated mantissa. Overflow saturates per format and is
/// reported in the result.
EncodeResult pack_normalize_round(const WideInt& wide_sum, int scale_anchor,
                                  const FormatDescriptor& f);

/// `bits_hex,value_decimal,flags` rows for every pattern of an 8-bit format.
std::string conformance_csv(const FormatDescriptor& f);

/// Decimal rendering of an exact dyadic value (no rounding).
std::string exact_decimal(const ExactReal& x);

std::string hex_bits(const EncodedScalar& s);
/// "<format> <hex>", e.g. "posit8 0x40".
std::ostream& operator<<(std::ostream& os, const EncodedScalar& s);

}  // namespace polaron
