// Copyright 2026 The Polaron Authors.
// SPDX-License-Identifier: Apache-2.0

#include <array>
#include <charconv>
#include <string>

#include "polaron/formats.hpp"

namespace polaron {
namespace {

FormatDescriptor make_float(FormatKind kind, int exp_bits, int mant_bits) {
  FormatDescriptor f;
  f.kind = kind;
  f.exp_bits = exp_bits;
  f.mant_bits = mant_bits;
  f.total_bits = 1 + exp_bits + mant_bits;
  f.bias = (1 << (exp_bits - 1)) - 1;
  return f;
}

bool parse_int(std::string_view s, int& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

constexpr std::array<std::string_view, 10> kCanonicalNames = {
    "fxp4:f<k>", "fxp8:f<k>", "fxp16:f<k>", "fp8e4m3", "fp8e5m2",
    "fp16e5m10", "fp16e6m9",  "bf16",       "posit8",  "posit16"};

std::string canonical_list() {
  std::string s;
  for (auto n : kCanonicalNames) {
    if (!s.empty()) s += ", ";
    s += n;
  }
  return s;
}

[[noreturn]] void bad_format(std::string_view text) {
  throw ConfigError("unknown format '" + std::string(text) + "'; expected one of: " +
                    canonical_list());
}

}  // namespace

FormatDescriptor FormatDescriptor::fxp(int total_bits, int frac_bits) {
  FormatDescriptor f;
  f.kind = FormatKind::FxP;
  f.total_bits = total_bits;
  f.frac_bits = frac_bits;
  f.validate();
  return f;
}

FormatDescriptor FormatDescriptor::fp8_e4m3() { return make_float(FormatKind::Float, 4, 3); }
FormatDescriptor FormatDescriptor::fp8_e5m2() { return make_float(FormatKind::Float, 5, 2); }
FormatDescriptor FormatDescriptor::fp16_e5m10() { return make_float(FormatKind::Float, 5, 10); }
FormatDescriptor FormatDescriptor::fp16_e6m9() { return make_float(FormatKind::Float, 6, 9); }
FormatDescriptor FormatDescriptor::bf16() { return make_float(FormatKind::Bfloat, 8, 7); }

FormatDescriptor FormatDescriptor::posit(int total_bits, int es) {
  FormatDescriptor f;
  f.kind = FormatKind::Posit;
  f.total_bits = total_bits;
  f.es = es;
  f.validate();
  return f;
}

void FormatDescriptor::validate() const {
  switch (kind) {
    case FormatKind::FxP:
      if (total_bits != 4 && total_bits != 8 && total_bits != 16)
        throw ConfigError("fxp width must be 4, 8 or 16");
      if (frac_bits < 0 || frac_bits > total_bits - 1)
        throw ConfigError("fxp frac_bits must lie in [0, total_bits-1]");
      break;
    case FormatKind::Float:
    case FormatKind::Bfloat: {
      const bool known = (exp_bits == 4 && mant_bits == 3) || (exp_bits == 5 && mant_bits == 2) ||
                         (exp_bits == 5 && mant_bits == 10) || (exp_bits == 6 && mant_bits == 9) ||
                         (exp_bits == 8 && mant_bits == 7);
      if (!known || 1 + exp_bits + mant_bits != total_bits)
        throw ConfigError("unsupported float layout");
      break;
    }
    case FormatKind::Posit:
      if (total_bits != 8 && total_bits != 16) throw ConfigError("posit width must be 8 or 16");
      if (es < 0 || es > 3) throw ConfigError("posit es must lie in [0, 3]");
      break;
  }
}

int FormatDescriptor::sig_width() const {
  switch (kind) {
    case FormatKind::FxP:
      return total_bits;
    case FormatKind::Posit:
      return total_bits - 2;
    default:
      return mant_bits + 1;
  }
}

int FormatDescriptor::min_scale() const {
  switch (kind) {
    case FormatKind::FxP:
      return total_bits - 1 - frac_bits;
    case FormatKind::Posit:
      return -max_scale();
    default:
      return 1 - bias;
  }
}

int FormatDescriptor::max_scale() const {
  switch (kind) {
    case FormatKind::FxP:
      return total_bits - 1 - frac_bits;
    case FormatKind::Posit:
      return (total_bits - 2) << es;
    default:
      // OFP8 E4M3 keeps the all-ones exponent for finite values.
      return is_ofp8_e4m3() ? (1 << exp_bits) - 1 - bias : (1 << exp_bits) - 2 - bias;
  }
}

std::string FormatDescriptor::name() const {
  switch (kind) {
    case FormatKind::FxP:
      return "fxp" + std::to_string(total_bits) + ":f" + std::to_string(frac_bits);
    case FormatKind::Posit:
      return "posit" + std::to_string(total_bits) + (es == 2 ? "" : ":es" + std::to_string(es));
    case FormatKind::Bfloat:
      return "bf16";
    case FormatKind::Float:
      return "fp" + std::to_string(total_bits) + "e" + std::to_string(exp_bits) + "m" +
             std::to_string(mant_bits);
  }
  return "?";
}

FormatDescriptor parse_format(std::string_view text) {
  if (text == "fp8e4m3") return FormatDescriptor::fp8_e4m3();
  if (text == "fp8e5m2") return FormatDescriptor::fp8_e5m2();
  if (text == "fp16e5m10") return FormatDescriptor::fp16_e5m10();
  if (text == "fp16e6m9") return FormatDescriptor::fp16_e6m9();
  if (text == "bf16") return FormatDescriptor::bf16();

  const auto colon = text.find(':');
  const std::string_view head = text.substr(0, colon);
  const std::string_view tail = colon == std::string_view::npos ? "" : text.substr(colon + 1);

  int width = 0;
  if (head.starts_with("fxp") && parse_int(head.substr(3), width)) {
    if (width != 4 && width != 8 && width != 16) bad_format(text);
    if (tail.empty()) return FormatDescriptor::fxp(width);
    int frac = 0;
    if (!tail.starts_with("f") || !parse_int(tail.substr(1), frac)) bad_format(text);
    if (frac < 0 || frac > width - 1) bad_format(text);
    return FormatDescriptor::fxp(width, frac);
  }
  if (head.starts_with("posit") && parse_int(head.substr(5), width)) {
    if (width != 8 && width != 16) bad_format(text);
    if (tail.empty()) return FormatDescriptor::posit(width);
    int es = 0;
    if (!tail.starts_with("es") || !parse_int(tail.substr(2), es)) bad_format(text);
    if (es < 0 || es > 3) bad_format(text);
    return FormatDescriptor::posit(width, es);
  }
  bad_format(text);
}

std::span<const std::string_view> canonical_format_names() { return kCanonicalNames; }

std::span<const FormatDescriptor> all_default_formats() {
  static const std::array<FormatDescriptor, 10> formats = {
      FormatDescriptor::fxp(4),       FormatDescriptor::fxp(8),        FormatDescriptor::fxp(16),
      FormatDescriptor::fp8_e4m3(),   FormatDescriptor::fp8_e5m2(),    FormatDescriptor::fp16_e5m10(),
      FormatDescriptor::fp16_e6m9(),  FormatDescriptor::bf16(),        FormatDescriptor::posit(8),
      FormatDescriptor::posit(16)};
  return formats;
}

EncodedScalar::EncodedScalar(std::uint32_t bits, FormatDescriptor format) : format_(format) {
  if ((bits & ~format.mask()) != 0)
    throw std::invalid_argument("bit pattern wider than " + format.name());
  bits_ = static_cast<std::uint16_t>(bits);
}

}  // namespace polaron
