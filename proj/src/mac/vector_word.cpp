// Copyright 2026 The Polaron Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>

#include "polaron/mac_engine.hpp"

namespace polaron {

PrecisionMode PrecisionMode::for_format(const FormatDescriptor& f) {
  f.validate();
  PrecisionMode m;
  m.format = f;
  const int digits = (f.sig_width() + 3) / 4;
  m.tiles_per_lane = digits * digits;
  m.lanes = kBoothUnits / m.tiles_per_lane;
  return m;
}

int PrecisionMode::tile_width() const { return 4 * ((format.sig_width() + 3) / 4); }

VectorWord VectorWord::pack(std::span<const EncodedScalar> lanes, const PrecisionMode& mode) {
  if (static_cast<int>(lanes.size()) > mode.lanes)
    throw std::invalid_argument("more scalars than lanes");
  VectorWord w(mode);
  for (std::size_t i = 0; i < lanes.size(); ++i) w.set_lane(static_cast<int>(i), lanes[i]);
  return w;
}

EncodedScalar VectorWord::lane(int i) const {
  const int tb = mode_.format.total_bits;
  const int pos = i * tb;
  const std::uint64_t word = payload_[pos / 64] >> (pos % 64);
  return EncodedScalar(static_cast<std::uint32_t>(word) & mode_.format.mask(), mode_.format);
}

void VectorWord::set_lane(int i, const EncodedScalar& s) {
  if (i < 0 || i >= mode_.lanes) throw std::out_of_range("lane index");
  if (!(s.format() == mode_.format)) throw ConfigError("lane format differs from vector mode");
  const int pos = i * mode_.format.total_bits;
  auto& word = payload_[pos / 64];
  const std::uint64_t mask = static_cast<std::uint64_t>(mode_.format.mask()) << (pos % 64);
  word = (word & ~mask) | (static_cast<std::uint64_t>(s.bits()) << (pos % 64));
}

std::string VectorWord::to_hex() const {
  // Only the occupied lanes are printed, most significant lane first.
  const int digits = (mode_.lanes * mode_.format.total_bits + 3) / 4;
  std::string out;
  for (int d = digits - 1; d >= 0; --d) {
    const int pos = 4 * d;
    const unsigned nibble = (payload_[pos / 64] >> (pos % 64)) & 0xFu;
    out += "0123456789ABCDEF"[nibble];
  }
  return "0x" + out;
}

VectorWord VectorWord::from_hex(std::string_view hex, const PrecisionMode& mode) {
  if (hex.starts_with("0x") || hex.starts_with("0X")) hex.remove_prefix(2);
  const int max_digits = (mode.lanes * mode.format.total_bits + 3) / 4;
  if (hex.empty() || static_cast<int>(hex.size()) > max_digits)
    throw ConfigError("vector payload '" + std::string(hex) + "' does not fit " +
                      std::to_string(mode.lanes) + " lanes of " + mode.format.name());
  VectorWord w(mode);
  int pos = 0;
  for (auto it = hex.rbegin(); it != hex.rend(); ++it, pos += 4) {
    const char c = *it;
    unsigned v;
    if (c >= '0' && c <= '9') v = c - '0';
    else if (c >= 'a' && c <= 'f') v = c - 'a' + 10;
    else if (c >= 'A' && c <= 'F') v = c - 'A' + 10;
    else throw ConfigError("bad hex digit in vector payload");
    w.payload_[pos / 64] |= static_cast<std::uint64_t>(v) << (pos % 64);
  }
  if (mode.lanes * mode.format.total_bits < 128) {
    const int used = mode.lanes * mode.format.total_bits;
    for (int bit = used; bit < 128; ++bit)
      if ((w.payload_[bit / 64] >> (bit % 64)) & 1u) throw ConfigError("vector payload exceeds lane area");
  }
  return w;
}

std::string accumulation_name(Accumulation a) {
  return a == Accumulation::ExactWide ? "exact" : "align";
}

Accumulation parse_accumulation(std::string_view text) {
  if (text == "exact") return Accumulation::ExactWide;
  if (text == "align") return Accumulation::AlignToMax;
  throw ConfigError("unknown accumulation '" + std::string(text) + "'; expected exact or align");
}

MacConfig MacConfig::make(const FormatDescriptor& f, Accumulation acc, bool zero_skip) {
  MacConfig c;
  c.mode = PrecisionMode::for_format(f);
  c.accumulation = acc;
  c.zero_skip = zero_skip;
  c.output_format = f;
  c.validate();
  return c;
}

void MacConfig::validate() const {
  mode.format.validate();
  output_format.validate();
  if (accumulation == Accumulation::AlignToMax && mode.format.is_fxp())
    throw ConfigError("align accumulation is only available for float and posit modes");
}

int WideAccumulator::default_width(const FormatDescriptor& f) {
  if (f.is_posit()) return 4 * f.max_scale() + 32;
  if (f.is_fxp()) return 2 * f.total_bits + 32;
  return 2 * (f.max_scale() - f.min_scale()) + 2 * f.sig_width() + 32;
}

int WideAccumulator::default_unit_scale(const FormatDescriptor& f) {
  if (f.is_posit()) return -2 * f.max_scale();
  if (f.is_fxp()) return -2 * f.frac_bits;
  return 2 * (f.min_scale() - (f.sig_width() - 1));
}

WideAccumulator WideAccumulator::for_config(const MacConfig& cfg) {
  cfg.validate();
  WideAccumulator acc;
  acc.format = cfg.mode.format;
  acc.accumulation = cfg.accumulation;
  acc.width_bits = default_width(cfg.mode.format);
  acc.unit_scale = default_unit_scale(cfg.mode.format);
  return acc;
}

PipelineStats PipelineStats::from_counts(std::int64_t vector_ops, std::int64_t skipped_lanes,
                                         int lanes) {
  PipelineStats s;
  s.vector_ops = vector_ops;
  s.skipped_lanes = skipped_lanes;
  s.cycles = vector_ops > 0 ? vector_ops + kPipelineFill : 0;
  s.mac_ops = vector_ops * lanes - skipped_lanes;
  s.lane_utilization =
      vector_ops > 0 ? static_cast<double>(s.mac_ops) / static_cast<double>(vector_ops * lanes) : 0.0;
  return s;
}

}  // namespace polaron
