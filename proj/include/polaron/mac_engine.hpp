// Copyright 2026 The Polaron Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "polaron/formats.hpp"
#include "polaron/wide_int.hpp"

namespace polaron {

inline constexpr int kBoothUnits = 16;
inline constexpr int kPipelineFill = 4;
/// Extra low-order bits kept below the step's largest product in AlignToMax.
inline constexpr int kAlignGuardBits = 5;

struct PrecisionMode {
  FormatDescriptor format;
  int lanes = 1;
  int tiles_per_lane = 16;

  /// lanes = floor(16 / ceil(sig_width/4)^2).
  static PrecisionMode for_format(const FormatDescriptor& f);
  /// Multiplier operand width: sig_width rounded up to a multiple of 4.
  int tile_width() const;
  bool operator==(const PrecisionMode&) const = default;
};

/// 128-bit SIMD register; lane i holds bits [i*total_bits, (i+1)*total_bits).
class VectorWord {
 public:
  explicit VectorWord(PrecisionMode mode) : mode_(mode) {}
  /// Packs up to mode.lanes scalars; missing lanes stay zero.
  static VectorWord pack(std::span<const EncodedScalar> lanes, const PrecisionMode& mode);

  EncodedScalar lane(int i) const;
  void set_lane(int i, const EncodedScalar& s);
  const PrecisionMode& mode() const { return mode_; }
  const std::array<std::uint64_t, 2>& payload() const { return payload_; }
  std::string to_hex() const;
  static VectorWord from_hex(std::string_view hex, const PrecisionMode& mode);

 private:
  PrecisionMode mode_;
  std::array<std::uint64_t, 2> payload_{};
};

enum class Accumulation { ExactWide, AlignToMax };

std::string accumulation_name(Accumulation a);
Accumulation parse_accumulation(std::string_view text);

struct MacConfig {
  PrecisionMode mode;
  Accumulation accumulation = Accumulation::ExactWide;
  bool zero_skip = true;
  FormatDescriptor output_format;

  /// Output format defaults to the mode's format.
  static MacConfig make(const FormatDescriptor& f, Accumulation acc = Accumulation::ExactWide,
                        bool zero_skip = true);
  void validate() const;
};

struct WideAccumulator {
  WideInt value;
  int width_bits = 0;
  /// Exponent of the least significant bit.
  int unit_scale = 0;
  bool sticky_overflow = false;
  FormatDescriptor format;
  Accumulation accumulation = Accumulation::ExactWide;
  /// AlignToMax: set once the first nonzero product fixed the anchor.
  bool anchored = false;
  bool nan = false;
  bool pos_inf = false;
  bool neg_inf = false;

  static WideAccumulator for_config(const MacConfig& cfg);
  /// Quire for posits, Kulisch register for floats, 2n+32 bits for FxP.
  static int default_width(const FormatDescriptor& f);
  static int default_unit_scale(const FormatDescriptor& f);
};

struct PipelineStats {
  std::int64_t cycles = 0;
  std::int64_t vector_ops = 0;
  std::int64_t mac_ops = 0;
  std::int64_t skipped_lanes = 0;
  double lane_utilization = 0.0;

  /// Single-mode stats: cycles = vector_ops + fill (0 when idle).
  static PipelineStats from_counts(std::int64_t vector_ops, std::int64_t skipped_lanes, int lanes);
  bool operator==(const PipelineStats&) const = default;
};

/// Radix-2 Booth multiply of two 4-bit two's-complement operands.
int booth_multiply_4x4(int a, int b);

/// Unsigned width x width product built from ceil(width/4)^2 Booth tiles.
std::uint32_t tile_multiply(std::uint32_t a, std::uint32_t b, int width);

struct LaneProduct {
  bool negative = false;
  std::uint64_t sig = 0;
  /// Sum of operand scales; value = sig * 2^lsb_exponent.
  int product_scale = 0;
  int lsb_exponent = 0;
  bool is_zero = false;
  bool is_nan = false;
  bool is_inf = false;
};

LaneProduct lane_multiply(const UnpackedOperand& a, const UnpackedOperand& b,
                          const PrecisionMode& mode);

struct AlignedProducts {
  int max_scale = 0;
  /// Exponent of bit 0 of every aligned value.
  int anchor_lsb = 0;
  std::vector<WideInt> aligned;
};

/// Negates, then shifts each product right onto the anchor of the largest
/// product with the shifted-out bits jammed into bit 0. `guard_bits` extra
/// bits are kept below the largest product's LSB. Zero and special products
/// must be filtered out by the caller.
AlignedProducts exponent_max_align(std::span<const LaneProduct> products,
                                   int guard_bits = kAlignGuardBits);

struct CsaTrace {
  std::vector<std::string> lines;
};

/// Sum of the addends through 4:2 compressor layers and a carry-select adder.
WideInt csa_reduce(std::span<const WideInt> addends, CsaTrace* trace = nullptr);

struct StepReport {
  int skipped_lanes = 0;
  int max_scale = 0;
  int active_products = 0;
};

WideAccumulator simd_mac_step(const VectorWord& va, const VectorWord& vb, const WideAccumulator& acc,
                              const MacConfig& cfg, StepReport* report = nullptr);

/// Rounds the accumulator into the output format (TowardPositive).
EncodedScalar read_accumulator(const WideAccumulator& acc, const FormatDescriptor& out);

struct PipelineTrace {
  std::vector<std::string> lines;
};

struct DotResult {
  EncodedScalar result;
  PipelineStats stats;
  WideAccumulator accumulator;
};

DotResult dot_product(std::span<const EncodedScalar> a, std::span<const EncodedScalar> b,
                      const MacConfig& cfg, PipelineTrace* trace = nullptr);

struct DotJob {
  std::vector<EncodedScalar> a;
  std::vector<EncodedScalar> b;
};

/// Independent dot products evaluated in parallel; identical to a sequential loop.
std::vector<DotResult> dot_product_batch(std::span<const DotJob> jobs, const MacConfig& cfg);

struct VectorOp {
  PrecisionMode mode;
  /// Lanes carrying useful work (<= mode.lanes).
  int active_lanes = 0;
};

struct PipelineConfig {
  /// Stall cycles inserted whenever consecutive ops change mode.
  int mode_switch_penalty = 0;
};

struct PipelineReport {
  PipelineStats total;
  /// Keyed by format name. Per-mode cycles count issue slots only; fill and
  /// switch penalties appear in the total.
  std::map<std::string, PipelineStats> per_mode;
  std::int64_t mode_switches = 0;
};

PipelineReport run_pipeline(std::span<const VectorOp> ops, const PipelineConfig& cfg = {});

}  // namespace polaron
