// Copyright 2026 The Polaron Authors.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "polaron/mac_engine.hpp"
#include "polaron/parallel.hpp"

namespace polaron {
namespace {

struct CarrySave {
  WideInt sum;
  WideInt carry;
};

CarrySave full_adder_row(const WideInt& x, const WideInt& y, const WideInt& z) {
  return {x ^ y ^ z, ((x & y) | (x & z) | (y & z)).shl(1)};
}

// 4:2 compressor built from two chained 3:2 rows.
CarrySave compress_4_2(const WideInt& a, const WideInt& b, const WideInt& c, const WideInt& d) {
  const CarrySave first = full_adder_row(a, b, c);
  return full_adder_row(first.sum, first.carry, d);
}

// Final carry-propagate add: each 64-bit block computes both carry-in cases
// and the incoming carry selects one.
WideInt carry_select_add(const WideInt& x, const WideInt& y) {
  std::array<std::uint64_t, WideInt::kLimbs> out{};
  unsigned carry = 0;
  for (int i = 0; i < WideInt::kLimbs; ++i) {
    const std::uint64_t a = x.limbs()[i];
    const std::uint64_t b = y.limbs()[i];
    const std::uint64_t s0 = a + b;
    const unsigned c0 = s0 < a;
    const std::uint64_t s1 = s0 + 1;
    const unsigned c1 = c0 | (s1 == 0);
    out[i] = carry ? s1 : s0;
    carry = carry ? c1 : c0;
  }
  return WideInt::from_limbs(out);
}

std::string signed_hex(const WideInt& v) {
  return v.is_negative() ? "-0x" + (-v).to_hex() : "0x" + v.to_hex();
}

WideInt saturate(const WideInt& v, int width) {
  const WideInt top = WideInt::from_int64(1).shl(width - 1);
  return v.is_negative() ? -top : top - WideInt::from_int64(1);
}

}  // namespace

LaneProduct lane_multiply(const UnpackedOperand& a, const UnpackedOperand& b,
                          const PrecisionMode& mode) {
  LaneProduct p;
  p.negative = a.negative != b.negative;
  if (a.is_nar_or_nan || b.is_nar_or_nan) {
    p.is_nan = true;
    return p;
  }
  if (a.is_inf || b.is_inf) {
    // inf * 0 has no value.
    if (a.is_zero || b.is_zero) p.is_nan = true;
    else p.is_inf = true;
    return p;
  }
  if (a.is_zero || b.is_zero) {
    p.is_zero = true;
    return p;
  }
  p.sig = tile_multiply(a.significand, b.significand, mode.tile_width());
  p.product_scale = a.scale + b.scale;
  p.lsb_exponent = a.lsb_exponent() + b.lsb_exponent();
  return p;
}

AlignedProducts exponent_max_align(std::span<const LaneProduct> products, int guard_bits) {
  if (products.empty()) throw std::invalid_argument("exponent_max_align needs at least one product");
  AlignedProducts out;
  int max_lsb = std::numeric_limits<int>::min();
  out.max_scale = std::numeric_limits<int>::min();
  for (const auto& p : products) {
    max_lsb = std::max(max_lsb, p.lsb_exponent);
    out.max_scale = std::max(out.max_scale, p.product_scale);
  }
  out.anchor_lsb = max_lsb - guard_bits;
  out.aligned.reserve(products.size());
  for (const auto& p : products) {
    WideInt v = WideInt::from_uint64_shifted(p.sig, guard_bits);
    if (p.negative) v = -v;
    out.aligned.push_back(v.ashr_jam(max_lsb - p.lsb_exponent));
  }
  return out;
}

WideInt csa_reduce(std::span<const WideInt> addends, CsaTrace* trace) {
  std::vector<WideInt> level(addends.begin(), addends.end());
  if (level.empty()) return WideInt{};
  int layer = 0;
  while (level.size() > 2) {
    std::vector<WideInt> next;
    std::size_t i = 0;
    for (; i + 4 <= level.size(); i += 4) {
      const CarrySave cs = compress_4_2(level[i], level[i + 1], level[i + 2], level[i + 3]);
      next.push_back(cs.sum);
      next.push_back(cs.carry);
    }
    if (level.size() - i == 3) {
      const CarrySave cs = full_adder_row(level[i], level[i + 1], level[i + 2]);
      next.push_back(cs.sum);
      next.push_back(cs.carry);
    } else {
      for (; i < level.size(); ++i) next.push_back(level[i]);
    }
    if (trace)
      trace->lines.push_back("csa layer=" + std::to_string(layer) + " in=" + std::to_string(level.size()) +
                             " out=" + std::to_string(next.size()));
    level = std::move(next);
    ++layer;
  }
  const WideInt rhs = level.size() == 2 ? level[1] : WideInt{};
  const WideInt total = carry_select_add(level[0], rhs);
  if (trace) trace->lines.push_back("csla sum=" + signed_hex(total));
  return total;
}

WideAccumulator simd_mac_step(const VectorWord& va, const VectorWord& vb, const WideAccumulator& acc,
                              const MacConfig& cfg, StepReport* report) {
  if (!(va.mode() == cfg.mode) || !(vb.mode() == cfg.mode))
    throw ConfigError("vector mode does not match MAC configuration");
  if (!(acc.format == cfg.mode.format) || acc.accumulation != cfg.accumulation)
    throw ConfigError("accumulator does not match MAC configuration");

  WideAccumulator out = acc;
  StepReport local;
  std::vector<LaneProduct> products;
  products.reserve(cfg.mode.lanes);
  for (int i = 0; i < cfg.mode.lanes; ++i) {
    const UnpackedOperand ua = unpack(va.lane(i));
    const UnpackedOperand ub = unpack(vb.lane(i));
    // A zero operand decides the lane unless its partner is NaN or inf.
    const bool zero_lane = (ua.is_zero && !ub.is_special()) || (ub.is_zero && !ua.is_special());
    if (cfg.zero_skip && zero_lane) {
      ++local.skipped_lanes;
      continue;
    }
    const LaneProduct p = lane_multiply(ua, ub, cfg.mode);
    if (p.is_nan) {
      out.nan = true;
    } else if (p.is_inf) {
      (p.negative ? out.neg_inf : out.pos_inf) = true;
    } else if (!p.is_zero) {
      products.push_back(p);
    }
  }
  local.active_products = static_cast<int>(products.size());
  if (products.empty()) {
    if (report) *report = local;
    return out;
  }

  if (cfg.accumulation == Accumulation::ExactWide) {
    // Enough guard bits that no product loses a bit, then place the exact
    // sum at the register's LSB.
    int min_lsb = products.front().lsb_exponent;
    int max_lsb = min_lsb;
    for (const auto& p : products) {
      min_lsb = std::min(min_lsb, p.lsb_exponent);
      max_lsb = std::max(max_lsb, p.lsb_exponent);
    }
    const AlignedProducts al = exponent_max_align(products, max_lsb - min_lsb);
    local.max_scale = al.max_scale;
    const WideInt sum = csa_reduce(al.aligned);
    WideInt placed;
    const int shift = al.anchor_lsb - out.unit_scale;
    if (shift >= 0) {
      placed = sum.shl(shift);
    } else {
      bool lost = false;
      placed = sum.ashr_sticky(-shift, lost);
      if (lost) throw std::logic_error("product below accumulator LSB");
    }
    out.value += placed;
  } else {
    AlignedProducts al = exponent_max_align(products, kAlignGuardBits);
    local.max_scale = al.max_scale;
    if (!out.anchored) {
      out.anchored = true;
      out.unit_scale = al.anchor_lsb;
    } else if (al.anchor_lsb > out.unit_scale) {
      out.value = out.value.ashr_jam(al.anchor_lsb - out.unit_scale);
      out.unit_scale = al.anchor_lsb;
    } else if (al.anchor_lsb < out.unit_scale) {
      for (auto& v : al.aligned) v = v.ashr_jam(out.unit_scale - al.anchor_lsb);
    }
    out.value += csa_reduce(al.aligned);
  }
  if (!out.value.fits_signed(out.width_bits)) {
    out.sticky_overflow = true;
    out.value = saturate(out.value, out.width_bits);
  }
  if (report) *report = local;
  return out;
}

EncodedScalar read_accumulator(const WideAccumulator& acc, const FormatDescriptor& out) {
  if (acc.nan || (acc.pos_inf && acc.neg_inf)) return canonical_nan(out);
  if (acc.pos_inf) return encode(std::numeric_limits<double>::infinity(), out);
  if (acc.neg_inf) return encode(-std::numeric_limits<double>::infinity(), out);
  return pack_normalize_round(acc.value, acc.unit_scale, out).scalar;
}

DotResult dot_product(std::span<const EncodedScalar> a, std::span<const EncodedScalar> b,
                      const MacConfig& cfg, PipelineTrace* trace) {
  if (a.size() != b.size()) throw std::invalid_argument("dot_product operands differ in length");
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!(a[i].format() == cfg.mode.format) || !(b[i].format() == cfg.mode.format))
      throw ConfigError("operand format differs from MAC mode " + cfg.mode.format.name());
  }
  const int lanes = cfg.mode.lanes;
  DotResult r;
  r.accumulator = WideAccumulator::for_config(cfg);
  const std::int64_t vops = (static_cast<std::int64_t>(a.size()) + lanes - 1) / lanes;
  std::int64_t skipped = 0;

  struct OpTrace {
    std::string a_hex, b_hex, acc_hex;
    int active = 0, skipped = 0, max_scale = 0, unit_scale = 0;
  };
  std::vector<OpTrace> ops;

  for (std::int64_t op = 0; op < vops; ++op) {
    const std::size_t begin = static_cast<std::size_t>(op * lanes);
    const std::size_t count = std::min<std::size_t>(lanes, a.size() - begin);
    const VectorWord va = VectorWord::pack(a.subspan(begin, count), cfg.mode);
    const VectorWord vb = VectorWord::pack(b.subspan(begin, count), cfg.mode);
    StepReport rep;
    r.accumulator = simd_mac_step(va, vb, r.accumulator, cfg, &rep);
    // Padding lanes never carry work, whether or not zero-skip is on.
    const int padded = lanes - static_cast<int>(count);
    const int op_skipped = cfg.zero_skip ? rep.skipped_lanes : padded;
    skipped += op_skipped;
    if (trace) {
      ops.push_back({va.to_hex(), vb.to_hex(), signed_hex(r.accumulator.value), lanes - op_skipped,
                     op_skipped, rep.max_scale, r.accumulator.unit_scale});
    }
  }
  r.stats = PipelineStats::from_counts(vops, skipped, lanes);
  r.result = vops == 0 ? EncodedScalar(0, cfg.output_format)
                       : read_accumulator(r.accumulator, cfg.output_format);

  if (trace) {
    static const char* kStage[] = {"fetch", "multiply", "align", "accumulate", "output"};
    for (std::int64_t cycle = 0; cycle < r.stats.cycles; ++cycle) {
      for (int s = 0; s < 5; ++s) {
        const std::int64_t op = cycle - s;
        if (op < 0 || op >= vops) continue;
        const OpTrace& t = ops[static_cast<std::size_t>(op)];
        std::string line = "cycle=" + std::to_string(cycle) + " stage=" + std::to_string(s + 1) + ":" +
                           kStage[s] + " op=" + std::to_string(op);
        switch (s) {
          case 0: line += " a=" + t.a_hex + " b=" + t.b_hex; break;
          case 1: line += " active=" + std::to_string(t.active) + " skipped=" + std::to_string(t.skipped); break;
          case 2: line += " max_scale=" + std::to_string(t.max_scale); break;
          case 3: line += " acc=" + t.acc_hex + " lsb=" + std::to_string(t.unit_scale); break;
          default:
            if (op == vops - 1) line += " result=" + hex_bits(r.result);
            break;
        }
        trace->lines.push_back(std::move(line));
      }
    }
  }
  return r;
}

std::vector<DotResult> dot_product_batch(std::span<const DotJob> jobs, const MacConfig& cfg) {
  std::vector<DotResult> out(jobs.size());
  parallel_for(jobs.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) out[i] = dot_product(jobs[i].a, jobs[i].b, cfg);
  });
  return out;
}

}  // namespace polaron
