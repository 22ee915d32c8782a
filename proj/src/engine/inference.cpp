// Copyright 2026 The Polaron Authors.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "internal.hpp"
#include "polaron/parallel.hpp"

namespace polaron {
namespace detail {
namespace {

// Activation words live in their own address region, bank-aligned with the weights.
constexpr std::uint64_t kActivationBase = std::uint64_t{1} << 32;

double exact_readout(const WideAccumulator& acc) {
  if (acc.nan || (acc.pos_inf && acc.neg_inf)) return std::numeric_limits<double>::quiet_NaN();
  if (acc.pos_inf) return std::numeric_limits<double>::infinity();
  if (acc.neg_inf) return -std::numeric_limits<double>::infinity();
  return std::ldexp(acc.value.to_double(), acc.unit_scale);
}

std::int64_t lanes_skipped_fast(const PreparedLayer& p, const QuantizedInput& q, std::size_t row,
                                std::size_t pos) {
  const std::size_t n = p.lowering.fan_in;
  const std::size_t lanes = static_cast<std::size_t>(p.mac.mode.lanes);
  const std::size_t vops = (n + lanes - 1) / lanes;
  std::int64_t skipped = static_cast<std::int64_t>(vops * lanes - n);
  if (!p.mac.zero_skip) return skipped;
  for (std::size_t k = 0; k < n; ++k) {
    const std::int64_t idx = p.lowering.input_index(pos, k);
    const std::int64_t c = idx < 0 ? q.pad_code : q.codes[static_cast<std::size_t>(idx)];
    if (c == 0 || p.codes[row * n + k] == 0) ++skipped;
  }
  return skipped;
}

std::int64_t layer_conflicts(const PreparedLayer& p, std::size_t batch, const EngineConfig& cfg) {
  MemoryModel mem;
  mem.banks = cfg.memory_banks;
  mem.ports_per_bank = cfg.ports_per_bank;
  const std::size_t lanes = static_cast<std::size_t>(p.mac.mode.lanes);
  const std::size_t vops = (p.lowering.fan_in + lanes - 1) / lanes;
  const std::size_t outs = p.lowering.rows * p.lowering.positions;
  std::int64_t cycle = 0;
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t o = 0; o < outs; ++o) {
      const std::size_t row = o / p.lowering.positions;
      const std::size_t pos = o % p.lowering.positions;
      for (std::size_t v = 0; v < vops; ++v) {
        const std::uint64_t addrs[2] = {row * vops + v, kActivationBase + pos * vops + v};
        memory_access(mem, addrs, cycle++);
      }
    }
  }
  return mem.conflicts;
}

void apply_activation_rows(ActivationKind kind, Tensor& t, const ActivationParams& p) {
  if (kind == ActivationKind::None) return;
  t = activation_apply(kind, t, p);
}

}  // namespace

Lowering lower(const LayerSpec& l) {
  Lowering low;
  if (l.kind == LayerKind::Dense) {
    low.rows = l.out_features;
    low.fan_in = l.in_features;
    return low;
  }
  const ConvGeometry& g = l.conv;
  low.rows = static_cast<std::size_t>(g.out_channels);
  low.positions = static_cast<std::size_t>(g.out_h() * g.out_w());
  low.fan_in = static_cast<std::size_t>(g.kernel_volume());
  low.patch.reserve(low.positions * low.fan_in);
  for (int oy = 0; oy < g.out_h(); ++oy) {
    for (int ox = 0; ox < g.out_w(); ++ox) {
      for (int c = 0; c < g.in_channels; ++c) {
        for (int ky = 0; ky < g.kernel; ++ky) {
          for (int kx = 0; kx < g.kernel; ++kx) {
            const int iy = oy * g.stride - g.padding + ky;
            const int ix = ox * g.stride - g.padding + kx;
            const bool inside = iy >= 0 && iy < g.in_h && ix >= 0 && ix < g.in_w;
            low.patch.push_back(inside ? (static_cast<std::int64_t>(c) * g.in_h + iy) * g.in_w + ix : -1);
          }
        }
      }
    }
  }
  return low;
}

PreparedLayer prepare_layer(const LayerSpec& l, const ModelGraph& m, const LayerPlan& lp,
                            const EngineConfig& cfg) {
  PreparedLayer p;
  p.spec = &l;
  p.plan = &lp;
  p.lowering = lower(l);
  p.format = parse_format(lp.format);
  p.integer_code = is_integer_code_layer(lp);
  p.readout = cfg.readout;
  p.mac = MacConfig::make(p.format, p.format.is_fxp() ? Accumulation::ExactWide : cfg.accumulation,
                          cfg.zero_skip);
  p.mac.validate();
  lp.act.validate();
  const std::vector<double>& w = m.weights.at(l.id).data();
  p.encoded.resize(w.size());
  p.effective.resize(w.size());
  if (p.integer_code) {
    if (lp.weights.n != lp.n || lp.act.n != lp.n)
      throw ConfigError("plan entry '" + lp.layer_id + "' mixes bit-widths");
    lp.weights.validate();
    const std::int64_t h = std::int64_t{1} << (lp.n - 1);
    const double delta = lp.weights.step();
    p.a = lp.weights.scale_k * delta;
    p.b = lp.weights.scale_k * (delta * static_cast<double>(h) + lp.weights.w_l);
    p.codes.resize(w.size());
    p.row_code_sum.assign(p.lowering.rows, 0);
    for (std::size_t i = 0; i < w.size(); ++i) {
      const std::int64_t c = quantize_code(w[i], lp.weights) - h;
      p.codes[i] = c;
      p.row_code_sum[i / p.lowering.fan_in] += c;
      p.encoded[i] = EncodedScalar(static_cast<std::uint32_t>(c) & p.format.mask(), p.format);
      p.effective[i] = p.a * static_cast<double>(c) + p.b;
    }
  } else {
    for (std::size_t i = 0; i < w.size(); ++i) {
      p.encoded[i] = encode(w[i], p.format);
      p.effective[i] = decode(p.encoded[i]).to_double();
    }
  }
  return p;
}

QuantizedInput quantize_input(const PreparedLayer& p, std::span<const double> x) {
  const LayerPlan& lp = *p.plan;
  const double alpha = lp.act.alpha;
  const bool pact = lp.act_mode == ActQuant::Pact;
  QuantizedInput q;
  q.values.resize(x.size());
  if (p.integer_code) {
    const std::int64_t h = std::int64_t{1} << (lp.n - 1);
    const double levels = pact ? static_cast<double>(2 * h - 1) : static_cast<double>(h - 1);
    q.codes.resize(x.size());
    q.encoded.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double y = pact ? pact_forward(x[i], alpha) : std::clamp(x[i], -alpha, alpha);
      const auto m = static_cast<std::int64_t>(std::nearbyint(y * levels / alpha));
      q.codes[i] = pact ? m - h : m;
      q.values[i] = static_cast<double>(m) * alpha / levels;
      q.encoded[i] = EncodedScalar(static_cast<std::uint32_t>(q.codes[i]) & p.format.mask(), p.format);
    }
    q.pad_code = pact ? -h : 0;
    q.pad_encoded = EncodedScalar(static_cast<std::uint32_t>(q.pad_code) & p.format.mask(), p.format);
    return q;
  }
  q.encoded.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double y = pact ? pact_forward(x[i], alpha) : std::clamp(x[i], -alpha, alpha);
    q.encoded[i] = encode(y, p.format);
    q.values[i] = decode(q.encoded[i]).to_double();
  }
  q.pad_encoded = encode(0.0, p.format);
  return q;
}

DotOutcome layer_dot(const PreparedLayer& p, const QuantizedInput& q, std::size_t out, bool engine) {
  const Lowering& low = p.lowering;
  const std::size_t row = out / low.positions;
  const std::size_t pos = out % low.positions;
  const std::size_t n = low.fan_in;
  DotOutcome d;

  std::int64_t sum_m = 0;
  if (p.integer_code) {
    for (std::size_t k = 0; k < n; ++k) {
      const std::int64_t idx = low.input_index(pos, k);
      sum_m += idx < 0 ? q.pad_code : q.codes[static_cast<std::size_t>(idx)];
    }
  }

  double dot = 0.0;
  if (p.integer_code && !engine) {
    std::int64_t s = 0;
    for (std::size_t k = 0; k < n; ++k) {
      const std::int64_t idx = low.input_index(pos, k);
      s += p.codes[row * n + k] * (idx < 0 ? q.pad_code : q.codes[static_cast<std::size_t>(idx)]);
    }
    dot = static_cast<double>(s);
    const std::size_t lanes = static_cast<std::size_t>(p.mac.mode.lanes);
    d.vector_ops = static_cast<std::int64_t>((n + lanes - 1) / lanes);
    d.skipped = lanes_skipped_fast(p, q, row, pos);
  } else {
    const std::span<const EncodedScalar> wrow(p.encoded.data() + row * n, n);
    std::vector<EncodedScalar> gathered;
    std::span<const EncodedScalar> acts(q.encoded);
    if (!low.patch.empty()) {
      gathered.resize(n);
      for (std::size_t k = 0; k < n; ++k) {
        const std::int64_t idx = low.input_index(pos, k);
        gathered[k] = idx < 0 ? q.pad_encoded : q.encoded[static_cast<std::size_t>(idx)];
      }
      acts = gathered;
    }
    const DotResult r = dot_product(wrow, acts, p.mac);
    d.vector_ops = r.stats.vector_ops;
    d.skipped = r.stats.skipped_lanes;
    if (p.integer_code && p.readout == Readout::Exact) {
      if (r.accumulator.unit_scale != 0 || !r.accumulator.value.fits_signed(63))
        throw std::logic_error("integer-code accumulator out of range");
      dot = static_cast<double>(r.accumulator.value.low_int64());
    } else if (p.readout == Readout::Exact) {
      dot = exact_readout(r.accumulator);
    } else {
      dot = decode(r.result).to_double();
    }
  }
  if (!p.integer_code) {
    d.value = dot;
    return d;
  }
  // Undo the affine code maps: w = a c' + b and act = beta (m' + h) for PACT,
  // act = beta m' for the symmetric clip.
  const LayerPlan& lp = *p.plan;
  const double h = std::ldexp(1.0, lp.n - 1);
  const double sum_c = static_cast<double>(p.row_code_sum[row]);
  const double sm = static_cast<double>(sum_m);
  if (lp.act_mode == ActQuant::Pact) {
    const double beta = lp.act.alpha / (2.0 * h - 1.0);
    d.value = p.a * beta * dot + p.a * beta * h * sum_c + p.b * beta * sm + p.b * beta * h * static_cast<double>(n);
  } else {
    const double beta = lp.act.alpha / (h - 1.0);
    d.value = p.a * beta * dot + p.b * beta * sm;
  }
  return d;
}

Tensor forward_pass(const ModelGraph& m, const Tensor& input, const QuantPlan* plan, const EngineConfig& cfg,
                    bool engine, ExecStats* stats, std::vector<LayerCache>* caches) {
  m.validate();
  const bool flat = input.rank() == 1;
  if (input.rank() != 1 && input.rank() != 2) throw ConfigError("input must be a vector or a batch of vectors");
  const std::size_t batch = flat ? 1 : input.shape()[0];
  const std::size_t features = flat ? input.size() : input.shape()[1];
  if (features != m.input_size())
    throw ConfigError("input has " + std::to_string(features) + " features; model expects " +
                      std::to_string(m.input_size()));
  Tensor cur({batch, features}, input.data());
  if (stats) *stats = ExecStats{};
  if (caches) caches->clear();

  for (const LayerSpec& l : m.layers) {
    LayerCache cache;
    if (caches) cache.input = cur;
    const std::size_t in = l.in_features;
    const std::size_t outf = l.out_features;
    Tensor pre;
    if (l.kind == LayerKind::Flatten || l.kind == LayerKind::Activation) {
      pre = cur;
      if (caches) cache.act = cur;
    } else {
      pre = Tensor::zeros({batch, outf});
      const std::vector<double>& bias = m.biases.at(l.id).data();
      if (plan) {
        const PreparedLayer p = prepare_layer(l, m, plan->find(l.id), cfg);
        std::vector<QuantizedInput> qs(batch);
        for (std::size_t b = 0; b < batch; ++b)
          qs[b] = quantize_input(p, std::span<const double>(cur.data()).subspan(b * in, in));
        std::vector<std::int64_t> vops(batch * outf), skipped(batch * outf);
        parallel_for(batch * outf, [&](std::size_t begin, std::size_t end) {
          for (std::size_t i = begin; i < end; ++i) {
            const DotOutcome d = layer_dot(p, qs[i / outf], i % outf, engine);
            pre[i] = d.value + bias[(i % outf) / p.lowering.positions];
            vops[i] = d.vector_ops;
            skipped[i] = d.skipped;
          }
        });
        if (stats) {
          LayerStats ls;
          ls.layer_id = l.id;
          ls.format = p.format.name();
          std::int64_t tv = 0, ts = 0;
          for (std::size_t i = 0; i < vops.size(); ++i) {
            tv += vops[i];
            ts += skipped[i];
          }
          ls.pipeline = PipelineStats::from_counts(tv, ts, p.mac.mode.lanes);
          ls.macs = static_cast<std::int64_t>(batch * outf * p.lowering.fan_in);
          ls.conflicts = layer_conflicts(p, batch, cfg);
          stats->add(ls);
        }
        if (caches) {
          cache.act = Tensor::zeros({batch, in});
          for (std::size_t b = 0; b < batch; ++b)
            std::copy(qs[b].values.begin(), qs[b].values.end(), cache.act.data().begin() + static_cast<long>(b * in));
          cache.effective_weights = p.effective;
        }
      } else {
        const Lowering low = lower(l);
        const std::vector<double>& w = m.weights.at(l.id).data();
        for (std::size_t b = 0; b < batch; ++b) {
          const double* x = cur.data().data() + b * in;
          for (std::size_t o = 0; o < outf; ++o) {
            const std::size_t row = o / low.positions;
            const std::size_t pos = o % low.positions;
            double s = 0.0;
            for (std::size_t k = 0; k < low.fan_in; ++k) {
              const std::int64_t idx = low.input_index(pos, k);
              if (idx >= 0) s += w[row * low.fan_in + k] * x[idx];
            }
            pre[b * outf + o] = s + bias[row];
          }
        }
        if (caches) {
          cache.act = cur;
          cache.effective_weights = w;
        }
      }
    }
    Tensor out = pre;
    apply_activation_rows(l.kind == LayerKind::Flatten ? ActivationKind::None : l.activation, out, cfg.activation);
    if (caches) {
      cache.pre = std::move(pre);
      cache.output = out;
      caches->push_back(std::move(cache));
    }
    cur = std::move(out);
  }
  if (flat) return Tensor({cur.size()}, cur.data());
  return cur;
}

}  // namespace detail

bool is_integer_code_layer(const LayerPlan& lp) {
  const FormatDescriptor f = parse_format(lp.format);
  return f.is_fxp() && f.frac_bits == 0 && f.total_bits == lp.n;
}

std::int64_t memory_access(MemoryModel& mem, std::span<const std::uint64_t> addresses, std::int64_t cycle) {
  if (mem.banks < 1 || mem.ports_per_bank < 1) throw ConfigError("memory needs at least one bank and port");
  if (cycle != mem.current_cycle || mem.bank_load.size() != static_cast<std::size_t>(mem.banks)) {
    mem.current_cycle = cycle;
    mem.bank_load.assign(static_cast<std::size_t>(mem.banks), 0);
  }
  std::int64_t added = 0;
  for (std::uint64_t a : addresses) {
    int& load = mem.bank_load[a % static_cast<std::uint64_t>(mem.banks)];
    if (++load > mem.ports_per_bank) ++added;
  }
  mem.accesses += static_cast<std::int64_t>(addresses.size());
  mem.conflicts += added;
  return added;
}

void ExecStats::add(const LayerStats& l) {
  layers.push_back(l);
  total_cycles += l.pipeline.cycles;
  total_macs += l.macs;
  total_vector_ops += l.pipeline.vector_ops;
  total_lane_ops += l.pipeline.mac_ops + l.pipeline.skipped_lanes;
  conflicts += l.conflicts;
  std::int64_t used = 0;
  for (const auto& x : layers) used += x.pipeline.mac_ops;
  utilization = total_lane_ops == 0 ? 0.0 : static_cast<double>(used) / static_cast<double>(total_lane_ops);
}

std::string format_stats(const ExecStats& s) {
  std::ostringstream os;
  os << "cycles=" << s.total_cycles << "\n"
     << "macs=" << s.total_macs << "\n"
     << "vector_ops=" << s.total_vector_ops << "\n"
     << "lane_ops=" << s.total_lane_ops << "\n"
     << "utilization=" << format_double(s.utilization) << "\n"
     << "conflicts=" << s.conflicts << "\n"
     << "layers=" << s.layers.size() << "\n";
  for (const auto& l : s.layers) {
    os << "layer id=" << l.layer_id << " format=" << l.format << " cycles=" << l.pipeline.cycles
       << " vector_ops=" << l.pipeline.vector_ops << " mac_ops=" << l.pipeline.mac_ops
       << " skipped_lanes=" << l.pipeline.skipped_lanes
       << " utilization=" << format_double(l.pipeline.lane_utilization) << " macs=" << l.macs
       << " conflicts=" << l.conflicts << "\n";
  }
  return os.str();
}

void write_stats(const std::filesystem::path& path, const ExecStats& s) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write " + path.string());
  f << format_stats(s);
}

InferenceResult run_inference(const ModelGraph& m, const Tensor& input, const QuantPlan& plan,
                              const EngineConfig& cfg) {
  InferenceResult r;
  r.output = detail::forward_pass(m, input, &plan, cfg, true, &r.stats, nullptr);
  return r;
}

Tensor forward_simulated(const ModelGraph& m, const Tensor& input, const QuantPlan& plan,
                         const EngineConfig& cfg) {
  return detail::forward_pass(m, input, &plan, cfg, false, nullptr, nullptr);
}

Tensor forward_reference(const ModelGraph& m, const Tensor& input, const ActivationParams& act) {
  EngineConfig cfg;
  cfg.activation = act;
  return detail::forward_pass(m, input, nullptr, cfg, false, nullptr, nullptr);
}

}  // namespace polaron
