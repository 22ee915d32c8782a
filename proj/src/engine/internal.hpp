// Copyright 2026 The Polaron Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "polaron/engine.hpp"

namespace polaron::detail {

/// Dense and Conv2D share one shape: `rows` weight rows, each applied at
/// `positions` input patches of length fan_in. Output index = row * positions + pos.
struct Lowering {
  std::size_t rows = 0;
  std::size_t positions = 1;
  std::size_t fan_in = 0;
  /// positions x fan_in input indices; -1 marks zero padding. Empty for Dense.
  std::vector<std::int64_t> patch;

  std::int64_t input_index(std::size_t pos, std::size_t k) const {
    return patch.empty() ? static_cast<std::int64_t>(k) : patch[pos * fan_in + k];
  }
};

Lowering lower(const LayerSpec& l);

/// A weight layer with its quantized weights ready for the datapath.
struct PreparedLayer {
  const LayerSpec* spec = nullptr;
  const LayerPlan* plan = nullptr;
  Lowering lowering;
  FormatDescriptor format;
  MacConfig mac;
  bool integer_code = false;
  Readout readout = Readout::Exact;
  /// Integer-code path: centered weight codes c - 2^(n-1), their row sums,
  /// and the weight map w = a c' + b.
  std::vector<std::int64_t> codes;
  std::vector<std::int64_t> row_code_sum;
  double a = 0.0;
  double b = 0.0;
  /// Weight operands as lane scalars (both paths).
  std::vector<EncodedScalar> encoded;
  /// Weight values the datapath actually multiplies, for the backward pass.
  std::vector<double> effective;
};

PreparedLayer prepare_layer(const LayerSpec& l, const ModelGraph& m, const LayerPlan& lp,
                            const EngineConfig& cfg);

/// One sample's quantized activations for a prepared layer.
struct QuantizedInput {
  std::vector<std::int64_t> codes;
  std::vector<EncodedScalar> encoded;
  /// Activation values seen by the multiplier.
  std::vector<double> values;
  std::int64_t pad_code = 0;
  EncodedScalar pad_encoded;
};

QuantizedInput quantize_input(const PreparedLayer& p, std::span<const double> x);

struct DotOutcome {
  double value = 0.0;
  std::int64_t vector_ops = 0;
  std::int64_t skipped = 0;
};

/// Output element `out` (row * positions + pos) before bias and activation.
/// `engine` routes integer-code layers through dot_product too; other formats
/// always use it.
DotOutcome layer_dot(const PreparedLayer& p, const QuantizedInput& q, std::size_t out, bool engine);

struct LayerCache {
  Tensor input;   // [B, in], before activation quantization
  Tensor act;     // [B, in], values the multiplier saw
  Tensor pre;     // [B, out], before the activation function
  Tensor output;  // [B, out]
  std::vector<double> effective_weights;
};

/// Shared forward pass. plan == nullptr runs the unquantized network.
/// `caches`, when given, gets one entry per layer.
Tensor forward_pass(const ModelGraph& m, const Tensor& input, const QuantPlan* plan, const EngineConfig& cfg,
                    bool engine, ExecStats* stats, std::vector<LayerCache>* caches);

}  // namespace polaron::detail
