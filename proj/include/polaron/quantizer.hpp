// Copyright 2026 The Polaron Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "polaron/formats.hpp"

namespace polaron {

class Tensor {
 public:
  Tensor() = default;
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);
  static Tensor zeros(std::vector<std::size_t> shape);
  static Tensor vector(std::vector<double> data);

  const std::vector<std::size_t>& shape() const { return shape_; }
  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }
  std::size_t size() const { return data_.size(); }
  std::size_t rank() const { return shape_.size(); }
  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }
  /// Row-major element of a rank-2 tensor.
  double at(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

  bool operator==(const Tensor&) const = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

/// PLRN file: "PLRN", u16 version (1), u16 rank, u32 dims, f64 payload, all little endian.
void write_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor read_tensor(const std::filesystem::path& path);

struct QuantParams {
  int n = 8;
  double w_l = -1.0;
  double w_h = 1.0;
  double scale_k = 1.0;
  /// Scale came from an all-zero tensor.
  bool degenerate = false;

  void validate() const;
  /// One code step in the normalized domain.
  double step() const;
};

struct ScaleResult {
  double k = 1.0;
  bool degenerate = false;
};

/// mean(|W|) * (2^n - 1) / 2^(n-1); all-zero tensors give 1.0 with the flag set.
ScaleResult compute_scale(const Tensor& w, int n);

/// Linear-interpolated percentile (numpy's default), p in [0, 100].
double percentile(std::vector<double> values, double p);

enum class ThresholdMode { Percentile, Symmetric };

struct ThresholdConfig {
  ThresholdMode mode = ThresholdMode::Percentile;
  double low_pct = 0.5;
  double high_pct = 99.5;
};

/// Scale plus saturation thresholds for W at bit-width n. Percentile mode
/// reads the thresholds off W/k; if they coincide it falls back to
/// [-max|W/k|, max|W/k|], then to [-1, 1].
QuantParams fit_quant_params(const Tensor& w, int n, const ThresholdConfig& cfg = {});

struct QuantizeResult {
  /// Codes in [0, 2^n - 1].
  std::vector<std::int64_t> codes;
  /// Dequantized values in the normalized (W/k) domain.
  Tensor deq;
};

QuantizeResult quantize_adaptive(const Tensor& w, const QuantParams& p);
/// deq * k: the quantized weights back in the original weight domain.
Tensor fake_quantize(const Tensor& w, const QuantParams& p);
std::int64_t quantize_code(double w, const QuantParams& p);
double dequantize_code(std::int64_t code, const QuantParams& p);

struct PactParams {
  double alpha = 1.0;
  int n = 8;
  void validate() const;
};

double pact_forward(double x, double alpha);
Tensor pact_forward(const Tensor& x, const PactParams& p);
double pact_quantize(double y, const PactParams& p);
Tensor pact_quantize(const Tensor& y, const PactParams& p);

struct PactGradients {
  Tensor dx;
  double dalpha = 0.0;
};

/// Straight-through gradients: dx = g * [0 <= x <= alpha], dalpha = sum g * [x >= alpha].
PactGradients pact_gradients(const Tensor& x, double alpha, const Tensor& upstream);

struct LayerSensitivity {
  std::string layer_id;
  double s_sc8 = 0.0;
  double s_sc4 = 0.0;
  double s_l = 0.0;
  std::size_t n_l = 0;
  double grad_norm = 0.0;
};

double l2_norm(const std::vector<double>& v);

/// (||Q(w) - w|| - ||Q'(w) - w||) * ||grad|| / n_l with weight-domain quantizers.
double sensitivity_term(const Tensor& w, const Tensor& grad, const QuantParams& current,
                        const QuantParams& candidate);

/// Candidates are the same adaptive quantizer refit at 8 and 4 bits.
LayerSensitivity layer_sensitivity(const std::string& layer_id, const Tensor& w, const Tensor& grad,
                                   const QuantParams& current, const ThresholdConfig& cfg = {});

struct PolicyConfig {
  double p_low = 30.0;
  double p_high = 85.0;
  bool floor_first = true;
  bool floor_last = true;
  int end_floor_bits = 8;
};

enum class ActQuant { Pact, Symmetric };

std::string act_quant_name(ActQuant a);

struct LayerPlan {
  std::string layer_id;
  int n = 8;
  std::string format;
  QuantParams weights;
  PactParams act;
  ActQuant act_mode = ActQuant::Pact;
};

struct QuantPlan {
  std::vector<LayerPlan> layers;

  const LayerPlan& find(const std::string& id) const;
  LayerPlan& find(const std::string& id);
};

/// Bit-width per layer from the sensitivity percentiles (strict comparisons,
/// so equal sensitivities share a band), then the end-layer floors.
std::vector<int> assign_bit_widths(const std::vector<LayerSensitivity>& s, const PolicyConfig& policy);
QuantPlan assign_precisions(const std::vector<LayerSensitivity>& s, const PolicyConfig& policy);

/// FxP lane format carrying n-bit integer codes.
std::string code_format_name(int n);

std::string serialize_plan(const QuantPlan& plan);
QuantPlan parse_plan(const std::string& text);
void write_plan(const std::filesystem::path& path, const QuantPlan& plan);
QuantPlan read_plan(const std::filesystem::path& path);

/// Shortest decimal that parses back to the same double.
std::string format_double(double v);

}  // namespace polaron
