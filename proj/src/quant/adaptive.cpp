// Copyright 2026 The Polaron Authors.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>

#include "polaron/quantizer.hpp"

namespace polaron {
namespace {

double levels(int n) { return std::ldexp(1.0, n) - 1.0; }

}  // namespace

void QuantParams::validate() const {
  if (n != 4 && n != 8 && n != 16) throw ConfigError("quantizer bit-width must be 4, 8 or 16");
  if (!(w_l < w_h)) throw ConfigError("quantizer thresholds need w_l < w_h");
  if (!(scale_k > 0.0) || !std::isfinite(scale_k)) throw ConfigError("quantizer scale must be positive");
}

double QuantParams::step() const { return (w_h - w_l) / levels(n); }

ScaleResult compute_scale(const Tensor& w, int n) {
  if (w.size() == 0) throw std::invalid_argument("compute_scale needs a non-empty tensor");
  double sum = 0.0;
  for (double v : w.data()) sum += std::fabs(v);
  const double mean = sum / static_cast<double>(w.size());
  if (mean == 0.0) return {1.0, true};
  return {mean * levels(n) / std::ldexp(1.0, n - 1), false};
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("percentile of an empty set");
  std::sort(values.begin(), values.end());
  const double pos = p / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double t = pos - static_cast<double>(lo);
  const double a = values[lo];
  const double b = values[hi];
  // Same two-sided lerp as numpy so results agree to the last bit.
  return t >= 0.5 ? b - (b - a) * (1.0 - t) : a + (b - a) * t;
}

QuantParams fit_quant_params(const Tensor& w, int n, const ThresholdConfig& cfg) {
  QuantParams p;
  p.n = n;
  const ScaleResult s = compute_scale(w, n);
  p.scale_k = s.k;
  p.degenerate = s.degenerate;
  if (cfg.mode == ThresholdMode::Symmetric) {
    p.w_l = -1.0;
    p.w_h = 1.0;
    p.validate();
    return p;
  }
  std::vector<double> t(w.size());
  double max_abs = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    t[i] = w[i] / p.scale_k;
    max_abs = std::max(max_abs, std::fabs(t[i]));
  }
  p.w_l = percentile(t, cfg.low_pct);
  p.w_h = percentile(std::move(t), cfg.high_pct);
  if (!(p.w_l < p.w_h)) {
    p.w_l = max_abs > 0.0 ? -max_abs : -1.0;
    p.w_h = max_abs > 0.0 ? max_abs : 1.0;
  }
  p.validate();
  return p;
}

std::int64_t quantize_code(double w, const QuantParams& p) {
  const double c = std::clamp(w / p.scale_k, p.w_l, p.w_h);
  return static_cast<std::int64_t>(std::nearbyint((c - p.w_l) * levels(p.n) / (p.w_h - p.w_l)));
}

double dequantize_code(std::int64_t code, const QuantParams& p) {
  return static_cast<double>(code) * (p.w_h - p.w_l) / levels(p.n) + p.w_l;
}

QuantizeResult quantize_adaptive(const Tensor& w, const QuantParams& p) {
  p.validate();
  QuantizeResult r;
  r.codes.reserve(w.size());
  std::vector<double> deq;
  deq.reserve(w.size());
  for (double v : w.data()) {
    const std::int64_t c = quantize_code(v, p);
    r.codes.push_back(c);
    deq.push_back(dequantize_code(c, p));
  }
  r.deq = Tensor(w.shape(), std::move(deq));
  return r;
}

Tensor fake_quantize(const Tensor& w, const QuantParams& p) {
  Tensor out = quantize_adaptive(w, p).deq;
  for (auto& v : out.data()) v *= p.scale_k;
  return out;
}

void PactParams::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError("PACT alpha must be positive");
  if (n < 1 || n > 16) throw ConfigError("PACT bit-width must lie in [1, 16]");
}

double pact_forward(double x, double alpha) { return 0.5 * (std::fabs(x) - std::fabs(x - alpha) + alpha); }

Tensor pact_forward(const Tensor& x, const PactParams& p) {
  p.validate();
  Tensor y = x;
  for (auto& v : y.data()) v = pact_forward(v, p.alpha);
  return y;
}

double pact_quantize(double y, const PactParams& p) {
  const double l = levels(p.n);
  return std::nearbyint(y * l / p.alpha) * p.alpha / l;
}

Tensor pact_quantize(const Tensor& y, const PactParams& p) {
  p.validate();
  Tensor q = y;
  for (auto& v : q.data()) v = pact_quantize(v, p);
  return q;
}

PactGradients pact_gradients(const Tensor& x, double alpha, const Tensor& upstream) {
  if (x.shape() != upstream.shape()) throw std::invalid_argument("pact_gradients shape mismatch");
  PactGradients g;
  g.dx = Tensor::zeros(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] >= 0.0 && x[i] <= alpha) g.dx[i] = upstream[i];
    if (x[i] >= alpha) g.dalpha += upstream[i];
  }
  return g;
}

}  // namespace polaron
