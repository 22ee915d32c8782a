// Copyright 2026 The Polaron Authors.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>

#include "polaron/quantizer.hpp"

namespace polaron {

double l2_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

namespace {

double error_norm(const Tensor& w, const QuantParams& p) {
  const Tensor q = fake_quantize(w, p);
  std::vector<double> diff(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) diff[i] = q[i] - w[i];
  return l2_norm(diff);
}

}  // namespace

double sensitivity_term(const Tensor& w, const Tensor& grad, const QuantParams& current,
                        const QuantParams& candidate) {
  if (w.size() == 0) throw std::invalid_argument("sensitivity of an empty layer");
  if (w.shape() != grad.shape()) throw std::invalid_argument("gradient shape differs from weights");
  const double delta = error_norm(w, current) - error_norm(w, candidate);
  return delta * l2_norm(grad.data()) / static_cast<double>(w.size());
}

LayerSensitivity layer_sensitivity(const std::string& layer_id, const Tensor& w, const Tensor& grad,
                                   const QuantParams& current, const ThresholdConfig& cfg) {
  if (w.size() == 0) throw std::invalid_argument("sensitivity of an empty layer");
  LayerSensitivity s;
  s.layer_id = layer_id;
  s.n_l = w.size();
  s.grad_norm = l2_norm(grad.data());
  s.s_sc8 = sensitivity_term(w, grad, current, fit_quant_params(w, 8, cfg));
  s.s_sc4 = sensitivity_term(w, grad, current, fit_quant_params(w, 4, cfg));
  s.s_l = std::max(s.s_sc8, s.s_sc4);
  return s;
}

std::vector<int> assign_bit_widths(const std::vector<LayerSensitivity>& s, const PolicyConfig& policy) {
  if (s.empty()) throw std::invalid_argument("assign_precisions needs at least one layer");
  std::vector<double> values;
  for (const auto& l : s) values.push_back(l.s_l);
  const double lo = percentile(values, policy.p_low);
  const double hi = percentile(values, policy.p_high);
  std::vector<int> widths;
  for (double v : values) widths.push_back(v < lo ? 4 : (v > hi ? 16 : 8));
  if (policy.floor_first) widths.front() = std::max(widths.front(), policy.end_floor_bits);
  if (policy.floor_last) widths.back() = std::max(widths.back(), policy.end_floor_bits);
  return widths;
}

std::string code_format_name(int n) { return "fxp" + std::to_string(n) + ":f0"; }

std::string act_quant_name(ActQuant a) { return a == ActQuant::Pact ? "pact" : "sym"; }

QuantPlan assign_precisions(const std::vector<LayerSensitivity>& s, const PolicyConfig& policy) {
  const std::vector<int> widths = assign_bit_widths(s, policy);
  QuantPlan plan;
  for (std::size_t i = 0; i < s.size(); ++i) {
    LayerPlan l;
    l.layer_id = s[i].layer_id;
    l.n = widths[i];
    l.format = code_format_name(l.n);
    l.weights.n = l.n;
    l.act.n = l.n;
    plan.layers.push_back(l);
  }
  return plan;
}

const LayerPlan& QuantPlan::find(const std::string& id) const {
  for (const auto& l : layers)
    if (l.layer_id == id) return l;
  throw ConfigError("plan has no entry for layer '" + id + "'");
}

LayerPlan& QuantPlan::find(const std::string& id) {
  return const_cast<LayerPlan&>(static_cast<const QuantPlan&>(*this).find(id));
}

}  // namespace polaron
