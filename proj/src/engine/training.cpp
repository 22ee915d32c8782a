// Copyright 2026 The Polaron Authors.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "internal.hpp"

namespace polaron {
namespace {

constexpr double kMinAlpha = 1e-3;

std::vector<double> softmax_exact(std::span<const double> z) {
  return activation_apply(ActivationKind::SoftMax, z, {ActivationImpl::Exact, kCordicIterations});
}

}  // namespace

Gradients compute_gradients(const ModelGraph& m, const Batch& batch, const QuantPlan* plan,
                            const TrainHyper& hyper) {
  if (batch.inputs.rank() != 2) throw ConfigError("training batch must be [batch, features]");
  const std::size_t bsz = batch.inputs.shape()[0];
  if (batch.labels.size() != bsz) throw ConfigError("batch has " + std::to_string(bsz) + " rows but " +
                                                    std::to_string(batch.labels.size()) + " labels");
  const LayerSpec& last = m.layers.back();
  if (last.activation != ActivationKind::None && last.activation != ActivationKind::SoftMax)
    throw ConfigError("the last layer must end in none or softmax for cross-entropy training");

  EngineConfig cfg;
  cfg.activation = hyper.activation;
  std::vector<detail::LayerCache> caches;
  const Tensor out = detail::forward_pass(m, batch.inputs, plan, cfg, false, nullptr, &caches);

  Gradients g;
  const std::size_t classes = m.output_size();
  Tensor upstream = Tensor::zeros({bsz, classes});
  for (std::size_t b = 0; b < bsz; ++b) {
    const int label = batch.labels[b];
    if (label < 0 || static_cast<std::size_t>(label) >= classes)
      throw ConfigError("label " + std::to_string(label) + " out of range");
    const std::span<const double> row(out.data().data() + b * classes, classes);
    const std::vector<double> p =
        last.activation == ActivationKind::SoftMax ? std::vector<double>(row.begin(), row.end()) : softmax_exact(row);
    g.loss -= std::log(std::max(p[static_cast<std::size_t>(label)], 1e-300));
    for (std::size_t c = 0; c < classes; ++c)
      upstream[b * classes + c] = (p[c] - (static_cast<int>(c) == label ? 1.0 : 0.0)) / static_cast<double>(bsz);
  }
  g.loss /= static_cast<double>(bsz);

  for (std::size_t li = m.layers.size(); li-- > 0;) {
    const LayerSpec& l = m.layers[li];
    const detail::LayerCache& c = caches[li];
    // Gradient with respect to the pre-activation values.
    Tensor dpre = upstream;
    const bool folded = li + 1 == m.layers.size();
    if (!folded && l.kind != LayerKind::Flatten && l.activation != ActivationKind::None) {
      for (std::size_t i = 0; i < dpre.size(); ++i) dpre[i] *= activation_derivative(l.activation, c.pre[i]);
    }
    if (!l.has_weights()) {
      upstream = std::move(dpre);
      continue;
    }
    const detail::Lowering low = detail::lower(l);
    const std::size_t in = l.in_features;
    const std::size_t outf = l.out_features;
    Tensor dw = Tensor::zeros({low.rows, low.fan_in});
    Tensor db = Tensor::zeros({low.rows});
    Tensor dact = Tensor::zeros({bsz, in});
    const std::vector<double>& weff = c.effective_weights;
    for (std::size_t b = 0; b < bsz; ++b) {
      for (std::size_t o = 0; o < outf; ++o) {
        const double dz = dpre[b * outf + o];
        if (dz == 0.0) continue;
        const std::size_t row = o / low.positions;
        const std::size_t pos = o % low.positions;
        db[row] += dz;
        for (std::size_t k = 0; k < low.fan_in; ++k) {
          const std::int64_t idx = low.input_index(pos, k);
          if (idx < 0) continue;
          const std::size_t a = b * in + static_cast<std::size_t>(idx);
          dw[row * low.fan_in + k] += dz * c.act[a];
          dact[a] += weff[row * low.fan_in + k] * dz;
        }
      }
    }
    g.weights[l.id] = std::move(dw);
    g.biases[l.id] = std::move(db);
    if (plan) {
      // Straight-through rounding; the clip passes gradient inside [0, alpha]
      // (or [-alpha, alpha]) and routes the rest to alpha.
      const LayerPlan& lp = plan->find(l.id);
      const double alpha = lp.act.alpha;
      double dalpha = 0.0;
      for (std::size_t i = 0; i < dact.size(); ++i) {
        const double x = c.input[i];
        if (lp.act_mode == ActQuant::Pact) {
          if (x >= alpha) dalpha += dact[i];
          if (!(x >= 0.0 && x <= alpha)) dact[i] = 0.0;
        } else {
          if (x > alpha) dalpha += dact[i];
          if (x < -alpha) dalpha -= dact[i];
          if (std::fabs(x) > alpha) dact[i] = 0.0;
        }
      }
      g.alpha[l.id] = dalpha;
    }
    upstream = std::move(dact);
  }
  return g;
}

void refit_plan_weights(QuantPlan& plan, const ModelGraph& m, const ThresholdConfig& cfg) {
  for (auto& lp : plan.layers) {
    auto it = m.weights.find(lp.layer_id);
    if (it == m.weights.end()) throw ConfigError("plan entry '" + lp.layer_id + "' has no weights");
    lp.weights = fit_quant_params(it->second, lp.weights.n, cfg);
  }
}

double train_step(ModelGraph& m, const Batch& batch, QuantPlan* plan, const TrainHyper& hyper) {
  const Gradients g = compute_gradients(m, batch, plan, hyper);
  for (auto& [id, dw] : g.weights) {
    auto& w = m.weights.at(id).data();
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= hyper.learning_rate * dw[i];
    auto& b = m.biases.at(id).data();
    const auto& db = g.biases.at(id);
    for (std::size_t i = 0; i < b.size(); ++i) b[i] -= hyper.learning_rate * db[i];
  }
  if (plan) {
    for (const auto& [id, da] : g.alpha) {
      LayerPlan& lp = plan->find(id);
      const double step = hyper.alpha_learning_rate * (da + hyper.alpha_decay * lp.act.alpha);
      lp.act.alpha = std::max(kMinAlpha, lp.act.alpha - step);
    }
    refit_plan_weights(*plan, m, hyper.thresholds);
  }
  return g.loss;
}

std::vector<double> fit(ModelGraph& m, const Dataset& data, QuantPlan* plan, const FitConfig& cfg) {
  if (cfg.batch_size == 0) throw std::invalid_argument("batch size must be positive");
  std::vector<double> losses;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const std::vector<std::size_t> order = shuffled_indices(data.size(), cfg.seed + static_cast<std::uint64_t>(epoch));
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t count = std::min(cfg.batch_size, order.size() - start);
      const Batch b = data.batch(std::span<const std::size_t>(order).subspan(start, count));
      total += train_step(m, b, plan, cfg.hyper) * static_cast<double>(count);
    }
    losses.push_back(total / static_cast<double>(std::max<std::size_t>(1, order.size())));
  }
  return losses;
}

std::vector<LayerSensitivity> model_sensitivities(const ModelGraph& m, const Batch& calib,
                                                  const ThresholdConfig& thresholds) {
  TrainHyper hyper;
  hyper.activation = {ActivationImpl::Exact, kCordicIterations};
  const Gradients g = compute_gradients(m, calib, nullptr, hyper);
  std::vector<LayerSensitivity> out;
  for (const auto& id : m.weight_layer_ids()) {
    const Tensor& w = m.weights.at(id);
    const QuantParams current = fit_quant_params(w, 4, thresholds);
    out.push_back(layer_sensitivity(id, w, g.weights.at(id), current, thresholds));
  }
  return out;
}

void calibrate_plan(QuantPlan& plan, const ModelGraph& m, const Batch& calib, const PlanBuildConfig& cfg) {
  EngineConfig ec;
  ec.activation = {ActivationImpl::Exact, kCordicIterations};
  std::vector<detail::LayerCache> caches;
  detail::forward_pass(m, calib.inputs, nullptr, ec, false, nullptr, &caches);
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    const LayerSpec& l = m.layers[i];
    if (!l.has_weights()) continue;
    LayerPlan& lp = plan.find(l.id);
    lp.weights = fit_quant_params(m.weights.at(l.id), lp.n, cfg.thresholds);
    lp.act.n = lp.n;
    lp.act_mode = cfg.act_mode;
    std::vector<double> x = caches[i].input.data();
    if (cfg.act_mode == ActQuant::Symmetric)
      for (auto& v : x) v = std::fabs(v);
    const double a = percentile(std::move(x), cfg.alpha_percentile);
    lp.act.alpha = a > 0.0 ? std::max(a, kMinAlpha) : 1.0;
  }
}

QuantPlan build_plan(const ModelGraph& m, const Batch& calib, const PlanBuildConfig& cfg) {
  QuantPlan plan = assign_precisions(model_sensitivities(m, calib, cfg.thresholds), cfg.policy);
  calibrate_plan(plan, m, calib, cfg);
  return plan;
}

QuantPlan fixed_width_plan(const ModelGraph& m, const Batch& calib, const std::vector<int>& widths,
                           const PlanBuildConfig& cfg) {
  const std::vector<std::string> ids = m.weight_layer_ids();
  if (widths.size() != ids.size())
    throw std::invalid_argument("need one bit-width per weight layer (" + std::to_string(ids.size()) + ")");
  QuantPlan plan;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    LayerPlan lp;
    lp.layer_id = ids[i];
    lp.n = widths[i];
    lp.format = code_format_name(lp.n);
    lp.weights.n = lp.n;
    lp.act.n = lp.n;
    plan.layers.push_back(lp);
  }
  calibrate_plan(plan, m, calib, cfg);
  return plan;
}

}  // namespace polaron
