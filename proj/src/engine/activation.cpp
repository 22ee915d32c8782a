// Copyright 2026 The Polaron Authors.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "polaron/engine.hpp"

namespace polaron {
namespace {

constexpr double kGeluCubic = 0.044715;
const double kGeluScale = std::sqrt(2.0 / std::numbers::pi);

// Shift index of each micro-rotation; 4, 13, 40, ... run twice so the
// hyperbolic recurrence converges.
std::vector<int> cordic_schedule(int iterations) {
  std::vector<int> s;
  int repeat = 4;
  for (int i = 1; static_cast<int>(s.size()) < iterations; ++i) {
    s.push_back(i);
    if (i == repeat && static_cast<int>(s.size()) < iterations) {
      s.push_back(i);
      repeat = 3 * repeat + 1;
    }
  }
  return s;
}

double gelu_exact(double x) {
  return 0.5 * x * (1.0 + std::tanh(kGeluScale * (x + kGeluCubic * x * x * x)));
}

double sigmoid_exact(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double apply_scalar(ActivationKind kind, double x, const ActivationParams& p) {
  const bool cordic = p.impl == ActivationImpl::Cordic;
  const int it = p.iterations;
  switch (kind) {
    case ActivationKind::None: return x;
    case ActivationKind::ReLU: return x > 0.0 ? x : 0.0;
    case ActivationKind::Sigmoid: return cordic ? cordic_sigmoid(x, it) : sigmoid_exact(x);
    case ActivationKind::Tanh: return cordic ? cordic_tanh(x, it) : std::tanh(x);
    case ActivationKind::Swish: return x * (cordic ? cordic_sigmoid(x, it) : sigmoid_exact(x));
    case ActivationKind::GELU: {
      if (!cordic) return gelu_exact(x);
      return 0.5 * x * (1.0 + cordic_tanh(kGeluScale * (x + kGeluCubic * x * x * x), it));
    }
    case ActivationKind::SeLU: {
      if (x > 0.0) return kSeluLambda * x;
      return kSeluLambda * kSeluAlpha * ((cordic ? cordic_exp(x, it) : std::exp(x)) - 1.0);
    }
    case ActivationKind::SoftMax: break;
  }
  throw std::logic_error("softmax is not elementwise");
}

}  // namespace

CoshSinh cordic_cosh_sinh(double t, int iterations) {
  if (iterations < 1) throw std::invalid_argument("CORDIC needs at least one iteration");
  const std::vector<int> schedule = cordic_schedule(iterations);
  double gain = 1.0;
  for (int i : schedule) gain *= std::sqrt(1.0 - std::ldexp(1.0, -2 * i));
  double x = 1.0 / gain;
  double y = 0.0;
  double z = t;
  for (int i : schedule) {
    const double d = z >= 0.0 ? 1.0 : -1.0;
    const double xs = std::ldexp(x, -i);
    const double ys = std::ldexp(y, -i);
    x += d * ys;
    y += d * xs;
    z -= d * std::atanh(std::ldexp(1.0, -i));
  }
  return {x, y};
}

double cordic_exp(double x, int iterations) {
  if (std::isnan(x)) return x;
  if (x > 710.0) return std::numeric_limits<double>::infinity();
  if (x < -746.0) return 0.0;
  const double q = std::nearbyint(x / std::numbers::ln2);
  const double r = x - q * std::numbers::ln2;
  const CoshSinh cs = cordic_cosh_sinh(r, iterations);
  return std::ldexp(cs.cosh + cs.sinh, static_cast<int>(q));
}

double cordic_tanh(double x, int iterations) {
  if (std::isnan(x)) return x;
  if (x > 8.0) return 1.0;
  if (x < -8.0) return -1.0;
  // Odd by construction: the rotation sequence always starts with d = +1,
  // so evaluate |x| and mirror.
  const double a = std::fabs(x);
  if (a == 0.0) return x;
  double t;
  if (a <= 1.0) {
    const CoshSinh cs = cordic_cosh_sinh(a, iterations);
    t = cs.sinh / cs.cosh;
  } else {
    t = 1.0 - 2.0 / (cordic_exp(2.0 * a, iterations) + 1.0);
  }
  return x < 0.0 ? -t : t;
}

double cordic_sigmoid(double x, int iterations) {
  if (x > 16.0) return 1.0;
  if (x < -16.0) return 0.0;
  return 0.5 * (1.0 + cordic_tanh(0.5 * x, iterations));
}

std::string activation_name(ActivationKind a) {
  switch (a) {
    case ActivationKind::None: return "none";
    case ActivationKind::ReLU: return "relu";
    case ActivationKind::Sigmoid: return "sigmoid";
    case ActivationKind::Tanh: return "tanh";
    case ActivationKind::Swish: return "swish";
    case ActivationKind::GELU: return "gelu";
    case ActivationKind::SeLU: return "selu";
    case ActivationKind::SoftMax: return "softmax";
  }
  return "none";
}

ActivationKind parse_activation(std::string_view text) {
  for (auto k : {ActivationKind::None, ActivationKind::ReLU, ActivationKind::Sigmoid, ActivationKind::Tanh,
                 ActivationKind::Swish, ActivationKind::GELU, ActivationKind::SeLU, ActivationKind::SoftMax}) {
    if (activation_name(k) == text) return k;
  }
  throw ConfigError("unknown activation '" + std::string(text) +
                    "'; expected one of: none, relu, sigmoid, tanh, swish, gelu, selu, softmax");
}

std::vector<double> activation_apply(ActivationKind kind, std::span<const double> x,
                                     const ActivationParams& p) {
  std::vector<double> out(x.size());
  if (kind != ActivationKind::SoftMax) {
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = apply_scalar(kind, x[i], p);
    return out;
  }
  if (x.empty()) return out;
  const double peak = *std::max_element(x.begin(), x.end());
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - peak;
    out[i] = p.impl == ActivationImpl::Cordic ? cordic_exp(d, p.iterations) : std::exp(d);
    total += out[i];
  }
  for (auto& v : out) v /= total;
  return out;
}

Tensor activation_apply(ActivationKind kind, const Tensor& x, const ActivationParams& p) {
  if (kind != ActivationKind::SoftMax || x.rank() < 2)
    return Tensor(x.shape(), activation_apply(kind, std::span<const double>(x.data()), p));
  // Row-wise over the last dimension.
  const std::size_t w = x.shape().back();
  Tensor out = x;
  for (std::size_t r = 0; r * w < x.size(); ++r) {
    const auto row = activation_apply(kind, std::span<const double>(x.data()).subspan(r * w, w), p);
    std::copy(row.begin(), row.end(), out.data().begin() + static_cast<long>(r * w));
  }
  return out;
}

double activation_derivative(ActivationKind kind, double z) {
  switch (kind) {
    case ActivationKind::None: return 1.0;
    case ActivationKind::ReLU: return z > 0.0 ? 1.0 : 0.0;
    case ActivationKind::Sigmoid: {
      const double s = sigmoid_exact(z);
      return s * (1.0 - s);
    }
    case ActivationKind::Tanh: {
      const double t = std::tanh(z);
      return 1.0 - t * t;
    }
    case ActivationKind::Swish: {
      const double s = sigmoid_exact(z);
      return s + z * s * (1.0 - s);
    }
    case ActivationKind::GELU: {
      const double u = kGeluScale * (z + kGeluCubic * z * z * z);
      const double t = std::tanh(u);
      return 0.5 * (1.0 + t) + 0.5 * z * (1.0 - t * t) * kGeluScale * (1.0 + 3.0 * kGeluCubic * z * z);
    }
    case ActivationKind::SeLU: return z > 0.0 ? kSeluLambda : kSeluLambda * kSeluAlpha * std::exp(z);
    case ActivationKind::SoftMax: break;
  }
  throw std::invalid_argument("softmax derivative is folded into the loss");
}

}  // namespace polaron
