// Copyright 2026 The Polaron Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <bit>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "polaron/quantizer.hpp"

using namespace polaron;

namespace {

const std::filesystem::path kData = POLARON_TEST_DATA_DIR;

std::vector<double> row(const Tensor& t, std::size_t r) {
  const std::size_t w = t.shape()[1];
  return {t.data().begin() + static_cast<long>(r * w), t.data().begin() + static_cast<long>((r + 1) * w)};
}

void expect_rel(double got, double want, double tol, const std::string& what) {
  const double scale = std::max(std::fabs(want), 1e-300);
  EXPECT_LE(std::fabs(got - want) / scale, tol) << what << " got " << got << " want " << want;
}

QuantParams params(int n, double w_l, double w_h, double k) {
  QuantParams p;
  p.n = n;
  p.w_l = w_l;
  p.w_h = w_h;
  p.scale_k = k;
  return p;
}

}  // namespace

TEST(Tensor, ShapeMustMatchData) {
  EXPECT_THROW(Tensor({2, 3}, std::vector<double>(5)), std::invalid_argument);
  EXPECT_EQ(Tensor::zeros({2, 3}).size(), 6u);
}

TEST(TensorIo, RoundTripAndValidation) {
  const auto dir = std::filesystem::temp_directory_path() / "polaron_tensor_io";
  std::filesystem::create_directories(dir);
  const Tensor t({2, 2, 3}, {1.5, -2, 3e-300, 4, 5, 6, 7, 8, 9, 10, 11, -0.0});
  write_tensor(dir / "t.plrn", t);
  const Tensor back = read_tensor(dir / "t.plrn");
  EXPECT_EQ(back.shape(), t.shape());
  for (std::size_t i = 0; i < t.size(); ++i)
    EXPECT_EQ(std::bit_cast<std::uint64_t>(back[i]), std::bit_cast<std::uint64_t>(t[i]));
  {
    std::ofstream f(dir / "bad.plrn", std::ios::binary);
    f << "NOPE0000";
  }
  EXPECT_THROW(read_tensor(dir / "bad.plrn"), ConfigError);
  EXPECT_THROW(read_tensor(dir / "missing.plrn"), ConfigError);
}

TEST(TensorIo, ReadsFilesWrittenByNumpy) {
  const Tensor labels = read_tensor(kData / "digits_labels.plrn");
  ASSERT_EQ(labels.shape(), std::vector<std::size_t>{1797});
  EXPECT_EQ(labels[0], 0.0);
  EXPECT_EQ(labels[1], 1.0);
  const Tensor images = read_tensor(kData / "digits_images.plrn");
  ASSERT_EQ(images.shape(), (std::vector<std::size_t>{1797, 64}));
}

TEST(ComputeScale, HandValues) {
  const ScaleResult s = compute_scale(Tensor::vector({1, -1}), 8);
  EXPECT_EQ(s.k, 255.0 / 128.0);
  EXPECT_FALSE(s.degenerate);
  const ScaleResult z = compute_scale(Tensor::vector({0, 0}), 8);
  EXPECT_EQ(z.k, 1.0);
  EXPECT_TRUE(z.degenerate);
  for (double c : {0.3, -7.25, 1e-9}) EXPECT_DOUBLE_EQ(compute_scale(Tensor::vector({c}), 4).k, std::fabs(c) * 15 / 8);
  EXPECT_THROW(compute_scale(Tensor(), 8), std::invalid_argument);
}

TEST(Percentile, MatchesLinearInterpolation) {
  EXPECT_EQ(percentile({3, 1, 2, 4}, 0), 1.0);
  EXPECT_EQ(percentile({3, 1, 2, 4}, 100), 4.0);
  EXPECT_DOUBLE_EQ(percentile({1, 2, 3, 4}, 25), 1.75);
  EXPECT_DOUBLE_EQ(percentile({1, 2, 3, 4}, 75), 3.25);
  EXPECT_EQ(percentile({5}, 30), 5.0);
}

TEST(QuantizeAdaptive, ClipPointsAndHandExample) {
  const QuantParams p = params(8, -0.75, 1.5, 2.0);
  const auto lo = quantize_adaptive(Tensor::vector({2.0 * -0.75}), p);
  EXPECT_EQ(lo.codes[0], 0);
  EXPECT_EQ(lo.deq[0], -0.75);
  const auto hi = quantize_adaptive(Tensor::vector({2.0 * 1.5, 100.0}), p);
  EXPECT_EQ(hi.codes[0], 255);
  EXPECT_EQ(hi.codes[1], 255);
  EXPECT_DOUBLE_EQ(hi.deq[0], 1.5);

  // (0.2 + 1) * 15 / 2 = 9 -> deq 9 * 2 / 15 - 1 = 0.2.
  const auto r = quantize_adaptive(Tensor::vector({0.2}), params(4, -1, 1, 1));
  EXPECT_EQ(r.codes[0], 9);
  EXPECT_NEAR(r.deq[0], 0.2, 1e-15);
  EXPECT_THROW(quantize_adaptive(Tensor::vector({1}), params(8, 1, 1, 1)), ConfigError);
}

TEST(QuantizeAdaptive, CodesBoundedIdempotentAndWithinHalfStep) {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int t = 0; t < 300; ++t) {
    const int n = (4 << (t % 3 == 0 ? 0 : t % 3 == 1 ? 1 : 2));
    std::vector<double> w(64);
    for (auto& v : w) v = nd(rng) * 0.1;
    const Tensor W = Tensor::vector(w);
    const QuantParams p = fit_quant_params(W, n);
    const auto once = quantize_adaptive(W, p);
    for (std::size_t i = 0; i < w.size(); ++i) {
      ASSERT_GE(once.codes[i], 0);
      ASSERT_LE(once.codes[i], (std::int64_t{1} << n) - 1);
      const double clipped = std::clamp(w[i] / p.scale_k, p.w_l, p.w_h);
      ASSERT_LE(std::fabs(once.deq[i] - clipped), 0.5 * p.step() * (1 + 1e-9));
    }
    // Feeding the weight-domain result back in reproduces the same codes.
    const auto twice = quantize_adaptive(fake_quantize(W, p), p);
    ASSERT_EQ(twice.codes, once.codes);
  }
}

TEST(FitQuantParams, FallbacksAndCompatMode) {
  const QuantParams sym = fit_quant_params(Tensor::vector({0.1, -0.4, 0.3}), 8, {ThresholdMode::Symmetric});
  EXPECT_EQ(sym.w_l, -1.0);
  EXPECT_EQ(sym.w_h, 1.0);
  const QuantParams flat = fit_quant_params(Tensor::vector({0.5, 0.5, 0.5}), 8);
  EXPECT_LT(flat.w_l, flat.w_h);
  EXPECT_DOUBLE_EQ(flat.w_h, 0.5 / flat.scale_k);
  const QuantParams zero = fit_quant_params(Tensor::vector({0, 0}), 4);
  EXPECT_TRUE(zero.degenerate);
  EXPECT_EQ(zero.w_l, -1.0);
}

TEST(Pact, ForwardExamplesAndDenseGridIdentity) {
  EXPECT_EQ(pact_forward(-3.0, 1.0), 0.0);
  EXPECT_EQ(pact_forward(0.5, 1.0), 0.5);
  EXPECT_EQ(pact_forward(7.0, 2.0), 2.0);
  for (double alpha : {0.5, 1.0, 2.75, 6.0}) {
    for (int i = -4096; i <= 4096; ++i) {
      const double x = i / 256.0;
      ASSERT_EQ(pact_forward(x, alpha), std::min(std::max(x, 0.0), alpha)) << x << " " << alpha;
    }
  }
}

TEST(Pact, QuantizeLattice) {
  const PactParams p{1.0, 2};
  EXPECT_EQ(pact_quantize(0.0, p), 0.0);
  EXPECT_EQ(pact_quantize(1.0, p), 1.0);
  EXPECT_DOUBLE_EQ(pact_quantize(0.4, p), 1.0 / 3.0);
  for (int n : {2, 4, 8}) {
    const PactParams q{2.5, n};
    std::set<double> seen;
    for (int i = 0; i <= 10000; ++i) seen.insert(pact_quantize(2.5 * i / 10000.0, q));
    EXPECT_LE(seen.size(), std::size_t{1} << n);
    EXPECT_TRUE(seen.count(0.0));
    EXPECT_TRUE(seen.count(2.5));
  }
}

TEST(Pact, GradientsMatchFiniteDifferences) {
  const Tensor x = Tensor::vector({0.3, 1.7, -0.4});
  const Tensor g = Tensor::vector({2.0, 3.0, 5.0});
  const PactGradients pg = pact_gradients(x, 1.0, g);
  EXPECT_EQ(pg.dx[0], 2.0);
  EXPECT_EQ(pg.dx[1], 0.0);
  EXPECT_EQ(pg.dx[2], 0.0);
  EXPECT_EQ(pg.dalpha, 3.0);

  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> ux(-3.0, 3.0), ua(0.2, 2.5), uu(-1.0, 1.0);
  const double h = 1e-6;
  for (int t = 0; t < 2000; ++t) {
    const double alpha = ua(rng);
    std::vector<double> xs(8), us(8);
    for (auto& v : xs) {
      do v = ux(rng);
      while (std::fabs(v) < 1e-3 || std::fabs(v - alpha) < 1e-3);
    }
    for (auto& v : us) v = uu(rng);
    auto loss = [&](const std::vector<double>& xv, double a) {
      double s = 0;
      for (std::size_t i = 0; i < xv.size(); ++i) s += us[i] * pact_forward(xv[i], a);
      return s;
    };
    const PactGradients an = pact_gradients(Tensor::vector(xs), alpha, Tensor::vector(us));
    for (std::size_t i = 0; i < xs.size(); ++i) {
      auto xp = xs, xm = xs;
      xp[i] += h;
      xm[i] -= h;
      ASSERT_NEAR((loss(xp, alpha) - loss(xm, alpha)) / (2 * h), an.dx[i], 1e-5);
    }
    ASSERT_NEAR((loss(xs, alpha + h) - loss(xs, alpha - h)) / (2 * h), an.dalpha, 1e-5);
  }
}

TEST(Sensitivity, VanishingCases) {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> nd(0.0, 0.1);
  std::vector<double> w(50), g(50);
  for (auto& v : w) v = nd(rng);
  for (auto& v : g) v = nd(rng);
  const Tensor W = Tensor::vector(w);
  const QuantParams p4 = fit_quant_params(W, 4);
  EXPECT_EQ(sensitivity_term(W, Tensor::vector(g), p4, p4), 0.0);
  EXPECT_EQ(sensitivity_term(W, Tensor::zeros({50}), p4, fit_quant_params(W, 8)), 0.0);
  const LayerSensitivity s = layer_sensitivity("fc", W, Tensor::vector(g), p4);
  EXPECT_EQ(s.s_sc4, 0.0);
  EXPECT_GT(s.s_sc8, 0.0);
  EXPECT_EQ(s.s_l, std::max(s.s_sc8, s.s_sc4));
  EXPECT_EQ(s.n_l, 50u);
  EXPECT_THROW(layer_sensitivity("x", Tensor(), Tensor(), p4), std::invalid_argument);
  EXPECT_THROW(sensitivity_term(W, Tensor::zeros({49}), p4, p4), std::invalid_argument);
}

TEST(Sensitivity, PositivelyHomogeneousInGradient) {
  std::mt19937_64 rng(24);
  std::normal_distribution<double> nd(0.0, 0.2);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> w(40), g(40), g3(40);
    for (auto& v : w) v = nd(rng);
    for (std::size_t i = 0; i < g.size(); ++i) {
      g[i] = nd(rng);
      g3[i] = 3.0 * g[i];
    }
    const Tensor W = Tensor::vector(w);
    const QuantParams cur = fit_quant_params(W, 4);
    const QuantParams cand = fit_quant_params(W, 8);
    const double s1 = sensitivity_term(W, Tensor::vector(g), cur, cand);
    const double s3 = sensitivity_term(W, Tensor::vector(g3), cur, cand);
    ASSERT_NEAR(s3, 3.0 * s1, 1e-12 * std::fabs(s3) + 1e-300);
  }
}

TEST(Sensitivity, MatchesScriptedEvaluation) {
  const Tensor w = read_tensor(kData / "sens_weights.plrn");
  const Tensor g = read_tensor(kData / "sens_grads.plrn");
  const Tensor e = read_tensor(kData / "sens_expected.plrn");
  for (std::size_t l = 0; l < w.shape()[0]; ++l) {
    const Tensor W = Tensor::vector(row(w, l));
    const LayerSensitivity s = layer_sensitivity("l", W, Tensor::vector(row(g, l)), fit_quant_params(W, 4));
    expect_rel(s.s_sc8, e.at(l, 0), 1e-12, "s_sc8");
    EXPECT_NEAR(s.s_sc4, e.at(l, 1), 1e-18);
    expect_rel(s.s_l, e.at(l, 2), 1e-12, "s_l");
  }
}

TEST(QuantizerFixtures, EquationsMatchScriptedEvaluation) {
  const Tensor in = read_tensor(kData / "quant_inputs.plrn");
  const Tensor meta = read_tensor(kData / "quant_meta.plrn");
  const Tensor prm = read_tensor(kData / "quant_params.plrn");
  const Tensor codes = read_tensor(kData / "quant_codes.plrn");
  const Tensor deq = read_tensor(kData / "quant_deq.plrn");
  const Tensor px = read_tensor(kData / "pact_x.plrn");
  const Tensor py = read_tensor(kData / "pact_y.plrn");
  const Tensor pq = read_tensor(kData / "pact_xq.plrn");
  ASSERT_EQ(in.shape()[0], 1000u);
  for (std::size_t i = 0; i < in.shape()[0]; ++i) {
    const int n = static_cast<int>(meta.at(i, 0));
    const Tensor W = Tensor::vector(row(in, i));
    const QuantParams p = fit_quant_params(W, n);
    expect_rel(p.scale_k, prm.at(i, 0), 1e-12, "k");
    expect_rel(p.w_l, prm.at(i, 1), 1e-12, "w_l");
    expect_rel(p.w_h, prm.at(i, 2), 1e-12, "w_h");
    const QuantizeResult q = quantize_adaptive(W, p);
    const PactParams pp{meta.at(i, 1), n};
    for (std::size_t j = 0; j < W.size(); ++j) {
      ASSERT_EQ(static_cast<double>(q.codes[j]), codes.at(i, j)) << i << "," << j;
      // Absolute floor of one part in 1e12 of the threshold span near zero.
      ASSERT_LE(std::fabs(q.deq[j] - deq.at(i, j)), 1e-12 * std::max(std::fabs(deq.at(i, j)), p.w_h - p.w_l));
      ASSERT_LE(std::fabs(pact_forward(px.at(i, j), pp.alpha) - py.at(i, j)), 1e-12 * std::max(1.0, std::fabs(py.at(i, j))));
      ASSERT_LE(std::fabs(pact_quantize(py.at(i, j), pp) - pq.at(i, j)), 1e-12 * std::max(1.0, std::fabs(pq.at(i, j))));
    }
  }
}

TEST(AssignPrecisions, PolicyExamples) {
  auto sens = [](std::vector<double> v) {
    std::vector<LayerSensitivity> s;
    for (std::size_t i = 0; i < v.size(); ++i) s.push_back({"l" + std::to_string(i), 0, 0, v[i], 10, 1});
    return s;
  };
  EXPECT_EQ(assign_bit_widths(sens({0.2, 0.2, 0.2, 0.2, 0.2}), {}), (std::vector<int>{8, 8, 8, 8, 8}));
  PolicyConfig quart;
  quart.p_low = 25;
  quart.p_high = 75;
  EXPECT_EQ(assign_bit_widths(sens({1, 2, 3, 4}), quart), (std::vector<int>{8, 8, 8, 16}));
  EXPECT_EQ(assign_bit_widths(sens({7}), {}), std::vector<int>{8});
  PolicyConfig no_floor = quart;
  no_floor.floor_first = no_floor.floor_last = false;
  EXPECT_EQ(assign_bit_widths(sens({1, 2, 3, 4}), no_floor), (std::vector<int>{4, 8, 8, 16}));

  const QuantPlan plan = assign_precisions(sens({1, 2, 3, 4}), quart);
  ASSERT_EQ(plan.layers.size(), 4u);
  EXPECT_EQ(plan.layers[3].format, "fxp16:f0");
  EXPECT_EQ(plan.layers[0].weights.n, 8);
}

TEST(AssignPrecisions, InvariantUnderPositiveScaling) {
  std::mt19937_64 rng(25);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    std::vector<LayerSensitivity> s, sc;
    const double c = std::ldexp(1.0, static_cast<int>(rng() % 40) - 20);
    for (int i = 0; i < 7; ++i) {
      const double v = u(rng);
      s.push_back({"l", 0, 0, v, 1, 1});
      sc.push_back({"l", 0, 0, v * c, 1, 1});
    }
    ASSERT_EQ(assign_bit_widths(s, {}), assign_bit_widths(sc, {}));
  }
}

TEST(PlanIo, RoundTripsAndRejectsBadInput) {
  QuantPlan plan;
  LayerPlan a;
  a.layer_id = "fc1";
  a.n = 4;
  a.format = "fxp4:f0";
  a.weights = params(4, -1.2345678901234567, 0.1, 0.003);
  a.act = {6.5, 4};
  plan.layers.push_back(a);
  LayerPlan b = a;
  b.layer_id = "fc2";
  b.format = "posit8";
  b.n = 8;
  b.weights.n = 8;
  b.act = {1.0, 8};
  b.act_mode = ActQuant::Symmetric;
  plan.layers.push_back(b);
  const std::string text = serialize_plan(plan);
  EXPECT_EQ(text.substr(0, text.find('\n')), "# polaron quant plan v1");
  const QuantPlan back = parse_plan(text);
  ASSERT_EQ(back.layers.size(), 2u);
  EXPECT_EQ(back.layers[0].weights.w_l, a.weights.w_l);
  EXPECT_EQ(back.layers[1].act_mode, ActQuant::Symmetric);
  EXPECT_EQ(serialize_plan(back), text);
  EXPECT_EQ(back.find("fc2").format, "posit8");
  EXPECT_THROW(back.find("fc9"), ConfigError);

  EXPECT_THROW(parse_plan("layer x format=fp32 n=8 w_l=-1 w_h=1 scale_k=1 alpha=1 act=pact\n"), ConfigError);
  EXPECT_THROW(parse_plan("layer x format=posit8 n=8 w_l=1 w_h=1 scale_k=1 alpha=1 act=pact\n"), ConfigError);
  EXPECT_THROW(parse_plan("layer x format=posit8 n=8 w_l=-1 w_h=1 scale_k=1 act=pact\n"), ConfigError);
  EXPECT_THROW(parse_plan("layer x format=posit8 n=8 w_l=-1 w_h=1 scale_k=1 alpha=1 act=pact bogus=1\n"),
               ConfigError);
}
