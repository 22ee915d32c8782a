// Copyright 2026 The Polaron Authors.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "polaron/engine.hpp"

namespace polaron {

Dataset::Dataset(Tensor images, std::vector<int> labels) : images_(std::move(images)), labels_(std::move(labels)) {
  if (images_.rank() != 2 || images_.shape()[0] != labels_.size())
    throw ConfigError("dataset images must be [count, features] with one label per row");
}

Batch Dataset::batch(std::span<const std::size_t> indices) const {
  const std::size_t f = features();
  std::vector<double> data;
  data.reserve(indices.size() * f);
  Batch b;
  for (std::size_t i : indices) {
    if (i >= size()) throw std::out_of_range("dataset index out of range");
    const auto first = images_.data().begin() + static_cast<long>(i * f);
    data.insert(data.end(), first, first + static_cast<long>(f));
    b.labels.push_back(labels_[i]);
  }
  b.inputs = Tensor({indices.size(), f}, std::move(data));
  return b;
}

Batch Dataset::all() const { return Batch{images_, labels_}; }

std::vector<double> upsample_bilinear(std::span<const double> image, int src_side, int dst_side) {
  if (src_side < 1 || dst_side < 1 || image.size() != static_cast<std::size_t>(src_side * src_side))
    throw std::invalid_argument("bilinear resize needs a square image");
  std::vector<double> out(static_cast<std::size_t>(dst_side * dst_side));
  const double ratio = static_cast<double>(src_side) / dst_side;
  auto coord = [&](int i, int& lo, int& hi, double& t) {
    const double s = std::clamp((i + 0.5) * ratio - 0.5, 0.0, static_cast<double>(src_side - 1));
    lo = static_cast<int>(std::floor(s));
    hi = std::min(lo + 1, src_side - 1);
    t = s - lo;
  };
  for (int y = 0; y < dst_side; ++y) {
    int y0, y1;
    double ty;
    coord(y, y0, y1, ty);
    for (int x = 0; x < dst_side; ++x) {
      int x0, x1;
      double tx;
      coord(x, x0, x1, tx);
      auto px = [&](int r, int c) { return image[static_cast<std::size_t>(r * src_side + c)]; };
      const double top = px(y0, x0) * (1 - tx) + px(y0, x1) * tx;
      const double bottom = px(y1, x0) * (1 - tx) + px(y1, x1) * tx;
      out[static_cast<std::size_t>(y * dst_side + x)] = top * (1 - ty) + bottom * ty;
    }
  }
  return out;
}

Dataset load_digits(const std::filesystem::path& dir, int side) {
  const Tensor images = read_tensor(dir / "digits_images.plrn");
  const Tensor labels = read_tensor(dir / "digits_labels.plrn");
  if (images.rank() != 2 || images.shape()[1] != 64 || labels.size() != images.shape()[0])
    throw ConfigError("digits files must hold [N, 64] images and N labels");
  const std::size_t n = images.shape()[0];
  const std::size_t f = static_cast<std::size_t>(side * side);
  std::vector<double> data;
  data.reserve(n * f);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::span<const double> img(images.data().data() + i * 64, 64);
    for (double v : upsample_bilinear(img, 8, side)) data.push_back(v / 16.0);
    y[i] = static_cast<int>(labels[i]);
  }
  return Dataset(Tensor({n, f}, std::move(data)), std::move(y));
}

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng() % i]);
  return idx;
}

DataSplit split_dataset(const Dataset& d, std::size_t test_count, std::uint64_t seed) {
  if (test_count > d.size()) throw std::invalid_argument("test split larger than the dataset");
  const std::vector<std::size_t> order = shuffled_indices(d.size(), seed);
  const std::span<const std::size_t> all(order);
  const Batch test = d.batch(all.first(test_count));
  const Batch train = d.batch(all.subspan(test_count));
  return {Dataset(train.inputs, train.labels), Dataset(test.inputs, test.labels)};
}

double accuracy(const Tensor& outputs, const std::vector<int>& labels) {
  if (labels.empty()) return 0.0;
  const std::size_t classes = outputs.size() / labels.size();
  if (classes * labels.size() != outputs.size()) throw std::invalid_argument("outputs do not match labels");
  std::size_t hits = 0;
  for (std::size_t r = 0; r < labels.size(); ++r) {
    const auto first = outputs.data().begin() + static_cast<long>(r * classes);
    const auto best = std::max_element(first, first + static_cast<long>(classes)) - first;
    if (best == labels[r]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

}  // namespace polaron
