// Copyright 2026 The Polaron Authors.
// SPDX-License-Identifier: Apache-2.0

#include <bit>
#include <cstring>
#include <fstream>
#include <functional>
#include <numeric>

#include "polaron/quantizer.hpp"

namespace polaron {
namespace {

std::size_t element_count(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

template <typename T>
void put_le(std::string& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

template <typename T>
T get_le(const std::string& in, std::size_t& pos, const std::filesystem::path& path) {
  if (pos + sizeof(T) > in.size()) throw ConfigError("truncated tensor file " + path.string());
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i)
    v |= static_cast<T>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  pos += sizeof(T);
  return v;
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (element_count(shape_) != data_.size())
    throw std::invalid_argument("tensor data length does not match its shape");
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
  const std::size_t n = element_count(shape);
  return Tensor(std::move(shape), std::vector<double>(n, 0.0));
}

Tensor Tensor::vector(std::vector<double> data) {
  const std::size_t n = data.size();
  return Tensor({n}, std::move(data));
}

void write_tensor(const std::filesystem::path& path, const Tensor& t) {
  std::string out = "PLRN";
  put_le<std::uint16_t>(out, 1);
  put_le<std::uint16_t>(out, static_cast<std::uint16_t>(t.rank()));
  for (auto d : t.shape()) put_le<std::uint32_t>(out, static_cast<std::uint32_t>(d));
  for (double v : t.data()) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write tensor file " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

Tensor read_tensor(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open tensor file " + path.string());
  const std::string in((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (in.size() < 8 || in.compare(0, 4, "PLRN") != 0) throw ConfigError("not a PLRN file: " + path.string());
  std::size_t pos = 4;
  const auto version = get_le<std::uint16_t>(in, pos, path);
  if (version != 1) throw ConfigError("unsupported PLRN version " + std::to_string(version));
  const auto rank = get_le<std::uint16_t>(in, pos, path);
  std::vector<std::size_t> shape;
  for (int i = 0; i < rank; ++i) shape.push_back(get_le<std::uint32_t>(in, pos, path));
  const std::size_t n = element_count(shape);
  if (in.size() != pos + 8 * n) throw ConfigError("PLRN payload size mismatch in " + path.string());
  std::vector<double> data(n);
  for (auto& v : data) v = std::bit_cast<double>(get_le<std::uint64_t>(in, pos, path));
  return Tensor(std::move(shape), std::move(data));
}

}  // namespace polaron
