// Copyright 2026 The Polaron Authors.
// SPDX-License-Identifier: Apache-2.0

#include <stdexcept>

#include "polaron/mac_engine.hpp"

namespace polaron {

int booth_multiply_4x4(int a, int b) {
  if (a < -8 || a > 7 || b < -8 || b > 7)
    throw std::invalid_argument("booth_multiply_4x4 operands must lie in [-8, 7]");
  // Digit i of the recoded multiplier is b[i-1] - b[i] in {-1, 0, 1}.
  const unsigned ub = static_cast<unsigned>(b) & 0xFu;
  unsigned sum = 0;
  unsigned prev = 0;
  for (int i = 0; i < 4; ++i) {
    const unsigned bi = (ub >> i) & 1u;
    const int digit = static_cast<int>(prev) - static_cast<int>(bi);
    const unsigned partial = static_cast<unsigned>(digit * a) << i;
    sum = (sum + partial) & 0xFFu;
    prev = bi;
  }
  return static_cast<int>(static_cast<std::int8_t>(static_cast<std::uint8_t>(sum)));
}

std::uint32_t tile_multiply(std::uint32_t a, std::uint32_t b, int width) {
  if (width != 4 && width != 8 && width != 12 && width != 16)
    throw std::invalid_argument("tile_multiply width must be 4, 8, 12 or 16");
  if ((a >> width) != 0 || (b >> width) != 0)
    throw std::invalid_argument("tile_multiply operand wider than width");
  const int digits = width / 4;

  // Split each operand into signed 4-bit digits s_j (u_j - 16 when u_j >= 8)
  // plus a carry row c = sum of 16^(j+1) over the recoded digits, so that
  // x = S + C with every S digit in the Booth unit's range.
  int sa[4];
  int sb[4];
  std::int64_t ca = 0;
  std::int64_t cb = 0;
  std::int64_t signed_b = 0;
  for (int j = 0; j < digits; ++j) {
    const int ua = static_cast<int>((a >> (4 * j)) & 0xFu);
    const int ub = static_cast<int>((b >> (4 * j)) & 0xFu);
    sa[j] = ua >= 8 ? ua - 16 : ua;
    sb[j] = ub >= 8 ? ub - 16 : ub;
    if (ua >= 8) ca += std::int64_t{1} << (4 * (j + 1));
    if (ub >= 8) cb += std::int64_t{1} << (4 * (j + 1));
    signed_b += static_cast<std::int64_t>(sb[j]) << (4 * j);
  }

  std::int64_t product = 0;
  for (int i = 0; i < digits; ++i)
    for (int j = 0; j < digits; ++j)
      product += static_cast<std::int64_t>(booth_multiply_4x4(sa[i], sb[j])) << (4 * (i + j));

  // a*b = Sa*Sb + Ca*Sb + a*Cb; the correction rows are shift-and-add only.
  for (int j = 0; j <= digits; ++j) {
    if ((ca >> (4 * j)) & 1) product += signed_b * (std::int64_t{1} << (4 * j));
    if ((cb >> (4 * j)) & 1) product += static_cast<std::int64_t>(a) << (4 * j);
  }
  return static_cast<std::uint32_t>(product);
}

}  // namespace polaron
