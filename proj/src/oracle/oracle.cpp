// Copyright 2026 The Polaron Authors.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <vector>

#include "polaron/golden_oracle.hpp"

namespace polaron::oracle {

RationalAcc::RationalAcc(mpz_class numerator, long exponent)
    : num_(std::move(numerator)), exp_(exponent) {
  normalize();
}

void RationalAcc::normalize() {
  if (num_ == 0) {
    exp_ = 0;
    return;
  }
  const mp_bitcnt_t tz = mpz_scan1(num_.get_mpz_t(), 0);
  if (tz > 0) {
    mpz_fdiv_q_2exp(num_.get_mpz_t(), num_.get_mpz_t(), tz);
    exp_ += static_cast<long>(tz);
  }
}

RationalAcc RationalAcc::from_exact(const ExactReal& x) {
  mpz_class n;
  mpz_import(n.get_mpz_t(), 1, 1, sizeof(x.magnitude), 0, 0, &x.magnitude);
  if (x.negative) n = -n;
  return RationalAcc(n, x.exponent);
}

RationalAcc RationalAcc::from_decoded(const EncodedScalar& s) {
  const Decoded d = decode(s);
  if (!d.is_finite()) throw std::invalid_argument("oracle operands must be finite");
  return from_exact(d.value);
}

namespace {

// Brings both numerators to the smaller exponent.
void common_scale(const RationalAcc& a, const RationalAcc& b, mpz_class& na, mpz_class& nb, long& e) {
  e = std::min(a.exponent(), b.exponent());
  na = a.numerator();
  nb = b.numerator();
  if (a.exponent() > e) mpz_mul_2exp(na.get_mpz_t(), na.get_mpz_t(), a.exponent() - e);
  if (b.exponent() > e) mpz_mul_2exp(nb.get_mpz_t(), nb.get_mpz_t(), b.exponent() - e);
}

}  // namespace

RationalAcc RationalAcc::operator+(const RationalAcc& o) const {
  if (is_zero()) return o;
  if (o.is_zero()) return *this;
  mpz_class a, b;
  long e;
  common_scale(*this, o, a, b, e);
  return RationalAcc(a + b, e);
}

RationalAcc RationalAcc::operator-(const RationalAcc& o) const { return *this + (-o); }

RationalAcc RationalAcc::operator*(const RationalAcc& o) const {
  return RationalAcc(num_ * o.num_, exp_ + o.exp_);
}

int compare(const RationalAcc& a, const RationalAcc& b) {
  if (a.sign() != b.sign()) return a.sign() < b.sign() ? -1 : 1;
  mpz_class na, nb;
  long e;
  common_scale(a, b, na, nb, e);
  const int c = cmp(na, nb);
  return c < 0 ? -1 : (c > 0 ? 1 : 0);
}

std::string RationalAcc::to_string() const { return num_.get_str() + "*2^" + std::to_string(exp_); }

RationalAcc oracle_dot(std::span<const ExactReal> a, std::span<const ExactReal> b) {
  if (a.size() != b.size()) throw std::invalid_argument("oracle_dot operands differ in length");
  RationalAcc sum;
  for (std::size_t i = 0; i < a.size(); ++i)
    sum = sum + RationalAcc::from_exact(a[i]) * RationalAcc::from_exact(b[i]);
  return sum;
}

RationalAcc oracle_dot(std::span<const EncodedScalar> a, std::span<const EncodedScalar> b) {
  if (a.size() != b.size()) throw std::invalid_argument("oracle_dot operands differ in length");
  RationalAcc sum;
  for (std::size_t i = 0; i < a.size(); ++i)
    sum = sum + RationalAcc::from_decoded(a[i]) * RationalAcc::from_decoded(b[i]);
  return sum;
}

namespace {

struct Entry {
  RationalAcc value;
  std::uint32_t bits;
};

struct ValueTable {
  FormatDescriptor format;
  // Ascending by value; one entry per value (+0 stands for both zeros).
  std::vector<Entry> entries;
  std::uint32_t negative_zero = 0;
  bool has_negative_zero = false;
};

std::shared_ptr<const ValueTable> build_table(const FormatDescriptor& f) {
  auto t = std::make_shared<ValueTable>();
  t->format = f;
  for (std::uint32_t b = 0; b <= f.mask(); ++b) {
    const EncodedScalar s(b, f);
    const Decoded d = decode(s);
    if (!d.is_finite()) continue;
    if (d.value.is_zero() && d.value.negative) {
      t->negative_zero = b;
      t->has_negative_zero = true;
      continue;
    }
    t->entries.push_back({RationalAcc::from_exact(d.value), b});
  }
  std::sort(t->entries.begin(), t->entries.end(),
            [](const Entry& x, const Entry& y) { return x.value < y.value; });
  for (std::size_t i = 1; i < t->entries.size(); ++i) {
    if (t->entries[i - 1].value == t->entries[i].value)
      throw std::logic_error("duplicate value in " + f.name());
  }
  return t;
}

std::shared_ptr<const ValueTable> table_for(const FormatDescriptor& f) {
  static std::mutex mu;
  static std::map<std::string, std::shared_ptr<const ValueTable>> cache;
  const std::string key = f.name();
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto t = build_table(f);
  cache.emplace(key, t);
  return t;
}

// Floats keep the sign of a value that rounds to zero.
EncodedScalar zero_of_sign(const ValueTable& t, bool negative) {
  if (negative && t.has_negative_zero) return EncodedScalar(t.negative_zero, t.format);
  return EncodedScalar(0, t.format);
}

EncodedScalar finish(const ValueTable& t, const Entry& e, bool x_negative) {
  if (e.value.is_zero()) return zero_of_sign(t, x_negative);
  return EncodedScalar(e.bits, t.format);
}

EncodedScalar overflow_result(const ValueTable& t, bool negative, RoundingMode mode) {
  const FormatDescriptor& f = t.format;
  const Entry& edge = negative ? t.entries.front() : t.entries.back();
  if (!f.has_infinity()) return EncodedScalar(edge.bits, f);  // saturate
  if (mode == RoundingMode::TowardPositive && negative) return EncodedScalar(edge.bits, f);
  return infinity(f, negative);
}

}  // namespace

EncodedScalar oracle_round(const RationalAcc& x, const FormatDescriptor& f, RoundingMode mode,
                           bool negative_zero_hint) {
  const auto table = table_for(f);
  const ValueTable& t = *table;
  const auto& v = t.entries;
  const bool neg = x.sign() < 0;
  if (x.is_zero()) return zero_of_sign(t, negative_zero_hint);

  // First entry with value >= x.
  const auto it = std::lower_bound(v.begin(), v.end(), x,
                                   [](const Entry& e, const RationalAcc& q) { return e.value < q; });
  if (it != v.end() && it->value == x) return EncodedScalar(it->bits, f);

  const bool above_max = it == v.end();
  const bool below_min = it == v.begin();

  if (mode == RoundingMode::TowardPositive) {
    if (above_max) return overflow_result(t, false, mode);
    return finish(t, *it, neg);
  }

  // Nearest, ties to the even bit pattern. Past the extremes IEEE formats
  // overflow to infinity once |x| reaches max + ulp(max)/2.
  if (above_max || below_min) {
    const Entry& edge = above_max ? v.back() : v.front();
    if (!f.has_infinity()) return EncodedScalar(edge.bits, f);
    const Entry& inner = above_max ? v[v.size() - 2] : v[1];
    const RationalAcc gap = above_max ? edge.value - inner.value : inner.value - edge.value;
    const RationalAcc half_ulp(gap.numerator(), gap.exponent() - 1);
    const RationalAcc excess = above_max ? x - edge.value : edge.value - x;
    if (excess < half_ulp) return EncodedScalar(edge.bits, f);
    return infinity(f, neg);
  }
  const Entry& hi = *it;
  const Entry& lo = *(it - 1);
  // Posits never round a nonzero value to zero.
  if (f.is_posit() && lo.value.is_zero()) return EncodedScalar(hi.bits, f);
  if (f.is_posit() && hi.value.is_zero()) return EncodedScalar(lo.bits, f);
  const int c = compare(x - lo.value, hi.value - x);
  if (c < 0) return finish(t, lo, neg);
  if (c > 0) return finish(t, hi, neg);
  const Entry& even = (lo.bits & 1u) == 0 ? lo : hi;
  return finish(t, even, neg);
}

}  // namespace polaron::oracle
