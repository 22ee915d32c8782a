// Copyright 2026 The Polaron Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>

namespace polaron {

/// Worker count: POLARON_THREADS if set (>= 1), else hardware concurrency.
/// A ScopedThreadCount override takes precedence over both.
int thread_count();

class ScopedThreadCount {
 public:
  explicit ScopedThreadCount(int threads);
  ~ScopedThreadCount();
  ScopedThreadCount(const ScopedThreadCount&) = delete;
  ScopedThreadCount& operator=(const ScopedThreadCount&) = delete;

 private:
  int previous_;
};

/// Runs fn(begin, end) over [0, n) split into contiguous static chunks.
/// Callers write results by index, so output never depends on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace polaron
