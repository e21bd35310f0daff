// Copyright 2026 The photonic-vqc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>

#include "photonic/core.hpp"

namespace photonic {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Order-sensitive hash of a sequence of integers; used to derive
/// per-evaluation seeds such as hash(seed, generation, individual).
constexpr std::uint64_t hash_seed(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x6a09e667f3bcc909ULL;
  for (auto p : parts) h = mix64(h ^ mix64(p));
  return h;
}

/// Counter-based generator: output n is mix64(key + n·γ), so any stream can be
/// split into independent children without sharing state. Satisfies
/// UniformRandomBitGenerator. Distribution helpers are implemented here rather
/// than through <random> so that draws are identical across standard
/// libraries.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t seed = 0) : key_(mix64(seed)) {}
  CounterRng(std::uint64_t key, std::uint64_t counter)
      : key_(key), counter_(counter) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() {
    return mix64(key_ + 0x9e3779b97f4a7c15ULL * (counter_++));
  }

  /// Independent child stream.
  [[nodiscard]] CounterRng split(std::uint64_t stream) const {
    return CounterRng(hash_seed({key_, stream}), 0);
  }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Reject the top partial block so the modulo is unbiased.
    const std::uint64_t limit = max() - max() % n;
    std::uint64_t x;
    do {
      x = (*this)();
    } while (x >= limit);
    return x % n;
  }

  /// Standard normal via Box-Muller.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
  }

  Complex complex_normal() {
    return {normal() * M_SQRT1_2, normal() * M_SQRT1_2};
  }

  [[nodiscard]] std::uint64_t key() const { return key_; }
  [[nodiscard]] std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Exact Binomial(n, p) draw by geometric waiting times; costs O(n·min(p, 1-p)).
inline std::uint64_t binomial(CounterRng& rng, std::uint64_t n, double p) {
  if (n == 0 || p <= 0.0) return 0;
  if (p >= 1.0) return n;
  if (p > 0.5) return n - binomial(rng, n, 1.0 - p);
  const double log_q = std::log1p(-p);
  std::uint64_t successes = 0;
  double position = 0.0;
  for (;;) {
    double u = rng.uniform();
    while (u <= 0.0) u = rng.uniform();
    position += std::floor(std::log(u) / log_q) + 1.0;
    if (position > static_cast<double>(n)) break;
    ++successes;
  }
  return successes;
}

}  // namespace photonic
