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

// The dual Poisson renewal process and its classical and quantum models.
//
// Survival Φ(k) = p·q1^k + (1−p)·q2^k is the probability of at least k zeros
// after a tick. Causal state S_k counts the zeros since the last tick; from
// S_k the process emits 0 and moves to S_{k+1} with probability
// Φ(k+1)/Φ(k), otherwise emits 1 and resets to S_0.
//
// All entropies are in bits.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "photonic/core.hpp"
#include "photonic/linalg.hpp"
#include "photonic/random.hpp"

namespace photonic::stochastic {

inline constexpr double kDefaultTailEpsilon = 1e-10;

struct DualPoissonParams {
  double p = 0.5;
  double q1 = 0.5;
  double q2 = 0.5;

  void validate() const {
    auto open_unit = [](double v) { return v > 0.0 && v < 1.0; };
    if (!open_unit(p) || !open_unit(q1) || !open_unit(q2))
      throw ValidationError("DualPoissonParams: p, q1, q2 must lie strictly in (0, 1)");
  }
  [[nodiscard]] double p_bar() const { return 1.0 - p; }

  friend bool operator==(const DualPoissonParams&, const DualPoissonParams&) = default;
};

namespace detail {

/// Channel weights (p·q1^k, p̄·q2^k) / Φ(k), stable for large k.
inline std::pair<double, double> channel_weights(const DualPoissonParams& dp, double k) {
  const double la = std::log(dp.p) + k * std::log(dp.q1);
  const double lb = std::log(dp.p_bar()) + k * std::log(dp.q2);
  const double m = std::max(la, lb);
  const double a = std::exp(la - m);
  const double b = std::exp(lb - m);
  return {a / (a + b), b / (a + b)};
}

}  // namespace detail

inline double survival(const DualPoissonParams& dp, int k) {
  if (k < 0) throw ValidationError("survival: k must be non-negative");
  return dp.p * std::pow(dp.q1, k) + dp.p_bar() * std::pow(dp.q2, k);
}

struct TransitionProbs {
  double survive = 0.0;  // P(0, S_{k+1} | S_k) = Φ(k+1)/Φ(k)
  double reset = 0.0;    // P(1, S_0 | S_k)
};

inline TransitionProbs transition_probs(const DualPoissonParams& dp, int k) {
  if (k < 0) throw ValidationError("transition_probs: k must be non-negative");
  const auto [wa, wb] = detail::channel_weights(dp, k);
  const double survive = wa * dp.q1 + wb * dp.q2;
  return {survive, 1.0 - survive};
}

/// g = sqrt((1−q1)(1−q2)) / (1 − sqrt(q1·q2)); the overlap of the two channel
/// encodings.
inline double channel_overlap(const DualPoissonParams& dp) {
  return std::sqrt((1.0 - dp.q1) * (1.0 - dp.q2)) / (1.0 - std::sqrt(dp.q1 * dp.q2));
}

struct QuantumMemoryState {
  int k = 0;
  Vector2c amplitudes = Vector2c::Zero();
};

/// |σ_k⟩ = [(√(p q1^k) + i g √(p̄ q2^k)) |0⟩ + i √((1−g²) p̄ q2^k) |1⟩] / √Φ(k).
inline QuantumMemoryState memory_state(const DualPoissonParams& dp, int k) {
  if (k < 0) throw ValidationError("memory_state: k must be non-negative");
  const double g = channel_overlap(dp);
  const auto [wa, wb] = detail::channel_weights(dp, k);
  QuantumMemoryState s;
  s.k = k;
  s.amplitudes(0) = Complex(std::sqrt(wa), g * std::sqrt(wb));
  s.amplitudes(1) = Complex(0.0, std::sqrt(std::max(0.0, 1.0 - g * g) * wb));
  return s;
}

/// Input |σ_k⟩ ⊗ |0⟩ in the memory⊗ancilla basis (index 2·m + a).
inline CVector coupling_input(const DualPoissonParams& dp, int k) {
  const auto s = memory_state(dp, k);
  CVector v = CVector::Zero(4);
  v(0) = s.amplitudes(0);
  v(2) = s.amplitudes(1);
  return v;
}

/// Target √(Φ(k+1)/Φ(k)) |σ_{k+1}⟩|0⟩ + √(1 − Φ(k+1)/Φ(k)) |σ_0⟩|1⟩.
inline CVector coupling_target(const DualPoissonParams& dp, int k) {
  const auto t = transition_probs(dp, k);
  const auto next = memory_state(dp, k + 1).amplitudes;
  const auto zero = memory_state(dp, 0).amplitudes;
  CVector v(4);
  v(0) = std::sqrt(t.survive) * next(0);
  v(2) = std::sqrt(t.survive) * next(1);
  v(1) = std::sqrt(t.reset) * zero(0);
  v(3) = std::sqrt(t.reset) * zero(1);
  return v;
}

struct RelationResidual {
  double strict = 0.0;         // ‖U|σ_k⟩|0⟩ − target‖ with the coefficients as written
  double phase_relaxed = 0.0;  // minimized over an independent phase per ancilla branch
};

inline RelationResidual target_relation_residual(const CMatrix& u, const DualPoissonParams& dp,
                                                 int k) {
  if (u.rows() != 4 || u.cols() != 4)
    throw DimensionError("target_relation_residual: expected a 4x4 unitary");
  const double defect = unitarity_defect(u);
  if (defect > 1e-8)
    throw ValidationError("target_relation_residual: ||U^dag U - I|| = " + std::to_string(defect));
  const CVector out = u * coupling_input(dp, k);
  const CVector target = coupling_target(dp, k);
  RelationResidual r;
  r.strict = (out - target).norm();
  double relaxed = 0.0;
  for (int x = 0; x < 2; ++x) {
    const Vector2c b(out(x), out(2 + x));
    const Vector2c t(target(x), target(2 + x));
    const Complex overlap = t.dot(b);
    const Complex phase = std::abs(overlap) > 0.0 ? overlap / std::abs(overlap) : Complex(1.0);
    relaxed += (b - phase * t).squaredNorm();
  }
  r.phase_relaxed = std::sqrt(relaxed);
  return r;
}

/// A coupling unitary reproducing the transition logic for every k up to a
/// k-dependent phase on the reset branch.
///
/// With √Φ(k)|σ_k⟩ = q1^{k/2}|A⟩ + q2^{k/2}|B⟩ for the channel vectors
/// A = (√p, 0), B = √p̄·(ig, i√(1−g²)), it is enough to map
/// A|0⟩ -> √q1·A|0⟩ + √(p(1−q1))·|σ_0⟩|1⟩ and
/// B|0⟩ -> √q2·B|0⟩ + i√(p̄(1−q2))·|σ_0⟩|1⟩, an isometry by the choice of g.
inline CMatrix ideal_coupling_unitary(const DualPoissonParams& dp) {
  dp.validate();
  const double g = channel_overlap(dp);
  const Vector2c a(std::sqrt(dp.p), 0.0);
  const Vector2c b = std::sqrt(dp.p_bar()) * Vector2c(Complex(0, g), Complex(0, std::sqrt(std::max(0.0, 1.0 - g * g))));
  const Vector2c s0 = memory_state(dp, 0).amplitudes;
  const Complex alpha = std::sqrt(dp.p * (1.0 - dp.q1));
  const Complex beta = Complex(0.0, std::sqrt(dp.p_bar() * (1.0 - dp.q2)));

  auto embed = [](const Vector2c& mem0, const Vector2c& mem1) {
    CVector v(4);
    v << mem0(0), mem1(0), mem0(1), mem1(1);
    return v;
  };
  CMatrix x(4, 2), y(4, 2);
  x.col(0) = embed(a, Vector2c::Zero());
  x.col(1) = embed(b, Vector2c::Zero());
  y.col(0) = embed(std::sqrt(dp.q1) * a, alpha * s0);
  y.col(1) = embed(std::sqrt(dp.q2) * b, beta * s0);
  return unitary_extending(x, y);
}

// -- stationary statistics ----------------------------------------------------

struct StationaryDistribution {
  std::vector<double> pi;  // k = 0..k_max, renormalized
  int k_max = 0;
  double tail_mass = 0.0;  // untruncated mass beyond k_max
};

/// Σ_k Φ(k) = p/(1−q1) + p̄/(1−q2).
inline double survival_sum(const DualPoissonParams& dp) {
  return dp.p / (1.0 - dp.q1) + dp.p_bar() / (1.0 - dp.q2);
}

/// Stationary mass on states k > k_max.
inline double stationary_tail(const DualPoissonParams& dp, int k_max) {
  const double n = static_cast<double>(k_max) + 1.0;
  return (dp.p * std::pow(dp.q1, n) / (1.0 - dp.q1) +
          dp.p_bar() * std::pow(dp.q2, n) / (1.0 - dp.q2)) /
         survival_sum(dp);
}

inline int truncation_for(const DualPoissonParams& dp, double tail_epsilon) {
  if (!(tail_epsilon > 0.0) || tail_epsilon > 1e-3)
    throw ValidationError("tail_epsilon must lie in (0, 1e-3]");
  dp.validate();
  constexpr int kCap = 10'000'000;
  int k = 0;
  while (stationary_tail(dp, k) >= tail_epsilon) {
    if (++k > kCap) throw ValidationError("truncation_for: tail does not decay");
  }
  return k;
}

/// π_k = Φ(k) / Σ_j Φ(j), truncated where the remaining mass drops below
/// tail_epsilon and renormalized.
inline StationaryDistribution stationary_distribution(const DualPoissonParams& dp,
                                                      double tail_epsilon = kDefaultTailEpsilon) {
  StationaryDistribution out;
  out.k_max = truncation_for(dp, tail_epsilon);
  out.tail_mass = stationary_tail(dp, out.k_max);
  const double z = survival_sum(dp);
  out.pi.resize(static_cast<std::size_t>(out.k_max) + 1);
  double total = 0.0;
  for (int k = 0; k <= out.k_max; ++k) {
    out.pi[static_cast<std::size_t>(k)] = survival(dp, k) / z;
    total += out.pi[static_cast<std::size_t>(k)];
  }
  for (auto& v : out.pi) v /= total;
  return out;
}

/// Truncated causal-state machine. Row k holds P(0, S_{k+1}|S_k) and
/// P(1, S_0|S_k); the last state's 0-transition loops back onto itself.
struct TransitionModel {
  int k_max = 0;
  std::vector<double> survive;
  std::vector<double> reset;

  [[nodiscard]] std::size_t state_count() const { return survive.size(); }
};

inline TransitionModel transition_model(const DualPoissonParams& dp, int k_max) {
  TransitionModel m;
  m.k_max = k_max;
  for (int k = 0; k <= k_max; ++k) {
    const auto t = transition_probs(dp, k);
    m.survive.push_back(t.survive);
    m.reset.push_back(t.reset);
  }
  return m;
}

/// Fixed point of the truncated chain by power iteration.
inline std::vector<double> stationary_by_power_iteration(const TransitionModel& m,
                                                         double tolerance = 1e-15,
                                                         int max_iterations = 1'000'000) {
  const std::size_t n = m.state_count();
  std::vector<double> pi(n, 1.0 / static_cast<double>(n));
  std::vector<double> next(n);
  for (int it = 0; it < max_iterations; ++it) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      next[0] += m.reset[k] * pi[k];
      next[std::min(k + 1, n - 1)] += m.survive[k] * pi[k];
    }
    double change = 0.0;
    for (std::size_t k = 0; k < n; ++k) change += std::abs(next[k] - pi[k]);
    pi.swap(next);
    if (change < tolerance) break;
  }
  return pi;
}

inline double classical_entropy(const DualPoissonParams& dp,
                                double tail_epsilon = kDefaultTailEpsilon) {
  const auto st = stationary_distribution(dp, tail_epsilon);
  double h = 0.0;
  for (double v : st.pi)
    if (v > 0.0) h -= v * std::log2(v);
  return h;
}

/// ρ = Σ_k π_k |σ_k⟩⟨σ_k|.
inline Matrix2c stationary_memory_state(const DualPoissonParams& dp,
                                        double tail_epsilon = kDefaultTailEpsilon) {
  const auto st = stationary_distribution(dp, tail_epsilon);
  Matrix2c rho = Matrix2c::Zero();
  for (int k = 0; k <= st.k_max; ++k) {
    const Vector2c s = memory_state(dp, k).amplitudes;
    rho += st.pi[static_cast<std::size_t>(k)] * (s * s.adjoint());
  }
  return rho;
}

/// Von Neumann entropy of a 2×2 density matrix, eigenvalues in closed form.
inline double von_neumann_entropy(const Matrix2c& rho) {
  const double a = rho(0, 0).real();
  const double d = rho(1, 1).real();
  const double off = std::abs(rho(0, 1));
  const double mean = 0.5 * (a + d);
  const double radius = std::sqrt(0.25 * (a - d) * (a - d) + off * off);
  double h = 0.0;
  for (double lambda : {mean + radius, mean - radius})
    if (lambda > 0.0) h -= lambda * std::log2(lambda);
  return std::max(h, 0.0);
}

inline double quantum_entropy(const DualPoissonParams& dp,
                              double tail_epsilon = kDefaultTailEpsilon) {
  return von_neumann_entropy(stationary_memory_state(dp, tail_epsilon));
}

struct StateCount {
  std::size_t count = 0;
  bool untruncated_is_infinite = true;  // the exact process has infinitely many causal states
};

inline StateCount state_count(const DualPoissonParams& dp,
                              double tail_epsilon = kDefaultTailEpsilon) {
  return {static_cast<std::size_t>(truncation_for(dp, tail_epsilon)) + 1, true};
}

// -- model accuracy -----------------------------------------------------------

struct KlDivergence {
  double stationary_weighted = 0.0;  // rows weighted by π
  double uniform_weighted = 0.0;     // rows weighted equally
};

inline constexpr double kKlFloor = 1e-12;

/// D_KL(truth ‖ estimate) over the transition rows, in bits. Estimated
/// probabilities are floored at 1e-12 and renormalized per row.
inline KlDivergence kl_divergence(const TransitionModel& truth, const TransitionModel& estimate,
                                  const std::vector<double>& pi) {
  if (truth.state_count() != estimate.state_count() || pi.size() != truth.state_count())
    throw DimensionError("kl_divergence: models and weights disagree in size");
  KlDivergence out;
  const double uniform = 1.0 / static_cast<double>(truth.state_count());
  for (std::size_t i = 0; i < truth.state_count(); ++i) {
    double e0 = std::max(estimate.survive[i], kKlFloor);
    double e1 = std::max(estimate.reset[i], kKlFloor);
    const double norm = e0 + e1;
    e0 /= norm;
    e1 /= norm;
    double row = 0.0;
    if (truth.survive[i] > 0.0) row += truth.survive[i] * std::log2(truth.survive[i] / e0);
    if (truth.reset[i] > 0.0) row += truth.reset[i] * std::log2(truth.reset[i] / e1);
    out.stationary_weighted += pi[i] * row;
    out.uniform_weighted += uniform * row;
  }
  out.stationary_weighted = std::max(out.stationary_weighted, 0.0);
  out.uniform_weighted = std::max(out.uniform_weighted, 0.0);
  return out;
}

// -- sampling -----------------------------------------------------------------

/// Sequence of '0'/'1' outputs, starting from a state drawn from the
/// stationary distribution.
inline std::string sample_sequence(const DualPoissonParams& dp, std::size_t length,
                                   std::uint64_t seed) {
  if (length < 1) throw ValidationError("sample_sequence: length must be at least 1");
  dp.validate();
  CounterRng rng(seed);
  const auto st = stationary_distribution(dp);
  double u = rng.uniform();
  int k = 0;
  for (; k < st.k_max; ++k) {
    u -= st.pi[static_cast<std::size_t>(k)];
    if (u < 0.0) break;
  }
  // Cache the transition ratios for the states that actually occur.
  std::vector<double> survive;
  auto survive_at = [&](int state) {
    while (static_cast<int>(survive.size()) <= state)
      survive.push_back(transition_probs(dp, static_cast<int>(survive.size())).survive);
    return survive[static_cast<std::size_t>(state)];
  };
  std::string out(length, '0');
  for (std::size_t t = 0; t < length; ++t) {
    if (rng.uniform() < survive_at(k)) {
      ++k;
    } else {
      out[t] = '1';
      k = 0;
    }
  }
  return out;
}

/// Number of zeros between consecutive ticks.
inline std::vector<std::size_t> inter_tick_gaps(const std::string& sequence) {
  std::vector<std::size_t> gaps;
  const auto first = sequence.find('1');
  if (first == std::string::npos) return gaps;
  std::size_t run = 0;
  for (std::size_t t = first + 1; t < sequence.size(); ++t) {
    if (sequence[t] == '1') {
      gaps.push_back(run);
      run = 0;
    } else {
      ++run;
    }
  }
  return gaps;
}

/// Φ̂(k) for k = 0..k_max: fraction of gaps of length at least k.
inline std::vector<double> empirical_survival(const std::string& sequence, int k_max) {
  const auto gaps = inter_tick_gaps(sequence);
  std::vector<double> phi(static_cast<std::size_t>(k_max) + 1, 0.0);
  if (gaps.empty()) return phi;
  for (auto g : gaps)
    for (int k = 0; k <= k_max && static_cast<std::size_t>(k) <= g; ++k)
      phi[static_cast<std::size_t>(k)] += 1.0;
  for (auto& v : phi) v /= static_cast<double>(gaps.size());
  return phi;
}

/// Truncation for models estimated from `length` samples: the lumped last
/// state keeps about 100 expected visits, clamped to [1e-10, 1e-3]. Rows far
/// beyond that are rarely visited and their empirical zeros only measure the
/// KL floor.
inline double sample_resolved_tail(std::size_t length) {
  if (length == 0) throw ValidationError("sample_resolved_tail: length must be positive");
  return std::clamp(100.0 / static_cast<double>(length), kDefaultTailEpsilon, 1e-3);
}

/// Transition frequencies counted along a sequence, starting at its first
/// tick. States beyond k_max are lumped into k_max; unvisited rows are 1/2.
inline TransitionModel estimate_transition_model(const std::string& sequence, int k_max) {
  std::vector<double> zeros(static_cast<std::size_t>(k_max) + 1, 0.0);
  std::vector<double> ones(zeros.size(), 0.0);
  const auto first = sequence.find('1');
  if (first != std::string::npos) {
    int k = 0;
    for (std::size_t t = first + 1; t < sequence.size(); ++t) {
      const auto idx = static_cast<std::size_t>(std::min(k, k_max));
      if (sequence[t] == '1') {
        ones[idx] += 1.0;
        k = 0;
      } else {
        zeros[idx] += 1.0;
        ++k;
      }
    }
  }
  TransitionModel m;
  m.k_max = k_max;
  for (std::size_t i = 0; i < zeros.size(); ++i) {
    const double n = zeros[i] + ones[i];
    m.survive.push_back(n > 0.0 ? zeros[i] / n : 0.5);
    m.reset.push_back(n > 0.0 ? ones[i] / n : 0.5);
  }
  return m;
}

}  // namespace photonic::stochastic
