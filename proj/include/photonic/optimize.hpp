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

// Task costs, search-space encodings, a seeded genetic algorithm and a
// Nelder-Mead polish.

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "photonic/chip_sim.hpp"
#include "photonic/core.hpp"
#include "photonic/fock.hpp"
#include "photonic/mesh.hpp"
#include "photonic/random.hpp"
#include "photonic/stochastic.hpp"

namespace photonic {

using Params = std::vector<double>;

// ---------------------------------------------------------------------------
// Search spaces

class SearchSpace {
 public:
  enum class Kind { Box, RealMatrix, ComplexMatrix, MeshPhases, ScaledOrthogonal };

  /// Plain box for black-box costs; decodes to no matrix.
  static SearchSpace box(Params lower, Params upper) {
    if (lower.size() != upper.size() || lower.empty())
      throw DimensionError("SearchSpace: box bounds must be non-empty and of equal size");
    for (std::size_t i = 0; i < lower.size(); ++i)
      if (!(lower[i] < upper[i])) throw ValidationError("SearchSpace: box needs lower < upper");
    SearchSpace s;
    s.kind_ = Kind::Box;
    s.lower_ = std::move(lower);
    s.upper_ = std::move(upper);
    return s;
  }

  /// Real M×M matrices, entries in [−bound, bound], row-major.
  static SearchSpace real_matrix(std::size_t modes, double bound) {
    SearchSpace s;
    s.kind_ = Kind::RealMatrix;
    s.modes_ = modes;
    s.lower_.assign(modes * modes, -bound);
    s.upper_.assign(modes * modes, bound);
    return s;
  }

  /// Complex M×M matrices: real parts row-major, then imaginary parts.
  static SearchSpace complex_matrix(std::size_t modes, double bound) {
    SearchSpace s;
    s.kind_ = Kind::ComplexMatrix;
    s.modes_ = modes;
    s.lower_.assign(2 * modes * modes, -bound);
    s.upper_.assign(2 * modes * modes, bound);
    return s;
  }

  /// W = c·O with O a real rotation: one Givens angle in [0, 2π] per mode
  /// pair (i < j, lexicographic), then c in [1, max_scale]. ‖W‖ = c exactly.
  static SearchSpace scaled_orthogonal(std::size_t modes, double max_scale) {
    if (modes < 2) throw ValidationError("SearchSpace: scaled_orthogonal needs at least two modes");
    if (!(max_scale >= 1.0)) throw ValidationError("SearchSpace: max_scale must be at least 1");
    SearchSpace s;
    s.kind_ = Kind::ScaledOrthogonal;
    s.modes_ = modes;
    const std::size_t angles = modes * (modes - 1) / 2;
    s.lower_.assign(angles, 0.0);
    s.upper_.assign(angles, kTwoPi);
    s.lower_.push_back(1.0);
    s.upper_.push_back(max_scale);
    return s;
  }

  /// Angles of a mesh layout: (θ, φ) per unit, then the output phases, all in
  /// [0, 2π].
  static SearchSpace mesh_phases(MeshParams layout) {
    layout.validate();
    SearchSpace s;
    s.kind_ = Kind::MeshPhases;
    s.modes_ = layout.mode_count;
    s.lower_.assign(layout.parameter_count(), 0.0);
    s.upper_.assign(layout.parameter_count(), kTwoPi);
    s.layout_ = std::move(layout);
    return s;
  }

  [[nodiscard]] Kind kind() const { return kind_; }
  [[nodiscard]] std::size_t dimension() const { return lower_.size(); }
  [[nodiscard]] std::size_t mode_count() const { return modes_; }
  [[nodiscard]] const Params& lower() const { return lower_; }
  [[nodiscard]] const Params& upper() const { return upper_; }
  [[nodiscard]] const MeshParams& layout() const { return layout_; }

  [[nodiscard]] bool contains(const Params& x) const {
    if (x.size() != dimension()) return false;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (!(x[i] >= lower_[i] && x[i] <= upper_[i])) return false;
    return true;
  }

  /// Angle coordinates wrap around; all others are clamped to their bounds.
  [[nodiscard]] Params clamp(Params x) const {
    check(x);
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (periodic(i)) {
        const double width = upper_[i] - lower_[i];
        double t = std::fmod(x[i] - lower_[i], width);
        if (t < 0.0) t += width;
        x[i] = lower_[i] + t;
      } else {
        x[i] = std::clamp(x[i], lower_[i], upper_[i]);
      }
    }
    return x;
  }

  /// Clamps only the non-periodic coordinates; angles may leave their range.
  [[nodiscard]] Params clamp_bounded(Params x) const {
    check(x);
    for (std::size_t i = 0; i < x.size(); ++i)
      if (!periodic(i)) x[i] = std::clamp(x[i], lower_[i], upper_[i]);
    return x;
  }

  [[nodiscard]] bool periodic(std::size_t i) const {
    switch (kind_) {
      case Kind::MeshPhases:
        return true;
      case Kind::ScaledOrthogonal:
        return i + 1 < dimension();
      default:
        return false;
    }
  }

  /// Uniform draw from the box shrunk about its center by `scale` in (0, 1].
  [[nodiscard]] Params sample(CounterRng& rng, double scale = 1.0) const {
    Params x(dimension());
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double mid = 0.5 * (lower_[i] + upper_[i]);
      const double half = 0.5 * scale * (upper_[i] - lower_[i]);
      x[i] = rng.uniform(mid - half, mid + half);
    }
    return x;
  }

  [[nodiscard]] CMatrix decode_matrix(const Params& x) const {
    check(x);
    const auto n = static_cast<Eigen::Index>(modes_);
    CMatrix w(n, n);
    const std::size_t nn = modes_ * modes_;
    switch (kind_) {
      case Kind::Box:
        throw ValidationError("SearchSpace: a box does not describe a matrix");
      case Kind::RealMatrix:
        for (std::size_t k = 0; k < nn; ++k)
          w(static_cast<Eigen::Index>(k / modes_), static_cast<Eigen::Index>(k % modes_)) = x[k];
        return w;
      case Kind::ComplexMatrix:
        for (std::size_t k = 0; k < nn; ++k)
          w(static_cast<Eigen::Index>(k / modes_), static_cast<Eigen::Index>(k % modes_)) =
              Complex(x[k], x[nn + k]);
        return w;
      case Kind::MeshPhases:
        return mesh_unitary(decode_mesh(x)).matrix();
      case Kind::ScaledOrthogonal: {
        Eigen::MatrixXd o = Eigen::MatrixXd::Identity(n, n);
        std::size_t k = 0;
        for (Eigen::Index i = 0; i < n; ++i)
          for (Eigen::Index j = i + 1; j < n; ++j) {
            const double c = std::cos(x[k]), sn = std::sin(x[k]);
            ++k;
            for (Eigen::Index r = 0; r < n; ++r) {
              const double a = o(r, i), b = o(r, j);
              o(r, i) = c * a - sn * b;
              o(r, j) = sn * a + c * b;
            }
          }
        return x[k] * o.cast<Complex>();
      }
    }
    throw ValidationError("SearchSpace: unknown kind");
  }

  [[nodiscard]] Params encode_matrix(const CMatrix& w) const {
    if (kind_ == Kind::Box) throw ValidationError("SearchSpace: a box does not describe a matrix");
    if (kind_ == Kind::ScaledOrthogonal) throw ValidationError("SearchSpace: scaled rotations are not encoded");
    if (kind_ == Kind::MeshPhases) return encode_mesh(reck_decompose(ModeTransform(w)));
    if (w.rows() != static_cast<Eigen::Index>(modes_) || w.cols() != w.rows())
      throw DimensionError("SearchSpace: matrix size does not match");
    const std::size_t nn = modes_ * modes_;
    Params x(kind_ == Kind::RealMatrix ? nn : 2 * nn);
    for (std::size_t k = 0; k < nn; ++k) {
      const Complex z = w(static_cast<Eigen::Index>(k / modes_), static_cast<Eigen::Index>(k % modes_));
      if (kind_ == Kind::RealMatrix) {
        if (z.imag() != 0.0) throw ValidationError("SearchSpace: complex entry in a real space");
        x[k] = z.real();
      } else {
        x[k] = z.real();
        x[nn + k] = z.imag();
      }
    }
    return x;
  }

  [[nodiscard]] MeshParams decode_mesh(const Params& x) const {
    check(x);
    if (kind_ != Kind::MeshPhases) throw ValidationError("SearchSpace: not a mesh space");
    MeshParams p = layout_;
    std::size_t k = 0;
    for (auto& u : p.units) {
      u.theta = x[k++];
      u.phi = x[k++];
    }
    for (auto& ph : p.output_phases) ph = x[k++];
    return p;
  }

  /// Angles are wrapped into [0, 2π); the unit positions must match the
  /// space's layout.
  [[nodiscard]] Params encode_mesh(const MeshParams& p) const {
    if (kind_ != Kind::MeshPhases) throw ValidationError("SearchSpace: not a mesh space");
    if (p.units.size() != layout_.units.size() || p.mode_count != layout_.mode_count)
      throw DimensionError("SearchSpace: mesh layout does not match");
    Params x;
    x.reserve(dimension());
    for (std::size_t i = 0; i < p.units.size(); ++i) {
      if (p.units[i].mode != layout_.units[i].mode)
        throw DimensionError("SearchSpace: unit position does not match");
      x.push_back(wrap_phase(p.units[i].theta));
      x.push_back(wrap_phase(p.units[i].phi));
    }
    for (double ph : p.output_phases) x.push_back(wrap_phase(ph));
    return x;
  }

 private:
  void check(const Params& x) const {
    if (x.size() != dimension())
      throw DimensionError("SearchSpace: expected " + std::to_string(dimension()) + " parameters, got " +
                           std::to_string(x.size()));
  }

  Kind kind_ = Kind::Box;
  std::size_t modes_ = 0;
  Params lower_;
  Params upper_;
  MeshParams layout_;
};

// ---------------------------------------------------------------------------
// Cost functions

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Cost value plus whichever task metrics apply (NaN when not applicable).
struct Evaluation {
  double cost = kNaN;
  double l2 = kNaN;
  double phase_l2 = kNaN;
  double success = kNaN;
  double f1 = kNaN;
  double f2 = kNaN;
};

/// (parameters, per-evaluation seed) -> evaluation. Must be pure.
using CostFunction = std::function<Evaluation(const Params&, std::uint64_t)>;

inline CMatrix cnot_target() {
  CMatrix u = CMatrix::Zero(4, 4);
  u(0, 0) = 1.0;
  u(1, 1) = 1.0;
  u(2, 3) = 1.0;
  u(3, 2) = 1.0;
  return u;
}

inline constexpr double kCnotAlpha = 1e-3;

/// C = ‖Ū − U_CNOT‖_F + α(1 − 1/max(‖W‖, 1)^6) for the 2-qubit, 1-ancilla
/// layout. Also reports the global-phase-optimized distance.
inline Evaluation cnot_cost(const ModeTransform& w, const DualRailLayout& layout,
                            double alpha = kCnotAlpha) {
  if (w.mode_count() != 5) throw DimensionError("cnot_cost: expected a 5x5 transform");
  if (layout.qubit_count() != 2) throw DimensionError("cnot_cost: expected a two-qubit layout");
  const CMatrix ubar = extract_logical(w, layout).matrix;
  const CMatrix target = cnot_target();
  Evaluation e;
  e.l2 = (ubar - target).norm();
  const Complex overlap = (target.adjoint() * ubar).trace();
  const Complex phase = std::abs(overlap) > 0.0 ? std::conj(overlap) / std::abs(overlap) : Complex(1.0);
  e.phase_l2 = (phase * ubar - target).norm();
  const bool zero = w.matrix().cwiseAbs().maxCoeff() == 0.0;
  e.success = zero ? 1.0 : success_bound(w, layout.photon_count());
  e.cost = e.l2 + alpha * (1.0 - e.success);
  return e;
}

struct StochasticMode {
  bool sampled = false;
  std::uint64_t shots = 100'000;  // per basis and step
};

/// Per-step detail of a stochastic evaluation.
struct StepScore {
  int k = 0;
  double fidelity_reset_free = 0.0;  // |⟨σ_{k+1}|ρ_0⟩|² branch
  double fidelity_reset = 0.0;       // |⟨σ_0|ρ_1⟩|² branch
  double p_survive = 0.0;            // measured probability of ancilla outcome 0
  double p_survive_target = 0.0;
};

/// Runs one memory/ancilla step on chip and scores it against the target
/// transition. In sampled mode the memory qubit is reconstructed by
/// tomography per ancilla outcome from `shots` shots per basis.
inline StepScore stochastic_step(const CompiledCoupling& chip, const stochastic::DualPoissonParams& dp,
                                 int k, const StochasticMode& mode, std::uint64_t seed) {
  const auto layout = memory_ancilla_layout();
  const Vector2c sk = stochastic::memory_state(dp, k).amplitudes;
  const Vector2c next = stochastic::memory_state(dp, k + 1).amplitudes;
  const Vector2c s0 = stochastic::memory_state(dp, 0).amplitudes;
  const auto in = prepare_logical_input(std::vector<Vector2c>{sk, {1.0, 0.0}}, layout);
  StepScore s;
  s.k = k;
  s.p_survive_target = stochastic::transition_probs(dp, k).survive;
  if (!mode.sampled) {
    const auto run = run_exact(chip.w, in, layout);
    s.p_survive = run.outcome_probs[0] + run.outcome_probs[2];
    auto fid = [](const ConditionedState& c, const Vector2c& target) {
      return c.defined ? std::norm(target.dot(c.state)) : 0.0;
    };
    s.fidelity_reset_free = fid(run.conditioned[0], next);
    s.fidelity_reset = fid(run.conditioned[1], s0);
    return s;
  }
  // Tomography of the memory qubit, split by the ancilla outcome.
  TomographyCounts counts[2];
  std::uint64_t ancilla0 = 0;
  std::uint64_t valid_z = 0;
  for (Basis b : {Basis::X, Basis::Y, Basis::Z}) {
    const auto rec = sample_in_basis(chip.w, in, layout, 0, b, mode.shots,
                                     hash_seed({seed, static_cast<std::uint64_t>(k),
                                                static_cast<std::uint64_t>(b)}));
    const auto n = logical_counts(rec, layout);  // index 2·memory + ancilla
    for (int x = 0; x < 2; ++x) {
      const std::uint64_t m0 = n[static_cast<std::size_t>(x)];
      const std::uint64_t m1 = n[static_cast<std::size_t>(2 + x)];
      auto& c = counts[x];
      if (b == Basis::X) { c.x0 = m0; c.x1 = m1; }
      if (b == Basis::Y) { c.y0 = m0; c.y1 = m1; }
      if (b == Basis::Z) { c.z0 = m0; c.z1 = m1; }
    }
    if (b == Basis::Z) {
      ancilla0 = n[0] + n[2];
      valid_z = n[0] + n[1] + n[2] + n[3];
    }
  }
  s.p_survive = valid_z > 0 ? static_cast<double>(ancilla0) / static_cast<double>(valid_z) : 0.0;
  // An outcome never observed in some basis cannot be reconstructed; it is
  // scored as the maximally mixed state.
  auto fid = [](const TomographyCounts& c, const Vector2c& target) {
    if (c.x0 + c.x1 == 0 || c.y0 + c.y1 == 0 || c.z0 + c.z1 == 0) return 0.5;
    return fidelity(tomography(c), target);
  };
  s.fidelity_reset_free = fid(counts[0], next);
  s.fidelity_reset = fid(counts[1], s0);
  return s;
}

struct StochasticScore {
  Evaluation eval;
  std::vector<StepScore> steps;
};

/// f1 = mean branch fidelity over k < N and both ancilla outcomes,
/// f2 = (1/N) Σ_{k,x} |P(x|S_k) − P̄(x|S_k)|, cost = (1 − f1) + α·f2.
inline StochasticScore stochastic_cost_detail(const CMatrix& u, const stochastic::DualPoissonParams& dp,
                                              int steps, double alpha, const StochasticMode& mode,
                                              std::uint64_t seed = 0) {
  if (u.rows() != 4 || u.cols() != 4) throw DimensionError("stochastic_cost: expected a 4x4 unitary");
  const double defect = unitarity_defect(u);
  if (defect > 1e-8)
    throw ValidationError("stochastic_cost: candidate is not unitary, ||U^dag U - I|| = " +
                          std::to_string(defect));
  if (steps < 1) throw ValidationError("stochastic_cost: steps must be at least 1");
  dp.validate();
  const auto chip = coupling_transform(u);
  StochasticScore out;
  double f1 = 0.0;
  double f2 = 0.0;
  for (int k = 0; k < steps; ++k) {
    const auto s = stochastic_step(chip, dp, k, mode, seed);
    f1 += s.fidelity_reset_free + s.fidelity_reset;
    // Both outcomes deviate by the same amount.
    f2 += 2.0 * std::abs(s.p_survive - s.p_survive_target);
    out.steps.push_back(s);
  }
  out.eval.f1 = f1 / (2.0 * steps);
  out.eval.f2 = f2 / steps;
  out.eval.cost = (1.0 - out.eval.f1) + alpha * out.eval.f2;
  return out;
}

inline Evaluation stochastic_cost(const CMatrix& u, const stochastic::DualPoissonParams& dp, int steps,
                                  double alpha, const StochasticMode& mode, std::uint64_t seed = 0) {
  return stochastic_cost_detail(u, dp, steps, alpha, mode, seed).eval;
}

/// Transition model realized by a coupling unitary: P̂(0|S_k) is the exact
/// on-chip probability of ancilla outcome 0 from |σ_k⟩.
inline stochastic::TransitionModel realized_transition_model(const CMatrix& u,
                                                             const stochastic::DualPoissonParams& dp,
                                                             int k_max) {
  const auto chip = coupling_transform(u);
  stochastic::TransitionModel m;
  m.k_max = k_max;
  for (int k = 0; k <= k_max; ++k) {
    const auto s = stochastic_step(chip, dp, k, {}, 0);
    m.survive.push_back(s.p_survive);
    m.reset.push_back(1.0 - s.p_survive);
  }
  return m;
}

// ---------------------------------------------------------------------------
// Genetic algorithm

struct GaConfig {
  std::size_t population_size = 30;
  std::size_t generations = 100;
  std::size_t elite_count = 2;
  std::size_t tournament_size = 3;
  double crossover_rate = 0.7;
  double mutation_rate = 0.1;
  double mutation_sigma = 0.05;  // fraction of each coordinate's bound width
  double init_scale = 1.0;       // initial population drawn from the box shrunk by this factor
  std::uint64_t seed = 0;

  void validate() const {
    if (population_size < 2) throw ValidationError("GaConfig: population_size must be at least 2");
    if (elite_count >= population_size)
      throw ValidationError("GaConfig: elite_count must be below population_size");
    if (tournament_size < 1) throw ValidationError("GaConfig: tournament_size must be positive");
    for (double r : {crossover_rate, mutation_rate})
      if (!(r >= 0.0 && r <= 1.0)) throw ValidationError("GaConfig: rates must lie in [0, 1]");
    if (!(mutation_sigma >= 0.0)) throw ValidationError("GaConfig: mutation_sigma must be non-negative");
    if (!(init_scale > 0.0 && init_scale <= 1.0)) throw ValidationError("GaConfig: init_scale must lie in (0, 1]");
  }

  friend bool operator==(const GaConfig&, const GaConfig&) = default;
};

struct GenerationRecord {
  std::size_t generation = 0;
  double best_cost = kNaN;  // best so far
  double mean_cost = kNaN;  // over this generation's population
  Params best_params;
  Evaluation best_metrics;
  std::size_t evaluations = 0;  // cumulative
  std::size_t nonfinite = 0;    // individuals whose cost was not finite
  double wall_seconds = 0.0;
};

struct TrainingRecord {
  std::vector<GenerationRecord> history;
  Params best_params;
  Evaluation best;
  std::size_t evaluations = 0;
};

/// Resumable GA state: population, costs and the generator position.
struct GaState {
  std::size_t generation = 0;  // generations completed
  std::vector<Params> population;
  std::vector<Evaluation> evaluations;
  std::uint64_t rng_key = 0;
  std::uint64_t rng_counter = 0;
  std::size_t evaluation_count = 0;
  TrainingRecord record;
};

namespace detail {

/// Evaluate f(i) for i in [0, n) on up to `jobs` threads; results are stored
/// by index so the order never depends on scheduling.
template <class F>
void parallel_for(std::size_t n, std::size_t jobs, F&& f) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(jobs);
  for (std::size_t t = 0; t < jobs; ++t)
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < n; i += jobs) f(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// Replace non-finite costs by the worst finite cost of the generation.
inline std::size_t sanitize_costs(std::vector<Evaluation>& evals, std::size_t from) {
  double worst = -std::numeric_limits<double>::infinity();
  std::size_t bad = 0;
  for (std::size_t i = 0; i < evals.size(); ++i)
    if (std::isfinite(evals[i].cost)) worst = std::max(worst, evals[i].cost);
  if (!std::isfinite(worst)) worst = std::numeric_limits<double>::max();
  for (std::size_t i = from; i < evals.size(); ++i)
    if (!std::isfinite(evals[i].cost)) {
      evals[i].cost = worst;
      ++bad;
    }
  return bad;
}

inline std::vector<std::size_t> rank_order(const std::vector<Evaluation>& evals) {
  std::vector<std::size_t> order(evals.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return evals[a].cost < evals[b].cost; });
  return order;
}

}  // namespace detail

inline std::uint64_t evaluation_seed(std::uint64_t seed, std::size_t generation, std::size_t individual) {
  return hash_seed({seed, static_cast<std::uint64_t>(generation), static_cast<std::uint64_t>(individual)});
}

/// One GA generation (or the initial population when state is empty).
inline void ga_step(GaState& state, const CostFunction& cost, const SearchSpace& space,
                    const GaConfig& config, std::size_t jobs = 1) {
  const auto start = std::chrono::steady_clock::now();
  CounterRng rng(state.rng_key, state.rng_counter);
  const std::size_t n = config.population_size;
  std::size_t first_new = 0;
  if (state.population.empty()) {
    for (std::size_t i = 0; i < n; ++i) state.population.push_back(space.sample(rng, config.init_scale));
    state.evaluations.assign(n, Evaluation{});
  } else {
    const auto order = detail::rank_order(state.evaluations);
    std::vector<Params> next;
    std::vector<Evaluation> next_evals;
    for (std::size_t e = 0; e < config.elite_count; ++e) {
      next.push_back(state.population[order[e]]);
      next_evals.push_back(state.evaluations[order[e]]);
    }
    first_new = next.size();
    auto tournament = [&]() -> const Params& {
      std::size_t best = rng.below(n);
      for (std::size_t t = 1; t < config.tournament_size; ++t) {
        const std::size_t c = rng.below(n);
        if (state.evaluations[c].cost < state.evaluations[best].cost) best = c;
      }
      return state.population[best];
    };
    while (next.size() < n) {
      const Params& a = tournament();
      const Params& b = tournament();
      Params child = a;
      if (rng.uniform() < config.crossover_rate)
        for (std::size_t i = 0; i < child.size(); ++i)
          if (rng.uniform() < 0.5) child[i] = b[i];
      for (std::size_t i = 0; i < child.size(); ++i)
        if (rng.uniform() < config.mutation_rate)
          child[i] += rng.normal() * config.mutation_sigma * (space.upper()[i] - space.lower()[i]);
      next.push_back(space.clamp(std::move(child)));
      next_evals.emplace_back();
    }
    state.population = std::move(next);
    state.evaluations = std::move(next_evals);
  }
  const std::size_t gen = state.generation;
  detail::parallel_for(n - first_new, jobs, [&](std::size_t j) {
    const std::size_t i = first_new + j;
    try {
      state.evaluations[i] = cost(state.population[i], evaluation_seed(config.seed, gen, i));
    } catch (const std::exception&) {
      state.evaluations[i] = Evaluation{};
    }
  });
  const std::size_t bad = detail::sanitize_costs(state.evaluations, first_new);
  state.evaluation_count += n - first_new;

  const auto order = detail::rank_order(state.evaluations);
  const std::size_t top = order.front();
  auto& rec = state.record;
  if (rec.best_params.empty() || state.evaluations[top].cost < rec.best.cost) {
    rec.best_params = state.population[top];
    rec.best = state.evaluations[top];
  }
  GenerationRecord g;
  g.generation = gen;
  g.best_cost = rec.best.cost;
  double mean = 0.0;
  for (const auto& e : state.evaluations) mean += e.cost;
  g.mean_cost = mean / static_cast<double>(n);
  g.best_params = rec.best_params;
  g.best_metrics = rec.best;
  g.evaluations = state.evaluation_count;
  g.nonfinite = bad;
  g.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  rec.history.push_back(std::move(g));
  rec.evaluations = state.evaluation_count;
  state.rng_key = rng.key();
  state.rng_counter = rng.counter();
  ++state.generation;
}

inline GaState ga_initial_state(const GaConfig& config) {
  GaState s;
  const CounterRng rng(hash_seed({config.seed, 0x6761ULL}));
  s.rng_key = rng.key();
  s.rng_counter = rng.counter();
  return s;
}

/// Runs the GA to config.generations, resuming from `resume` when given.
/// Generation 0 is the random initial population.
inline TrainingRecord ga_run(const CostFunction& cost, const SearchSpace& space, const GaConfig& config,
                             std::size_t jobs = 1, std::optional<GaState> resume = std::nullopt,
                             const std::function<void(const GaState&)>& on_generation = {}) {
  config.validate();
  GaState state = resume ? std::move(*resume) : ga_initial_state(config);
  while (state.generation < config.generations) {
    ga_step(state, cost, space, config, jobs);
    if (on_generation) on_generation(state);
  }
  return state.record;
}

// ---------------------------------------------------------------------------
// Nelder-Mead polish

struct PolishConfig {
  double tolerance = 1e-12;        // simplex diameter at which a descent stops
  std::size_t max_evaluations = 20'000;
  double initial_step = 0.05;      // fraction of each coordinate's bound width
  bool restart = true;             // restart around the best point while it improves
};

struct PolishResult {
  Params params;
  Evaluation best;
  std::size_t evaluations = 0;
  std::size_t restarts = 0;
};

/// Bounded Nelder-Mead with dimension-adaptive coefficients; trial points are
/// clamped into the search space. Never returns a point worse than `start`.
inline PolishResult local_polish(const CostFunction& cost, const SearchSpace& space, const Params& start,
                                 const PolishConfig& config = {}, std::uint64_t seed = 0) {
  if (!space.contains(start)) throw ValidationError("local_polish: start is out of bounds");
  const std::size_t d = space.dimension();
  const double nd = static_cast<double>(d);
  const double alpha = 1.0;
  const double gamma = 1.0 + 2.0 / nd;
  const double rho = 0.75 - 1.0 / (2.0 * nd);
  const double sigma = 1.0 - 1.0 / nd;

  PolishResult out;
  out.params = start;
  out.best.cost = std::numeric_limits<double>::infinity();
  struct Exhausted {};
  // Every evaluation counts against the budget and updates the best point.
  // The simplex lives in unwrapped coordinates; angles are wrapped only here.
  auto evaluate = [&](const Params& raw) {
    if (out.evaluations >= config.max_evaluations) throw Exhausted{};
    ++out.evaluations;
    const Params x = space.clamp(raw);
    Evaluation e;
    try {
      e = cost(x, seed);
    } catch (const std::exception&) {
      e = Evaluation{};
    }
    if (!std::isfinite(e.cost)) e.cost = std::numeric_limits<double>::infinity();
    if (out.evaluations == 1 || e.cost < out.best.cost) {
      out.best = e;
      out.params = x;
    }
    return e;
  };
  auto descend = [&] {
    evaluate(start);
    double step = config.initial_step;
    while (out.evaluations < config.max_evaluations) {
      std::vector<Params> simplex{out.params};
      std::vector<Evaluation> vals{out.best};
      for (std::size_t i = 0; i < d && out.evaluations < config.max_evaluations; ++i) {
        Params x = out.params;
        const double width = space.upper()[i] - space.lower()[i];
        x[i] += step * width;
        if (x[i] > space.upper()[i]) x[i] = out.params[i] - step * width;
        x = space.clamp_bounded(std::move(x));
        vals.push_back(evaluate(x));
        simplex.push_back(std::move(x));
      }
      if (simplex.size() < d + 1) break;
      const double before = out.best.cost;

      std::vector<std::size_t> order(d + 1);
      while (out.evaluations < config.max_evaluations) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return vals[a].cost < vals[b].cost; });
        const std::size_t best = order.front();
        const std::size_t worst = order.back();
        const std::size_t second = order[d - 1];
        double diameter = 0.0;
        for (std::size_t i = 0; i <= d; ++i) {
          double dist = 0.0;
          for (std::size_t j = 0; j < d; ++j) dist = std::max(dist, std::abs(simplex[i][j] - simplex[best][j]));
          diameter = std::max(diameter, dist);
        }
        if (diameter < config.tolerance) break;

        Params centroid(d, 0.0);
        for (std::size_t i = 0; i <= d; ++i)
          if (i != worst)
            for (std::size_t j = 0; j < d; ++j) centroid[j] += simplex[i][j] / nd;
        auto along = [&](double t) {
          Params x(d);
          for (std::size_t j = 0; j < d; ++j) x[j] = centroid[j] + t * (simplex[worst][j] - centroid[j]);
          return space.clamp_bounded(std::move(x));
        };
        Params xr = along(-alpha);
        Evaluation er = evaluate(xr);
        if (er.cost < vals[best].cost) {
          Params xe = along(-gamma);
          Evaluation ee = evaluate(xe);
          if (ee.cost < er.cost) {
            simplex[worst] = std::move(xe);
            vals[worst] = ee;
          } else {
            simplex[worst] = std::move(xr);
            vals[worst] = er;
          }
        } else if (er.cost < vals[second].cost) {
          simplex[worst] = std::move(xr);
          vals[worst] = er;
        } else {
          const bool outside = er.cost < vals[worst].cost;
          Params xc = along(outside ? -rho : rho);
          Evaluation ec = evaluate(xc);
          if (ec.cost < (outside ? er.cost : vals[worst].cost)) {
            simplex[worst] = std::move(xc);
            vals[worst] = ec;
          } else {
            for (std::size_t i = 0; i <= d; ++i) {
              if (i == best) continue;
              for (std::size_t j = 0; j < d; ++j)
                simplex[i][j] = simplex[best][j] + sigma * (simplex[i][j] - simplex[best][j]);
              vals[i] = evaluate(simplex[i]);
            }
          }
        }
      }
      std::size_t best = 0;
      for (std::size_t i = 1; i <= d; ++i)
        if (vals[i].cost < vals[best].cost) best = i;
      if (!config.restart || !(out.best.cost < before)) break;
      ++out.restarts;
      // Next descent starts from a smaller simplex around the improved point.
      double diameter = 0.0;
      for (std::size_t i = 0; i <= d; ++i)
        for (std::size_t j = 0; j < d; ++j)
          diameter = std::max(diameter, std::abs(simplex[i][j] - simplex[best][j]) /
                                            (space.upper()[j] - space.lower()[j]));
      step = std::clamp(10.0 * diameter, config.tolerance, config.initial_step);
    }
  };
  if (config.max_evaluations == 0) throw ValidationError("local_polish: max_evaluations must be positive");
  try {
    descend();
  } catch (const Exhausted&) {
  }
  return out;
}

// ---------------------------------------------------------------------------
// GA + polish rounds under a shared evaluation budget

struct SearchConfig {
  GaConfig ga;                      // ga.seed seeds the whole search
  PolishConfig polish;              // polish.max_evaluations caps each round's polish
  std::size_t max_evaluations = 50'000;
  std::size_t max_rounds = 0;       // 0: as many rounds as the budget allows

  void validate() const {
    ga.validate();
    if (max_evaluations < ga.population_size)
      throw ValidationError("SearchConfig: budget is smaller than one population");
    if (polish.max_evaluations == 0) throw ValidationError("SearchConfig: polish budget must be positive");
  }
};

struct RoundRecord {
  std::size_t round = 0;
  std::uint64_t ga_seed = 0;
  std::size_t generations = 0;
  Evaluation ga_best;
  Evaluation polished;
  std::size_t evaluations = 0;  // cumulative at the end of the round
};

struct SearchResult {
  Params best_params;
  Evaluation best;
  std::size_t evaluations = 0;
  std::vector<RoundRecord> rounds;
  TrainingRecord history;  // GA generations of all rounds, numbered consecutively
};

/// Evaluations used by a GA run of `generations` generations.
inline std::size_t ga_evaluation_count(const GaConfig& c, std::size_t generations) {
  if (generations == 0) return 0;
  return c.population_size + (generations - 1) * (c.population_size - std::min(c.elite_count, c.population_size));
}

/// Repeats GA followed by polish of its best point from fresh seeds until the
/// budget is spent, keeping the lowest-cost point. The last GA is shortened
/// to fit; the total never exceeds config.max_evaluations.
/// `resume` continues from a result saved after a completed round;
/// `on_round` sees the result after each round.
inline SearchResult ga_polish_search(const CostFunction& cost, const SearchSpace& space,
                                     const SearchConfig& config, std::size_t jobs = 1,
                                     std::optional<SearchResult> resume = std::nullopt,
                                     const std::function<void(const SearchResult&)>& on_round = {}) {
  config.validate();
  SearchResult out;
  out.best.cost = std::numeric_limits<double>::infinity();
  if (resume) {
    out = std::move(*resume);
    if (out.evaluations > config.max_evaluations)
      throw ValidationError("ga_polish_search: resumed result exceeds the budget");
    if (out.rounds.empty()) out.best.cost = std::numeric_limits<double>::infinity();
  }
  if (out.evaluations >= config.max_evaluations) return out;
  for (std::size_t round = out.rounds.size(); config.max_rounds == 0 || round < config.max_rounds; ++round) {
    const std::size_t left = config.max_evaluations - out.evaluations;
    GaConfig ga = config.ga;
    ga.seed = hash_seed({config.ga.seed, static_cast<std::uint64_t>(round)});
    while (ga.generations > 0 && ga_evaluation_count(ga, ga.generations) > left) --ga.generations;
    if (ga.generations == 0) break;

    const TrainingRecord rec = ga_run(cost, space, ga, jobs);
    const std::size_t base = out.history.history.empty() ? 0 : out.history.history.back().generation + 1;
    for (GenerationRecord g : rec.history) {
      g.generation += base;
      g.evaluations += out.evaluations;
      if (g.best_cost > out.best.cost) {
        g.best_cost = out.best.cost;
        g.best_params = out.best_params;
        g.best_metrics = out.best;
      }
      out.history.history.push_back(std::move(g));
    }
    out.evaluations += rec.evaluations;

    RoundRecord r;
    r.round = round;
    r.ga_seed = ga.seed;
    r.generations = ga.generations;
    r.ga_best = rec.best;
    r.polished = rec.best;
    Params x = rec.best_params;
    if (out.evaluations < config.max_evaluations) {
      PolishConfig pc = config.polish;
      pc.max_evaluations = std::min(pc.max_evaluations, config.max_evaluations - out.evaluations);
      const PolishResult p = local_polish(cost, space, x, pc, ga.seed);
      out.evaluations += p.evaluations;
      r.polished = p.best;
      x = p.params;
    }
    r.evaluations = out.evaluations;
    if (r.polished.cost < out.best.cost) {
      out.best = r.polished;
      out.best_params = x;
    }
    out.rounds.push_back(r);
    out.history.best = out.best;
    out.history.best_params = out.best_params;
    out.history.evaluations = out.evaluations;
    if (on_round) on_round(out);
    if (out.evaluations >= config.max_evaluations) break;
  }
  return out;
}

/// Defaults used for CNOT discovery: rotation-times-scale search space,
/// 30-generation GA rounds, 4000-evaluation polish per round.
inline SearchSpace cnot_default_space() { return SearchSpace::scaled_orthogonal(5, 2.0); }

inline constexpr double kStochasticAlpha = 0.01;

/// Triangular 4-mode mesh, unitary by construction.
inline SearchSpace stochastic_default_space() { return SearchSpace::mesh_phases(triangular_template(4)); }

inline SearchConfig cnot_default_search(std::uint64_t seed) {
  SearchConfig c;
  c.ga.generations = 30;
  c.ga.seed = seed;
  c.polish.max_evaluations = 4000;
  c.max_evaluations = 50'000;
  return c;
}

}  // namespace photonic
