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

// End-to-end chip runs: logical input preparation, evolution through the
// physical realization of W, post-selection, finite-shot sampling, basis
// changes and single-qubit tomography.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Eigenvalues>

#include "photonic/core.hpp"
#include "photonic/fock.hpp"
#include "photonic/linalg.hpp"
#include "photonic/random.hpp"

namespace photonic {

// ---------------------------------------------------------------------------
// Types

struct ShotRecord {
  std::map<PhotonConfig, std::uint64_t> counts;  // every detected configuration
  std::uint64_t shots_requested = 0;
  std::uint64_t valid_count = 0;  // shots passing post-selection
  std::uint64_t lost = 0;         // shots with a photon lost (sub-unitary realization)

  friend bool operator==(const ShotRecord&, const ShotRecord&) = default;
};

/// 2×2 density matrix, validated on construction.
class DensityMatrix2 {
 public:
  explicit DensityMatrix2(const Matrix2c& rho, double tolerance = 1e-10) : rho_(rho) {
    if ((rho - rho.adjoint()).norm() > tolerance)
      throw ValidationError("DensityMatrix2: not Hermitian");
    if (std::abs(rho.trace() - 1.0) > tolerance)
      throw ValidationError("DensityMatrix2: trace is not 1");
    Eigen::SelfAdjointEigenSolver<Matrix2c> es(rho);
    if (es.eigenvalues().minCoeff() < -tolerance)
      throw ValidationError("DensityMatrix2: negative eigenvalue");
  }

  static DensityMatrix2 pure(const Vector2c& psi) {
    const Vector2c n = psi.normalized();
    return DensityMatrix2(n * n.adjoint());
  }

  [[nodiscard]] const Matrix2c& matrix() const { return rho_; }
  [[nodiscard]] Eigen::Vector3d bloch() const {
    return {2.0 * rho_(1, 0).real(), 2.0 * rho_(1, 0).imag(), (rho_(0, 0) - rho_(1, 1)).real()};
  }

 private:
  Matrix2c rho_;
};

enum class Basis { X, Y, Z };

inline Basis parse_basis(std::string_view tag) {
  if (tag == "X" || tag == "x") return Basis::X;
  if (tag == "Y" || tag == "y") return Basis::Y;
  if (tag == "Z" || tag == "z") return Basis::Z;
  throw ValidationError("unknown measurement basis '" + std::string(tag) + "'");
}

inline const char* basis_name(Basis b) {
  switch (b) {
    case Basis::X: return "X";
    case Basis::Y: return "Y";
    case Basis::Z: return "Z";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Input preparation

namespace detail {

inline void require_normalized(double norm2, const char* what) {
  if (std::abs(norm2 - 1.0) > 1e-10)
    throw ValidationError(std::string(what) + ": amplitudes are not normalized (|a|^2 = " +
                          std::to_string(norm2) + ")");
}

}  // namespace detail

/// Basis state from a bit string, qubit 0 first ("10" = |10⟩).
inline FockAmplitudeMap prepare_logical_input(std::string_view bits, const DualRailLayout& layout) {
  if (bits.size() != layout.qubit_count())
    throw DimensionError("prepare_logical_input: expected " + std::to_string(layout.qubit_count()) +
                         " bits");
  std::size_t index = 0;
  for (char c : bits) {
    if (c != '0' && c != '1') throw ValidationError("prepare_logical_input: bits must be 0 or 1");
    index = (index << 1U) | static_cast<std::size_t>(c == '1');
  }
  FockAmplitudeMap out(layout.mode_count());
  out.add(layout.basis_config(index), 1.0);
  return out;
}

/// Superposition over the logical basis (index order of the layout).
inline FockAmplitudeMap prepare_logical_input(const CVector& amplitudes,
                                              const DualRailLayout& layout) {
  if (static_cast<std::size_t>(amplitudes.size()) != layout.basis_size())
    throw DimensionError("prepare_logical_input: amplitude count does not match 2^qubits");
  detail::require_normalized(amplitudes.squaredNorm(), "prepare_logical_input");
  FockAmplitudeMap out(layout.mode_count());
  for (Eigen::Index i = 0; i < amplitudes.size(); ++i)
    if (amplitudes(i) != Complex{})
      out.add(layout.basis_config(static_cast<std::size_t>(i)), amplitudes(i));
  return out;
}

/// Product state, one (c0, c1) pair per qubit.
inline FockAmplitudeMap prepare_logical_input(const std::vector<Vector2c>& qubits,
                                              const DualRailLayout& layout) {
  if (qubits.size() != layout.qubit_count())
    throw DimensionError("prepare_logical_input: one amplitude pair per qubit expected");
  CVector state = CVector::Ones(1);
  for (const auto& q : qubits) {
    detail::require_normalized(q.squaredNorm(), "prepare_logical_input");
    CVector next(state.size() * 2);
    for (Eigen::Index i = 0; i < state.size(); ++i) {
      next(2 * i) = state(i) * q(0);
      next(2 * i + 1) = state(i) * q(1);
    }
    state = std::move(next);
  }
  return prepare_logical_input(state, layout);
}

// ---------------------------------------------------------------------------
// Exact runs

/// Pure state of one qubit conditioned on the values of all other qubits.
struct ConditionedState {
  std::size_t outcome = 0;   // the other qubits' values, in layout order
  double probability = 0.0;  // within the post-selected distribution
  Vector2c state = Vector2c::Zero();
  bool defined = false;      // false when the outcome has zero weight
};

struct ExactRun {
  CVector amplitudes;                 // post-selected logical amplitudes, unnormalized
  std::vector<double> outcome_probs;  // renormalized over valid outcomes
  double success_probability = 0.0;
  std::vector<ConditionedState> conditioned;  // for the memory qubit (qubit 0)
  FockAmplitudeMap output;                    // full output state
};

/// Linear extension of evolve_fock over a superposed input.
inline FockAmplitudeMap evolve_superposition(const FockAmplitudeMap& input, const ModeTransform& w) {
  if (input.mode_count() != w.mode_count())
    throw DimensionError("evolve: input mode count does not match transform");
  FockAmplitudeMap out(w.mode_count());
  for (const auto& [cfg, amp] : input)
    for (const auto& [o, a] : evolve_fock(cfg, w)) out.add(o, amp * a);
  return out;
}

/// States of `qubit` conditioned on each joint value of the remaining qubits.
inline std::vector<ConditionedState> condition_on_others(const CVector& amplitudes,
                                                         std::size_t qubit_count,
                                                         std::size_t qubit = 0) {
  if (qubit >= qubit_count) throw DimensionError("condition_on_others: qubit out of range");
  const double total = amplitudes.squaredNorm();
  const std::size_t shift = qubit_count - 1 - qubit;
  std::vector<ConditionedState> out;
  for (std::size_t rest = 0; rest < (std::size_t{1} << (qubit_count - 1)); ++rest) {
    // Re-insert the conditioned qubit's bit into `rest`.
    const std::size_t high = (rest >> shift) << (shift + 1);
    const std::size_t low = rest & ((std::size_t{1} << shift) - 1);
    const auto i0 = static_cast<Eigen::Index>(high | low);
    const auto i1 = static_cast<Eigen::Index>(high | low | (std::size_t{1} << shift));
    ConditionedState c;
    c.outcome = rest;
    const Vector2c v(amplitudes(i0), amplitudes(i1));
    const double w = v.squaredNorm();
    c.probability = total > 0.0 ? w / total : 0.0;
    c.defined = w > 0.0;
    if (c.defined) c.state = v / std::sqrt(w);
    out.push_back(c);
  }
  return out;
}

/// Evolve through the physical realization W / max(‖W‖, 1) and post-select.
inline ExactRun run_exact(const ModeTransform& w, const FockAmplitudeMap& input,
                          const DualRailLayout& layout) {
  check_layout(w, layout);
  if (input.mode_count() != layout.mode_count())
    throw DimensionError("run_exact: input mode count does not match layout");
  if (input.photon_count() != layout.photon_count())
    throw DimensionError("run_exact: input photon number does not match layout");
  ExactRun run;
  run.output = evolve_superposition(input, physical_realization(w));
  const auto ps = postselect(run.output, layout);
  run.amplitudes = ps.amplitudes;
  run.success_probability = ps.success_probability;
  run.outcome_probs.assign(layout.basis_size(), 0.0);
  if (!ps.empty)
    for (std::size_t i = 0; i < layout.basis_size(); ++i)
      run.outcome_probs[i] = std::norm(ps.state(static_cast<Eigen::Index>(i)));
  if (layout.qubit_count() >= 2) run.conditioned = condition_on_others(ps.amplitudes, layout.qubit_count());
  return run;
}

// ---------------------------------------------------------------------------
// Finite shots

/// Multinomial draw over every output configuration plus photon loss,
/// realized as a chain of binomials in configuration order.
inline ShotRecord sample_counts(const ModeTransform& w, const FockAmplitudeMap& input,
                                const DualRailLayout& layout, std::uint64_t shots,
                                std::uint64_t seed) {
  if (shots < 1) throw ValidationError("sample_counts: shots must be at least 1");
  const auto run = run_exact(w, input, layout);
  CounterRng rng(seed);
  ShotRecord rec;
  rec.shots_requested = shots;
  std::uint64_t remaining = shots;
  double mass_left = 1.0;
  for (const auto& [cfg, amp] : run.output) {
    const double p = std::norm(amp);
    if (p <= 0.0) continue;
    const double cond = std::clamp(p / mass_left, 0.0, 1.0);
    const std::uint64_t n = remaining > 0 ? binomial(rng, remaining, cond) : 0;
    mass_left -= p;
    if (mass_left <= 0.0) mass_left = 0.0;
    if (n == 0) continue;
    rec.counts[cfg] = n;
    remaining -= n;
    if (layout.logical_index(cfg)) rec.valid_count += n;
  }
  // Leftover probability is loss from a sub-unitary realization.
  rec.lost = remaining;
  return rec;
}

/// Counts per logical basis state for the post-selected shots.
inline std::vector<std::uint64_t> logical_counts(const ShotRecord& rec, const DualRailLayout& layout) {
  std::vector<std::uint64_t> out(layout.basis_size(), 0);
  for (const auto& [cfg, n] : rec.counts)
    if (auto idx = layout.logical_index(cfg)) out[*idx] += n;
  return out;
}

// ---------------------------------------------------------------------------
// Measurement bases

/// 2×2 block applied after W on a qubit's modes (row convention, W' = W·B)
/// so that the basis's +1 eigenstate leaves in the |0⟩ mode.
inline Matrix2c basis_change(Basis basis) {
  Matrix2c h;
  h << 1.0, 1.0, 1.0, -1.0;
  h *= M_SQRT1_2;
  switch (basis) {
    case Basis::Z: return Matrix2c::Identity();
    case Basis::X: return h;
    case Basis::Y: {
      Matrix2c s = Matrix2c::Identity();
      s(1, 1) = -kI;
      return s * h;
    }
  }
  throw ValidationError("basis_change: invalid basis");
}

inline ModeTransform with_basis_change(const ModeTransform& w, const DualRailLayout& layout,
                                       std::size_t qubit, Basis basis) {
  check_layout(w, layout);
  if (qubit >= layout.qubit_count()) throw DimensionError("measurement qubit out of range");
  const auto [a, b] = layout.qubit_pairs()[qubit];
  const Matrix2c blk = basis_change(basis);
  CMatrix m = w.matrix();
  const Eigen::VectorXcd ca = m.col(static_cast<Eigen::Index>(a));
  const Eigen::VectorXcd cb = m.col(static_cast<Eigen::Index>(b));
  m.col(static_cast<Eigen::Index>(a)) = blk(0, 0) * ca + blk(1, 0) * cb;
  m.col(static_cast<Eigen::Index>(b)) = blk(0, 1) * ca + blk(1, 1) * cb;
  return ModeTransform(std::move(m));
}

/// Post-selected logical distribution after rotating `qubit` into `basis`.
inline std::vector<double> measure_in_basis(const ModeTransform& w, const FockAmplitudeMap& input,
                                            const DualRailLayout& layout, std::size_t qubit,
                                            Basis basis) {
  return run_exact(with_basis_change(w, layout, qubit, basis), input, layout).outcome_probs;
}

inline ShotRecord sample_in_basis(const ModeTransform& w, const FockAmplitudeMap& input,
                                  const DualRailLayout& layout, std::size_t qubit, Basis basis,
                                  std::uint64_t shots, std::uint64_t seed) {
  return sample_counts(with_basis_change(w, layout, qubit, basis), input, layout, shots, seed);
}

// ---------------------------------------------------------------------------
// Tomography

/// Outcome counts (n0, n1) of one qubit in each Pauli basis.
struct TomographyCounts {
  std::uint64_t x0 = 0, x1 = 0;
  std::uint64_t y0 = 0, y1 = 0;
  std::uint64_t z0 = 0, z1 = 0;
};

/// Clip negative eigenvalues and renormalize the trace.
inline DensityMatrix2 project_to_density(const Matrix2c& m) {
  const Matrix2c herm = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix2c> es(herm);
  Eigen::Vector2d vals = es.eigenvalues().cwiseMax(0.0);
  if (vals.sum() <= 0.0) throw DegenerateInputError("project_to_density: no positive weight");
  vals /= vals.sum();
  const Matrix2c v = es.eigenvectors();
  Matrix2c rho = v * vals.cast<Complex>().asDiagonal() * v.adjoint();
  rho = 0.5 * (rho + rho.adjoint());
  return DensityMatrix2(rho);
}

/// ρ = (I + ⟨X⟩X + ⟨Y⟩Y + ⟨Z⟩Z) / 2, projected onto valid states.
inline DensityMatrix2 tomography_from_expectations(double ex, double ey, double ez) {
  Matrix2c rho;
  rho << 1.0 + ez, Complex(ex, -ey), Complex(ex, ey), 1.0 - ez;
  return project_to_density(0.5 * rho);
}

inline DensityMatrix2 tomography(const TomographyCounts& c) {
  auto expectation = [](std::uint64_t n0, std::uint64_t n1, const char* name) {
    const std::uint64_t n = n0 + n1;
    if (n == 0) throw ValidationError(std::string("tomography: no valid counts in basis ") + name);
    return (static_cast<double>(n0) - static_cast<double>(n1)) / static_cast<double>(n);
  };
  return tomography_from_expectations(expectation(c.x0, c.x1, "X"), expectation(c.y0, c.y1, "Y"),
                                      expectation(c.z0, c.z1, "Z"));
}

/// ⟨ψ|ρ|ψ⟩ for a (re)normalized ψ.
inline double fidelity(const DensityMatrix2& rho, const Vector2c& psi) {
  const double n = psi.squaredNorm();
  if (n <= 0.0) throw DegenerateInputError("fidelity: zero target state");
  const double f = (psi.adjoint() * rho.matrix() * psi)(0, 0).real() / n;
  return std::clamp(f, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Memory/ancilla coupling on chip

/// Memory qubit on modes (0, 1), ancilla qubit on modes (2, 3); logical index
/// 2·memory + ancilla.
inline DualRailLayout memory_ancilla_layout() { return DualRailLayout::adjacent(2); }

struct CompiledCoupling {
  ModeTransform w;
  Complex lambda = 0.0;        // W(2,3); chosen so that K_1 − λK_0 has rank one
  double rank_residual = 0.0;  // second singular value of K_1 − λK_0 (rounding level)
};

namespace detail {

/// Root of smaller magnitude of a2 λ² + a1 λ + a0 (0 when all vanish).
inline Complex small_root(Complex a2, Complex a1, Complex a0) {
  const double scale = std::max({std::abs(a2), std::abs(a1), std::abs(a0)});
  if (scale == 0.0) return 0.0;
  a2 /= scale;
  a1 /= scale;
  a0 /= scale;
  constexpr double kTiny = 1e-14;
  if (std::abs(a2) < kTiny) return std::abs(a1) < kTiny ? Complex(0.0) : -a0 / a1;
  const Complex d = std::sqrt(a1 * a1 - 4.0 * a2 * a0);
  const Complex q = -0.5 * (std::real(std::conj(a1) * d) >= 0.0 ? a1 + d : a1 - d);
  const Complex big = q / a2;
  if (std::abs(q) < kTiny) return big;  // both roots at zero
  const Complex small = a0 / q;
  return std::abs(small) <= std::abs(big) ? small : big;
}

}  // namespace detail

/// Four-mode transform whose post-selected action on |m⟩|0⟩ equals the
/// coupling unitary U (column convention, index 2·m + a).
///
/// Kraus blocks K_x[m'][m] = U[2m'+x][2m]. The perm amplitude of input
/// (m, ancilla mode 2) to output (m', mode 2+x) is
/// W(m,m')W(2,2+x) + W(m,2+x)W(2,m'). With
///   rows 0-1: [K_0ᵀ | 0 | g]
///   row  2  : [eᵀ   | 1 | λ]
///   row  3  : [0    | 0 | 1]
/// outcome 0 gives K_0 and outcome 1 gives λK_0 + (g eᵀ)ᵀ, so λ is a root
/// of det(K_1 − λK_0) = 0 and g eᵀ factors (K_1 − λK_0)ᵀ. Exact for any U.
inline CompiledCoupling coupling_transform(const CMatrix& u) {
  if (u.rows() != 4 || u.cols() != 4) throw DimensionError("coupling_transform: expected 4x4");
  Matrix2c k0, k1;
  for (int mp = 0; mp < 2; ++mp)
    for (int m = 0; m < 2; ++m) {
      k0(mp, m) = u(2 * mp, 2 * m);
      k1(mp, m) = u(2 * mp + 1, 2 * m);
    }
  const Complex a1 = -(k1(0, 0) * k0(1, 1) + k1(1, 1) * k0(0, 0) - k1(0, 1) * k0(1, 0) - k1(1, 0) * k0(0, 1));
  const Complex lambda = detail::small_root(k0.determinant(), a1, k1.determinant());
  const Matrix2c rest = (k1 - lambda * k0).transpose();
  const auto svd = svd_complex(CMatrix(rest));
  CMatrix w = CMatrix::Zero(4, 4);
  w.block(0, 0, 2, 2) = k0.transpose();
  for (int m = 0; m < 2; ++m) {
    w(m, 3) = svd.u(m, 0) * svd.s(0);
    w(2, m) = svd.v_dagger(0, m);
  }
  w(2, 2) = 1.0;
  w(2, 3) = lambda;
  w(3, 3) = 1.0;
  return {ModeTransform(std::move(w)), lambda, svd.s(1)};
}

}  // namespace photonic
