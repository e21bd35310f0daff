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

// Multi-photon evolution through a linear-optical mode transform.
//
// A transform W acts on creation operators as a_i† -> sum_j w_ij a_j†, so row
// index = input mode and column index = output mode. For single-occupancy
// input and output configurations the transition amplitude is the permanent
// of the submatrix W[inputs, outputs]; evolve_fock computes the same
// amplitudes by expanding the operator product directly and serves as the
// independent check of the permanent route.

#pragma once

#include <algorithm>
#include <bit>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "photonic/core.hpp"
#include "photonic/linalg.hpp"

namespace photonic {

/// Largest photon number accepted by evolve_fock and the layouts.
inline constexpr int kMaxPhotons = 6;

// ---------------------------------------------------------------------------
// PhotonConfig

class PhotonConfig {
 public:
  PhotonConfig() = default;
  explicit PhotonConfig(std::vector<int> occupations) : occupations_(std::move(occupations)) {
    for (int n : occupations_) {
      if (n < 0) throw ValidationError("PhotonConfig: negative occupation");
      total_ += n;
    }
  }

  /// One photon in each listed mode (modes may repeat for bunching).
  static PhotonConfig from_modes(std::size_t mode_count, std::span<const std::size_t> modes) {
    std::vector<int> occ(mode_count, 0);
    for (auto m : modes) {
      if (m >= mode_count) throw DimensionError("PhotonConfig: mode out of range");
      ++occ[m];
    }
    return PhotonConfig(std::move(occ));
  }

  [[nodiscard]] const std::vector<int>& occupations() const { return occupations_; }
  [[nodiscard]] int total() const { return total_; }
  [[nodiscard]] std::size_t mode_count() const { return occupations_.size(); }
  int operator[](std::size_t mode) const { return occupations_[mode]; }

  /// Mode index of every photon, ascending, with repetition.
  [[nodiscard]] std::vector<std::size_t> photon_modes() const {
    std::vector<std::size_t> out;
    out.reserve(static_cast<std::size_t>(total_));
    for (std::size_t m = 0; m < occupations_.size(); ++m)
      for (int k = 0; k < occupations_[m]; ++k) out.push_back(m);
    return out;
  }

  [[nodiscard]] std::string to_string() const {
    std::string s = "(";
    for (std::size_t i = 0; i < occupations_.size(); ++i) {
      if (i) s += ',';
      s += std::to_string(occupations_[i]);
    }
    return s + ")";
  }

  friend bool operator==(const PhotonConfig& a, const PhotonConfig& b) {
    return a.occupations_ == b.occupations_;
  }
  friend std::strong_ordering operator<=>(const PhotonConfig& a, const PhotonConfig& b) {
    return a.occupations_ <=> b.occupations_;
  }

 private:
  std::vector<int> occupations_;
  int total_ = 0;
};

// ---------------------------------------------------------------------------
// FockAmplitudeMap

/// Sparse state over Fock configurations of fixed mode count and photon number.
class FockAmplitudeMap {
 public:
  using Storage = std::map<PhotonConfig, Complex>;

  explicit FockAmplitudeMap(std::size_t mode_count = 0) : mode_count_(mode_count) {}

  void add(const PhotonConfig& config, Complex amplitude) {
    if (config.mode_count() != mode_count_)
      throw DimensionError("FockAmplitudeMap: mode count mismatch");
    if (!entries_.empty() && entries_.begin()->first.total() != config.total())
      throw DimensionError("FockAmplitudeMap: photon number mismatch");
    entries_[config] += amplitude;
  }

  [[nodiscard]] Complex at(const PhotonConfig& config) const {
    auto it = entries_.find(config);
    return it == entries_.end() ? Complex{} : it->second;
  }

  [[nodiscard]] std::size_t mode_count() const { return mode_count_; }
  [[nodiscard]] int photon_count() const {
    return entries_.empty() ? 0 : entries_.begin()->first.total();
  }
  [[nodiscard]] const Storage& entries() const { return entries_; }
  [[nodiscard]] bool empty() const { return entries_.empty(); }

  [[nodiscard]] double squared_norm() const {
    double s = 0.0;
    for (const auto& [cfg, amp] : entries_) s += std::norm(amp);
    return s;
  }

  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

 private:
  std::size_t mode_count_;
  Storage entries_;
};

// ---------------------------------------------------------------------------
// ModeTransform

class ModeTransform {
 public:
  ModeTransform() = default;
  explicit ModeTransform(CMatrix entries) : entries_(std::move(entries)) {
    if (entries_.rows() != entries_.cols())
      throw DimensionError("ModeTransform: matrix is not square");
    if (!all_finite(entries_)) throw ValidationError("ModeTransform: non-finite entries");
  }

  static ModeTransform identity(std::size_t modes) {
    const auto n = static_cast<Eigen::Index>(modes);
    return ModeTransform(CMatrix::Identity(n, n));
  }

  [[nodiscard]] const CMatrix& matrix() const { return entries_; }
  [[nodiscard]] std::size_t mode_count() const { return static_cast<std::size_t>(entries_.rows()); }
  Complex operator()(std::size_t i, std::size_t j) const {
    return entries_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }

  [[nodiscard]] CMatrix submatrix(std::span<const std::size_t> rows,
                                  std::span<const std::size_t> cols) const {
    CMatrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (std::size_t c = 0; c < cols.size(); ++c)
        out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = (*this)(rows[r], cols[c]);
    return out;
  }

 private:
  CMatrix entries_;
};

// ---------------------------------------------------------------------------
// DualRailLayout

/// Qubit q is encoded by one photon in qubit_pairs[q] (first mode = |0⟩);
/// every ancilla mode carries exactly one photon in and out.
class DualRailLayout {
 public:
  DualRailLayout() = default;
  DualRailLayout(std::vector<std::pair<std::size_t, std::size_t>> qubit_pairs,
                 std::vector<std::size_t> ancilla_modes, std::size_t mode_count)
      : qubit_pairs_(std::move(qubit_pairs)),
        ancilla_modes_(std::move(ancilla_modes)),
        mode_count_(mode_count) {
    std::vector<bool> used(mode_count_, false);
    auto claim = [&](std::size_t m) {
      if (m >= mode_count_) throw DimensionError("DualRailLayout: mode out of range");
      if (used[m]) throw ValidationError("DualRailLayout: mode listed twice");
      used[m] = true;
    };
    for (auto [a, b] : qubit_pairs_) {
      claim(a);
      claim(b);
    }
    for (auto m : ancilla_modes_) claim(m);
    if (photon_count() > kMaxPhotons)
      throw ValidationError("DualRailLayout: photon number exceeds " + std::to_string(kMaxPhotons));
  }

  /// Qubit q on modes (2q, 2q+1), ancillas on the following modes.
  static DualRailLayout adjacent(std::size_t qubits, std::size_t ancillas = 0,
                                 std::optional<std::size_t> mode_count = std::nullopt) {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t q = 0; q < qubits; ++q) pairs.emplace_back(2 * q, 2 * q + 1);
    std::vector<std::size_t> anc;
    for (std::size_t a = 0; a < ancillas; ++a) anc.push_back(2 * qubits + a);
    return {std::move(pairs), std::move(anc), mode_count.value_or(2 * qubits + ancillas)};
  }

  [[nodiscard]] std::size_t qubit_count() const { return qubit_pairs_.size(); }
  [[nodiscard]] std::size_t mode_count() const { return mode_count_; }
  [[nodiscard]] int photon_count() const {
    return static_cast<int>(qubit_pairs_.size() + ancilla_modes_.size());
  }
  [[nodiscard]] std::size_t basis_size() const { return std::size_t{1} << qubit_count(); }
  [[nodiscard]] const auto& qubit_pairs() const { return qubit_pairs_; }
  [[nodiscard]] const auto& ancilla_modes() const { return ancilla_modes_; }

  /// Occupied modes of logical basis state `index` (qubit 0 is the most
  /// significant bit), qubit modes first, then the ancillas.
  [[nodiscard]] std::vector<std::size_t> basis_modes(std::size_t index) const {
    const std::size_t n = qubit_count();
    if (index >= basis_size()) throw DimensionError("DualRailLayout: basis index out of range");
    std::vector<std::size_t> modes;
    modes.reserve(n + ancilla_modes_.size());
    for (std::size_t q = 0; q < n; ++q) {
      const bool one = (index >> (n - 1 - q)) & 1U;
      modes.push_back(one ? qubit_pairs_[q].second : qubit_pairs_[q].first);
    }
    modes.insert(modes.end(), ancilla_modes_.begin(), ancilla_modes_.end());
    return modes;
  }

  [[nodiscard]] PhotonConfig basis_config(std::size_t index) const {
    const auto modes = basis_modes(index);
    return PhotonConfig::from_modes(mode_count_, modes);
  }

  /// Logical index of a configuration that passes post-selection.
  [[nodiscard]] std::optional<std::size_t> logical_index(const PhotonConfig& config) const {
    if (config.mode_count() != mode_count_) return std::nullopt;
    if (config.total() != photon_count()) return std::nullopt;
    std::size_t index = 0;
    for (auto [a, b] : qubit_pairs_) {
      const int na = config[a];
      const int nb = config[b];
      if (na + nb != 1) return std::nullopt;
      index = (index << 1U) | static_cast<std::size_t>(nb);
    }
    for (auto m : ancilla_modes_)
      if (config[m] != 1) return std::nullopt;
    // Photon numbers add up, so no stray photons remain elsewhere.
    return index;
  }

 private:
  std::vector<std::pair<std::size_t, std::size_t>> qubit_pairs_;
  std::vector<std::size_t> ancilla_modes_;
  std::size_t mode_count_ = 0;
};

// ---------------------------------------------------------------------------
// LogicalOperator

/// Post-selected logical block: row = input basis state, column = output basis
/// state, so input |i⟩ maps to sum_j U(i, j) |j⟩. Not unitary in general.
struct LogicalOperator {
  CMatrix matrix;
  std::size_t qubit_count = 0;
};

// ---------------------------------------------------------------------------
// Operations

/// Matrix permanent by Ryser's formula with Gray-code subset order,
/// O(2^k · k).
inline Complex permanent(const CMatrix& m) {
  if (m.rows() != m.cols()) throw DimensionError("permanent: matrix is not square");
  const auto k = m.rows();
  if (k == 0) return {1.0, 0.0};
  if (k == 1) return m(0, 0);
  if (k == 2) return m(0, 0) * m(1, 1) + m(0, 1) * m(1, 0);
  if (k > 30) throw DimensionError("permanent: matrix too large");

  std::vector<Complex> row_sums(static_cast<std::size_t>(k), Complex{});
  Complex total{};
  const std::uint64_t subsets = std::uint64_t{1} << k;
  std::uint64_t gray_prev = 0;
  for (std::uint64_t g = 1; g < subsets; ++g) {
    const std::uint64_t gray = g ^ (g >> 1U);
    const std::uint64_t flipped = gray ^ gray_prev;
    const auto col = static_cast<Eigen::Index>(std::countr_zero(flipped));
    const double sign = (gray & flipped) ? 1.0 : -1.0;
    Complex prod{1.0, 0.0};
    for (Eigen::Index r = 0; r < k; ++r) {
      auto& s = row_sums[static_cast<std::size_t>(r)];
      s += sign * m(r, col);
      prod *= s;
    }
    // (-1)^(k - |S|)
    const int parity = (static_cast<int>(k) - std::popcount(gray)) & 1;
    total += parity ? -prod : prod;
    gray_prev = gray;
  }
  return total;
}

/// Output amplitudes of a fixed-photon-number input, obtained by expanding
/// prod_i (sum_j w_ij a_j†)^{n_i} / sqrt(n_i!) term by term. Bunched outputs are
/// kept with their sqrt(m_j!) factors.
inline FockAmplitudeMap evolve_fock(const PhotonConfig& input, const ModeTransform& w) {
  const std::size_t modes = w.mode_count();
  if (input.mode_count() != modes) throw DimensionError("evolve_fock: mode count mismatch");
  if (input.total() < 1) throw ValidationError("evolve_fock: input has no photons");
  if (input.total() > kMaxPhotons)
    throw ValidationError("evolve_fock: photon number exceeds " + std::to_string(kMaxPhotons));

  const auto sources = input.photon_modes();
  const std::size_t photons = sources.size();

  std::map<std::vector<int>, Complex> monomials;
  std::vector<int> counts(modes, 0);
  // Depth-first over the output mode of each photon.
  auto expand = [&](auto&& self, std::size_t depth, Complex coeff) -> void {
    if (depth == photons) {
      monomials[counts] += coeff;
      return;
    }
    for (std::size_t j = 0; j < modes; ++j) {
      const Complex wij = w(sources[depth], j);
      if (wij == Complex{}) continue;
      ++counts[j];
      self(self, depth + 1, coeff * wij);
      --counts[j];
    }
  };
  expand(expand, 0, Complex{1.0, 0.0});

  auto factorial = [](int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
  };
  double input_norm = 1.0;
  for (int n : input.occupations()) input_norm *= factorial(n);

  FockAmplitudeMap out(modes);
  for (const auto& [occ, coeff] : monomials) {
    double output_norm = 1.0;
    for (int n : occ) output_norm *= factorial(n);
    out.add(PhotonConfig(occ), coeff * std::sqrt(output_norm / input_norm));
  }
  return out;
}

inline void check_layout(const ModeTransform& w, const DualRailLayout& layout) {
  if (layout.mode_count() != w.mode_count())
    throw DimensionError("layout mode count " + std::to_string(layout.mode_count()) +
                         " does not match transform size " + std::to_string(w.mode_count()));
}

/// Logical operator induced by W under dual-rail post-selection:
/// U(i, j) = perm(W[s_i, s_j]).
inline LogicalOperator extract_logical(const ModeTransform& w, const DualRailLayout& layout) {
  check_layout(w, layout);
  const std::size_t dim = layout.basis_size();
  std::vector<std::vector<std::size_t>> tuples;
  tuples.reserve(dim);
  for (std::size_t i = 0; i < dim; ++i) tuples.push_back(layout.basis_modes(i));

  LogicalOperator op{CMatrix(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim)),
                     layout.qubit_count()};
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j < dim; ++j)
      op.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          permanent(w.submatrix(tuples[i], tuples[j]));
  return op;
}

struct PostSelection {
  CVector amplitudes;  // unnormalized, logical basis order
  CVector state;       // normalized (zero when nothing survives)
  double success_probability = 0.0;
  bool empty = true;   // no weight on any valid configuration
};

/// Keep configurations with one photon per qubit pair and per ancilla.
inline PostSelection postselect(const FockAmplitudeMap& amps, const DualRailLayout& layout) {
  if (!amps.empty() && amps.photon_count() != layout.photon_count())
    throw DimensionError("postselect: photon number does not match layout");
  if (amps.mode_count() != layout.mode_count())
    throw DimensionError("postselect: mode count does not match layout");
  PostSelection out;
  const auto dim = static_cast<Eigen::Index>(layout.basis_size());
  out.amplitudes = CVector::Zero(dim);
  for (const auto& [cfg, amp] : amps) {
    if (auto idx = layout.logical_index(cfg))
      out.amplitudes(static_cast<Eigen::Index>(*idx)) += amp;
  }
  out.success_probability = out.amplitudes.squaredNorm();
  out.empty = out.success_probability == 0.0;
  out.state = out.empty ? CVector(CVector::Zero(dim))
                        : CVector(out.amplitudes / std::sqrt(out.success_probability));
  return out;
}

/// Largest singular value ‖W‖.
inline double spectral_norm(const ModeTransform& w) {
  if (w.matrix().size() == 0 || w.matrix().cwiseAbs().maxCoeff() == 0.0)
    throw DegenerateInputError("spectral_norm: zero matrix");
  return spectral_norm_power(w.matrix());
}

/// Post-selection success of the chip realizing W/‖W‖ with n photons:
/// 1 / max(‖W‖, 1)^(2n).
inline double success_bound(const ModeTransform& w, int photon_count) {
  const double norm = std::max(spectral_norm(w), 1.0);
  return std::pow(norm, -2.0 * photon_count);
}

/// The transform the chip physically implements: W scaled down to unit
/// spectral norm when ‖W‖ > 1, the excess realized as loss.
inline ModeTransform physical_realization(const ModeTransform& w) {
  const double norm = spectral_norm(w);
  if (norm <= 1.0) return w;
  return ModeTransform(w.matrix() / norm);
}

}  // namespace photonic
