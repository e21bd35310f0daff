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

// Interferometer meshes built from MMI couplers and phase shifters.
//
// A mesh is an ordered list of MZI units on adjacent mode pairs followed by a
// column of output phases. The represented matrix is
//
//   U = diag(e^{i·output_phases}) · T_n ··· T_2 · T_1,
//
// where T_k embeds mzi_unitary(theta_k, phi_k) on modes (m_k, m_k + 1).

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "photonic/core.hpp"
#include "photonic/fock.hpp"
#include "photonic/linalg.hpp"

namespace photonic {

struct MziUnit {
  std::size_t mode = 0;  // acts on (mode, mode + 1)
  double theta = 0.0;
  double phi = 0.0;

  friend bool operator==(const MziUnit&, const MziUnit&) = default;
};

struct MeshParams {
  std::vector<MziUnit> units;
  std::vector<double> output_phases;
  std::size_t mode_count = 0;

  static MeshParams identity(std::size_t modes) {
    return MeshParams{{}, std::vector<double>(modes, 0.0), modes};
  }

  void validate() const {
    if (output_phases.size() != mode_count)
      throw DimensionError("MeshParams: output phase count does not match mode count");
    for (const auto& u : units)
      if (u.mode + 1 >= mode_count)
        throw DimensionError("MeshParams: unit on modes (" + std::to_string(u.mode) + ", " +
                             std::to_string(u.mode + 1) + ") is out of range");
  }

  /// Number of free angles (two per unit plus one per output phase).
  [[nodiscard]] std::size_t parameter_count() const { return 2 * units.size() + mode_count; }

  friend bool operator==(const MeshParams&, const MeshParams&) = default;
};

struct SvdRealization {
  MeshParams left_mesh;                 // realizes R1
  std::vector<double> singular_factors; // λ_i / λ_1, per-mode transmission
  MeshParams right_mesh;                // realizes R2†
  double norm = 1.0;                    // λ_1
};

// -- elementary components ---------------------------------------------------

inline Matrix2c mmi_unitary() {
  Matrix2c m;
  m << 1.0, kI, kI, 1.0;
  return m * M_SQRT1_2;
}

inline Matrix2c phase_shifter(double theta) {
  Matrix2c m;
  m << std::polar(1.0, theta), 0.0, 0.0, 1.0;
  return m;
}

/// U_MMI · U_PS(θ) · U_MMI · U_PS(φ) as an explicit product.
inline Matrix2c mzi_product(double theta, double phi) {
  return mmi_unitary() * phase_shifter(theta) * mmi_unitary() * phase_shifter(phi);
}

/// Closed form of mzi_product: i·e^{iθ/2}·[[e^{iφ}sin(θ/2), cos(θ/2)],
/// [e^{iφ}cos(θ/2), −sin(θ/2)]]. The input phase φ multiplies the first
/// column.
inline Matrix2c mzi_unitary(double theta, double phi) {
  const double s = std::sin(theta / 2.0);
  const double c = std::cos(theta / 2.0);
  const Complex pre = kI * std::polar(1.0, theta / 2.0);
  const Complex ephi = std::polar(1.0, phi);
  Matrix2c m;
  m << ephi * s, c, ephi * c, -s;
  return pre * m;
}

// -- meshes ------------------------------------------------------------------

inline ModeTransform mesh_unitary(const MeshParams& params) {
  params.validate();
  const auto n = static_cast<Eigen::Index>(params.mode_count);
  CMatrix u = CMatrix::Identity(n, n);
  for (const auto& unit : params.units) {
    const Matrix2c t = mzi_unitary(unit.theta, unit.phi);
    const auto a = static_cast<Eigen::Index>(unit.mode);
    // Left-multiply: only rows a, a+1 change.
    const Eigen::RowVectorXcd ra = u.row(a);
    const Eigen::RowVectorXcd rb = u.row(a + 1);
    u.row(a) = t(0, 0) * ra + t(0, 1) * rb;
    u.row(a + 1) = t(1, 0) * ra + t(1, 1) * rb;
  }
  for (Eigen::Index i = 0; i < n; ++i)
    u.row(i) *= std::polar(1.0, params.output_phases[static_cast<std::size_t>(i)]);
  return ModeTransform(std::move(u));
}

/// Triangular decomposition of a unitary into M(M−1)/2 MZI units plus output
/// phases, with mesh_unitary(reck_decompose(u)) == u.
///
/// The adjoint V = u† is reduced to a diagonal by left-multiplying MZI blocks
/// that null V's sub-diagonal entries column by column, bottom row first:
/// M_n···M_1·u† = D, hence u = D†·M_n···M_1. Units with nothing to null (to
/// rounding) are set to (θ, φ) = (π, π), which is the identity.
inline MeshParams reck_decompose(const ModeTransform& u, double tolerance = 1e-8) {
  const double defect = unitarity_defect(u.matrix());
  if (defect > tolerance)
    throw ValidationError("reck_decompose: input is not unitary, ||U^dag U - I|| = " +
                          std::to_string(defect));
  const auto n = static_cast<Eigen::Index>(u.mode_count());
  CMatrix v = u.matrix().adjoint();
  MeshParams params;
  params.mode_count = u.mode_count();

  for (Eigen::Index col = 0; col + 1 < n; ++col) {
    for (Eigen::Index row = n - 1; row > col; --row) {
      const Complex x = v(row - 1, col);
      const Complex y = v(row, col);
      double theta = kPi;
      double phi = kPi;
      if (std::abs(y) > 1e-15 * (std::abs(x) + std::abs(y))) {
        // Zero the lower output: e^{iφ}·x·cos(θ/2) = y·sin(θ/2).
        theta = 2.0 * std::atan2(std::abs(x), std::abs(y));
        phi = std::abs(x) > 0.0 ? std::arg(y) - std::arg(x) : 0.0;
      }
      const Matrix2c t = mzi_unitary(theta, phi);
      const Eigen::RowVectorXcd ra = v.row(row - 1);
      const Eigen::RowVectorXcd rb = v.row(row);
      v.row(row - 1) = t(0, 0) * ra + t(0, 1) * rb;
      v.row(row) = t(1, 0) * ra + t(1, 1) * rb;
      v(row, col) = 0.0;
      params.units.push_back({static_cast<std::size_t>(row - 1), wrap_phase(theta), wrap_phase(phi)});
    }
  }
  params.output_phases.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i)
    params.output_phases[static_cast<std::size_t>(i)] = wrap_phase(-std::arg(v(i, i)));
  return params;
}

/// W = R1 · diag(s) · R2† (singular values descending).
inline SvdResult svd_complex(const ModeTransform& w) { return svd_complex(w.matrix()); }

/// Realize W as mesh(R1) · diag(λ_i/λ_1) · mesh(R2†), scaled by λ_1.
inline SvdRealization realize(const ModeTransform& w) {
  const auto svd = svd_complex(w.matrix());
  if (svd.s.size() == 0 || svd.s(0) == 0.0) throw DegenerateInputError("realize: zero matrix");
  SvdRealization out;
  out.norm = svd.s(0);
  out.singular_factors.resize(static_cast<std::size_t>(svd.s.size()));
  for (Eigen::Index i = 0; i < svd.s.size(); ++i)
    out.singular_factors[static_cast<std::size_t>(i)] = svd.s(i) / out.norm;
  out.singular_factors[0] = 1.0;
  out.left_mesh = reck_decompose(ModeTransform(svd.u));
  out.right_mesh = reck_decompose(ModeTransform(svd.v_dagger));
  return out;
}

/// mesh(left) · diag(factors) · mesh(right), i.e. W / ‖W‖.
inline ModeTransform reconstruct(const SvdRealization& r) {
  const CMatrix left = mesh_unitary(r.left_mesh).matrix();
  const CMatrix right = mesh_unitary(r.right_mesh).matrix();
  RVector f(static_cast<Eigen::Index>(r.singular_factors.size()));
  for (std::size_t i = 0; i < r.singular_factors.size(); ++i)
    f(static_cast<Eigen::Index>(i)) = r.singular_factors[i];
  return ModeTransform(left * f.cast<Complex>().asDiagonal() * right);
}

/// Post-selection success for n photons through the loss-realized transform.
inline double realization_success(const SvdRealization& r, int photon_count) {
  return std::pow(std::max(r.norm, 1.0), -2.0 * photon_count);
}

/// Full triangular mesh with every angle zero; a convenient parameter
/// template for searches over mesh phases.
inline MeshParams triangular_template(std::size_t modes) {
  MeshParams p = MeshParams::identity(modes);
  for (std::size_t col = 0; col + 1 < modes; ++col)
    for (std::size_t row = modes - 1; row > col; --row) p.units.push_back({row - 1, 0.0, 0.0});
  return p;
}

}  // namespace photonic
