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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "photonic/core.hpp"
#include "photonic/random.hpp"

namespace photonic {

struct SvdResult {
  CMatrix u;
  RVector s;  // non-negative, non-increasing
  CMatrix v_dagger;
};

namespace detail {

/// Orthonormalize `basis` in place, filling columns flagged in `missing` with
/// unit vectors orthogonal to every other column.
inline void complete_columns(CMatrix& basis, const std::vector<bool>& missing) {
  const auto n = basis.rows();
  Eigen::Index candidate = 0;
  for (Eigen::Index j = 0; j < basis.cols(); ++j) {
    if (!missing[static_cast<std::size_t>(j)]) continue;
    for (;; ++candidate) {
      if (candidate >= n) throw DegenerateInputError("cannot complete basis");
      CVector v = CVector::Unit(n, candidate);
      for (Eigen::Index k = 0; k < basis.cols(); ++k) {
        if (k == j || (missing[static_cast<std::size_t>(k)] && k > j)) continue;
        v -= basis.col(k) * basis.col(k).dot(v);
      }
      // second pass for numerical orthogonality
      for (Eigen::Index k = 0; k < basis.cols(); ++k) {
        if (k == j || (missing[static_cast<std::size_t>(k)] && k > j)) continue;
        v -= basis.col(k) * basis.col(k).dot(v);
      }
      const double norm = v.norm();
      if (norm > 1e-6) {
        basis.col(j) = v / norm;
        ++candidate;
        break;
      }
    }
  }
}

}  // namespace detail

/// Thin complex SVD of a square matrix by one-sided (Hestenes) Jacobi.
///
/// Columns of a working copy are pairwise rotated until mutually orthogonal;
/// the column norms are then the singular values. Ties in the final ordering
/// keep the original column order.
inline SvdResult svd_complex(const CMatrix& w, double tolerance = 1e-14,
                             int max_sweeps = 60) {
  if (w.rows() != w.cols()) throw DimensionError("svd_complex: matrix is not square");
  if (!all_finite(w)) throw ValidationError("svd_complex: non-finite entries");
  const auto n = w.cols();
  CMatrix a = w;
  CMatrix v = CMatrix::Identity(n, n);

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool rotated = false;
    for (Eigen::Index p = 0; p + 1 < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double alpha = a.col(p).squaredNorm();
        const double beta = a.col(q).squaredNorm();
        const Complex gamma = a.col(p).dot(a.col(q));
        const double mag = std::abs(gamma);
        if (mag == 0.0 || mag <= tolerance * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const Complex phase = gamma / mag;
        const double zeta = (beta - alpha) / (2.0 * mag);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;

        const CVector ap = a.col(p);
        const CVector bq = a.col(q) * std::conj(phase);
        a.col(p) = c * ap - s * bq;
        a.col(q) = s * ap + c * bq;

        const CVector vp = v.col(p);
        const CVector vq = v.col(q) * std::conj(phase);
        v.col(p) = c * vp - s * vq;
        v.col(q) = s * vp + c * vq;
      }
    }
    if (!rotated) break;
  }

  RVector norms(n);
  for (Eigen::Index j = 0; j < n; ++j) norms(j) = a.col(j).norm();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index x, Eigen::Index y) { return norms(x) > norms(y); });

  SvdResult out{CMatrix(n, n), RVector(n), CMatrix(n, n)};
  CMatrix v_sorted(n, n);
  const double largest = n > 0 ? norms(order[0]) : 0.0;
  std::vector<bool> missing(static_cast<std::size_t>(n), false);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto src = order[static_cast<std::size_t>(j)];
    out.s(j) = norms(src);
    v_sorted.col(j) = v.col(src);
    if (norms(src) > 1e-300 && norms(src) > 1e-15 * largest) {
      out.u.col(j) = a.col(src) / norms(src);
    } else {
      out.u.col(j).setZero();
      missing[static_cast<std::size_t>(j)] = true;
    }
  }
  detail::complete_columns(out.u, missing);
  out.v_dagger = v_sorted.adjoint();
  return out;
}

/// Largest singular value by power iteration on W†W. Falls back to the full
/// SVD when the iteration stagnates or its eigen-residual is too large.
inline double spectral_norm_power(const CMatrix& w, double tolerance = 1e-12,
                                  int max_iterations = 10000) {
  const auto n = w.cols();
  const CMatrix gram = w.adjoint() * w;
  // Deterministic start with weight on every coordinate.
  CVector x(n);
  for (Eigen::Index i = 0; i < n; ++i)
    x(i) = Complex(1.0 + 0.1 * static_cast<double>(i), 0.05 * static_cast<double>(i));
  x.normalize();
  double lambda = 0.0;
  for (int it = 0; it < max_iterations; ++it) {
    CVector y = gram * x;
    const double next = x.dot(y).real();
    const double ny = y.norm();
    if (ny == 0.0) break;
    x = y / ny;
    if (std::abs(next - lambda) <= tolerance * std::max(1.0, std::abs(next))) {
      lambda = next;
      const double residual = (gram * x - lambda * x).norm();
      if (residual <= 1e-10 * std::max(1.0, lambda)) return std::sqrt(std::max(lambda, 0.0));
      break;
    }
    lambda = next;
  }
  return svd_complex(w).s(0);
}

/// Haar-random unitary: QR of a complex Ginibre matrix with R's diagonal
/// phases moved into Q.
inline CMatrix haar_unitary(Eigen::Index n, CounterRng& rng) {
  CMatrix z(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) z(i, j) = rng.complex_normal();
  Eigen::HouseholderQR<CMatrix> qr(z);
  CMatrix q = qr.householderQ();
  const CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < n; ++j) {
    const Complex d = r(j, j);
    const double mag = std::abs(d);
    if (mag > 0.0) q.col(j) *= d / mag;
  }
  return q;
}

inline CMatrix random_complex_matrix(Eigen::Index rows, Eigen::Index cols,
                                     CounterRng& rng) {
  CMatrix z(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) z(i, j) = rng.complex_normal();
  return z;
}

/// Unitary V with V·X = Y for n×r matrices X, Y of equal Gram matrix
/// (X†X = Y†Y). Columns of X need not be independent.
inline CMatrix unitary_extending(const CMatrix& x, const CMatrix& y) {
  if (x.rows() != y.rows() || x.cols() != y.cols())
    throw DimensionError("unitary_extending: shape mismatch");
  const auto n = x.rows();
  // Gram-Schmidt on X, replaying the same coefficients on Y.
  CMatrix qx = CMatrix::Zero(n, n);
  CMatrix qy = CMatrix::Zero(n, n);
  Eigen::Index rank = 0;
  const double scale = std::max(1.0, x.norm());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    CVector vx = x.col(j);
    CVector vy = y.col(j);
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index k = 0; k < rank; ++k) {
        const Complex c = qx.col(k).dot(vx);
        vx -= c * qx.col(k);
        vy -= c * qy.col(k);
      }
    }
    const double norm = vx.norm();
    if (norm <= 1e-10 * scale) continue;
    qx.col(rank) = vx / norm;
    qy.col(rank) = vy / norm;
    ++rank;
  }
  std::vector<bool> missing(static_cast<std::size_t>(n), false);
  for (Eigen::Index j = rank; j < n; ++j) missing[static_cast<std::size_t>(j)] = true;
  detail::complete_columns(qx, missing);
  // Y's images must be orthonormal too; re-orthonormalize to absorb rounding.
  for (Eigen::Index j = 0; j < rank; ++j) {
    for (Eigen::Index k = 0; k < j; ++k) qy.col(j) -= qy.col(k) * qy.col(k).dot(qy.col(j));
    qy.col(j).normalize();
  }
  detail::complete_columns(qy, missing);
  return qy * qx.adjoint();
}

}  // namespace photonic
