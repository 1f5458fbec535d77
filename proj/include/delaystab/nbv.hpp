// Copyright (c) 2026 the delaystab authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "delaystab/norms.hpp"
#include "delaystab/types.hpp"

namespace delaystab {

/// Positions closer than this are one mathematical point: pushforward
/// arithmetic can split a point mass into two nearby floats.
inline constexpr double kAtomMergeTol = 1e-12;

/// Determinant threshold below which I - A_M counts as singular.
inline constexpr double kWellPosedDetTol = 1e-12;

/// A point mass placed at theta = -tau. tau = 0 encodes the jump of M at 0.
struct Atom {
  double tau = 0.0;
  Mat matrix;
};

/// A matrix-valued function of normalized bounded variation on [-1, 0] with
/// finitely many atoms and a piecewise-constant density: the datum of the
/// functional equation x(t) = integral of dM(theta) x(t+theta).
///
/// atoms[k] carries matrix A_k at theta = -tau_k, taus pairwise distinct in
/// [0, 1]. The density equals pieces[j] on [breakpoints[j], breakpoints[j+1])
/// with breakpoints strictly increasing from -1 to 0; empty vectors mean no
/// density. `norm` selects the induced matrix norm used by every variation
/// based quantity reported for this system.
struct MatrixNBV {
  int dimension = 1;
  OpNorm norm = OpNorm::Op2;
  std::vector<Atom> atoms;
  std::vector<double> breakpoints;
  std::vector<Mat> pieces;

  bool has_density() const { return !pieces.empty(); }
  bool has_zero_atom() const {
    for (const auto& a : atoms)
      if (a.tau == 0.0) return true;
    return false;
  }
  /// Jump of M at 0 (zero matrix when no atom sits there).
  Mat zero_atom() const {
    for (const auto& a : atoms)
      if (a.tau == 0.0) return a.matrix;
    return Mat::Zero(dimension, dimension);
  }
  bool is_zero() const { return atoms.empty() && pieces.empty(); }
};

namespace detail {
inline bool finite(const Mat& m) { return m.allFinite(); }
}  // namespace detail

/// Enforces the type invariants; throws ParseError naming the offending field.
inline void validate(const MatrixNBV& m) {
  if (m.dimension < 1) throw ParseError("dimension: must be a positive integer");
  for (std::size_t k = 0; k < m.atoms.size(); ++k) {
    const auto& a = m.atoms[k];
    const std::string where = "atoms[" + std::to_string(k) + "]";
    if (!(a.tau >= 0.0 && a.tau <= 1.0))
      throw ParseError(where + ".tau: must lie in [0, 1]");
    if (a.matrix.rows() != m.dimension || a.matrix.cols() != m.dimension)
      throw ParseError(where + ".matrix: wrong shape");
    if (!detail::finite(a.matrix))
      throw ParseError(where + ".matrix: non-finite entry");
    for (std::size_t j = 0; j < k; ++j)
      if (std::abs(m.atoms[j].tau - a.tau) == 0.0)
        throw ParseError(where + ".tau: duplicates atoms[" + std::to_string(j) +
                         "].tau");
  }
  if (m.breakpoints.empty() != m.pieces.empty())
    throw ParseError("density: breakpoints and pieces must both be present or both absent");
  if (!m.breakpoints.empty()) {
    if (m.breakpoints.size() != m.pieces.size() + 1)
      throw ParseError("density.breakpoints: need exactly pieces+1 entries");
    if (m.breakpoints.front() != -1.0)
      throw ParseError("density.breakpoints: first entry must be -1");
    if (m.breakpoints.back() != 0.0)
      throw ParseError("density.breakpoints: last entry must be 0");
    for (std::size_t j = 0; j + 1 < m.breakpoints.size(); ++j)
      if (!(m.breakpoints[j] < m.breakpoints[j + 1]))
        throw ParseError("density.breakpoints[" + std::to_string(j + 1) +
                         "]: must be strictly increasing");
    for (std::size_t j = 0; j < m.pieces.size(); ++j) {
      if (m.pieces[j].rows() != m.dimension || m.pieces[j].cols() != m.dimension)
        throw ParseError("density.pieces[" + std::to_string(j) + "]: wrong shape");
      if (!detail::finite(m.pieces[j]))
        throw ParseError("density.pieces[" + std::to_string(j) + "]: non-finite entry");
    }
  }
}

/// Canonical form: atoms sorted by tau, exact-zero atoms dropped, atoms within
/// kAtomMergeTol merged (summing matrices), adjacent equal density pieces
/// merged, and an all-zero density removed entirely.
inline MatrixNBV simplify(MatrixNBV m) {
  std::sort(m.atoms.begin(), m.atoms.end(),
            [](const Atom& a, const Atom& b) { return a.tau < b.tau; });
  std::vector<Atom> merged;
  for (auto& a : m.atoms) {
    if (!merged.empty() && std::abs(merged.back().tau - a.tau) <= kAtomMergeTol)
      merged.back().matrix += a.matrix;
    else
      merged.push_back(std::move(a));
  }
  std::vector<Atom> kept;
  for (auto& a : merged)
    if (!a.matrix.isZero(0.0)) kept.push_back(std::move(a));
  m.atoms = std::move(kept);

  if (!m.pieces.empty()) {
    std::vector<double> bp{m.breakpoints.front()};
    std::vector<Mat> pc;
    for (std::size_t j = 0; j < m.pieces.size(); ++j) {
      if (!pc.empty() && pc.back() == m.pieces[j])
        bp.back() = m.breakpoints[j + 1];
      else {
        pc.push_back(m.pieces[j]);
        bp.push_back(m.breakpoints[j + 1]);
      }
    }
    bool all_zero = true;
    for (const auto& p : pc)
      if (!p.isZero(0.0)) {
        all_zero = false;
        break;
      }
    if (all_zero) {
      m.breakpoints.clear();
      m.pieces.clear();
    } else {
      m.breakpoints = std::move(bp);
      m.pieces = std::move(pc);
    }
  }
  return m;
}

/// Total variation of M on [-1, 0]: sum of atom norms plus the integral of
/// the density norm, exact for this representation.
inline double total_variation(const MatrixNBV& m) {
  double v = 0.0;
  for (const auto& a : m.atoms) v += operator_norm(a.matrix, m.norm);
  for (std::size_t j = 0; j < m.pieces.size(); ++j)
    v += operator_norm(m.pieces[j], m.norm) *
         (m.breakpoints[j + 1] - m.breakpoints[j]);
  return v;
}

/// Total mass M(0) = sum of atoms plus the density integral.
inline Mat total_mass(const MatrixNBV& m) {
  Mat s = Mat::Zero(m.dimension, m.dimension);
  for (const auto& a : m.atoms) s += a.matrix;
  for (std::size_t j = 0; j < m.pieces.size(); ++j)
    s += m.pieces[j] * (m.breakpoints[j + 1] - m.breakpoints[j]);
  return s;
}

/// Merged breakpoint grid of two (possibly empty) density grids over [-1, 0].
inline std::vector<double> merge_breakpoints(const std::vector<double>& a,
                                             const std::vector<double>& b) {
  std::vector<double> out;
  out.reserve(a.size() + b.size() + 2);
  out.push_back(-1.0);
  for (double x : a) out.push_back(x);
  for (double x : b) out.push_back(x);
  out.push_back(0.0);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end(),
                        [](double x, double y) { return y - x <= 1e-15; }),
            out.end());
  out.front() = -1.0;
  out.back() = 0.0;
  return out;
}

/// Density value of M at a point theta in [-1, 0).
inline Mat density_at(const MatrixNBV& m, double theta) {
  if (m.pieces.empty()) return Mat::Zero(m.dimension, m.dimension);
  // pieces[j] lives on [breakpoints[j], breakpoints[j+1]).
  auto it = std::upper_bound(m.breakpoints.begin(), m.breakpoints.end(), theta);
  std::size_t j = static_cast<std::size_t>(
      std::max<std::ptrdiff_t>(0, it - m.breakpoints.begin() - 1));
  if (j >= m.pieces.size()) j = m.pieces.size() - 1;
  return m.pieces[j];
}

/// The NBV function M - N: matching-tau atoms subtracted (exact zeros
/// dropped), densities subtracted on the merged grid.
inline MatrixNBV diff(const MatrixNBV& m, const MatrixNBV& n) {
  if (m.dimension != n.dimension)
    throw Error("diff: dimension mismatch (" + std::to_string(m.dimension) +
                " vs " + std::to_string(n.dimension) + ")");
  MatrixNBV out;
  out.dimension = m.dimension;
  out.norm = m.norm;
  out.atoms = m.atoms;
  for (const auto& b : n.atoms) {
    Atom neg{b.tau, Mat(-b.matrix)};
    out.atoms.push_back(std::move(neg));
  }
  if (m.has_density() || n.has_density()) {
    out.breakpoints = merge_breakpoints(m.breakpoints, n.breakpoints);
    out.pieces.reserve(out.breakpoints.size() - 1);
    for (std::size_t j = 0; j + 1 < out.breakpoints.size(); ++j) {
      const double mid = 0.5 * (out.breakpoints[j] + out.breakpoints[j + 1]);
      out.pieces.push_back(density_at(m, mid) - density_at(n, mid));
    }
  }
  return simplify(std::move(out));
}

/// Scalar multiple c*M.
inline MatrixNBV scale(MatrixNBV m, double c) {
  for (auto& a : m.atoms) a.matrix *= c;
  for (auto& p : m.pieces) p *= c;
  return simplify(std::move(m));
}

struct WellPosed {
  bool ok = true;
  double det = 1.0;  // det(I - A_M)
};

/// Well-posedness test: det(I - A_M) must stay away from zero, A_M the jump
/// of M at 0.
inline WellPosed check_wellposed(const MatrixNBV& m) {
  const Mat a = m.zero_atom();
  const Mat i = Mat::Identity(m.dimension, m.dimension);
  const double det = (i - a).determinant();
  return WellPosed{std::abs(det) > kWellPosedDetTol, det};
}

/// Equivalent system with the jump at 0 removed: every matrix is
/// premultiplied by (I - A_M)^{-1}. Trajectories and characteristic roots
/// coincide with the original system's.
inline MatrixNBV reduce_zero_atom(const MatrixNBV& m) {
  if (!m.has_zero_atom()) return m;
  const WellPosed wp = check_wellposed(m);
  if (!wp.ok)
    throw Error("reduce_zero_atom: det(I - A_M) = " + std::to_string(wp.det) +
                " is numerically singular");
  const Mat i = Mat::Identity(m.dimension, m.dimension);
  const Mat f = (i - m.zero_atom()).inverse();
  MatrixNBV out = m;
  out.atoms.clear();
  for (const auto& a : m.atoms)
    if (a.tau != 0.0) out.atoms.push_back(Atom{a.tau, Mat(f * a.matrix)});
  for (auto& p : out.pieces) p = f * p;
  return simplify(std::move(out));
}

/// Near-equality as measures: the variation distance is below tol (relative
/// to the larger variation). Robust to different but equivalent piece splits.
inline bool approx_equal(const MatrixNBV& a, const MatrixNBV& b, double tol) {
  if (a.dimension != b.dimension) return false;
  const double scale =
      1.0 + std::max(total_variation(a), total_variation(b));
  return total_variation(diff(a, b)) <= tol * scale;
}

}  // namespace delaystab
