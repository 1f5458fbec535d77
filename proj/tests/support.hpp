// Copyright (c) 2026 the delaystab authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0
//
// Shared test utilities: random system generators and the independent
// oracles (partition-supremum variation, exhaustive torus grid) that the
// library implementations are checked against.

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "delaystab/delaystab.hpp"

namespace testsupport {

using namespace delaystab;

inline Mat random_matrix(Rng& rng, int d, double scale) {
  Mat m(d, d);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) m(r, c) = rng.uniform(-scale, scale);
  return m;
}

/// Random system with atoms and piecewise-constant density, d <= 3,
/// <= 4 atoms, <= 3 pieces. Atom delays stay in [0.05, 1] (no jump at 0).
inline MatrixNBV random_system(Rng& rng, int max_dim = 3, int max_atoms = 4,
                               int max_pieces = 3) {
  MatrixNBV m;
  m.dimension = rng.uniform_int(1, max_dim);
  const int atoms = rng.uniform_int(0, max_atoms);
  const double scale = 0.8 / std::max(1, atoms);
  for (int k = 0; k < atoms; ++k) {
    Atom a;
    do {
      a.tau = rng.uniform(0.05, 1.0);
    } while ([&] {
      for (const auto& other : m.atoms)
        if (std::abs(other.tau - a.tau) < 1e-6) return true;
      return false;
    }());
    a.matrix = random_matrix(rng, m.dimension, scale);
    m.atoms.push_back(std::move(a));
  }
  const int pieces = rng.uniform_int(atoms == 0 ? 1 : 0, max_pieces);
  if (pieces > 0) {
    std::vector<double> bp{-1.0};
    for (int j = 1; j < pieces; ++j) bp.push_back(rng.uniform(-0.95, -0.05));
    bp.push_back(0.0);
    std::sort(bp.begin(), bp.end());
    for (std::size_t j = 0; j + 1 < bp.size(); ++j)
      if (bp[j + 1] - bp[j] < 1e-3) bp[j + 1] = bp[j] + 1e-3;
    bp.back() = 0.0;
    m.breakpoints = bp;
    for (int j = 0; j < pieces; ++j)
      m.pieces.push_back(random_matrix(rng, m.dimension, 0.4));
  }
  validate(m);
  return m;
}

/// Random atoms-only system with delays on the lattice of base h, scaled so
/// the variation stays in a tame range.
inline MatrixNBV random_commensurate_system(Rng& rng, double h,
                                            int max_dim = 3,
                                            int max_atoms = 4) {
  MatrixNBV m;
  m.dimension = rng.uniform_int(1, max_dim);
  const int max_mult = static_cast<int>(std::floor(1.0 / h + 1e-9));
  const int atoms = rng.uniform_int(1, std::min(max_atoms, max_mult));
  std::vector<int> mults;
  for (int v = 1; v <= max_mult; ++v) mults.push_back(v);
  for (int k = 0; k < atoms; ++k) {
    const int pick = rng.uniform_int(0, static_cast<int>(mults.size()) - 1);
    Atom a;
    a.tau = mults[static_cast<std::size_t>(pick)] * h;
    mults.erase(mults.begin() + pick);
    a.matrix = random_matrix(rng, m.dimension, 1.0);
    m.atoms.push_back(std::move(a));
  }
  double var = total_variation(m);
  const double target = rng.uniform(0.4, 1.8);
  for (auto& a : m.atoms) a.matrix *= target / var;
  validate(m);
  return m;
}

/// M(t) evaluated from the representation: sum of atoms at or left of t plus
/// the integrated density (M(-1) = 0 by normalization).
inline Mat nbv_value(const MatrixNBV& m, double t) {
  Mat v = Mat::Zero(m.dimension, m.dimension);
  if (t <= -1.0) return v;
  for (const auto& a : m.atoms)
    if (-a.tau <= t) v += a.matrix;
  for (std::size_t j = 0; j < m.pieces.size(); ++j) {
    const double lo = m.breakpoints[j];
    const double hi = std::min(m.breakpoints[j + 1], t);
    if (hi > lo) v += m.pieces[j] * (hi - lo);
  }
  return v;
}

/// Partition-supremum total variation: sup over grids of
/// sum ||M(t_{i+1}) - M(t_i)||, evaluated on a refining grid of `points`
/// uniform nodes plus all atom locations, breakpoints, and tight sandwich
/// points around each atom so jump and density contributions separate.
inline double partition_variation(const MatrixNBV& m, int points) {
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(points) + 6 * m.atoms.size() + 8);
  for (int i = 0; i <= points; ++i)
    grid.push_back(-1.0 + static_cast<double>(i) / points);
  for (double b : m.breakpoints) grid.push_back(b);
  for (const auto& a : m.atoms) {
    grid.push_back(-a.tau);
    grid.push_back(std::max(-1.0, -a.tau - 1e-9));
    grid.push_back(std::min(0.0, -a.tau + 1e-9));
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  while (!grid.empty() && grid.front() < -1.0) grid.erase(grid.begin());
  double sum = 0.0;
  Mat prev = nbv_value(m, grid.front());
  if (grid.front() > -1.0) sum += operator_norm(prev, m.norm);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const Mat cur = nbv_value(m, grid[i]);
    sum += operator_norm(Mat(cur - prev), m.norm);
    prev = cur;
  }
  return sum;
}

/// Exhaustive torus maximum of rho(sum B_k e^{i theta_k}) on a uniform grid
/// with `points` samples per phase. The overall phase is a gauge (rotating
/// every phase rotates the eigenvalues without changing their moduli), and
/// the uniform grid is invariant under that shift, so the first phase is
/// pinned to 0 without losing grid points.
inline double brute_force_torus(const std::vector<Mat>& bins, int points) {
  const std::size_t n = bins.size();
  if (n == 0) return 0.0;
  std::vector<int> idx(n, 0);
  double best = 0.0;
  const std::size_t vary = n - 1;  // phases 1..n-1; phase 0 pinned
  while (true) {
    CMat s = bins[0].cast<Complex>();
    for (std::size_t k = 1; k < n; ++k)
      s += bins[k].cast<Complex>() *
           std::polar(1.0, 2.0 * M_PI * idx[k - 1] / points);
    best = std::max(best, spectral_radius(s));
    std::size_t pos = 0;
    while (pos < vary && ++idx[pos] == points) {
      idx[pos] = 0;
      ++pos;
    }
    if (pos == vary) break;
    if (vary == 0) break;
  }
  return best;
}

/// Largest modulus over the discretized-update residuals of a sampled
/// function x: how well x satisfies x(t) = sum A_k x(t - tau_k) + density
/// quadrature on the grid. Assumes grid-aligned atom delays and breakpoints.
inline double discrete_residual(const MatrixNBV& m,
                                const std::vector<Vec>& samples, int n) {
  double worst = 0.0;
  for (std::size_t i = static_cast<std::size_t>(n); i < samples.size(); ++i) {
    Vec rhs = Vec::Zero(m.dimension);
    for (const auto& a : m.atoms) {
      const int k = static_cast<int>(std::llround(a.tau * n));
      rhs += a.matrix * samples[i - k];
    }
    for (std::size_t j = 0; j < m.pieces.size(); ++j) {
      const int klo = static_cast<int>(std::llround(-m.breakpoints[j + 1] * n));
      const int khi = static_cast<int>(std::llround(-m.breakpoints[j] * n));
      for (int k = klo; k < khi; ++k)
        rhs += m.pieces[j] * (samples[i - k] + samples[i - k - 1]) * (0.5 / n);
    }
    worst = std::max(worst, (samples[i] - rhs).cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace testsupport
