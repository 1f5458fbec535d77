// Copyright (c) 2026 the delaystab authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>

#include "delaystab/types.hpp"

namespace delaystab {

/// All roots of c[0] + c[1] z + ... + c[n] z^n via the companion matrix.
/// Leading coefficients below tol * max|c| are trimmed first.
inline std::vector<Complex> poly_roots(std::vector<Complex> c,
                                       double trim_tol = 1e-12) {
  double scale = 0.0;
  for (const auto& x : c) scale = std::max(scale, std::abs(x));
  if (scale == 0.0) return {};
  while (c.size() > 1 && std::abs(c.back()) <= trim_tol * scale) c.pop_back();
  const std::size_t n = c.size() - 1;
  if (n == 0) return {};
  if (n == 1) return {-c[0] / c[1]};

  CMat comp = CMat::Zero(n, n);
  for (std::size_t i = 0; i + 1 < n; ++i) comp(i + 1, i) = Complex(1.0, 0.0);
  for (std::size_t i = 0; i < n; ++i) comp(i, n - 1) = -c[i] / c[n];
  Eigen::ComplexEigenSolver<CMat> es(comp, /*computeEigenvectors=*/false);
  std::vector<Complex> roots(n);
  for (std::size_t i = 0; i < n; ++i) roots[i] = es.eigenvalues()(i);
  return roots;
}

}  // namespace delaystab
