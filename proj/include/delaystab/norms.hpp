// Copyright (c) 2026 the delaystab authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "delaystab/types.hpp"

namespace delaystab {

/// Induced matrix norm of a real matrix. Op1 = max column sum,
/// OpInf = max row sum, Op2 = largest singular value.
inline double operator_norm(const Mat& a, OpNorm n) {
  switch (n) {
    case OpNorm::Op1: {
      double best = 0.0;
      for (Eigen::Index j = 0; j < a.cols(); ++j)
        best = std::max(best, a.col(j).cwiseAbs().sum());
      return best;
    }
    case OpNorm::OpInf: {
      double best = 0.0;
      for (Eigen::Index i = 0; i < a.rows(); ++i)
        best = std::max(best, a.row(i).cwiseAbs().sum());
      return best;
    }
    default: {
      if (a.size() == 0) return 0.0;
      if (a.rows() == 1 && a.cols() == 1) return std::abs(a(0, 0));
      Eigen::JacobiSVD<Mat> svd(a);
      return svd.singularValues()(0);
    }
  }
}

/// Induced norm of a complex matrix with moduli in place of absolute values.
/// For op1/op2/opinf this agrees with the complexification of the real norm.
inline double operator_norm(const CMat& a, OpNorm n) {
  switch (n) {
    case OpNorm::Op1: {
      double best = 0.0;
      for (Eigen::Index j = 0; j < a.cols(); ++j)
        best = std::max(best, a.col(j).cwiseAbs().sum());
      return best;
    }
    case OpNorm::OpInf: {
      double best = 0.0;
      for (Eigen::Index i = 0; i < a.rows(); ++i)
        best = std::max(best, a.row(i).cwiseAbs().sum());
      return best;
    }
    default: {
      if (a.size() == 0) return 0.0;
      if (a.rows() == 1 && a.cols() == 1) return std::abs(a(0, 0));
      Eigen::JacobiSVD<CMat> svd(a);
      return svd.singularValues()(0);
    }
  }
}

inline double vector_norm(const Vec& v, OpNorm n) {
  switch (n) {
    case OpNorm::Op1: return v.cwiseAbs().sum();
    case OpNorm::OpInf: return v.cwiseAbs().maxCoeff();
    default: return v.norm();
  }
}

/// All eigenvalues of a complex matrix. Closed forms for d <= 2, QR otherwise.
inline CVec eigenvalues(const CMat& a) {
  const Eigen::Index d = a.rows();
  if (d == 0) return CVec(0);
  if (d == 1) {
    CVec e(1);
    e(0) = a(0, 0);
    return e;
  }
  if (d == 2) {
    const Complex tr = a(0, 0) + a(1, 1);
    const Complex det = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
    const Complex disc = std::sqrt(tr * tr - 4.0 * det);
    CVec e(2);
    e(0) = 0.5 * (tr + disc);
    e(1) = 0.5 * (tr - disc);
    return e;
  }
  Eigen::ComplexEigenSolver<CMat> es(a, /*computeEigenvectors=*/false);
  return es.eigenvalues();
}

/// Spectral radius: max modulus over eigenvalues.
inline double spectral_radius(const CMat& a) {
  const CVec e = eigenvalues(a);
  double r = 0.0;
  for (Eigen::Index i = 0; i < e.size(); ++i) r = std::max(r, std::abs(e(i)));
  return r;
}

/// Dominant eigentriple (eigenvalue of max modulus, right and left
/// eigenvectors) plus the modulus gap to the runner-up. Used by the
/// eigenvalue-perturbation gradient in the torus optimizer.
struct DominantEig {
  Complex lambda;
  CVec right;
  CVec left;
  double gap;  // |lambda| - |second largest|
};

inline DominantEig dominant_eig(const CMat& a) {
  Eigen::ComplexEigenSolver<CMat> es(a, /*computeEigenvectors=*/true);
  const CVec& evals = es.eigenvalues();
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < evals.size(); ++i)
    if (std::abs(evals(i)) > std::abs(evals(best))) best = i;
  double second = 0.0;
  for (Eigen::Index i = 0; i < evals.size(); ++i)
    if (i != best) second = std::max(second, std::abs(evals(i)));

  DominantEig out;
  out.lambda = evals(best);
  out.right = es.eigenvectors().col(best);
  out.gap = evals.size() > 1 ? std::abs(evals(best)) - second
                             : std::numeric_limits<double>::infinity();
  // Left eigenvector: right eigenvector of the adjoint for conj(lambda).
  Eigen::ComplexEigenSolver<CMat> esa(CMat(a.adjoint()), true);
  const CVec& aevals = esa.eigenvalues();
  Eigen::Index match = 0;
  double bestdist = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < aevals.size(); ++i) {
    const double dist = std::abs(aevals(i) - std::conj(out.lambda));
    if (dist < bestdist) {
      bestdist = dist;
      match = i;
    }
  }
  out.left = esa.eigenvectors().col(match);
  return out;
}

}  // namespace delaystab
