// Copyright (c) 2026 the delaystab authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <complex>

#include "delaystab/nbv.hpp"
#include "delaystab/perturbation.hpp"
#include "delaystab/types.hpp"

namespace delaystab {

/// Below this |s| the exponential-difference quotients for density segments
/// are evaluated by series; the direct formula cancels catastrophically.
inline constexpr double kSeriesSwitch = 1e-8;

namespace detail {

/// I_j(s) = integral of e^{s theta} over [a, b].
inline Complex exp_segment(Complex s, double a, double b) {
  if (std::abs(s) < kSeriesSwitch)
    return Complex(b - a) + s * (0.5 * (b * b - a * a));
  return (std::exp(s * b) - std::exp(s * a)) / s;
}

/// d/ds I_j(s) = integral of theta e^{s theta} over [a, b].
inline Complex exp_segment_prime(Complex s, double a, double b) {
  if (std::abs(s) < kSeriesSwitch)
    return Complex(0.5 * (b * b - a * a)) + s * ((b * b * b - a * a * a) / 3.0);
  return (b * std::exp(s * b) - a * std::exp(s * a)) / s -
         exp_segment(s, a, b) / s;
}

}  // namespace detail

/// L(s) = integral of e^{s theta} dM(theta): atoms contribute A_k e^{-s tau_k},
/// each density piece C_j its exact segment integral.
inline CMat eval_L(const MatrixNBV& m, Complex s) {
  CMat l = CMat::Zero(m.dimension, m.dimension);
  for (const auto& a : m.atoms)
    l += a.matrix.cast<Complex>() * std::exp(-s * a.tau);
  for (std::size_t j = 0; j < m.pieces.size(); ++j)
    l += m.pieces[j].cast<Complex>() *
         detail::exp_segment(s, m.breakpoints[j], m.breakpoints[j + 1]);
  return l;
}

/// dL/ds.
inline CMat eval_L_prime(const MatrixNBV& m, Complex s) {
  CMat l = CMat::Zero(m.dimension, m.dimension);
  for (const auto& a : m.atoms)
    l += a.matrix.cast<Complex>() * (-a.tau * std::exp(-s * a.tau));
  for (std::size_t j = 0; j < m.pieces.size(); ++j)
    l += m.pieces[j].cast<Complex>() *
         detail::exp_segment_prime(s, m.breakpoints[j], m.breakpoints[j + 1]);
  return l;
}

/// One evaluation of the characteristic function and its s-derivative.
struct CharEval {
  Complex s;
  CMat L;
  Complex delta;        // det(I - L(s))
  Complex delta_prime;  // d/ds det(I - L(s))
};

inline CharEval eval_delta(const MatrixNBV& m, Complex s) {
  CharEval out;
  out.s = s;
  out.L = eval_L(m, s);
  const CMat a = CMat::Identity(m.dimension, m.dimension) - out.L;
  const CMat ap = -eval_L_prime(m, s);

  Eigen::FullPivLU<CMat> lu(a);
  out.delta = lu.determinant();

  if (lu.isInvertible() && std::abs(out.delta) > 1e-200 &&
      lu.rcond() > 1e-10) {
    out.delta_prime = out.delta * (lu.solve(ap)).trace();
  } else {
    // Cofactor form: d/ds det A = sum over columns of det(A with column i
    // replaced by A' column i). Stays finite when A is singular.
    Complex acc(0.0, 0.0);
    for (Eigen::Index i = 0; i < a.cols(); ++i) {
      CMat t = a;
      t.col(i) = ap.col(i);
      acc += t.determinant();
    }
    out.delta_prime = acc;
  }
  return out;
}

/// Characteristic value of the perturbed system: by the pushforward identity
/// this is eval_delta of pushforward(M, phi) — implemented as exactly that
/// composition, no second code path.
inline Complex eval_delta_perturbed(const MatrixNBV& m, const Perturbation& p,
                                    Complex s) {
  return eval_delta(pushforward(m, p), s).delta;
}

}  // namespace delaystab
