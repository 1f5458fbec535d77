// Copyright (c) 2026 the delaystab authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace delaystab {

using Mat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;
using Complex = std::complex<double>;

/// Induced matrix norm selector. Op2 (largest singular value) is the default;
/// all total-variation based bounds are reported relative to this choice.
enum class OpNorm { Op2, Op1, OpInf };

inline const char* op_norm_name(OpNorm n) {
  switch (n) {
    case OpNorm::Op1: return "op1";
    case OpNorm::OpInf: return "opinf";
    default: return "op2";
  }
}

/// Generic runtime failure (bad preconditions, numerical non-convergence).
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Input rejection: malformed files or type-invariant violations. Carries a
/// field/line diagnostic in what().
struct ParseError : Error {
  using Error::Error;
};

inline OpNorm op_norm_from_name(const std::string& s) {
  if (s == "op2") return OpNorm::Op2;
  if (s == "op1") return OpNorm::Op1;
  if (s == "opinf") return OpNorm::OpInf;
  throw ParseError("unknown norm \"" + s + "\" (expected op2, op1, or opinf)");
}

}  // namespace delaystab
