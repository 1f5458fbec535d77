// Copyright (c) 2026 the delaystab authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch.hpp>

#include "support.hpp"

using namespace delaystab;
using testsupport::random_system;

TEST_CASE("L(0) is the total mass") {
  Rng rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const MatrixNBV m = random_system(rng);
    const CMat l = eval_L(m, Complex(0.0, 0.0));
    const Mat mass = total_mass(m);
    CHECK((l - mass.cast<Complex>()).cwiseAbs().maxCoeff() <= 1e-14);
  }
}

TEST_CASE("single scalar atom evaluates to a e^{-s}") {
  MatrixNBV m;
  m.dimension = 1;
  m.atoms.push_back({1.0, Mat::Constant(1, 1, 0.3)});
  for (double s : {-1.0, 0.0, 0.7, 3.0})
    CHECK(eval_L(m, Complex(s, 0)).cwiseAbs()(0, 0) ==
          Approx(0.3 * std::exp(-s)));
}

TEST_CASE("unit density at s = 1 integrates to 1 - 1/e") {
  MatrixNBV m;
  m.dimension = 1;
  m.breakpoints = {-1.0, 0.0};
  m.pieces = {Mat::Constant(1, 1, 1.0)};
  CHECK(eval_L(m, Complex(1.0, 0.0))(0, 0).real() ==
        Approx(1.0 - std::exp(-1.0)).epsilon(1e-12));
  CHECK(eval_L(m, Complex(1.0, 0.0))(0, 0).imag() == Approx(0.0).margin(1e-15));
}

TEST_CASE("series branch joins the direct formula smoothly") {
  MatrixNBV m;
  m.dimension = 1;
  m.breakpoints = {-1.0, -0.3, 0.0};
  m.pieces = {Mat::Constant(1, 1, 0.4), Mat::Constant(1, 1, -0.2)};
  const Complex just_below(5e-9, 5e-9);
  const Complex just_above(2e-8, 2e-8);
  const Complex at_zero(0.0, 0.0);
  const double reference = total_mass(m)(0, 0);
  CHECK(std::abs(eval_L(m, at_zero)(0, 0) - reference) <= 1e-14);
  CHECK(std::abs(eval_L(m, just_below)(0, 0) - eval_L(m, just_above)(0, 0)) <=
        1e-7);
}

TEST_CASE("scalar characteristic root") {
  MatrixNBV m;
  m.dimension = 1;
  m.atoms.push_back({1.0, Mat::Constant(1, 1, 0.5)});
  const CharEval e = eval_delta(m, Complex(-std::log(2.0), 0.0));
  CHECK(std::abs(e.delta) <= 1e-14);
}

TEST_CASE("delta approaches det(I - A_M) far right") {
  Rng rng(31);
  SECTION("atoms away from zero: within 1e-10 already at s = 50") {
    for (int trial = 0; trial < 10; ++trial) {
      MatrixNBV m;
      m.dimension = rng.uniform_int(1, 3);
      const int atoms = rng.uniform_int(1, 4);
      for (int k = 0; k < atoms; ++k)
        m.atoms.push_back({rng.uniform(0.55, 1.0),
                           testsupport::random_matrix(rng, m.dimension, 1.0)});
      validate(m);
      if (total_variation(m) > 10.0) continue;
      const CharEval e = eval_delta(m, Complex(50.0, 0.0));
      CHECK(std::abs(e.delta - Complex(1.0, 0.0)) <= 1e-10);
    }
  }
  SECTION("general systems: monotone approach to the limit") {
    for (int trial = 0; trial < 10; ++trial) {
      const MatrixNBV m = random_system(rng);
      if (simplify(m).is_zero()) continue;
      const double at50 = std::abs(eval_delta(m, Complex(50.0, 0.0)).delta -
                                   Complex(1.0, 0.0));
      const double at500 = std::abs(eval_delta(m, Complex(500.0, 0.0)).delta -
                                    Complex(1.0, 0.0));
      const double at5000 = std::abs(
          eval_delta(m, Complex(5000.0, 0.0)).delta - Complex(1.0, 0.0));
      CHECK(at500 <= at50 + 1e-14);
      CHECK(at5000 <= 1e-3);
    }
  }
}

TEST_CASE("derivative matches central differences") {
  Rng rng(37);
  const double h = 1e-5;
  for (int trial = 0; trial < 20; ++trial) {
    const MatrixNBV m = random_system(rng);
    const Complex s(rng.uniform(-2.0, 2.0), rng.uniform(-6.0, 6.0));
    const CharEval e = eval_delta(m, s);
    const Complex fd =
        (eval_delta(m, s + h).delta - eval_delta(m, s - h).delta) / (2.0 * h);
    CHECK(std::abs(e.delta_prime - fd) <=
          1e-6 * (1.0 + std::abs(e.delta_prime)));
  }
}

TEST_CASE("conjugate symmetry for real data") {
  Rng rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    const MatrixNBV m = random_system(rng);
    const Complex s(rng.uniform(-2.0, 2.0), rng.uniform(0.1, 8.0));
    const Complex a = eval_delta(m, s).delta;
    const Complex b = eval_delta(m, std::conj(s)).delta;
    CHECK(std::abs(b - std::conj(a)) <= 1e-12 * (1.0 + std::abs(a)));
  }
}

TEST_CASE("||L(s)|| is bounded by the variation on the right half-plane") {
  Rng rng(43);
  for (int trial = 0; trial < 20; ++trial) {
    const MatrixNBV m = random_system(rng);
    const double var = total_variation(m);
    const Complex s(rng.uniform(0.0, 4.0), rng.uniform(-20.0, 20.0));
    CHECK(operator_norm(eval_L(m, s), m.norm) <= var + 1e-10);
  }
}

TEST_CASE("delta varies Lipschitz-like in the variation distance") {
  Rng rng(47);
  const MatrixNBV m = random_system(rng);
  // Shrinking perturbations of the matrices: Var(M - N_k) = Var(M) / 2^k.
  double first_ratio = -1.0;
  for (int k = 1; k <= 6; ++k) {
    const double c = 1.0 - std::pow(0.5, k);
    const MatrixNBV n = scale(m, c);
    const double dist = total_variation(diff(m, n));
    REQUIRE(dist > 0.0);
    double worst = 0.0;
    for (int i = 0; i < 12; ++i) {
      const Complex s(-0.5, -12.0 + 2.0 * i);
      worst = std::max(worst, std::abs(eval_delta(m, s).delta -
                                       eval_delta(n, s).delta));
    }
    const double ratio = worst / dist;
    if (first_ratio < 0.0)
      first_ratio = ratio;
    else
      CHECK(ratio <= 3.0 * first_ratio + 1.0);
  }
}

TEST_CASE("perturbed delta delegates to the pushforward") {
  MatrixNBV m;
  m.dimension = 1;
  m.atoms.push_back({0.5, Mat::Constant(1, 1, 0.8)});

  SECTION("identity") {
    const Complex s(0.3, 1.0);
    CHECK(std::abs(eval_delta_perturbed(m, Perturbation::identity(), s) -
                   eval_delta(m, s).delta) <= 1e-15);
  }
  SECTION("transported atom formula") {
    Perturbation p;
    p.kind = Perturbation::Kind::PiecewiseLinear;
    p.knots = {{-1.0, -1.0}, {-0.5, -0.4}, {0.0, 0.0}};
    const Complex s(0.2, -0.7);
    const Complex expected = 1.0 - 0.8 * std::exp(-s * 0.4);
    CHECK(std::abs(eval_delta_perturbed(m, p, s) - expected) <= 1e-13);
  }
  SECTION("binning conserves delta at the origin") {
    MatrixNBV d;
    d.dimension = 1;
    d.breakpoints = {-1.0, 0.0};
    d.pieces = {Mat::Constant(1, 1, 1.0)};
    Perturbation p;
    p.kind = Perturbation::Kind::Binning;
    p.bins = {{-1.0, -0.5, -0.75}, {-0.5, 0.0, -0.25}};
    CHECK(std::abs(eval_delta(d, 0.0).delta) <= 1e-15);
    CHECK(std::abs(eval_delta_perturbed(d, p, 0.0)) <= 1e-15);
  }
}
