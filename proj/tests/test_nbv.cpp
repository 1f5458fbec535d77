// Copyright (c) 2026 the delaystab authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch.hpp>

#include "support.hpp"

using namespace delaystab;
using testsupport::partition_variation;
using testsupport::random_matrix;
using testsupport::random_system;

namespace {

MatrixNBV scalar_atom(double value, double tau) {
  MatrixNBV m;
  m.dimension = 1;
  m.atoms.push_back({tau, Mat::Constant(1, 1, value)});
  return m;
}

}  // namespace

TEST_CASE("operator norms on a fixed matrix") {
  Mat a(2, 2);
  a << 1, 2, 3, 4;
  CHECK(operator_norm(a, OpNorm::Op1) == Approx(6.0));
  CHECK(operator_norm(a, OpNorm::OpInf) == Approx(7.0));
  CHECK(operator_norm(a, OpNorm::Op2) ==
        Approx(std::sqrt(15.0 + std::sqrt(221.0))));
}

TEST_CASE("total variation of a single atom is the matrix norm") {
  MatrixNBV m;
  m.dimension = 2;
  Mat a(2, 2);
  a << 0.1, -0.2, 0.3, 0.05;
  m.atoms.push_back({0.3, a});
  CHECK(total_variation(m) == Approx(operator_norm(a, OpNorm::Op2)));
}

TEST_CASE("same matrix at two delays sits at distance 2||A||") {
  Rng rng(42);
  for (int trial = 0; trial < 10; ++trial) {
    const int d = rng.uniform_int(1, 3);
    const Mat a = random_matrix(rng, d, 1.0);
    const double t1 = rng.uniform(0.05, 0.5);
    const double t2 = rng.uniform(0.55, 1.0);
    MatrixNBV m, n;
    m.dimension = n.dimension = d;
    m.atoms.push_back({t1, a});
    n.atoms.push_back({t2, a});
    const double var = total_variation(diff(m, n));
    CHECK(std::abs(var - 2.0 * operator_norm(a, OpNorm::Op2)) <= 1e-14);
  }
}

TEST_CASE("constant scalar density integrates to its absolute value") {
  MatrixNBV m;
  m.dimension = 1;
  m.breakpoints = {-1.0, 0.0};
  m.pieces = {Mat::Constant(1, 1, -0.7)};
  CHECK(total_variation(m) == Approx(0.7));
}

TEST_CASE("diff basics") {
  Rng rng(7);
  const Mat a = random_matrix(rng, 2, 1.0);
  const Mat b = random_matrix(rng, 2, 1.0);
  MatrixNBV m, n;
  m.dimension = n.dimension = 2;
  m.atoms.push_back({0.3, a});

  SECTION("M - M is the zero measure") {
    const MatrixNBV z = diff(m, m);
    CHECK(z.is_zero());
    CHECK(total_variation(z) == 0.0);
  }
  SECTION("matching taus subtract") {
    n.atoms.push_back({0.3, b});
    const MatrixNBV z = diff(m, n);
    REQUIRE(z.atoms.size() == 1);
    CHECK((z.atoms[0].matrix - (a - b)).cwiseAbs().maxCoeff() == 0.0);
  }
  SECTION("distinct taus keep both atoms") {
    n.atoms.push_back({0.5, a});
    const MatrixNBV z = diff(m, n);
    REQUIRE(z.atoms.size() == 2);
    CHECK(total_variation(z) ==
          Approx(2.0 * operator_norm(a, OpNorm::Op2)));
  }
  SECTION("dimension mismatch is an error") {
    MatrixNBV other;
    other.dimension = 3;
    CHECK_THROWS_AS(diff(m, other), Error);
  }
}

TEST_CASE("well-posedness determinant") {
  MatrixNBV m;
  m.dimension = 2;
  SECTION("no atom at zero") {
    const WellPosed wp = check_wellposed(m);
    CHECK(wp.ok);
    CHECK(wp.det == Approx(1.0));
  }
  SECTION("identity atom at zero is singular") {
    m.atoms.push_back({0.0, Mat::Identity(2, 2)});
    const WellPosed wp = check_wellposed(m);
    CHECK_FALSE(wp.ok);
    CHECK(wp.det == Approx(0.0).margin(1e-300));
  }
  SECTION("half identity gives det one quarter") {
    m.atoms.push_back({0.0, Mat(0.5 * Mat::Identity(2, 2))});
    const WellPosed wp = check_wellposed(m);
    CHECK(wp.ok);
    CHECK(wp.det == Approx(0.25));
  }
}

TEST_CASE("total mass") {
  Rng rng(3);
  const Mat a = random_matrix(rng, 2, 1.0);
  MatrixNBV m;
  m.dimension = 2;
  m.atoms.push_back({0.4, a});
  CHECK((total_mass(m) - a).cwiseAbs().maxCoeff() == 0.0);

  MatrixNBV d;
  d.dimension = 2;
  d.breakpoints = {-1.0, 0.0};
  d.pieces = {a};
  CHECK((total_mass(d) - a).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("variation is nonnegative and vanishes only for the zero measure") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const MatrixNBV m = random_system(rng);
    const double v = total_variation(m);
    CHECK(v >= 0.0);
    if (simplify(m).is_zero())
      CHECK(v == 0.0);
    else
      CHECK(v > 0.0);
  }
}

TEST_CASE("triangle inequality for diff") {
  Rng rng(13);
  for (int trial = 0; trial < 25; ++trial) {
    const MatrixNBV m = random_system(rng, 3, 3, 2);
    MatrixNBV n;
    do {
      n = random_system(rng, 3, 3, 2);
    } while (n.dimension != m.dimension);
    const double lhs = total_variation(diff(m, n));
    CHECK(lhs <= total_variation(m) + total_variation(n) + 1e-12);
  }
}

TEST_CASE("closed-form variation matches the partition supremum") {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const MatrixNBV m = random_system(rng);
    const double closed = total_variation(m);
    const double coarse = partition_variation(m, 1 << 8);
    const double fine = partition_variation(m, 1 << 12);
    CHECK(fine >= coarse - 1e-12);  // refining grids only increase the sum
    CHECK(std::abs(closed - fine) <= 1e-6);
  }
}

TEST_CASE("type invariants are enforced") {
  MatrixNBV m;
  m.dimension = 1;
  SECTION("duplicate taus") {
    m.atoms.push_back({0.5, Mat::Constant(1, 1, 1.0)});
    m.atoms.push_back({0.5, Mat::Constant(1, 1, 2.0)});
    CHECK_THROWS_AS(validate(m), ParseError);
  }
  SECTION("tau outside [0,1]") {
    m.atoms.push_back({1.5, Mat::Constant(1, 1, 1.0)});
    CHECK_THROWS_AS(validate(m), ParseError);
  }
  SECTION("non-finite entry") {
    m.atoms.push_back({0.5, Mat::Constant(1, 1, std::nan(""))});
    CHECK_THROWS_AS(validate(m), ParseError);
  }
  SECTION("breakpoints must start at -1") {
    m.breakpoints = {-0.5, 0.0};
    m.pieces = {Mat::Zero(1, 1)};
    CHECK_THROWS_AS(validate(m), ParseError);
  }
  SECTION("breakpoints strictly increasing") {
    m.breakpoints = {-1.0, -0.5, -0.5, 0.0};
    m.pieces = {Mat::Zero(1, 1), Mat::Zero(1, 1), Mat::Zero(1, 1)};
    CHECK_THROWS_AS(validate(m), ParseError);
  }
  SECTION("piece count must match") {
    m.breakpoints = {-1.0, 0.0};
    m.pieces = {Mat::Zero(1, 1), Mat::Zero(1, 1)};
    CHECK_THROWS_AS(validate(m), ParseError);
  }
}

TEST_CASE("reduce_zero_atom keeps the characteristic roots") {
  MatrixNBV m = scalar_atom(0.5, 1.0);
  m.atoms.push_back({0.0, Mat::Constant(1, 1, 0.5)});
  const MatrixNBV r = reduce_zero_atom(m);
  CHECK_FALSE(r.has_zero_atom());
  // Delta_r(s) = Delta_m(s) / det(I - A_M): same zeros.
  const Complex s(0.2, 1.3);
  const Complex a = eval_delta(m, s).delta;
  const Complex b = eval_delta(r, s).delta;
  CHECK(std::abs(a - b * 0.5) <= 1e-12);
}

TEST_CASE("simplify merges nearby atoms and drops zero pieces") {
  MatrixNBV m;
  m.dimension = 1;
  m.atoms.push_back({0.5, Mat::Constant(1, 1, 1.0)});
  m.atoms.push_back({0.5 + 5e-13, Mat::Constant(1, 1, -1.0)});
  m.breakpoints = {-1.0, -0.5, 0.0};
  m.pieces = {Mat::Zero(1, 1), Mat::Zero(1, 1)};
  const MatrixNBV s = simplify(m);
  CHECK(s.is_zero());
}
