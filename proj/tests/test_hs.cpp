// Copyright (c) 2026 the delaystab authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch.hpp>

#include "support.hpp"

using namespace delaystab;
using testsupport::brute_force_torus;
using testsupport::random_matrix;
using testsupport::random_system;

namespace {

MatrixNBV scalar_atoms(std::initializer_list<std::pair<double, double>> spec) {
  MatrixNBV m;
  m.dimension = 1;
  for (const auto& [value, tau] : spec)
    m.atoms.push_back({tau, Mat::Constant(1, 1, value)});
  return m;
}

std::vector<Mat> bin_matrices(const HsEstimate& est) {
  std::vector<Mat> out;
  for (const auto& b : est.witness.bins) out.push_back(b.matrix);
  return out;
}

}  // namespace

TEST_CASE("rho_of_phases closed forms") {
  SECTION("zero phases give the spectral radius of the total mass") {
    Rng rng(3);
    const MatrixNBV m = random_system(rng, 2, 3, 1);
    const HsEstimate est = estimate_rho_hs(m, -1, 2, 1);
    PhaseAssignment pa = est.witness;
    std::fill(pa.phases.begin(), pa.phases.end(), 0.0);
    CHECK(rho_of_phases(pa, m.dimension) ==
          Approx(spectral_radius(total_mass(m).cast<Complex>())).margin(1e-12));
  }
  SECTION("scalar opposite signs align to |a| + |b|") {
    PhaseAssignment pa;
    pa.bins.push_back({0, -0.3, -0.3, Mat::Constant(1, 1, 0.4)});
    pa.bins.push_back({1, -0.7, -0.7, Mat::Constant(1, 1, -0.3)});
    pa.phases = {0.0, M_PI};
    CHECK(rho_of_phases(pa, 1) == Approx(0.7).margin(1e-14));
  }
  SECTION("diagonal pair at zero phases") {
    PhaseAssignment pa;
    Mat b1 = Mat::Zero(2, 2), b2 = Mat::Zero(2, 2);
    b1(0, 0) = 0.4;
    b1(1, 1) = 0.1;
    b2(0, 0) = 0.3;
    b2(1, 1) = 0.2;
    pa.bins.push_back({0, -0.5, -0.5, b1});
    pa.bins.push_back({1, -1.0, -1.0, b2});
    pa.phases = {0.0, 0.0};
    CHECK(rho_of_phases(pa, 2) == Approx(0.7).margin(1e-14));
  }
}

TEST_CASE("scalar estimates equal the total variation exactly") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    MatrixNBV m = random_system(rng, 1, 4, 3);
    const HsEstimate est = estimate_rho_hs(m, -1, 4, trial);
    const double var = total_variation(m);
    CHECK(std::abs(est.lower - var) <= 1e-12);
    CHECK(std::abs(est.upper - var) <= 1e-12);
    // The sign-aligned witness really attains it.
    if (!simplify(m).is_zero())
      CHECK(rho_of_phases(est.witness, 1) == Approx(var).margin(1e-9));
  }
}

TEST_CASE("diagonal atoms decouple into scalar alignments") {
  MatrixNBV m;
  m.dimension = 2;
  Mat a = Mat::Zero(2, 2), b = Mat::Zero(2, 2);
  a(0, 0) = 0.4;
  a(1, 1) = -0.15;
  b(0, 0) = 0.3;
  b(1, 1) = 0.25;
  m.atoms.push_back({0.4, a});
  m.atoms.push_back({0.9, b});
  const HsEstimate est = estimate_rho_hs(m, -1, 12, 17);
  const double expected = std::max(0.4 + 0.3, 0.15 + 0.25);
  CHECK(est.lower == Approx(expected).margin(1e-8));
  const double brute = brute_force_torus(bin_matrices(est), 256);
  CHECK(est.lower >= brute - 1e-6);
}

TEST_CASE("zero measure has radius zero") {
  MatrixNBV m;
  m.dimension = 3;
  const HsEstimate est = estimate_rho_hs(m);
  CHECK(est.lower == 0.0);
  CHECK(est.upper == 0.0);
}

TEST_CASE("estimate is sandwiched by the variation") {
  Rng rng(29);
  for (int trial = 0; trial < 12; ++trial) {
    const MatrixNBV m = random_system(rng);
    const HsEstimate est = estimate_rho_hs(m, -1, 6, trial);
    CHECK(est.lower <= est.upper + 1e-12);
    CHECK(est.upper == Approx(total_variation(m)).margin(1e-12));
    // The bins partition the support: their masses sum to the total mass.
    Mat sum = Mat::Zero(m.dimension, m.dimension);
    for (const auto& b : est.witness.bins) sum += b.matrix;
    CHECK((sum - total_mass(m)).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("scaling the measure scales the lower bound") {
  Rng rng(31);
  const MatrixNBV m = random_system(rng, 2, 3, 1);
  const double c = 2.5;
  const HsEstimate base = estimate_rho_hs(m, 8, 8, 77);
  const HsEstimate scaled = estimate_rho_hs(scale(m, c), 8, 8, 77);
  CHECK(scaled.lower == Approx(c * base.lower).epsilon(1e-6));
}

TEST_CASE("refining the bins never loses value") {
  Rng rng(37);
  for (int trial = 0; trial < 6; ++trial) {
    MatrixNBV m;
    m.dimension = 2;
    m.breakpoints = {-1.0, 0.0};
    m.pieces = {random_matrix(rng, 2, 0.5)};
    m.atoms.push_back({0.5, random_matrix(rng, 2, 0.5)});
    const HsEstimate coarse = estimate_rho_hs(m, 1 + 4, 10, trial);
    const HsEstimate fine = estimate_rho_hs(m, 1 + 8, 10, trial);
    CHECK(fine.lower >= coarse.lower - 1e-10);
  }
}

TEST_CASE("optimizer meets brute force on few bins") {
  Rng rng(41);
  for (int trial = 0; trial < 8; ++trial) {
    const int d = rng.uniform_int(1, 2);
    MatrixNBV m;
    m.dimension = d;
    const int atoms = rng.uniform_int(2, 3);
    for (int k = 0; k < atoms; ++k)
      m.atoms.push_back(
          {0.1 + 0.25 * k + rng.uniform(0.0, 0.1), random_matrix(rng, d, 0.6)});
    validate(m);
    const HsEstimate est = estimate_rho_hs(m, atoms, 12, trial);
    const double brute = brute_force_torus(bin_matrices(est), 128);
    CHECK(est.lower >= brute - 1e-4);
    CHECK(est.lower <= brute + 1e-3);  // grid resolution slack
  }
}

TEST_CASE("polydisk samples never beat the torus") {
  SECTION("non-normal nilpotent pair") {
    MatrixNBV m;
    m.dimension = 2;
    Mat b1 = Mat::Zero(2, 2), b2 = Mat::Zero(2, 2);
    b1(0, 1) = 1.0;
    b2(1, 0) = 1.0;
    m.atoms.push_back({0.3, b1});
    m.atoms.push_back({0.7, b2});
    const DiskTorusReport rep = check_disk_vs_torus(m, 2, 4000, 7);
    CHECK(rep.violations_above_tol == 0);
    // Dense torus reference: rho = 1 at every phase pair.
    const HsEstimate est = estimate_rho_hs(m, 2, 8, 7);
    const double brute = brute_force_torus(bin_matrices(est), 256);
    CHECK(est.lower == Approx(brute).margin(1e-6));
  }
  SECTION("random systems") {
    Rng rng(43);
    for (int trial = 0; trial < 4; ++trial) {
      const MatrixNBV m = random_system(rng, 2, 3, 1);
      if (simplify(m).is_zero()) continue;
      const DiskTorusReport rep = check_disk_vs_torus(m, -1, 2000, trial);
      CHECK(rep.violations_above_tol == 0);
      CHECK(rep.max_disk_rho <= rep.torus_lower + 1e-6);
    }
  }
}

TEST_CASE("destabilizer construction on the fragile scalar pair") {
  const MatrixNBV m = scalar_atoms({{0.6, 0.5}, {0.6, 0.25}});
  const double eps = 0.05;
  const DestabilizerResult d = build_destabilizer(m, eps, 0.1, 3);
  CHECK(d.rho0 == Approx(1.2).margin(1e-12));
  CHECK(d.norm_phi_minus_id < eps);
  for (double tau : d.taus) CHECK(tau > eps / 8.0 - 1e-12);
  // Window membership: every bin's target lies within eps of the bin.
  for (const auto& bin : d.phi.bins) {
    CHECK(std::abs(bin.target - bin.lo) < eps);
    CHECK(std::abs(bin.target - bin.hi) < eps);
  }
  const MatrixNBV pushed = pushforward(m, d.phi);
  StripQuery q;
  q.re_min = -2.0;
  q.re_max = 2.0;
  q.im_max = d.suggested_im_max;
  const SpectrumResult r = spectral_abscissa(pushed, q);
  CHECK(r.abscissa() >= d.target_abscissa - 1e-3);
}

TEST_CASE("destabilizer needs the radius hypothesis") {
  const MatrixNBV m = scalar_atoms({{0.5, 0.5}, {0.4, 0.25}});  // rho = 0.9
  CHECK_THROWS_WITH(build_destabilizer(m, 0.05, 0.1, 1),
                    Catch::Contains("hypothesis"));
}

TEST_CASE("destabilizer accepts coarse eps") {
  const MatrixNBV m = scalar_atoms({{0.6, 0.5}, {0.6, 0.25}});
  const DestabilizerResult d = build_destabilizer(m, 0.9, 0.1, 5);
  CHECK(d.norm_phi_minus_id < 0.9);
  for (double tau : d.taus) CHECK(tau > 0.9 / 8.0 - 1e-12);
}

TEST_CASE("sampling a small-variation system stays uniformly stable") {
  const MatrixNBV m = scalar_atoms({{0.3, 0.5}, {0.2, 1.0}});
  StripQuery q;
  q.re_min = -8.0;
  q.re_max = 2.0;
  q.im_max = 60.0;
  const StrongStabilityReport rep = sample_strong_stability(m, 0.1, 16, 5, q);
  CHECK(rep.skipped == 0);
  CHECK(rep.rho_lower == Approx(0.5).margin(1e-12));
  CHECK(rep.expects_negative);
  CHECK(rep.max_abscissa < 0.0);
  // Var stays 0.5 under transport and delays stay below 1, so every trial's
  // certified bound sits at or below ln(1/2).
  CHECK(rep.max_certified_bound <= std::log(0.5) + 1e-9);
  for (const auto& rec : rep.records)
    CHECK(rec.abscissa <= rec.certified_bound + 1e-9);
}

TEST_CASE("near-identity sampling reproduces the unperturbed abscissa") {
  const MatrixNBV m = scalar_atoms({{0.5, 1.0}});
  StripQuery q;
  q.re_min = -4.0;
  q.re_max = 1.0;
  q.im_max = 10.0;
  const StrongStabilityReport rep =
      sample_strong_stability(m, 1e-9, 1, 9, q);
  REQUIRE(rep.records.size() == 1);
  CHECK(rep.max_abscissa == Approx(-std::log(2.0)).margin(1e-5));
}

TEST_CASE("fragile commensurate system is destabilized by small binnings") {
  // |a| + |b| = 1.5 > 1 but the commensurate delays are exponentially
  // stable; random small perturbations expose a positive abscissa.
  const MatrixNBV m = scalar_atoms({{0.9, 0.5}, {-0.6, 1.0}});
  CHECK(commensurate_oracle(m, 0.5) < 0.0);
  CHECK(estimate_rho_hs(m).lower == Approx(1.5).margin(1e-12));
  StripQuery q;
  q.re_min = -3.0;
  q.re_max = 2.0;
  q.im_max = 300.0;
  const StrongStabilityReport rep = sample_strong_stability(m, 0.05, 10, 11, q);
  CHECK(rep.max_abscissa > 0.0);
}
