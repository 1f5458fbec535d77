// Copyright (c) 2026 the delaystab authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "delaystab/nbv.hpp"
#include "delaystab/norms.hpp"
#include "delaystab/perturbation.hpp"
#include "delaystab/rng.hpp"
#include "delaystab/spectrum.hpp"
#include "delaystab/types.hpp"

namespace delaystab {

/// One cell of a partition of the support of mu: either a single atom or a
/// sub-interval of the density, with its measure cached.
struct HsBin {
  int atom_index = -1;  // >= 0: bin is that atom; < 0: density sub-interval
  double lo = 0.0;
  double hi = 0.0;
  Mat matrix;  // mu(E_k)
};

/// A simple phase function xi = sum theta_k 1_{E_k}: the argument of the
/// torus objective rho(sum mu(E_k) e^{i theta_k}).
struct PhaseAssignment {
  std::vector<HsBin> bins;
  std::vector<double> phases;  // radians
};

inline CMat phase_sum(const PhaseAssignment& pa, int dimension) {
  CMat s = CMat::Zero(dimension, dimension);
  for (std::size_t k = 0; k < pa.bins.size(); ++k)
    s += pa.bins[k].matrix.cast<Complex>() *
         std::polar(1.0, pa.phases[k]);
  return s;
}

/// Spectral radius of sum_k mu(E_k) e^{i theta_k}.
inline double rho_of_phases(const PhaseAssignment& pa, int dimension) {
  if (pa.bins.size() != pa.phases.size())
    throw Error("rho_of_phases: bins and phases differ in length");
  return spectral_radius(phase_sum(pa, dimension));
}

/// One bin per atom plus a near-uniform partition of each density piece.
/// Every piece receives at least one bin, so the effective total is
/// max(bin_count, atoms + pieces).
inline std::vector<HsBin> make_bins(const MatrixNBV& m, int bin_count) {
  const int atom_bins = static_cast<int>(m.atoms.size());
  if (bin_count < atom_bins)
    throw Error("make_bins: bin_count must be at least the number of atoms");
  std::vector<HsBin> bins;
  for (int k = 0; k < atom_bins; ++k)
    bins.push_back(HsBin{k, -m.atoms[k].tau, -m.atoms[k].tau,
                         m.atoms[k].matrix});
  if (!m.pieces.empty()) {
    const int budget =
        std::max<int>(bin_count - atom_bins, static_cast<int>(m.pieces.size()));
    double total_len = 0.0;
    for (std::size_t j = 0; j < m.pieces.size(); ++j)
      total_len += m.breakpoints[j + 1] - m.breakpoints[j];
    int used = 0;
    for (std::size_t j = 0; j < m.pieces.size(); ++j) {
      const double len = m.breakpoints[j + 1] - m.breakpoints[j];
      int share = (j + 1 == m.pieces.size())
                      ? budget - used
                      : std::max(1, static_cast<int>(std::round(budget * len / total_len)));
      share = std::max(1, std::min(share, budget - used -
                                              static_cast<int>(m.pieces.size() - 1 - j)));
      used += share;
      for (int i = 0; i < share; ++i) {
        const double lo = m.breakpoints[j] + len * i / share;
        const double hi = (i + 1 == share) ? m.breakpoints[j + 1]
                                           : m.breakpoints[j] + len * (i + 1) / share;
        bins.push_back(HsBin{-1, lo, hi, Mat(m.pieces[j] * (hi - lo))});
      }
    }
  }
  return bins;
}

/// Lower/upper bounds on the generalized Hale-Silkowski radius together with
/// the witnessing phase assignment. upper is always the total variation; the
/// scalar case is exact.
struct HsEstimate {
  double lower = 0.0;
  double upper = 0.0;
  PhaseAssignment witness;
  int bin_count = 0;
  bool converged = false;
};

namespace detail {

inline double wrap_angle(double t) {
  t = std::fmod(t, 2.0 * M_PI);
  if (t < 0.0) t += 2.0 * M_PI;
  return t;
}

/// Cyclic coordinate ascent (coarse scan + golden-section per phase) with an
/// eigenvalue-perturbation gradient polish. Returns the reached objective.
inline double optimize_phases(PhaseAssignment& pa, int dimension) {
  const std::size_t n = pa.bins.size();
  if (n == 0) return 0.0;
  CMat sum = phase_sum(pa, dimension);
  double best = spectral_radius(sum);

  auto value_with = [&](std::size_t k, double theta) {
    const CMat s = sum +
                   pa.bins[k].matrix.cast<Complex>() *
                       (std::polar(1.0, theta) - std::polar(1.0, pa.phases[k]));
    return spectral_radius(s);
  };
  auto commit = [&](std::size_t k, double theta) {
    sum += pa.bins[k].matrix.cast<Complex>() *
           (std::polar(1.0, theta) - std::polar(1.0, pa.phases[k]));
    pa.phases[k] = wrap_angle(theta);
  };

  const double golden = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int pass = 0; pass < 200; ++pass) {
    const double before = best;
    for (std::size_t k = 0; k < n; ++k) {
      // Coarse global scan in this coordinate.
      double btheta = pa.phases[k], bval = best;
      for (int j = 0; j < 16; ++j) {
        const double t = 2.0 * M_PI * j / 16.0;
        const double v = value_with(k, t);
        if (v > bval) {
          bval = v;
          btheta = t;
        }
      }
      // Golden-section refinement around the best sample.
      double a = btheta - 2.0 * M_PI / 16.0, b = btheta + 2.0 * M_PI / 16.0;
      double x1 = b - golden * (b - a), x2 = a + golden * (b - a);
      double f1 = value_with(k, x1), f2 = value_with(k, x2);
      for (int it = 0; it < 40 && b - a > 1e-12; ++it) {
        if (f1 < f2) {
          a = x1;
          x1 = x2;
          f1 = f2;
          x2 = a + golden * (b - a);
          f2 = value_with(k, x2);
        } else {
          b = x2;
          x2 = x1;
          f2 = f1;
          x1 = b - golden * (b - a);
          f1 = value_with(k, x1);
        }
      }
      const double cand = 0.5 * (a + b);
      const double cval = value_with(k, cand);
      if (cval > best) {
        commit(k, cand);
        best = cval;
      } else if (bval > best) {
        commit(k, btheta);
        best = bval;
      }
    }
    if (best - before < 1e-10) break;
  }

  // Gradient polish: d lambda / d theta_k = i (y* B_k e^{i theta_k} x)/(y* x)
  // for a simple dominant eigenpair; skipped near a modulus tie.
  for (int it = 0; it < 100; ++it) {
    const DominantEig de = dominant_eig(sum);
    if (!(de.gap >= 1e-8) || std::abs(de.lambda) == 0.0) break;
    const Complex yx = de.left.adjoint().dot(de.right) == Complex(0.0)
                           ? Complex(0.0)
                           : (de.left.adjoint() * de.right)(0, 0);
    if (std::abs(yx) < 1e-14) break;
    std::vector<double> grad(n);
    double gnorm = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const Complex dl =
          Complex(0, 1) *
          ((de.left.adjoint() * (pa.bins[k].matrix.cast<Complex>() *
                                 std::polar(1.0, pa.phases[k])) *
            de.right)(0, 0)) /
          yx;
      grad[k] = (std::conj(de.lambda) * dl).real() / std::abs(de.lambda);
      gnorm += grad[k] * grad[k];
    }
    gnorm = std::sqrt(gnorm);
    if (gnorm < 1e-12) break;
    double step = 0.1;
    bool improved = false;
    while (step > 1e-12) {
      PhaseAssignment trial = pa;
      for (std::size_t k = 0; k < n; ++k)
        trial.phases[k] = wrap_angle(pa.phases[k] + step * grad[k] / gnorm);
      const double v = rho_of_phases(trial, dimension);
      if (v > best + 1e-15) {
        pa = trial;
        sum = phase_sum(pa, dimension);
        best = v;
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved) break;
  }

  // Gauge fix: a common rotation of all phases leaves the spectral radius
  // unchanged, so pin the first massive bin to phase zero. Canonical
  // witnesses make sign structure visible (0 / pi on alignable systems).
  for (std::size_t k = 0; k < n; ++k) {
    if (pa.bins[k].matrix.isZero(0.0)) continue;
    const double shift = pa.phases[k];
    for (std::size_t j = 0; j < n; ++j)
      pa.phases[j] = wrap_angle(pa.phases[j] - shift);
    break;
  }
  return best;
}

inline std::uint64_t fnv1a(const void* data, std::size_t n,
                           std::uint64_t h = 1469598103934665603ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace detail

/// Stable content hash of a perturbation, used to label trials in reports.
inline std::uint64_t perturbation_digest(const Perturbation& p) {
  std::uint64_t h = detail::fnv1a(&p.kind, sizeof(p.kind));
  for (const auto& k : p.knots) h = detail::fnv1a(&k, sizeof(k), h);
  for (const auto& b : p.bins) h = detail::fnv1a(&b, sizeof(b), h);
  return h;
}

/// Multistart torus optimization of rho(sum mu(E_k) e^{i theta_k}) over the
/// binned measure. `lower` is the best value found (exact in dimension 1,
/// where it equals the total variation by sign alignment), `upper` the total
/// variation. bin_count < 0 requests the default: atoms + 8 density bins.
inline HsEstimate estimate_rho_hs(const MatrixNBV& m, int bin_count = -1,
                                  int restarts = 16,
                                  std::uint64_t seed = 0) {
  if (restarts < 1) throw Error("estimate_rho_hs: restarts must be >= 1");
  const MatrixNBV s = simplify(m);
  if (bin_count < 0)
    bin_count = static_cast<int>(s.atoms.size()) + (s.has_density() ? 8 : 0);

  HsEstimate est;
  est.upper = total_variation(s);
  if (s.is_zero()) {
    est.converged = true;
    return est;
  }
  est.witness.bins = make_bins(s, bin_count);
  est.bin_count = static_cast<int>(est.witness.bins.size());
  est.witness.phases.assign(est.witness.bins.size(), 0.0);

  if (s.dimension == 1) {
    // Scalar Hahn alignment: phase 0 on positive mass, pi on negative mass,
    // attaining the total variation exactly.
    for (std::size_t k = 0; k < est.witness.bins.size(); ++k)
      est.witness.phases[k] =
          est.witness.bins[k].matrix(0, 0) >= 0.0 ? 0.0 : M_PI;
    est.lower = est.upper;
    est.converged = true;
    return est;
  }

  double best = -1.0;
  std::vector<double> finals(restarts);
  for (int r = 0; r < restarts; ++r) {
    Rng rng(seed + 0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(r + 1));
    PhaseAssignment pa;
    pa.bins = est.witness.bins;
    pa.phases.resize(pa.bins.size());
    for (auto& t : pa.phases)
      t = (r == 0) ? 0.0 : rng.uniform(0.0, 2.0 * M_PI);
    const double v = detail::optimize_phases(pa, s.dimension);
    finals[r] = v;
    if (v > best) {
      best = v;
      est.witness = pa;
    }
  }
  int near = 0;
  for (double v : finals)
    if (best - v <= 1e-8) ++near;
  est.converged = restarts >= 2 ? near >= 2 : false;
  est.lower = std::min(best, est.upper);
  return est;
}

/// Outcome of polydisk sampling against the torus lower bound.
struct DiskTorusReport {
  double torus_lower = 0.0;
  double max_disk_rho = 0.0;
  double max_violation = 0.0;  // max(0, max_disk_rho - torus_lower)
  int samples = 0;
  int violations_above_tol = 0;  // samples exceeding lower + 1e-6
};

/// Samples rho(sum B_k t_k) over the closed polydisk; by the maximum
/// principle this never exceeds the torus maximum, so any sample above the
/// optimizer's lower bound + 1e-6 means the optimizer is stuck. Reported,
/// not fatal.
inline DiskTorusReport check_disk_vs_torus(const MatrixNBV& m, int bin_count,
                                           int samples, std::uint64_t seed) {
  const MatrixNBV s = simplify(m);
  const HsEstimate est = estimate_rho_hs(s, bin_count, 16, seed);
  DiskTorusReport rep;
  rep.torus_lower = est.lower;
  rep.samples = samples;
  if (s.is_zero()) return rep;
  Rng rng(seed ^ 0xd1b54a32d192ed03ull);
  const std::size_t n = est.witness.bins.size();
  for (int i = 0; i < samples; ++i) {
    CMat t = CMat::Zero(s.dimension, s.dimension);
    for (std::size_t k = 0; k < n; ++k) {
      const double r = std::sqrt(rng.uniform());
      const double ang = rng.uniform(0.0, 2.0 * M_PI);
      t += est.witness.bins[k].matrix.cast<Complex>() * std::polar(r, ang);
    }
    const double rho = spectral_radius(t);
    rep.max_disk_rho = std::max(rep.max_disk_rho, rho);
    if (rho > est.lower + 1e-6) ++rep.violations_above_tol;
  }
  rep.max_violation = std::max(0.0, rep.max_disk_rho - rep.torus_lower);
  return rep;
}

/// A constructed destabilizing perturbation with its construction record.
struct DestabilizerResult {
  Perturbation phi;  // Binning
  double norm_phi_minus_id = 0.0;
  double rho0 = 0.0;             // Hale-Silkowski lower bound used
  double delta1 = 0.0;
  double achieved_rho = 0.0;     // rho of the phase witness on the final bins
  double target_abscissa = 0.0;  // ln(rho0) - delta
  double anchor_im = 0.0;        // vertical line where witness phases are realized
  double suggested_im_max = 0.0;
  std::vector<double> taus;
  std::vector<double> phases;
  std::vector<Mat> bin_matrices;  // mu(E_k) of the emitted difference system
};

namespace detail {

/// Interval partition of [-1, 0] with cells of diameter < 0.45 eps, cut at
/// density breakpoints, at witness density-bin boundaries, and just left of
/// every atom (sliver width eta) so each atom dominates its own cell.
inline std::vector<double> destabilizer_cuts(const MatrixNBV& m,
                                             const PhaseAssignment& witness,
                                             double eps, double eta) {
  std::vector<double> cuts{-1.0, 0.0};
  for (double b : m.breakpoints) cuts.push_back(b);
  for (const auto& bin : witness.bins)
    if (bin.atom_index < 0) {
      cuts.push_back(bin.lo);
      cuts.push_back(bin.hi);
    }
  for (const auto& a : m.atoms) {
    cuts.push_back(-a.tau);
    if (-a.tau - eta > -1.0) cuts.push_back(-a.tau - eta);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end(),
                         [](double x, double y) { return y - x <= 1e-14; }),
             cuts.end());
  cuts.front() = -1.0;
  cuts.back() = 0.0;
  // Uniform refinement of wide cells.
  std::vector<double> fine;
  const double maxw = 0.45 * eps;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    fine.push_back(cuts[i]);
    const double w = cuts[i + 1] - cuts[i];
    if (w > maxw) {
      const int parts = static_cast<int>(std::ceil(w / maxw));
      for (int p = 1; p < parts; ++p)
        fine.push_back(cuts[i] + w * p / parts);
    }
  }
  fine.push_back(0.0);
  return fine;
}

/// Measure of (lo, hi] (first cell closed at -1).
inline Mat cell_mass(const MatrixNBV& m, double lo, double hi, bool first) {
  Mat mass = Mat::Zero(m.dimension, m.dimension);
  for (const auto& a : m.atoms) {
    const double p = -a.tau;
    const bool in = first ? (p >= lo - 1e-15 && p <= hi) : (p > lo && p <= hi);
    if (in) mass += a.matrix;
  }
  for (std::size_t j = 0; j < m.pieces.size(); ++j) {
    const double u = std::max(lo, m.breakpoints[j]);
    const double v = std::min(hi, m.breakpoints[j + 1]);
    if (v - u > 0.0) mass += m.pieces[j] * (v - u);
  }
  return mass;
}

/// Phase for a partition cell inherited from the coarse witness: an atom's
/// phase when the cell contains one, otherwise the phase of the witness
/// density bin holding the cell midpoint.
inline double inherited_phase(const MatrixNBV& m, const PhaseAssignment& w,
                              double lo, double hi, bool first) {
  for (std::size_t k = 0; k < w.bins.size(); ++k) {
    if (w.bins[k].atom_index < 0) continue;
    const double p = -m.atoms[w.bins[k].atom_index].tau;
    const bool in = first ? (p >= lo - 1e-15 && p <= hi) : (p > lo && p <= hi);
    if (in) return w.phases[k];
  }
  const double mid = 0.5 * (lo + hi);
  for (std::size_t k = 0; k < w.bins.size(); ++k) {
    if (w.bins[k].atom_index >= 0) continue;
    if (mid >= w.bins[k].lo && mid <= w.bins[k].hi) return w.phases[k];
  }
  return 0.0;
}

}  // namespace detail

/// Constructs a Binning perturbation phi with ||phi - id|| < eps whose
/// pushforward is a finite difference system expected to carry a
/// characteristic root with real part at least ln(rho0) - delta.
///
/// Construction: a simple phase witness with cells of diameter < eps/2 and
/// objective >= rho0 e^{-delta1}; each cell is sent to a delay inside the
/// window (max{inf E - eps/4, -1}, min{sup E + eps/4, -eps/8}). When the
/// witness phases are nontrivial the delays are chosen on the lattice
/// tau = -theta_k/b* (mod 2pi/b*), so every witness phase is realized exactly
/// on the line Im s = b*; floats cannot be rationally independent, so this
/// anchoring replaces the density argument that exact irrationality would
/// provide. Trivial phases use square-root-of-prime offsets inside the
/// windows.
inline DestabilizerResult build_destabilizer(const MatrixNBV& m_in, double eps,
                                             double delta,
                                             std::uint64_t seed = 0) {
  if (!(eps > 0.0 && eps < 1.0))
    throw Error("build_destabilizer: eps must lie in (0, 1)");
  if (!(delta > 0.0)) throw Error("build_destabilizer: delta must be positive");
  const MatrixNBV m = simplify(m_in);
  const HsEstimate est = estimate_rho_hs(m, -1, 16, seed);
  const double rho0 = est.lower;
  if (!(rho0 >= 1.0))
    throw Error("build_destabilizer: hypothesis rho_HS >= 1 not met (lower bound " +
                std::to_string(rho0) + ")");
  if (rho0 > 1.0 + 1e-12 && !(delta < 2.0 * std::log(rho0)))
    throw Error("build_destabilizer: need delta < 2 ln(rho_HS) = " +
                std::to_string(2.0 * std::log(rho0)));

  DestabilizerResult out;
  out.rho0 = rho0;
  out.delta1 =
      rho0 > 1.0 + 1e-12 ? 0.5 * delta : eps * delta / 16.0;
  out.target_abscissa = std::log(rho0) - delta;
  const double target_rho = rho0 * std::exp(-out.delta1);

  // Refine the sliver width until the partition's optimized witness clears
  // the target objective.
  PhaseAssignment pa;
  double achieved = -1.0;
  double eta = std::min(0.45 * eps, 1e-3);
  for (int attempt = 0; attempt < 14; ++attempt) {
    const std::vector<double> cuts =
        detail::destabilizer_cuts(m, est.witness, eps, eta);
    pa.bins.clear();
    pa.phases.clear();
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      const bool first = i == 0;
      HsBin bin;
      bin.atom_index = -1;
      bin.lo = cuts[i];
      bin.hi = cuts[i + 1];
      bin.matrix = detail::cell_mass(m, bin.lo, bin.hi, first);
      pa.bins.push_back(std::move(bin));
      pa.phases.push_back(
          detail::inherited_phase(m, est.witness, cuts[i], cuts[i + 1], first));
    }
    achieved = m.dimension == 1 ? rho_of_phases(pa, 1)
                                : detail::optimize_phases(pa, m.dimension);
    if (achieved >= target_rho) break;
    eta *= 0.25;
  }
  if (achieved < target_rho)
    throw Error(
        "build_destabilizer: could not reach the target objective by bin "
        "refinement; this contradicts the construction and indicates a bug");
  out.achieved_rho = achieved;

  // Delay windows per cell.
  struct Window {
    double tau_lo, tau_hi;  // window for tau = -position
  };
  std::vector<Window> windows;
  double min_len = kInf;
  for (const auto& bin : pa.bins) {
    const double wlo = std::max(bin.lo - 0.25 * eps, -1.0);
    const double whi = std::min(bin.hi + 0.25 * eps, -0.125 * eps);
    if (!(whi - wlo >= 0.125 * eps - 1e-12))
      throw Error("build_destabilizer: window shorter than eps/8; bug");
    windows.push_back({-whi, -wlo});
    min_len = std::min(min_len, whi - wlo);
  }

  // Optimizer noise of ~1e-8 rad changes the objective far below the
  // e^{-delta1} slack, so such phases count as trivial.
  bool trivial_phases = true;
  for (double t : pa.phases) {
    const double w = std::remainder(t, 2.0 * M_PI);
    if (std::abs(w) > 1e-6) {
      trivial_phases = false;
      break;
    }
  }

  static const int kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29,
                                31, 37, 41, 43, 47, 53, 59, 61, 67, 71};
  std::vector<double> taus(pa.bins.size());
  double bstar = 0.0;
  if (trivial_phases) {
    // Any delays in the windows work; jitter by square-root-of-prime
    // fractions to avoid small-integer relations.
    for (std::size_t k = 0; k < pa.bins.size(); ++k) {
      const double span = windows[k].tau_hi - windows[k].tau_lo;
      const double root = std::sqrt(static_cast<double>(
          kPrimes[k % (sizeof(kPrimes) / sizeof(kPrimes[0]))]));
      const double frac = root - std::floor(root);
      taus[k] = windows[k].tau_lo + span * (0.3 + 0.4 * frac);
    }
  } else {
    bstar = 2.0 * M_PI / (0.9 * min_len);
    const double spacing = 2.0 * M_PI / bstar;  // = 0.9 * min_len
    for (std::size_t k = 0; k < pa.bins.size(); ++k) {
      // tau == -theta_k / b* (mod spacing), nearest the window center.
      const double center = 0.5 * (windows[k].tau_lo + windows[k].tau_hi);
      const double base = -pa.phases[k] / bstar;
      double tau = base + spacing * std::round((center - base) / spacing);
      const double lo = windows[k].tau_lo + 0.02 * min_len;
      const double hi = windows[k].tau_hi - 0.02 * min_len;
      while (tau < lo) tau += spacing;
      while (tau > hi) tau -= spacing;
      if (tau < lo)
        throw Error("build_destabilizer: no lattice point in window; bug");
      taus[k] = tau;
    }
  }
  // Enforce pairwise-distinct delays.
  for (std::size_t i = 0; i < taus.size(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (std::abs(taus[i] - taus[j]) < 1e-12) taus[i] += 3e-12;

  out.phi.kind = Perturbation::Kind::Binning;
  for (std::size_t k = 0; k < pa.bins.size(); ++k)
    out.phi.bins.push_back({pa.bins[k].lo, pa.bins[k].hi, -taus[k]});
  validate(out.phi);
  out.norm_phi_minus_id = distance_to_identity(out.phi);
  if (!(out.norm_phi_minus_id < eps))
    throw Error("build_destabilizer: ||phi - id|| = " +
                std::to_string(out.norm_phi_minus_id) + " >= eps; bug");
  out.anchor_im = bstar;
  out.suggested_im_max = std::abs(bstar) + 30.0;
  out.taus = std::move(taus);
  out.phases = pa.phases;
  for (const auto& b : pa.bins) out.bin_matrices.push_back(b.matrix);
  return out;
}

struct TrialRecord {
  std::string kind;  // "piecewise_linear" | "binning"
  std::uint64_t digest = 0;
  bool wellposed = true;
  double abscissa = -kInf;
  double certified_bound = -kInf;
};

struct StrongStabilityReport {
  double eps = 0.0;
  int trials = 0;
  int skipped = 0;  // pushforwards failing well-posedness
  double rho_lower = 0.0;
  double rho_upper = 0.0;
  double max_abscissa = -kInf;
  double max_certified_bound = -kInf;
  bool expects_negative = false;  // rho_lower < 1
  std::vector<TrialRecord> records;
};

/// Draws random perturbations with ||phi - id|| < eps from both families
/// (jittered piecewise-linear knots, random binnings with bin diameter
/// < eps), pushes M forward, and records the spectral abscissa and certified
/// growth bound of every well-posed trial.
inline StrongStabilityReport sample_strong_stability(const MatrixNBV& m,
                                                     double eps, int trials,
                                                     std::uint64_t seed,
                                                     StripQuery q = StripQuery{}) {
  if (!(eps > 0.0)) throw Error("sample_strong_stability: eps must be positive");
  const WellPosed wp = check_wellposed(m);
  if (!wp.ok) throw Error("sample_strong_stability: base system ill-posed");
  const HsEstimate est = estimate_rho_hs(m, -1, 16, seed);

  StrongStabilityReport rep;
  rep.eps = eps;
  rep.trials = trials;
  rep.rho_lower = est.lower;
  rep.rho_upper = est.upper;
  rep.expects_negative = est.lower < 1.0;

  for (int i = 0; i < trials; ++i) {
    Rng rng(seed + 0xbf58476d1ce4e5b9ull * static_cast<std::uint64_t>(i + 1));
    Perturbation phi;
    if (i % 2 == 0) {
      phi.kind = Perturbation::Kind::PiecewiseLinear;
      const int segs = 8;
      double prev = -1.0;
      for (int j = 0; j <= segs; ++j) {
        const double theta = -1.0 + static_cast<double>(j) / segs;
        double v = theta + rng.uniform(-0.9 * eps, 0.9 * eps);
        v = std::clamp(v, -1.0, 0.0);
        v = std::max(v, prev);
        prev = v;
        phi.knots.push_back({theta, v});
      }
    } else {
      phi.kind = Perturbation::Kind::Binning;
      const int nbins =
          std::max(2, static_cast<int>(std::ceil(1.0 / (0.9 * eps))));
      std::vector<double> edges{-1.0};
      for (int j = 1; j < nbins; ++j)
        edges.push_back(-1.0 + (static_cast<double>(j) + rng.uniform(-0.2, 0.2)) / nbins);
      edges.push_back(0.0);
      std::sort(edges.begin(), edges.end());
      for (int j = 0; j < nbins; ++j) {
        const double lo = edges[j], hi = edges[j + 1];
        if (hi - lo <= 1e-9) continue;
        const double tlo = std::max(hi - 0.95 * eps, -1.0);
        const double thi = std::min(lo + 0.95 * eps, 0.0);
        phi.bins.push_back({lo, hi, rng.uniform(tlo, thi)});
      }
      if (!phi.bins.empty()) {
        phi.bins.front().lo = -1.0;
        phi.bins.back().hi = 0.0;
      }
    }
    validate(phi);

    TrialRecord rec;
    rec.kind = phi.kind == Perturbation::Kind::PiecewiseLinear
                   ? "piecewise_linear"
                   : "binning";
    rec.digest = perturbation_digest(phi);
    const MatrixNBV pushed = pushforward(m, phi);
    const WellPosed pw = check_wellposed(pushed);
    if (!pw.ok) {
      rec.wellposed = false;
      ++rep.skipped;
      rep.records.push_back(std::move(rec));
      continue;
    }
    const MatrixNBV reduced = reduce_zero_atom(pushed);
    rec.certified_bound = reduced.is_zero() ? -kInf
                                            : certified_growth_bound(reduced);
    const SpectrumResult sr = spectral_abscissa(pushed, q);
    rec.abscissa = sr.abscissa();
    rep.max_abscissa = std::max(rep.max_abscissa, rec.abscissa);
    rep.max_certified_bound =
        std::max(rep.max_certified_bound, rec.certified_bound);
    rep.records.push_back(std::move(rec));
  }
  return rep;
}

}  // namespace delaystab
