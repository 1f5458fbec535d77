// Copyright (c) 2026 the delaystab authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "delaystab/nbv.hpp"
#include "delaystab/types.hpp"

namespace delaystab {

/// A delay perturbation phi: [-1,0] -> [-1,0], restricted to the two families
/// that admit exact pushforwards of the MatrixNBV representation.
///
/// PiecewiseLinear: continuous, globally nondecreasing, given by knots
/// (theta_i, phi(theta_i)) with theta_0 = -1 and theta_last = 0 (flat
/// segments allowed).
///
/// Binning: a finite interval partition of [-1,0], every source interval
/// mapped to a single target point. Bins are [-1, h1], (h1, h2], ...,
/// (h_{m-1}, 0]: a point on an interior boundary belongs to the left bin.
struct Perturbation {
  enum class Kind { PiecewiseLinear, Binning };

  struct Knot {
    double theta;
    double value;
  };
  struct Bin {
    double lo;
    double hi;
    double target;
  };

  Kind kind = Kind::PiecewiseLinear;
  std::vector<Knot> knots;  // PiecewiseLinear only
  std::vector<Bin> bins;    // Binning only

  static Perturbation identity() {
    Perturbation p;
    p.kind = Kind::PiecewiseLinear;
    p.knots = {{-1.0, -1.0}, {0.0, 0.0}};
    return p;
  }
};

inline void validate(const Perturbation& p) {
  if (p.kind == Perturbation::Kind::PiecewiseLinear) {
    if (p.knots.size() < 2) throw ParseError("knots: need at least 2 knots");
    if (p.knots.front().theta != -1.0)
      throw ParseError("knots[0]: theta must be -1");
    if (p.knots.back().theta != 0.0)
      throw ParseError("knots: last theta must be 0");
    for (std::size_t i = 0; i < p.knots.size(); ++i) {
      const std::string where = "knots[" + std::to_string(i) + "]";
      if (!(p.knots[i].value >= -1.0 && p.knots[i].value <= 0.0))
        throw ParseError(where + ": value outside [-1, 0]");
      if (!std::isfinite(p.knots[i].theta) || !std::isfinite(p.knots[i].value))
        throw ParseError(where + ": non-finite entry");
      if (i > 0) {
        if (!(p.knots[i - 1].theta < p.knots[i].theta))
          throw ParseError(where + ": theta must be strictly increasing");
        if (p.knots[i].value < p.knots[i - 1].value)
          throw ParseError(where + ": values must be nondecreasing");
      }
    }
  } else {
    if (p.bins.empty()) throw ParseError("bins: must be nonempty");
    std::vector<Perturbation::Bin> sorted = p.bins;
    std::sort(sorted.begin(), sorted.end(),
              [](const auto& a, const auto& b) { return a.lo < b.lo; });
    if (std::abs(sorted.front().lo - (-1.0)) > 1e-12)
      throw ParseError("bins: intervals must start at -1");
    if (std::abs(sorted.back().hi - 0.0) > 1e-12)
      throw ParseError("bins: intervals must end at 0");
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      const std::string where = "bins[" + std::to_string(i) + "]";
      if (!(sorted[i].lo < sorted[i].hi))
        throw ParseError(where + ": empty or reversed interval");
      if (!(sorted[i].target >= -1.0 && sorted[i].target <= 0.0))
        throw ParseError(where + ": target outside [-1, 0]");
      if (i > 0 && std::abs(sorted[i].lo - sorted[i - 1].hi) > 1e-12)
        throw ParseError(where + ": gap or overlap at " +
                         std::to_string(sorted[i].lo));
    }
  }
}

/// phi(theta) for any theta in [-1, 0].
inline double apply(const Perturbation& p, double theta) {
  if (p.kind == Perturbation::Kind::PiecewiseLinear) {
    if (theta <= p.knots.front().theta) return p.knots.front().value;
    if (theta >= p.knots.back().theta) return p.knots.back().value;
    auto it = std::upper_bound(
        p.knots.begin(), p.knots.end(), theta,
        [](double t, const Perturbation::Knot& k) { return t < k.theta; });
    const auto& hi = *it;
    const auto& lo = *(it - 1);
    const double w = (theta - lo.theta) / (hi.theta - lo.theta);
    return lo.value + w * (hi.value - lo.value);
  }
  // Binning: first bin closed at -1, later bins (lo, hi].
  for (std::size_t i = 0; i < p.bins.size(); ++i) {
    const auto& b = p.bins[i];
    const bool in = (i == 0) ? (theta >= b.lo - 1e-15 && theta <= b.hi)
                             : (theta > b.lo && theta <= b.hi);
    if (in) return b.target;
  }
  return p.bins.back().target;
}

/// sup |phi - id| over [-1, 0]; exact for both families (the sup is attained
/// at a knot or a bin endpoint).
inline double distance_to_identity(const Perturbation& p) {
  double d = 0.0;
  if (p.kind == Perturbation::Kind::PiecewiseLinear) {
    for (const auto& k : p.knots) d = std::max(d, std::abs(k.value - k.theta));
  } else {
    for (const auto& b : p.bins) {
      d = std::max(d, std::abs(b.target - b.lo));
      d = std::max(d, std::abs(b.target - b.hi));
    }
  }
  return d;
}

namespace detail {

struct DensityImage {
  double lo, hi;
  Mat value;
};

/// Rebuilds a MatrixNBV from transported atoms and density images, merging
/// atoms within kAtomMergeTol and padding the density grid with zero pieces
/// so it spans [-1, 0].
inline MatrixNBV assemble_pushforward(int dim, OpNorm norm,
                                      std::vector<Atom> atoms,
                                      std::vector<DensityImage> images) {
  MatrixNBV out;
  out.dimension = dim;
  out.norm = norm;
  for (auto& a : atoms) {
    if (a.tau < kAtomMergeTol) a.tau = 0.0;
    if (std::abs(a.tau - 1.0) < kAtomMergeTol) a.tau = 1.0;
  }
  out.atoms = std::move(atoms);

  if (!images.empty()) {
    std::sort(images.begin(), images.end(),
              [](const auto& a, const auto& b) { return a.lo < b.lo; });
    std::vector<double> bp;
    bp.push_back(-1.0);
    for (const auto& im : images) {
      bp.push_back(im.lo);
      bp.push_back(im.hi);
    }
    bp.push_back(0.0);
    std::sort(bp.begin(), bp.end());
    bp.erase(std::unique(bp.begin(), bp.end(),
                         [](double x, double y) { return y - x <= 1e-15; }),
             bp.end());
    bp.front() = -1.0;
    bp.back() = 0.0;

    std::vector<Mat> pieces(bp.size() - 1, Mat::Zero(dim, dim));
    for (const auto& im : images) {
      for (std::size_t j = 0; j + 1 < bp.size(); ++j) {
        const double mid = 0.5 * (bp[j] + bp[j + 1]);
        if (mid > im.lo && mid < im.hi) pieces[j] += im.value;
      }
    }
    out.breakpoints = std::move(bp);
    out.pieces = std::move(pieces);
  }
  return simplify(std::move(out));
}

}  // namespace detail

/// The pushforward of the measure of M under phi, exact within the
/// representation. Atoms transport to phi(-tau_k); a piecewise-linear segment
/// of slope s > 0 maps density C to C/s on its image and a flat segment
/// deposits its density mass as an atom at the segment value; a binning sends
/// each bin's total mass to an atom at its target. Mass arriving at theta = 0
/// becomes the tau = 0 atom (no well-posedness check here; callers decide).
inline MatrixNBV pushforward(const MatrixNBV& m, const Perturbation& p) {
  validate(p);
  std::vector<Atom> atoms;
  std::vector<detail::DensityImage> images;

  if (p.kind == Perturbation::Kind::PiecewiseLinear) {
    for (const auto& a : m.atoms)
      atoms.push_back(Atom{-apply(p, -a.tau), a.matrix});
    // Overlay each knot segment on the density grid.
    for (std::size_t i = 0; i + 1 < p.knots.size(); ++i) {
      const auto& k0 = p.knots[i];
      const auto& k1 = p.knots[i + 1];
      const double slope = (k1.value - k0.value) / (k1.theta - k0.theta);
      for (std::size_t j = 0; j < m.pieces.size(); ++j) {
        const double u = std::max(k0.theta, m.breakpoints[j]);
        const double v = std::min(k1.theta, m.breakpoints[j + 1]);
        if (v - u <= 0.0) continue;
        const double img_lo = k0.value + slope * (u - k0.theta);
        const double img_hi = k0.value + slope * (v - k0.theta);
        // An image narrower than the atom-merge scale is a point mass; this
        // also catches ulp-level slopes on segments meant to be flat, whose
        // density image would otherwise vanish in breakpoint deduplication.
        if (img_hi - img_lo < kAtomMergeTol) {
          atoms.push_back(Atom{-0.5 * (img_lo + img_hi),
                               Mat(m.pieces[j] * (v - u))});
        } else {
          images.push_back({img_lo, img_hi, Mat(m.pieces[j] / slope)});
        }
      }
    }
  } else {
    std::vector<Perturbation::Bin> bins = p.bins;
    std::sort(bins.begin(), bins.end(),
              [](const auto& a, const auto& b) { return a.lo < b.lo; });
    for (std::size_t i = 0; i < bins.size(); ++i) {
      const auto& b = bins[i];
      Mat mass = Mat::Zero(m.dimension, m.dimension);
      for (const auto& a : m.atoms) {
        const double pos = -a.tau;
        const bool in = (i == 0) ? (pos >= b.lo - 1e-15 && pos <= b.hi)
                                 : (pos > b.lo && pos <= b.hi);
        if (in) mass += a.matrix;
      }
      for (std::size_t j = 0; j < m.pieces.size(); ++j) {
        const double u = std::max(b.lo, m.breakpoints[j]);
        const double v = std::min(b.hi, m.breakpoints[j + 1]);
        if (v - u > 0.0) mass += m.pieces[j] * (v - u);
      }
      if (!mass.isZero(0.0)) atoms.push_back(Atom{-b.target, std::move(mass)});
    }
  }
  return detail::assemble_pushforward(m.dimension, m.norm, std::move(atoms),
                                      std::move(images));
}

/// Composition psi o phi of two piecewise-linear maps, again piecewise
/// linear. Knot set: knots of phi plus preimages of psi's knots.
inline Perturbation compose(const Perturbation& psi, const Perturbation& phi) {
  if (psi.kind != Perturbation::Kind::PiecewiseLinear ||
      phi.kind != Perturbation::Kind::PiecewiseLinear)
    throw Error("compose: both maps must be piecewise linear");
  std::vector<double> thetas;
  for (const auto& k : phi.knots) thetas.push_back(k.theta);
  // Preimages under phi of psi's knot abscissae (phi nondecreasing: take the
  // whole preimage interval's endpoints by scanning segments).
  for (const auto& kp : psi.knots) {
    for (std::size_t i = 0; i + 1 < phi.knots.size(); ++i) {
      const auto& a = phi.knots[i];
      const auto& b = phi.knots[i + 1];
      if (kp.theta >= std::min(a.value, b.value) &&
          kp.theta <= std::max(a.value, b.value) && b.value > a.value) {
        const double t =
            a.theta + (kp.theta - a.value) / (b.value - a.value) * (b.theta - a.theta);
        thetas.push_back(std::clamp(t, -1.0, 0.0));
      }
    }
  }
  std::sort(thetas.begin(), thetas.end());
  thetas.erase(std::unique(thetas.begin(), thetas.end(),
                           [](double x, double y) { return y - x <= 1e-15; }),
               thetas.end());
  thetas.front() = -1.0;
  thetas.back() = 0.0;
  Perturbation out;
  out.kind = Perturbation::Kind::PiecewiseLinear;
  for (double t : thetas) out.knots.push_back({t, apply(psi, apply(phi, t))});
  // Snap ulp-level steps flat so segments that are flat in exact arithmetic
  // stay exactly flat after two rounds of interpolation.
  for (std::size_t i = 1; i < out.knots.size(); ++i)
    if (std::abs(out.knots[i].value - out.knots[i - 1].value) < 1e-13)
      out.knots[i].value = out.knots[i - 1].value;
  validate(out);
  return out;
}

}  // namespace delaystab
