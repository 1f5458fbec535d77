// Copyright (c) 2026 the delaystab authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "delaystab/charfun.hpp"
#include "delaystab/nbv.hpp"
#include "delaystab/polyroots.hpp"
#include "delaystab/types.hpp"

namespace delaystab {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Search window for characteristic roots: the strip
/// [re_min, re_max] x [-im_max, im_max]. im_max <= 0 requests the default
/// window 2*pi/min_gap + 10 (clamped to [20, 400]), min_gap the smallest
/// delay spacing. grid_density = Newton seeds per unit length.
struct StripQuery {
  double re_min = -12.0;
  double re_max = 8.0;
  double im_max = 0.0;
  int grid_density = 8;
};

struct CountCertificate {
  double re_lo, re_hi, im_lo, im_hi;
  int count;
};

/// Root-finding outcome. Every root r satisfies
/// |Delta(r)| <= 1e-9 (1 + ||L(r)||); the rightmost root's real part lies in
/// [abscissa_lo, abscissa_hi]. tag is "window-limited" (roots with
/// |Im s| > im_max are not excluded), "empty-window", or "zero-measure".
struct SpectrumResult {
  std::vector<Complex> roots;
  std::vector<double> residuals;
  double abscissa_lo = -kInf;
  double abscissa_hi = -kInf;
  std::string tag;
  std::vector<CountCertificate> certificates;
  double certified_bound = -kInf;

  /// Max real part over polished roots (-inf when none).
  double abscissa() const {
    double a = -kInf;
    for (const auto& r : roots) a = std::max(a, r.real());
    return a;
  }
};

namespace detail {

inline double growth_segment(double a, double lo, double hi) {
  if (std::abs(a) < kSeriesSwitch)
    return (hi - lo) + a * 0.5 * (hi * hi - lo * lo);
  return (std::exp(a * hi) - std::exp(a * lo)) / a;
}

}  // namespace detail

/// g(a) = sum_k ||A_k|| e^{-a tau_k} + sum_j ||C_j|| (e^{a b_j} -
/// e^{a b_{j-1}})/a, an upper bound for ||L(s)|| on Re s = a. Strictly
/// decreasing for nonzero M without a jump at 0.
inline double growth_bound_g(const MatrixNBV& m, double a) {
  double g = 0.0;
  for (const auto& atom : m.atoms)
    g += operator_norm(atom.matrix, m.norm) * std::exp(-a * atom.tau);
  for (std::size_t j = 0; j < m.pieces.size(); ++j)
    g += operator_norm(m.pieces[j], m.norm) *
         detail::growth_segment(a, m.breakpoints[j], m.breakpoints[j + 1]);
  return g;
}

/// The unique real a* with g(a*) = 1 (bisection to 1e-10), or -inf for the
/// zero measure. No characteristic root has real part above a*, so the
/// spectral abscissa is at most a*. Requires no atom at tau = 0; apply
/// reduce_zero_atom first when one is present.
inline double certified_growth_bound(const MatrixNBV& m) {
  if (m.has_zero_atom())
    throw Error(
        "certified_growth_bound: system has an atom at tau = 0; apply "
        "reduce_zero_atom(M) first");
  const MatrixNBV s = simplify(m);
  if (s.is_zero()) return -kInf;

  double hi = 1.0;
  while (growth_bound_g(s, hi) >= 1.0) {
    hi *= 2.0;
    if (hi > 1e7) throw Error("certified_growth_bound: no upper bracket");
  }
  double lo = -1.0;
  while (growth_bound_g(s, lo) <= 1.0) {
    lo *= 2.0;
    if (lo < -1e7) throw Error("certified_growth_bound: no lower bracket");
  }
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    if (growth_bound_g(s, mid) >= 1.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

namespace detail {

struct BoundaryHit {};

struct EdgeWalker {
  const MatrixNBV& m;
  long evals = 0;
  long max_evals = 4'000'000;

  CharEval eval(Complex z) {
    if (++evals > max_evals) throw Error("count_roots_rect: indeterminate count (budget exhausted)");
    return eval_delta(m, z);
  }

  // Only a near-exact hit counts as "root on the contour": the abscissa
  // bisection routinely walks edges within 1e-9 of the rightmost root, where
  // |Delta| is small but the winding is still resolvable.
  static double boundary_floor(const CharEval& e) {
    return 1e-13 * (1.0 + e.L.cwiseAbs().maxCoeff());
  }

  /// Total argument change of Delta along the segment [za, zb]. A segment is
  /// accepted only when it turns by < pi/4, the trapezoid value of
  /// Delta'/Delta matches the principal log of the ratio, and the segment is
  /// shorter than half the local Newton estimate |Delta/Delta'| of the
  /// distance to the nearest root: endpoint sampling alone cannot see full
  /// turns contributed by roots mid-segment. Throws BoundaryHit when |Delta|
  /// dips to the root scale on the contour.
  double arg_change(Complex za, const CharEval& fa, Complex zb,
                    const CharEval& fb, int depth) {
    if (std::abs(fa.delta) == 0.0 || std::abs(fb.delta) == 0.0 ||
        std::abs(fa.delta) < boundary_floor(fa) ||
        std::abs(fb.delta) < boundary_floor(fb))
      throw BoundaryHit{};
    const Complex ratio = fb.delta / fa.delta;
    const double darg = std::arg(ratio);
    if (depth >= 54) return darg;  // below double resolution of the contour
    const Complex logratio(std::log(std::abs(ratio)), darg);
    const Complex trap =
        0.5 * (fa.delta_prime / fa.delta + fb.delta_prime / fb.delta) *
        (zb - za);
    const double len = std::abs(zb - za);
    const double root_dist =
        std::min(std::abs(fa.delta / fa.delta_prime),
                 std::abs(fb.delta / fb.delta_prime));
    const bool ok = std::abs(darg) < 0.25 * M_PI &&
                    std::abs(trap - logratio) < 0.2 && len <= 0.5 * root_dist;
    if (ok) return darg;
    const Complex zm = 0.5 * (za + zb);
    const CharEval fm = eval(zm);
    return arg_change(za, fa, zm, fm, depth + 1) +
           arg_change(zm, fm, zb, fb, depth + 1);
  }
};

}  // namespace detail

/// Number of characteristic roots strictly inside the rectangle, by the
/// argument principle along its boundary. A near-root boundary sample
/// triggers a 1% inflation about the center, up to 5 retries; a winding total
/// farther than 0.1 from an integer is an error.
inline int count_roots_rect(const MatrixNBV& m, double re_lo, double re_hi,
                            double im_lo, double im_hi) {
  if (re_hi - re_lo <= 0.0 || im_hi - im_lo <= 0.0) return 0;
  const double cx = 0.5 * (re_lo + re_hi), cy = 0.5 * (im_lo + im_hi);
  double wx = 0.5 * (re_hi - re_lo), wy = 0.5 * (im_hi - im_lo);
  for (int attempt = 0;; ++attempt) {
    try {
      detail::EdgeWalker walker{m};
      const Complex c1(cx - wx, cy - wy), c2(cx + wx, cy - wy),
          c3(cx + wx, cy + wy), c4(cx - wx, cy + wy);
      const CharEval f1 = walker.eval(c1), f2 = walker.eval(c2),
                     f3 = walker.eval(c3), f4 = walker.eval(c4);
      double total = 0.0;
      total += walker.arg_change(c1, f1, c2, f2, 0);
      total += walker.arg_change(c2, f2, c3, f3, 0);
      total += walker.arg_change(c3, f3, c4, f4, 0);
      total += walker.arg_change(c4, f4, c1, f1, 0);
      const double winding = total / (2.0 * M_PI);
      const double rounded = std::round(winding);
      if (std::abs(winding - rounded) > 0.1)
        throw Error("count_roots_rect: indeterminate count (winding " +
                    std::to_string(winding) + ")");
      return static_cast<int>(rounded);
    } catch (const detail::BoundaryHit&) {
      if (attempt >= 5)
        throw Error("count_roots_rect: root on boundary after 5 inflations");
      wx *= 1.01;
      wy *= 1.01;
    }
  }
}

namespace detail {

struct Polished {
  Complex s;
  double residual = kInf;
  bool ok = false;
};

/// Damped Newton on Delta, at most 50 iterations; success when
/// |Delta| <= 1e-12 (1 + ||L||).
inline Polished polish_root(const MatrixNBV& m, Complex seed) {
  Polished out;
  Complex s = seed;
  CharEval e = eval_delta(m, s);
  for (int it = 0; it < 50; ++it) {
    const double tol = 1e-12 * (1.0 + operator_norm(e.L, m.norm));
    if (std::abs(e.delta) <= tol) {
      out.s = s;
      out.residual = std::abs(e.delta);
      out.ok = true;
      return out;
    }
    if (std::abs(e.delta_prime) == 0.0) break;
    Complex step = e.delta / e.delta_prime;
    // Backtracking: quasi-polynomial roots crowd near clusters, full steps
    // overshoot.
    bool moved = false;
    for (int half = 0; half < 25; ++half) {
      const Complex cand = s - step;
      const CharEval ce = eval_delta(m, cand);
      if (std::abs(ce.delta) < std::abs(e.delta)) {
        s = cand;
        e = ce;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
  }
  const double tol = 1e-12 * (1.0 + operator_norm(e.L, m.norm));
  out.s = s;
  out.residual = std::abs(e.delta);
  out.ok = std::abs(e.delta) <= tol;
  return out;
}

inline void add_unique_root(std::vector<Complex>& roots,
                            std::vector<double>& residuals, Complex r,
                            double residual, double tol = 1e-7) {
  for (const auto& q : roots)
    if (std::abs(q - r) <= tol) return;
  roots.push_back(r);
  residuals.push_back(residual);
}

/// Grid-seeded Newton sweep over [re_lo, re_hi] x [0, im_max]; conjugates of
/// roots with positive imaginary part are polished and added (real data).
inline void find_roots_in_window(const MatrixNBV& m, double re_lo,
                                 double re_hi, double im_max, int density,
                                 std::vector<Complex>& roots,
                                 std::vector<double>& residuals) {
  const int nx =
      std::max(16, static_cast<int>(std::ceil((re_hi - re_lo) * density)) + 1);
  const int ny =
      std::max(16, static_cast<int>(std::ceil(im_max * density)) + 1);
  std::vector<double> mag(static_cast<std::size_t>(nx) * ny);
  auto at = [&](int i, int j) -> double& {
    return mag[static_cast<std::size_t>(j) * nx + i];
  };
  const double dx = (re_hi - re_lo) / (nx - 1);
  const double dy = im_max / (ny - 1);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      at(i, j) = std::abs(
          eval_delta(m, Complex(re_lo + i * dx, j * dy)).delta);

  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const double v = at(i, j);
      bool localmin = true;
      for (int dj = -1; dj <= 1 && localmin; ++dj)
        for (int di = -1; di <= 1; ++di) {
          if (di == 0 && dj == 0) continue;
          const int ii = i + di, jj = j + dj;
          if (ii < 0 || jj < 0 || ii >= nx || jj >= ny) continue;
          if (at(ii, jj) < v) {
            localmin = false;
            break;
          }
        }
      if (!localmin) continue;
      const Polished p =
          polish_root(m, Complex(re_lo + i * dx, j * dy));
      if (!p.ok) continue;
      if (p.s.real() < re_lo - 1e-6 || p.s.real() > re_hi + 1e-6) continue;
      if (std::abs(p.s.imag()) > im_max + 1e-6) continue;
      Complex r = p.s;
      if (std::abs(r.imag()) < 1e-9) r = Complex(r.real(), 0.0);
      add_unique_root(roots, residuals, r, p.residual);
      if (r.imag() > 1e-9) {
        const Polished pc = polish_root(m, std::conj(r));
        if (pc.ok) add_unique_root(roots, residuals, pc.s, pc.residual);
      }
    }
  }
}

inline double default_im_max(const MatrixNBV& m) {
  std::vector<double> delays;
  for (const auto& a : m.atoms)
    if (a.tau > 0.0) delays.push_back(a.tau);
  for (std::size_t j = 0; j + 1 < m.breakpoints.size(); ++j)
    delays.push_back(m.breakpoints[j + 1] - m.breakpoints[j]);
  std::sort(delays.begin(), delays.end());
  double min_gap = 1.0;
  if (!delays.empty()) {
    min_gap = delays.front();
    for (std::size_t i = 0; i + 1 < delays.size(); ++i)
      min_gap = std::min(min_gap, delays[i + 1] - delays[i]);
    min_gap = std::max(min_gap, 1e-3);
  }
  return std::clamp(2.0 * M_PI / min_gap + 10.0, 20.0, 400.0);
}

}  // namespace detail

/// Locates characteristic roots in the strip and brackets the rightmost
/// root's real part to width 1e-8 by bisection on winding counts. A jump at
/// 0 is removed by the equivalent-system reduction first (roots coincide).
inline SpectrumResult spectral_abscissa(const MatrixNBV& m_in, StripQuery q) {
  if (!(q.re_min < q.re_max))
    throw Error("spectral_abscissa: re_min must be below re_max");
  const WellPosed wp = check_wellposed(m_in);
  if (!wp.ok)
    throw Error("spectral_abscissa: system is not well posed (det " +
                std::to_string(wp.det) + ")");
  const MatrixNBV m = simplify(reduce_zero_atom(m_in));

  SpectrumResult out;
  if (m.is_zero()) {
    out.tag = "zero-measure";
    return out;
  }
  if (q.im_max <= 0.0) q.im_max = detail::default_im_max(m);

  const double astar = certified_growth_bound(m);
  out.certified_bound = astar;
  const double re_hi = std::min(q.re_max, astar + 1e-7);
  if (re_hi <= q.re_min) {
    out.tag = "empty-window";
    out.abscissa_hi = astar;
    return out;
  }

  const int total =
      count_roots_rect(m, q.re_min, re_hi, -q.im_max, q.im_max);
  out.certificates.push_back({q.re_min, re_hi, -q.im_max, q.im_max, total});
  if (total == 0) {
    out.tag = "empty-window";
    out.abscissa_hi = astar;
    return out;
  }

  // Bisect on the left edge of the counting rectangle: lo always has at
  // least one root to its right (within the window), hi has none.
  double lo = q.re_min, hi = re_hi;
  while (hi - lo > 1e-8) {
    const double mid = 0.5 * (lo + hi);
    const int c = count_roots_rect(m, mid, re_hi, -q.im_max, q.im_max);
    out.certificates.push_back({mid, re_hi, -q.im_max, q.im_max, c});
    if (c >= 1)
      lo = mid;
    else
      hi = mid;
  }
  out.abscissa_lo = lo;
  out.abscissa_hi = hi;
  out.tag = "window-limited";

  detail::find_roots_in_window(m, q.re_min, re_hi, q.im_max, q.grid_density,
                               out.roots, out.residuals);
  // The bracket is certified by counts; make sure the rightmost root was
  // also polished. The root's real part is pinned to 1e-8, so a scan of
  // |Delta| along that vertical line seeds any root the window grid missed.
  for (int per_unit : {64, 512, 4096}) {
    if (out.abscissa() >= lo - 1e-6 && out.abscissa() <= hi + 1e-6) break;
    const double re = 0.5 * (lo + hi);
    const int ny = std::max(32, static_cast<int>(q.im_max * per_unit));
    double prev2 = kInf, prev = kInf;
    for (int j = 0; j <= ny + 1; ++j) {
      const double im = q.im_max * j / ny;
      const double cur =
          j <= ny ? std::abs(eval_delta(m, Complex(re, im)).delta) : kInf;
      if (prev < prev2 && prev <= cur) {
        const double seed_im = q.im_max * (j - 1) / ny;
        const detail::Polished p =
            detail::polish_root(m, Complex(re, seed_im));
        if (p.ok && std::abs(p.s.imag()) <= q.im_max + 1e-6) {
          Complex r = p.s;
          if (std::abs(r.imag()) < 1e-9) r = Complex(r.real(), 0.0);
          detail::add_unique_root(out.roots, out.residuals, r, p.residual);
          if (r.imag() > 1e-9) {
            const detail::Polished pc = detail::polish_root(m, std::conj(r));
            if (pc.ok)
              detail::add_unique_root(out.roots, out.residuals, pc.s,
                                      pc.residual);
          }
        }
      }
      prev2 = prev;
      prev = cur;
    }
  }
  if (!(out.abscissa() >= lo - 1e-6 && out.abscissa() <= hi + 1e-6))
    throw Error("spectral_abscissa: bracketed root at Re in [" +
                std::to_string(lo) + ", " + std::to_string(hi) +
                "] resisted polishing");
  return out;
}

/// Exact spectral abscissa for atoms-only systems whose delays are integer
/// multiples of h: the characteristic function collapses to a polynomial
/// P(z) = det(I - sum A_k z^{m_k}) in z = e^{-s h}, whose coefficients are
/// recovered by evaluation at roots of unity followed by an inverse DFT.
/// Returns max over roots of -ln|z| / h, or -inf when P is constant.
inline double commensurate_oracle(const MatrixNBV& m_in, double h) {
  if (!(h > 0.0)) throw Error("commensurate_oracle: base must be positive");
  const MatrixNBV m = simplify(m_in);
  if (m.has_density())
    throw Error("commensurate_oracle: density present; oracle handles atoms only");
  std::vector<int> mult;
  for (const auto& a : m.atoms) {
    const double ratio = a.tau / h;
    const int k = static_cast<int>(std::llround(ratio));
    if (k < 1 || std::abs(k * h - a.tau) > 1e-9)
      throw Error("commensurate_oracle: tau " + std::to_string(a.tau) +
                  " is not a positive integer multiple of " +
                  std::to_string(h));
    mult.push_back(k);
  }
  if (m.atoms.empty()) return -kInf;

  int maxm = 0;
  for (int k : mult) maxm = std::max(maxm, k);
  const int degree = m.dimension * maxm;
  const int n = degree + 1;

  // Values of P at the n-th roots of unity.
  std::vector<Complex> values(n);
  const CMat eye = CMat::Identity(m.dimension, m.dimension);
  for (int j = 0; j < n; ++j) {
    const Complex w = std::polar(1.0, 2.0 * M_PI * j / n);
    CMat t = CMat::Zero(m.dimension, m.dimension);
    for (std::size_t k = 0; k < m.atoms.size(); ++k)
      t += m.atoms[k].matrix.cast<Complex>() * std::pow(w, mult[k]);
    values[j] = (eye - t).determinant();
  }
  // Inverse DFT; P has real coefficients.
  std::vector<Complex> coeffs(n);
  double scale = 0.0;
  for (int k = 0; k < n; ++k) {
    Complex c(0.0, 0.0);
    for (int j = 0; j < n; ++j)
      c += values[j] * std::polar(1.0, -2.0 * M_PI * j * k / n);
    coeffs[k] = c / static_cast<double>(n);
    scale = std::max(scale, std::abs(coeffs[k]));
  }
  for (auto& c : coeffs) {
    if (std::abs(c.imag()) > 1e-6 * std::max(1.0, scale))
      throw Error("commensurate_oracle: interpolation produced complex coefficients");
    c = Complex(c.real(), 0.0);
  }
  const std::vector<Complex> roots = poly_roots(std::move(coeffs), 1e-10);
  if (roots.empty()) return -kInf;
  double s = -kInf;
  for (const auto& z : roots) {
    const double az = std::abs(z);
    if (az > 1e-300) s = std::max(s, -std::log(az) / h);
  }
  return s;
}

struct ProbeRow {
  double var_diff;  // Var(M - N_n)
  double abscissa;  // spectral abscissa of N_n
};

/// Table of (Var(M - N_n), S_{N_n}) demonstrating convergence of the
/// spectral abscissa as the total-variation distance shrinks.
inline std::vector<ProbeRow> abscissa_tv_continuity_probe(
    const MatrixNBV& m, const std::vector<MatrixNBV>& seq,
    StripQuery q = StripQuery{}) {
  std::vector<ProbeRow> rows;
  rows.reserve(seq.size());
  for (const auto& n : seq) {
    const double v = total_variation(diff(m, n));
    const SpectrumResult r = spectral_abscissa(n, q);
    rows.push_back({v, r.abscissa()});
  }
  return rows;
}

}  // namespace delaystab
