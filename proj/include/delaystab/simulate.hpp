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

/// A sampled solution on the uniform grid t = -1, -1+h, ..., T with h = 1/n.
/// samples[i] is x(-1 + i h); the first n+1 samples are the (projected)
/// initial condition. window_norms[i] (for i >= n) is sup of |x|_inf over the
/// trailing unit window [t_i - 1, t_i].
struct Trajectory {
  double h = 0.0;
  int n = 0;
  double horizon = 0.0;
  std::vector<Vec> samples;
  std::vector<double> window_norms;
  bool interpolated_delays = false;  // some atom tau was not grid aligned
};

namespace detail {

/// Weights of the right-hand quadrature sum A_k x(t - tau_k) + integral of
/// density times x, expressed over grid offsets 0, 1, ..., n back from t.
/// Offset 0 (the value being solved for) collects the implicit part:
/// a tau = 0 atom, interpolation weight of sub-grid delays, and the trapezoid
/// end weight of a density piece touching 0.
struct StepStencil {
  std::vector<Mat> weights;  // index = grid steps back from t
  bool interpolated = false;
};

inline StepStencil build_stencil(const MatrixNBV& m, int n) {
  StepStencil st;
  st.weights.assign(static_cast<std::size_t>(n) + 1,
                    Mat::Zero(m.dimension, m.dimension));
  for (const auto& a : m.atoms) {
    const double steps = a.tau * n;
    const int lo = static_cast<int>(std::floor(steps));
    const double frac = steps - lo;
    if (frac < 1e-12) {
      st.weights[lo] += a.matrix;
    } else if (frac > 1.0 - 1e-12) {
      st.weights[lo + 1] += a.matrix;
    } else {
      st.interpolated = true;
      st.weights[lo] += a.matrix * (1.0 - frac);
      st.weights[lo + 1] += a.matrix * frac;
    }
  }
  // Exact integral of the piecewise-linear interpolant of x against each
  // constant density piece: composite trapezoid with fractional end cells.
  for (std::size_t j = 0; j < m.pieces.size(); ++j) {
    const Mat& c = m.pieces[j];
    const double lo = m.breakpoints[j], hi = m.breakpoints[j + 1];
    // Integrate over [lo, hi] in theta; theta = -(k - u) h for offset k.
    // Split [lo, hi] at grid points.
    const double slo = -hi * n;  // grid-steps back of the upper end (closer to 0)
    const double shi = -lo * n;
    int cell = static_cast<int>(std::floor(slo));
    while (cell < shi - 1e-12) {
      const double a = std::max(slo, static_cast<double>(cell));
      const double b = std::min(shi, static_cast<double>(cell + 1));
      if (b - a > 1e-14) {
        // On this cell x(theta) = x_{cell}(1 - u) + x_{cell+1} u with
        // u in [a-cell, b-cell] measured in steps back; d theta = -h du but
        // orientation cancels: mass h * du.
        const double u0 = a - cell, u1 = b - cell;
        const double w_near = ((u1 - u0) - 0.5 * (u1 * u1 - u0 * u0)) * (1.0 / n);
        const double w_far = (0.5 * (u1 * u1 - u0 * u0)) * (1.0 / n);
        st.weights[cell] += c * w_near;
        st.weights[cell + 1] += c * w_far;
      }
      ++cell;
    }
  }
  return st;
}

}  // namespace detail

/// Replaces the value at theta = 0 so the initial condition satisfies the
/// compatibility constraint x(0) = integral of dM x_0 under the same
/// quadrature the integrator uses; idempotent by construction.
inline std::vector<Vec> project_initial(const MatrixNBV& m,
                                        std::vector<Vec> phi0, int n) {
  if (static_cast<int>(phi0.size()) != n + 1)
    throw Error("project_initial: initial condition must have n+1 samples");
  const detail::StepStencil st = detail::build_stencil(m, n);
  Vec rest = Vec::Zero(m.dimension);
  for (int k = 1; k <= n; ++k) rest += st.weights[k] * phi0[n - k];
  const Mat lhs = Mat::Identity(m.dimension, m.dimension) - st.weights[0];
  phi0[n] = lhs.partialPivLu().solve(rest);
  return phi0;
}

/// Method of steps on the uniform grid: each new value solves
/// (I - W0) x(t) = sum_{k >= 1} W_k x(t - k h), where W collects atom and
/// density quadrature weights. Throws on ill-posedness or non-finite blow-up
/// (message carries the first bad t).
inline Trajectory integrate(const MatrixNBV& m, const std::vector<Vec>& phi0,
                            double horizon, int n) {
  if (n < 64) throw Error("integrate: grid resolution n must be >= 64");
  if (!(horizon > 0.0)) throw Error("integrate: horizon must be positive");
  const WellPosed wp = check_wellposed(m);
  if (!wp.ok)
    throw Error("integrate: system not well posed (det " +
                std::to_string(wp.det) + ")");

  Trajectory tr;
  tr.n = n;
  tr.h = 1.0 / n;
  tr.horizon = horizon;
  const detail::StepStencil st = detail::build_stencil(m, n);
  tr.interpolated_delays = st.interpolated;

  const Mat lhs = Mat::Identity(m.dimension, m.dimension) - st.weights[0];
  if (std::abs(lhs.determinant()) < kWellPosedDetTol)
    throw Error("integrate: implicit step matrix is singular");
  const Eigen::PartialPivLU<Mat> lu(lhs);

  const int steps = static_cast<int>(std::ceil(horizon * n));
  tr.samples = project_initial(m, phi0, n);
  tr.samples.reserve(tr.samples.size() + steps);
  for (int i = 1; i <= steps; ++i) {
    const std::size_t idx = tr.samples.size();
    Vec rest = Vec::Zero(m.dimension);
    for (int k = 1; k <= n; ++k) rest += st.weights[k] * tr.samples[idx - k];
    Vec x = lu.solve(rest);
    if (!x.allFinite() || x.cwiseAbs().maxCoeff() > 1e150) {
      const double t = -1.0 + tr.h * static_cast<double>(idx);
      throw Error("integrate: blow-up at t = " + std::to_string(t));
    }
    tr.samples.push_back(std::move(x));
  }

  tr.window_norms.assign(tr.samples.size(), 0.0);
  for (std::size_t i = static_cast<std::size_t>(n); i < tr.samples.size(); ++i) {
    double s = 0.0;
    for (std::size_t k = i - n; k <= i; ++k)
      s = std::max(s, tr.samples[k].cwiseAbs().maxCoeff());
    tr.window_norms[i] = s;
  }
  return tr;
}

/// Least-squares slope of ln sup-window-norm at unit-spaced times past the
/// burn-in; -inf for a fully decayed (all-zero) tail.
inline double fit_decay_rate(const Trajectory& tr, double burn_in_fraction) {
  if (!(burn_in_fraction >= 0.0 && burn_in_fraction < 1.0))
    throw Error("fit_decay_rate: burn-in fraction must lie in [0, 1)");
  const double t0 = burn_in_fraction * tr.horizon;
  if (tr.horizon - t0 < 4.0)
    throw Error("fit_decay_rate: need at least 4 unit windows after burn-in");
  std::vector<double> ts, ys;
  for (double t = tr.horizon; t >= t0; t -= 1.0) {
    const int i = static_cast<int>(std::llround((t + 1.0) * tr.n));
    if (i < tr.n || i >= static_cast<int>(tr.window_norms.size())) continue;
    const double w = tr.window_norms[static_cast<std::size_t>(i)];
    if (w < 1e-300) continue;  // fully decayed
    ts.push_back(t);
    ys.push_back(std::log(w));
  }
  if (ts.empty()) return -kInf;
  if (ts.size() < 2)
    throw Error("fit_decay_rate: not enough usable windows after truncation");
  double mt = 0.0, my = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    mt += ts[i];
    my += ys[i];
  }
  mt /= ts.size();
  my /= ts.size();
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    num += (ts[i] - mt) * (ys[i] - my);
    den += (ts[i] - mt) * (ts[i] - mt);
  }
  return num / den;
}

}  // namespace delaystab
