// Copyright (c) 2026 the delaystab authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "delaystab/hs.hpp"
#include "delaystab/io.hpp"
#include "delaystab/nbv.hpp"
#include "delaystab/simulate.hpp"
#include "delaystab/spectrum.hpp"
#include "delaystab/types.hpp"

namespace delaystab {

enum class Classification {
  CertifiedStronglyStable,
  LikelyStronglyStable,
  Fragile,
  Unstable,
  Indeterminate,
};

inline const char* classification_name(Classification c) {
  switch (c) {
    case Classification::CertifiedStronglyStable:
      return "certified-strongly-stable";
    case Classification::LikelyStronglyStable:
      return "likely-strongly-stable";
    case Classification::Fragile: return "fragile";
    case Classification::Unstable: return "unstable";
    default: return "indeterminate";
  }
}

/// Exit-code contract: 0 stable certificate, 1 fragile/unstable,
/// 2 indeterminate or uncertified, 3 input error (mapped by the CLI).
inline int classification_exit_code(Classification c) {
  switch (c) {
    case Classification::CertifiedStronglyStable: return 0;
    case Classification::Fragile:
    case Classification::Unstable: return 1;
    default: return 2;
  }
}

/// Total decision table over the analysis fields. Priority order makes the
/// outcome unique; the individual characterizations (certificate iff
/// rho_upper < 1; unstable iff abscissa_lo > 0; fragile iff abscissa_hi < 0
/// and rho_lower >= 1) cannot overlap for sound inputs since
/// rho_upper < 1 forces a negative abscissa.
inline Classification classify(bool wellposed, double rho_lower,
                               double rho_upper, double abscissa_lo,
                               double abscissa_hi) {
  if (!wellposed) return Classification::Indeterminate;
  if (rho_upper < 1.0) return Classification::CertifiedStronglyStable;
  if (abscissa_lo > 0.0) return Classification::Unstable;
  if (abscissa_hi < 0.0)
    return rho_lower >= 1.0 ? Classification::Fragile
                            : Classification::LikelyStronglyStable;
  return Classification::Indeterminate;
}

struct Verdict {
  double var_tv = 0.0;
  double rho_hs_lower = 0.0;
  double rho_hs_upper = 0.0;
  double abscissa_lo = -kInf;
  double abscissa_hi = -kInf;
  std::string window_tag;
  double certified_bound = -kInf;
  double wellposed_det = 1.0;
  bool wellposed = true;
  OpNorm norm = OpNorm::Op2;
  Classification classification = Classification::Indeterminate;
};

struct AnalyzeOptions {
  StripQuery query;
  int bin_count = -1;
  int restarts = 16;
  std::uint64_t seed = 12345;
};

struct AnalysisResult {
  Verdict verdict;
  SpectrumResult spectrum;
  HsEstimate hs;
};

/// The full analysis pipeline: variation, well-posedness, certified bound,
/// root search, torus bounds, classification.
inline AnalysisResult run_analyze(const MatrixNBV& m,
                                  const AnalyzeOptions& opts = {}) {
  AnalysisResult out;
  Verdict& v = out.verdict;
  v.norm = m.norm;
  v.var_tv = total_variation(m);
  const WellPosed wp = check_wellposed(m);
  v.wellposed = wp.ok;
  v.wellposed_det = wp.det;

  out.hs = estimate_rho_hs(m, opts.bin_count, opts.restarts, opts.seed);
  v.rho_hs_lower = out.hs.lower;
  v.rho_hs_upper = out.hs.upper;

  if (wp.ok) {
    const MatrixNBV reduced = reduce_zero_atom(m);
    v.certified_bound =
        reduced.is_zero() ? -kInf : certified_growth_bound(reduced);
    out.spectrum = spectral_abscissa(m, opts.query);
    v.abscissa_lo = out.spectrum.abscissa_lo;
    v.abscissa_hi = out.spectrum.abscissa_hi;
    v.window_tag = out.spectrum.tag;
  } else {
    v.window_tag = "ill-posed";
  }
  v.classification = classify(v.wellposed, v.rho_hs_lower, v.rho_hs_upper,
                              v.abscissa_lo, v.abscissa_hi);
  return out;
}

inline std::string verdict_to_json(const Verdict& v) {
  std::string s = "{";
  s += "\"classification\":\"" + std::string(classification_name(v.classification)) + "\"";
  s += ",\"var_tv\":" + json_number(v.var_tv);
  s += ",\"rho_hs_lower\":" + json_number(v.rho_hs_lower);
  s += ",\"rho_hs_upper\":" + json_number(v.rho_hs_upper);
  s += ",\"abscissa\":{\"lo\":" + json_number(v.abscissa_lo) +
       ",\"hi\":" + json_number(v.abscissa_hi) + ",\"tag\":\"" + v.window_tag +
       "\"}";
  s += ",\"certified_bound\":" + json_number(v.certified_bound);
  s += ",\"wellposed\":" + std::string(v.wellposed ? "true" : "false");
  s += ",\"wellposed_det\":" + json_number(v.wellposed_det);
  s += ",\"norm\":\"" + std::string(op_norm_name(v.norm)) + "\"";
  s += "}\n";
  return s;
}

inline std::string roots_to_csv(const SpectrumResult& r) {
  std::string s = "re,im,abs_delta_residual\n";
  for (std::size_t i = 0; i < r.roots.size(); ++i)
    s += format_double(r.roots[i].real()) + "," +
         format_double(r.roots[i].imag()) + "," +
         format_double(r.residuals[i]) + "\n";
  return s;
}

inline std::string trajectory_to_csv(const Trajectory& tr) {
  std::string s = "t";
  const int d = tr.samples.empty() ? 0 : static_cast<int>(tr.samples[0].size());
  for (int c = 1; c <= d; ++c) s += ",x_" + std::to_string(c);
  s += "\n";
  for (std::size_t i = 0; i < tr.samples.size(); ++i) {
    s += format_double(-1.0 + tr.h * static_cast<double>(i));
    for (int c = 0; c < d; ++c) s += "," + format_double(tr.samples[i](c));
    s += "\n";
  }
  return s;
}

inline std::string window_norms_to_csv(const Trajectory& tr) {
  std::string s = "t,sup_norm,log_sup_norm\n";
  for (std::size_t i = static_cast<std::size_t>(tr.n);
       i < tr.window_norms.size(); ++i) {
    const double w = tr.window_norms[i];
    s += format_double(-1.0 + tr.h * static_cast<double>(i)) + "," +
         format_double(w) + "," +
         format_double(w > 0 ? std::log(w) : -kInf) + "\n";
  }
  return s;
}

inline std::string probe_to_csv(const std::vector<ProbeRow>& rows) {
  std::string s = "var_diff,abscissa\n";
  for (const auto& r : rows)
    s += format_double(r.var_diff) + "," + format_double(r.abscissa) + "\n";
  return s;
}

namespace detail {
inline std::string hex_digest(std::uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}
}  // namespace detail

inline std::string bins_to_json(const std::vector<HsBin>& bins) {
  std::string s = "[";
  for (std::size_t k = 0; k < bins.size(); ++k) {
    if (k) s += ",";
    if (bins[k].atom_index >= 0)
      s += "{\"type\":\"atom\",\"index\":" + std::to_string(bins[k].atom_index) + "}";
    else
      s += "{\"type\":\"density\",\"lo\":" + json_number(bins[k].lo) +
           ",\"hi\":" + json_number(bins[k].hi) + "}";
  }
  s += "]";
  return s;
}

/// Report format of the perturbation-sampling runs.
inline std::string strong_stability_report_to_json(
    const StrongStabilityReport& rep, const HsEstimate& est) {
  std::string s = "{";
  s += "\"rho_lower\":" + json_number(rep.rho_lower);
  s += ",\"rho_upper\":" + json_number(rep.rho_upper);
  s += ",\"eps\":" + json_number(rep.eps);
  s += ",\"bins\":" + bins_to_json(est.witness.bins);
  s += ",\"witness_phases\":[";
  for (std::size_t k = 0; k < est.witness.phases.size(); ++k) {
    if (k) s += ",";
    s += json_number(est.witness.phases[k]);
  }
  s += "]";
  s += ",\"trials\":[";
  for (std::size_t i = 0; i < rep.records.size(); ++i) {
    const auto& r = rep.records[i];
    if (i) s += ",";
    s += "{\"phi_digest\":\"" + detail::hex_digest(r.digest) + "\",\"kind\":\"" +
         r.kind + "\",\"wellposed\":" + (r.wellposed ? "true" : "false") +
         ",\"abscissa\":" + json_number(r.abscissa) + "}";
  }
  s += "]";
  s += ",\"max_abscissa\":" + json_number(rep.max_abscissa);
  s += ",\"max_certified_bound\":" + json_number(rep.max_certified_bound);
  s += ",\"skipped\":" + std::to_string(rep.skipped);
  const char* verdict = rep.expects_negative
                            ? (rep.max_abscissa < 0.0 ? "uniformly-stable-sample"
                                                      : "violation-found")
                            : "no-certificate";
  s += ",\"verdict\":\"" + std::string(verdict) + "\"";
  s += "}\n";
  return s;
}

inline std::string trials_to_csv(const StrongStabilityReport& rep) {
  std::string s = "phi_digest,kind,wellposed,abscissa,certified_bound\n";
  for (const auto& r : rep.records)
    s += detail::hex_digest(r.digest) + "," + r.kind + "," +
         (r.wellposed ? "1" : "0") + "," + format_double(r.abscissa) + "," +
         format_double(r.certified_bound) + "\n";
  return s;
}

inline std::string destabilizer_report_to_json(const DestabilizerResult& d,
                                               double achieved_abscissa) {
  std::string s = "{";
  s += "\"rho0\":" + json_number(d.rho0);
  s += ",\"delta1\":" + json_number(d.delta1);
  s += ",\"target_abscissa\":" + json_number(d.target_abscissa);
  s += ",\"achieved_abscissa\":" + json_number(achieved_abscissa);
  s += ",\"achieved_rho\":" + json_number(d.achieved_rho);
  s += ",\"norm_phi_minus_id\":" + json_number(d.norm_phi_minus_id);
  s += ",\"anchor_im\":" + json_number(d.anchor_im);
  s += ",\"suggested_im_max\":" + json_number(d.suggested_im_max);
  s += ",\"taus\":[";
  for (std::size_t i = 0; i < d.taus.size(); ++i) {
    if (i) s += ",";
    s += json_number(d.taus[i]);
  }
  s += "]}\n";
  return s;
}

}  // namespace delaystab
