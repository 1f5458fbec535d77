// Copyright (c) 2026 the delaystab authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: parse system/perturbation files, run the analyses,
// and emit human-readable verdicts plus machine-readable JSON/CSV artifacts.
//
// Exit codes: 0 stable certificate, 1 fragile/unstable (or failed
// destabilizer hypothesis), 2 indeterminate/uncertified or numerical
// failure, 3 input error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "delaystab/delaystab.hpp"

namespace {

using namespace delaystab;

struct GlobalOpts {
  std::string out_dir = ".";
  std::string norm_override;
  std::uint64_t seed = 12345;
  bool json = false;
};

std::string out_path(const GlobalOpts& g, const std::string& name) {
  return (std::filesystem::path(g.out_dir) / name).string();
}

MatrixNBV load_with_norm(const std::string& path, const GlobalOpts& g) {
  MatrixNBV m = load_system(path);
  if (!g.norm_override.empty()) m.norm = op_norm_from_name(g.norm_override);
  return m;
}

void print_verdict_human(const Verdict& v) {
  std::printf("classification: %s\n", classification_name(v.classification));
  std::printf("  Var(M)            = %s  (norm %s)\n",
              format_double(v.var_tv).c_str(), op_norm_name(v.norm));
  std::printf("  rho_HS bounds     = [%s, %s]\n",
              format_double(v.rho_hs_lower).c_str(),
              format_double(v.rho_hs_upper).c_str());
  std::printf("  abscissa bracket  = [%s, %s]  (%s)\n",
              format_double(v.abscissa_lo).c_str(),
              format_double(v.abscissa_hi).c_str(), v.window_tag.c_str());
  std::printf("  certified bound   = %s\n",
              format_double(v.certified_bound).c_str());
  std::printf("  det(I - A_M)      = %s\n",
              format_double(v.wellposed_det).c_str());
}

int cmd_analyze(const std::string& system_file, const GlobalOpts& g,
                AnalyzeOptions opts) {
  const MatrixNBV m = load_with_norm(system_file, g);
  opts.seed = g.seed;
  const AnalysisResult res = run_analyze(m, opts);
  write_file(out_path(g, "verdict.json"), verdict_to_json(res.verdict));
  write_file(out_path(g, "roots.csv"), roots_to_csv(res.spectrum));
  if (g.json)
    std::fputs(verdict_to_json(res.verdict).c_str(), stdout);
  else
    print_verdict_human(res.verdict);
  return classification_exit_code(res.verdict.classification);
}

int cmd_roots(const std::string& system_file, const GlobalOpts& g,
              const StripQuery& q) {
  const MatrixNBV m = load_with_norm(system_file, g);
  const SpectrumResult r = spectral_abscissa(m, q);
  const std::string csv = roots_to_csv(r);
  write_file(out_path(g, "roots.csv"), csv);
  std::fputs(csv.c_str(), stdout);
  std::fprintf(stderr, "abscissa bracket [%s, %s] (%s)\n",
               format_double(r.abscissa_lo).c_str(),
               format_double(r.abscissa_hi).c_str(), r.tag.c_str());
  return 0;
}

int cmd_perturb_single(const std::string& system_file,
                       const std::string& pert_file, const GlobalOpts& g,
                       AnalyzeOptions opts) {
  const MatrixNBV m = load_with_norm(system_file, g);
  const Perturbation phi = load_perturbation(pert_file);
  const MatrixNBV pushed = pushforward(m, phi);
  const WellPosed wp = check_wellposed(pushed);
  if (!wp.ok) {
    std::printf("pushforward is not well posed: det(I - A_M) = %s\n",
                format_double(wp.det).c_str());
    return 2;
  }
  opts.seed = g.seed;
  const AnalysisResult res = run_analyze(pushed, opts);
  write_file(out_path(g, "perturb_verdict.json"), verdict_to_json(res.verdict));
  if (g.json)
    std::fputs(verdict_to_json(res.verdict).c_str(), stdout);
  else {
    std::printf("perturbed abscissa bracket [%s, %s] (%s)\n",
                format_double(res.verdict.abscissa_lo).c_str(),
                format_double(res.verdict.abscissa_hi).c_str(),
                res.verdict.window_tag.c_str());
    print_verdict_human(res.verdict);
  }
  return classification_exit_code(res.verdict.classification);
}

int cmd_perturb_random(const std::string& system_file, const GlobalOpts& g,
                       double eps, int trials, const StripQuery& q) {
  const MatrixNBV m = load_with_norm(system_file, g);
  const HsEstimate est = estimate_rho_hs(m, -1, 16, g.seed);
  const StrongStabilityReport rep =
      sample_strong_stability(m, eps, trials, g.seed, q);
  write_file(out_path(g, "perturb_report.json"),
             strong_stability_report_to_json(rep, est));
  write_file(out_path(g, "trials.csv"), trials_to_csv(rep));
  std::printf("trials=%d skipped=%d max abscissa=%s max certified bound=%s\n",
              rep.trials, rep.skipped, format_double(rep.max_abscissa).c_str(),
              format_double(rep.max_certified_bound).c_str());
  if (rep.expects_negative && rep.max_abscissa >= 0.0) {
    std::printf("violation: rho_HS lower %s < 1 but a sampled abscissa is "
                "nonnegative\n",
                format_double(rep.rho_lower).c_str());
    return 2;
  }
  return 0;
}

int cmd_destabilize(const std::string& system_file, const GlobalOpts& g,
                    double eps, double delta) {
  const MatrixNBV m = load_with_norm(system_file, g);
  DestabilizerResult d;
  try {
    d = build_destabilizer(m, eps, delta, g.seed);
  } catch (const Error& e) {
    std::fprintf(stderr, "destabilize refused: %s\n", e.what());
    return 1;
  }
  const MatrixNBV pushed = pushforward(m, d.phi);
  StripQuery q;
  q.re_min = -4.0;
  q.re_max = std::log(d.rho0) + 2.0;
  q.im_max = d.suggested_im_max;
  const SpectrumResult sr = spectral_abscissa(pushed, q);
  write_file(out_path(g, "perturbation.json"), serialize_perturbation(d.phi));
  write_file(out_path(g, "destabilize_report.json"),
             destabilizer_report_to_json(d, sr.abscissa()));
  std::printf("wrote perturbation with |phi - id| = %s\n",
              format_double(d.norm_phi_minus_id).c_str());
  std::printf("achieved abscissa %s vs target ln(rho_HS) - delta = %s\n",
              format_double(sr.abscissa()).c_str(),
              format_double(d.target_abscissa).c_str());
  return 0;
}

int cmd_simulate(const std::string& system_file, const GlobalOpts& g,
                 const std::string& ic, double s_re, double s_im,
                 const std::string& ic_file, double horizon, int n,
                 double burn_in) {
  const MatrixNBV m = load_with_norm(system_file, g);
  std::vector<Vec> phi0(static_cast<std::size_t>(n) + 1);
  if (ic == "const") {
    for (auto& x : phi0) x = Vec::Ones(m.dimension);
  } else if (ic == "exp") {
    const Complex s(s_re, s_im);
    const CMat a = CMat::Identity(m.dimension, m.dimension) - eval_L(m, s);
    Eigen::JacobiSVD<CMat> svd(a, Eigen::ComputeFullV);
    const CVec v = svd.matrixV().col(m.dimension - 1);
    for (int i = 0; i <= n; ++i) {
      const double theta = -1.0 + static_cast<double>(i) / n;
      const CVec w = std::exp(s * theta) * v;
      phi0[static_cast<std::size_t>(i)] = w.real();
    }
  } else if (ic == "file") {
    const std::string text = read_file(ic_file);
    std::vector<std::vector<double>> rows;
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::vector<double> row;
      std::istringstream ls(line);
      std::string cell;
      while (std::getline(ls, cell, ',')) {
        try {
          row.push_back(std::stod(cell));
        } catch (const std::exception&) {
          throw ParseError(ic_file + ": bad number \"" + cell + "\"");
        }
      }
      if (static_cast<int>(row.size()) != m.dimension + 1)
        throw ParseError(ic_file + ": each row needs t,x_1..x_d");
      rows.push_back(std::move(row));
    }
    if (rows.size() < 2) throw ParseError(ic_file + ": need at least 2 samples");
    for (int i = 0; i <= n; ++i) {
      const double theta = -1.0 + static_cast<double>(i) / n;
      std::size_t j = 0;
      while (j + 2 < rows.size() && rows[j + 1][0] <= theta) ++j;
      const double t0 = rows[j][0], t1 = rows[j + 1][0];
      const double w = t1 > t0 ? std::clamp((theta - t0) / (t1 - t0), 0.0, 1.0) : 0.0;
      Vec x(m.dimension);
      for (int c = 0; c < m.dimension; ++c)
        x(c) = rows[j][c + 1] * (1.0 - w) + rows[j + 1][c + 1] * w;
      phi0[static_cast<std::size_t>(i)] = x;
    }
  } else {
    throw ParseError("--ic: expected const, exp, or file");
  }

  const Trajectory tr = integrate(m, phi0, horizon, n);
  if (tr.interpolated_delays)
    std::fprintf(stderr,
                 "warning: some delays are not grid aligned; linear "
                 "interpolation is in effect\n");
  write_file(out_path(g, "trajectory.csv"), trajectory_to_csv(tr));
  write_file(out_path(g, "windows.csv"), window_norms_to_csv(tr));
  const double rate = fit_decay_rate(tr, burn_in);
  std::printf("fitted decay rate: %s\n", format_double(rate).c_str());
  if (!m.is_zero()) {
    const SpectrumResult sr = spectral_abscissa(m, StripQuery{});
    std::printf("abscissa bracket:  [%s, %s] (%s)\n",
                format_double(sr.abscissa_lo).c_str(),
                format_double(sr.abscissa_hi).c_str(), sr.tag.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stability analysis of linear functional equations with "
               "distributed delays"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--out-dir", g.out_dir, "directory for report files");
  app.add_option("--norm", g.norm_override, "matrix norm: op2, op1, opinf");
  app.add_option("--seed", g.seed, "seed for randomized components");
  app.add_flag("--json", g.json, "print machine-readable JSON to stdout");

  StripQuery q;
  AnalyzeOptions aopts;
  auto add_strip_flags = [&](CLI::App* sub) {
    sub->add_option("--re-min", q.re_min, "strip left edge");
    sub->add_option("--re-max", q.re_max, "strip right edge");
    sub->add_option("--im-max", q.im_max, "strip half-height (0 = auto)");
    sub->add_option("--grid-density", q.grid_density, "Newton seeds per unit");
  };

  std::string system_file, pert_file, ic = "const", ic_file;
  double eps = 0.1, delta = 0.1, s_re = 0.0, s_im = 0.0, horizon = 60.0,
         burn_in = 0.5;
  int trials = 100, n = 512;
  bool random_mode = false;

  // Global flags remain usable after a subcommand name.
  app.fallthrough();

  CLI::App* analyze = app.add_subcommand("analyze", "full stability verdict");
  analyze->add_option("system", system_file)->required();
  analyze->add_option("--bins", aopts.bin_count, "torus bins (-1 = auto)");
  analyze->add_option("--restarts", aopts.restarts, "torus multistarts");
  add_strip_flags(analyze);

  CLI::App* roots = app.add_subcommand("roots", "dump root list for a strip");
  roots->add_option("system", system_file)->required();
  add_strip_flags(roots);

  CLI::App* perturb = app.add_subcommand("perturb", "analyze a perturbed system");
  perturb->add_option("system", system_file)->required();
  perturb->add_option("perturbation", pert_file);
  perturb->add_flag("--random", random_mode, "sample random perturbations");
  perturb->add_option("--eps", eps, "perturbation size bound");
  perturb->add_option("--trials", trials, "number of random perturbations");
  add_strip_flags(perturb);

  CLI::App* destab = app.add_subcommand("destabilize",
                                        "construct a destabilizing perturbation");
  destab->add_option("system", system_file)->required();
  destab->add_option("--eps", eps, "perturbation size bound")->required();
  destab->add_option("--delta", delta, "abscissa slack below ln(rho_HS)")
      ->required();

  CLI::App* simulate = app.add_subcommand("simulate", "integrate and fit decay");
  simulate->add_option("system", system_file)->required();
  simulate->add_option("--ic", ic, "initial condition: const, exp, file");
  simulate->add_option("--s-re", s_re, "Re s for --ic exp");
  simulate->add_option("--s-im", s_im, "Im s for --ic exp");
  simulate->add_option("--ic-file", ic_file, "CSV t,x_1..x_d for --ic file");
  simulate->add_option("--T", horizon, "horizon");
  simulate->add_option("--n", n, "grid resolution (steps per unit)");
  simulate->add_option("--burn-in", burn_in, "burn-in fraction for the fit");

  CLI11_PARSE(app, argc, argv);

  try {
    std::filesystem::create_directories(g.out_dir);
    if (*analyze) {
      aopts.query = q;
      return cmd_analyze(system_file, g, aopts);
    }
    if (*roots) return cmd_roots(system_file, g, q);
    if (*perturb) {
      if (random_mode) return cmd_perturb_random(system_file, g, eps, trials, q);
      if (pert_file.empty())
        throw ParseError("perturb: give a perturbation file or --random");
      aopts.query = q;
      return cmd_perturb_single(system_file, pert_file, g, aopts);
    }
    if (*destab) return cmd_destabilize(system_file, g, eps, delta);
    if (*simulate)
      return cmd_simulate(system_file, g, ic, s_re, s_im, ic_file, horizon, n,
                          burn_in);
  } catch (const ParseError& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return 3;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
