// Command-line surface over the library: solves, fundamental solutions,
// constants reports, barrier certification, ensemble verification, ratio
// fits, and bound evaluation.  Exit codes: 0 all checks pass, 1 hard
// failure, 2 configuration error.
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "pargrow/barriers.hpp"
#include "pargrow/constants.hpp"
#include "pargrow/geometry.hpp"
#include "pargrow/harness.hpp"
#include "pargrow/solver.hpp"

using namespace pargrow;

namespace {

std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw std::invalid_argument("cannot open output file " + out_path);
  out << text;
}

struct CommonOpts {
  double lambda = 1.0;
  double Lambda = 2.0;
  int N = 1;
  int grid = 0;
  double kappa = 0.5;
  std::string out;
};

void add_ellipticity(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--lambda", o.lambda, "lower ellipticity constant");
  cmd->add_option("--Lambda", o.Lambda, "upper ellipticity constant");
  cmd->add_option("--N", o.N, "spatial dimension (1 or 2)");
}

EllipticityPair make_ell(const CommonOpts& o) {
  return EllipticityPair(o.lambda, o.Lambda);
}

int run_solve(const CommonOpts& o, const std::string& kind,
              const std::string& source_path, double cyl_r, double cyl_x0,
              double cyl_y0, double cyl_t0, int frames) {
  const EllipticityPair ell = make_ell(o);
  IndicatorSet src;
  if (!source_path.empty()) {
    std::ifstream in(source_path);
    if (!in) throw std::invalid_argument("cannot read source file " + source_path);
    src = IndicatorSet::from_text(in);
  } else {
    if (!(cyl_r > 0.0)) {
      throw std::invalid_argument("either --source or --cyl-r is required");
    }
    SolveGridOptions gopt;
    gopt.axis_nodes = o.grid;
    GridPtr grid = make_solve_grid(o.N, ell, gopt);
    src = make_indicator(grid, [&](const double* x, double t) {
      double d2 = (x[0] - cyl_x0) * (x[0] - cyl_x0);
      if (o.N == 2) d2 += (x[1] - cyl_y0) * (x[1] - cyl_y0);
      return d2 < cyl_r * cyl_r && t <= cyl_t0 && t > cyl_t0 - cyl_r * cyl_r;
    });
  }
  if (src.set_count == 0) {
    throw std::invalid_argument("source rasterizes to no cells");
  }
  OperatorSpec spec;
  spec.ell = ell;
  spec.frames = frames;
  if (kind == "pucci-minus") {
    spec.kind = OperatorKind::PucciMinus;
  } else if (kind == "pucci-plus") {
    spec.kind = OperatorKind::PucciPlus;
  } else {
    throw std::invalid_argument("unknown operator kind " + kind);
  }
  const IndicatorSet& ind = src;
  CellFn cells = [&ind](const Grid&, int node, int level) {
    return ind.cell(level, node) ? 1.0 : 0.0;
  };
  const GridFunction u = solve(src.grid, spec, cells, zero_cells());
  emit(u.to_text(), o.out);
  std::cerr << "solved " << src.set_count << " source cells, "
            << u.stored_count() << " stored levels\n";
  return 0;
}

int run_fundamental(const CommonOpts& o, double r, double x0, double y0,
                    double t0, int frames) {
  const EllipticityPair ell = make_ell(o);
  SolveGridOptions gopt;
  gopt.axis_nodes = o.grid;
  GridPtr grid = make_solve_grid(o.N, ell, gopt);
  const IndicatorSet gamma = make_indicator(grid, [&](const double* x, double t) {
    double d2 = (x[0] - x0) * (x[0] - x0);
    if (o.N == 2) d2 += (x[1] - y0) * (x[1] - y0);
    return d2 < r * r && t <= t0 && t > t0 - r * r;
  });
  if (gamma.set_count == 0) {
    throw std::invalid_argument("source cylinder rasterizes to no cells");
  }
  const GridFunction w = fundamental_solution(gamma, ell, frames);
  emit(w.to_text(), o.out);
  std::cerr << "source measure " << fmt_g17(gamma.normalized_measure) << ", "
            << w.stored_count() << " stored levels\n";
  return 0;
}

int run_constants(const CommonOpts& o, const FSConfig& fs) {
  const ConstantsReport rep =
      build_constants_report(o.kappa, make_ell(o), o.N, fs);
  emit(rep.to_text(), o.out);
  return 0;
}

int run_certify(const BarrierParams& p, int samples) {
  const BarrierCertificate cert = certify_subsolution(p, -1.0, samples);
  std::string out;
  auto kv = [&out](const char* k, double v) {
    out += k;
    out += ' ';
    out += fmt_g17(v);
    out += '\n';
  };
  kv("theta", p.theta);
  kv("delta", p.delta);
  kv("eta", p.eta);
  kv("tau1", p.tau1);
  kv("tau2", p.tau2);
  kv("lambda", p.ell.lambda);
  kv("Lambda", p.ell.Lambda);
  kv("N", p.dim);
  kv("drift_bound", cert.drift_bound);
  kv("C0", cert.C0);
  kv("alpha_threshold", alpha_threshold(p));
  kv("alpha", cert.alpha);
  kv("residual_max", cert.residual_max);
  kv("worst_x", cert.worst_x[0]);
  kv("worst_t", cert.worst_t);
  kv("samples", static_cast<double>(cert.sample_count));
  kv("gamma_log10", cert.log_gamma_final / std::log(10.0));
  out += cert.valid ? "valid 1\n" : "valid 0\n";
  std::cout << out;
  return cert.valid ? 0 : 1;
}

EnsembleConfig suite_config(const CommonOpts& o, long seed, int count,
                            const FSConfig& fs, int fs_samples, long fs_seed,
                            bool inject) {
  EnsembleConfig cfg;
  cfg.seed = seed;
  cfg.count = count;
  cfg.kappa = o.kappa;
  cfg.ell = make_ell(o);
  cfg.N = o.N;
  cfg.axis_nodes = o.grid;
  cfg.fs = fs;
  cfg.fs_fit_samples = fs_samples;
  cfg.fs_fit_seed = fs_seed;
  cfg.inject_sign_flip = inject;
  return cfg;
}

void suite_summary(const VerificationReport& rep) {
  std::cerr << rep.rows.size() << " members, " << rep.agg.fail_count
            << " failures, C_emp " << fmt_g17(rep.agg.abp_C_emp)
            << ", refinement ratio " << fmt_g17(rep.abp_refinement_ratio)
            << "\nfs sigma_hat " << fmt_g17(rep.fs.sigma_hat) << " C_hat "
            << fmt_g17(rep.fs.C_hat) << " r2 " << fmt_g17(rep.fs.r2)
            << "\nelliptic slope " << fmt_g17(rep.elliptic_slope) << ", "
            << (rep.all_pass ? "all checks passed" : "HARD FAILURE") << "\n";
}

int run_verify(const CommonOpts& o, long seed, int count, const FSConfig& fs,
               int fs_samples, long fs_seed, bool inject,
               const std::string& format, bool with_constants) {
  const VerificationReport rep =
      run_suite(suite_config(o, seed, count, fs, fs_samples, fs_seed, inject));
  std::string text;
  if (with_constants) {
    text += build_constants_report(o.kappa, make_ell(o), o.N, fs).to_text();
  }
  if (format == "csv") {
    text += rep.to_csv();
  } else if (format == "json-lines") {
    text += rep.to_json_lines();
  } else {
    throw std::invalid_argument("unknown format " + format);
  }
  emit(text, o.out);
  suite_summary(rep);
  return rep.all_pass ? 0 : 1;
}

int run_fs_fit(const CommonOpts& o, double r, int samples, long seed) {
  const FSFitReport rep = fs_fit(r, samples, seed, make_ell(o), o.grid);
  std::string out = "density,ratio,x,t\n";
  for (const FSSample& s : rep.samples) {
    out += fmt_g17(s.density) + "," + fmt_g17(s.ratio) + "," + fmt_g17(s.x) +
           "," + fmt_g17(s.t) + "\n";
  }
  out += "sigma_hat " + fmt_g17(rep.sigma_hat) + "\n";
  out += "C_hat " + fmt_g17(rep.C_hat) + "\n";
  out += "C_envelope " + fmt_g17(rep.C_envelope) + "\n";
  out += "r2 " + fmt_g17(rep.r2) + "\n";
  out += rep.monotone_ok ? "monotone 1\n" : "monotone 0\n";
  emit(out, o.out);
  return rep.monotone_ok ? 0 : 1;
}

int run_elliptic(const CommonOpts& o, double r, double horizon) {
  const EllipticRow row =
      elliptic_limit_run(r, horizon, make_ell(o), o.kappa, o.grid);
  std::string out;
  out += "r " + fmt_g17(row.r) + "\n";
  out += "converged " + std::string(row.converged ? "1" : "0") + "\n";
  out += "time_to_steady " + fmt_g17(row.time_to_steady) + "\n";
  out += "steady_center " + fmt_g17(row.steady_center) + "\n";
  out += "steady_core_min " + fmt_g17(row.steady_core_min) + "\n";
  out += "bound_log10 " + fmt_g17(row.bound_log10) + "\n";
  out += "closed_form_err " + fmt_g17(row.closed_form_err) + "\n";
  out += row.pass ? "pass 1\n" : "pass 0\n";
  emit(out, o.out);
  return row.pass ? 0 : 1;
}

int run_bound(const CommonOpts& o, const FSConfig& fs, double m, double level,
              double fnorm, double prop_r, double elliptic_r) {
  const EllipticityPair ell = make_ell(o);
  std::string out;
  auto kv = [&out](const char* k, double v) {
    out += k;
    out += ' ';
    out += fmt_g17(v);
    out += '\n';
  };
  int picked = (m >= 0.0) + (fnorm >= 0.0) + (prop_r > 0.0) + (elliptic_r > 0.0);
  if (picked != 1) {
    throw std::invalid_argument(
        "pick exactly one of --m (with --level), --fnorm, --prop-r, "
        "--elliptic-r");
  }
  if (fnorm >= 0.0) {
    const TsfsBound b = thm_tsfs_bound(fnorm, o.kappa, ell, o.N, fs);
    kv("fnorm", fnorm);
    kv("bound_log10", b.bound.log10());
    kv("bound", b.bound.value());
    kv("alpha", b.alpha);
    kv("alpha_capped", b.alpha_capped ? 1.0 : 0.0);
    kv("window_t0", b.window_t0);
  } else if (m >= 0.0) {
    if (level < 0.0) throw std::invalid_argument("--m requires --level");
    const PosLog b = thm_lb_bound(m, level, o.kappa, ell, o.N, fs);
    kv("m", m);
    kv("level", level);
    kv("bound_log10", b.log10());
    kv("bound", b.value());
  } else if (prop_r > 0.0) {
    const PropBound b = prop_qlbnd_bound(prop_r, o.kappa, ell, o.N);
    kv("r", prop_r);
    kv("bound_log10", b.bound.log10());
    kv("bound", b.bound.value());
    kv("chain_steps", static_cast<double>(b.chain_steps));
    kv("easy_branch", b.easy_branch ? 1.0 : 0.0);
  } else {
    const PosLog b = elliptic_limit_bound(elliptic_r, o.kappa, ell, o.N);
    kv("r", elliptic_r);
    kv("bound_log10", b.log10());
    kv("bound", b.value());
  }
  emit(out, o.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantitative growth estimates for fully nonlinear parabolic "
               "equations: solves, constants, and verification"};
  app.require_subcommand(1);

  CommonOpts o;
  FSConfig fs;
  long seed = 42, fs_seed = 17;
  int count = 50, fs_samples = 40, samples = 1000, frames = 5;
  bool inject = false;
  std::string format = "csv", kind = "pucci-minus", source_path;
  double cyl_r = 0.0, cyl_x0 = 0.0, cyl_y0 = 0.0, cyl_t0 = 0.0;
  double fund_r = 0.25, fund_x0 = 0.0, fund_y0 = 0.0, fund_t0 = 0.0;
  BarrierParams bp;
  bp.theta = 0.5;
  bp.delta = 0.25;
  bp.eta = 1.0;
  bp.tau1 = 0.75;
  bp.tau2 = 0.75;
  double fit_r = 0.25, ell_r = 0.25, horizon = 5.0;
  double bm = -1.0, blevel = -1.0, bfnorm = -1.0, bprop_r = 0.0, bell_r = 0.0;

  CLI::App* c_solve = app.add_subcommand("solve", "march one operator over a "
                                                  "rasterized source");
  add_ellipticity(c_solve, o);
  c_solve->add_option("--grid", o.grid, "axis nodes (0 = default)");
  c_solve->add_option("--kind", kind, "pucci-minus or pucci-plus");
  c_solve->add_option("--frames", frames, "direction pairs for dim 2");
  c_solve->add_option("--source", source_path, "indicator set file");
  c_solve->add_option("--cyl-r", cyl_r, "source cylinder radius");
  c_solve->add_option("--cyl-x0", cyl_x0, "source cylinder center");
  c_solve->add_option("--cyl-y0", cyl_y0, "source cylinder center (dim 2)");
  c_solve->add_option("--cyl-t0", cyl_t0, "source cylinder top time");
  c_solve->add_option("--out", o.out, "output file (default stdout)");

  CLI::App* c_fund = app.add_subcommand("fundamental",
                                        "fundamental solution of a cylinder");
  add_ellipticity(c_fund, o);
  c_fund->add_option("--grid", o.grid, "axis nodes (0 = default)");
  c_fund->add_option("--r", fund_r, "cylinder radius");
  c_fund->add_option("--x0", fund_x0, "cylinder center");
  c_fund->add_option("--y0", fund_y0, "cylinder center (dim 2)");
  c_fund->add_option("--t0", fund_t0, "cylinder top time");
  c_fund->add_option("--frames", frames, "direction pairs for dim 2");
  c_fund->add_option("--out", o.out, "output file (default stdout)");

  CLI::App* c_const = app.add_subcommand("constants",
                                         "derived constants report");
  add_ellipticity(c_const, o);
  c_const->add_option("--kappa", o.kappa, "core radius");
  c_const->add_option("--fs-sigma", fs.sigma, "empirical ratio exponent");
  c_const->add_option("--fs-C", fs.C_cfs, "empirical ratio constant");
  c_const->add_option("--out", o.out, "output file (default stdout)");

  CLI::App* c_cert = app.add_subcommand("certify-barrier",
                                        "certify one barrier parameter set");
  c_cert->add_option("--theta", bp.theta, "annulus inner radius");
  c_cert->add_option("--delta", bp.delta, "initial disc radius");
  c_cert->add_option("--eta", bp.eta, "drift budget");
  c_cert->add_option("--tau1", bp.tau1, "lower time dilation");
  c_cert->add_option("--tau2", bp.tau2, "upper time dilation");
  c_cert->add_option("--lambda", bp.ell.lambda, "lower ellipticity constant");
  c_cert->add_option("--Lambda", bp.ell.Lambda, "upper ellipticity constant");
  c_cert->add_option("--N", bp.dim, "spatial dimension (1 or 2)");
  c_cert->add_option("--samples", samples, "sample density per axis");

  CLI::App* c_verify = app.add_subcommand("verify", "run the verification "
                                                    "ensemble");
  add_ellipticity(c_verify, o);
  c_verify->add_option("--grid", o.grid, "axis nodes (0 = default)");
  c_verify->add_option("--kappa", o.kappa, "core radius");
  c_verify->add_option("--seed", seed, "ensemble seed");
  c_verify->add_option("--count", count, "ensemble size");
  c_verify->add_option("--fs-sigma", fs.sigma, "empirical ratio exponent");
  c_verify->add_option("--fs-C", fs.C_cfs, "empirical ratio constant");
  c_verify->add_option("--fs-samples", fs_samples, "ratio sweep size");
  c_verify->add_option("--fs-seed", fs_seed, "ratio sweep seed");
  c_verify->add_option("--format", format, "csv or json-lines");
  c_verify->add_option("--out", o.out, "output file (default stdout)");
  c_verify->add_flag("--inject-sign-flip", inject,
                     "fault injection: negate every source");

  CLI::App* c_fit = app.add_subcommand("fs-fit", "fundamental-solution ratio "
                                                 "sweep and power-law fit");
  add_ellipticity(c_fit, o);
  c_fit->add_option("--grid", o.grid, "axis nodes (0 = default)");
  c_fit->add_option("--r", fit_r, "source cylinder radius");
  c_fit->add_option("--samples", fs_samples, "subset samples");
  c_fit->add_option("--seed", fs_seed, "subset seed");
  c_fit->add_option("--out", o.out, "output file (default stdout)");

  CLI::App* c_ell = app.add_subcommand("elliptic-limit", "long-time march to "
                                                         "the steady state");
  add_ellipticity(c_ell, o);
  c_ell->add_option("--grid", o.grid, "axis nodes (0 = default)");
  c_ell->add_option("--kappa", o.kappa, "core radius");
  c_ell->add_option("--r", ell_r, "source ball radius");
  c_ell->add_option("--horizon", horizon, "march duration (>= 4)");
  c_ell->add_option("--out", o.out, "output file (default stdout)");

  CLI::App* c_report = app.add_subcommand("report", "constants report plus "
                                                    "verification output");
  add_ellipticity(c_report, o);
  c_report->add_option("--grid", o.grid, "axis nodes (0 = default)");
  c_report->add_option("--kappa", o.kappa, "core radius");
  c_report->add_option("--seed", seed, "ensemble seed");
  c_report->add_option("--count", count, "ensemble size");
  c_report->add_option("--fs-sigma", fs.sigma, "empirical ratio exponent");
  c_report->add_option("--fs-C", fs.C_cfs, "empirical ratio constant");
  c_report->add_option("--fs-samples", fs_samples, "ratio sweep size");
  c_report->add_option("--fs-seed", fs_seed, "ratio sweep seed");
  c_report->add_option("--format", format, "csv or json-lines");
  c_report->add_option("--out", o.out, "output file (default stdout)");

  CLI::App* c_bound = app.add_subcommand("bound", "evaluate one lower-bound "
                                                  "closure");
  add_ellipticity(c_bound, o);
  c_bound->add_option("--kappa", o.kappa, "core radius");
  c_bound->add_option("--fs-sigma", fs.sigma, "empirical ratio exponent");
  c_bound->add_option("--fs-C", fs.C_cfs, "empirical ratio constant");
  c_bound->add_option("--m", bm, "measure fraction (with --level)");
  c_bound->add_option("--level", blevel, "source level on the set");
  c_bound->add_option("--fnorm", bfnorm, "source norm for the two-sided form");
  c_bound->add_option("--prop-r", bprop_r, "cylinder radius for the chained "
                                           "bound");
  c_bound->add_option("--elliptic-r", bell_r, "ball radius for the long-time "
                                              "bound");
  c_bound->add_option("--out", o.out, "output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (c_solve->parsed()) {
      return run_solve(o, kind, source_path, cyl_r, cyl_x0, cyl_y0, cyl_t0,
                       frames);
    }
    if (c_fund->parsed()) {
      return run_fundamental(o, fund_r, fund_x0, fund_y0, fund_t0, frames);
    }
    if (c_const->parsed()) return run_constants(o, fs);
    if (c_cert->parsed()) return run_certify(bp, samples);
    if (c_verify->parsed()) {
      return run_verify(o, seed, count, fs, fs_samples, fs_seed, inject,
                        format, false);
    }
    if (c_fit->parsed()) return run_fs_fit(o, fit_r, fs_samples, fs_seed);
    if (c_ell->parsed()) return run_elliptic(o, ell_r, horizon);
    if (c_report->parsed()) {
      return run_verify(o, seed, count, fs, fs_samples, fs_seed, false,
                        format, true);
    }
    if (c_bound->parsed()) {
      return run_bound(o, fs, bm, blevel, bfnorm, bprop_r, bell_r);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const geometry_error& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "hard failure: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
