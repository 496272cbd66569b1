#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "pargrow/barriers.hpp"
#include "pargrow/core.hpp"

namespace pargrow {

/// Nonnegative quantity tracked by its natural log.  The constructive
/// constants involve exponents in the tens of millions, far below double
/// underflow; every pipeline product is carried in log form and `value()` is
/// best-effort.  Zero is ln = -inf.
struct PosLog {
  double ln = -std::numeric_limits<double>::infinity();

  static PosLog zero() { return PosLog{}; }
  static PosLog of(double v);
  static PosLog from_ln(double l) { return PosLog{l}; }

  bool is_zero() const { return std::isinf(ln) && ln < 0.0; }
  double value() const { return std::exp(ln); }
  double log10() const { return ln / 2.302585092994045684; }

  PosLog operator*(const PosLog& o) const { return PosLog{ln + o.ln}; }
  PosLog pow(double e) const;
};

/// Fundamental-solution comparison constants: w(.;E) >= C_cfs *
/// (|E|/|Q_r|)^sigma * w(.;Q_r) away from the source cylinder.  Not derived;
/// the defaults are frozen from this artifact's own ratio sweeps (harness
/// fs_fit, r = 1/4, seeds 17..19: fitted sigma 1.284..1.286, envelope
/// constant 1.0).  sigma is rounded up so C_cfs * d^sigma sits below every
/// observed ratio; every report marks the pair empirical.
struct FSConfig {
  double sigma = 1.29;
  double C_cfs = 1.0;
};

/// Barrier parameter sets used by the pipeline.  All clamp the initial disc
/// to delta <= theta/2 (the certification contract).
BarrierParams chain_step_params(const EllipticityPair& ell, int N);
BarrierParams easy_case_params(double kappa, const EllipticityPair& ell, int N);
BarrierParams core_params(double kappa, const EllipticityPair& ell, int N);
BarrierParams doubling_step_params(const EllipticityPair& ell, int N);
BarrierParams landing_step_params(double r, double kappa,
                                  const EllipticityPair& ell, int N);
BarrierParams slick_landing_params(double kappa, const EllipticityPair& ell,
                                   int N);

/// Lower bound for a nonnegative supersolution of u_t - M^-(D^2 u) >= chi_Q
/// over a unit-strength source cylinder Q_r anywhere in Q_1: value at the
/// top core {|x| <= kappa} x {0}.  Wide radii use one barrier application;
/// small radii go through an oblique chain plus an upright landing step.
struct PropBound {
  PosLog bound;
  long chain_steps = 0;  // 0 on the wide-radius branch
  bool easy_branch = false;
};
PropBound prop_qlbnd_bound(double r, double kappa, const EllipticityPair& ell,
                           int N);

/// Measure-form lower bound: source of strength `level` on a set of measure
/// fraction m.  Valid on {|x| <= kappa} x [-kappa*m, 0].
PosLog thm_lb_bound(double m, double level, double kappa,
                    const EllipticityPair& ell, int N, const FSConfig& fs);

/// Two-sided-reduction lower bound from the source norm alone:
/// m = f_norm^{N+1}/2, level = f_norm/2.  alpha is the implied exponent in
/// c*f_norm^alpha, capped at 1e6 near f_norm = 1 (flagged).
struct TsfsBound {
  PosLog bound;
  double alpha = 0.0;
  bool alpha_capped = false;
  double window_t0 = 0.0;  // window is [window_t0, 0]
};
TsfsBound thm_tsfs_bound(double f_norm, double kappa,
                         const EllipticityPair& ell, int N,
                         const FSConfig& fs);

/// Algebraic (power-law) lower bound for sources supported in the lower
/// cylinder B_{1-kappa} x (-1, -kappa]: c * f_norm^beta with beta independent
/// of f_norm.  The support restriction is the caller's obligation (only the
/// norm is passed here).
PosLog cor_slicklb_bound(double f_norm_lower_cyl, double kappa,
                         const EllipticityPair& ell, int N,
                         const FSConfig& fs);

/// Elliptic (long-time) lower bound for a time-independent source chi_{B_r}:
/// c0 * r^2 * c1^l with l = ceil(log2(kappa/r)) doubling steps (0 for
/// r >= kappa).
PosLog elliptic_limit_bound(double r, double kappa, const EllipticityPair& ell,
                            int N);

/// Everything the pipeline derives for one (kappa, ellipticity, N), plus the
/// empirical FS inputs.  Serialization is byte-deterministic.
struct ConstantsReport {
  double kappa = 0.5;
  EllipticityPair ell;
  int N = 1;
  PosLog C_e;                  // wide-radius prefactor (bound = C_e * r^2)
  PosLog c0;                   // base core constant (bound = c0 * r^2 presteps)
  PosLog chain_step_constant;  // per-step transfer of the oblique chain
  PosLog C_k;                  // unit-source core constant at this kappa
  double rho = 0.0;            // small-m form: rho*log m - beta*ell(m) + log c
  double beta = 0.0;           // per-step log cost, -ln(chain_step_constant)
  PosLog c;                    // prefactor of the small-m form
  double fs_sigma = 0.0;
  double fs_C = 0.0;

  std::string to_text() const;
};

/// Certifies the barrier parameter sets the pipeline relies on (throws
/// runtime_error if any certification fails) and assembles the report.
ConstantsReport build_constants_report(double kappa, const EllipticityPair& ell,
                                       int N, const FSConfig& fs);

}  // namespace pargrow
