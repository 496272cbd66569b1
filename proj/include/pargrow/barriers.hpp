#pragma once

#include "pargrow/core.hpp"

namespace pargrow {

/// Shape parameters of the sliding barrier.  theta is the aperture of the
/// region swept by the barrier, delta the radius of the initial disc, eta the
/// drift allowance d/R, [tau1, tau2] the admissible range of the rescaled
/// diffusion coefficient h/R^2.
struct BarrierParams {
  double theta = 0.5;
  double delta = 0.25;
  double eta = 0.0;
  double tau1 = 1.0;
  double tau2 = 1.0;
  EllipticityPair ell;
  int dim = 1;
};

/// Throws unless theta in (0,1), 0 < delta <= theta/2, 0 < tau1 <= tau2,
/// eta >= 0, dim in {1,2}.
void validate_barrier_params(const BarrierParams& p);

/// C0 = 2(theta^2 - delta^2) + 4(eta*theta + (1-theta)*theta) + 4*Lambda*N*tau2.
double compute_C0(const BarrierParams& p);

/// The exponent threshold C0*(C0 + 8*lambda*tau1) / (6*theta^2*lambda*tau1).
double alpha_threshold(const BarrierParams& p);

/// (1 + margin) times the threshold; margin > 0 keeps the strict inequality
/// robust to roundoff.
double compute_alpha(const BarrierParams& p, double margin = 0.01);

/// Barrier values.  psi = phi^2 * rho^{-alpha} with rho(t) =
/// (theta^2-delta^2)(1+t) + delta^2 and phi = rho - |x|^2, extended by zero
/// where phi <= 0.  `inside` marks interior points of the swept region
/// (phi > 0 and -1 < t < 0); outside it the derivative fields are zeroed.
struct PsiValue {
  double value = 0.0;
  double grad[2] = {0.0, 0.0};
  SymMatrix hessian;
  double dt = 0.0;
  bool inside = false;
};

PsiValue psi_eval(const double* x, int dim, double t, double theta,
                  double delta, double alpha);

/// Certified sign check of the barrier inequality.  The residual is the
/// supersolution defect
///   psi_t - a * M^-(D^2 psi) - b . grad(psi)
/// maximized analytically over the coefficient a in [tau1, tau2] and over
/// drift vectors |b| <= drift_bound (worst case aligned with grad psi),
/// multiplied by rho^{alpha+1} > 0 to clear the singular factor and divided
/// by C0*theta^4 so the tolerance is scale-free.  Sampling covers the swept
/// region with sample_density midpoints per axis (time, squared radius).
struct BarrierCertificate {
  BarrierParams params;
  double drift_bound = 0.0;
  double C0 = 0.0;
  double alpha = 0.0;
  double residual_max = 0.0;
  double worst_x[2] = {0.0, 0.0};
  double worst_t = 0.0;
  long sample_count = 0;
  bool valid = false;
  double gamma_final = 0.0;      // theta^{4-2alpha} * delta^{2alpha-4}; 0 on underflow
  double log_gamma_final = 0.0;  // natural log, always finite
};

/// drift_bound < 0 selects the derived default eta + (1 - theta).
BarrierCertificate certify_subsolution(const BarrierParams& p,
                                       double drift_bound = -1.0,
                                       int sample_density = 1000);

/// Same sampling with an explicit exponent; used to show the certification
/// detects inadmissible exponents (alpha below the threshold must fail).
BarrierCertificate certify_subsolution_at(const BarrierParams& p, double alpha,
                                          double drift_bound = -1.0,
                                          int sample_density = 1000);

/// gamma_final = theta^{4-2alpha} * delta^{2alpha-4}: the barrier's
/// growth-transfer constant (value on the target set given unit data on the
/// initial disc).  May underflow to zero; the log form is always finite.
double lemma_lbnd_bound(const BarrierParams& p, double alpha);
double lemma_lbnd_log(const BarrierParams& p, double alpha);

/// Constant of the unit-source lower bound: with theta = 1 - kappa,
/// delta = theta/2, no drift, unit time scale, half the barrier constant.
/// A supersolution of u_t - M^-(D^2 u) >= sigma on Q_r bounds below by
/// krylov_constant * sigma * r^2 on the concentric kappa-core at the top.
double krylov_constant(double kappa, const EllipticityPair& ell, int N);
double krylov_constant_log(double kappa, const EllipticityPair& ell, int N);
double krylov_scaled_bound(double kappa, const EllipticityPair& ell, int N,
                           double sigma, double r);

}  // namespace pargrow
