#include "pargrow/barriers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "pargrow/pucci.hpp"

namespace pargrow {

void validate_barrier_params(const BarrierParams& p) {
  if (!(p.theta > 0.0 && p.theta < 1.0))
    throw std::invalid_argument("barrier: theta must lie in (0, 1)");
  if (!(p.delta > 0.0 && p.delta <= p.theta / 2.0))
    throw std::invalid_argument("barrier: delta must lie in (0, theta/2]");
  if (!(p.tau1 > 0.0 && p.tau1 <= p.tau2))
    throw std::invalid_argument("barrier: need 0 < tau1 <= tau2");
  if (!(p.eta >= 0.0))
    throw std::invalid_argument("barrier: eta must be nonnegative");
  if (p.dim != 1 && p.dim != 2)
    throw std::invalid_argument("barrier: dim must be 1 or 2");
}

double compute_C0(const BarrierParams& p) {
  validate_barrier_params(p);
  const double th = p.theta;
  return 2.0 * (th * th - p.delta * p.delta) +
         4.0 * (p.eta * th + (1.0 - th) * th) +
         4.0 * p.ell.Lambda * p.dim * p.tau2;
}

double alpha_threshold(const BarrierParams& p) {
  const double c0 = compute_C0(p);
  const double lam = p.ell.lambda;
  return c0 * (c0 + 8.0 * lam * p.tau1) /
         (6.0 * p.theta * p.theta * lam * p.tau1);
}

double compute_alpha(const BarrierParams& p, double margin) {
  if (!(margin > 0.0))
    throw std::invalid_argument("barrier: margin must be positive");
  return (1.0 + margin) * alpha_threshold(p);
}

PsiValue psi_eval(const double* x, int dim, double t, double theta,
                  double delta, double alpha) {
  if (dim != 1 && dim != 2)
    throw std::invalid_argument("psi_eval: dim must be 1 or 2");
  const double sbar = theta * theta - delta * delta;
  const double rho = sbar * (1.0 + t) + delta * delta;
  double r2 = x[0] * x[0];
  if (dim == 2) r2 += x[1] * x[1];
  const double phi = rho - r2;

  PsiValue out;
  out.hessian = (dim == 1) ? SymMatrix::scalar1(0.0) : SymMatrix::diag2(0.0, 0.0);
  if (phi <= 0.0 || rho <= 0.0) return out;

  const double rma = std::pow(rho, -alpha);
  out.value = phi * phi * rma;
  out.inside = (t > -1.0 && t < 0.0);
  // grad = -4 phi x rho^{-a};  D^2 = rho^{-a} (8 x x^T - 4 phi I);
  // psi_t = sbar rho^{-a} (2 phi - a phi^2 / rho).
  for (int k = 0; k < dim; ++k) out.grad[k] = -4.0 * phi * x[k] * rma;
  if (dim == 1) {
    out.hessian = SymMatrix::scalar1(rma * (8.0 * x[0] * x[0] - 4.0 * phi));
  } else {
    out.hessian = SymMatrix::full2(rma * (8.0 * x[0] * x[0] - 4.0 * phi),
                                   rma * 8.0 * x[0] * x[1],
                                   rma * (8.0 * x[1] * x[1] - 4.0 * phi));
  }
  out.dt = sbar * rma * (2.0 * phi - alpha * phi * phi / rho);
  return out;
}

namespace {

// Residual of the barrier inequality at squared radius s2, time t, cleared of
// the rho^{-alpha-1} factor and normalized by C0 * theta^4.  Negative values
// certify the supersolution defect has the right sign at that point.
double scaled_residual(const BarrierParams& p, double alpha, double drift_bound,
                       double t, double s2, double c0) {
  const double sbar = p.theta * p.theta - p.delta * p.delta;
  const double rho = sbar * (1.0 + t) + p.delta * p.delta;
  const double phi = rho - s2;
  const SymMatrix k =
      (p.dim == 1) ? SymMatrix::scalar1(8.0 * s2 - 4.0 * phi)
                   : SymMatrix::diag2(8.0 * s2 - 4.0 * phi, -4.0 * phi);
  const double diff = pucci_minus(k, p.ell);
  const double worst_diff = std::max(-p.tau1 * diff, -p.tau2 * diff);
  const double raw = -alpha * sbar * phi * phi + 2.0 * sbar * phi * rho +
                     rho * worst_diff +
                     4.0 * drift_bound * phi * std::sqrt(s2) * rho;
  return raw / (c0 * p.theta * p.theta * p.theta * p.theta);
}

}  // namespace

BarrierCertificate certify_subsolution_at(const BarrierParams& p, double alpha,
                                          double drift_bound,
                                          int sample_density) {
  if (sample_density < 2)
    throw std::invalid_argument("barrier: sample_density must be at least 2");
  const double c0 = compute_C0(p);
  if (drift_bound < 0.0) drift_bound = p.eta + (1.0 - p.theta);

  BarrierCertificate cert;
  cert.params = p;
  cert.drift_bound = drift_bound;
  cert.C0 = c0;
  cert.alpha = alpha;
  if (alpha > 2.0) {
    cert.log_gamma_final = lemma_lbnd_log(p, alpha);
    cert.gamma_final = lemma_lbnd_bound(p, alpha);
  } else {
    cert.log_gamma_final = -std::numeric_limits<double>::infinity();
    cert.gamma_final = 0.0;
  }

  const int nt = sample_density;
  const int ns = sample_density;
  const double sbar = p.theta * p.theta - p.delta * p.delta;
  double worst = -std::numeric_limits<double>::infinity();
  double wx = 0.0, wt = 0.0;
  for (int i = 0; i < nt; ++i) {
    const double t = -1.0 + (i + 0.5) / nt;
    const double rho = sbar * (1.0 + t) + p.delta * p.delta;
    for (int j = 0; j < ns; ++j) {
      const double s2 = (j + 0.5) / ns * rho;
      const double r = scaled_residual(p, alpha, drift_bound, t, s2, c0);
      if (r > worst) {
        worst = r;
        wx = std::sqrt(s2);
        wt = t;
      }
    }
  }
  cert.residual_max = worst;
  cert.worst_x[0] = wx;
  cert.worst_x[1] = 0.0;
  cert.worst_t = wt;
  cert.sample_count = static_cast<long>(nt) * ns;
  cert.valid = (alpha > alpha_threshold(p)) && (worst <= 1e-9);
  return cert;
}

BarrierCertificate certify_subsolution(const BarrierParams& p,
                                       double drift_bound,
                                       int sample_density) {
  return certify_subsolution_at(p, compute_alpha(p), drift_bound,
                                sample_density);
}

double lemma_lbnd_log(const BarrierParams& p, double alpha) {
  // Accepts the full disc range delta <= theta (the delta = theta endpoint is
  // a useful algebra anchor); certification separately restricts delta.
  if (!(p.theta > 0.0 && p.theta < 1.0))
    throw std::invalid_argument("barrier: theta must lie in (0, 1)");
  if (!(p.delta > 0.0 && p.delta <= p.theta))
    throw std::invalid_argument("barrier: delta must lie in (0, theta]");
  if (!(alpha > 2.0))
    throw std::invalid_argument("barrier: gamma needs alpha > 2");
  // theta^{4-2a} * delta^{2a-4} = (delta/theta)^{2a-4}
  return (2.0 * alpha - 4.0) * (std::log(p.delta) - std::log(p.theta));
}

double lemma_lbnd_bound(const BarrierParams& p, double alpha) {
  return std::exp(lemma_lbnd_log(p, alpha));
}

namespace {

BarrierParams core_transfer_params(double kappa, const EllipticityPair& ell,
                                   int N) {
  if (!(kappa > 0.0 && kappa < 1.0))
    throw std::invalid_argument("krylov_constant: kappa must lie in (0, 1)");
  BarrierParams p;
  p.theta = 1.0 - kappa;
  p.delta = p.theta / 2.0;
  p.eta = 0.0;
  p.tau1 = 1.0;
  p.tau2 = 1.0;
  p.ell = ell;
  p.dim = N;
  return p;
}

}  // namespace

double krylov_constant_log(double kappa, const EllipticityPair& ell, int N) {
  const BarrierParams p = core_transfer_params(kappa, ell, N);
  const double alpha = compute_alpha(p);
  return std::log(0.5) + lemma_lbnd_log(p, alpha);
}

double krylov_constant(double kappa, const EllipticityPair& ell, int N) {
  return std::exp(krylov_constant_log(kappa, ell, N));
}

double krylov_scaled_bound(double kappa, const EllipticityPair& ell, int N,
                           double sigma, double r) {
  if (!(sigma >= 0.0))
    throw std::invalid_argument("krylov_scaled_bound: sigma must be >= 0");
  if (!(r > 0.0))
    throw std::invalid_argument("krylov_scaled_bound: r must be positive");
  if (sigma == 0.0) return 0.0;
  return krylov_constant(kappa, ell, N) * sigma * r * r;
}

}  // namespace pargrow
