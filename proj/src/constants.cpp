#include "pargrow/constants.hpp"

#include <cstdio>
#include <stdexcept>

#include "pargrow/geometry.hpp"

namespace pargrow {

PosLog PosLog::of(double v) {
  if (v < 0.0) throw std::invalid_argument("PosLog: negative value");
  if (v == 0.0) return zero();
  return PosLog{std::log(v)};
}

PosLog PosLog::pow(double e) const {
  if (is_zero() && e <= 0.0)
    throw std::invalid_argument("PosLog: zero to a nonpositive power");
  return PosLog{ln * e};
}

namespace {

void check_kappa(double kappa) {
  if (!(kappa > 0.0 && kappa < 1.0))
    throw std::invalid_argument("constants: kappa must lie in (0, 1)");
}

void check_dim(int N) {
  if (N != 1 && N != 2)
    throw std::invalid_argument("constants: N must be 1 or 2");
}

// Transfer factor of one certified barrier application.
PosLog barrier_gamma(const BarrierParams& p) {
  return PosLog::from_ln(lemma_lbnd_log(p, compute_alpha(p)));
}

// Step count of the oblique chain, with the same sizing and containment
// rules as chain_plan but without materializing the cylinders (step counts
// reach 1e8 for the smallest pigeonhole radii).
long chain_length(const double* x0, double t0p, const double* y0, double t0,
                  double r, int dim) {
  double d2 = (y0[0] - x0[0]) * (y0[0] - x0[0]);
  if (dim == 2) d2 += (y0[1] - x0[1]) * (y0[1] - x0[1]);
  const double d = std::sqrt(d2);
  if (std::abs((t0 - t0p) - 0.75 * r * r) > 1e-9 * std::max(1.0, r * r))
    throw std::invalid_argument("chain: time gap must equal 3 r^2 / 4");
  long steps = 1;
  if (d > r) steps = static_cast<long>(std::ceil(d2 / (r * r) - 1e-12));
  const double R = r / std::sqrt(static_cast<double>(steps));
  const double height = 0.75 * r * r / static_cast<double>(steps);
  const double drift = d / static_cast<double>(steps);
  if (drift > R * (1.0 + 1e-12))
    throw geometry_error("chain: per-step drift exceeds step radius");
  double n0 = std::abs(x0[0]), n1 = std::abs(y0[0]);
  if (dim == 2) {
    n0 = std::hypot(x0[0], x0[1]);
    n1 = std::hypot(y0[0], y0[1]);
  }
  if (std::max(n0, n1) + R > 1.0 + 1e-12 || t0 > 1e-12 ||
      t0p - height < -1.0 - 1e-12)
    throw geometry_error("chain cylinder exits the unit cylinder");
  return steps;
}

}  // namespace

BarrierParams chain_step_params(const EllipticityPair& ell, int N) {
  check_dim(N);
  BarrierParams p;
  p.theta = 0.5;
  p.delta = 0.25;
  p.eta = 1.0;
  p.tau1 = 0.75;
  p.tau2 = 0.75;
  p.ell = ell;
  p.dim = N;
  return p;
}

BarrierParams easy_case_params(double kappa, const EllipticityPair& ell,
                               int N) {
  check_kappa(kappa);
  check_dim(N);
  BarrierParams p;
  p.theta = 1e-3;
  p.delta = std::min(0.25, p.theta / 2.0);
  p.eta = 1.0 / kappa - 1.0;
  p.tau1 = 0.75;
  p.tau2 = 1.0 / (kappa * kappa);
  p.ell = ell;
  p.dim = N;
  return p;
}

BarrierParams core_params(double kappa, const EllipticityPair& ell, int N) {
  check_kappa(kappa);
  check_dim(N);
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

BarrierParams doubling_step_params(const EllipticityPair& ell, int N) {
  check_dim(N);
  BarrierParams p;
  p.theta = 0.5;
  p.delta = 0.25;
  p.eta = 0.0;
  p.tau1 = 0.75;
  p.tau2 = 0.75;
  p.ell = ell;
  p.dim = N;
  return p;
}

BarrierParams landing_step_params(double r, double kappa,
                                  const EllipticityPair& ell, int N) {
  check_kappa(kappa);
  check_dim(N);
  if (!(r > 0.0 && r < 1.0))
    throw std::invalid_argument("constants: r must lie in (0, 1)");
  const double R = (1.0 + kappa) / 2.0;
  BarrierParams p;
  p.theta = (1.0 - kappa) / (1.0 + kappa);  // (1 - theta) R = kappa
  p.delta = std::min(p.theta / 2.0, 2.0 * kappa / (1.0 + kappa));
  p.eta = 0.0;
  p.tau1 = 3.0 * r * r / (4.0 * R * R);
  p.tau2 = 1.0 / (R * R);
  p.ell = ell;
  p.dim = N;
  return p;
}

BarrierParams slick_landing_params(double kappa, const EllipticityPair& ell,
                                   int N) {
  check_kappa(kappa);
  check_dim(N);
  // On the cylinder of radius 2 kappa / (1 + kappa) this aperture lands
  // exactly on B_kappa: (1 - theta) R = kappa.
  BarrierParams p;
  p.theta = (1.0 - kappa) / 2.0;
  p.delta = p.theta / 2.0;
  p.eta = 0.0;
  p.tau1 = 0.01;
  p.tau2 = 1.0 / (kappa * kappa);
  p.ell = ell;
  p.dim = N;
  return p;
}

PropBound prop_qlbnd_bound(double r, double kappa, const EllipticityPair& ell,
                           int N) {
  check_kappa(kappa);
  check_dim(N);
  if (!(r > 0.0 && r < 1.0))
    throw std::invalid_argument("constants: r must lie in (0, 1)");

  PropBound out;
  const BarrierParams easy = easy_case_params(kappa, ell, N);
  if (r >= kappa / (1.0 - easy.theta)) {
    // One application at full radius; the conclusion covers B_kappa because
    // (1 - theta) r >= kappa, and the source occupies height 3r^2/4.
    out.easy_branch = true;
    out.bound = PosLog::of(0.75 * r * r) * barrier_gamma(easy);
    return out;
  }

  // Oblique chain from the worst source position to the far side of the
  // core, then an upright landing step recenters onto B_kappa.
  const double x0[2] = {1.0 - r, 0.0};
  const double y0[2] = {-kappa, 0.0};
  const long steps = chain_length(x0, -0.75 * r * r, y0, 0.0, r, N);
  out.chain_steps = steps;

  const PosLog c0 = PosLog::of(0.25) *
                    PosLog::from_ln(krylov_constant_log(0.5, ell, N));
  const PosLog step = barrier_gamma(chain_step_params(ell, N));
  const PosLog landing = barrier_gamma(landing_step_params(r, kappa, ell, N));
  out.bound = PosLog::of(r * r) * c0 *
              step.pow(static_cast<double>(steps)) * landing;
  return out;
}

PosLog thm_lb_bound(double m, double level, double kappa,
                    const EllipticityPair& ell, int N, const FSConfig& fs) {
  check_kappa(kappa);
  check_dim(N);
  if (!(m >= 0.0 && m <= 1.0))
    throw std::invalid_argument("constants: m must lie in [0, 1]");
  if (!(level >= 0.0))
    throw std::invalid_argument("constants: level must be nonnegative");
  if (!(fs.sigma > 0.0 && fs.C_cfs > 0.0))
    throw std::invalid_argument("constants: FS constants must be positive");
  if (m == 0.0 || level == 0.0) return PosLog::zero();

  const double r = choose_c1(kappa, N) * m / 4.0;
  const PropBound base = prop_qlbnd_bound(r, kappa, ell, N);
  return PosLog::of(level) * PosLog::of(fs.C_cfs) *
         PosLog::of((1.0 - kappa) * m).pow(fs.sigma) * base.bound;
}

TsfsBound thm_tsfs_bound(double f_norm, double kappa,
                         const EllipticityPair& ell, int N,
                         const FSConfig& fs) {
  if (!(f_norm >= 0.0 && f_norm < 1.0))
    throw std::invalid_argument("constants: f_norm must lie in [0, 1)");
  TsfsBound out;
  if (f_norm == 0.0) return out;

  const double m = std::pow(f_norm, N + 1) / 2.0;
  out.bound = thm_lb_bound(m, f_norm / 2.0, kappa, ell, N, fs);
  out.window_t0 = -kappa * m;
  const double a = out.bound.ln / std::log(f_norm);
  if (a > 1e6) {
    out.alpha = 1e6;
    out.alpha_capped = true;
  } else {
    out.alpha = a;
  }
  return out;
}

PosLog cor_slicklb_bound(double f_norm_lower_cyl, double kappa,
                         const EllipticityPair& ell, int N,
                         const FSConfig& fs) {
  check_kappa(kappa);
  check_dim(N);
  const double f = f_norm_lower_cyl;
  if (!(f >= 0.0 && f < 1.0))
    throw std::invalid_argument("constants: f_norm must lie in [0, 1)");
  if (f == 0.0) return PosLog::zero();

  const double m = std::pow(f, N + 1) / 2.0;
  const double level = f / 2.0;
  const double rstar = choose_c1(kappa, N) * m / 4.0;

  // Entry step: from the source cylinder up to the core scale with the
  // initial disc tied to rstar, so the transfer stays a power of f.  The
  // exponent is computed at the delta -> 0 worst case of the drift budget,
  // which dominates every admissible disc.
  const double theta1 = 0.5;
  const double eta1 = (1.0 - kappa) / kappa;
  const double tau11 = 0.75, tau21 = 0.75;
  const double c0w = 2.0 * theta1 * theta1 +
                     4.0 * (eta1 * theta1 + (1.0 - theta1) * theta1) +
                     4.0 * ell.Lambda * N * tau21;
  const double alpha1 = 1.01 * c0w * (c0w + 8.0 * ell.lambda * tau11) /
                        (6.0 * theta1 * theta1 * ell.lambda * tau11);
  const double delta1 = rstar / (4.0 * kappa);
  const PosLog gamma1 =
      PosLog::from_ln((2.0 * alpha1 - 4.0) * (std::log(delta1) - std::log(theta1)));

  const PosLog gamma2 = barrier_gamma(slick_landing_params(kappa, ell, N));
  const PosLog c0 = PosLog::of(0.25) *
                    PosLog::from_ln(krylov_constant_log(0.5, ell, N));

  return PosLog::of(level) * PosLog::of(fs.C_cfs) *
         PosLog::of((1.0 - kappa) * m).pow(fs.sigma) *
         PosLog::of(rstar * rstar) * c0 * gamma1 * gamma2;
}

PosLog elliptic_limit_bound(double r, double kappa, const EllipticityPair& ell,
                            int N) {
  check_kappa(kappa);
  check_dim(N);
  if (!(r > 0.0 && r < 1.0))
    throw std::invalid_argument("constants: r must lie in (0, 1)");

  int steps = 0;
  if (r < kappa)
    steps = static_cast<int>(std::ceil(std::log2(kappa / r) - 1e-12));
  const PosLog c0 = PosLog::of(0.25) *
                    PosLog::from_ln(krylov_constant_log(0.5, ell, N));
  const PosLog step = barrier_gamma(doubling_step_params(ell, N));
  return PosLog::of(r * r) * c0 * step.pow(steps);
}

namespace {

void append_kv(std::string& s, const char* key, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  s += key;
  s += ' ';
  s += buf;
  s += '\n';
}

void append_poslog(std::string& s, const char* key, const PosLog& v) {
  std::string k1 = std::string(key) + "_log10";
  append_kv(s, k1.c_str(), v.log10());
  append_kv(s, key, v.value());
}

}  // namespace

std::string ConstantsReport::to_text() const {
  std::string s = "pargrow-constants v1\n";
  append_kv(s, "kappa", kappa);
  append_kv(s, "lambda", ell.lambda);
  append_kv(s, "Lambda", ell.Lambda);
  append_kv(s, "N", N);
  append_poslog(s, "C_e", C_e);
  append_poslog(s, "c0", c0);
  append_poslog(s, "chain_step", chain_step_constant);
  append_poslog(s, "C_k", C_k);
  append_kv(s, "rho", rho);
  append_kv(s, "beta", beta);
  append_poslog(s, "c", c);
  append_kv(s, "fs_sigma", fs_sigma);
  append_kv(s, "fs_C", fs_C);
  s += "note fs constants are empirical fits, not derived\n";
  s += "note bounds use the exact per-step chain product; the small-m form "
       "rho*log(m) - beta*ell(m) + log(c) is the same quantity regrouped\n";
  s += "end\n";
  return s;
}

ConstantsReport build_constants_report(double kappa, const EllipticityPair& ell,
                                       int N, const FSConfig& fs) {
  check_kappa(kappa);
  check_dim(N);
  if (!(fs.sigma > 0.0 && fs.C_cfs > 0.0))
    throw std::invalid_argument("constants: FS constants must be positive");

  // Certify every barrier family the pipeline multiplies in.
  const BarrierParams sets[] = {
      chain_step_params(ell, N), easy_case_params(kappa, ell, N),
      core_params(kappa, ell, N), doubling_step_params(ell, N),
      landing_step_params(0.25, kappa, ell, N),
      slick_landing_params(kappa, ell, N)};
  for (const BarrierParams& p : sets) {
    const BarrierCertificate cert = certify_subsolution(p);
    if (!cert.valid)
      throw std::runtime_error("constants: barrier certification failed");
  }

  ConstantsReport rep;
  rep.kappa = kappa;
  rep.ell = ell;
  rep.N = N;
  rep.C_e = PosLog::of(0.75) * barrier_gamma(easy_case_params(kappa, ell, N));
  rep.c0 = PosLog::of(0.25) *
           PosLog::from_ln(krylov_constant_log(0.5, ell, N));
  rep.chain_step_constant = barrier_gamma(chain_step_params(ell, N));
  rep.C_k = PosLog::from_ln(krylov_constant_log(kappa, ell, N));
  rep.rho = 2.0 + fs.sigma;
  rep.beta = -rep.chain_step_constant.ln;
  const double c1 = choose_c1(kappa, N);
  rep.c = PosLog::of(fs.C_cfs) * PosLog::of(1.0 - kappa).pow(fs.sigma) *
          rep.c0 * PosLog::of(c1 / 4.0).pow(2.0);
  rep.fs_sigma = fs.sigma;
  rep.fs_C = fs.C_cfs;
  return rep;
}

}  // namespace pargrow
