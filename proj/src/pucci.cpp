#include "pargrow/pucci.hpp"

#include <algorithm>
#include <cmath>

namespace pargrow {

std::vector<double> eigenvalues(const SymMatrix& m) {
  if (m.dim == 1) return {m.xx};
  const double tr = m.xx + m.yy;
  const double d = m.xx - m.yy;
  const double disc = std::sqrt(d * d + 4.0 * m.xy * m.xy);
  return {0.5 * (tr - disc), 0.5 * (tr + disc)};
}

namespace {

inline double envelope_minus(double q, const EllipticityPair& ell) {
  return q > 0.0 ? ell.lambda * q : ell.Lambda * q;
}

inline double envelope_plus(double q, const EllipticityPair& ell) {
  return q > 0.0 ? ell.Lambda * q : ell.lambda * q;
}

}  // namespace

double pucci_minus(const SymMatrix& m, const EllipticityPair& ell) {
  double acc = 0.0;
  for (double e : eigenvalues(m)) acc += envelope_minus(e, ell);
  return acc;
}

double pucci_plus(const SymMatrix& m, const EllipticityPair& ell) {
  double acc = 0.0;
  for (double e : eigenvalues(m)) acc += envelope_plus(e, ell);
  return acc;
}

double frame_min(const SymMatrix& m, const EllipticityPair& ell, int frames) {
  if (m.dim == 1) return envelope_minus(m.xx, ell);
  if (frames < 1) throw std::invalid_argument("frame_min requires frames >= 1");
  const double step = (M_PI / 2.0) / frames;
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k < frames; ++k) {
    const double c = std::cos(k * step), s = std::sin(k * step);
    const double v0[2] = {c, s};
    const double v1[2] = {-s, c};
    const double val = envelope_minus(m.quad(v0), ell) + envelope_minus(m.quad(v1), ell);
    best = std::min(best, val);
  }
  return best;
}

double frame_max(const SymMatrix& m, const EllipticityPair& ell, int frames) {
  if (m.dim == 1) return envelope_plus(m.xx, ell);
  if (frames < 1) throw std::invalid_argument("frame_max requires frames >= 1");
  const double step = (M_PI / 2.0) / frames;
  double best = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < frames; ++k) {
    const double c = std::cos(k * step), s = std::sin(k * step);
    const double v0[2] = {c, s};
    const double v1[2] = {-s, c};
    const double val = envelope_plus(m.quad(v0), ell) + envelope_plus(m.quad(v1), ell);
    best = std::max(best, val);
  }
  return best;
}

SandwichResult sandwich_check(const SymMatrix& m, const SymMatrix& k,
                              const EllipticityPair& ell, double tol) {
  const auto ke = eigenvalues(k);
  if (ke.front() < -1e-12) {
    throw std::invalid_argument("sandwich_check requires positive semidefinite K");
  }
  const double knorm = std::max(0.0, ke.back());
  const double diff = pucci_minus(m.plus(k), ell) - pucci_minus(m, ell);
  SandwichResult r{};
  r.lower_gap = diff - ell.lambda * knorm;
  r.upper_gap = static_cast<double>(m.dim) * ell.Lambda * knorm - diff;
  r.ok = r.lower_gap >= -tol && r.upper_gap >= -tol;
  return r;
}

bool linear_dominates(const SymMatrix& a, const SymMatrix& m,
                      const EllipticityPair& ell, double tol) {
  const auto ae = eigenvalues(a);
  if (ae.front() < ell.lambda - 1e-9 || ae.back() > ell.Lambda + 1e-9) {
    throw std::invalid_argument("coefficient matrix outside the ellipticity class");
  }
  return a.trace_product(m) >= pucci_minus(m, ell) - tol;
}

}  // namespace pargrow
