#pragma once

#include "pargrow/core.hpp"

namespace pargrow {

/// Minimal Pucci operator: lambda * (positive eigenvalues) + Lambda * (negative ones).
double pucci_minus(const SymMatrix& m, const EllipticityPair& ell);

/// Maximal Pucci operator; pucci_plus(M) = -pucci_minus(-M).
double pucci_plus(const SymMatrix& m, const EllipticityPair& ell);

/// Frame relaxation of pucci_minus: minimum over K orthonormal frames of the
/// per-direction envelope lambda q+ - Lambda q-.  Frames are uniformly spaced
/// angles in [0, pi/2); K is ignored for dim 1.  Always >= pucci_minus, with
/// equality when an eigenframe of m is among the sampled frames.
double frame_min(const SymMatrix& m, const EllipticityPair& ell, int frames = 32);

/// Frame relaxation of pucci_plus (maximum over frames of Lambda q+ - lambda q-).
double frame_max(const SymMatrix& m, const EllipticityPair& ell, int frames = 32);

struct SandwichResult {
  bool ok;
  double lower_gap;  // pucci_minus(M+K) - pucci_minus(M) - lambda*||K||... see impl
  double upper_gap;
};

/// Checks lambda*||K|| <= pucci_minus(M+K) - pucci_minus(M) <= N*Lambda*||K||
/// for positive semidefinite K (||K|| = largest eigenvalue).  Rejects K with a
/// negative eigenvalue below -1e-12.
SandwichResult sandwich_check(const SymMatrix& m, const SymMatrix& k,
                              const EllipticityPair& ell, double tol = 1e-12);

/// True iff tr(A*M) >= pucci_minus(M) - tol.  A must satisfy
/// lambda*I <= A <= Lambda*I (checked through its eigenvalues).
bool linear_dominates(const SymMatrix& a, const SymMatrix& m,
                      const EllipticityPair& ell, double tol = 1e-12);

}  // namespace pargrow
