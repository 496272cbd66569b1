#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace pargrow {

/// Uniform ellipticity constants 0 < lambda <= Lambda.
struct EllipticityPair {
  double lambda = 1.0;
  double Lambda = 1.0;

  EllipticityPair() = default;
  EllipticityPair(double lam, double Lam) : lambda(lam), Lambda(Lam) {
    if (!(lam > 0.0) || !(Lam >= lam)) {
      throw std::invalid_argument("ellipticity requires 0 < lambda <= Lambda");
    }
  }
};

/// Symmetric N x N matrix, N in {1, 2}.  For N = 1 only xx is meaningful.
struct SymMatrix {
  int dim = 1;
  double xx = 0.0;
  double xy = 0.0;
  double yy = 0.0;

  static SymMatrix scalar1(double a) { return SymMatrix{1, a, 0.0, 0.0}; }
  static SymMatrix diag2(double a, double b) { return SymMatrix{2, a, 0.0, b}; }
  static SymMatrix full2(double a, double b, double c) { return SymMatrix{2, a, b, c}; }
  static SymMatrix identity(int n) {
    return n == 1 ? scalar1(1.0) : diag2(1.0, 1.0);
  }

  SymMatrix scaled(double s) const { return SymMatrix{dim, s * xx, s * xy, s * yy}; }
  SymMatrix plus(const SymMatrix& o) const {
    return SymMatrix{dim, xx + o.xx, xy + o.xy, yy + o.yy};
  }
  double trace() const { return dim == 1 ? xx : xx + yy; }
  /// v' M v for a direction vector v (length dim).
  double quad(const double* v) const {
    if (dim == 1) return xx * v[0] * v[0];
    return xx * v[0] * v[0] + 2.0 * xy * v[0] * v[1] + yy * v[1] * v[1];
  }
  /// tr(this * other); both symmetric of equal dim.
  double trace_product(const SymMatrix& o) const {
    if (dim == 1) return xx * o.xx;
    return xx * o.xx + 2.0 * xy * o.xy + yy * o.yy;
  }
};

/// Eigenvalues in ascending order, closed form.
std::vector<double> eigenvalues(const SymMatrix& m);

/// Thrown when a requested construction does not fit inside the unit cylinder
/// or otherwise violates a geometric precondition.
struct geometry_error : std::runtime_error {
  explicit geometry_error(const std::string& what) : std::runtime_error(what) {}
};

/// Thrown when a time step would violate the explicit-scheme stability bound.
struct cfl_error : std::runtime_error {
  explicit cfl_error(const std::string& what) : std::runtime_error(what) {}
};

/// Deterministic 64-bit generator (splitmix64).  Identical streams on every
/// platform; distribution helpers avoid <random> so outputs are portable.
struct Rng {
  uint64_t state;

  explicit Rng(uint64_t seed) : state(seed + 0x9e3779b97f4a7c15ULL) {}

  /// Independent stream for one ensemble member.
  static Rng for_member(uint64_t seed, uint64_t index) {
    Rng r(seed);
    r.state += 0xbf58476d1ce4e5b9ULL * (index + 1);
    r.next();
    return r;
  }

  uint64_t next() {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  uint64_t below(uint64_t n) { return n == 0 ? 0 : next() % n; }
};

}  // namespace pargrow
