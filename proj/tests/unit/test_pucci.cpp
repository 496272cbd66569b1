#include <cmath>

#include "doctest.h"
#include "pargrow/core.hpp"
#include "pargrow/pucci.hpp"

using namespace pargrow;

namespace {

bool close(double a, double b, double tol) { return std::fabs(a - b) <= tol; }

SymMatrix random_sym(Rng& rng, int dim) {
  if (dim == 1) return SymMatrix::scalar1(rng.uniform(-1.0, 1.0));
  return SymMatrix::full2(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0),
                          rng.uniform(-1.0, 1.0));
}

SymMatrix random_psd(Rng& rng, int dim) {
  if (dim == 1) {
    const double b = rng.uniform(-1.0, 1.0);
    return SymMatrix::scalar1(b * b);
  }
  const double b1 = rng.uniform(-1.0, 1.0), b2 = rng.uniform(-1.0, 1.0);
  const double b3 = rng.uniform(-1.0, 1.0), b4 = rng.uniform(-1.0, 1.0);
  return SymMatrix::full2(b1 * b1 + b3 * b3, b1 * b2 + b3 * b4, b2 * b2 + b4 * b4);
}

}  // namespace

TEST_CASE("eigenvalues by closed form") {
  auto e = eigenvalues(SymMatrix::full2(2.0, 1.0, 2.0));
  CHECK(close(e[0], 1.0, 1e-14));
  CHECK(close(e[1], 3.0, 1e-14));
  e = eigenvalues(SymMatrix::full2(0.0, 1.0, 0.0));
  CHECK(close(e[0], -1.0, 1e-14));
  CHECK(close(e[1], 1.0, 1e-14));
  e = eigenvalues(SymMatrix::scalar1(5.0));
  REQUIRE(e.size() == 1);
  CHECK(e[0] == 5.0);
  e = eigenvalues(SymMatrix::diag2(3.0, -2.0));
  CHECK(close(e[0], -2.0, 1e-14));
  CHECK(close(e[1], 3.0, 1e-14));
}

TEST_CASE("extremal operator values") {
  const EllipticityPair ell(1.0, 2.0);
  CHECK(pucci_minus(SymMatrix::diag2(0.0, 0.0), ell) == 0.0);
  CHECK(pucci_plus(SymMatrix::diag2(0.0, 0.0), ell) == 0.0);
  CHECK(close(pucci_minus(SymMatrix::diag2(1.0, -1.0), ell), -1.0, 1e-14));
  CHECK(close(pucci_plus(SymMatrix::diag2(1.0, -1.0), ell), 1.0, 1e-14));
  const EllipticityPair half(0.5, 2.0);
  CHECK(close(pucci_minus(SymMatrix::identity(2), half), 1.0, 1e-14));
  CHECK(close(pucci_plus(SymMatrix::identity(2), half), 4.0, 1e-14));
}

TEST_CASE("duality between the extremal operators") {
  Rng rng(7);
  for (int i = 0; i < 100; ++i) {
    for (int dim : {1, 2}) {
      const SymMatrix m = random_sym(rng, dim);
      const EllipticityPair ell(0.5, 2.0);
      CHECK(close(pucci_plus(m, ell), -pucci_minus(m.scaled(-1.0), ell), 1e-14));
    }
  }
}

TEST_CASE("monotone and superadditive in the matrix argument") {
  Rng rng(8);
  const EllipticityPair ell(0.7, 2.5);
  for (int i = 0; i < 200; ++i) {
    for (int dim : {1, 2}) {
      const SymMatrix m = random_sym(rng, dim);
      const SymMatrix k = random_psd(rng, dim);
      CHECK(pucci_minus(m.plus(k), ell) >= pucci_minus(m, ell) - 1e-12);
      CHECK(pucci_plus(m.plus(k), ell) >= pucci_plus(m, ell) - 1e-12);
      const SymMatrix b = random_sym(rng, dim);
      CHECK(pucci_minus(m.plus(b), ell) >=
            pucci_minus(m, ell) + pucci_minus(b, ell) - 1e-12);
    }
  }
}

TEST_CASE("positive homogeneity") {
  Rng rng(9);
  const EllipticityPair ell(1.0, 3.0);
  for (int i = 0; i < 100; ++i) {
    const SymMatrix m = random_sym(rng, 2);
    for (double s : {0.0, 0.3, 2.0}) {
      CHECK(close(pucci_minus(m.scaled(s), ell), s * pucci_minus(m, ell), 1e-12));
    }
  }
}

TEST_CASE("frame relaxation approximates the minimal operator") {
  const EllipticityPair ell(1.0, 2.0);
  const SymMatrix m = SymMatrix::full2(2.0, 1.0, 2.0);
  const double exact = pucci_minus(m, ell);
  CHECK(close(exact, 4.0, 1e-14));
  const double fm = frame_min(m, ell, 64);
  CHECK(fm >= exact - 1e-12);
  CHECK(fm <= exact + 5e-3);

  // Eigen-aligned frame included: diagonal matrices are exact at any K.
  const SymMatrix d = SymMatrix::diag2(1.5, -0.5);
  CHECK(close(frame_min(d, ell, 4), pucci_minus(d, ell), 1e-14));
  CHECK(close(frame_min(SymMatrix::diag2(0.0, 0.0), ell, 16), 0.0, 1e-300));

  Rng rng(10);
  for (int i = 0; i < 50; ++i) {
    const SymMatrix r = random_sym(rng, 2);
    double prev = frame_min(r, ell, 2);
    for (int k : {4, 8, 16, 32, 64}) {
      const double cur = frame_min(r, ell, k);
      CHECK(cur <= prev + 1e-12);  // doubling nests the frame set
      CHECK(cur >= pucci_minus(r, ell) - 1e-12);
      prev = cur;
    }
    CHECK(close(frame_max(r, ell, 32), -frame_min(r.scaled(-1.0), ell, 32), 1e-13));
  }
}

TEST_CASE("increment sandwich for semidefinite perturbations") {
  const EllipticityPair ell(1.0, 2.0);
  SUBCASE("zero perturbation") {
    const auto r = sandwich_check(SymMatrix::full2(0.3, -0.1, 0.9),
                                  SymMatrix::diag2(0.0, 0.0), ell);
    CHECK(r.ok);
    CHECK(close(r.lower_gap, 0.0, 1e-14));
    CHECK(close(r.upper_gap, 0.0, 1e-14));
  }
  SUBCASE("identity increment from zero") {
    const auto r = sandwich_check(SymMatrix::diag2(0.0, 0.0), SymMatrix::identity(2), ell);
    CHECK(r.ok);
    CHECK(close(r.lower_gap, 1.0, 1e-14));  // difference 2 against lower bound 1
    CHECK(close(r.upper_gap, 2.0, 1e-14));  // upper bound 4 against difference 2
  }
  SUBCASE("random pairs") {
    Rng rng(11);
    for (int i = 0; i < 1000; ++i) {
      const SymMatrix m = random_sym(rng, 2);
      const SymMatrix k = random_psd(rng, 2);
      CHECK(sandwich_check(m, k, ell).ok);
    }
  }
  SUBCASE("indefinite perturbation rejected") {
    CHECK_THROWS_AS(sandwich_check(SymMatrix::diag2(0.0, 0.0),
                                   SymMatrix::diag2(1.0, -0.5), ell),
                    std::invalid_argument);
  }
}

TEST_CASE("admissible linear coefficients dominate the minimal operator") {
  const EllipticityPair ell(0.5, 2.0);
  SUBCASE("equality cases") {
    const SymMatrix psd = SymMatrix::full2(1.0, 0.5, 1.0);
    CHECK(linear_dominates(SymMatrix::diag2(0.5, 0.5), psd, ell));
    const SymMatrix nsd = psd.scaled(-1.0);
    CHECK(linear_dominates(SymMatrix::diag2(2.0, 2.0), nsd, ell));
  }
  SUBCASE("random admissible pairs") {
    Rng rng(13);
    for (int i = 0; i < 1000; ++i) {
      // A with eigenvalues in [lambda, Lambda], rotated by a random angle.
      const double e1 = rng.uniform(0.5, 2.0), e2 = rng.uniform(0.5, 2.0);
      const double phi = rng.uniform(0.0, M_PI);
      const double c = std::cos(phi), s = std::sin(phi);
      const SymMatrix a = SymMatrix::full2(c * c * e1 + s * s * e2,
                                           c * s * (e1 - e2),
                                           s * s * e1 + c * c * e2);
      CHECK(linear_dominates(a, random_sym(rng, 2), ell));
    }
  }
  SUBCASE("coefficient outside the class rejected") {
    CHECK_THROWS_AS(linear_dominates(SymMatrix::diag2(3.0, 1.0),
                                     SymMatrix::identity(2), ell),
                    std::invalid_argument);
  }
}
