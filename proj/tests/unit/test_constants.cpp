#include "pargrow/constants.hpp"

#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "pargrow/geometry.hpp"
#include "pargrow/grid.hpp"
#include "pargrow/solver.hpp"

using namespace pargrow;

namespace {
const EllipticityPair kUnit(1.0, 1.0);
const FSConfig kFs{1.0, 1.0};
}  // namespace

TEST_CASE("log-tracked positives") {
  CHECK(PosLog::of(0.0).is_zero());
  CHECK(PosLog::of(0.0).value() == 0.0);
  CHECK((PosLog::of(2.0) * PosLog::of(3.0)).value() == doctest::Approx(6.0));
  CHECK(PosLog::of(10.0).log10() == doctest::Approx(1.0));
  CHECK(PosLog::of(4.0).pow(0.5).value() == doctest::Approx(2.0));
  CHECK_THROWS_AS(PosLog::of(-1.0), std::invalid_argument);
  CHECK_THROWS_AS(PosLog::zero().pow(-1.0), std::invalid_argument);
  // Far below double underflow yet still ordered.
  const PosLog a = PosLog::from_ln(-1e8), b = PosLog::from_ln(-2e8);
  CHECK(a.value() == 0.0);
  CHECK(a.ln > b.ln);
}

TEST_CASE("pipeline parameter sets") {
  CHECK(compute_C0(chain_step_params(kUnit, 1)) == 6.375);
  CHECK(compute_C0(core_params(0.5, kUnit, 1)) == 5.375);
  CHECK(compute_C0(doubling_step_params(kUnit, 1)) == 4.375);

  // Proof-literal wide-radius set keeps its tiny aperture; the disc clamps.
  const BarrierParams easy = easy_case_params(0.5, kUnit, 1);
  CHECK(easy.theta == 1e-3);
  CHECK(easy.delta == 5e-4);
  CHECK(easy.eta == 1.0);
  CHECK(easy.tau2 == 4.0);

  const BarrierParams land = landing_step_params(0.25, 0.5, kUnit, 1);
  CHECK(land.theta == doctest::Approx(1.0 / 3.0));
  CHECK(land.delta == doctest::Approx(1.0 / 6.0));
  CHECK(land.tau1 == doctest::Approx(3.0 * 0.0625 / (4.0 * 0.5625)));

  const BarrierParams slick = slick_landing_params(0.5, kUnit, 1);
  CHECK(slick.theta == 0.25);
  CHECK((1.0 - slick.theta) * (2.0 * 0.5 / 1.5) ==
        doctest::Approx(0.5));  // lands exactly on the core radius

  CHECK_THROWS_AS(core_params(0.0, kUnit, 1), std::invalid_argument);
  CHECK_THROWS_AS(chain_step_params(kUnit, 3), std::invalid_argument);
}

TEST_CASE("unit-source cylinder bound: branches and regression") {
  const PropBound chain = prop_qlbnd_bound(0.25, 0.5, kUnit, 1);
  CHECK_FALSE(chain.easy_branch);
  CHECK(chain.chain_steps == 25);
  CHECK(chain.bound.log10() ==
        doctest::Approx(-1854.373433854294).epsilon(1e-12));

  // Step count agrees with the materialized chain plan.
  const double x0[2] = {0.75, 0.0};
  const double y0[2] = {-0.5, 0.0};
  CHECK(chain_plan(x0, -0.75 * 0.0625, y0, 0.0, 0.25, 1).step_count == 25);

  const PropBound wide = prop_qlbnd_bound(0.6, 0.5, kUnit, 1);
  CHECK(wide.easy_branch);
  CHECK(wide.chain_steps == 0);
  const BarrierParams easy = easy_case_params(0.5, kUnit, 1);
  CHECK(wide.bound.ln ==
        doctest::Approx(std::log(0.75 * 0.36) +
                        lemma_lbnd_log(easy, compute_alpha(easy)))
            .epsilon(1e-12));

  const PropBound dim2 = prop_qlbnd_bound(0.25, 0.5, EllipticityPair(1.0, 2.0), 2);
  CHECK(dim2.chain_steps == 25);
  CHECK(dim2.bound.log10() ==
        doctest::Approx(-14329.754843759612).epsilon(1e-12));

  // Shrinks to zero as the cylinder shrinks.
  CHECK(prop_qlbnd_bound(0.025, 0.5, kUnit, 1).bound.ln <
        prop_qlbnd_bound(0.05, 0.5, kUnit, 1).bound.ln);
  CHECK(prop_qlbnd_bound(0.05, 0.5, kUnit, 1).bound.ln <
        prop_qlbnd_bound(0.1, 0.5, kUnit, 1).bound.ln);

  // A core hugging the boundary leaves no room for the chain.
  CHECK_THROWS_AS(prop_qlbnd_bound(0.05, 0.999, kUnit, 1), geometry_error);
  CHECK_THROWS_AS(prop_qlbnd_bound(1.5, 0.5, kUnit, 1), std::invalid_argument);
}

TEST_CASE("measure-form bound: composition and monotonicity") {
  CHECK(thm_lb_bound(0.0, 0.5, 0.5, kUnit, 1, kFs).is_zero());
  CHECK(thm_lb_bound(0.25, 0.0, 0.5, kUnit, 1, kFs).is_zero());
  CHECK_THROWS_AS(thm_lb_bound(1.5, 0.5, 0.5, kUnit, 1, kFs),
                  std::invalid_argument);

  const double m = 0.25, level = 0.5, kappa = 0.5;
  const PosLog got = thm_lb_bound(m, level, kappa, kUnit, 1, kFs);
  CHECK(got.log10() == doctest::Approx(-1267970.349543690216).epsilon(1e-12));

  // Exact composition: level * C * ((1-kappa) m)^sigma * prop(c1 m / 4).
  const double rstar = choose_c1(kappa, 1) * m / 4.0;
  const double expect = std::log(level) +
                        kFs.sigma * std::log((1.0 - kappa) * m) +
                        std::log(kFs.C_cfs) +
                        prop_qlbnd_bound(rstar, kappa, kUnit, 1).bound.ln;
  CHECK(got.ln == doctest::Approx(expect).epsilon(1e-12));

  double prev = -std::numeric_limits<double>::infinity();
  for (double mm : {0.05, 0.15, 0.25, 0.35, 0.45}) {
    const double cur = thm_lb_bound(mm, level, kappa, kUnit, 1, kFs).ln;
    CHECK(cur > prev);
    prev = cur;
  }
  // Monotone in level too.
  CHECK(thm_lb_bound(m, 0.25, kappa, kUnit, 1, kFs).ln <
        thm_lb_bound(m, 0.5, kappa, kUnit, 1, kFs).ln);
}

TEST_CASE("norm-only bound: reduction, window, exponent cap") {
  const TsfsBound zero = thm_tsfs_bound(0.0, 0.5, kUnit, 1, kFs);
  CHECK(zero.bound.is_zero());
  CHECK(zero.window_t0 == 0.0);
  CHECK_THROWS_AS(thm_tsfs_bound(1.0, 0.5, kUnit, 1, kFs),
                  std::invalid_argument);

  const TsfsBound tb = thm_tsfs_bound(0.25, 0.5, kUnit, 1, kFs);
  CHECK(tb.bound.log10() ==
        doctest::Approx(-81807326.490114107728).epsilon(1e-12));
  // The reduction sets m = f^{N+1}/2 and level = f/2.
  const double mred = std::pow(0.25, 2) / 2.0;
  CHECK(tb.bound.ln ==
        doctest::Approx(thm_lb_bound(mred, 0.125, 0.5, kUnit, 1, kFs).ln)
            .epsilon(1e-12));
  CHECK(tb.window_t0 == doctest::Approx(-0.5 * mred));

  // Monotone in the norm; exponent saturates its cap near 1.
  CHECK(thm_tsfs_bound(0.1, 0.5, kUnit, 1, kFs).bound.ln < tb.bound.ln);
  const TsfsBound top = thm_tsfs_bound(0.999, 0.5, kUnit, 1, kFs);
  CHECK(top.alpha == 1e6);
  CHECK(top.alpha_capped);

  // Never exceeds the trivial norm-proportional upper scale.
  CHECK(tb.bound.ln <= std::log(0.25));
}

TEST_CASE("lower-cylinder algebraic bound") {
  CHECK(cor_slicklb_bound(0.0, 0.5, kUnit, 1, kFs).is_zero());
  CHECK_THROWS_AS(cor_slicklb_bound(1.0, 0.5, kUnit, 1, kFs),
                  std::invalid_argument);

  const PosLog at25 = cor_slicklb_bound(0.25, 0.5, kUnit, 1, kFs);
  CHECK(at25.log10() == doctest::Approx(-46669.278280347738).epsilon(1e-12));

  // Pure power law: identical log-log slope across octaves.
  auto lb = [&](double f) { return cor_slicklb_bound(f, 0.5, kUnit, 1, kFs).ln; };
  const double s1 = (lb(0.2) - lb(0.1)) / (std::log(0.2) - std::log(0.1));
  const double s2 = (lb(0.4) - lb(0.2)) / (std::log(0.4) - std::log(0.2));
  CHECK(s1 == doctest::Approx(s2).epsilon(1e-9));
  CHECK(s1 > 0.0);

  // Beats the through-the-measure route whenever both apply.
  for (double f : {0.1, 0.25, 0.4})
    CHECK(cor_slicklb_bound(f, 0.5, kUnit, 1, kFs).ln >=
          thm_tsfs_bound(f, 0.5, kUnit, 1, kFs).bound.ln);
}

TEST_CASE("long-time bound: doubling ladder") {
  const BarrierParams dbl = doubling_step_params(kUnit, 1);
  const double step_ln = lemma_lbnd_log(dbl, compute_alpha(dbl));
  const double c0_ln = std::log(0.25) + krylov_constant_log(0.5, kUnit, 1);

  // r = kappa/2: exactly one doubling.
  CHECK(elliptic_limit_bound(0.25, 0.5, kUnit, 1).ln ==
        doctest::Approx(c0_ln + step_ln + 2.0 * std::log(0.25)).epsilon(1e-12));
  // r >= kappa: no doubling.
  CHECK(elliptic_limit_bound(0.6, 0.5, kUnit, 1).ln ==
        doctest::Approx(c0_ln + 2.0 * std::log(0.6)).epsilon(1e-12));
  CHECK(elliptic_limit_bound(0.125, 0.5, kUnit, 1).log10() ==
        doctest::Approx(-77.309164670471).epsilon(1e-12));

  // Dyadic radii: consecutive log gaps are constant (power law).
  auto eb = [&](double r) { return elliptic_limit_bound(r, 0.5, kUnit, 1).ln; };
  const double g1 = eb(0.25) - eb(0.125);
  const double g2 = eb(0.125) - eb(0.0625);
  CHECK(g1 == doctest::Approx(g2).epsilon(1e-9));

  // Sits far under the exact one-dimensional steady state r(1 - |x|).
  for (double r : {0.1, 0.2, 0.4})
    CHECK(eb(r) < std::log(r * 0.5));
}

TEST_CASE("constants report: relations and determinism") {
  const ConstantsReport rep = build_constants_report(0.5, kUnit, 1, kFs);
  CHECK(rep.rho == doctest::Approx(3.0));
  CHECK(rep.beta == doctest::Approx(-rep.chain_step_constant.ln).epsilon(1e-15));
  CHECK(rep.C_k.ln == doctest::Approx(krylov_constant_log(0.5, kUnit, 1)));
  CHECK(rep.c0.ln ==
        doctest::Approx(std::log(0.25) + krylov_constant_log(0.5, kUnit, 1)));
  CHECK(std::isfinite(rep.C_e.ln));
  CHECK(rep.fs_sigma == 1.0);

  const std::string a = rep.to_text();
  const std::string b = build_constants_report(0.5, kUnit, 1, kFs).to_text();
  CHECK(a == b);
  CHECK(a.find("empirical") != std::string::npos);
  CHECK(a.find("pargrow-constants v1\n") == 0);
  CHECK(a.back() == '\n');

  CHECK_THROWS_AS(build_constants_report(1.0, kUnit, 1, kFs),
                  std::invalid_argument);
  CHECK_THROWS_AS(build_constants_report(0.5, kUnit, 1, FSConfig{0.0, 1.0}),
                  std::invalid_argument);
}

TEST_CASE("unit-source cylinder bound holds on a fine-grid solve") {
  // Source indicator on Q_{1/4}((0.5), -3r^2/4): the solved value on the
  // whole core at the top clears the chain-composed bound.
  const double r = 0.25, kappa = 0.5;
  auto grid = make_solve_grid(1, kUnit, SolveGridOptions{});
  const double top = -0.75 * r * r, bottom = top - r * r;
  IndicatorSet src = make_indicator(grid, [&](const double* x, double t) {
    return std::abs(x[0] - 0.5) < r && t > bottom && t <= top;
  });
  GridFunction w = fundamental_solution(src, kUnit);

  const PropBound pb = prop_qlbnd_bound(r, kappa, kUnit, 1);
  const int si = w.stored_count() - 1;
  double umin = 1e300;
  for (int i = 0; i < grid->nx(); ++i) {
    double xy[2];
    grid->coords(i, xy);
    if (std::abs(xy[0]) <= kappa) umin = std::min(umin, w.value(si, i));
  }
  CHECK(umin > 0.0);
  CHECK(std::log(umin) >= pb.bound.ln);
}
