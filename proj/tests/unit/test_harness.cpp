#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "pargrow/barriers.hpp"
#include "pargrow/harness.hpp"
#include "pargrow/pucci.hpp"

using namespace pargrow;

namespace {

EnsembleConfig small_config() {
  EnsembleConfig cfg;
  cfg.count = 6;
  cfg.axis_nodes = 65;
  cfg.fs_fit_samples = 8;
  cfg.fs = FSConfig{1.0, 1.0};
  return cfg;
}

}  // namespace

TEST_CASE("member draws are deterministic and cycle through the families") {
  EnsembleConfig cfg = small_config();
  for (int i = 0; i < 6; ++i) {
    const MemberDraw a = draw_member(cfg, i);
    const MemberDraw b = draw_member(cfg, i);
    CHECK(a.family == static_cast<SourceFamily>(i % 3));
    CHECK(a.op_family == (i % 2 == 0 ? CoefficientFamily::Pucci
                                     : CoefficientFamily::RandomLinear));
    CHECK(a.check_level == b.check_level);
    CHECK(a.boxes.size() == b.boxes.size());
    if (!a.boxes.empty()) {
      CHECK(a.boxes[0].center[0] == b.boxes[0].center[0]);
      CHECK(a.boxes[0].half_width == b.boxes[0].half_width);
    }
    if (!a.bumps.empty()) CHECK(a.bumps[0].amp == b.bumps[0].amp);
  }
  CHECK_THROWS_AS(draw_member(cfg, -1), std::invalid_argument);
  EnsembleConfig bad = cfg;
  bad.kappa = 1.0;
  CHECK_THROWS_AS(draw_member(bad, 0), std::invalid_argument);
}

TEST_CASE("drawn sources stay in [0,1] with supports inside the cylinder") {
  EnsembleConfig cfg = small_config();
  Rng rng(7);
  for (int i = 0; i < 9; ++i) {
    const MemberDraw d = draw_member(cfg, i);
    for (int s = 0; s < 400; ++s) {
      double x[2] = {rng.uniform(-1.0, 1.0), 0.0};
      const double t = rng.uniform(-1.0, 0.0);
      const double f = d.source(x, t);
      CHECK(f >= 0.0);
      CHECK(f <= 1.0);
      // Box and plateau supports keep a margin off the lateral boundary;
      // bump tails decay but need not vanish.
      if (d.family != SourceFamily::SmoothBumps && std::abs(x[0]) > 0.93) {
        CHECK(f == 0.0);
      }
    }
  }
}

TEST_CASE("level-set sources live in the lower cylinder") {
  EnsembleConfig cfg = small_config();
  const MemberDraw d = draw_member(cfg, 2);
  REQUIRE(d.family == SourceFamily::LevelSet);
  Rng rng(11);
  double peak = 0.0;
  for (int s = 0; s < 2000; ++s) {
    double x[2] = {rng.uniform(-1.0, 1.0), 0.0};
    const double t = rng.uniform(-1.0, 0.0);
    const double f = d.source(x, t);
    peak = std::max(peak, f);
    if (std::abs(x[0]) >= 1.0 - cfg.kappa || t > -cfg.kappa) CHECK(f == 0.0);
  }
  CHECK(peak > 0.9 * d.plateau_value);
  CHECK(d.plateau_value >= 0.4);
  CHECK(d.plateau_value <= 1.0);
  CHECK(d.check_level == 0.5 * d.plateau_value);
}

TEST_CASE("random linear coefficients are admissible and stencil-safe") {
  EnsembleConfig cfg = small_config();
  cfg.N = 2;
  const MemberDraw d = draw_member(cfg, 1);
  REQUIRE(d.op_family == CoefficientFamily::RandomLinear);
  Rng rng(13);
  for (int s = 0; s < 200; ++s) {
    double x[2] = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    const double t = rng.uniform(-1.0, 0.0);
    const SymMatrix a = d.coeff(x, t);
    const auto ev = eigenvalues(a);
    CHECK(ev.front() >= cfg.ell.lambda - 1e-12);
    CHECK(ev.back() <= cfg.ell.Lambda + 1e-12);
    // Sign-split stencil admissibility.
    CHECK(a.xx >= std::abs(a.xy) - 1e-12);
    CHECK(a.yy >= std::abs(a.xy) - 1e-12);
    const SymMatrix m = SymMatrix::full2(rng.uniform(-2.0, 2.0),
                                         rng.uniform(-2.0, 2.0),
                                         rng.uniform(-2.0, 2.0));
    CHECK(linear_dominates(a, m, cfg.ell, 1e-9));
  }
}

TEST_CASE("generate_member is reproducible down to the solution bytes") {
  EnsembleConfig cfg = small_config();
  const MemberEval a = generate_member(cfg, 3);
  const MemberEval b = generate_member(cfg, 3);
  CHECK(a.f_norm == b.f_norm);
  CHECK(a.mask_m == b.mask_m);
  CHECK(a.u_max == b.u_max);
  const int si = a.u.stored_count() - 1;
  for (int node = 0; node < a.grid->node_count(); node += 7) {
    CHECK(a.u.value(si, node) == b.u.value(si, node));
  }
  CHECK(a.u_min_global >= 0.0);
  CHECK(std::isfinite(a.u_max));
  CHECK(a.f_norm > 0.0);
  CHECK(a.f_norm < 1.0);
  CHECK(a.mask_m > 0.0);
}

TEST_CASE("zero source marches to the zero solution") {
  GridPtr g = make_solve_grid(1, EllipticityPair(1.0, 2.0),
                              SolveGridOptions{33, 0.9, 257});
  OperatorSpec spec;
  spec.ell = EllipticityPair(1.0, 2.0);
  const GridFunction u = solve(g, spec, zero_cells(), zero_cells());
  for (int si = 0; si < u.stored_count(); ++si) {
    for (double v : u.level_values(si)) CHECK(v == 0.0);
  }
}

TEST_CASE("two-sided and measure-form checks fill consistent rows") {
  EnsembleConfig cfg = small_config();
  for (int i = 0; i < 3; ++i) {
    const MemberEval ev = generate_member(cfg, i);
    MemberRow row;
    check_two_sided(ev, cfg, row);
    check_measure_form(ev, cfg, row);
    CHECK(row.f_norm == ev.f_norm);
    CHECK(row.m == ev.mask_m);
    CHECK(row.u_min_tsfs > 0.0);
    CHECK(row.u_min_lb > 0.0);
    CHECK(row.u_max >= row.u_min_tsfs);
    CHECK(row.abp_ratio > 0.0);
    CHECK(row.tsfs_bound_log10 < 0.0);
    CHECK(row.lb_bound_log10 < 0.0);
    CHECK(row.slick_applicable == (i % 3 == 2));
    if (row.slick_applicable) {
      CHECK(row.u_min_slick > 0.0);
      CHECK(row.slick_bound_log10 < 0.0);
    }
    // The lower-cylinder window contains the norm window, so its minimum
    // cannot be larger.
    if (row.slick_applicable) CHECK(row.u_min_slick <= row.u_min_tsfs);
  }
}

TEST_CASE("suite runs clean on the small ensemble and is byte-stable") {
  EnsembleConfig cfg = small_config();
  const VerificationReport rep = run_suite(cfg);
  REQUIRE(rep.rows.size() == 6);
  CHECK(rep.all_pass);
  CHECK(rep.agg.fail_count == 0);
  CHECK(rep.agg.abp_C_emp > 0.0);
  CHECK(std::isfinite(rep.agg.abp_C_emp));
  CHECK(rep.abp_refinement_ratio >= 0.5);
  CHECK(rep.abp_refinement_ratio <= 2.0);
  for (const MemberRow& r : rep.rows) {
    CHECK(r.pass);
    CHECK(r.rich_err > 0.0);
  }
  const VerificationReport again = run_suite(cfg);
  CHECK(rep.to_csv() == again.to_csv());
  CHECK(rep.to_json_lines() == again.to_json_lines());

  // Frozen format: 17 columns in the header and each member row.
  std::istringstream lines(rep.to_csv());
  std::string line;
  for (int i = 0; i < 7; ++i) {
    REQUIRE(std::getline(lines, line));
    CHECK(std::count(line.begin(), line.end(), ',') == 16);
  }
}

TEST_CASE("empty ensemble reports success with no rows") {
  EnsembleConfig cfg = small_config();
  cfg.count = 0;
  const VerificationReport rep = run_suite(cfg);
  CHECK(rep.rows.empty());
  CHECK(rep.all_pass);
  CHECK(rep.agg.fail_count == 0);
  CHECK(rep.elliptic.empty());
}

TEST_CASE("aggregates are independent of row order") {
  EnsembleConfig cfg = small_config();
  const VerificationReport rep = run_suite(cfg);
  std::vector<MemberRow> shuffled = rep.rows;
  std::mt19937 urng(99);
  for (int trial = 0; trial < 5; ++trial) {
    std::shuffle(shuffled.begin(), shuffled.end(), urng);
    const Aggregates a = compute_aggregates(shuffled);
    CHECK(a.abp_C_emp == rep.agg.abp_C_emp);
    CHECK(a.lb_slope == rep.agg.lb_slope);
    CHECK(a.fail_count == rep.agg.fail_count);
  }
}

TEST_CASE("sign-flipped sources are detected as hard failures") {
  EnsembleConfig cfg = small_config();
  cfg.count = 3;
  cfg.fs_fit_samples = 0;
  cfg.inject_sign_flip = true;
  const VerificationReport rep = run_suite(cfg);
  CHECK_FALSE(rep.all_pass);
  CHECK(rep.agg.fail_count == 3);
  for (const MemberRow& r : rep.rows) CHECK_FALSE(r.pass);
}

TEST_CASE("fs ratio sweep: exact at full density, monotone, tight fit") {
  const FSFitReport rep = fs_fit(0.25, 10, 17, EllipticityPair(1.0, 2.0), 65);
  CHECK(rep.monotone_ok);
  CHECK(rep.r2 >= 0.9);
  CHECK(rep.sigma_hat > 0.0);
  CHECK(rep.C_hat > 0.0);
  CHECK(rep.C_envelope > 0.0);
  CHECK(rep.C_envelope <= rep.C_hat * (1.0 + 1e-9));
  bool saw_full = false;
  for (const FSSample& s : rep.samples) {
    CHECK(s.ratio > 0.0);
    CHECK(s.ratio <= 1.0 + 1e-12);
    if (s.density == 1.0) {
      saw_full = true;
      CHECK(s.ratio == 1.0);
    }
  }
  CHECK(saw_full);
}

TEST_CASE("fs exponent is stable across seeds") {
  const FSFitReport a = fs_fit(0.25, 10, 17, EllipticityPair(1.0, 2.0), 65);
  const FSFitReport b = fs_fit(0.25, 10, 18, EllipticityPair(1.0, 2.0), 65);
  const double hi = std::max(a.sigma_hat, b.sigma_hat);
  const double lo = std::min(a.sigma_hat, b.sigma_hat);
  CHECK(lo > 0.0);
  CHECK(hi / lo <= 1.3);
}

TEST_CASE("fs geometry preconditions reject bad source cylinders") {
  // Source cylinder pokes out of the bottom.
  CHECK_THROWS_AS(fs_fit(0.9, 10, 17, EllipticityPair(1.0, 2.0), 65),
                  geometry_error);
  // Spread time swallows the probe window.
  CHECK_THROWS_AS(fs_fit(0.3, 10, 17, EllipticityPair(1.0, 2.0), 65),
                  geometry_error);
  CHECK_THROWS_AS(fs_fit(0.25, 1, 17, EllipticityPair(1.0, 2.0), 65),
                  std::invalid_argument);
}

TEST_CASE("steady march matches the one-dimensional closed form") {
  const EllipticRow row =
      elliptic_limit_run(0.25, 5.0, EllipticityPair(1.0, 1.0), 0.5);
  CHECK(row.converged);
  CHECK(row.closed_form_err >= 0.0);
  CHECK(row.closed_form_err <= 1e-4);
  CHECK(row.pass);
  CHECK(row.steady_center == doctest::Approx(0.25 - 0.5 * 0.25 * 0.25).epsilon(1e-3));
  CHECK(row.time_to_steady <= 5.0);
}

TEST_CASE("steady values scale like r to a finite power near one") {
  std::vector<double> lr, lv;
  for (double r : {0.1, 0.2, 0.4}) {
    const EllipticRow row =
        elliptic_limit_run(r, 5.0, EllipticityPair(1.0, 2.0), 0.5, 65);
    CHECK(row.converged);
    CHECK(row.steady_core_min > 0.0);
    CHECK(row.pass);
    lr.push_back(std::log(r));
    lv.push_back(std::log(row.steady_center));
  }
  const double slope = (lv[2] - lv[0]) / (lr[2] - lr[0]);
  CHECK(std::isfinite(slope));
  CHECK(slope > 0.5);
  CHECK(slope < 1.5);
}

TEST_CASE("elliptic run rejects horizons too short to relax") {
  CHECK_THROWS_AS(elliptic_limit_run(0.25, 2.0, EllipticityPair(1.0, 1.0), 0.5),
                  std::invalid_argument);
  CHECK_THROWS_AS(elliptic_limit_run(1.5, 5.0, EllipticityPair(1.0, 1.0), 0.5),
                  std::invalid_argument);
}

TEST_CASE("json lines mirror the csv rows") {
  EnsembleConfig cfg = small_config();
  cfg.count = 2;
  cfg.fs_fit_samples = 0;
  const VerificationReport rep = run_suite(cfg);
  const std::string json = rep.to_json_lines();
  std::istringstream lines(json);
  std::string line;
  int n = 0;
  while (std::getline(lines, line)) {
    CHECK(line.front() == '{');
    CHECK(line.back() == '}');
    ++n;
  }
  CHECK(n == 2 + 3 + 1);  // member rows, elliptic rows, aggregates
  CHECK(json.find("\"member_index\":0") != std::string::npos);
  CHECK(json.find("\"aggregates\"") != std::string::npos);
}
