#include "pargrow/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "pargrow/pucci.hpp"

namespace pargrow {

namespace {

constexpr int kCoeffCells = 16;  // dyadic coefficient resolution per axis
// Rotated coefficient cells keep the sign-split stencil monotone only while
// a11 >= |a12|; that holds for every angle when Lambda/lambda stays below
// (1 + sqrt(2)/2) / (1 - sqrt(2)/2) ~ 5.8.  Beyond that we fall back to
// axis-aligned cells.
constexpr double kMaxRotatedRatio = 5.0;

int dyadic_cell(double v, double lo, double hi) {
  const double s = (v - lo) / (hi - lo) * kCoeffCells;
  const int i = static_cast<int>(std::floor(s));
  return std::clamp(i, 0, kCoeffCells - 1);
}

void check_config(const EnsembleConfig& config) {
  if (!(config.kappa > 0.0) || !(config.kappa < 1.0)) {
    throw std::invalid_argument("kappa must lie in (0, 1)");
  }
  if (config.N != 1 && config.N != 2) {
    throw std::invalid_argument("N must be 1 or 2");
  }
  if (config.count < 0) throw std::invalid_argument("count must be >= 0");
}

double norm2(const double* x, int dim) {
  return dim == 1 ? std::abs(x[0]) : std::hypot(x[0], x[1]);
}

// Value of the source before the optional sign flip.
double raw_source(const MemberDraw& d, const double* x, double t) {
  switch (d.family) {
    case SourceFamily::IndicatorCells: {
      for (const SourceBox& b : d.boxes) {
        if (!(t <= b.t_top && t > b.t_top - b.t_height)) continue;
        bool in = std::abs(x[0] - b.center[0]) <= b.half_width;
        if (d.dim == 2) in = in && std::abs(x[1] - b.center[1]) <= b.half_width;
        if (in) return 1.0;
      }
      return 0.0;
    }
    case SourceFamily::SmoothBumps: {
      double f = 0.0;
      for (const SourceBump& b : d.bumps) {
        double q = (t - b.t_center) * (t - b.t_center) / (b.w_time * b.w_time);
        double dx = x[0] - b.center[0];
        q += dx * dx / (b.w_space * b.w_space);
        if (d.dim == 2) {
          double dy = x[1] - b.center[1];
          q += dy * dy / (b.w_space * b.w_space);
        }
        if (q < 40.0) f += b.amp * std::exp(-q);
      }
      return std::min(f, 1.0);
    }
    case SourceFamily::LevelSet: {
      const double rr = norm2(x, d.dim);
      double S;
      if (rr <= d.ls_core_radius) {
        S = 1.0;
      } else if (rr < d.ls_support_radius) {
        S = 0.5 * (1.0 + std::cos(M_PI * (rr - d.ls_core_radius) /
                                  (d.ls_support_radius - d.ls_core_radius)));
      } else {
        return 0.0;
      }
      double T;
      const double lo = d.ls_t_low, top = d.plateau_t_top, w = d.ls_rolloff;
      if (t <= lo || t > top) {
        return 0.0;
      } else if (t < lo + w) {
        T = 0.5 * (1.0 - std::cos(M_PI * (t - lo) / w));
      } else if (t > top - w) {
        T = 0.5 * (1.0 - std::cos(M_PI * (top - t) / w));
      } else {
        T = 1.0;
      }
      return d.plateau_value * S * T;
    }
  }
  return 0.0;
}

// Minimum of u over nodes with |x| <= kappa and stored times in [t0, top].
double window_min(const GridFunction& u, double kappa, double t0) {
  const Grid& g = u.grid();
  std::vector<int> core;
  const double r2 = kappa * kappa + 1e-12;
  for (int node = 0; node < g.node_count(); ++node) {
    if (g.dist2_from_center(node) <= r2) core.push_back(node);
  }
  double mn = std::numeric_limits<double>::infinity();
  for (int si = u.stored_at_or_after(t0); si < u.stored_count(); ++si) {
    for (int node : core) mn = std::min(mn, u.value(si, node));
  }
  return mn;
}

double pow10_or_zero(double log10v) {
  if (log10v == -std::numeric_limits<double>::infinity()) return 0.0;
  return std::pow(10.0, log10v);
}

void decide_pass(const MemberEval& ev, MemberRow& row) {
  const double tol = 2.0 * row.rich_err;
  bool ok = ev.u_min_global >= 0.0;
  ok = ok && row.u_min_tsfs >= pow10_or_zero(row.tsfs_bound_log10) - tol;
  ok = ok && row.u_min_lb >= pow10_or_zero(row.lb_bound_log10) - tol;
  if (row.slick_applicable) {
    ok = ok && row.u_min_slick >= pow10_or_zero(row.slick_bound_log10) - tol;
  }
  ok = ok && std::isfinite(row.u_max) && std::isfinite(row.abp_ratio);
  row.pass = ok;
}

// Node of `fine` at the same coordinates as `node` of `coarse`; grids must be
// concentric with fine.h dividing coarse.h.
int matching_node(const Grid& coarse, int node, const Grid& fine) {
  double x[2];
  coarse.coords(node, x);
  const int i = static_cast<int>(std::llround(
                    (x[0] - (fine.center[0] - fine.radius)) / fine.h)) +
                fine.pad;
  if (fine.dim == 1) return i;
  const int j = static_cast<int>(std::llround(
                    (x[1] - (fine.center[1] - fine.radius)) / fine.h)) +
                fine.pad;
  return fine.index(i, j);
}

struct LsqFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 1.0;
  long n = 0;
};

LsqFit lsq(const std::vector<double>& xs, const std::vector<double>& ys) {
  LsqFit f;
  f.n = static_cast<long>(xs.size());
  if (f.n < 2) return f;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double n = static_cast<double>(f.n);
  const double den = n * sxx - sx * sx;
  if (den == 0.0) return f;
  f.slope = (n * sxy - sx * sy) / den;
  f.intercept = (sy - f.slope * sx) / n;
  double ss_res = 0, ss_tot = 0;
  const double mean = sy / n;
  for (size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - (f.intercept + f.slope * xs[i]);
    ss_res += e * e;
    ss_tot += (ys[i] - mean) * (ys[i] - mean);
  }
  f.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return f;
}

void append_g17(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

void append_kv_json(std::string& out, const char* key, double v, bool first = false) {
  if (!first) out += ',';
  out += '"';
  out += key;
  out += "\":";
  if (std::isfinite(v)) {
    append_g17(out, v);
  } else {
    out += '"';
    append_g17(out, v);
    out += '"';
  }
}

}  // namespace

const char* source_family_name(SourceFamily f) {
  switch (f) {
    case SourceFamily::IndicatorCells: return "indicator-cells";
    case SourceFamily::SmoothBumps: return "smooth-bumps";
    case SourceFamily::LevelSet: return "level-set";
  }
  return "?";
}

const char* coefficient_family_name(CoefficientFamily f) {
  return f == CoefficientFamily::Pucci ? "pucci" : "random-linear";
}

double MemberDraw::source(const double* x, double t) const {
  const double f = raw_source(*this, x, t);
  return sign_flip ? -f : f;
}

double member_source_magnitude(const MemberDraw& d, const double* x, double t) {
  return raw_source(d, x, t);
}

SymMatrix MemberDraw::coeff(const double* x, double t) const {
  const int it = dyadic_cell(t, -1.0, 0.0);
  const int i0 = dyadic_cell(x[0], -1.0, 1.0);
  if (dim == 1) {
    return SymMatrix::scalar1(coeff_e1[static_cast<size_t>(it) * kCoeffCells + i0]);
  }
  const int i1 = dyadic_cell(x[1], -1.0, 1.0);
  const size_t c =
      (static_cast<size_t>(it) * kCoeffCells + i1) * kCoeffCells + i0;
  const double e1 = coeff_e1[c], e2 = coeff_e2[c], th = coeff_angle[c];
  const double co = std::cos(th), si = std::sin(th);
  return SymMatrix::full2(e1 * co * co + e2 * si * si, (e1 - e2) * co * si,
                          e1 * si * si + e2 * co * co);
}

MemberDraw draw_member(const EnsembleConfig& config, int index) {
  check_config(config);
  if (index < 0) throw std::invalid_argument("member index must be >= 0");
  Rng rng = Rng::for_member(static_cast<uint64_t>(config.seed),
                            static_cast<uint64_t>(index));
  MemberDraw d;
  d.index = index;
  d.dim = config.N;
  d.family = static_cast<SourceFamily>(index % 3);
  d.op_family = index % 2 == 0 ? CoefficientFamily::Pucci
                               : CoefficientFamily::RandomLinear;
  d.sign_flip = config.inject_sign_flip;

  // All supports stay strictly inside the unit cylinder with room to spare so
  // rasterization at any resolution keeps them interior.
  const double reach = 0.875 / std::sqrt(static_cast<double>(d.dim));
  switch (d.family) {
    case SourceFamily::IndicatorCells: {
      const double m_target = rng.uniform(0.08, 0.45);
      const double dt_min = std::max(0.35, m_target / 0.8);
      const double dtv = rng.uniform(dt_min, 0.6);
      // Half-width giving the target measure fraction of Q_1, capped to keep
      // the box inside the unit ball (the realized measure is re-rasterized).
      double a = d.dim == 1 ? m_target / dtv
                            : 0.5 * std::sqrt(M_PI * m_target / dtv);
      a = std::min(a, reach - 0.01);
      SourceBox main;
      main.half_width = a;
      const double b = std::max(0.0, reach - a);
      main.center[0] = rng.uniform(-b, b);
      main.center[1] = d.dim == 2 ? rng.uniform(-b, b) : 0.0;
      main.t_top = rng.uniform(-0.95 + dtv, -0.35);
      main.t_height = dtv;
      d.boxes.push_back(main);
      const int extra = static_cast<int>(rng.below(3));
      for (int e = 0; e < extra; ++e) {
        SourceBox sb;
        sb.half_width = rng.uniform(0.05, 0.15);
        const double be = std::max(0.0, reach - sb.half_width);
        sb.center[0] = rng.uniform(-be, be);
        sb.center[1] = d.dim == 2 ? rng.uniform(-be, be) : 0.0;
        sb.t_height = rng.uniform(0.1, 0.25);
        sb.t_top = rng.uniform(-0.95 + sb.t_height, -0.35);
        d.boxes.push_back(sb);
      }
      d.check_level = 0.5;
      break;
    }
    case SourceFamily::SmoothBumps: {
      d.check_level = 0.3;
      const int nb = 1 + static_cast<int>(rng.below(3));
      for (int e = 0; e < nb; ++e) {
        SourceBump b;
        b.amp = rng.uniform(0.5, 1.0);
        b.center[0] = rng.uniform(-0.6, 0.6);
        b.center[1] = d.dim == 2 ? rng.uniform(-0.6, 0.6) : 0.0;
        b.t_center = rng.uniform(-0.9, -0.4);
        b.w_space = rng.uniform(0.15, 0.4);
        b.w_time = rng.uniform(0.1, 0.3);
        d.bumps.push_back(b);
      }
      // The superlevel set of one bump at the check level is an ellipsoid
      // with semi-axes w * sqrt(log(amp/level)).  Rescale widths so the
      // largest bump alone covers at least 0.06 of Q_1 and the summed
      // estimate stays under 0.42, keeping every drawn mask measure inside
      // the published band.
      auto bump_fraction = [&](const SourceBump& b) {
        const double L = std::log(b.amp / d.check_level);
        if (d.dim == 1) return 0.5 * M_PI * b.w_space * b.w_time * L;
        return 4.0 / 3.0 * b.w_space * b.w_space * b.w_time * std::pow(L, 1.5);
      };
      double largest = 0.0, total = 0.0;
      for (const SourceBump& b : d.bumps) {
        const double f = bump_fraction(b);
        largest = std::max(largest, f);
        total += f;
      }
      // m scales with w_space^dim * w_time, so one width factor per power.
      const double pw = 1.0 / (d.dim + 1.0);
      double scale = 1.0;
      if (largest < 0.06) scale = std::pow(0.06 / largest, pw);
      if (total * std::pow(scale, d.dim + 1.0) > 0.42) {
        scale = std::pow(0.42 / total, pw);
      }
      for (SourceBump& b : d.bumps) {
        b.w_space = std::min(b.w_space * scale, 0.5);
        b.w_time = std::min(b.w_time * scale, 0.35);
        // Keep the check-level ellipsoid inside the cylinder with margin.
        const double L = std::sqrt(std::log(b.amp / d.check_level));
        const double ax = b.w_space * L, at = b.w_time * L;
        b.center[0] = std::clamp(b.center[0], -(0.97 - ax), 0.97 - ax);
        if (d.dim == 2) {
          b.center[1] = std::clamp(b.center[1], -(0.97 - ax), 0.97 - ax);
        }
        b.t_center = std::clamp(b.t_center, -0.98 + at, -0.1 - at);
      }
      break;
    }
    case SourceFamily::LevelSet: {
      if (config.kappa > 0.9) {
        throw std::invalid_argument(
            "level-set family needs kappa <= 0.9 for a nonempty lower-cylinder "
            "plateau");
      }
      d.plateau_value = rng.uniform(0.4, 1.0);
      d.ls_support_radius = 0.9 * (1.0 - config.kappa);
      d.ls_core_radius = 0.6 * (1.0 - config.kappa);
      d.ls_t_low = -0.98;
      d.plateau_t_top = -config.kappa - 0.02;
      d.ls_rolloff = 0.25 * (d.plateau_t_top - d.ls_t_low);
      d.check_level = 0.5 * d.plateau_value;
      break;
    }
  }

  if (d.op_family == CoefficientFamily::RandomLinear) {
    const double lam = config.ell.lambda, Lam = config.ell.Lambda;
    const bool rotate = Lam / lam <= kMaxRotatedRatio;
    const size_t cells = d.dim == 1
                             ? static_cast<size_t>(kCoeffCells) * kCoeffCells
                             : static_cast<size_t>(kCoeffCells) * kCoeffCells *
                                   kCoeffCells;
    d.coeff_e1.resize(cells);
    if (d.dim == 2) {
      d.coeff_e2.resize(cells);
      d.coeff_angle.resize(cells);
    }
    for (size_t c = 0; c < cells; ++c) {
      d.coeff_e1[c] = rng.uniform(lam, Lam);
      if (d.dim == 2) {
        d.coeff_e2[c] = rng.uniform(lam, Lam);
        d.coeff_angle[c] = rotate ? rng.uniform(0.0, M_PI) : 0.0;
      }
    }
  }
  return d;
}

MemberEval generate_member(const EnsembleConfig& config, int index,
                           int axis_nodes_override) {
  MemberEval ev;
  ev.draw = draw_member(config, index);
  const MemberDraw& d = ev.draw;

  SolveGridOptions opt;
  opt.axis_nodes =
      axis_nodes_override > 0 ? axis_nodes_override : config.axis_nodes;
  ev.grid = make_solve_grid(config.N, config.ell, opt);
  const Grid& g = *ev.grid;

  OperatorSpec spec;
  spec.ell = config.ell;
  if (d.op_family == CoefficientFamily::Pucci) {
    spec.kind = OperatorKind::PucciMinus;
  } else {
    spec.kind = OperatorKind::Linear;
    const MemberDraw draw_copy = d;
    spec.coeff = [draw_copy](const Grid& gg, int node, int level) {
      double x[2];
      gg.coords(node, x);
      return draw_copy.coeff(x, gg.time_of(level));
    };
    // Spot-check membership: the drawn coefficients must dominate the minimal
    // Pucci envelope on a sample of test matrices.
    const double probe_x[5] = {-0.8, -0.3, 0.2, 0.6, 0.9};
    const double probe_t[5] = {-0.9, -0.7, -0.5, -0.3, -0.1};
    std::vector<SymMatrix> test;
    if (d.dim == 1) {
      test = {SymMatrix::scalar1(1.0), SymMatrix::scalar1(-1.0),
              SymMatrix::scalar1(0.3)};
    } else {
      test = {SymMatrix::identity(2), SymMatrix::identity(2).scaled(-1.0),
              SymMatrix::full2(0.4, -1.1, 0.9), SymMatrix::full2(-2.0, 0.5, 1.0)};
    }
    for (int p = 0; p < 5; ++p) {
      double x[2] = {probe_x[p], probe_x[(p + 2) % 5] * 0.5};
      const SymMatrix a = d.coeff(x, probe_t[p]);
      for (const SymMatrix& m : test) {
        if (!linear_dominates(a, m, config.ell, 1e-9)) {
          throw std::logic_error("drawn linear coefficient escapes the "
                                 "admissible class");
        }
      }
    }
  }

  const MemberDraw src_draw = d;
  auto src = source_from_pointwise(
      [src_draw](const double* x, double t) { return src_draw.source(x, t); });
  ev.u = solve(ev.grid, spec, src, zero_cells(), 4097, Role::Supersolution);

  // |Q_1|-normalized L^{N+1} norms over lattice cells; the lower-cylinder
  // restriction feeds the algebraic lower-cylinder bound.
  const double p = static_cast<double>(config.N) + 1.0;
  double sum = 0.0, sum_lower = 0.0;
  const double lower_r2 =
      (1.0 - config.kappa) * (1.0 - config.kappa) - 1e-12;
  for (int k = 1; k <= g.steps; ++k) {
    const double tc = g.time_of(k) - 0.5 * g.dt;
    for (int node : g.interior_nodes) {
      double x[2];
      g.coords(node, x);
      const double f = member_source_magnitude(d, x, tc);
      if (f <= 0.0) continue;
      const double w = std::pow(f, p) * g.cell_volume();
      sum += w;
      if (tc <= -config.kappa && g.dist2_from_center(node) < lower_r2) {
        sum_lower += w;
      }
    }
  }
  const double vol = unit_cylinder_volume(config.N);
  ev.f_norm = std::pow(sum / vol, 1.0 / p);
  ev.f_norm_lower = std::pow(sum_lower / vol, 1.0 / p);

  const MemberDraw mask_draw = d;
  const double lvl = d.check_level;
  IndicatorSet mask =
      make_indicator(ev.grid, [mask_draw, lvl](const double* x, double t) {
        return member_source_magnitude(mask_draw, x, t) > lvl;
      });
  ev.mask_m = mask.normalized_measure;

  double mn = std::numeric_limits<double>::infinity();
  double mx = -mn;
  for (int si = 0; si < ev.u.stored_count(); ++si) {
    auto vals = ev.u.level_values(si);
    for (double v : vals) {
      mn = std::min(mn, v);
      mx = std::max(mx, v);
    }
  }
  ev.u_min_global = mn;
  ev.u_max = mx;
  return ev;
}

void check_two_sided(const MemberEval& ev, const EnsembleConfig& config,
                     MemberRow& row) {
  row.f_norm = ev.f_norm;
  row.u_max = ev.u_max;
  row.abp_ratio = ev.f_norm > 0.0 ? ev.u_max / ev.f_norm : 0.0;
  const TsfsBound tb =
      thm_tsfs_bound(ev.f_norm, config.kappa, config.ell, config.N, config.fs);
  row.tsfs_bound_log10 = tb.bound.log10();
  row.u_min_tsfs = window_min(ev.u, config.kappa, tb.window_t0);
}

void check_measure_form(const MemberEval& ev, const EnsembleConfig& config,
                        MemberRow& row) {
  row.m = ev.mask_m;
  const PosLog lb = thm_lb_bound(ev.mask_m, ev.draw.check_level, config.kappa,
                                 config.ell, config.N, config.fs);
  row.lb_bound_log10 = lb.log10();
  row.u_min_lb = window_min(ev.u, config.kappa, -config.kappa * ev.mask_m);
  if (ev.draw.family == SourceFamily::LevelSet) {
    row.slick_applicable = true;
    const PosLog sb = cor_slicklb_bound(ev.f_norm_lower, config.kappa,
                                        config.ell, config.N, config.fs);
    row.slick_bound_log10 = sb.log10();
    row.u_min_slick = window_min(ev.u, config.kappa, -config.kappa);
  } else {
    row.slick_applicable = false;
    row.u_min_slick = 0.0;
    row.slick_bound_log10 = -std::numeric_limits<double>::infinity();
  }
}

FSFitReport fs_fit(double r, int sample_count, long seed,
                   const EllipticityPair& ell, int axis_nodes) {
  if (!(r > 0.0)) throw std::invalid_argument("r must be positive");
  if (sample_count < 2) {
    throw std::invalid_argument("sample_count must be >= 2");
  }
  const double x0 = 0.0, t0 = -0.7;
  if (std::abs(x0) + r >= 1.0 || t0 - r * r <= -1.0 || t0 > 0.0) {
    throw geometry_error("source cylinder must sit inside the unit cylinder");
  }
  const double t_gate = t0 + 9.0 * r * r;
  if (!(t_gate < 0.0)) {
    throw geometry_error("no probe window past the spread time of the source "
                         "cylinder");
  }

  SolveGridOptions opt;
  opt.axis_nodes = axis_nodes;
  GridPtr grid = make_solve_grid(1, ell, opt);
  const Grid& g = *grid;

  IndicatorSet full = make_indicator(grid, [&](const double* x, double t) {
    return std::abs(x[0] - x0) < r && t <= t0 && t > t0 - r * r;
  });
  if (full.set_count == 0) {
    throw geometry_error("source cylinder rasterizes to no cells");
  }
  const GridFunction wq = fundamental_solution(full, ell);

  // Probe lattice: three offsets around the source center, three times spread
  // through the admissible window (t_gate, 0).
  const double probe_x[3] = {x0, x0 - 2.0 * r, x0 + 2.0 * r};
  double probe_t[3];
  for (int j = 0; j < 3; ++j) probe_t[j] = t_gate * (1.0 - (j + 1) / 4.0);
  int probe_node[3];
  for (int j = 0; j < 3; ++j) {
    if (std::abs(probe_x[j]) >= 1.0) {
      throw geometry_error("probe point leaves the unit ball");
    }
    probe_node[j] = static_cast<int>(std::llround(
                        (probe_x[j] - (g.center[0] - g.radius)) / g.h)) +
                    g.pad;
  }
  int probe_si[3];
  for (int j = 0; j < 3; ++j) probe_si[j] = wq.stored_at_or_before(probe_t[j]);

  // One uniform per source cell, drawn once: thresholding at increasing
  // densities gives a nested family of subsets.
  std::vector<size_t> set_idx;
  for (size_t c = 0; c < full.cells.size(); ++c) {
    if (full.cells[c]) set_idx.push_back(c);
  }
  Rng rng(static_cast<uint64_t>(seed));
  std::vector<double> u_cell(set_idx.size());
  for (double& u : u_cell) u = rng.uniform();

  FSFitReport rep;
  rep.r = r;
  IndicatorSet sub;
  sub.grid = grid;
  sub.cells.assign(full.cells.size(), 0);

  std::vector<double> log_d, log_ratio;
  double prev_ratio[9] = {0};
  bool have_prev = false;
  rep.monotone_ok = true;
  for (int s = 0; s < sample_count; ++s) {
    const double target = s == sample_count - 1
                              ? 1.0
                              : 0.05 + 0.95 * s / (sample_count - 1);
    std::fill(sub.cells.begin(), sub.cells.end(), 0);
    for (size_t k = 0; k < set_idx.size(); ++k) {
      if (u_cell[k] <= target) sub.cells[set_idx[k]] = 1;
    }
    sub.recount();
    if (sub.set_count == 0) continue;
    const double density = static_cast<double>(sub.set_count) /
                           static_cast<double>(full.set_count);
    const GridFunction we = fundamental_solution(sub, ell);
    double cur[9];
    int pi = 0;
    for (int jt = 0; jt < 3; ++jt) {
      for (int jx = 0; jx < 3; ++jx) {
        const double denom = wq.value(probe_si[jt], probe_node[jx]);
        if (!(denom > 0.0)) {
          throw std::logic_error("reference fundamental solution vanishes at "
                                 "a probe");
        }
        const double ratio = we.value(probe_si[jt], probe_node[jx]) / denom;
        cur[pi] = ratio;
        FSSample samp;
        samp.density = density;
        samp.ratio = ratio;
        samp.x = probe_x[jx];
        samp.t = probe_t[jt];
        rep.samples.push_back(samp);
        if (ratio > 0.0) {
          log_d.push_back(std::log(density));
          log_ratio.push_back(std::log(ratio));
        }
        ++pi;
      }
    }
    if (have_prev) {
      for (int q = 0; q < 9; ++q) {
        if (cur[q] < prev_ratio[q] - 1e-12) rep.monotone_ok = false;
      }
    }
    std::copy(cur, cur + 9, prev_ratio);
    have_prev = true;
  }

  const LsqFit fit = lsq(log_d, log_ratio);
  rep.sigma_hat = fit.slope;
  rep.C_hat = std::exp(fit.intercept);
  rep.r2 = fit.r2;
  double env = std::numeric_limits<double>::infinity();
  for (const FSSample& s : rep.samples) {
    if (s.ratio > 0.0) {
      env = std::min(env, s.ratio / std::pow(s.density, rep.sigma_hat));
    }
  }
  rep.C_envelope = std::isfinite(env) ? env : 0.0;
  return rep;
}

EllipticRow elliptic_limit_run(double r, double horizon,
                               const EllipticityPair& ell, double kappa,
                               int axis_nodes) {
  if (!(r > 0.0) || !(r < 1.0)) throw std::invalid_argument("r must lie in (0, 1)");
  if (!(horizon >= 4.0)) {
    throw std::invalid_argument("horizon must be >= 4 to outlast the slowest "
                                "relaxation mode");
  }
  if (!(kappa > 0.0) || !(kappa < 1.0)) {
    throw std::invalid_argument("kappa must lie in (0, 1)");
  }

  SolveGridOptions opt;
  opt.axis_nodes = axis_nodes;
  GridPtr grid = make_solve_grid(1, ell, opt, 0.0, 0.0, 1.0, 0.0, horizon);
  const Grid& g = *grid;

  // Cell-averaged indicator of B_r: overlap fraction of each node cell.
  CellFn src = [r](const Grid& gg, int node, int level) {
    (void)level;
    double x[2];
    gg.coords(node, x);
    const double lo = std::max(x[0] - 0.5 * gg.h, -r);
    const double hi = std::min(x[0] + 0.5 * gg.h, r);
    return hi > lo ? (hi - lo) / gg.h : 0.0;
  };
  OperatorSpec spec;
  spec.kind = OperatorKind::PucciMinus;
  spec.ell = ell;

  const int stride = std::max(1, static_cast<int>(std::llround(0.05 / g.dt)));
  std::vector<double> prev, steady;
  int prev_level = 0;
  EllipticRow row;
  row.r = r;
  march(grid, spec, src, zero_cells(),
        [&](int level, std::span<const double> vals) {
          if (level == 0) {
            prev.assign(vals.begin(), vals.end());
            prev_level = 0;
            return true;
          }
          if (level - prev_level < stride && level != g.steps) return true;
          double diff = 0.0, umax = 0.0;
          for (size_t i = 0; i < vals.size(); ++i) {
            diff = std::max(diff, std::abs(vals[i] - prev[i]));
            umax = std::max(umax, std::abs(vals[i]));
          }
          const double rate = diff / ((level - prev_level) * g.dt);
          prev.assign(vals.begin(), vals.end());
          prev_level = level;
          steady.assign(vals.begin(), vals.end());
          if (rate <= 1e-4 * std::max(umax, 1e-30)) {
            row.converged = true;
            row.time_to_steady = g.duration + g.time_of(level);
            return false;
          }
          return true;
        });
  if (!row.converged) row.time_to_steady = g.duration;
  if (steady.empty()) steady.assign(g.node_count(), 0.0);

  const int center_node = static_cast<int>(std::llround(
                              (0.0 - (g.center[0] - g.radius)) / g.h)) +
                          g.pad;
  row.steady_center = steady[center_node];
  double core_min = std::numeric_limits<double>::infinity();
  for (int node = 0; node < g.node_count(); ++node) {
    if (g.dist2_from_center(node) <= kappa * kappa + 1e-12) {
      core_min = std::min(core_min, steady[node]);
    }
  }
  row.steady_core_min = core_min;

  const PosLog bound = elliptic_limit_bound(r, kappa, ell, 1);
  row.bound_log10 = bound.log10();

  if (ell.lambda == ell.Lambda) {
    // -lambda w'' = chi_{B_r}, w(+-1) = 0: parabolic cap spliced to linear
    // tails.
    double err = 0.0;
    for (int node = 0; node < g.node_count(); ++node) {
      double x[2];
      g.coords(node, x);
      const double ax = std::abs(x[0]);
      const double w = (ax <= r ? r - 0.5 * r * r - 0.5 * x[0] * x[0]
                                : r * (1.0 - ax)) /
                       ell.lambda;
      err = std::max(err, std::abs(steady[node] - w));
    }
    row.closed_form_err = err;
  }

  row.pass = row.converged &&
             row.steady_core_min >= pow10_or_zero(row.bound_log10) - 1e-12 &&
             row.steady_core_min >= 0.0;
  return row;
}

Aggregates compute_aggregates(const std::vector<MemberRow>& rows) {
  // Sort by member index before folding so every permutation of the input
  // produces bit-identical sums.
  std::vector<MemberRow> sorted = rows;
  std::sort(sorted.begin(), sorted.end(),
            [](const MemberRow& a, const MemberRow& b) {
              return a.member_index < b.member_index;
            });
  Aggregates agg;
  std::vector<double> lx, ly;
  for (const MemberRow& row : sorted) {
    if (row.f_norm > 0.0) agg.abp_C_emp = std::max(agg.abp_C_emp, row.abp_ratio);
    if (!row.pass) ++agg.fail_count;
    if (row.family == SourceFamily::IndicatorCells && row.m > 0.0 &&
        row.u_min_lb > 0.0) {
      lx.push_back(std::log(row.m));
      ly.push_back(std::log(row.u_min_lb));
    }
  }
  agg.lb_slope = lsq(lx, ly).slope;
  return agg;
}

VerificationReport run_suite(const EnsembleConfig& config) {
  check_config(config);
  VerificationReport rep;
  rep.config = config;

  // Certifies every barrier parameter set behind the bound pipeline before
  // any member work; throws if one fails.
  (void)build_constants_report(config.kappa, config.ell, config.N, config.fs);

  // Refinement pre-pass: every tenth member is re-solved at doubled
  // resolution; the largest observed difference becomes the discretization
  // tolerance for members without their own refinement.
  std::vector<std::pair<int, double>> refined;
  double global_tol = 0.0;
  double cemp_coarse = 0.0, cemp_fine = 0.0;
  for (int i = 0; i < config.count; i += 10) {
    const MemberEval coarse = generate_member(config, i);
    const int fine_axis = (coarse.grid->axis_nodes - 1) * 2 + 1;
    const MemberEval fine = generate_member(config, i, fine_axis);
    double err = 0.0;
    const int si_c = coarse.u.stored_count() - 1;
    const int si_f = fine.u.stored_count() - 1;
    for (int node = 0; node < coarse.grid->node_count(); ++node) {
      const int fn = matching_node(*coarse.grid, node, *fine.grid);
      err = std::max(err, std::abs(coarse.u.value(si_c, node) -
                                   fine.u.value(si_f, fn)));
    }
    refined.emplace_back(i, err);
    global_tol = std::max(global_tol, err);
    if (coarse.f_norm > 0.0) {
      cemp_coarse = std::max(cemp_coarse, coarse.u_max / coarse.f_norm);
    }
    if (fine.f_norm > 0.0) {
      cemp_fine = std::max(cemp_fine, fine.u_max / fine.f_norm);
    }
  }
  rep.abp_refinement_ratio = cemp_fine > 0.0 ? cemp_coarse / cemp_fine : 1.0;

  for (int i = 0; i < config.count; ++i) {
    const MemberEval ev = generate_member(config, i);
    MemberRow row;
    row.member_index = i;
    row.family = ev.draw.family;
    row.operator_kind = ev.draw.op_family;
    row.seed = config.seed;
    check_two_sided(ev, config, row);
    check_measure_form(ev, config, row);
    row.rich_err = global_tol;
    for (const auto& [idx, err] : refined) {
      if (idx == i) row.rich_err = err;
    }
    decide_pass(ev, row);
    rep.rows.push_back(row);
  }
  rep.agg = compute_aggregates(rep.rows);

  bool hard_ok = rep.agg.fail_count == 0;
  if (config.count > 0) {
    if (config.fs_fit_samples > 0 && config.N == 1) {
      rep.fs = fs_fit(0.25, config.fs_fit_samples, config.fs_fit_seed,
                      config.ell, config.axis_nodes);
    }
    std::vector<double> lr, lv;
    for (double r : {0.1, 0.2, 0.4}) {
      rep.elliptic.push_back(
          elliptic_limit_run(r, 5.0, config.ell, config.kappa,
                             config.axis_nodes));
      const EllipticRow& er = rep.elliptic.back();
      hard_ok = hard_ok && er.pass;
      if (er.steady_center > 0.0) {
        lr.push_back(std::log(r));
        lv.push_back(std::log(er.steady_center));
      }
    }
    rep.elliptic_slope = lsq(lr, lv).slope;
  }
  rep.all_pass = hard_ok;
  return rep;
}

std::string VerificationReport::to_csv() const {
  std::string out =
      "member_index,family,operator_kind,seed,m,f_norm,u_min_tsfs,"
      "tsfs_bound_log10,u_min_lb,lb_bound_log10,u_max,abp_ratio,"
      "slick_applicable,u_min_slick,slick_bound_log10,rich_err,pass\n";
  for (const MemberRow& r : rows) {
    char head[64];
    std::snprintf(head, sizeof head, "%d,%s,%s,%ld,", r.member_index,
                  source_family_name(r.family),
                  coefficient_family_name(r.operator_kind), r.seed);
    out += head;
    const double nums[] = {r.m,        r.f_norm,       r.u_min_tsfs,
                           r.tsfs_bound_log10, r.u_min_lb, r.lb_bound_log10,
                           r.u_max,    r.abp_ratio};
    for (double v : nums) {
      append_g17(out, v);
      out += ',';
    }
    out += r.slick_applicable ? '1' : '0';
    out += ',';
    append_g17(out, r.u_min_slick);
    out += ',';
    append_g17(out, r.slick_bound_log10);
    out += ',';
    append_g17(out, r.rich_err);
    out += ',';
    out += r.pass ? '1' : '0';
    out += '\n';
  }
  for (const EllipticRow& e : elliptic) {
    out += "elliptic,";
    append_g17(out, e.r);
    out += ',';
    append_g17(out, e.steady_center);
    out += ',';
    append_g17(out, e.steady_core_min);
    out += ',';
    append_g17(out, e.bound_log10);
    out += ',';
    out += e.converged ? '1' : '0';
    out += ',';
    append_g17(out, e.closed_form_err);
    out += ',';
    out += e.pass ? '1' : '0';
    out += '\n';
  }
  auto agg_line = [&out](const char* key, double v) {
    out += "aggregate,";
    out += key;
    out += ',';
    append_g17(out, v);
    out += '\n';
  };
  agg_line("abp_C_emp", agg.abp_C_emp);
  agg_line("abp_refinement_ratio", abp_refinement_ratio);
  agg_line("lb_slope", agg.lb_slope);
  agg_line("fail_count", static_cast<double>(agg.fail_count));
  agg_line("fs_sigma_hat", fs.sigma_hat);
  agg_line("fs_C_hat", fs.C_hat);
  agg_line("fs_C_envelope", fs.C_envelope);
  agg_line("fs_r2", fs.r2);
  agg_line("fs_monotone", fs.monotone_ok ? 1.0 : 0.0);
  agg_line("elliptic_slope", elliptic_slope);
  agg_line("all_pass", all_pass ? 1.0 : 0.0);
  return out;
}

std::string VerificationReport::to_json_lines() const {
  std::string out;
  for (const MemberRow& r : rows) {
    out += "{\"member_index\":";
    char head[96];
    std::snprintf(head, sizeof head, "%d,\"family\":\"%s\",\"operator_kind\":\"%s\",\"seed\":%ld",
                  r.member_index, source_family_name(r.family),
                  coefficient_family_name(r.operator_kind), r.seed);
    out += head;
    append_kv_json(out, "m", r.m);
    append_kv_json(out, "f_norm", r.f_norm);
    append_kv_json(out, "u_min_tsfs", r.u_min_tsfs);
    append_kv_json(out, "tsfs_bound_log10", r.tsfs_bound_log10);
    append_kv_json(out, "u_min_lb", r.u_min_lb);
    append_kv_json(out, "lb_bound_log10", r.lb_bound_log10);
    append_kv_json(out, "u_max", r.u_max);
    append_kv_json(out, "abp_ratio", r.abp_ratio);
    out += ",\"slick_applicable\":";
    out += r.slick_applicable ? "true" : "false";
    append_kv_json(out, "u_min_slick", r.u_min_slick);
    append_kv_json(out, "slick_bound_log10", r.slick_bound_log10);
    append_kv_json(out, "rich_err", r.rich_err);
    out += ",\"pass\":";
    out += r.pass ? "true" : "false";
    out += "}\n";
  }
  for (const EllipticRow& e : elliptic) {
    out += "{\"elliptic_r\":";
    append_g17(out, e.r);
    append_kv_json(out, "steady_center", e.steady_center);
    append_kv_json(out, "steady_core_min", e.steady_core_min);
    append_kv_json(out, "bound_log10", e.bound_log10);
    out += ",\"converged\":";
    out += e.converged ? "true" : "false";
    append_kv_json(out, "closed_form_err", e.closed_form_err);
    out += ",\"pass\":";
    out += e.pass ? "true" : "false";
    out += "}\n";
  }
  out += "{\"aggregates\":{";
  append_kv_json(out, "abp_C_emp", agg.abp_C_emp, true);
  append_kv_json(out, "abp_refinement_ratio", abp_refinement_ratio);
  append_kv_json(out, "lb_slope", agg.lb_slope);
  append_kv_json(out, "fail_count", static_cast<double>(agg.fail_count));
  append_kv_json(out, "fs_sigma_hat", fs.sigma_hat);
  append_kv_json(out, "fs_C_hat", fs.C_hat);
  append_kv_json(out, "fs_C_envelope", fs.C_envelope);
  append_kv_json(out, "fs_r2", fs.r2);
  out += ",\"fs_monotone\":";
  out += fs.monotone_ok ? "true" : "false";
  append_kv_json(out, "elliptic_slope", elliptic_slope);
  out += ",\"all_pass\":";
  out += all_pass ? "true" : "false";
  out += "}}\n";
  return out;
}

}  // namespace pargrow
