#include "pargrow/solver.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <utility>
#include <vector>

namespace pargrow {

namespace {

/// Orthogonal lattice frames (p,q) with |p|,|q| <= 3, paired with (-q,p).
/// Every stencil foot is a lattice node, so second differences are exact on
/// quadratics and no interpolation is needed; the pad-3 collar absorbs the
/// reach.  Ordered so a prefix refines the angle set: 0, 45, 26.6, 18.4,
/// 33.7 degrees.
constexpr int kLatticeFrames = 5;
constexpr int kFrameP[kLatticeFrames] = {1, 1, 2, 3, 3};
constexpr int kFrameQ[kLatticeFrames] = {0, 1, 1, 1, 2};

struct LatticeDir {
  int off = 0;         // flat index offset of the foot
  double inv_s2 = 0.0; // 1 / |v|^2 in physical units
};

struct Dim2Frames {
  std::vector<std::array<LatticeDir, 2>> frames;
};

Dim2Frames build_frames(int count, int nx, double h) {
  if (count < 1 || count > kLatticeFrames) {
    throw std::invalid_argument("frames must be between 1 and 5 for the dim-2 stencil");
  }
  Dim2Frames t;
  t.frames.resize(count);
  for (int k = 0; k < count; ++k) {
    const int p = kFrameP[k], q = kFrameQ[k];
    const double inv = 1.0 / ((p * p + q * q) * h * h);
    t.frames[k][0] = {q * nx + p, inv};
    t.frames[k][1] = {p * nx - q, inv};
  }
  return t;
}

double env_minus(double q, const EllipticityPair& e) {
  return q > 0.0 ? e.lambda * q : e.Lambda * q;
}

double env_plus(double q, const EllipticityPair& e) {
  return q > 0.0 ? e.Lambda * q : e.lambda * q;
}

void validate_spec(const OperatorSpec& spec, int dim) {
  if (spec.kind == OperatorKind::Linear) {
    if (!spec.coeff) throw std::invalid_argument("linear operator needs a coefficient function");
  } else if (dim == 2 && (spec.frames < 1 || spec.frames > kLatticeFrames)) {
    throw std::invalid_argument("frames must be between 1 and 5 for the dim-2 stencil");
  }
}

/// All stencil state fixed for one march; value() is the pure spatial
/// operator F(D^2 u) at one interior node.
struct Stepper {
  const Grid& g;
  const OperatorSpec& spec;
  Dim2Frames table;
  double inv_h2;

  Stepper(const Grid& grid, const OperatorSpec& s) : g(grid), spec(s) {
    validate_spec(s, g.dim);
    inv_h2 = 1.0 / (g.h * g.h);
    if (g.dim == 2 && spec.kind != OperatorKind::Linear) {
      table = build_frames(spec.frames, g.nx(), g.h);
    }
  }

  double second_diff_1d(const double* u, int node) const {
    return (u[node - 1] - 2.0 * u[node] + u[node + 1]) * inv_h2;
  }

  double pucci_dim2(const double* u, int node) const {
    const double uc2 = 2.0 * u[node];
    const bool minus = spec.kind == OperatorKind::PucciMinus;
    double best = minus ? 1e300 : -1e300;
    for (const auto& fr : table.frames) {
      double sum = 0.0;
      for (const auto& d : fr) {
        const double q = (u[node + d.off] + u[node - d.off] - uc2) * d.inv_s2;
        sum += minus ? env_minus(q, spec.ell) : env_plus(q, spec.ell);
      }
      if (minus ? sum < best : sum > best) best = sum;
    }
    return best;
  }

  double linear_dim2(const double* u, int node, int level) const {
    const SymMatrix a = spec.coeff(g, node, level);
    if (a.dim != 2) throw std::invalid_argument("coefficient dim mismatch");
    const double ad = std::fabs(a.xy);
    if (a.xx < ad - 1e-12 || a.yy < ad - 1e-12) {
      throw std::invalid_argument("7-point stencil needs a11, a22 >= |a12|");
    }
    if (a.xx + a.yy > 2.0 * spec.ell.Lambda * (1.0 + 1e-9)) {
      throw std::invalid_argument("coefficient trace exceeds the stability budget");
    }
    const int nx = g.nx();
    const double uc2 = 2.0 * u[node];
    const double sx = (u[node - 1] + u[node + 1] - uc2) * inv_h2;
    const double sy = (u[node - nx] + u[node + nx] - uc2) * inv_h2;
    double sd;
    if (a.xy >= 0.0) {
      sd = (u[node + nx + 1] + u[node - nx - 1] - uc2) * (0.5 * inv_h2);
    } else {
      sd = (u[node + nx - 1] + u[node - nx + 1] - uc2) * (0.5 * inv_h2);
    }
    return (a.xx - ad) * sx + (a.yy - ad) * sy + 2.0 * ad * sd;
  }

  double linear_dim1(const double* u, int node, int level) const {
    const SymMatrix a = spec.coeff(g, node, level);
    if (a.dim != 1) throw std::invalid_argument("coefficient dim mismatch");
    if (a.xx < -1e-12 || a.xx > spec.ell.Lambda * (1.0 + 1e-9)) {
      throw std::invalid_argument("coefficient outside [0, Lambda]");
    }
    return a.xx * second_diff_1d(u, node);
  }

  double value(const double* u, int node, int level) const {
    if (g.dim == 1) {
      switch (spec.kind) {
        case OperatorKind::PucciMinus: return env_minus(second_diff_1d(u, node), spec.ell);
        case OperatorKind::PucciPlus: return env_plus(second_diff_1d(u, node), spec.ell);
        case OperatorKind::Linear: return linear_dim1(u, node, level);
      }
    } else {
      switch (spec.kind) {
        case OperatorKind::PucciMinus:
        case OperatorKind::PucciPlus: return pucci_dim2(u, node);
        case OperatorKind::Linear: return linear_dim2(u, node, level);
      }
    }
    return 0.0;
  }
};

}  // namespace

CellFn zero_cells() {
  return [](const Grid&, int, int) { return 0.0; };
}

CellFn constant_cells(double value) {
  return [value](const Grid&, int, int) { return value; };
}

CellFn boundary_from_pointwise(std::function<double(const double*, double)> f) {
  return [f = std::move(f)](const Grid& g, int node, int level) {
    double x[2];
    g.coords(node, x);
    return f(x, g.time_of(level));
  };
}

CellFn source_from_pointwise(std::function<double(const double*, double)> f) {
  return [f = std::move(f)](const Grid& g, int node, int level) {
    double x[2];
    g.coords(node, x);
    return f(x, g.time_of(level) - 0.5 * g.dt);
  };
}

double apply_operator(const OperatorSpec& spec, const Grid& g,
                      std::span<const double> values, int node, int level) {
  if (!g.interior(node)) throw std::invalid_argument("apply_operator needs an interior node");
  Stepper st(g, spec);
  return st.value(values.data(), node, level);
}

void march(GridPtr grid, const OperatorSpec& spec, const CellFn& source,
           const CellFn& boundary, const LevelCallback& on_level) {
  if (!grid) throw std::invalid_argument("null grid");
  const Grid& g = *grid;
  const double bound = g.h * g.h / (2.0 * g.dim * spec.ell.Lambda);
  if (g.dt > bound * (1.0 + 1e-9)) {
    throw cfl_error("dt violates the explicit stability bound");
  }
  Stepper st(g, spec);
  const int n = g.node_count();
  std::vector<double> cur(n), nxt(n);
  for (int node = 0; node < n; ++node) cur[node] = boundary(g, node, 0);
  if (!on_level(0, std::span<const double>(cur))) return;
  for (int k = 0; k < g.steps; ++k) {
    for (int node = 0; node < n; ++node) {
      if (!g.interior_flag[node]) nxt[node] = boundary(g, node, k + 1);
    }
    const double* u = cur.data();
    for (int node : g.interior_nodes) {
      nxt[node] = u[node] + g.dt * (st.value(u, node, k) + source(g, node, k + 1));
    }
    cur.swap(nxt);
    if (!on_level(k + 1, std::span<const double>(cur))) return;
  }
}

GridFunction solve(GridPtr grid, const OperatorSpec& spec, const CellFn& source,
                   const CellFn& boundary, int max_stored, Role role) {
  if (max_stored < 2) throw std::invalid_argument("max_stored must be >= 2");
  const int stride = (grid->steps + max_stored) / max_stored;
  GridFunction out(grid, role, stride);
  int next_si = 0;
  march(grid, spec, source, boundary,
        [&](int level, std::span<const double> vals) {
          if (next_si < out.stored_count() && out.level_at(next_si) == level) {
            std::copy(vals.begin(), vals.end(), out.level_values_mut(next_si).begin());
            ++next_si;
          }
          return true;
        });
  return out;
}

GridFunction fundamental_solution(const IndicatorSet& gamma,
                                  const EllipticityPair& ell, int frames,
                                  int max_stored) {
  if (!gamma.grid) throw std::invalid_argument("indicator has no grid");
  OperatorSpec spec{OperatorKind::PucciMinus, ell, frames, {}};
  const CellFn source = [&gamma](const Grid&, int node, int level) {
    return gamma.cell(level, node) ? 1.0 : 0.0;
  };
  return solve(gamma.grid, spec, source, zero_cells(), max_stored, Role::Fundamental);
}

bool comparison_holds(const GridFunction& u, const GridFunction& v, double tol,
                      double* max_violation) {
  if (u.grid_ptr() != v.grid_ptr()) {
    throw std::invalid_argument("comparison needs both functions on one grid");
  }
  const int n = u.grid().node_count();
  double worst = -1e300;
  int compared = 0;
  for (int si = 0; si < u.stored_count(); ++si) {
    const int vi = v.stored_index_of_level(u.level_at(si));
    if (vi < 0) continue;
    ++compared;
    const auto a = u.level_values(si);
    const auto b = v.level_values(vi);
    for (int node = 0; node < n; ++node) worst = std::max(worst, a[node] - b[node]);
  }
  if (compared == 0) throw std::invalid_argument("no shared stored levels");
  if (max_violation) *max_violation = worst;
  return worst <= tol;
}

bool comparison_test(GridPtr grid, const OperatorSpec& spec,
                     const CellFn& source_u, const CellFn& boundary_u,
                     const CellFn& source_v, const CellFn& boundary_v,
                     double tol) {
  const Grid& g = *grid;
  const int n = g.node_count();
  for (int k = 0; k <= g.steps; ++k) {
    for (int node = 0; node < n; ++node) {
      if (!g.interior_flag[node] || k == 0) {
        if (boundary_u(g, node, k) > boundary_v(g, node, k) + 1e-15) {
          throw std::invalid_argument("boundary data not ordered");
        }
      }
      if (g.interior_flag[node] && k >= 1) {
        if (source_u(g, node, k) > source_v(g, node, k) + 1e-15) {
          throw std::invalid_argument("sources not ordered");
        }
      }
    }
  }
  GridFunction u = solve(grid, spec, source_u, boundary_u);
  GridFunction v = solve(grid, spec, source_v, boundary_v);
  return comparison_holds(u, v, tol);
}

}  // namespace pargrow
