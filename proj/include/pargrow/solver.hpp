#pragma once

#include <functional>
#include <span>

#include "pargrow/core.hpp"
#include "pargrow/grid.hpp"

namespace pargrow {

/// Data sampled per (node, level).  Boundary data is evaluated at node
/// coordinates and level time t_k; sources follow the lattice-cell convention
/// and are evaluated for the cell ending at level k (center time t_k - dt/2).
using CellFn = std::function<double(const Grid&, int node, int level)>;

/// Variable coefficient matrix for the linear operator, evaluated at a node
/// and the level the step starts from.
using CoeffFn = std::function<SymMatrix(const Grid&, int node, int level)>;

/// Called after every completed level with the values on that level.
/// Return false to stop the march early.
using LevelCallback = std::function<bool(int level, std::span<const double>)>;

enum class OperatorKind { PucciMinus, PucciPlus, Linear };

/// Second-order operator F(D^2 u, x, t) discretized monotonically.
///
/// PucciMinus / PucciPlus: extremal envelope over orthogonal lattice frames.
/// In dim 1 the envelope acts on the standard 3-point second difference.  In
/// dim 2 `frames` (1..5) selects a prefix of the direction pairs (1,0),
/// (1,1), (2,1), (3,1), (3,2), each paired with its perpendicular; every
/// stencil foot is a lattice node, so second differences are exact on
/// quadratic data, all off-center weights are nonnegative, and the explicit
/// update stays monotone under the CFL bound.
///
/// Linear: tr(A(x,t) D^2 u) via the sign-split 7-point stencil.  Requires
/// a11 >= |a12|, a22 >= |a12|, and a11 + a22 <= 2*Lambda so the split has
/// nonnegative weights and the center mass stays under the stability budget.
struct OperatorSpec {
  OperatorKind kind = OperatorKind::PucciMinus;
  EllipticityPair ell;
  int frames = 5;
  CoeffFn coeff;  // Linear only
};

CellFn zero_cells();
CellFn constant_cells(double value);
/// Evaluates f(x, t_k) at node coordinates: boundary/initial data.
CellFn boundary_from_pointwise(std::function<double(const double*, double)> f);
/// Evaluates f(x, t_k - dt/2) at node coordinates: cell-centered sources.
CellFn source_from_pointwise(std::function<double(const double*, double)> f);

/// One stencil evaluation of F(D^2 u) at an interior node, reading the level
/// snapshot `values` (length node_count).  `level` feeds the coefficient
/// function; the Pucci kinds ignore it.
double apply_operator(const OperatorSpec& spec, const Grid& g,
                      std::span<const double> values, int node, int level = 0);

/// Explicit Euler march for u_t - F(D^2 u) = f:
///   u^{k+1} = u^k + dt * (F(D^2 u^k) + f^{k+1})   at interior nodes,
///   u^{k+1} = boundary data                        elsewhere (collar included),
///   u^0     = boundary data at level 0.
/// Throws cfl_error unless dt <= h^2 / (2 * dim * Lambda); under that bound
/// every update is a convex-type combination with nonnegative weights and the
/// discrete comparison principle holds.
void march(GridPtr grid, const OperatorSpec& spec, const CellFn& source,
           const CellFn& boundary, const LevelCallback& on_level);

/// march() collected into a GridFunction, storing every level when the step
/// count allows and otherwise a strided subset of at most ~max_stored levels
/// (first and last always kept).
GridFunction solve(GridPtr grid, const OperatorSpec& spec, const CellFn& source,
                   const CellFn& boundary, int max_stored = 4097,
                   Role role = Role::Supersolution);

/// w_t - M^-(D^2 w) = chi_Gamma in Q_1, w = 0 on the parabolic boundary.
/// The indicator must live on a grid built by make_solve_grid for `ell`.
GridFunction fundamental_solution(const IndicatorSet& gamma,
                                  const EllipticityPair& ell, int frames = 5,
                                  int max_stored = 4097);

/// u <= v + tol on every stored level the two functions share (same grid
/// required).  If max_violation is given it receives max(u - v) over the
/// compared entries.
bool comparison_holds(const GridFunction& u, const GridFunction& v,
                      double tol = 1e-12, double* max_violation = nullptr);

/// Solves both data sets and checks the discrete comparison principle:
/// ordered boundary data and sources must give ordered solutions.  Throws if
/// the input data is not ordered (the premise must hold to test the
/// implication).
bool comparison_test(GridPtr grid, const OperatorSpec& spec,
                     const CellFn& source_u, const CellFn& boundary_u,
                     const CellFn& source_v, const CellFn& boundary_v,
                     double tol = 1e-12);

}  // namespace pargrow
