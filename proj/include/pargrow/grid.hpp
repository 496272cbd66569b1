#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "pargrow/core.hpp"

namespace pargrow {

/// Space-time lattice rasterizing a parabolic cylinder B_R(c) x (top-dur, top].
///
/// The spatial axis carries `axis_nodes` nodes across [c-R, c+R]; for dim 2 a
/// collar of `pad` extra nodes per side extends the box so that wide stencils
/// and their interpolation cells never leave the array.  Nodes with
/// |x - c| >= R are boundary nodes and carry boundary data while the scheme
/// runs.  Time levels are t_k = top - dur + k*dt with dt dividing dur exactly.
///
/// A lattice cell is the pair (node, level k >= 1) and represents the box of
/// volume h^dim * dt whose spatial center is the node and whose time extent is
/// (t_{k-1}, t_k].  A cell belongs to a region iff its center does (center
/// time t_k - dt/2).
struct Grid {
  int dim = 1;
  int axis_nodes = 257;
  int pad = 0;
  double center[2] = {0.0, 0.0};
  double radius = 1.0;
  double top_time = 0.0;
  double duration = 1.0;
  double h = 0.0;
  double dt = 0.0;
  int steps = 0;  // levels run 0..steps

  std::vector<double> axis0;  // coordinates along axis 0 (length nx())
  std::vector<double> axis1;  // axis 1 (dim 2 only)
  std::vector<uint8_t> interior_flag;
  std::vector<int> interior_nodes;

  int nx() const { return axis_nodes + 2 * pad; }
  int node_count() const { return dim == 1 ? nx() : nx() * nx(); }
  int index(int i, int j) const { return j * nx() + i; }
  bool interior(int node) const { return interior_flag[node] != 0; }
  double time_of(int level) const { return top_time - duration + level * dt; }
  void coords(int node, double out[2]) const {
    if (dim == 1) {
      out[0] = axis0[node];
      out[1] = 0.0;
    } else {
      out[0] = axis0[node % nx()];
      out[1] = axis1[node / nx()];
    }
  }
  double dist2_from_center(int node) const {
    double x[2];
    coords(node, x);
    const double dx = x[0] - center[0];
    if (dim == 1) return dx * dx;
    const double dy = x[1] - center[1];
    return dx * dx + dy * dy;
  }
  double cell_volume() const { return (dim == 1 ? h : h * h) * dt; }
};

using GridPtr = std::shared_ptr<const Grid>;

/// Normalizing volume |Q1| = |B_1| * 1 for the unit cylinder.
double unit_cylinder_volume(int dim);

struct SolveGridOptions {
  int axis_nodes = 0;  // 0 picks the per-dimension default (257 / 97)
  double cfl = 0.9;
  int max_stored_levels = 4097;
};

/// Grid whose dt satisfies the explicit-scheme stability bound
/// dt <= cfl * h^2 / (2 * dim * Lambda) and divides the duration exactly.
GridPtr make_solve_grid(int dim, const EllipticityPair& ell,
                        const SolveGridOptions& opt = {},
                        double center0 = 0.0, double center1 = 0.0,
                        double radius = 1.0, double top_time = 0.0,
                        double duration = -1.0 /* default radius^2 */);

/// Grid with an explicitly chosen number of time steps (no stability
/// requirement).  For rasterization and geometry work only; the solver
/// re-checks stability and rejects unsuitable grids.
GridPtr make_raster_grid(int dim, int axis_nodes, int time_steps,
                         double radius = 1.0, double top_time = 0.0,
                         double duration = -1.0);

enum class Role { Supersolution, Fundamental, Source, Coefficients };

/// Values on a grid, stored on a strided subset of time levels (always
/// including the first and last level).  The stride keeps long runs at a
/// bounded memory footprint; checks that scan windows read stored levels.
class GridFunction {
 public:
  GridFunction() = default;
  GridFunction(GridPtr grid, Role role, int store_stride);

  const Grid& grid() const { return *grid_; }
  GridPtr grid_ptr() const { return grid_; }
  Role role() const { return role_; }
  int stored_count() const { return static_cast<int>(stored_levels_.size()); }
  int level_at(int si) const { return stored_levels_[si]; }
  double time_at(int si) const { return grid_->time_of(stored_levels_[si]); }
  std::span<const double> level_values(int si) const;
  std::span<double> level_values_mut(int si);
  double value(int si, int node) const { return values_[static_cast<size_t>(si) * grid_->node_count() + node]; }

  /// Index of the latest stored level with time <= t (clamped to 0).
  int stored_at_or_before(double t) const;
  /// Index of the earliest stored level with time >= t (clamped to last).
  int stored_at_or_after(double t) const;

  bool has_level(int level) const;
  int stored_index_of_level(int level) const;  // -1 if not stored

  std::string to_text() const;
  static GridFunction from_text(std::istream& in);

 private:
  GridPtr grid_;
  Role role_ = Role::Supersolution;
  std::vector<int> stored_levels_;
  std::vector<double> values_;
};

/// Measurable subset of the unit cylinder rasterized as lattice cells.
/// normalized_measure is (cell count * cell volume) / |Q1|.
struct IndicatorSet {
  GridPtr grid;
  std::vector<uint8_t> cells;  // (steps+1) * node_count, level-major; level 0 unused
  long set_count = 0;
  double normalized_measure = 0.0;

  bool cell(int level, int node) const {
    return cells[static_cast<size_t>(level) * grid->node_count() + node] != 0;
  }

  void recount();

  std::string to_text() const;
  static IndicatorSet from_text(std::istream& in);
};

/// Rasterizes {(x,t) : pred(x, t) true} using the cell-center rule.  Only
/// cells whose node lies strictly inside the unit ball are eligible.
IndicatorSet make_indicator(GridPtr grid,
                            const std::function<bool(const double*, double)>& pred);

}  // namespace pargrow
