#pragma once

#include <vector>

#include "pargrow/core.hpp"
#include "pargrow/grid.hpp"

namespace pargrow {

struct SpaceTimePoint {
  double x[2] = {0.0, 0.0};
  double t = 0.0;
  int dim = 1;
};

/// Q_r(x0, t0) = B_r(x0) x (t0 - r^2, t0].  The parabolic boundary is the
/// bottom disc plus the lateral wall; the open top is excluded.
struct ParabolicCylinder {
  double center[2] = {0.0, 0.0};
  double top_time = 0.0;
  double radius = 1.0;
  int dim = 1;

  double bottom_time() const { return top_time - radius * radius; }
  bool contains(const double* x, double t) const;
  /// Whole cylinder inside Q_1 (closure in space, half-open time interval).
  bool inside_unit(double tol = 1e-12) const;
};

/// Cylinder whose ball cross-section drifts linearly from base_center at
/// base_time to top_center at top_time.
struct ObliqueCylinder {
  double base_center[2] = {0.0, 0.0};
  double base_time = 0.0;
  double top_center[2] = {0.0, 0.0};
  double top_time = 0.0;
  double radius = 1.0;
  int dim = 1;

  double height() const { return top_time - base_time; }
  double drift() const;
  /// Center of the slab at time t (t clamped to [base_time, top_time]).
  void center_at(double t, double out[2]) const;
  bool contains(const double* x, double t) const;
  bool inside_unit(double tol = 1e-12) const;
};

/// Tower of oblique cylinders along a line segment, all with the same radius
/// and the exact per-step aspect h/R^2 = 3/4.
struct ChainPlan {
  int step_count = 1;            // l
  double step_radius = 0.0;      // R = r/sqrt(l)
  double step_height = 0.0;      // h = 3r^2/(4l)
  double step_drift = 0.0;       // d = |x0-y0|/l
  std::vector<ObliqueCylinder> cylinders;
};

/// |Q_r| / |Q_1| = r^{N+2}.
double cylinder_measure(const ParabolicCylinder& cyl, int N);
double cylinder_measure(double radius, int N);

/// 1 - (1 - c1*m)^{N+2}, the normalized mass lost when shrinking to the
/// lower cylinder of radius 1 - c1*m.
double shrunk_cylinder_gap(double c1, double m, int N);

/// Shrink factor with gap(c1, m) <= kappa*m for every m in (0,1]:
/// c1 = kappa/(N+2).
double choose_c1(double kappa, int N);

/// Lattice covering cylinder selected by the pigeonhole argument: the first
/// (time-ascending, then space row-major) covering cylinder of radius c1*m/4
/// in which gamma has cell density >= (1-kappa)*m.  The covering has spatial
/// stride equal to the radius and time stride equal to the height, restricted
/// to the bottom-anchored cylinder B_{1-c1*m} x (-1, -1+(1-c1*m)^2].
ParabolicCylinder pigeonhole_cylinder(const IndicatorSet& gamma, double c1,
                                      double m, double kappa);

/// Chain of l = max(1, ceil((|x0-y0|/r)^2)) equal oblique steps from
/// (x0, t0p) up to (y0, t0), with t0 - t0p = 3r^2/4.  Throws geometry_error
/// if any step leaves Q_1.
ChainPlan chain_plan(const double* x0, double t0p, const double* y0, double t0,
                     double r, int dim);

}  // namespace pargrow
