#include "pargrow/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pargrow {

namespace {

double dist(const double* a, const double* b, int dim) {
  const double dx = a[0] - b[0];
  if (dim == 1) return std::fabs(dx);
  const double dy = a[1] - b[1];
  return std::hypot(dx, dy);
}

double norm(const double* a, int dim) {
  if (dim == 1) return std::fabs(a[0]);
  return std::hypot(a[0], a[1]);
}

}  // namespace

bool ParabolicCylinder::contains(const double* x, double t) const {
  if (t <= bottom_time() || t > top_time) return false;
  return dist(x, center, dim) < radius;
}

bool ParabolicCylinder::inside_unit(double tol) const {
  if (top_time > tol || bottom_time() < -1.0 - tol) return false;
  return norm(center, dim) + radius <= 1.0 + tol;
}

double ObliqueCylinder::drift() const {
  return dist(top_center, base_center, dim);
}

void ObliqueCylinder::center_at(double t, double out[2]) const {
  const double h = height();
  double s = h > 0.0 ? (t - base_time) / h : 0.0;
  s = std::clamp(s, 0.0, 1.0);
  out[0] = base_center[0] + s * (top_center[0] - base_center[0]);
  out[1] = base_center[1] + s * (top_center[1] - base_center[1]);
}

bool ObliqueCylinder::contains(const double* x, double t) const {
  if (t <= base_time || t > top_time) return false;
  double c[2];
  center_at(t, c);
  return dist(x, c, dim) < radius;
}

bool ObliqueCylinder::inside_unit(double tol) const {
  if (top_time > tol || base_time < -1.0 - tol) return false;
  // The slab center moves on a segment, so the extreme excursion is at an end.
  const double m = std::max(norm(base_center, dim), norm(top_center, dim));
  return m + radius <= 1.0 + tol;
}

double cylinder_measure(double radius, int N) {
  if (N != 1 && N != 2) throw std::invalid_argument("N must be 1 or 2");
  if (!(radius >= 0.0)) throw std::invalid_argument("radius must be nonnegative");
  return std::pow(radius, N + 2);
}

double cylinder_measure(const ParabolicCylinder& cyl, int N) {
  return cylinder_measure(cyl.radius, N);
}

double shrunk_cylinder_gap(double c1, double m, int N) {
  if (N != 1 && N != 2) throw std::invalid_argument("N must be 1 or 2");
  const double x = c1 * m;
  if (!(x >= 0.0) || x >= 1.0) {
    throw std::domain_error("shrunk_cylinder_gap requires 0 <= c1*m < 1");
  }
  return 1.0 - std::pow(1.0 - x, N + 2);
}

double choose_c1(double kappa, int N) {
  if (N != 1 && N != 2) throw std::invalid_argument("N must be 1 or 2");
  if (!(kappa > 0.0) || !(kappa < 1.0)) {
    throw std::invalid_argument("kappa must lie in (0,1)");
  }
  // 1 - (1-x)^k <= k*x, so c1 = kappa/(N+2) gives gap(c1*m) <= kappa*m.
  return kappa / (N + 2);
}

ParabolicCylinder pigeonhole_cylinder(const IndicatorSet& gamma, double c1,
                                      double m, double kappa) {
  const Grid& g = *gamma.grid;
  const int N = g.dim;
  const double rr = c1 * m / 4.0;
  if (!(rr > 0.0)) throw std::invalid_argument("c1*m must be positive");
  const double shrunk = 1.0 - c1 * m;
  if (!(shrunk > 0.0)) throw std::domain_error("c1*m must be < 1");
  const double lower_top = -1.0 + shrunk * shrunk;
  const double need = (1.0 - kappa) * m;

  // Covering lattice: spatial stride = radius (half overlap), time stride =
  // height, last slab clamped to the top of the lower cylinder.
  std::vector<double> xs;
  for (double x = -shrunk; x <= shrunk + 1e-12; x += rr) xs.push_back(x);
  std::vector<double> tops;
  {
    const double h = rr * rr;
    double top = -1.0 + h;
    while (top < lower_top - 1e-15) {
      tops.push_back(top);
      top += h;
    }
    tops.push_back(lower_top);
  }

  double xc[2];
  for (double top : tops) {
    const double bottom = top - rr * rr;
    // Levels whose cell centers fall in (bottom, top].
    int k_lo = g.steps + 1, k_hi = 0;
    for (int k = 1; k <= g.steps; ++k) {
      const double tc = g.time_of(k) - 0.5 * g.dt;
      if (tc > bottom && tc <= top) {
        k_lo = std::min(k_lo, k);
        k_hi = std::max(k_hi, k);
      }
    }
    if (k_lo > k_hi) continue;
    auto scan = [&](const double* c) -> bool {
      long total = 0, hit = 0;
      for (int node : g.interior_nodes) {
        g.coords(node, xc);
        const double dx = xc[0] - c[0];
        const double dy = N == 2 ? xc[1] - c[1] : 0.0;
        if (dx * dx + dy * dy >= rr * rr) continue;
        for (int k = k_lo; k <= k_hi; ++k) {
          ++total;
          if (gamma.cell(k, node)) ++hit;
        }
      }
      if (total == 0) return false;
      return static_cast<double>(hit) >= need * static_cast<double>(total);
    };
    if (N == 1) {
      for (double x : xs) {
        const double c[2] = {x, 0.0};
        if (scan(c)) {
          ParabolicCylinder q;
          q.center[0] = x;
          q.top_time = top;
          q.radius = rr;
          q.dim = 1;
          return q;
        }
      }
    } else {
      for (double y : xs) {
        for (double x : xs) {
          if (x * x + y * y > shrunk * shrunk * (1.0 + 1e-12)) continue;
          const double c[2] = {x, y};
          if (scan(c)) {
            ParabolicCylinder q;
            q.center[0] = x;
            q.center[1] = y;
            q.top_time = top;
            q.radius = rr;
            q.dim = 2;
            return q;
          }
        }
      }
    }
  }
  throw std::runtime_error("no qualifying cylinder");
}

ChainPlan chain_plan(const double* x0, double t0p, const double* y0, double t0,
                     double r, int dim) {
  if (!(r > 0.0)) throw std::invalid_argument("r must be positive");
  const double height = t0 - t0p;
  if (std::fabs(height - 0.75 * r * r) > 1e-9 * std::max(1.0, r * r)) {
    throw std::invalid_argument("chain requires t0 - t0p = 3r^2/4");
  }
  const double d_total = dist(y0, x0, dim);
  if (d_total > 2.0 + 1e-12) throw std::invalid_argument("segment longer than 2");

  int l = 1;
  if (d_total > r) {
    const double q = (d_total / r) * (d_total / r);
    l = static_cast<int>(std::ceil(q - 1e-12));
  }
  ChainPlan plan;
  plan.step_count = l;
  plan.step_radius = r / std::sqrt(static_cast<double>(l));
  plan.step_height = 0.75 * r * r / l;
  plan.step_drift = d_total / l;
  if (plan.step_drift > plan.step_radius * (1.0 + 1e-12)) {
    throw geometry_error("chain step drift exceeds step radius");
  }
  plan.cylinders.reserve(l);
  for (int j = 0; j < l; ++j) {
    ObliqueCylinder c;
    c.dim = dim;
    c.radius = plan.step_radius;
    const double s0 = static_cast<double>(j) / l;
    const double s1 = static_cast<double>(j + 1) / l;
    c.base_center[0] = x0[0] + s0 * (y0[0] - x0[0]);
    c.top_center[0] = x0[0] + s1 * (y0[0] - x0[0]);
    if (dim == 2) {
      c.base_center[1] = x0[1] + s0 * (y0[1] - x0[1]);
      c.top_center[1] = x0[1] + s1 * (y0[1] - x0[1]);
    }
    c.base_time = t0p + s0 * height;
    c.top_time = t0p + s1 * height;
    if (!c.inside_unit()) {
      throw geometry_error("chain cylinder exits the unit cylinder at step " +
                           std::to_string(j + 1));
    }
    plan.cylinders.push_back(c);
  }
  return plan;
}

}  // namespace pargrow
