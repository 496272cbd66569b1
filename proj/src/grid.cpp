#include "pargrow/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <sstream>

namespace pargrow {

double unit_cylinder_volume(int dim) {
  if (dim == 1) return 2.0;
  if (dim == 2) return M_PI;
  throw std::invalid_argument("dim must be 1 or 2");
}

namespace {

GridPtr finish_grid(std::unique_ptr<Grid> g) {
  const int nx = g->nx();
  g->axis0.resize(nx);
  const double lo = g->center[0] - g->radius - g->pad * g->h;
  for (int i = 0; i < nx; ++i) g->axis0[i] = lo + i * g->h;
  if (g->dim == 2) {
    g->axis1.resize(nx);
    const double lo1 = g->center[1] - g->radius - g->pad * g->h;
    for (int i = 0; i < nx; ++i) g->axis1[i] = lo1 + i * g->h;
  }
  const int n = g->node_count();
  g->interior_flag.assign(n, 0);
  const double r2 = g->radius * g->radius * (1.0 - 1e-12);
  for (int node = 0; node < n; ++node) {
    if (g->dist2_from_center(node) < r2) {
      g->interior_flag[node] = 1;
      g->interior_nodes.push_back(node);
    }
  }
  return GridPtr(g.release());
}

}  // namespace

GridPtr make_solve_grid(int dim, const EllipticityPair& ell,
                        const SolveGridOptions& opt, double center0,
                        double center1, double radius, double top_time,
                        double duration) {
  if (dim != 1 && dim != 2) throw std::invalid_argument("dim must be 1 or 2");
  const int axis_nodes = opt.axis_nodes > 0 ? opt.axis_nodes : (dim == 1 ? 257 : 97);
  if (axis_nodes < 5) throw std::invalid_argument("axis_nodes too small");
  if (!(radius > 0.0)) throw std::invalid_argument("radius must be positive");
  auto g = std::make_unique<Grid>();
  g->dim = dim;
  g->axis_nodes = axis_nodes;
  g->pad = dim == 1 ? 0 : 3;
  g->center[0] = center0;
  g->center[1] = center1;
  g->radius = radius;
  g->top_time = top_time;
  g->duration = duration > 0.0 ? duration : radius * radius;
  g->h = 2.0 * radius / (axis_nodes - 1);
  const double dt_max = opt.cfl * g->h * g->h / (2.0 * dim * ell.Lambda);
  g->steps = static_cast<int>(std::ceil(g->duration / dt_max - 1e-12));
  g->dt = g->duration / g->steps;
  return finish_grid(std::move(g));
}

GridPtr make_raster_grid(int dim, int axis_nodes, int time_steps, double radius,
                         double top_time, double duration) {
  if (dim != 1 && dim != 2) throw std::invalid_argument("dim must be 1 or 2");
  if (axis_nodes < 5 || time_steps < 1) throw std::invalid_argument("grid too small");
  auto g = std::make_unique<Grid>();
  g->dim = dim;
  g->axis_nodes = axis_nodes;
  g->pad = dim == 1 ? 0 : 3;
  g->radius = radius;
  g->top_time = top_time;
  g->duration = duration > 0.0 ? duration : radius * radius;
  g->h = 2.0 * radius / (axis_nodes - 1);
  g->steps = time_steps;
  g->dt = g->duration / time_steps;
  return finish_grid(std::move(g));
}

GridFunction::GridFunction(GridPtr grid, Role role, int store_stride)
    : grid_(std::move(grid)), role_(role) {
  if (store_stride < 1) store_stride = 1;
  for (int k = 0; k <= grid_->steps; k += store_stride) stored_levels_.push_back(k);
  if (stored_levels_.back() != grid_->steps) stored_levels_.push_back(grid_->steps);
  values_.assign(static_cast<size_t>(stored_levels_.size()) * grid_->node_count(), 0.0);
}

std::span<const double> GridFunction::level_values(int si) const {
  const size_t n = grid_->node_count();
  return {values_.data() + si * n, n};
}

std::span<double> GridFunction::level_values_mut(int si) {
  const size_t n = grid_->node_count();
  return {values_.data() + si * n, n};
}

int GridFunction::stored_at_or_before(double t) const {
  int lo = 0;
  for (int si = 0; si < stored_count(); ++si) {
    if (time_at(si) <= t + 1e-12) lo = si;
    else break;
  }
  return lo;
}

int GridFunction::stored_at_or_after(double t) const {
  for (int si = 0; si < stored_count(); ++si) {
    if (time_at(si) >= t - 1e-12) return si;
  }
  return stored_count() - 1;
}

bool GridFunction::has_level(int level) const {
  return stored_index_of_level(level) >= 0;
}

int GridFunction::stored_index_of_level(int level) const {
  auto it = std::lower_bound(stored_levels_.begin(), stored_levels_.end(), level);
  if (it != stored_levels_.end() && *it == level) {
    return static_cast<int>(it - stored_levels_.begin());
  }
  return -1;
}

namespace {

void append_num(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

GridPtr grid_from_header(int dim, int axis_nodes, int steps, double radius,
                         double top_time, double duration) {
  return make_raster_grid(dim, axis_nodes, steps, radius, top_time, duration);
}

}  // namespace

std::string GridFunction::to_text() const {
  std::string out;
  out.reserve(values_.size() * 10 + 256);
  out += "pargrow-gridfunction v1\n";
  out += "N " + std::to_string(grid_->dim) + "\n";
  out += "dims " + std::to_string(grid_->axis_nodes) + "\n";
  out += "pad " + std::to_string(grid_->pad) + "\n";
  out += "h ";
  append_num(out, grid_->h);
  out += "\ndt ";
  append_num(out, grid_->dt);
  out += "\nsteps " + std::to_string(grid_->steps) + "\n";
  out += "radius ";
  append_num(out, grid_->radius);
  out += "\ntop ";
  append_num(out, grid_->top_time);
  out += "\nduration ";
  append_num(out, grid_->duration);
  out += "\nrole ";
  switch (role_) {
    case Role::Supersolution: out += "supersolution"; break;
    case Role::Fundamental: out += "fundamental"; break;
    case Role::Source: out += "source"; break;
    case Role::Coefficients: out += "coefficients"; break;
  }
  out += "\nstored " + std::to_string(stored_count()) + "\n";
  for (int si = 0; si < stored_count(); ++si) {
    out += "level " + std::to_string(stored_levels_[si]);
    const auto vals = level_values(si);
    for (double v : vals) {
      out += ' ';
      append_num(out, v);
    }
    out += '\n';
  }
  return out;
}

GridFunction GridFunction::from_text(std::istream& in) {
  std::string magic, version;
  in >> magic >> version;
  if (magic != "pargrow-gridfunction" || version != "v1") {
    throw std::runtime_error("not a grid-function file");
  }
  std::string key;
  int dim = 0, dims = 0, pad = 0, steps = 0, stored = 0;
  double h = 0, dt = 0, radius = 0, top = 0, duration = 0;
  std::string role_name;
  while (in >> key) {
    if (key == "N") in >> dim;
    else if (key == "dims") in >> dims;
    else if (key == "pad") in >> pad;
    else if (key == "h") in >> h;
    else if (key == "dt") in >> dt;
    else if (key == "steps") in >> steps;
    else if (key == "radius") in >> radius;
    else if (key == "top") in >> top;
    else if (key == "duration") in >> duration;
    else if (key == "role") in >> role_name;
    else if (key == "stored") { in >> stored; break; }
    else throw std::runtime_error("unknown grid-function header key: " + key);
  }
  GridPtr grid = grid_from_header(dim, dims, steps, radius, top, duration);
  Role role = Role::Supersolution;
  if (role_name == "fundamental") role = Role::Fundamental;
  else if (role_name == "source") role = Role::Source;
  else if (role_name == "coefficients") role = Role::Coefficients;
  else if (role_name != "supersolution") {
    throw std::runtime_error("unknown role: " + role_name);
  }
  GridFunction f;
  f.grid_ = grid;
  f.role_ = role;
  f.stored_levels_.resize(stored);
  f.values_.resize(static_cast<size_t>(stored) * grid->node_count());
  for (int si = 0; si < stored; ++si) {
    std::string tag;
    in >> tag;
    if (tag != "level") throw std::runtime_error("malformed grid-function body");
    in >> f.stored_levels_[si];
    const size_t n = grid->node_count();
    for (size_t j = 0; j < n; ++j) in >> f.values_[si * n + j];
  }
  if (!in) throw std::runtime_error("truncated grid-function file");
  return f;
}

void IndicatorSet::recount() {
  set_count = 0;
  for (uint8_t c : cells) set_count += c != 0;
  normalized_measure =
      static_cast<double>(set_count) * grid->cell_volume() / unit_cylinder_volume(grid->dim);
}

IndicatorSet make_indicator(GridPtr grid,
                            const std::function<bool(const double*, double)>& pred) {
  IndicatorSet s;
  s.grid = grid;
  const int n = grid->node_count();
  s.cells.assign(static_cast<size_t>(grid->steps + 1) * n, 0);
  double x[2];
  for (int k = 1; k <= grid->steps; ++k) {
    const double tc = grid->time_of(k) - 0.5 * grid->dt;
    uint8_t* row = s.cells.data() + static_cast<size_t>(k) * n;
    for (int node : grid->interior_nodes) {
      grid->coords(node, x);
      if (pred(x, tc)) row[node] = 1;
    }
  }
  s.recount();
  return s;
}

std::string IndicatorSet::to_text() const {
  std::string out;
  out += "pargrow-indicator v1\n";
  out += "N " + std::to_string(grid->dim) + "\n";
  out += "dims " + std::to_string(grid->axis_nodes) + "\n";
  out += "pad " + std::to_string(grid->pad) + "\n";
  out += "h ";
  append_num(out, grid->h);
  out += "\ndt ";
  append_num(out, grid->dt);
  out += "\nsteps " + std::to_string(grid->steps) + "\n";
  out += "radius ";
  append_num(out, grid->radius);
  out += "\ntop ";
  append_num(out, grid->top_time);
  out += "\nduration ";
  append_num(out, grid->duration);
  out += "\nruns\n";
  const int n = grid->node_count();
  for (int k = 1; k <= grid->steps; ++k) {
    const uint8_t* row = cells.data() + static_cast<size_t>(k) * n;
    std::string line;
    int i = 0;
    while (i < n) {
      if (row[i]) {
        int start = i;
        while (i < n && row[i]) ++i;
        line += ' ' + std::to_string(start) + ':' + std::to_string(i - start);
      } else {
        ++i;
      }
    }
    if (!line.empty()) out += std::to_string(k) + line + '\n';
  }
  out += "end\n";
  return out;
}

IndicatorSet IndicatorSet::from_text(std::istream& in) {
  std::string magic, version;
  in >> magic >> version;
  if (magic != "pargrow-indicator" || version != "v1") {
    throw std::runtime_error("not an indicator file");
  }
  std::string key;
  int dim = 0, dims = 0, pad = 0, steps = 0;
  double h = 0, dt = 0, radius = 0, top = 0, duration = 0;
  while (in >> key) {
    if (key == "N") in >> dim;
    else if (key == "dims") in >> dims;
    else if (key == "pad") in >> pad;
    else if (key == "h") in >> h;
    else if (key == "dt") in >> dt;
    else if (key == "steps") in >> steps;
    else if (key == "radius") in >> radius;
    else if (key == "top") in >> top;
    else if (key == "duration") in >> duration;
    else if (key == "runs") break;
    else throw std::runtime_error("unknown indicator header key: " + key);
  }
  IndicatorSet s;
  s.grid = grid_from_header(dim, dims, steps, radius, top, duration);
  const int n = s.grid->node_count();
  s.cells.assign(static_cast<size_t>(steps + 1) * n, 0);
  std::string line;
  std::getline(in, line);  // consume rest of "runs" line
  while (std::getline(in, line)) {
    if (line == "end") break;
    if (line.empty()) continue;
    std::istringstream ls(line);
    int level = 0;
    ls >> level;
    if (level < 1 || level > steps) throw std::runtime_error("indicator level out of range");
    std::string run;
    while (ls >> run) {
      const auto colon = run.find(':');
      if (colon == std::string::npos) throw std::runtime_error("malformed run: " + run);
      const int start = std::stoi(run.substr(0, colon));
      const int len = std::stoi(run.substr(colon + 1));
      if (start < 0 || len < 1 || start + len > n) throw std::runtime_error("run out of range");
      for (int i = start; i < start + len; ++i) {
        s.cells[static_cast<size_t>(level) * n + i] = 1;
      }
    }
  }
  s.recount();
  return s;
}

}  // namespace pargrow
