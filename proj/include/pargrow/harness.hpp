#pragma once

#include <string>
#include <vector>

#include "pargrow/constants.hpp"
#include "pargrow/grid.hpp"
#include "pargrow/solver.hpp"

namespace pargrow {

enum class SourceFamily { IndicatorCells, SmoothBumps, LevelSet };
enum class CoefficientFamily { Pucci, RandomLinear };

const char* source_family_name(SourceFamily f);
const char* coefficient_family_name(CoefficientFamily f);

struct EnsembleConfig {
  long seed = 42;
  int count = 50;
  double kappa = 0.5;
  EllipticityPair ell = EllipticityPair(1.0, 2.0);
  int N = 1;
  int axis_nodes = 0;  // 0 -> per-dimension default
  FSConfig fs;
  int fs_fit_samples = 40;
  long fs_fit_seed = 17;
  // Fault-injection oracle: negates every source so all lower bounds and the
  // positivity check must trip.
  bool inject_sign_flip = false;
};

/// Grid-independent description of one ensemble member, so the same draw can
/// be realized at several resolutions.
struct SourceBox {
  double center[2] = {0.0, 0.0};
  double half_width = 0.0;
  double t_top = 0.0;
  double t_height = 0.0;
};
struct SourceBump {
  double center[2] = {0.0, 0.0};
  double t_center = 0.0;
  double amp = 0.0;
  double w_space = 0.0;
  double w_time = 0.0;
};
struct MemberDraw {
  int index = 0;
  int dim = 1;
  SourceFamily family = SourceFamily::IndicatorCells;
  CoefficientFamily op_family = CoefficientFamily::Pucci;
  std::vector<SourceBox> boxes;
  std::vector<SourceBump> bumps;
  double plateau_value = 0.0;
  double plateau_t_top = 0.0;  // support ends here (inside the lower cylinder)
  double ls_core_radius = 0.0;
  double ls_support_radius = 0.0;
  double ls_t_low = 0.0;
  double ls_rolloff = 0.0;
  double check_level = 0.0;    // mask threshold for the measure-form check
  bool sign_flip = false;
  // Piecewise-constant coefficient tables on a dyadic partition (linear only).
  std::vector<double> coeff_e1, coeff_e2, coeff_angle;

  double source(const double* x, double t) const;
  SymMatrix coeff(const double* x, double t) const;
};

MemberDraw draw_member(const EnsembleConfig& config, int index);

/// Source magnitude before any fault injection; the verification masks and
/// norms use this so an injected sign flip moves the solution, not the bound.
double member_source_magnitude(const MemberDraw& d, const double* x, double t);

/// A realized member: solved on a concrete grid with its derived quantities.
struct MemberEval {
  MemberDraw draw;
  GridPtr grid;
  GridFunction u;
  double f_norm = 0.0;        // |Q_1|-normalized L^{N+1} norm of the source
  double f_norm_lower = 0.0;  // same norm restricted to the lower cylinder
  double mask_m = 0.0;        // measure fraction of {f > check_level}
  double u_min_global = 0.0;
  double u_max = 0.0;
};

MemberEval generate_member(const EnsembleConfig& config, int index,
                           int axis_nodes_override = 0);

struct MemberRow {
  int member_index = 0;
  SourceFamily family = SourceFamily::IndicatorCells;
  CoefficientFamily operator_kind = CoefficientFamily::Pucci;
  long seed = 0;
  double m = 0.0;
  double f_norm = 0.0;
  double u_min_tsfs = 0.0;
  double tsfs_bound_log10 = 0.0;
  double u_min_lb = 0.0;
  double lb_bound_log10 = 0.0;
  double u_max = 0.0;
  double abp_ratio = 0.0;
  bool slick_applicable = false;
  double u_min_slick = 0.0;
  double slick_bound_log10 = 0.0;
  double rich_err = 0.0;
  bool pass = false;
};

/// Lower/upper checks against the norm-only bound over the window
/// [-kappa f^{N+1}/2, 0] x B_kappa; fills the tsfs and ABP columns.
void check_two_sided(const MemberEval& eval, const EnsembleConfig& config,
                     MemberRow& row);

/// Measure-form check on the mask {f > check_level}, plus the lower-cylinder
/// algebraic bound for level-set members; fills the lb and slick columns.
void check_measure_form(const MemberEval& eval, const EnsembleConfig& config,
                        MemberRow& row);

struct FSSample {
  double density = 0.0;
  double ratio = 0.0;
  double x = 0.0;
  double t = 0.0;
};
struct FSFitReport {
  double r = 0.0;
  std::vector<FSSample> samples;
  double sigma_hat = 0.0;
  double C_hat = 0.0;      // least-squares intercept
  double C_envelope = 0.0; // largest C with C*d^sigma <= every observed ratio
  double r2 = 0.0;
  bool monotone_ok = false;
};

/// Fundamental-solution ratio sweep over nested random subsets of a source
/// cylinder, fitted as ratio = C * density^sigma at probes past the
/// spread-time of the cylinder.
FSFitReport fs_fit(double r, int sample_count, long seed,
                   const EllipticityPair& ell, int axis_nodes = 0);

struct EllipticRow {
  double r = 0.0;
  bool converged = false;
  double time_to_steady = 0.0;
  double steady_center = 0.0;
  double steady_core_min = 0.0;
  double bound_log10 = 0.0;
  double closed_form_err = -1.0;  // only for lambda == Lambda, N == 1
  bool pass = false;
};

/// Marches the time-independent source chi_{B_r} to steady state and checks
/// the long-time bound on the core.
EllipticRow elliptic_limit_run(double r, double horizon,
                               const EllipticityPair& ell, double kappa,
                               int axis_nodes = 0);

struct Aggregates {
  double abp_C_emp = 0.0;
  double lb_slope = 0.0;  // fitted log u_min_lb vs log m over indicator members
  int fail_count = 0;
};
Aggregates compute_aggregates(const std::vector<MemberRow>& rows);

struct VerificationReport {
  EnsembleConfig config;
  std::vector<MemberRow> rows;
  Aggregates agg;
  double abp_refinement_ratio = 1.0;  // C_emp estimate at h over h/2
  FSFitReport fs;
  std::vector<EllipticRow> elliptic;
  double elliptic_slope = 0.0;
  bool all_pass = false;

  std::string to_csv() const;
  std::string to_json_lines() const;
};

VerificationReport run_suite(const EnsembleConfig& config);

}  // namespace pargrow
