#pragma once

// Approximation cascade for graphical mean curvature flow with extended-real
// initial data: truncate height and domain, mollify, solve, and compare the
// stages as R grows. Shadows {|u| < H_inf} are extracted from the stages and
// tested against shrinking spheres through the avoidance definition.

#include "gmcf/curvature_cones.hpp"
#include "gmcf/gmcf_solver.hpp"
#include "gmcf/smooth_boolean.hpp"

#include <iosfwd>

namespace gmcf {

using ExtendedFn = std::function<double(const Vec&)>;  // values in [-inf, inf]

/// Default compactification (2 / pi) atan, with +-inf sent to +-1.
double compactify_atan(double u);

struct CascadeConfig {
  std::vector<double> schedule{2.0, 4.0, 8.0};
  double eps = 0.2;                  // domain smoothing width
  double mollify_radius = -1.0;      // < 0: min(1 / (2 R_max), h)
  std::function<double(double)> compactify = compactify_atan;
  double stabilization_tol = 1e-3;   // on compactified values
  double h_inf = 1e3;
  SolverConfig solver;
  CurvatureCone cone = CurvatureCone::mean();
  SmoothingOptions smoothing;
  std::uint64_t seed = 1;

  /// Throws ErrorCode::kConfig on a schedule that is not strictly increasing
  /// (or has fewer than two stages) and on h_inf >= solver.h_cap.
  void validate() const;
};

/// Problem data. For radial_dim > 0 the domain is the ball of radius rho about
/// the origin of R^radial_dim and u0 is evaluated at the 1-vector (r).
struct CascadeProblem {
  DomainSpec omega;
  ExtendedFn u0;
  int radial_dim = 0;
  double rho = 1.0;
};

struct TruncatedDomain {
  DomainSpec domain;
  bool truncated = false;
  std::optional<SmoothedIntersection> smoothing;
  std::size_t inclusion_samples = 0;     // points of omega ∩ B_R
  std::size_t inclusion_violations = 0;  // ... outside the truncated domain
};

/// A smooth mean-convex domain between omega ∩ B_R and omega ∩ B_2R. Bounded
/// domains inside B_R come back unchanged; R^n becomes the ball of radius
/// 2R - eps. Throws ErrorCode::kGeometry if smoothing validation fails.
TruncatedDomain truncate_domain(const DomainSpec& omega, double big_r, double eps, const CurvatureCone& cone,
                                const SmoothingOptions& options = {}, std::uint64_t seed = 1);

struct PreparedInitial {
  std::function<double(const Vec&)> u;
  double radius = 0.0;     // kernel radius used; 0 means no blur
  double sup_error = 0.0;  // sampled sup |u - height cutoff of u0|
};

/// Height cutoff at +-R by mollified min and max, followed by convolution with
/// a compact bump of the given radius. The radius is halved until the error
/// sampled at probe_points is below 1 / R; after max_halvings the blur is
/// dropped (the height cutoff is already smooth wherever u0 is).
PreparedInitial prepare_initial(const ExtendedFn& u0, double big_r, int dim, double radius,
                                const std::vector<Vec>& probe_points, int max_halvings = 20);

enum class CellStatus : std::uint8_t { kConverged = 0, kEscaped = 1, kAmbiguous = 2, kOscillating = 3 };

const char* status_name(CellStatus status);

/// Status of one cell from its values across the schedule (NaN where inactive).
CellStatus classify_cell(const std::vector<double>& stage_values, double h_inf, double tol,
                         const std::function<double(double)>& compactify = compactify_atan);

struct StageReport {
  double big_r = 0.0;
  std::string domain;
  bool truncated = false;
  double mollify_radius = 0.0;
  double mollify_error = 0.0;
  std::size_t steps = 0;
  std::size_t augmented_updates = 0;
  std::size_t capped = 0;
  double wall_seconds = 0.0;
};

struct CascadeResult {
  CascadeConfig config;
  int dim = 0;         // ambient dimension of the base domain
  bool radial = false;
  std::vector<double> times;
  std::vector<std::vector<Grid>> stages;  // [stage][time]; radial stages are 1D grids in r
  std::vector<StageReport> reports;
  std::vector<std::vector<CellStatus>> status;  // [time][cell]
  std::vector<double> domain_radius;            // radial runs: rho of each stage

  const std::vector<Grid>& limit() const { return stages.back(); }
  std::size_t count(CellStatus s) const;
  /// max over cells, times and consecutive stages of u_R - u_R' for R < R'.
  double monotonicity_defect() const;
  void write_convergence_csv(std::ostream& out) const;
};

/// Solves the auxiliary problem for each R in the schedule on a common grid
/// and classifies every active cell of the finest stage at every output time.
CascadeResult run_cascade(const CascadeProblem& problem, const CascadeConfig& config);

/// Riemann sum h^dim * sum of finite values.
double grid_integral(const Grid& g);

struct ShadowTrace {
  std::vector<double> times;
  int dim = 0;
  double h = 0.0;
  bool radial = false;
  Grid layout;                                  // node positions of the mask cells
  std::vector<std::vector<std::uint8_t>> mask;  // [time][cell]: 1 in the shadow A_t
  std::vector<std::vector<std::uint8_t>> active;
  std::vector<std::vector<Vec>> boundary;  // midpoints between shadow and non-shadow active cells
  std::vector<std::size_t> ambiguous;      // per time
  std::vector<double> radius;              // radial runs
  double domain_radius = 0.0;              // radial runs

  void write_csv(std::ostream& out) const;
};

/// Shadow A_t: every active cell of the finest stage that is not escaped at H_inf.
ShadowTrace extract_shadow(const CascadeResult& result, double h_inf);

/// Shadow of a single trajectory, all cells with |u| < h_inf.
ShadowTrace extract_shadow(const Trajectory& traj, double h_inf);

enum class ProbeSide { kInside, kOutside };

/// Shrinking sphere |x - center| = sqrt(r0^2 - 2 (dim - 1) (t - t0)).
struct Probe {
  Vec center;
  double r0 = 0.1;
  double t0 = 0.0;
  ProbeSide side = ProbeSide::kInside;
};

double probe_radius(const Probe& p, int dim, double t);

struct ProbeResult {
  Probe probe;
  bool admissible = false;
  bool passed = false;
  std::string note;
  double start_margin = 0.0;
  double min_margin = std::numeric_limits<double>::infinity();
  std::vector<double> times;
  std::vector<double> margins;
};

/// Signed margin of the probe against the shadow (inside) or against its
/// complement in the domain (outside) at each trace time of the probe's life.
/// The start disc must clear the other side by 2h, otherwise the probe is rejected.
ProbeResult avoidance_probe(const ShadowTrace& shadow, const Probe& probe);

struct WeakSolutionReport {
  std::vector<ProbeResult> results;
  std::size_t inside_pass = 0, inside_fail = 0;
  std::size_t outside_pass = 0, outside_fail = 0;
  std::size_t rejected = 0;
  double min_margin = std::numeric_limits<double>::infinity();

  bool passed() const { return inside_fail + outside_fail == 0 && inside_pass + outside_pass > 0; }
  std::string to_text() const;
  void write_csv(std::ostream& out) const;
};

WeakSolutionReport run_probes(const ShadowTrace& shadow, const std::vector<Probe>& probes);

/// Random admissible probes of one side: start times on trace frames in
/// [t_lo, t_hi], start margins of at least 2h.
std::vector<Probe> random_probes(const ShadowTrace& shadow, ProbeSide side, std::size_t count, std::uint64_t seed,
                                 double t_lo, double t_hi);

}  // namespace gmcf
