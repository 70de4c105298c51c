#pragma once

// Explicit finite-difference solver for graphical mean curvature flow
//   u_t = (delta_ij - u_i u_j / (1 + |Du|^2)) u_ij
// with Dirichlet data on 1D intervals, 2D domains with curved boundaries
// (Shortley-Weller cut cells) and a radially symmetric reduction.

#include "gmcf/field_geometry.hpp"
#include "gmcf/grid_io.hpp"

#include <optional>
#include <vector>

namespace gmcf {

using SpaceTimeFn = std::function<double(const Vec&, double)>;

enum class NodeKind : std::uint8_t {
  kExterior = 0,
  kInterior = 1,  // updated by the scheme
  kFixed = 2,     // carries Dirichlet data (too close to the boundary, or on the edge of the grid box)
};

/// One side of one axis of a node: a true neighbour or a boundary intersection.
struct Link {
  std::int64_t node = -1;   // neighbour index, or -1 for a boundary intersection
  std::int32_t ghost = -1;  // index into ghost_points when node < 0
  double dist = 0.0;        // theta * h, theta in (0, 1]
};

struct GraphFlowState {
  Grid grid;  // u; NaN on exterior nodes
  std::vector<NodeKind> kind;
  std::vector<Link> links;           // 2 * dim per node: axis k, side s at 2k + s (s = 0: minus)
  std::vector<Vec> ghost_points;     // boundary intersection points
  std::vector<std::int32_t> source;  // for fixed nodes: the nearest close intersection, or -1 on the edge of the box
  std::vector<std::size_t> interior;
  std::vector<std::uint8_t> capped;
  double t = 0.0;
  SpaceTimeFn phi_bc;

  int dim() const { return grid.dim; }
  std::size_t size() const { return grid.values.size(); }
  const Link& link(std::size_t node, int axis, int side) const { return links[(node * dim() + axis) * 2 + side]; }
  /// Cut fraction theta in (0, 1] of the given side.
  double theta(std::size_t node, int axis, int side) const { return link(node, axis, side).dist / grid.spacing; }
  bool active(std::size_t node) const { return kind[node] != NodeKind::kExterior; }
};

/// Builds the state on the grid with lower corner lo, spacing h and enough
/// nodes to cover hi. Nodes whose boundary intersection lies closer than
/// theta_min * h are held at the Dirichlet data evaluated at the node.
GraphFlowState make_state(const DomainSpec& domain, const Vec& lo, const Vec& hi, double h,
                          const std::function<double(const Vec&)>& u0, SpaceTimeFn phi_bc, double theta_min = 0.1);

/// kFiniteDifference: centered second differences with a sign-matched cross
/// term (positive weights, stencil maximum principle; ordering of two
/// solutions holds only approximately because the coefficients depend on Du).
/// kWideMedian: the new value is the median of u(x + eta) - zeta over the
/// ball |(eta, zeta)| < eps in R^(dim+1), taken over lattice offsets. Exactly
/// monotone in every value it reads, so ordered data stay ordered; first order
/// near the boundary, where exterior lattice points read the Dirichlet data.
enum class Scheme { kFiniteDifference, kWideMedian };

struct SolverConfig {
  double h = 0.05;
  Scheme scheme = Scheme::kFiniteDifference;
  double median_radius = 3.0;  // eps / h of the wide-median scheme
  double dt = 0.0;   // fixed step; 0 selects dt = cfl * dt_max
  double cfl = 0.9;  // sigma in (0, 1]
  double t_end = 1.0;
  std::vector<double> output_times;  // frames besides t = 0 and t_end
  double h_cap = 1e6;
  double theta_min = 0.1;
  std::size_t diagnostics_stride = 1;
  bool check_max_principle = false;
};

/// Largest dt for which every update is a convex combination (monotone scheme).
double max_stable_dt(const GraphFlowState& state);

struct RhsValue {
  double rate = 0.0;
  double gradient_norm = 0.0;
  bool augmented = false;  // a diagonal coefficient was raised (or the cross term dropped) to keep weights nonnegative
  double stencil_min = 0.0;
  double stencil_max = 0.0;
};

/// Discrete rate of change at an interior node.
RhsValue gmcf_rhs(const GraphFlowState& state, std::size_t node);

struct StepReport {
  std::size_t augmented = 0;
  std::size_t max_principle_violations = 0;
  std::size_t capped = 0;
};

/// Thrown on non-finite values; carries the last valid state.
class SolverAbort : public Error {
 public:
  SolverAbort(const std::string& what, GraphFlowState last)
      : Error(ErrorCode::kSolver, what), last_(std::move(last)) {}
  const GraphFlowState& last_state() const { return last_; }

 private:
  GraphFlowState last_;
};

/// One explicit Euler step. Throws ErrorCode::kParameter if dt exceeds max_stable_dt.
StepReport step(GraphFlowState& state, double dt, double h_cap = 1e6, bool check_max_principle = false);

/// Time step of one wide-median step with ball radius radius_cells * h.
double median_step_dt(const GraphFlowState& state, double radius_cells);

/// One wide-median step; the ball radius is chosen so that the step advances
/// the flow by dt. Throws ErrorCode::kParameter if that radius is below h.
StepReport median_step(GraphFlowState& state, double dt, double h_cap = 1e6, bool check_max_principle = false);

struct StepDiagnostics {
  double t = 0.0;
  double max_abs_u = 0.0;
  double min_u = 0.0;
  double max_grad = 0.0;
  double dt = 0.0;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Grid> frames;
  std::vector<StepDiagnostics> diagnostics;
  std::size_t steps = 0;
  std::size_t augmented_updates = 0;
  std::size_t max_principle_violations = 0;
  std::vector<std::uint8_t> capped;
  GraphFlowState final_state;
};

StepDiagnostics diagnose(const GraphFlowState& state, double dt);

Trajectory solve(const GraphFlowState& initial, const SolverConfig& config);

/// Centered gradient at an active node (one-sided where links are cut).
Vec node_gradient(const GraphFlowState& state, const std::vector<double>& u, std::size_t node);

/// max over interior nodes of |discrete rhs of exact(., t) - d/dt exact|.
/// With uncut_only, nodes next to a boundary intersection are skipped.
double residual(const SpaceTimeFn& exact, const GraphFlowState& state, const SpaceTimeFn& exact_dt = {},
                bool uncut_only = false);

// Radially symmetric reduction u_t = u_rr / (1 + u_r^2) + (n - 1) u_r / r on [0, rho].

struct RadialTrajectory {
  std::vector<double> r;
  std::vector<double> times;
  std::vector<std::vector<double>> frames;
  std::vector<StepDiagnostics> diagnostics;
  std::size_t steps = 0;
  std::vector<std::uint8_t> capped;
};

/// bc(t) is the value at r = rho. config.h is the radial spacing.
RadialTrajectory radial_solve(const std::function<double(double)>& u0, int n, double rho,
                              const std::function<double(double)>& bc, const SolverConfig& config);

}  // namespace gmcf
