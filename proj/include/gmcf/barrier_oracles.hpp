#pragma once

// Exact solutions and barriers for graphical mean curvature flow, with
// residual-sign certification and a comparison checker for trajectories.

#include "gmcf/gmcf_solver.hpp"

#include <limits>
#include <string>

namespace gmcf {

/// Value, spatial gradient, Hessian and time derivative at (x, t).
struct Jet {
  double value = 0.0;
  Vec grad;
  Mat hess;
  double dt = 0.0;
};

/// (delta_ij - p_i p_j / (1 + |p|^2)) H_ij
double gmcf_operator(const Vec& grad, const Mat& hess);

enum class BarrierSide { kUpper, kLower, kExact };

struct Barrier {
  BarrierSide side = BarrierSide::kUpper;
  int dim = 1;
  std::string provenance;
  std::function<double(const Vec&, double)> value;
  std::function<Jet(const Vec&, double)> jet;
  std::function<bool(const Vec&, double)> valid;
  /// Optional cancellation-free residual; replaces the jet-based evaluation.
  std::function<double(const Vec&, double)> residual_fn;
  double t_begin = 0.0;
  double t_end = std::numeric_limits<double>::infinity();

  bool contains(const Vec& x, double t) const { return t >= t_begin && t <= t_end && valid(x, t); }
  /// dt w - (delta_ij - w_i w_j / (1 + |Dw|^2)) w_ij.
  double residual(const Vec& x, double t) const;
};

/// t - log|sin x| + shift on (0, pi) (branch > 0) or (-pi, 0) (branch < 0).
Barrier grim_reaper(int branch = 1, double shift = 0.0);

/// Graph of a hemisphere of the sphere of radius sqrt(r0^2 - 2 n t) about
/// (center, height) in R^(n+1). The upper side is the lower hemisphere
/// height - sqrt(r^2 - |x - c|^2); the lower side is the upper hemisphere.
/// Both are exact solutions on |x - c| < r(t).
Barrier sphere_graph_barrier(const Vec& center, double r0, int n, BarrierSide side, double height = 0.0);

/// Radius law of sphere_graph_barrier and its extinction time r0^2 / (2n).
double sphere_radius(double r0, int n, double t);
double sphere_extinction_time(double r0, int n);

struct BarrierPair {
  Barrier upper;
  Barrier lower;
};

struct BoundaryGradientOptions {
  double collar = 0.2;             // upper bound on the layer width mu (tubular neighbourhood)
  double initial_lipschitz = 0.0;  // Lipschitz bound of u0; shrinks mu so u0 lies between the barriers
  double delta0 = 0.5;
  int max_halvings = 40;
  std::size_t samples = 4000;
  std::uint64_t seed = 1;
  double tol = 1e-8;
};

struct BoundaryGradientBarrier {
  BarrierPair pair;
  double delta = 0.0;
  double sigma = 0.0;
  double collar = 0.0;
  double height = 0.0;  // sup_u + sup |phi|
  double gradient_bound = 0.0;  // delta * sigma + sup |D phi|
  std::size_t certified_samples = 0;
  double worst_residual = 0.0;
  std::vector<std::string> rejected;
};

/// Localized log barriers w = phi +- delta log(1 + sigma d) +- M eta, M = sup_u + sup|phi|,
/// on the layer {0 <= d <= mu} within B_2r(x0), mu = sigma^(-1/2). eta is a
/// quintic smoothstep that vanishes on B_r and equals 1 outside B_3r/2.
/// sigma >= (exp(M / delta) - 1)^2 so that w+ >= sup_u on the inner edge of the
/// layer; delta is halved until every sampled residual has the right sign.
BoundaryGradientBarrier boundary_gradient_barrier(const ScalarField& phi, const ScalarField& d, const Vec& x0,
                                                  double r, double sup_u,
                                                  const BoundaryGradientOptions& options = {});

/// Quintic smoothstep cutoff: 0 for |x - x0| <= r, 1 for |x - x0| >= 3r/2.
double cutoff_eta(const Vec& x, const Vec& x0, double r, Vec* grad = nullptr, Mat* hess = nullptr);

/// Numerical cap solution v(x_hat, t) of the (n-1)-dimensional problem,
/// interpolated linearly in time between frames and in space between nodes.
class CapSolution {
 public:
  CapSolution(std::vector<double> times, std::vector<Grid> frames);
  static CapSolution from_trajectory(const Trajectory& traj);

  double t_end() const { return times_.back(); }
  /// v, v_x, v_xx and v_t = v_xx / (1 + v_x^2) at (x_hat, t); false outside the base interval.
  bool eval(double x_hat, double t, double* v, double* vx, double* vxx, double* vt) const;
  double sup_abs() const;
  double sup_second_derivative() const;
  double lo() const { return lo_; }
  double hi() const { return hi_; }

 private:
  std::vector<double> times_;
  std::vector<Grid> frames_;
  std::vector<std::vector<double>> vx_;
  std::vector<std::vector<double>> vxx_;
  double lo_ = 0.0, hi_ = 0.0;
};

/// Lower bound 4 s^2 ||D^2 v|| + 4 s on the drift constant.
double sup_barrier_drift(double s, double d2v);

struct SupBarrier {
  BarrierPair pair;
  double drift = 0.0;  // c
  double d2v = 0.0;
  double s = 0.0;
};

/// w = 1 / (v(x_hat, t) - x_n) on Q = {h < x_n < v}, w+- = +-(w + c t + sup_data).
/// c defaults to 1.1 times the drift lower bound. The validity region drops
/// the blow-up side (v - x_n < q_min). Throws ErrorCode::kParameter if |v| >= s.
SupBarrier sup_barrier(const CapSolution& v, const std::function<double(double)>& h, double s, double sup_data,
                       double c = 0.0, double q_min = 1e-3);

struct ResidualReport {
  std::size_t samples = 0;
  std::size_t failures = 0;
  double worst = 0.0;  // most adverse signed residual
  Vec worst_x;
  double worst_t = 0.0;
  bool passed() const { return samples > 0 && failures == 0; }
};

/// Samples (x, t) uniformly in box x [t0, t1] restricted to the validity
/// region; upper barriers need residual >= -tol, lower <= tol, exact |.| <= tol.
ResidualReport certify_residual(const Barrier& b, const Vec& lo, const Vec& hi, double t0, double t1,
                                std::size_t n_samples, std::uint64_t seed, double tol = 1e-8);

struct ViolationReport {
  std::vector<double> times;
  std::vector<double> frame_violation;  // max signed violation per frame (-inf if nothing checked)
  double worst = -std::numeric_limits<double>::infinity();
  double worst_t = 0.0;
  Vec worst_x;
  std::size_t checked = 0;
  double tolerance = 1e-8;
  bool passed() const { return checked > 0 && worst <= tolerance; }
  std::string to_text() const;
};

/// Signed violation u - w (upper), w - u (lower) or |u - w| (exact) over
/// active nodes in the validity region, per frame.
ViolationReport check_barrier(const std::vector<double>& times, const std::vector<Grid>& frames, const Barrier& b,
                              double tol = 1e-8);
ViolationReport check_barrier(const Trajectory& traj, const Barrier& b, double tol = 1e-8);

}  // namespace gmcf
