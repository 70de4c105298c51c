#pragma once

// Implicit-surface toolkit: signed distance fields for primitive and sampled
// domains, closest-point projection, and principal curvatures of level sets.

#include "gmcf/common.hpp"
#include "gmcf/grid_io.hpp"

#include <optional>
#include <string>
#include <variant>

namespace gmcf {

/// A real function on R^dim with first and second derivatives. Derivatives
/// that are not supplied are computed by centered finite differences with
/// step fd_step(); Hessians are always returned symmetrized.
class ScalarField {
 public:
  using ValueFn = std::function<double(const Vec&)>;
  using GradFn = std::function<Vec(const Vec&)>;
  using HessFn = std::function<Mat(const Vec&)>;

  ScalarField() = default;
  ScalarField(int dim, ValueFn value, GradFn grad = {}, HessFn hess = {}, double fd_step = 1e-4);

  int dim() const { return dim_; }
  double fd_step() const { return fd_step_; }
  bool valid() const { return static_cast<bool>(value_); }

  double operator()(const Vec& x) const { return value_(x); }
  Vec gradient(const Vec& x) const;
  Mat hessian(const Vec& x) const;

  /// Finite-difference derivatives regardless of analytic availability.
  Vec fd_gradient(const Vec& x, double step) const;
  Mat fd_hessian(const Vec& x, double step) const;

 private:
  int dim_ = 0;
  ValueFn value_;
  GradFn grad_;
  HessFn hess_;
  double fd_step_ = 1e-4;
};

// Domain primitives. All are oriented positive inside.

struct Ball {
  Vec center;
  double radius = 1.0;
};

/// {x : normal . x > offset}; normal is normalized on construction of the field.
struct HalfSpace {
  Vec normal;
  double offset = 0.0;
};

struct Ellipsoid {
  Vec center;
  Vec semi_axes;
};

/// Star-shaped domain with boundary radius rho * (1 + amplitude * cos(frequency * theta)).
/// In 2D theta is the polar angle; in 3D theta is the angle from the +z axis and the
/// domain is the solid of revolution about that axis.
struct PerturbedBall {
  Vec center;
  double radius = 1.0;
  double amplitude = 0.1;
  int frequency = 3;

  double boundary_radius(double theta) const;
  double boundary_radius_d1(double theta) const;
  double boundary_radius_d2(double theta) const;
};

/// Level values sampled on a grid (positive inside); redistanced by fast marching.
struct GridSampled {
  Grid level;
};

/// Arbitrary smooth level function (positive inside), e.g. a smoothed intersection.
/// Not a distance function; max_curvature may be left unset.
struct Implicit {
  ScalarField level;
  Vec box_lo;
  Vec box_hi;
  std::optional<double> max_curvature;
  std::string label = "implicit";
};

/// All of R^dim.
struct Whole {
  int dim = 2;
};

struct DomainSpec {
  std::variant<Ball, HalfSpace, Ellipsoid, PerturbedBall, GridSampled, Implicit, Whole> shape;
  /// Width of the tubular neighbourhood of the boundary in which the field
  /// coincides with the Euclidean signed distance.
  double collar = 0.25;

  int dim() const;
  std::string describe() const;
  bool bounded() const;
};

DomainSpec make_ball(Vec center, double radius, double collar = 0.25);
DomainSpec make_half_space(Vec normal, double offset, double collar = 1.0);
DomainSpec make_ellipsoid(Vec center, Vec semi_axes, double collar = 0.2);
DomainSpec make_perturbed_ball(int dim, double radius, double amplitude, int frequency, double collar = 0.15);

/// Axis-aligned bounding box of the closure (infinite for unbounded kinds).
std::pair<Vec, Vec> bounding_box(const DomainSpec& spec);

/// Largest principal curvature of the boundary (convex = positive). Empty if unknown.
std::optional<double> max_boundary_curvature(const DomainSpec& spec);

/// Signed distance (positive inside). Analytic for primitives; fast-marching
/// redistancing plus cubic B-spline interpolation for grid-sampled specs.
/// Implicit specs return their level function unchanged.
ScalarField signed_distance(const DomainSpec& spec);

/// First-order fast marching redistancing of a level-set grid. Throws if the
/// grid has no zero crossing ("empty boundary").
Grid fast_marching_redistance(const Grid& level);

/// C^2 interpolant of grid samples (cubic B-spline with interpolation prefilter).
ScalarField bspline_field(const Grid& grid);

/// Projects x onto the zero level set: x - d(x) grad d(x) followed by Newton
/// projection steps until |field| < tol. Throws if |grad| drops below 0.5
/// along the way ("no unique projection").
Vec closest_point(const ScalarField& field, const Vec& x, double tol = 1e-12, int max_iter = 50);

/// Principal curvatures of the level set through x, ascending. Eigenvalues of
/// -P H P / |grad| on the tangent space, P = I - nu nu^T; a ball is positive.
Vec principal_curvatures(const ScalarField& field, const Vec& x);

/// Same as principal_curvatures with a precomputed gradient and Hessian.
Vec principal_curvatures(const Vec& gradient, const Mat& hessian);

/// Uniform random point in the box [lo, hi] from a per-index stream.
Vec random_point_in_box(const Vec& lo, const Vec& hi, std::uint64_t seed, std::uint64_t index);

/// Random boundary samples: points drawn in the box with |field| < band, then projected.
std::vector<Vec> sample_boundary(const ScalarField& field, const Vec& lo, const Vec& hi, double band,
                                 std::size_t count, std::uint64_t seed);

}  // namespace gmcf
