#pragma once

// Curvature-preserving smoothing of A ∩ B: altered distances a = g∘d_A,
// b = g∘d_B, the mollified min Phi = delta f((a-b)/delta) + b and the
// sampled validation of inclusions and curvature-cone membership.

#include "gmcf/curvature_cones.hpp"
#include "gmcf/field_geometry.hpp"

#include <string>
#include <vector>

namespace gmcf {

/// f(s) = min{s,0} - gap(s), the integral of a symmetric C^inf smooth step psi
/// (psi = 1 on (-inf,-1], 0 on [1,inf), psi(t) + psi(-t) = 1) built from the
/// exp(-1/x) bump. f' = psi, f'' = psi'.
class SmoothMinProfile {
 public:
  static SmoothMinProfile standard();

  const std::string& kernel() const { return kernel_; }

  double operator()(double s) const;
  double d1(double s) const;
  double d2(double s) const;

  /// min{s,0} - f(s) >= 0, evaluated without cancellation; zero for |s| >= 1.
  double gap(double s) const;
  /// log(gap(s)); finite for every |s| < 1 even where gap underflows.
  double log_gap(double s) const;

 private:
  explicit SmoothMinProfile(std::string kernel) : kernel_(std::move(kernel)) {}
  std::string kernel_;
};

/// Only "exp_bump" is available.
SmoothMinProfile build_f(const std::string& kernel = "exp_bump");

/// g with g(0) = 0, g'(s) = 1 + (1 - tanh(k s))/2 in (1, 2), g''(s) <= -C on |s| < eps_g.
struct BoundaryAlteration {
  double curvature_dominance = 1.0;  // C
  double window = 0.1;               // eps_g
  double slope = 4.0;                // k

  double operator()(double s) const;
  double d1(double s) const;
  double d2(double s) const;
};

/// Largest feasible C * eps_g for the tanh family (about 0.2237).
double alteration_feasibility_bound();

/// k = 4C when that satisfies the window condition, otherwise the smallest
/// feasible k. Throws ErrorCode::kParameter when C * eps_g exceeds the bound.
BoundaryAlteration build_g(double curvature_dominance, double window);

struct AlteredDistance {
  ScalarField distance;  // d
  ScalarField field;     // a = g∘d
  BoundaryAlteration alteration;
  double max_curvature = 0.0;
  /// Depth range [0, reference_width] inside the domain on which the normal
  /// Hessian eigenvalue g''(d) lies strictly below every tangential one.
  double reference_width = 0.0;
};

AlteredDistance altered_distance(const DomainSpec& spec, const BoundaryAlteration& alt);

/// Phi = min(a,b) - delta * gap((a-b)/delta), identical to delta f((a-b)/delta) + b.
double mollified_min(double a, double b, double delta);
double mollified_max(double a, double b, double delta);
ScalarField mollified_min(const ScalarField& a, const ScalarField& b, double delta);

/// max~(min~(u, R), -R) with delta = 1/2. Infinite u saturates at +-R.
double height_cutoff(double u, double big_r);
std::function<double(const Vec&)> mollified_min_max_height(std::function<double(const Vec&)> u0, double big_r);

struct SamplingGrid {
  Vec lo;
  Vec hi;
  int resolution = 96;  // nodes per axis
};

struct DeltaSelection {
  double delta = 0.0;
  int halvings = 0;
  double min_gradient = 0.0;
  double max_gradient = 0.0;
  std::size_t zero_samples = 0;
  std::vector<std::string> rejected;  // reason per rejected candidate
};

/// Largest delta in {delta_upper * 2^-j, j <= j_max} whose zero level is
/// nonempty with min |D Phi| > tau * max |D Phi| over sampled zero points.
/// Throws ErrorCode::kGeometry ("degenerate level set") if none qualifies.
DeltaSelection select_delta(const ScalarField& a, const ScalarField& b, double delta_upper,
                            const SamplingGrid& grid, double tau = 0.05, int j_max = 12);

struct InclusionReport {
  std::size_t inner_samples = 0;      // points with Phi > 0
  std::size_t inner_violations = 0;   // ... that are not in A ∩ B
  std::size_t trimmed_samples = 0;    // points of (A∩B) \ (∂A∩∂B)_eps
  std::size_t trimmed_violations = 0; // ... with Phi <= 0
  double delta = 0.0;
  double delta1 = 0.0;  // sampled inf of max{a,b} over the trimmed class
  bool delta_ok = false;
  std::vector<Vec> violation_points;
  bool passed() const { return inner_violations == 0 && trimmed_violations == 0 && delta_ok; }
  std::string to_text() const;
};

struct CurvatureReport {
  std::string cone;
  std::size_t samples = 0;
  std::size_t failures = 0;
  double min_margin = 0.0;
  Vec worst_point;
  std::size_t single_a = 0;  // samples with a - b <= -delta (boundary of A active)
  std::size_t single_b = 0;  // samples with a - b >= delta
  std::size_t blended = 0;
  double single_field_deviation = 0.0;  // max |kappa_Omega - kappa_active boundary|
  std::vector<Vec> points;
  std::vector<Vec> curvatures;
  std::vector<double> margins;
  bool passed() const { return failures == 0; }
  std::string to_text() const;
};

struct SmoothingOptions {
  std::size_t boundary_samples = 200;   // cone precondition check per operand
  std::size_t corner_samples = 2000;    // samples of ∂A ∩ ∂B
  std::size_t inclusion_samples = 10000;
  std::size_t curvature_samples = 1000;
  int grid_resolution = 0;  // 0: 160 in 2D, 40 in 3D
  double tau = 0.05;
  std::uint64_t seed = 1;
  bool validate = true;
};

struct SmoothedIntersection {
  DomainSpec domain_a;
  DomainSpec domain_b;
  AlteredDistance a;
  AlteredDistance b;
  double delta = 0.0;
  double eps = 0.0;            // requested
  double eps_effective = 0.0;  // width actually covered by both reference neighbourhoods
  ScalarField phi;
  Vec box_lo;  // bounding box of A ∩ B inflated by 4 eps
  Vec box_hi;
  std::vector<Vec> corner;  // samples of ∂A ∩ ∂B
  DeltaSelection selection;
  InclusionReport inclusions;
  CurvatureReport curvature;
  bool validated = false;

  bool passed() const { return validated && inclusions.passed() && curvature.passed(); }
  /// The smoothed set {Phi > 0} as a domain.
  DomainSpec as_domain() const;
};

SmoothedIntersection smooth_intersection(const DomainSpec& a, const DomainSpec& b, double eps,
                                         const CurvatureCone& cone, const SmoothingOptions& options = {});

/// Distance from x to the sampled set (infinite for an empty set).
double distance_to_samples(const std::vector<Vec>& samples, const Vec& x);

InclusionReport validate_inclusions(const SmoothedIntersection& result, double eps, std::size_t n_samples,
                                    std::uint64_t seed);
CurvatureReport validate_curvature(const SmoothedIntersection& result, const CurvatureCone& cone,
                                   std::size_t n_samples, std::uint64_t seed);

}  // namespace gmcf
