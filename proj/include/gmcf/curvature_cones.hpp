#pragma once

#include "gmcf/common.hpp"

#include <span>
#include <string>

namespace gmcf {

/// Symmetric convex cone of principal-curvature vectors containing the
/// positive cone. Membership is decided through a test function f that is
/// concave, symmetric and nondecreasing in each argument, with the cone equal
/// to {f >= 0} (closed) or {f > 0} (open).
class CurvatureCone {
 public:
  enum class Kind { kPositive, kMean, kCustom };
  using TestFn = std::function<double(std::span<const double>)>;

  static CurvatureCone positive(double tol = 1e-6, bool open = false);
  static CurvatureCone mean(double tol = 1e-6, bool open = false);
  static CurvatureCone custom(std::string id, TestFn test, double tol = 1e-6, bool open = false);

  /// "positive", "mean" or "custom:<id>" for a registered test function.
  static CurvatureCone from_name(const std::string& name, double tol = 1e-6);

  Kind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  bool open() const { return open_; }
  double tolerance() const { return tol_; }

  /// Value of the test function; positive inside, zero on the cone boundary.
  double margin(std::span<const double> kappa) const;
  double margin(const Vec& kappa) const { return margin(std::span<const double>(kappa.data(), kappa.size())); }

  /// Open cones: margin > tol. Closed cones: margin >= -tol.
  bool contains(const Vec& kappa) const;
  bool admits(double margin_value) const;

  /// f(eigenvalues(M)) for symmetric M.
  double matrix_margin(const Mat& m) const;
  bool matrix_contains(const Mat& m) const;

 private:
  CurvatureCone(Kind kind, std::string name, TestFn test, double tol, bool open)
      : kind_(kind), name_(std::move(name)), test_(std::move(test)), tol_(tol), open_(open) {}

  Kind kind_;
  std::string name_;
  TestFn test_;
  double tol_;
  bool open_;
};

bool cone_contains(const CurvatureCone& cone, const Vec& kappa);
bool matrix_in_cone(const CurvatureCone& cone, const Mat& m);

/// Ids accepted after "custom:".
std::vector<std::string> registered_cone_tests();

}  // namespace gmcf
