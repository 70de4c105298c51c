#include "gmcf/curvature_cones.hpp"

#include <algorithm>
#include <map>
#include <numeric>

namespace gmcf {

namespace {

double min_of(std::span<const double> k) { return k.empty() ? 0.0 : *std::min_element(k.begin(), k.end()); }
double sum_of(std::span<const double> k) { return std::accumulate(k.begin(), k.end(), 0.0); }

// Registered custom test functions. Each is concave, symmetric and
// componentwise nondecreasing.
const std::map<std::string, CurvatureCone::TestFn>& registry() {
  static const std::map<std::string, CurvatureCone::TestFn> tests = {
      {"min_plus_half_sum", [](std::span<const double> k) { return min_of(k) + 0.5 * sum_of(k); }},
      {"min_plus_sum", [](std::span<const double> k) { return min_of(k) + sum_of(k); }},
      {"two_min_plus_sum", [](std::span<const double> k) { return 2.0 * min_of(k) + sum_of(k); }},
  };
  return tests;
}

}  // namespace

CurvatureCone CurvatureCone::positive(double tol, bool open) {
  return CurvatureCone(Kind::kPositive, "positive", min_of, tol, open);
}

CurvatureCone CurvatureCone::mean(double tol, bool open) {
  return CurvatureCone(Kind::kMean, "mean", sum_of, tol, open);
}

CurvatureCone CurvatureCone::custom(std::string id, TestFn test, double tol, bool open) {
  return CurvatureCone(Kind::kCustom, "custom:" + id, std::move(test), tol, open);
}

CurvatureCone CurvatureCone::from_name(const std::string& name, double tol) {
  if (name == "positive") return positive(tol);
  if (name == "mean") return mean(tol);
  const std::string prefix = "custom:";
  if (name.rfind(prefix, 0) == 0) {
    const std::string id = name.substr(prefix.size());
    const auto it = registry().find(id);
    if (it != registry().end()) return custom(id, it->second, tol);
    throw Error(ErrorCode::kConfig, "unknown custom cone test function '" + id + "'");
  }
  throw Error(ErrorCode::kConfig, "unknown cone '" + name + "' (expected positive, mean or custom:<id>)");
}

std::vector<std::string> registered_cone_tests() {
  std::vector<std::string> ids;
  for (const auto& [id, fn] : registry()) ids.push_back(id);
  return ids;
}

double CurvatureCone::margin(std::span<const double> kappa) const { return test_(kappa); }

bool CurvatureCone::admits(double m) const { return open_ ? m > tol_ : m >= -tol_; }

bool CurvatureCone::contains(const Vec& kappa) const { return admits(margin(kappa)); }

double CurvatureCone::matrix_margin(const Mat& m) const {
  Eigen::SelfAdjointEigenSolver<Mat> eig(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw Error(ErrorCode::kGeometry, "matrix_in_cone: eigensolver failed");
  const Vec lambda = eig.eigenvalues();
  return margin(lambda);
}

bool CurvatureCone::matrix_contains(const Mat& m) const { return admits(matrix_margin(m)); }

bool cone_contains(const CurvatureCone& cone, const Vec& kappa) { return cone.contains(kappa); }
bool matrix_in_cone(const CurvatureCone& cone, const Mat& m) { return cone.matrix_contains(m); }

}  // namespace gmcf
