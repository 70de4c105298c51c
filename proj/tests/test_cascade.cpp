#include "doctest.h"

#include "gmcf/cascade_shadow.hpp"

#include <cmath>
#include <sstream>

using namespace gmcf;

namespace {

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

// Radial shadow trace of the disk of radius sqrt(1 - 2t) on [0, 1].
ShadowTrace disk_trace(double h, double t_end, double dt) {
  ShadowTrace tr;
  tr.dim = 2;
  tr.h = h;
  tr.radial = true;
  tr.domain_radius = 1.0;
  const auto n = static_cast<std::uint64_t>(std::round(1.0 / h)) + 1;
  tr.layout = Grid({n}, h, Vec::Zero(1));
  for (double t = 0.0; t <= t_end + 1e-12; t += dt) {
    const double r = t < 0.5 ? std::sqrt(1 - 2 * t) : 0.0;
    std::vector<std::uint8_t> mask(n), active(n, 1);
    for (std::uint64_t i = 0; i < n; ++i) mask[i] = i * h < r;
    tr.times.push_back(t);
    tr.mask.push_back(mask);
    tr.active.push_back(active);
    tr.boundary.emplace_back();
    tr.ambiguous.push_back(0);
    tr.radius.push_back(r);
  }
  return tr;
}

}  // namespace

TEST_CASE("compactification") {
  CHECK(compactify_atan(0.0) == 0.0);
  CHECK(compactify_atan(INFINITY) == 1.0);
  CHECK(compactify_atan(-INFINITY) == -1.0);
  CHECK(compactify_atan(1.0) == doctest::Approx(0.5));
}

TEST_CASE("cell classification") {
  CHECK(classify_cell({1.0, 1.0 + 1e-6}, 1e3, 1e-3) == CellStatus::kConverged);
  CHECK(classify_cell({800.0, 2000.0}, 1e3, 1e-3) == CellStatus::kEscaped);
  CHECK(classify_cell({-800.0, -2000.0}, 1e3, 1e-3) == CellStatus::kEscaped);
  CHECK(classify_cell({0.0, 5.0}, 1e3, 1e-3) == CellStatus::kAmbiguous);
  CHECK(classify_cell({0.0, 5.0, 0.0}, 1e3, 1e-3) == CellStatus::kOscillating);
  CHECK(classify_cell({NAN, 1.0}, 1e3, 1e-3) == CellStatus::kAmbiguous);
  CHECK(std::string(status_name(CellStatus::kEscaped)) == "escaped");
}

TEST_CASE("cascade configuration checks") {
  CascadeConfig c;
  c.schedule = {4.0, 2.0};
  CHECK_THROWS_AS(c.validate(), Error);
  c.schedule = {2.0};
  CHECK_THROWS_AS(c.validate(), Error);
  c.schedule = {2.0, 4.0};
  c.h_inf = 1e7;
  try {
    c.validate();
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kConfig);
  }
}

TEST_CASE("domain truncation") {
  const auto inside = truncate_domain(make_ball(Vec::Zero(2), 1.0), 4.0, 0.2, CurvatureCone::mean());
  CHECK_FALSE(inside.truncated);
  const auto plane = truncate_domain(DomainSpec{Whole{2}, 1.0}, 4.0, 0.2, CurvatureCone::mean());
  CHECK(plane.truncated);
  const auto [lo, hi] = bounding_box(plane.domain);
  CHECK(hi[0] == doctest::Approx(8.0 - 0.2).epsilon(0.05));
  SmoothingOptions opt;
  opt.inclusion_samples = 2000;
  opt.curvature_samples = 300;
  const auto half = truncate_domain(make_half_space(v2(0, 1), 0.0), 4.0, 0.2, CurvatureCone::mean(), opt);
  CHECK(half.truncated);
  REQUIRE(half.smoothing.has_value());
  CHECK(half.smoothing->curvature.failures == 0);
  CHECK(half.inclusion_violations == 0);
}

TEST_CASE("initial data preparation") {
  const std::vector<Vec> probes = {v2(0, 0), v2(0.3, 0.1), v2(-0.5, 0.2)};
  const auto zero = prepare_initial([](const Vec&) { return 0.0; }, 5.0, 2, 0.1, probes);
  for (const Vec& p : probes) CHECK(zero.u(p) == doctest::Approx(0.0).epsilon(1e-12));
  const auto inf = prepare_initial([](const Vec&) { return INFINITY; }, 5.0, 2, 0.0, probes);
  CHECK(inf.u(v2(0.1, 0.1)) == 5.0);
  const auto smooth = prepare_initial([](const Vec& x) { return std::sin(x[0]); }, 8.0, 2, 0.05, probes);
  CHECK(smooth.sup_error <= 1.0 / 8.0);
}

TEST_CASE("bounded data: cascade stages agree and every cell converges") {
  CascadeProblem p;
  p.omega = make_ball(Vec::Zero(2), 1.0);
  p.u0 = [](const Vec& x) { return 0.3 * x[0]; };
  CascadeConfig c;
  c.schedule = {4.0, 8.0};
  c.solver.h = 0.1;
  c.solver.t_end = 0.05;
  const auto res = run_cascade(p, c);
  CHECK(res.count(CellStatus::kEscaped) == 0);
  CHECK(res.count(CellStatus::kConverged) > 0);
  CHECK(res.monotonicity_defect() < 1e-12);
  const auto tr = extract_shadow(res, c.h_inf);
  for (std::size_t k = 0; k < tr.times.size(); ++k)
    for (std::size_t i = 0; i < tr.mask[k].size(); ++i)
      if (tr.active[k][i]) CHECK(tr.mask[k][i] == 1);
  std::ostringstream csv;
  res.write_convergence_csv(csv);
  CHECK(csv.str().find('\n') != std::string::npos);
}

TEST_CASE("proper radial profile escapes and the shadow shrinks") {
  CascadeProblem p;
  p.radial_dim = 2;
  p.u0 = [](const Vec& x) {
    const double r = std::abs(x[0]);
    return r >= 1.0 ? INFINITY : -std::log1p(-r * r);
  };
  CascadeConfig c;
  c.schedule = {8, 32, 128};
  c.h_inf = 60.0;  // below R_max, so escaped cells can be told apart
  c.solver.h = 1.0 / 64;
  c.solver.t_end = 0.6;
  c.solver.output_times = {0.1, 0.2, 0.3, 0.4, 0.5};
  const auto res = run_cascade(p, c);
  const auto tr = extract_shadow(res, c.h_inf);
  for (std::size_t k = 1; k < tr.radius.size(); ++k) CHECK(tr.radius[k] <= tr.radius[k - 1]);
  CHECK(tr.radius.back() == 0.0);
  // The interior minimum grows with time.
  const auto& lim = res.limit();
  CHECK(lim[3].values[0] > lim[1].values[0]);
}

TEST_CASE("probes against an exact shrinking-disk trace") {
  const auto tr = disk_trace(0.005, 0.49, 0.001);
  Probe in{Vec::Zero(2), 0.3, 0.0, ProbeSide::kInside};
  CHECK(probe_radius(in, 2, 0.0) == doctest::Approx(0.3));
  CHECK(probe_radius(in, 2, 0.045) == doctest::Approx(0.0).epsilon(1e-6));
  const auto r = avoidance_probe(tr, in);
  CHECK(r.admissible);
  CHECK(r.passed);
  Probe out{v2(0.0, 0.0), 0.1, 0.45, ProbeSide::kOutside};
  const auto rejected = avoidance_probe(tr, out);  // starts inside the shadow
  CHECK_FALSE(rejected.admissible);
  const auto rep = run_probes(tr, random_probes(tr, ProbeSide::kInside, 5, 1, 0.0, 0.3));
  CHECK(rep.passed());
  CHECK(rep.to_text().size() > 0);
}

TEST_CASE("static full-domain shadow passes every inside probe") {
  ShadowTrace tr = disk_trace(0.01, 0.2, 0.01);
  for (auto& m : tr.mask) std::fill(m.begin(), m.end(), 1);
  for (double& r : tr.radius) r = 1.0;
  const auto r = avoidance_probe(tr, Probe{v2(0.2, 0.1), 0.4, 0.0, ProbeSide::kInside});
  CHECK(r.passed);
}

TEST_CASE("grid integral") {
  Grid g({3, 3}, 0.5, v2(0, 0), 2.0);
  g.values[4] = NAN;
  CHECK(grid_integral(g) == doctest::Approx(8 * 2.0 * 0.25));
}
