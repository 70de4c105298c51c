#include "doctest.h"

#include "gmcf/barrier_oracles.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace gmcf;

namespace {

constexpr double kPi = std::numbers::pi;

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

GraphFlowState interval_state(double a, double b, double h, const std::function<double(double)>& u0) {
  const DomainSpec dom = make_ball(Vec::Constant(1, 0.5 * (a + b)), 0.5 * (b - a));
  return make_state(dom, Vec::Constant(1, a), Vec::Constant(1, b), h, [&](const Vec& x) { return u0(x[0]); },
                    [u0](const Vec& x, double) { return u0(x[0]); });
}

std::size_t node_near(const GraphFlowState& s, const Vec& x) {
  std::size_t best = 0;
  double d = 1e300;
  for (std::size_t i : s.interior) {
    const double e = (s.grid.node(i) - x).norm();
    if (e < d) {
      d = e;
      best = i;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("rhs examples") {
  auto lin = interval_state(-1, 1, 0.05, [](double x) { return 3 * x + 2; });
  for (std::size_t i : lin.interior) CHECK(std::abs(gmcf_rhs(lin, i).rate) < 1e-10);
  auto par = interval_state(-1, 1, 0.05, [](double x) { return x * x; });
  // u''/(1 + u'^2) = 2 at the vertex, up to the O(h^2) consistency error.
  CHECK(gmcf_rhs(par, node_near(par, Vec::Zero(1))).rate == doctest::Approx(2.0).epsilon(0.05 * 0.05));
  auto grim = interval_state(0.1, kPi - 0.1, kPi / 512, [](double x) { return -std::log(std::sin(x)); });
  CHECK(gmcf_rhs(grim, node_near(grim, Vec::Constant(1, kPi / 2))).rate == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("operator matches the non-divergence form") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> N;
  for (int i = 0; i < 100; ++i) {
    const Vec p = v2(N(rng), N(rng));
    Mat h(2, 2);
    h << N(rng), N(rng), 0, N(rng);
    h(1, 0) = h(0, 1);
    const double w = 1 + p.squaredNorm();
    const double expect = h(0, 0) + h(1, 1) - (p[0] * p[0] * h(0, 0) + 2 * p[0] * p[1] * h(0, 1) + p[1] * p[1] * h(1, 1)) / w;
    CHECK(gmcf_operator(p, h) == doctest::Approx(expect));
  }
}

TEST_CASE("linear data is stationary") {
  const DomainSpec disk = make_ball(Vec::Zero(2), 1.0);
  auto lin = [](const Vec& x) { return 0.7 * x[0] - 1.3 * x[1] + 0.2; };
  auto s = make_state(disk, v2(-1.1, -1.1), v2(1.1, 1.1), 0.05, lin, [&](const Vec& x, double) { return lin(x); });
  const auto before = s.grid.values;
  step(s, 0.9 * max_stable_dt(s));
  for (std::size_t i = 0; i < s.size(); ++i)
    if (s.active(i)) CHECK(std::abs(s.grid.values[i] - before[i]) < 1e-12);
}

TEST_CASE("constant data stays constant under both schemes") {
  const DomainSpec disk = make_ball(Vec::Zero(2), 1.0);
  for (Scheme scheme : {Scheme::kFiniteDifference, Scheme::kWideMedian}) {
    auto s = make_state(disk, v2(-1.1, -1.1), v2(1.1, 1.1), 0.1, [](const Vec&) { return 1.5; },
                        [](const Vec&, double) { return 1.5; });
    SolverConfig cfg;
    cfg.h = 0.1;
    cfg.t_end = 0.05;
    cfg.scheme = scheme;
    const auto tr = solve(s, cfg);
    for (std::size_t i = 0; i < s.size(); ++i)
      if (s.active(i)) CHECK(tr.final_state.grid.values[i] == doctest::Approx(1.5).epsilon(1e-12));
  }
}

TEST_CASE("finite-difference steps obey the stencil maximum principle") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const DomainSpec dom = make_ellipsoid(v2(0.1, 0), v2(1.0, 0.7));
  for (int trial = 0; trial < 5; ++trial) {
    const double a = 2 * U(rng), b = 3 * U(rng), c = U(rng);
    auto u0 = [=](const Vec& x) { return a * std::sin(3 * x[0] + b * x[1]) + c * x[0] * x[1]; };
    auto s = make_state(dom, v2(-1.0, -0.8), v2(1.2, 0.8), 0.04, u0, [=](const Vec& x, double) { return u0(x); });
    for (int k = 0; k < 20; ++k) {
      const auto r = step(s, 0.95 * max_stable_dt(s), 1e6, true);
      CHECK(r.max_principle_violations == 0);
    }
  }
}

TEST_CASE("a step larger than the stable bound is rejected") {
  auto s = interval_state(-1, 1, 0.05, [](double x) { return x * x; });
  try {
    step(s, 2.0 * max_stable_dt(s));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kParameter);
  }
}

TEST_CASE("wide-median steps keep ordered data ordered") {
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const DomainSpec dom = make_perturbed_ball(2, 0.9, 0.02, 4);
  for (int trial = 0; trial < 3; ++trial) {
    const double a = 2 * U(rng), b = 4 * U(rng), lift = 0.2 + 0.2 * U(rng);
    auto u1 = [=](const Vec& x) { return a * std::cos(b * x[0] - 2 * x[1]); };
    auto u2 = [=](const Vec& x) { return u1(x) + lift * std::exp(-4 * x.squaredNorm()); };
    auto s1 = make_state(dom, v2(-1, -1), v2(1, 1), 0.05, u1, [=](const Vec& x, double) { return u1(x); });
    auto s2 = make_state(dom, v2(-1, -1), v2(1, 1), 0.05, u2, [=](const Vec& x, double) { return u2(x); });
    const double dt = median_step_dt(s1, 3.0);
    for (int k = 0; k < 10; ++k) {
      median_step(s1, dt);
      median_step(s2, dt);
      for (std::size_t i = 0; i < s1.size(); ++i)
        if (s1.active(i)) CHECK(s1.grid.values[i] <= s2.grid.values[i] + 1e-12);
    }
  }
}

TEST_CASE("wide-median scheme follows a shrinking sphere graph") {
  // Lower hemisphere of radius sqrt(r0^2 - 2t) in R^3 over the disk of radius 0.6.
  const auto b = sphere_graph_barrier(Vec::Zero(2), 1.0, 2, BarrierSide::kUpper);
  const DomainSpec dom = make_ball(Vec::Zero(2), 0.6);
  auto s = make_state(dom, v2(-0.7, -0.7), v2(0.7, 0.7), 0.02, [&](const Vec& x) { return b.value(x, 0.0); },
                      [&](const Vec& x, double t) { return b.value(x, t); });
  SolverConfig cfg;
  cfg.h = 0.02;
  cfg.t_end = 0.05;
  cfg.scheme = Scheme::kWideMedian;
  const auto tr = solve(s, cfg);
  double err = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (s.active(i)) err = std::max(err, std::abs(tr.final_state.grid.values[i] - b.value(s.grid.node(i), 0.05)));
  CHECK(err < 5e-3);
}

TEST_CASE("grim reaper error halves twice per refinement") {
  auto exact = [](const Vec& x, double t) { return t - std::log(std::sin(x[0])); };
  double prev = 0.0;
  for (int m : {64, 128}) {
    const double h = kPi / m;
    const DomainSpec dom = make_ball(Vec::Constant(1, kPi / 2), kPi / 2 - 0.1);
    const auto st = make_state(dom, Vec::Constant(1, 0.1), Vec::Constant(1, kPi - 0.1), h,
                               [&](const Vec& x) { return exact(x, 0.0); }, exact);
    SolverConfig cfg;
    cfg.h = h;
    cfg.t_end = 0.5;
    const auto tr = solve(st, cfg);
    double err = 0.0;
    for (std::size_t i = 0; i < st.size(); ++i)
      if (st.active(i)) err = std::max(err, std::abs(tr.final_state.grid.values[i] - exact(st.grid.node(i), 0.5)));
    if (prev > 0) CHECK(std::log2(prev / err) > 1.5);
    prev = err;
  }
}

TEST_CASE("radial reduction") {
  SolverConfig cfg;
  cfg.h = 0.02;
  cfg.t_end = 0.1;
  const auto flat = radial_solve([](double) { return 0.4; }, 2, 1.0, [](double) { return 0.4; }, cfg);
  for (double v : flat.frames.back()) CHECK(v == doctest::Approx(0.4));

  // Against the full 2D solver on a rotationally symmetric case.
  auto u0 = [](double r) { return 0.5 * r * r; };
  const auto rad = radial_solve(u0, 2, 1.0, [&](double) { return u0(1.0); }, cfg);
  const DomainSpec disk = make_ball(Vec::Zero(2), 1.0);
  auto s = make_state(disk, v2(-1.05, -1.05), v2(1.05, 1.05), 0.02, [&](const Vec& x) { return u0(x.norm()); },
                      [&](const Vec& x, double) { return u0(x.norm()); });
  const auto full = solve(s, cfg);
  double worst = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!s.active(i)) continue;
    const double r = s.grid.node(i).norm();
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(std::round(r / cfg.h)), rad.r.size() - 1);
    if (std::abs(rad.r[k] - r) > 1e-9) continue;
    worst = std::max(worst, std::abs(full.final_state.grid.values[i] - rad.frames.back()[k]));
    scale = std::max(scale, std::abs(rad.frames.back()[k]));
  }
  CHECK(worst <= 0.02 * scale);
}

TEST_CASE("grim reaper and sphere laws") {
  const auto g = grim_reaper();
  CHECK(g.value(Vec::Constant(1, kPi / 2), 0.0) == doctest::Approx(0.0));
  const Vec x = Vec::Constant(1, 0.7);
  CHECK(g.value(x, 1.3) == doctest::Approx(g.value(x, 0.4) + 0.9));
  for (double xi = 0.2; xi < 3.0; xi += 0.3) CHECK(std::abs(g.residual(Vec::Constant(1, xi), 0.5)) < 1e-10);
  CHECK(sphere_extinction_time(1.0, 1) == doctest::Approx(0.5));
  CHECK(sphere_radius(1.0, 1, 0.25) == doctest::Approx(std::sqrt(0.5)));
  CHECK(sphere_radius(2.0, 3, sphere_extinction_time(2.0, 3)) == doctest::Approx(0.0));
  CHECK(sup_barrier_drift(0.5, 2.0) == doctest::Approx(4.0));
}

TEST_CASE("hemisphere graph has mean curvature n / r") {
  const double r = 0.8;
  const auto b = sphere_graph_barrier(Vec::Zero(2), r, 2, BarrierSide::kUpper);
  const ScalarField level(3, [&](const Vec& y) { return y.norm() - r; });
  Vec y(3);
  y << 0.3, -0.2, b.value(v2(0.3, -0.2), 0.0);
  const Vec k = principal_curvatures(level, y);
  CHECK(std::abs(k.sum()) == doctest::Approx(2.0 / r).epsilon(1e-4));
}

TEST_CASE("boundary barriers agree with the data on the boundary") {
  const ScalarField phi(2, [](const Vec& x) { return 0.2 * x[0]; });
  const ScalarField d(2, [](const Vec& x) { return x[1]; });
  BoundaryGradientOptions opt;
  opt.samples = 500;
  const auto bg = boundary_gradient_barrier(phi, d, Vec::Zero(2), 0.5, 0.1, opt);
  const Vec p = v2(0.1, 0.0);
  CHECK(bg.pair.upper.value(p, 0.0) == doctest::Approx(phi(p)));
  CHECK(bg.pair.lower.value(p, 0.0) == doctest::Approx(phi(p)));
  CHECK(std::isfinite(bg.gradient_bound));
  CHECK(certify_residual(bg.pair.upper, v2(-1, 0), v2(1, 1), 0, 1, 500, 1).passed());
}

TEST_CASE("sup barrier blows up at the cap and rejects tall caps") {
  Grid f({41}, 0.05, Vec::Constant(1, -1.0));
  for (std::size_t i = 0; i < f.size(); ++i) f.values[i] = 0.3 * (1 - std::pow(f.node(i)[0], 2));
  const CapSolution cap({0.0, 0.1}, {f, f});
  const auto sb = sup_barrier(cap, [](double) { return -1.0; }, 0.5, 0.0);
  const double near = sb.pair.upper.value(v2(0.0, 0.3 - 1e-6), 0.05);
  CHECK(near > 1e5);
  CHECK_THROWS_AS(sup_barrier(cap, [](double) { return -1.0; }, 0.2, 0.0), Error);
}

TEST_CASE("check_barrier reports crossings") {
  Grid g({5}, 0.25, Vec::Constant(1, 1.0));
  for (std::size_t i = 0; i < g.size(); ++i) g.values[i] = -std::log(std::sin(g.node(i)[0]));
  const auto ok = check_barrier({0.0}, {g}, grim_reaper(), 1e-12);
  CHECK(ok.passed());
  g.values[2] += 0.1;
  const auto bad = check_barrier({0.0}, {g}, grim_reaper(), 1e-12);
  CHECK_FALSE(bad.passed());
  CHECK(bad.worst == doctest::Approx(0.1));
}
