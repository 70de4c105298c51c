#include "gmcf/smooth_boolean.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

namespace gmcf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussRule {
  static constexpr int kN = 16;
  std::array<double, kN> x{};
  std::array<double, kN> w{};
  GaussRule() {
    for (int i = 0; i < kN; ++i) {
      double t = std::cos(M_PI * (i + 0.75) / (kN + 0.5));
      double dp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = t;
        for (int k = 2; k <= kN; ++k) {
          const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        dp = kN * (t * p1 - p0) / (t * t - 1.0);
        const double step = p1 / dp;
        t -= step;
        if (std::abs(step) < 1e-16) break;
      }
      x[i] = t;
      w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
    }
  }
};

const GaussRule& gauss() {
  static const GaussRule rule;
  return rule;
}

// Smooth step S on [0,1]: S(x) = 1 / (1 + exp(1/x - 1/(1-x))).
double step_exponent(double x) { return 1.0 / x - 1.0 / (1.0 - x); }

double smooth_step(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return 1.0 / (1.0 + std::exp(step_exponent(x)));
}

double log_smooth_step(double x) {
  const double z = step_exponent(x);
  return -(std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))));
}

double smooth_step_d1(double x) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  const double z = step_exponent(x);
  const double e = std::exp(-std::abs(z));
  if (e == 0.0) return 0.0;
  return e / ((1.0 + e) * (1.0 + e)) * (1.0 / (x * x) + 1.0 / ((1.0 - x) * (1.0 - x)));
}

// log of P(r) = int_r^1 psi = 2 int_0^{(1-r)/2} S(x) dx, integrated in u = 1/x
// where the integrand decays like exp(-u).
double log_tail_integral(double r) {
  const double u0 = 2.0 / (1.0 - r);
  static constexpr std::array<double, 11> breaks = {0, 0.5, 1, 2, 4, 8, 16, 32, 64, 128, 256};
  const GaussRule& g = gauss();
  double peak = -kInf;
  std::array<double, (breaks.size() - 1) * GaussRule::kN> terms{};
  std::size_t n = 0;
  for (std::size_t p = 0; p + 1 < breaks.size(); ++p) {
    const double a = u0 + breaks[p];
    const double b = u0 + breaks[p + 1];
    const double half = 0.5 * (b - a);
    for (int i = 0; i < GaussRule::kN; ++i) {
      const double u = a + half * (g.x[i] + 1.0);
      const double t = std::log(half * g.w[i]) + log_smooth_step(1.0 / u) - 2.0 * std::log(u);
      terms[n++] = t;
      peak = std::max(peak, t);
    }
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += std::exp(terms[i] - peak);
  return std::log(2.0) + peak + std::log(sum);
}

}  // namespace

// ---------------------------------------------------------------------------
// f profile

SmoothMinProfile SmoothMinProfile::standard() { return SmoothMinProfile("exp_bump"); }

SmoothMinProfile build_f(const std::string& kernel) {
  if (kernel != "exp_bump") throw Error(ErrorCode::kConfig, "unknown smooth-min kernel '" + kernel + "'");
  return SmoothMinProfile::standard();
}

double SmoothMinProfile::log_gap(double s) const {
  if (std::abs(s) >= 1.0) return -kInf;
  return log_tail_integral(std::abs(s));
}

double SmoothMinProfile::gap(double s) const {
  if (std::abs(s) >= 1.0) return 0.0;
  return std::exp(log_gap(s));
}

double SmoothMinProfile::operator()(double s) const { return std::min(s, 0.0) - gap(s); }

double SmoothMinProfile::d1(double s) const { return smooth_step(0.5 * (1.0 - s)); }

double SmoothMinProfile::d2(double s) const { return -0.5 * smooth_step_d1(0.5 * (1.0 - s)); }

// ---------------------------------------------------------------------------
// g profile

namespace {

double log_cosh(double x) {
  const double ax = std::abs(x);
  return ax + std::log1p(std::exp(-2.0 * ax)) - std::log(2.0);
}

double sech2(double x) {
  const double c = std::cosh(std::min(std::abs(x), 350.0));
  return 1.0 / (c * c);
}

// max_y y sech^2(y) / 2, attained where 2 y tanh(y) = 1.
double feasibility_peak(double* argmax) {
  double lo = 0.1, hi = 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (2.0 * mid * std::tanh(mid) < 1.0 ? lo : hi) = mid;
  }
  const double y = 0.5 * (lo + hi);
  if (argmax) *argmax = y;
  return 0.5 * y * sech2(y);
}

}  // namespace

double BoundaryAlteration::operator()(double s) const {
  if (!std::isfinite(s)) return s;
  return 1.5 * s - log_cosh(slope * s) / (2.0 * slope);
}

double BoundaryAlteration::d1(double s) const { return 1.0 + 0.5 * (1.0 - std::tanh(slope * s)); }

double BoundaryAlteration::d2(double s) const {
  if (!std::isfinite(s)) return 0.0;
  return -0.5 * slope * sech2(slope * s);
}

double alteration_feasibility_bound() { return feasibility_peak(nullptr); }

BoundaryAlteration build_g(double c, double eps_g) {
  if (!(c > 0.0) || !(eps_g > 0.0)) throw Error(ErrorCode::kParameter, "build_g: C and eps_g must be positive");
  double y_star = 0.0;
  const double bound = feasibility_peak(&y_star);
  if (c * eps_g > bound) {
    std::ostringstream os;
    os << "build_g: infeasible, C*eps_g = " << c * eps_g << " exceeds " << bound;
    throw Error(ErrorCode::kParameter, os.str());
  }
  auto window_curv = [eps_g](double k) { return 0.5 * k * sech2(k * eps_g); };
  double k = 4.0 * c;
  if (window_curv(k) < c) {
    double lo = 2.0 * c, hi = y_star / eps_g;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (window_curv(mid) < c ? lo : hi) = mid;
    }
    k = hi;
  }
  return BoundaryAlteration{c, eps_g, k};
}

// ---------------------------------------------------------------------------
// Altered distance

AlteredDistance altered_distance(const DomainSpec& spec, const BoundaryAlteration& g) {
  const auto kmax = max_boundary_curvature(spec);
  if (!kmax) throw Error(ErrorCode::kGeometry, "no curvature bound available for " + spec.describe());
  AlteredDistance out;
  out.alteration = g;
  out.max_curvature = *kmax;
  out.distance = signed_distance(spec);
  const ScalarField d = out.distance;
  const int n = spec.dim();
  out.field = ScalarField(
      n, [d, g](const Vec& x) { return g(d(x)); },
      [d, g, n](const Vec& x) {
        const double v = d(x);
        if (!std::isfinite(v)) return Vec(Vec::Zero(n));
        return Vec(g.d1(v) * d.gradient(x));
      },
      [d, g, n](const Vec& x) {
        const double v = d(x);
        if (!std::isfinite(v)) return Mat(Mat::Zero(n, n));
        const Vec dg = d.gradient(x);
        return Mat(g.d2(v) * dg * dg.transpose() + g.d1(v) * d.hessian(x));
      },
      d.fd_step());

  if (std::holds_alternative<Whole>(spec.shape)) {
    out.reference_width = kInf;
    return out;
  }
  const double kplus = std::max(*kmax, 0.0);
  const int steps = 4000;
  double width = 0.0;
  for (int i = 0; i <= steps; ++i) {
    const double depth = spec.collar * i / steps;
    const double denom = 1.0 - depth * kplus;
    if (denom <= 0.0) break;
    if (!(g.d2(depth) < -g.d1(depth) * kplus / denom)) break;
    width = depth;
  }
  out.reference_width = width;
  return out;
}

// ---------------------------------------------------------------------------
// Mollified min / max

double mollified_min(double a, double b, double delta) {
  if (a == kInf) return b;
  if (b == kInf) return a;
  const double s = (a - b) / delta;
  if (s <= -1.0) return a;
  if (s >= 1.0) return b;
  static const SmoothMinProfile f = SmoothMinProfile::standard();
  return std::min(a, b) - delta * f.gap(s);
}

double mollified_max(double a, double b, double delta) { return -mollified_min(-a, -b, delta); }

ScalarField mollified_min(const ScalarField& a, const ScalarField& b, double delta) {
  if (!(delta > 0.0)) throw Error(ErrorCode::kParameter, "mollified_min: delta must be positive");
  if (a.dim() != b.dim()) throw Error(ErrorCode::kParameter, "mollified_min: dimension mismatch");
  static const SmoothMinProfile f = SmoothMinProfile::standard();
  const int n = a.dim();
  auto value = [a, b, delta](const Vec& x) { return mollified_min(a(x), b(x), delta); };
  auto grad = [a, b, delta](const Vec& x) {
    const double va = a(x), vb = b(x);
    if (va == kInf) return b.gradient(x);
    if (vb == kInf) return a.gradient(x);
    const double s = (va - vb) / delta;
    if (s <= -1.0) return a.gradient(x);
    if (s >= 1.0) return b.gradient(x);
    const Vec ga = a.gradient(x), gb = b.gradient(x);
    return Vec(f.d1(s) * (ga - gb) + gb);
  };
  auto hess = [a, b, delta](const Vec& x) {
    const double va = a(x), vb = b(x);
    if (va == kInf) return b.hessian(x);
    if (vb == kInf) return a.hessian(x);
    const double s = (va - vb) / delta;
    if (s <= -1.0) return a.hessian(x);
    if (s >= 1.0) return b.hessian(x);
    const Vec dg = a.gradient(x) - b.gradient(x);
    const Mat hb = b.hessian(x);
    return Mat(f.d2(s) / delta * dg * dg.transpose() + f.d1(s) * (a.hessian(x) - hb) + hb);
  };
  return ScalarField(n, value, grad, hess, std::min(a.fd_step(), b.fd_step()));
}

double height_cutoff(double u, double big_r) {
  return mollified_max(mollified_min(u, big_r, 0.5), -big_r, 0.5);
}

std::function<double(const Vec&)> mollified_min_max_height(std::function<double(const Vec&)> u0, double big_r) {
  if (!(big_r > 0.5)) throw Error(ErrorCode::kParameter, "height cutoff R must exceed 1/2");
  return [u0 = std::move(u0), big_r](const Vec& x) { return height_cutoff(u0(x), big_r); };
}

// ---------------------------------------------------------------------------
// Sampling helpers

namespace {

// Newton projection onto the zero level of a generic level function.
std::optional<Vec> project_level(const ScalarField& phi, Vec y, double tol = 1e-11) {
  for (int it = 0; it < 40; ++it) {
    const double v = phi(y);
    if (!std::isfinite(v)) return std::nullopt;
    if (std::abs(v) < tol) return y;
    const Vec g = phi.gradient(y);
    const double gn2 = g.squaredNorm();
    if (!(gn2 > 1e-20)) return std::nullopt;
    Vec step = v * g / gn2;
    const double len = step.norm();
    if (len > 0.1) step *= 0.1 / len;
    y -= step;
  }
  return std::nullopt;
}

std::vector<Vec> boundary_points(const ScalarField& d, const Vec& lo, const Vec& hi, double band, std::size_t count,
                                 std::uint64_t seed) {
  std::vector<Vec> pts;
  sample_stream<Vec>(
      400 * static_cast<std::uint64_t>(count) + 20000,
      [&](std::uint64_t i) -> std::optional<Vec> {
        const Vec x = random_point_in_box(lo, hi, seed, i);
        if (!(std::abs(d(x)) < band)) return std::nullopt;
        try {
          const Vec p = closest_point(d, x);
          if (((p - lo).array() < 0.0).any() || ((hi - p).array() < 0.0).any()) return std::nullopt;
          return p;
        } catch (const Error&) {
          return std::nullopt;
        }
      },
      [&](const Vec& p) {
        pts.push_back(p);
        return pts.size() >= count;
      });
  return pts;
}

// Gauss-Newton projection onto {d_A = 0} ∩ {d_B = 0}.
std::vector<Vec> corner_points(const ScalarField& da, const ScalarField& db, const Vec& lo, const Vec& hi,
                               double band, std::size_t count, std::uint64_t seed) {
  std::vector<Vec> pts;
  const int n = static_cast<int>(lo.size());
  sample_stream<Vec>(
      400 * static_cast<std::uint64_t>(count) + 20000,
      [&](std::uint64_t i) -> std::optional<Vec> {
        Vec x = random_point_in_box(lo, hi, seed, i);
        if (!(std::abs(da(x)) < band && std::abs(db(x)) < band)) return std::nullopt;
        for (int it = 0; it < 60; ++it) {
          Eigen::Vector2d r(da(x), db(x));
          if (!r.allFinite()) return std::nullopt;
          if (r.norm() < 1e-11) return x;
          Mat j(2, n);
          j.row(0) = da.gradient(x).transpose();
          j.row(1) = db.gradient(x).transpose();
          const Vec step = j.completeOrthogonalDecomposition().solve(Vec(r));
          x -= step;
        }
        return std::nullopt;
      },
      [&](const Vec& p) {
        pts.push_back(p);
        return pts.size() >= count;
      });
  return pts;
}

}  // namespace

double distance_to_samples(const std::vector<Vec>& samples, const Vec& x) {
  double best = kInf;
  for (const auto& p : samples) best = std::min(best, (p - x).squaredNorm());
  return std::sqrt(best);
}

// ---------------------------------------------------------------------------
// Delta selection

DeltaSelection select_delta(const ScalarField& a, const ScalarField& b, double delta_upper, const SamplingGrid& grid,
                            double tau, int j_max) {
  if (!(delta_upper > 0.0)) throw Error(ErrorCode::kParameter, "select_delta: delta_upper must be positive");
  const int n = a.dim();
  if (grid.lo.size() != n || grid.hi.size() != n || grid.resolution < 2)
    throw Error(ErrorCode::kParameter, "select_delta: bad sampling grid");
  const std::size_t res = static_cast<std::size_t>(grid.resolution);
  std::size_t total = 1;
  for (int k = 0; k < n; ++k) total *= res;
  const Vec h = (grid.hi - grid.lo) / static_cast<double>(res - 1);
  auto node = [&](std::size_t flat) {
    Vec x(n);
    for (int k = n - 1; k >= 0; --k) {
      x[k] = grid.lo[k] + h[k] * static_cast<double>(flat % res);
      flat /= res;
    }
    return x;
  };
  std::vector<std::size_t> stride(n, 1);
  for (int k = n - 2; k >= 0; --k) stride[k] = stride[k + 1] * res;

  DeltaSelection out;
  for (int j = 0; j <= j_max; ++j) {
    const double delta = std::ldexp(delta_upper, -j);
    const ScalarField phi = mollified_min(a, b, delta);
    std::vector<double> values(total);
    parallel_for(total, [&](std::size_t i) { values[i] = phi(node(i)); });
    std::vector<std::pair<double, double>> grads(total, {kInf, -kInf});
    std::vector<std::size_t> hits(total, 0);
    parallel_for(total, [&](std::size_t i) {
      std::size_t rest = i;
      for (int k = n - 1; k >= 0; --k) {
        const std::size_t idx = rest % res;
        rest /= res;
        if (idx + 1 >= res) continue;
        const double v0 = values[i], v1 = values[i + stride[k]];
        if (!std::isfinite(v0) || !std::isfinite(v1) || (v0 > 0.0) == (v1 > 0.0)) continue;
        Vec x = node(i);
        x[k] += h[k] * v0 / (v0 - v1);
        const Vec p = project_level(phi, x).value_or(x);
        const double gn = phi.gradient(p).norm();
        grads[i].first = std::min(grads[i].first, gn);
        grads[i].second = std::max(grads[i].second, gn);
        ++hits[i];
      }
    });
    double gmin = kInf, gmax = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < total; ++i) {
      if (!hits[i]) continue;
      count += hits[i];
      gmin = std::min(gmin, grads[i].first);
      gmax = std::max(gmax, grads[i].second);
    }
    std::ostringstream why;
    why << "delta=" << delta << ": ";
    if (count == 0) {
      why << "empty zero level";
      out.rejected.push_back(why.str());
      continue;
    }
    if (!(gmin > tau * gmax)) {
      why << "min|DPhi|=" << gmin << " <= tau*max|DPhi|=" << tau * gmax;
      out.rejected.push_back(why.str());
      continue;
    }
    out.delta = delta;
    out.halvings = j;
    out.min_gradient = gmin;
    out.max_gradient = gmax;
    out.zero_samples = count;
    return out;
  }
  std::ostringstream os;
  os << "degenerate level set: no delta in {" << delta_upper << " * 2^-j, j <= " << j_max
     << "} has a nondegenerate zero level";
  if (!out.rejected.empty()) os << " (last: " << out.rejected.back() << ")";
  throw Error(ErrorCode::kGeometry, os.str());
}

// ---------------------------------------------------------------------------
// Smoothed intersection

namespace {

void check_boundary_cone(const DomainSpec& spec, const ScalarField& d, const Vec& lo, const Vec& hi,
                         const CurvatureCone& cone, std::size_t count, std::uint64_t seed, const char* label) {
  if (std::holds_alternative<Whole>(spec.shape)) return;
  Vec blo = lo, bhi = hi;
  if (spec.bounded()) std::tie(blo, bhi) = bounding_box(spec);
  blo.array() -= 0.05;
  bhi.array() += 0.05;
  const auto pts = boundary_points(d, blo, bhi, 0.5 * spec.collar, count, seed);
  for (const auto& p : pts) {
    const Vec kappa = principal_curvatures(d, p);
    if (!cone.contains(kappa)) {
      std::ostringstream os;
      os << "precondition: boundary of " << label << " (" << spec.describe() << ") has curvature outside cone "
         << cone.name() << " at (" << p.transpose() << "), kappa = (" << kappa.transpose() << ")";
      throw Error(ErrorCode::kGeometry, os.str());
    }
  }
}

}  // namespace

DomainSpec SmoothedIntersection::as_domain() const {
  Implicit imp;
  imp.level = phi;
  imp.box_lo = box_lo;
  imp.box_hi = box_hi;
  if (!curvature.curvatures.empty()) {
    double kmax = -kInf;
    for (const auto& k : curvature.curvatures) kmax = std::max(kmax, k.maxCoeff());
    imp.max_curvature = kmax;
  }
  imp.label = "smoothed(" + domain_a.describe() + "&" + domain_b.describe() + ")";
  return DomainSpec{imp, 0.5 * delta};
}

SmoothedIntersection smooth_intersection(const DomainSpec& a, const DomainSpec& b, double eps,
                                         const CurvatureCone& cone, const SmoothingOptions& options) {
  const int n = a.dim();
  if (b.dim() != n) throw Error(ErrorCode::kParameter, "smooth_intersection: dimension mismatch");
  if (n < 2 || n > 3) throw Error(ErrorCode::kParameter, "smooth_intersection: dimension must be 2 or 3");
  if (!(eps > 0.0)) throw Error(ErrorCode::kParameter, "smooth_intersection: eps must be positive");

  auto [lo_a, hi_a] = bounding_box(a);
  auto [lo_b, hi_b] = bounding_box(b);
  Vec lo = lo_a.cwiseMax(lo_b);
  Vec hi = hi_a.cwiseMin(hi_b);
  if (!lo.allFinite() || !hi.allFinite()) throw Error(ErrorCode::kGeometry, "smooth_intersection: A ∩ B is unbounded");
  if (((hi - lo).array() <= 0.0).any()) throw Error(ErrorCode::kGeometry, "smooth_intersection: A ∩ B is empty");
  const double pad = 0.05 * (hi - lo).maxCoeff();
  lo.array() -= pad;
  hi.array() += pad;

  SmoothedIntersection out;
  out.domain_a = a;
  out.domain_b = b;
  out.eps = eps;
  out.box_lo = lo;
  out.box_hi = hi;

  const ScalarField da = signed_distance(a);
  const ScalarField db = signed_distance(b);
  check_boundary_cone(a, da, lo, hi, cone, options.boundary_samples, mix_seed(options.seed, 11), "A");
  check_boundary_cone(b, db, lo, hi, cone, options.boundary_samples, mix_seed(options.seed, 12), "B");

  // Shrink the working width until both reference neighbourhoods cover it.
  double w = std::min({eps, a.collar, b.collar});
  const double c_eps = 0.22;
  for (int attempt = 0;; ++attempt) {
    if (attempt > 60 || w < 1e-6)
      throw Error(ErrorCode::kGeometry, "smooth_intersection: no reference neighbourhood of positive width");
    const BoundaryAlteration g = build_g(c_eps / w, w);
    out.a = altered_distance(a, g);
    out.b = altered_distance(b, g);
    if (std::min(out.a.reference_width, out.b.reference_width) >= w) break;
    w *= 0.85;
  }
  out.eps_effective = w;

  const double band = 0.9 * std::min(a.collar, b.collar);
  if (!std::holds_alternative<Whole>(a.shape) && !std::holds_alternative<Whole>(b.shape))
    out.corner = corner_points(da, db, lo, hi, band, options.corner_samples, mix_seed(options.seed, 13));

  // Sampled inf of max{a, b} over A ∩ B away from the corner set, using interior
  // samples plus boundary samples of each operand.
  double delta1 = kInf;
  auto consider = [&](const Vec& x) {
    const double va = out.a.field(x), vb = out.b.field(x);
    if (!(va >= 0.0 && vb >= 0.0)) return;
    if (distance_to_samples(out.corner, x) < w) return;
    delta1 = std::min(delta1, std::max(va, vb));
  };
  const std::size_t interior = n == 2 ? 20000 : 40000;
  std::vector<Vec> cloud(interior);
  parallel_for(interior, [&](std::size_t i) { cloud[i] = random_point_in_box(lo, hi, mix_seed(options.seed, 14), i); });
  for (const auto& x : cloud) consider(x);
  for (const auto* spec : {&a, &b}) {
    if (std::holds_alternative<Whole>(spec->shape)) continue;
    const ScalarField& d = spec == &a ? da : db;
    for (const auto& p : boundary_points(d, lo, hi, 0.5 * spec->collar, 1000, mix_seed(options.seed, 15))) consider(p);
  }
  if (!std::isfinite(delta1)) delta1 = 1.0;

  const double delta_upper = std::min({0.25 * delta1, 0.5 * w, 0.5});
  const int res = options.grid_resolution > 0 ? options.grid_resolution : (n == 2 ? 160 : 40);
  out.selection = select_delta(out.a.field, out.b.field, delta_upper, SamplingGrid{lo, hi, res}, options.tau);
  out.delta = out.selection.delta;
  out.phi = mollified_min(out.a.field, out.b.field, out.delta);

  if (options.validate) {
    out.inclusions = validate_inclusions(out, eps, options.inclusion_samples, mix_seed(options.seed, 21));
    out.curvature = validate_curvature(out, cone, options.curvature_samples, mix_seed(options.seed, 22));
    out.validated = true;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Validation

InclusionReport validate_inclusions(const SmoothedIntersection& r, double eps, std::size_t n_samples,
                                    std::uint64_t seed) {
  InclusionReport rep;
  rep.delta = r.delta;
  rep.delta1 = kInf;
  const std::uint64_t cap = 400 * static_cast<std::uint64_t>(n_samples) + 10000;

  struct Inner {
    Vec x;
    bool inside;
  };
  sample_stream<Inner>(
      cap,
      [&](std::uint64_t i) -> std::optional<Inner> {
        const Vec x = random_point_in_box(r.box_lo, r.box_hi, mix_seed(seed, 1), i);
        if (!(r.phi(x) > 0.0)) return std::nullopt;
        return Inner{x, r.a.distance(x) > 0.0 && r.b.distance(x) > 0.0};
      },
      [&](const Inner& s) {
        ++rep.inner_samples;
        if (!s.inside) {
          ++rep.inner_violations;
          if (rep.violation_points.size() < 16) rep.violation_points.push_back(s.x);
        }
        return rep.inner_samples >= n_samples;
      });

  struct Trimmed {
    Vec x;
    double phi;
    double max_ab;
  };
  sample_stream<Trimmed>(
      cap,
      [&](std::uint64_t i) -> std::optional<Trimmed> {
        const Vec x = random_point_in_box(r.box_lo, r.box_hi, mix_seed(seed, 2), i);
        if (!(r.a.distance(x) > 0.0 && r.b.distance(x) > 0.0)) return std::nullopt;
        if (distance_to_samples(r.corner, x) < eps) return std::nullopt;
        return Trimmed{x, r.phi(x), std::max(r.a.field(x), r.b.field(x))};
      },
      [&](const Trimmed& s) {
        ++rep.trimmed_samples;
        rep.delta1 = std::min(rep.delta1, s.max_ab);
        if (!(s.phi > 0.0)) {
          ++rep.trimmed_violations;
          if (rep.violation_points.size() < 16) rep.violation_points.push_back(s.x);
        }
        return rep.trimmed_samples >= n_samples;
      });
  rep.delta_ok = rep.trimmed_samples == 0 || rep.delta <= 0.5 * rep.delta1;
  return rep;
}

CurvatureReport validate_curvature(const SmoothedIntersection& r, const CurvatureCone& cone, std::size_t n_samples,
                                   std::uint64_t seed) {
  CurvatureReport rep;
  rep.cone = cone.name();
  rep.min_margin = kInf;
  const double band = 0.05 * (r.box_hi - r.box_lo).maxCoeff();

  struct Sample {
    Vec p;
    Vec kappa;
    double margin;
    int regime;  // -1: A active, 1: B active, 0: blended
    double deviation;
  };
  sample_stream<Sample>(
      400 * static_cast<std::uint64_t>(n_samples) + 10000,
      [&](std::uint64_t i) -> std::optional<Sample> {
        const Vec x = random_point_in_box(r.box_lo, r.box_hi, seed, i);
        if (!(std::abs(r.phi(x)) < band)) return std::nullopt;
        const auto p = project_level(r.phi, x, 1e-12);
        if (!p) return std::nullopt;
        if (((*p - r.box_lo).array() < 0.0).any() || ((r.box_hi - *p).array() < 0.0).any()) return std::nullopt;
        Sample s;
        s.p = *p;
        try {
          s.kappa = principal_curvatures(r.phi.gradient(s.p), r.phi.hessian(s.p));
        } catch (const Error&) {
          return std::nullopt;
        }
        s.margin = cone.margin(s.kappa);
        const double diff = (r.a.field(s.p) - r.b.field(s.p)) / r.delta;
        s.regime = diff <= -1.0 ? -1 : (diff >= 1.0 ? 1 : 0);
        s.deviation = 0.0;
        if (s.regime != 0) {
          const ScalarField& d = s.regime < 0 ? r.a.distance : r.b.distance;
          s.deviation = (s.kappa - principal_curvatures(d, s.p)).cwiseAbs().maxCoeff();
        }
        return s;
      },
      [&](const Sample& s) {
        ++rep.samples;
        if (!cone.admits(s.margin)) ++rep.failures;
        if (s.margin < rep.min_margin) {
          rep.min_margin = s.margin;
          rep.worst_point = s.p;
        }
        (s.regime < 0 ? rep.single_a : (s.regime > 0 ? rep.single_b : rep.blended))++;
        rep.single_field_deviation = std::max(rep.single_field_deviation, s.deviation);
        rep.points.push_back(s.p);
        rep.curvatures.push_back(s.kappa);
        rep.margins.push_back(s.margin);
        return rep.samples >= n_samples;
      });
  if (rep.samples == 0) rep.failures = 1;
  return rep;
}

// ---------------------------------------------------------------------------
// Reports

namespace {
std::string vec_text(const Vec& v) {
  std::ostringstream os;
  for (int i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}
}  // namespace

std::string InclusionReport::to_text() const {
  std::ostringstream os;
  os << "inclusion_inner_samples: " << inner_samples << "\n"
     << "inclusion_inner_violations: " << inner_violations << "\n"
     << "inclusion_trimmed_samples: " << trimmed_samples << "\n"
     << "inclusion_trimmed_violations: " << trimmed_violations << "\n"
     << "delta: " << delta << "\n"
     << "delta1_sampled: " << delta1 << "\n"
     << "delta_ok: " << (delta_ok ? "true" : "false") << "\n";
  for (const auto& p : violation_points) os << "inclusion_violation_at: " << vec_text(p) << "\n";
  os << "inclusions: " << (passed() ? "PASS" : "FAIL") << "\n";
  return os.str();
}

std::string CurvatureReport::to_text() const {
  std::ostringstream os;
  os << "cone: " << cone << "\n"
     << "curvature_samples: " << samples << "\n"
     << "curvature_failures: " << failures << "\n"
     << "min_cone_margin: " << min_margin << "\n";
  if (worst_point.size()) os << "worst_point: " << vec_text(worst_point) << "\n";
  os << "regime_a_only: " << single_a << "\n"
     << "regime_b_only: " << single_b << "\n"
     << "regime_blended: " << blended << "\n"
     << "single_boundary_curvature_deviation: " << single_field_deviation << "\n"
     << "curvature: " << (passed() ? "PASS" : "FAIL") << "\n";
  return os.str();
}

}  // namespace gmcf
