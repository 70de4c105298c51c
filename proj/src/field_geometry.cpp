#include "gmcf/field_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <queue>
#include <random>
#include <sstream>

namespace gmcf {

// ---------------------------------------------------------------------------
// ScalarField

ScalarField::ScalarField(int dim, ValueFn value, GradFn grad, HessFn hess, double fd_step)
    : dim_(dim), value_(std::move(value)), grad_(std::move(grad)), hess_(std::move(hess)), fd_step_(fd_step) {}

Vec ScalarField::fd_gradient(const Vec& x, double step) const {
  Vec g(dim_);
  Vec y = x;
  for (int k = 0; k < dim_; ++k) {
    y[k] = x[k] + step;
    const double fp = value_(y);
    y[k] = x[k] - step;
    const double fm = value_(y);
    y[k] = x[k];
    g[k] = (fp - fm) / (2.0 * step);
  }
  return g;
}

Mat ScalarField::fd_hessian(const Vec& x, double step) const {
  Mat h(dim_, dim_);
  Vec y = x;
  if (grad_) {
    for (int k = 0; k < dim_; ++k) {
      y[k] = x[k] + step;
      const Vec gp = grad_(y);
      y[k] = x[k] - step;
      const Vec gm = grad_(y);
      y[k] = x[k];
      h.col(k) = (gp - gm) / (2.0 * step);
    }
  } else {
    const double f0 = value_(x);
    for (int k = 0; k < dim_; ++k) {
      y[k] = x[k] + step;
      const double fp = value_(y);
      y[k] = x[k] - step;
      const double fm = value_(y);
      y[k] = x[k];
      h(k, k) = (fp - 2.0 * f0 + fm) / (step * step);
      for (int l = 0; l < k; ++l) {
        double acc = 0.0;
        for (int sk : {1, -1}) {
          for (int sl : {1, -1}) {
            y[k] = x[k] + sk * step;
            y[l] = x[l] + sl * step;
            acc += sk * sl * value_(y);
          }
        }
        y[k] = x[k];
        y[l] = x[l];
        h(k, l) = h(l, k) = acc / (4.0 * step * step);
      }
    }
  }
  return 0.5 * (h + h.transpose());
}

Vec ScalarField::gradient(const Vec& x) const { return grad_ ? grad_(x) : fd_gradient(x, fd_step_); }

Mat ScalarField::hessian(const Vec& x) const {
  if (hess_) {
    const Mat h = hess_(x);
    return 0.5 * (h + h.transpose());
  }
  return fd_hessian(x, fd_step_);
}

// ---------------------------------------------------------------------------
// Perturbed ball profile

double PerturbedBall::boundary_radius(double theta) const {
  return radius * (1.0 + amplitude * std::cos(frequency * theta));
}
double PerturbedBall::boundary_radius_d1(double theta) const {
  return -radius * amplitude * frequency * std::sin(frequency * theta);
}
double PerturbedBall::boundary_radius_d2(double theta) const {
  return -radius * amplitude * frequency * frequency * std::cos(frequency * theta);
}

namespace {

// Generating curve gamma(theta) = R(theta) * e(theta) in a plane. For 2D domains
// e = (cos, sin) over the full circle; for 3D solids of revolution the plane is
// (s, z) with s the distance from the axis and e = (sin, cos) over [0, pi].
struct ProfileCurve {
  const PerturbedBall* pb;
  bool revolved;

  Eigen::Vector2d e(double t) const {
    return revolved ? Eigen::Vector2d(std::sin(t), std::cos(t)) : Eigen::Vector2d(std::cos(t), std::sin(t));
  }
  Eigen::Vector2d e1(double t) const {
    return revolved ? Eigen::Vector2d(std::cos(t), -std::sin(t)) : Eigen::Vector2d(-std::sin(t), std::cos(t));
  }
  Eigen::Vector2d point(double t) const { return pb->boundary_radius(t) * e(t); }
  Eigen::Vector2d d1(double t) const { return pb->boundary_radius_d1(t) * e(t) + pb->boundary_radius(t) * e1(t); }
  Eigen::Vector2d d2(double t) const {
    return pb->boundary_radius_d2(t) * e(t) + 2.0 * pb->boundary_radius_d1(t) * e1(t) - pb->boundary_radius(t) * e(t);
  }
  double lo() const { return 0.0; }
  double hi() const { return revolved ? std::numbers::pi : 2.0 * std::numbers::pi; }

  Eigen::Vector2d outward_normal(double t) const {
    const Eigen::Vector2d tan = d1(t);
    Eigen::Vector2d n(tan[1], -tan[0]);
    if (n.dot(point(t)) < 0.0) n = -n;
    return n.normalized();
  }

  double angle_of(const Eigen::Vector2d& q) const {
    if (revolved) return std::atan2(q[0], q[1]);
    double a = std::atan2(q[1], q[0]);
    if (a < 0.0) a += 2.0 * std::numbers::pi;
    return a;
  }

  // Parameter of the closest curve point to q.
  double closest_parameter(const Eigen::Vector2d& q) const {
    const int samples = revolved ? 256 : 512;
    const double span = hi() - lo();
    const double step = span / (revolved ? samples - 1 : samples);
    std::vector<double> dist2(samples);
    for (int i = 0; i < samples; ++i) dist2[i] = (point(lo() + i * step) - q).squaredNorm();

    // Candidate local minima of the sampled distance (periodic in 2D).
    std::vector<int> candidates;
    for (int i = 0; i < samples; ++i) {
      const int prev = revolved ? std::max(i - 1, 0) : (i + samples - 1) % samples;
      const int next = revolved ? std::min(i + 1, samples - 1) : (i + 1) % samples;
      if (dist2[i] <= dist2[prev] && dist2[i] <= dist2[next]) candidates.push_back(i);
    }
    std::sort(candidates.begin(), candidates.end(), [&](int a, int b) { return dist2[a] < dist2[b]; });
    if (candidates.size() > 3) candidates.resize(3);

    double best_t = lo();
    double best_d2 = std::numeric_limits<double>::infinity();
    for (int c : candidates) {
      double t = lo() + c * step;
      double a = t - step;
      double b = t + step;
      if (revolved) {
        a = std::max(a, lo());
        b = std::min(b, hi());
      }
      for (int it = 0; it < 60; ++it) {
        const Eigen::Vector2d r = point(t) - q;
        const Eigen::Vector2d g1 = d1(t);
        const double fp = r.dot(g1);
        const double fpp = g1.squaredNorm() + r.dot(d2(t));
        double next = (fpp > 0.0) ? t - fp / fpp : 0.5 * (a + b);
        if (!(next > a && next < b)) {
          // Golden-section style fallback: step towards the lower side.
          const double ta = t - 0.5 * (t - a);
          const double tb = t + 0.5 * (b - t);
          next = ((point(ta) - q).squaredNorm() < (point(tb) - q).squaredNorm()) ? ta : tb;
        }
        if (std::abs(next - t) < 1e-15 * std::max(1.0, std::abs(t))) {
          t = next;
          break;
        }
        if ((point(next) - q).squaredNorm() <= (point(t) - q).squaredNorm()) {
          (next > t ? a : b) = t;
        } else {
          (next > t ? b : a) = next;
        }
        t = next;
      }
      const double d2v = (point(t) - q).squaredNorm();
      if (d2v < best_d2) {
        best_d2 = d2v;
        best_t = t;
      }
    }
    return best_t;
  }

  // Signed curvature of the profile curve (positive for a convex outline).
  double curvature(double t) const {
    const double r = pb->boundary_radius(t);
    const double r1 = pb->boundary_radius_d1(t);
    const double r2 = pb->boundary_radius_d2(t);
    return (r * r + 2.0 * r1 * r1 - r * r2) / std::pow(r * r + r1 * r1, 1.5);
  }
};

struct PlanarFrame {
  Eigen::Vector2d q;
  Eigen::Vector2d radial;  // unit vector from the axis in the xy-plane (3D only)
};

PlanarFrame to_profile_plane(const Vec& y) {
  PlanarFrame f;
  if (y.size() == 2) {
    f.q = Eigen::Vector2d(y[0], y[1]);
    f.radial = Eigen::Vector2d(1.0, 0.0);
  } else {
    const double s = std::hypot(y[0], y[1]);
    f.q = Eigen::Vector2d(s, y[2]);
    f.radial = (s > 0.0) ? Eigen::Vector2d(y[0] / s, y[1] / s) : Eigen::Vector2d(1.0, 0.0);
  }
  return f;
}

ScalarField perturbed_ball_sdf(const PerturbedBall& pb, int dim, double fd_step) {
  const ProfileCurve curve{&pb, dim == 3};
  auto eval = [pb, curve, dim](const Vec& x, Vec* grad) {
    const Vec y = x - pb.center;
    const PlanarFrame f = to_profile_plane(y);
    const double t = curve.closest_parameter(f.q);
    const double dist = (curve.point(t) - f.q).norm();
    const bool inside = f.q.norm() < pb.boundary_radius(curve.angle_of(f.q));
    if (grad) {
      const Eigen::Vector2d n = curve.outward_normal(t);
      grad->resize(dim);
      if (dim == 2) {
        (*grad)[0] = -n[0];
        (*grad)[1] = -n[1];
      } else {
        (*grad)[0] = -n[0] * f.radial[0];
        (*grad)[1] = -n[0] * f.radial[1];
        (*grad)[2] = -n[1];
      }
    }
    return inside ? dist : -dist;
  };
  return ScalarField(
      dim, [eval](const Vec& x) { return eval(x, nullptr); },
      [eval](const Vec& x) {
        Vec g;
        eval(x, &g);
        return g;
      },
      {}, fd_step);
}

// Closest point on an ellipsoid boundary via the Lagrange parameter t:
// p_i = a_i^2 y_i / (a_i^2 + t), sum (a_i y_i / (a_i^2 + t))^2 = 1.
Vec ellipsoid_closest(const Vec& axes, const Vec& y) {
  const int n = static_cast<int>(y.size());
  auto F = [&](double t) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      const double q = axes[i] * y[i] / (axes[i] * axes[i] + t);
      s += q * q;
    }
    return s - 1.0;
  };
  double amin2 = std::numeric_limits<double>::infinity();
  double amax = 0.0;
  for (int i = 0; i < n; ++i) {
    amin2 = std::min(amin2, axes[i] * axes[i]);
    amax = std::max(amax, axes[i]);
  }
  double lo = -amin2;
  double hi = amax * y.norm() + 1e-300;
  if (F(0.0) == 0.0) return y;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (F(mid) > 0.0 ? lo : hi) = mid;
  }
  double t = 0.5 * (lo + hi);
  if (t <= -amin2) t = std::nextafter(-amin2, 0.0);
  Vec p(n);
  for (int i = 0; i < n; ++i) p[i] = axes[i] * axes[i] * y[i] / (axes[i] * axes[i] + t);
  return p;
}

}  // namespace

// ---------------------------------------------------------------------------
// DomainSpec helpers

int DomainSpec::dim() const {
  return std::visit(
      [](const auto& s) -> int {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Ball>) return static_cast<int>(s.center.size());
        if constexpr (std::is_same_v<T, HalfSpace>) return static_cast<int>(s.normal.size());
        if constexpr (std::is_same_v<T, Ellipsoid>) return static_cast<int>(s.center.size());
        if constexpr (std::is_same_v<T, PerturbedBall>) return static_cast<int>(s.center.size());
        if constexpr (std::is_same_v<T, GridSampled>) return s.level.dim;
        if constexpr (std::is_same_v<T, Implicit>) return s.level.dim();
        if constexpr (std::is_same_v<T, Whole>) return s.dim;
      },
      shape);
}

bool DomainSpec::bounded() const {
  return !std::holds_alternative<HalfSpace>(shape) && !std::holds_alternative<Whole>(shape);
}

std::string DomainSpec::describe() const {
  std::ostringstream os;
  auto vec = [&os](const Vec& v) {
    for (int i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  };
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Ball>) {
          os << "ball:";
          vec(s.center);
          os << ":" << s.radius;
        } else if constexpr (std::is_same_v<T, HalfSpace>) {
          os << "halfspace:";
          vec(s.normal);
          os << ":" << s.offset;
        } else if constexpr (std::is_same_v<T, Ellipsoid>) {
          os << "ellipsoid:";
          vec(s.center);
          os << ":";
          vec(s.semi_axes);
        } else if constexpr (std::is_same_v<T, PerturbedBall>) {
          os << "perturbed:" << s.center.size() << ":" << s.radius << ":" << s.amplitude << ":" << s.frequency;
        } else if constexpr (std::is_same_v<T, GridSampled>) {
          os << "grid:" << s.level.dim;
        } else if constexpr (std::is_same_v<T, Implicit>) {
          os << s.label;
        } else {
          os << "whole:" << s.dim;
        }
      },
      shape);
  return os.str();
}

DomainSpec make_ball(Vec center, double radius, double collar) {
  return DomainSpec{Ball{std::move(center), radius}, collar};
}
DomainSpec make_half_space(Vec normal, double offset, double collar) {
  return DomainSpec{HalfSpace{std::move(normal), offset}, collar};
}
DomainSpec make_ellipsoid(Vec center, Vec semi_axes, double collar) {
  return DomainSpec{Ellipsoid{std::move(center), std::move(semi_axes)}, collar};
}
DomainSpec make_perturbed_ball(int dim, double radius, double amplitude, int frequency, double collar) {
  return DomainSpec{PerturbedBall{Vec::Zero(dim), radius, amplitude, frequency}, collar};
}

std::pair<Vec, Vec> bounding_box(const DomainSpec& spec) {
  const int n = spec.dim();
  const double inf = std::numeric_limits<double>::infinity();
  return std::visit(
      [&](const auto& s) -> std::pair<Vec, Vec> {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Ball>) {
          return {s.center.array() - s.radius, s.center.array() + s.radius};
        } else if constexpr (std::is_same_v<T, Ellipsoid>) {
          return {s.center - s.semi_axes, s.center + s.semi_axes};
        } else if constexpr (std::is_same_v<T, PerturbedBall>) {
          const double r = s.radius * (1.0 + std::abs(s.amplitude));
          return {s.center.array() - r, s.center.array() + r};
        } else if constexpr (std::is_same_v<T, GridSampled>) {
          return {s.level.origin, s.level.upper()};
        } else if constexpr (std::is_same_v<T, Implicit>) {
          return {s.box_lo, s.box_hi};
        } else {
          return {Vec::Constant(n, -inf), Vec::Constant(n, inf)};
        }
      },
      spec.shape);
}

std::optional<double> max_boundary_curvature(const DomainSpec& spec) {
  return std::visit(
      [&](const auto& s) -> std::optional<double> {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Ball>) {
          return 1.0 / s.radius;
        } else if constexpr (std::is_same_v<T, HalfSpace> || std::is_same_v<T, Whole>) {
          return 0.0;
        } else if constexpr (std::is_same_v<T, Ellipsoid>) {
          const double amax = s.semi_axes.maxCoeff();
          const double amin = s.semi_axes.minCoeff();
          return amax / (amin * amin);
        } else if constexpr (std::is_same_v<T, PerturbedBall>) {
          const ProfileCurve curve{&s, s.center.size() == 3};
          double kmax = -std::numeric_limits<double>::infinity();
          const int samples = 8192;
          for (int i = 0; i <= samples; ++i) {
            const double t = curve.lo() + (curve.hi() - curve.lo()) * i / samples;
            kmax = std::max(kmax, curve.curvature(t));
            if (curve.revolved) {
              const Eigen::Vector2d p = curve.point(t);
              const Eigen::Vector2d nrm = curve.outward_normal(t);
              // Parallel-circle curvature n_s / s; tends to the meridian value on the axis.
              if (p[0] > 1e-9) kmax = std::max(kmax, nrm[0] / p[0]);
            }
          }
          return kmax;
        } else if constexpr (std::is_same_v<T, Implicit>) {
          return s.max_curvature;
        } else {
          // Grid-sampled: estimated from sampled boundary points.
          const ScalarField d = signed_distance(spec);
          const auto pts = sample_boundary(d, s.level.origin, s.level.upper(), 2.0 * s.level.spacing, 400, 7);
          double kmax = -std::numeric_limits<double>::infinity();
          for (const auto& p : pts) kmax = std::max(kmax, principal_curvatures(d, p).maxCoeff());
          return kmax;
        }
      },
      spec.shape);
}

ScalarField signed_distance(const DomainSpec& spec) {
  const int n = spec.dim();
  auto [lo, hi] = bounding_box(spec);
  double diameter = 1.0;
  if (spec.bounded()) diameter = (hi - lo).norm();
  const double fd = 1e-4 * diameter;

  return std::visit(
      [&](const auto& s) -> ScalarField {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Ball>) {
          const Vec c = s.center;
          const double r = s.radius;
          return ScalarField(
              n, [c, r](const Vec& x) { return r - (x - c).norm(); },
              [c](const Vec& x) {
                const Vec y = x - c;
                const double rho = y.norm();
                if (rho == 0.0) {
                  Vec g = Vec::Zero(y.size());
                  g[0] = -1.0;
                  return g;
                }
                return Vec(-y / rho);
              },
              [c](const Vec& x) {
                const Vec y = x - c;
                const double rho = std::max(y.norm(), 1e-300);
                const Vec u = y / rho;
                return Mat(-(Mat::Identity(y.size(), y.size()) - u * u.transpose()) / rho);
              },
              fd);
        } else if constexpr (std::is_same_v<T, HalfSpace>) {
          const double len = s.normal.norm();
          const Vec nu = s.normal / len;
          const double off = s.offset / len;
          return ScalarField(
              n, [nu, off](const Vec& x) { return nu.dot(x) - off; }, [nu](const Vec&) { return nu; },
              [n](const Vec&) { return Mat(Mat::Zero(n, n)); }, 1e-4);
        } else if constexpr (std::is_same_v<T, Ellipsoid>) {
          const Vec c = s.center;
          const Vec a = s.semi_axes;
          auto eval = [c, a](const Vec& x, Vec* grad) {
            const Vec y = x - c;
            const Vec p = ellipsoid_closest(a, y);
            double level = 0.0;
            for (int i = 0; i < y.size(); ++i) level += (y[i] / a[i]) * (y[i] / a[i]);
            if (grad) {
              Vec nrm(y.size());
              for (int i = 0; i < y.size(); ++i) nrm[i] = p[i] / (a[i] * a[i]);
              *grad = -nrm.normalized();
            }
            const double dist = (y - p).norm();
            return level < 1.0 ? dist : -dist;
          };
          return ScalarField(
              n, [eval](const Vec& x) { return eval(x, nullptr); },
              [eval](const Vec& x) {
                Vec g;
                eval(x, &g);
                return g;
              },
              {}, fd);
        } else if constexpr (std::is_same_v<T, PerturbedBall>) {
          return perturbed_ball_sdf(s, n, fd);
        } else if constexpr (std::is_same_v<T, GridSampled>) {
          return bspline_field(fast_marching_redistance(s.level));
        } else if constexpr (std::is_same_v<T, Implicit>) {
          return s.level;
        } else {
          const double inf = std::numeric_limits<double>::infinity();
          return ScalarField(
              n, [inf](const Vec&) { return inf; }, [n](const Vec&) { return Vec(Vec::Zero(n)); },
              [n](const Vec&) { return Mat(Mat::Zero(n, n)); });
        }
      },
      spec.shape);
}

// ---------------------------------------------------------------------------
// Fast marching

namespace {

// Solves sum_k max((d - a_k)/h, 0)^2 = 1 for the upwind eikonal update.
double eikonal_update(std::vector<double> a, double h) {
  std::sort(a.begin(), a.end());
  double d = a[0] + h;
  for (std::size_t m = 2; m <= a.size(); ++m) {
    if (d <= a[m - 1]) break;
    double sum = 0.0;
    double sum2 = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      sum += a[k];
      sum2 += a[k] * a[k];
    }
    const double mm = static_cast<double>(m);
    const double disc = sum * sum - mm * (sum2 - h * h);
    if (disc < 0.0) break;
    d = (sum + std::sqrt(disc)) / mm;
  }
  return d;
}

}  // namespace

Grid fast_marching_redistance(const Grid& level) {
  const int n = level.dim;
  const double h = level.spacing;
  const std::size_t total = level.size();
  const double inf = std::numeric_limits<double>::infinity();

  std::vector<double> dist(total, inf);
  std::vector<char> state(total, 0);  // 0 far, 1 trial, 2 frozen

  auto neighbor = [&](const std::vector<std::int64_t>& idx, int axis, int side, std::size_t& out) {
    auto j = idx;
    j[axis] += side;
    if (j[axis] < 0 || j[axis] >= static_cast<std::int64_t>(level.extents[axis])) return false;
    out = level.flat(j);
    return true;
  };

  bool any_crossing = false;
  for (std::size_t i = 0; i < total; ++i) {
    const double phi = level.values[i];
    const auto idx = level.unflatten(i);
    double axis_min = inf;
    Vec g = Vec::Zero(n);
    bool crossing = (phi == 0.0);
    for (int k = 0; k < n; ++k) {
      std::size_t jp, jm;
      const bool hp = neighbor(idx, k, 1, jp);
      const bool hm = neighbor(idx, k, -1, jm);
      for (auto [has, j] : {std::pair{hp, jp}, std::pair{hm, jm}}) {
        if (!has) continue;
        const double pj = level.values[j];
        if ((phi > 0.0) != (pj > 0.0)) {
          crossing = true;
          axis_min = std::min(axis_min, h * phi / (phi - pj));
        }
      }
      if (hp && hm) g[k] = (level.values[jp] - level.values[jm]) / (2.0 * h);
      else if (hp) g[k] = (level.values[jp] - phi) / h;
      else if (hm) g[k] = (phi - level.values[jm]) / h;
    }
    if (!crossing) continue;
    any_crossing = true;
    const double gn = g.norm();
    double d = std::abs(axis_min);
    if (gn > 1e-12) d = std::min(d, std::abs(phi) / gn);
    if (phi == 0.0) d = 0.0;
    dist[i] = d;
    state[i] = 2;
  }
  if (!any_crossing) throw Error(ErrorCode::kGeometry, "empty boundary: level grid has no zero crossing");

  using Entry = std::pair<double, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;

  auto update = [&](std::size_t i) {
    const auto idx = level.unflatten(i);
    std::vector<double> a;
    for (int k = 0; k < n; ++k) {
      double best = inf;
      for (int side : {1, -1}) {
        std::size_t j;
        if (neighbor(idx, k, side, j) && state[j] == 2) best = std::min(best, dist[j]);
      }
      if (best < inf) a.push_back(best);
    }
    if (a.empty()) return;
    const double d = eikonal_update(a, h);
    if (d < dist[i]) {
      dist[i] = d;
      state[i] = 1;
      heap.emplace(d, i);
    }
  };

  for (std::size_t i = 0; i < total; ++i) {
    if (state[i] != 2) continue;
    const auto idx = level.unflatten(i);
    for (int k = 0; k < n; ++k) {
      for (int side : {1, -1}) {
        std::size_t j;
        if (neighbor(idx, k, side, j) && state[j] != 2) update(j);
      }
    }
  }
  while (!heap.empty()) {
    const auto [d, i] = heap.top();
    heap.pop();
    if (state[i] == 2 || d > dist[i]) continue;
    state[i] = 2;
    const auto idx = level.unflatten(i);
    for (int k = 0; k < n; ++k) {
      for (int side : {1, -1}) {
        std::size_t j;
        if (neighbor(idx, k, side, j) && state[j] != 2) update(j);
      }
    }
  }

  Grid out = level;
  for (std::size_t i = 0; i < total; ++i) out.values[i] = (level.values[i] > 0.0 ? 1.0 : -1.0) * dist[i];
  return out;
}

// ---------------------------------------------------------------------------
// Cubic B-spline interpolation

namespace {

struct BSplineData {
  int dim;
  std::vector<std::int64_t> ext;  // extents including one ghost layer on each side
  double h;
  Vec origin;
  std::vector<std::int64_t> inner;  // original extents
  std::vector<double> coef;

  std::size_t flat(const std::int64_t* idx) const {
    std::size_t f = 0;
    for (int k = 0; k < dim; ++k) f = f * ext[k] + static_cast<std::size_t>(idx[k]);
    return f;
  }
};

// Solves c_{i-1} + 4 c_i + c_{i+1} = 6 f_i with linear-extrapolation ghosts
// (which pins c_0 = f_0, c_{n-1} = f_{n-1}). Thomas algorithm.
void prefilter_line(std::vector<double>& v) {
  const std::size_t n = v.size();
  if (n < 3) return;
  std::vector<double> cp(n), dp(n);
  // Row 0: c_0 = f_0. Row n-1: c_{n-1} = f_{n-1}.
  cp[0] = 0.0;
  dp[0] = v[0];
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double m = 4.0 - cp[i - 1];
    cp[i] = 1.0 / m;
    dp[i] = (6.0 * v[i] - dp[i - 1]) / m;
  }
  dp[n - 1] = v[n - 1];
  v[n - 1] = dp[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) v[i] = dp[i] - cp[i] * v[i + 1];
}

void basis(double u, double w[4], double d1[4], double d2[4]) {
  const double u2 = u * u;
  const double u3 = u2 * u;
  const double v = 1.0 - u;
  w[0] = v * v * v / 6.0;
  w[1] = (3.0 * u3 - 6.0 * u2 + 4.0) / 6.0;
  w[2] = (-3.0 * u3 + 3.0 * u2 + 3.0 * u + 1.0) / 6.0;
  w[3] = u3 / 6.0;
  d1[0] = -v * v / 2.0;
  d1[1] = (3.0 * u2 - 4.0 * u) / 2.0;
  d1[2] = (-3.0 * u2 + 2.0 * u + 1.0) / 2.0;
  d1[3] = u2 / 2.0;
  d2[0] = v;
  d2[1] = 3.0 * u - 2.0;
  d2[2] = -3.0 * u + 1.0;
  d2[3] = u;
}

// Evaluates value, gradient and Hessian of the spline.
void bspline_eval(const BSplineData& s, const Vec& x, double* value, Vec* grad, Mat* hess) {
  const int n = s.dim;
  std::int64_t cell[3];
  double w[3][4], d1[3][4], d2[3][4];
  for (int k = 0; k < n; ++k) {
    const double p = (x[k] - s.origin[k]) / s.h;
    std::int64_t c = static_cast<std::int64_t>(std::floor(p));
    c = std::clamp<std::int64_t>(c, 0, std::max<std::int64_t>(s.inner[k] - 2, 0));
    cell[k] = c;
    basis(p - static_cast<double>(c), w[k], d1[k], d2[k]);
  }
  double val = 0.0;
  Vec g = Vec::Zero(n);
  Mat hm = Mat::Zero(n, n);
  const int combos = 1 << (2 * n);
  for (int m = 0; m < combos; ++m) {
    std::int64_t idx[3];
    int o[3];
    for (int k = 0; k < n; ++k) {
      o[k] = (m >> (2 * k)) & 3;
      idx[k] = cell[k] + o[k];  // ghost shift (+1) and stencil offset (-1) cancel
    }
    const double c = s.coef[s.flat(idx)];
    double prod = 1.0;
    for (int k = 0; k < n; ++k) prod *= w[k][o[k]];
    val += c * prod;
    if (grad || hess) {
      for (int a = 0; a < n; ++a) {
        double pa = c;
        for (int k = 0; k < n; ++k) pa *= (k == a ? d1[k][o[k]] : w[k][o[k]]);
        g[a] += pa;
        if (!hess) continue;
        for (int b = 0; b <= a; ++b) {
          double pb = c;
          for (int k = 0; k < n; ++k) {
            if (a == b) pb *= (k == a ? d2[k][o[k]] : w[k][o[k]]);
            else pb *= ((k == a || k == b) ? d1[k][o[k]] : w[k][o[k]]);
          }
          hm(a, b) += pb;
        }
      }
    }
  }
  if (value) *value = val;
  if (grad) *grad = g / s.h;
  if (hess) {
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < a; ++b) hm(b, a) = hm(a, b);
    *hess = hm / (s.h * s.h);
  }
}

}  // namespace

ScalarField bspline_field(const Grid& grid) {
  auto data = std::make_shared<BSplineData>();
  const int n = grid.dim;
  data->dim = n;
  data->h = grid.spacing;
  data->origin = grid.origin;
  data->ext.resize(n);
  data->inner.resize(n);
  std::size_t total = 1;
  for (int k = 0; k < n; ++k) {
    if (grid.extents[k] < 4) throw Error(ErrorCode::kGeometry, "B-spline interpolation needs >= 4 nodes per axis");
    data->inner[k] = static_cast<std::int64_t>(grid.extents[k]);
    data->ext[k] = data->inner[k] + 2;
    total *= static_cast<std::size_t>(data->ext[k]);
  }
  data->coef.assign(total, 0.0);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto idx = grid.unflatten(i);
    std::int64_t e[3];
    for (int k = 0; k < n; ++k) e[k] = idx[k] + 1;
    data->coef[data->flat(e)] = grid.values[i];
  }
  // Separable prefilter; axes processed in order, earlier axes already carry ghosts.
  for (int axis = 0; axis < n; ++axis) {
    std::vector<std::int64_t> lo(n), hi(n);
    for (int k = 0; k < n; ++k) {
      lo[k] = (k < axis) ? 0 : 1;
      hi[k] = (k < axis) ? data->ext[k] : data->inner[k] + 1;
    }
    lo[axis] = 0;
    hi[axis] = 1;  // iterate lines: the axis index is swept inside
    std::vector<std::int64_t> idx = lo;
    while (true) {
      std::vector<double> line(static_cast<std::size_t>(data->inner[axis]));
      std::int64_t e[3];
      for (int k = 0; k < n; ++k) e[k] = idx[k];
      for (std::int64_t i = 0; i < data->inner[axis]; ++i) {
        e[axis] = i + 1;
        line[static_cast<std::size_t>(i)] = data->coef[data->flat(e)];
      }
      prefilter_line(line);
      for (std::int64_t i = 0; i < data->inner[axis]; ++i) {
        e[axis] = i + 1;
        data->coef[data->flat(e)] = line[static_cast<std::size_t>(i)];
      }
      const std::size_t m = line.size();
      e[axis] = 0;
      data->coef[data->flat(e)] = 2.0 * line[0] - line[1];
      e[axis] = data->inner[axis] + 1;
      data->coef[data->flat(e)] = 2.0 * line[m - 1] - line[m - 2];

      int k = n - 1;
      for (; k >= 0; --k) {
        if (k == axis) continue;
        if (++idx[k] < hi[k]) break;
        idx[k] = lo[k];
      }
      if (k < 0) break;
    }
  }
  return ScalarField(
      n,
      [data](const Vec& x) {
        double v;
        bspline_eval(*data, x, &v, nullptr, nullptr);
        return v;
      },
      [data](const Vec& x) {
        Vec g;
        bspline_eval(*data, x, nullptr, &g, nullptr);
        return g;
      },
      [data](const Vec& x) {
        Mat hm;
        bspline_eval(*data, x, nullptr, nullptr, &hm);
        return hm;
      },
      1e-4 * grid.spacing);
}

// ---------------------------------------------------------------------------
// Projection and curvature

Vec closest_point(const ScalarField& field, const Vec& x, double tol, int max_iter) {
  Vec y = x;
  for (int it = 0; it < max_iter; ++it) {
    const double v = field(y);
    if (!std::isfinite(v)) throw Error(ErrorCode::kGeometry, "no unique projection: field not finite");
    if (std::abs(v) < tol) return y;
    const Vec g = field.gradient(y);
    const double gn2 = g.squaredNorm();
    if (gn2 < 0.25) throw Error(ErrorCode::kGeometry, "no unique projection: |grad| < 0.5 (outside collar)");
    y -= v * g / gn2;
  }
  if (std::abs(field(y)) < std::max(tol, 1e-8)) return y;
  throw Error(ErrorCode::kGeometry, "no unique projection: Newton projection did not converge");
}

Vec principal_curvatures(const Vec& g, const Mat& hess) {
  const int n = static_cast<int>(g.size());
  const double gn = g.norm();
  if (!(gn > 1e-12)) throw Error(ErrorCode::kGeometry, "principal curvatures: degenerate gradient");
  const Vec nu = g / gn;
  Mat basis_in = Mat::Identity(n, n);
  basis_in.col(0) = nu;
  Eigen::HouseholderQR<Mat> qr(basis_in);
  const Mat q = qr.householderQ() * Mat::Identity(n, n);
  const Mat tangent = q.rightCols(n - 1);
  const Mat m = -(tangent.transpose() * hess * tangent) / gn;
  Eigen::SelfAdjointEigenSolver<Mat> eig(0.5 * (m + m.transpose()));
  if (eig.info() != Eigen::Success) throw Error(ErrorCode::kGeometry, "principal curvatures: eigensolver failed");
  return eig.eigenvalues();
}

Vec principal_curvatures(const ScalarField& field, const Vec& x) {
  return principal_curvatures(field.gradient(x), field.hessian(x));
}

Vec random_point_in_box(const Vec& lo, const Vec& hi, std::uint64_t seed, std::uint64_t index) {
  std::mt19937_64 rng(mix_seed(seed, index));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vec x(lo.size());
  for (int k = 0; k < lo.size(); ++k) x[k] = lo[k] + (hi[k] - lo[k]) * unit(rng);
  return x;
}

std::vector<Vec> sample_boundary(const ScalarField& field, const Vec& lo, const Vec& hi, double band,
                                 std::size_t count, std::uint64_t seed) {
  std::vector<Vec> out;
  out.reserve(count);
  const std::uint64_t max_attempts = 20000 * static_cast<std::uint64_t>(count) + 100000;
  for (std::uint64_t i = 0; i < max_attempts && out.size() < count; ++i) {
    const Vec x = random_point_in_box(lo, hi, seed, i);
    if (std::abs(field(x)) >= band) continue;
    try {
      out.push_back(closest_point(field, x));
    } catch (const Error&) {
    }
  }
  if (out.size() < count) throw Error(ErrorCode::kGeometry, "sample_boundary: too few boundary samples found");
  return out;
}

}  // namespace gmcf
