#include "gmcf/barrier_oracles.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <sstream>

namespace gmcf {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double gmcf_operator(const Vec& p, const Mat& h) {
  return h.trace() - p.dot(h * p) / (1.0 + p.squaredNorm());
}

double Barrier::residual(const Vec& x, double t) const {
  if (residual_fn) return residual_fn(x, t);
  const Jet j = jet(x, t);
  return j.dt - gmcf_operator(j.grad, j.hess);
}

// ---------------------------------------------------------------------------
// Exact solutions

Barrier grim_reaper(int branch, double shift) {
  const double lo = branch > 0 ? 0.0 : -M_PI;
  const double hi = branch > 0 ? M_PI : 0.0;
  Barrier b;
  b.side = BarrierSide::kExact;
  b.dim = 1;
  b.provenance = "grim_reaper";
  b.t_begin = -kInf;
  b.value = [shift](const Vec& x, double t) { return t - std::log(std::abs(std::sin(x[0]))) + shift; };
  b.jet = [shift](const Vec& x, double t) {
    const double s = std::sin(x[0]), c = std::cos(x[0]);
    Jet j;
    j.value = t - std::log(std::abs(s)) + shift;
    j.grad = Vec::Constant(1, -c / s);
    j.hess = Mat::Constant(1, 1, 1.0 / (s * s));
    j.dt = 1.0;
    return j;
  };
  b.valid = [lo, hi](const Vec& x, double) { return x[0] > lo && x[0] < hi; };
  return b;
}

double sphere_radius(double r0, int n, double t) {
  const double r2 = r0 * r0 - 2.0 * n * t;
  return r2 > 0.0 ? std::sqrt(r2) : 0.0;
}

double sphere_extinction_time(double r0, int n) { return r0 * r0 / (2.0 * n); }

Barrier sphere_graph_barrier(const Vec& center, double r0, int n, BarrierSide side, double height) {
  if (!(r0 > 0.0)) throw Error(ErrorCode::kParameter, "sphere_graph_barrier: r0 must be positive");
  if (center.size() != n) throw Error(ErrorCode::kParameter, "sphere_graph_barrier: center dimension must equal n");
  if (side == BarrierSide::kExact) throw Error(ErrorCode::kParameter, "sphere_graph_barrier: side must be upper or lower");
  // Upper barrier: lower hemisphere of a sphere above the graph.
  const double sgn = side == BarrierSide::kUpper ? -1.0 : 1.0;
  Barrier b;
  b.side = side;
  b.dim = n;
  b.provenance = "sphere";
  b.t_begin = 0.0;
  b.t_end = sphere_extinction_time(r0, n);
  b.value = [=](const Vec& x, double t) {
    const double r = sphere_radius(r0, n, t);
    const double q2 = r * r - (x - center).squaredNorm();
    return height + sgn * std::sqrt(std::max(q2, 0.0));
  };
  b.jet = [=](const Vec& x, double t) {
    const double r = sphere_radius(r0, n, t);
    const Vec y = x - center;
    const double q = std::sqrt(std::max(r * r - y.squaredNorm(), 0.0));
    Jet j;
    j.value = height + sgn * q;
    j.grad = -sgn * y / q;
    j.hess = -sgn * (Mat::Identity(n, n) / q + y * y.transpose() / (q * q * q));
    j.dt = -sgn * n / q;
    return j;
  };
  b.valid = [=](const Vec& x, double t) {
    const double r = sphere_radius(r0, n, t);
    return (x - center).norm() < r;
  };
  return b;
}

// ---------------------------------------------------------------------------
// Localized boundary barriers

double cutoff_eta(const Vec& x, const Vec& x0, double r, Vec* grad, Mat* hess) {
  const int n = static_cast<int>(x.size());
  const Vec y = x - x0;
  const double rho = y.norm();
  const double w = 0.5 * r;
  const double tau = (rho - r) / w;
  if (grad) *grad = Vec::Zero(n);
  if (hess) *hess = Mat::Zero(n, n);
  if (tau <= 0.0) return 0.0;
  if (tau >= 1.0) return 1.0;
  const double s = 10 * std::pow(tau, 3) - 15 * std::pow(tau, 4) + 6 * std::pow(tau, 5);
  const double s1 = 30 * tau * tau * (1 - tau) * (1 - tau);
  const double s2 = 60 * tau * (1 - tau) * (1 - 2 * tau);
  const Vec e = y / rho;
  if (grad) *grad = s1 / w * e;
  if (hess) *hess = s2 / (w * w) * e * e.transpose() + s1 / w * (Mat::Identity(n, n) - e * e.transpose()) / rho;
  return s;
}

BoundaryGradientBarrier boundary_gradient_barrier(const ScalarField& phi, const ScalarField& d, const Vec& x0,
                                                  double r, double sup_u, const BoundaryGradientOptions& opt) {
  const int n = phi.dim();
  if (d.dim() != n || x0.size() != n) throw Error(ErrorCode::kParameter, "boundary_gradient_barrier: dimension mismatch");
  if (!(r > 0.0) || !(sup_u >= 0.0) || !(opt.collar > 0.0))
    throw Error(ErrorCode::kParameter, "boundary_gradient_barrier: r, collar must be positive and sup_u >= 0");

  const Vec lo = x0.array() - 2.0 * r;
  const Vec hi = x0.array() + 2.0 * r;
  // Sup norms of phi and D phi over the patch.
  double sup_phi = 0.0, sup_dphi = 0.0;
  {
    const std::size_t m = 4000;
    std::vector<double> a(m), b(m);
    parallel_for(m, [&](std::size_t i) {
      const Vec x = random_point_in_box(lo, hi, mix_seed(opt.seed, 101), i);
      a[i] = std::abs(phi(x));
      b[i] = phi.gradient(x).norm();
    });
    for (std::size_t i = 0; i < m; ++i) {
      sup_phi = std::max(sup_phi, a[i]);
      sup_dphi = std::max(sup_dphi, b[i]);
    }
  }
  const double height = sup_u + sup_phi;
  if (!(height > 0.0)) throw Error(ErrorCode::kParameter, "boundary_gradient_barrier: sup_u + sup|phi| must be positive");

  BoundaryGradientBarrier out;
  out.height = height;
  for (int j = 0; j <= opt.max_halvings; ++j) {
    const double delta = std::ldexp(opt.delta0, -j);
    if (height / delta > 150.0) break;
    // sigma^(-1/2) is the collar width; delta log(1 + sqrt(sigma)) >= height there.
    double sigma = std::pow(std::expm1(height / delta), 2);
    sigma = std::max(sigma, 1.0 / (opt.collar * opt.collar));
    if (opt.initial_lipschitz > 0.0) sigma = std::max(sigma, std::pow((opt.initial_lipschitz + sup_dphi) / height, 2));
    const double mu = 1.0 / std::sqrt(sigma);

    auto make = [=](double sgn) {
      Barrier b;
      b.side = sgn > 0 ? BarrierSide::kUpper : BarrierSide::kLower;
      b.dim = n;
      b.provenance = "boundary_gradient";
      b.t_begin = 0.0;
      b.value = [=](const Vec& x, double) {
        return phi(x) + sgn * (delta * std::log1p(sigma * d(x)) + height * cutoff_eta(x, x0, r));
      };
      b.jet = [=](const Vec& x, double) {
        Vec ge;
        Mat he;
        const double eta = cutoff_eta(x, x0, r, &ge, &he);
        const double dv = d(x);
        const Vec nd = d.gradient(x);
        const double k = 1.0 + sigma * dv;
        Jet jt;
        jt.value = phi(x) + sgn * (delta * std::log1p(sigma * dv) + height * eta);
        jt.grad = phi.gradient(x) + sgn * (delta * sigma / k * nd + height * ge);
        jt.hess = phi.hessian(x) +
                  sgn * (delta * sigma / k * d.hessian(x) - delta * sigma * sigma / (k * k) * nd * nd.transpose() +
                         height * he);
        jt.dt = 0.0;
        return jt;
      };
      b.valid = [=](const Vec& x, double) {
        const double dv = d(x);
        return dv >= 0.0 && dv <= mu && (x - x0).norm() <= 2.0 * r;
      };
      return b;
    };
    BarrierPair pair{make(1.0), make(-1.0)};

    // Stable residual: the large normal part of the Hessian is contracted
    // against A without forming tr(H) - p.Hp/(1+|p|^2) directly.
    auto stable = [=](double sgn) {
      return [=](const Vec& x, double) {
        Vec ge;
        Mat he;
        cutoff_eta(x, x0, r, &ge, &he);
        const double dv = d(x);
        const Vec nd = d.gradient(x);
        const Mat hd = d.hessian(x);
        const double k = 1.0 + sigma * dv;
        const Vec q = phi.gradient(x) + sgn * height * ge;
        const Mat hq = phi.hessian(x) + sgn * height * he;
        const double beta = sgn * delta * sigma / k;
        const double alpha = -sgn * delta * sigma * sigma / (k * k);
        const double qn = q.dot(nd);
        const double w2 = 1.0 + q.squaredNorm() + 2.0 * beta * qn + beta * beta;
        const Vec p = q + beta * nd;
        const double base = hq.trace() - p.dot(hq * p) / w2;
        const double tangential = beta * (hd.trace() - q.dot(hd * q) / w2);
        const double normal = alpha * (1.0 + q.squaredNorm() - qn * qn) / w2;
        return -(base + tangential + normal);
      };
    };

    // Sample the validity region.
    std::vector<Vec> pts;
    sample_stream<Vec>(
        2000 * static_cast<std::uint64_t>(opt.samples) + 100000,
        [&](std::uint64_t i) -> std::optional<Vec> {
          Vec x = random_point_in_box(lo, hi, mix_seed(opt.seed, 102 + j), i);
          if ((x - x0).norm() > 2.0 * r) return std::nullopt;
          // Draw the depth uniformly in [0, mu] along the normal through the sample.
          const double dv = d(x);
          if (!(std::abs(dv) < 4.0 * r)) return std::nullopt;
          std::mt19937_64 rng(mix_seed(opt.seed + 7, i));
          const double target = mu * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
          x += (target - dv) * d.gradient(x);
          if (!pair.upper.valid(x, 0.0)) return std::nullopt;
          return x;
        },
        [&](const Vec& x) {
          pts.push_back(x);
          return pts.size() >= opt.samples;
        });
    if (pts.empty()) throw Error(ErrorCode::kGeometry, "boundary_gradient_barrier: empty boundary layer near x0");
    const auto up = stable(1.0);
    const auto down = stable(-1.0);
    std::vector<double> worst(pts.size());
    parallel_for(pts.size(), [&](std::size_t i) {
      worst[i] = std::min(up(pts[i], 0.0), -down(pts[i], 0.0));
    });
    const double w = *std::min_element(worst.begin(), worst.end());
    if (w >= -opt.tol) {
      pair.upper.residual_fn = up;
      pair.lower.residual_fn = down;
      out.pair = std::move(pair);
      out.delta = delta;
      out.sigma = sigma;
      out.collar = mu;
      out.gradient_bound = delta * sigma + sup_dphi;
      out.certified_samples = pts.size();
      out.worst_residual = w;
      return out;
    }
    std::ostringstream why;
    why << "delta=" << delta << " sigma=" << sigma << ": worst residual " << w;
    out.rejected.push_back(why.str());
  }
  std::ostringstream os;
  os << "boundary_gradient_barrier: no certified (delta, sigma) within the search budget";
  if (!out.rejected.empty()) os << " (last: " << out.rejected.back() << ")";
  throw Error(ErrorCode::kParameter, os.str());
}

// ---------------------------------------------------------------------------
// Interior sup barrier

CapSolution::CapSolution(std::vector<double> times, std::vector<Grid> frames)
    : times_(std::move(times)), frames_(std::move(frames)) {
  if (times_.empty() || times_.size() != frames_.size())
    throw Error(ErrorCode::kParameter, "CapSolution: need matching, nonempty times and frames");
  for (const Grid& g : frames_)
    if (g.dim != 1) throw Error(ErrorCode::kParameter, "CapSolution: frames must be one-dimensional");
  const Grid& g0 = frames_.front();
  const double h = g0.spacing;
  const std::size_t m = g0.size();
  lo_ = kInf;
  hi_ = -kInf;
  for (const Grid& g : frames_) {
    std::vector<double> vx(m, NAN), vxx(m, NAN);
    for (std::size_t i = 1; i + 1 < m; ++i) {
      const double a = g.values[i - 1], b = g.values[i], c = g.values[i + 1];
      if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c)) continue;
      vx[i] = (c - a) / (2.0 * h);
      vxx[i] = (c - 2.0 * b + a) / (h * h);
    }
    vx_.push_back(std::move(vx));
    vxx_.push_back(std::move(vxx));
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (!std::isfinite(vxx_.front()[i])) continue;
    lo_ = std::min(lo_, g0.origin[0] + h * i);
    hi_ = std::max(hi_, g0.origin[0] + h * i);
  }
}

CapSolution CapSolution::from_trajectory(const Trajectory& traj) { return CapSolution(traj.times, traj.frames); }

bool CapSolution::eval(double x, double t, double* v, double* vx, double* vxx, double* vt) const {
  if (!(x >= lo_ && x <= hi_) || t < times_.front() || t > times_.back()) return false;
  const Grid& g0 = frames_.front();
  const double h = g0.spacing;
  const double s = (x - g0.origin[0]) / h;
  std::size_t i = static_cast<std::size_t>(std::floor(s));
  if (i + 1 >= g0.size()) i = g0.size() - 2;
  const double fx = s - static_cast<double>(i);
  std::size_t k = static_cast<std::size_t>(std::upper_bound(times_.begin(), times_.end(), t) - times_.begin());
  if (k == 0) k = 1;
  if (k >= times_.size()) k = times_.size() - 1;
  const std::size_t k0 = times_.size() == 1 ? 0 : k - 1;
  const std::size_t k1 = times_.size() == 1 ? 0 : k;
  const double span = times_[k1] - times_[k0];
  const double ft = span > 0.0 ? std::clamp((t - times_[k0]) / span, 0.0, 1.0) : 0.0;
  auto lerp2 = [&](const std::vector<double>& a0, const std::vector<double>& a1) {
    const double p = (1 - fx) * a0[i] + fx * a0[i + 1];
    const double q = (1 - fx) * a1[i] + fx * a1[i + 1];
    return (1 - ft) * p + ft * q;
  };
  const double val = lerp2(frames_[k0].values, frames_[k1].values);
  const double dx = lerp2(vx_[k0], vx_[k1]);
  const double dxx = lerp2(vxx_[k0], vxx_[k1]);
  if (!std::isfinite(val) || !std::isfinite(dx) || !std::isfinite(dxx)) return false;
  if (v) *v = val;
  if (vx) *vx = dx;
  if (vxx) *vxx = dxx;
  if (vt) *vt = dxx / (1.0 + dx * dx);
  return true;
}

double CapSolution::sup_abs() const {
  double m = 0.0;
  for (const Grid& g : frames_)
    for (double v : g.values)
      if (std::isfinite(v)) m = std::max(m, std::abs(v));
  return m;
}

double CapSolution::sup_second_derivative() const {
  double m = 0.0;
  for (const auto& row : vxx_)
    for (double v : row)
      if (std::isfinite(v)) m = std::max(m, std::abs(v));
  return m;
}

double sup_barrier_drift(double s, double d2v) { return 4.0 * s * s * d2v + 4.0 * s; }

SupBarrier sup_barrier(const CapSolution& v, const std::function<double(double)>& h, double s, double sup_data,
                       double c, double q_min) {
  if (!(s > 0.0)) throw Error(ErrorCode::kParameter, "sup_barrier: s must be positive");
  const double vmax = v.sup_abs();
  if (!(vmax < s)) {
    std::ostringstream os;
    os << "sup_barrier: |v| < s violated (sup |v| = " << vmax << ", s = " << s << ")";
    throw Error(ErrorCode::kParameter, os.str());
  }
  SupBarrier out;
  out.s = s;
  out.d2v = v.sup_second_derivative();
  out.drift = c > 0.0 ? c : 1.1 * sup_barrier_drift(s, out.d2v);
  const double drift = out.drift;
  const double tmax = v.t_end();
  const auto cap = std::make_shared<const CapSolution>(v);

  auto make = [=](double sgn) {
    Barrier b;
    b.side = sgn > 0 ? BarrierSide::kUpper : BarrierSide::kLower;
    b.dim = 2;
    b.provenance = "sup";
    b.t_begin = 0.0;
    b.t_end = tmax;
    b.value = [=](const Vec& x, double t) {
      double val;
      if (!cap->eval(x[0], t, &val, nullptr, nullptr, nullptr)) return sgn * kInf;
      const double q = val - x[1];
      if (q <= 0.0) return sgn * kInf;
      return sgn * (1.0 / q + drift * t + sup_data);
    };
    b.jet = [=](const Vec& x, double t) {
      double val = 0, vx = 0, vxx = 0, vt = 0;
      cap->eval(x[0], t, &val, &vx, &vxx, &vt);
      const double q = val - x[1];
      const double q2 = q * q, q3 = q2 * q;
      Jet j;
      j.value = sgn * (1.0 / q + drift * t + sup_data);
      j.grad = Vec(2);
      j.grad << -vx / q2, 1.0 / q2;
      j.hess = Mat(2, 2);
      j.hess << -vxx / q2 + 2.0 * vx * vx / q3, -2.0 * vx / q3, -2.0 * vx / q3, 2.0 / q3;
      j.grad *= sgn;
      j.hess *= sgn;
      j.dt = sgn * (-vt / q2 + drift);
      return j;
    };
    b.valid = [=, h = h](const Vec& x, double t) {
      double val;
      if (!cap->eval(x[0], t, &val, nullptr, nullptr, nullptr)) return false;
      return x[1] > h(x[0]) && val - x[1] >= q_min;
    };
    return b;
  };
  out.pair = BarrierPair{make(1.0), make(-1.0)};
  return out;
}

// ---------------------------------------------------------------------------
// Certification and checking

ResidualReport certify_residual(const Barrier& b, const Vec& lo, const Vec& hi, double t0, double t1,
                                std::size_t n_samples, std::uint64_t seed, double tol) {
  ResidualReport rep;
  rep.worst = b.side == BarrierSide::kLower ? -kInf : kInf;
  if (b.side == BarrierSide::kExact) rep.worst = 0.0;
  struct Sample {
    Vec x;
    double t;
    double res;
  };
  sample_stream<Sample>(
      1000 * static_cast<std::uint64_t>(n_samples) + 10000,
      [&](std::uint64_t i) -> std::optional<Sample> {
        const Vec x = random_point_in_box(lo, hi, seed, i);
        std::mt19937_64 rng(mix_seed(seed ^ 0x5bd1e995ULL, i));
        const double t = t0 + (t1 - t0) * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        if (!b.contains(x, t)) return std::nullopt;
        return Sample{x, t, b.residual(x, t)};
      },
      [&](const Sample& s) {
        ++rep.samples;
        bool bad = false;
        bool worse = false;
        switch (b.side) {
          case BarrierSide::kUpper:
            bad = !(s.res >= -tol);
            worse = s.res < rep.worst;
            break;
          case BarrierSide::kLower:
            bad = !(s.res <= tol);
            worse = s.res > rep.worst;
            break;
          case BarrierSide::kExact:
            bad = !(std::abs(s.res) <= tol);
            worse = std::abs(s.res) > std::abs(rep.worst);
            break;
        }
        if (bad) ++rep.failures;
        if (worse || rep.samples == 1) {
          rep.worst = s.res;
          rep.worst_x = s.x;
          rep.worst_t = s.t;
        }
        return rep.samples >= n_samples;
      });
  return rep;
}

ViolationReport check_barrier(const std::vector<double>& times, const std::vector<Grid>& frames, const Barrier& b,
                              double tol) {
  if (times.size() != frames.size()) throw Error(ErrorCode::kParameter, "check_barrier: times/frames mismatch");
  ViolationReport rep;
  rep.tolerance = tol;
  rep.times = times;
  struct FrameResult {
    double worst = -kInf;
    Vec x;
    std::size_t checked = 0;
  };
  std::vector<FrameResult> res(frames.size());
  parallel_for(frames.size(), [&](std::size_t k) {
    const Grid& g = frames[k];
    const double t = times[k];
    FrameResult fr;
    if (g.dim != b.dim) throw Error(ErrorCode::kParameter, "check_barrier: barrier and trajectory dimension differ");
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double u = g.values[i];
      if (!std::isfinite(u)) continue;
      const Vec x = g.node(i);
      if (!b.contains(x, t)) continue;
      const double w = b.value(x, t);
      double viol;
      switch (b.side) {
        case BarrierSide::kUpper: viol = u - w; break;
        case BarrierSide::kLower: viol = w - u; break;
        default: viol = std::abs(u - w); break;
      }
      ++fr.checked;
      if (viol > fr.worst) {
        fr.worst = viol;
        fr.x = x;
      }
    }
    res[k] = std::move(fr);
  });
  for (std::size_t k = 0; k < res.size(); ++k) {
    rep.frame_violation.push_back(res[k].worst);
    rep.checked += res[k].checked;
    if (res[k].checked && res[k].worst > rep.worst) {
      rep.worst = res[k].worst;
      rep.worst_t = times[k];
      rep.worst_x = res[k].x;
    }
  }
  return rep;
}

ViolationReport check_barrier(const Trajectory& traj, const Barrier& b, double tol) {
  return check_barrier(traj.times, traj.frames, b, tol);
}

std::string ViolationReport::to_text() const {
  std::ostringstream os;
  os << "frames: " << times.size() << "\n"
     << "checked_values: " << checked << "\n"
     << "tolerance: " << tolerance << "\n"
     << "worst_violation: " << worst << "\n"
     << "worst_time: " << worst_t << "\n";
  if (worst_x.size()) {
    os << "worst_location: ";
    for (int i = 0; i < worst_x.size(); ++i) os << (i ? "," : "") << worst_x[i];
    os << "\n";
  }
  os << "result: " << (passed() ? "PASS" : "FAIL") << "\n";
  return os.str();
}

}  // namespace gmcf
