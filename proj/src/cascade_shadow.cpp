#include "gmcf/cascade_shadow.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <memory>
#include <numbers>
#include <ostream>
#include <sstream>

namespace gmcf {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string short_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

double unit(std::uint64_t seed, std::uint64_t index, std::uint64_t slot) {
  return static_cast<double>(mix_seed(mix_seed(seed, index), slot) >> 11) * 0x1.0p-53;
}

// Midpoint quadrature of a compact bump on [-radius, radius]^dim.
struct Kernel {
  std::vector<Vec> offsets;
  std::vector<double> weights;
};

Kernel make_kernel(int dim, double radius) {
  const int m = dim == 1 ? 9 : (dim == 2 ? 7 : 5);
  Kernel k;
  std::size_t total = 1;
  for (int d = 0; d < dim; ++d) total *= static_cast<std::size_t>(m);
  double sum = 0.0;
  for (std::size_t idx = 0; idx < total; ++idx) {
    Vec y(dim);
    std::size_t rest = idx;
    for (int d = 0; d < dim; ++d) {
      const int j = static_cast<int>(rest % m);
      rest /= m;
      y[d] = radius * (-1.0 + (2.0 * j + 1.0) / m);
    }
    const double s = y.squaredNorm() / (radius * radius);
    if (s >= 1.0) continue;
    const double w = std::exp(-1.0 / (1.0 - s));
    k.offsets.push_back(y);
    k.weights.push_back(w);
    sum += w;
  }
  for (double& w : k.weights) w /= sum;
  return k;
}

double sup_error(const std::function<double(const Vec&)>& a, const std::function<double(const Vec&)>& b,
                 const std::vector<Vec>& points) {
  std::vector<double> err(points.size(), 0.0);
  parallel_for(points.size(), [&](std::size_t i) {
    const double va = a(points[i]);
    const double vb = b(points[i]);
    if (std::isnan(va) && std::isnan(vb)) return;
    err[i] = std::abs(va - vb);
    if (std::isnan(err[i])) err[i] = std::numeric_limits<double>::infinity();
  });
  double m = 0.0;
  for (double e : err) m = std::max(m, e);
  return m;
}

std::vector<double> column(const std::vector<std::vector<Grid>>& stages, std::size_t k, std::size_t cell) {
  std::vector<double> v;
  v.reserve(stages.size());
  for (const auto& s : stages) {
    const auto& vals = s[k].values;
    v.push_back(cell < vals.size() ? vals[cell] : std::numeric_limits<double>::quiet_NaN());
  }
  return v;
}

}  // namespace

double compactify_atan(double u) {
  if (std::isinf(u)) return u > 0 ? 1.0 : -1.0;
  return 2.0 / std::numbers::pi * std::atan(u);
}

void CascadeConfig::validate() const {
  std::vector<std::string> errors;
  if (schedule.size() < 2) errors.push_back("schedule needs at least two values of R");
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (!(schedule[i] > 0.0)) errors.push_back("schedule values must be positive");
    if (i > 0 && !(schedule[i] > schedule[i - 1])) errors.push_back("schedule must be strictly increasing");
  }
  if (!(h_inf > 0.0)) errors.push_back("h_inf must be positive");
  if (!(h_inf < solver.h_cap)) errors.push_back("h_inf must be below the solver cap");
  if (!(stabilization_tol > 0.0)) errors.push_back("stabilization tolerance must be positive");
  if (!(eps > 0.0)) errors.push_back("eps must be positive");
  if (!compactify) errors.push_back("compactify is empty");
  if (errors.empty()) return;
  std::string msg = "cascade config:";
  for (const auto& e : errors) msg += " " + e + ";";
  throw Error(ErrorCode::kConfig, msg);
}

TruncatedDomain truncate_domain(const DomainSpec& omega, double big_r, double eps, const CurvatureCone& cone,
                                const SmoothingOptions& options, std::uint64_t seed) {
  if (!(big_r > 0.0) || !(eps > 0.0) || eps >= big_r)
    throw Error(ErrorCode::kParameter, "truncate_domain: need 0 < eps < R");
  const int dim = omega.dim();
  TruncatedDomain out;
  const auto [lo, hi] = bounding_box(omega);
  if (omega.bounded()) {
    double corner = 0.0;
    for (int k = 0; k < dim; ++k) corner += std::max(lo[k] * lo[k], hi[k] * hi[k]);
    if (std::sqrt(corner) <= big_r) {
      out.domain = omega;
      return out;
    }
  }
  out.truncated = true;
  const double outer = 2.0 * big_r - eps;
  if (std::holds_alternative<Whole>(omega.shape)) {
    out.domain = make_ball(Vec::Zero(dim), outer, std::min(1.0, 0.5 * outer));
  } else if (dim == 1) {
    const double a = std::max(lo[0], -outer);
    const double b = std::min(hi[0], outer);
    if (!(b > a)) throw Error(ErrorCode::kGeometry, "truncate_domain: empty intersection with B_2R");
    Vec c(1);
    c[0] = 0.5 * (a + b);
    out.domain = make_ball(c, 0.5 * (b - a), std::min(0.25, 0.25 * (b - a)));
  } else {
    const DomainSpec ball = make_ball(Vec::Zero(dim), 2.0 * big_r, std::min(1.0, big_r));
    SmoothedIntersection s = smooth_intersection(omega, ball, eps, cone, options);
    if (!s.passed()) {
      std::ostringstream os;
      os << "truncate_domain: smoothing validation failed at R = " << big_r << "\n"
         << s.inclusions.to_text() << s.curvature.to_text();
      throw Error(ErrorCode::kGeometry, os.str());
    }
    out.domain = s.as_domain();
    out.smoothing = std::move(s);
  }

  const ScalarField d_omega = signed_distance(omega);
  const ScalarField d_r = signed_distance(out.domain);
  const Vec box_lo = Vec::Constant(dim, -big_r);
  const Vec box_hi = Vec::Constant(dim, big_r);
  const std::size_t n = std::max<std::size_t>(1, options.inclusion_samples);
  std::vector<std::int8_t> hit(n, 0);
  parallel_for(n, [&](std::size_t i) {
    const Vec x = random_point_in_box(box_lo, box_hi, seed, i);
    if (x.norm() >= big_r || !(d_omega(x) > 0.0)) return;
    hit[i] = d_r(x) > 0.0 ? 1 : 2;
  });
  for (auto v : hit) {
    if (v > 0) ++out.inclusion_samples;
    if (v == 2) ++out.inclusion_violations;
  }
  if (out.inclusion_violations > 0) {
    std::ostringstream os;
    os << "truncate_domain: " << out.inclusion_violations << " of " << out.inclusion_samples
       << " samples of omega ∩ B_R lie outside the truncated domain (R = " << big_r << ")";
    throw Error(ErrorCode::kGeometry, os.str());
  }
  return out;
}

PreparedInitial prepare_initial(const ExtendedFn& u0, double big_r, int dim, double radius,
                                const std::vector<Vec>& probe_points, int max_halvings) {
  if (!(big_r > 0.5)) throw Error(ErrorCode::kParameter, "prepare_initial: R must exceed 1/2");
  std::function<double(const Vec&)> cut = [u0, big_r](const Vec& x) {
    const double v = u0(x);
    return std::isnan(v) ? v : height_cutoff(v, big_r);
  };
  PreparedInitial out;
  out.u = cut;
  if (!(radius > 0.0)) return out;
  for (int k = 0; k <= max_halvings; ++k, radius *= 0.5) {
    auto kernel = std::make_shared<const Kernel>(make_kernel(dim, radius));
    std::function<double(const Vec&)> blurred = [cut, kernel](const Vec& x) {
      double sum = 0.0, wsum = 0.0;
      for (std::size_t j = 0; j < kernel->weights.size(); ++j) {
        const double v = cut(x - kernel->offsets[j]);
        if (std::isnan(v)) continue;
        sum += kernel->weights[j] * v;
        wsum += kernel->weights[j];
      }
      return wsum > 0.0 ? sum / wsum : std::numeric_limits<double>::quiet_NaN();
    };
    const double err = sup_error(blurred, cut, probe_points);
    if (err < 1.0 / big_r) {
      out.u = blurred;
      out.radius = radius;
      out.sup_error = err;
      return out;
    }
  }
  return out;
}

const char* status_name(CellStatus status) {
  switch (status) {
    case CellStatus::kConverged: return "converged";
    case CellStatus::kEscaped: return "escaped";
    case CellStatus::kAmbiguous: return "ambiguous";
    case CellStatus::kOscillating: return "oscillating";
  }
  return "?";
}

CellStatus classify_cell(const std::vector<double>& stage_values, double h_inf, double tol,
                         const std::function<double(double)>& compactify) {
  std::vector<double> v;
  for (double x : stage_values)
    if (!std::isnan(x)) v.push_back(x);
  if (v.size() < 2) return CellStatus::kAmbiguous;
  const std::size_t n = v.size();
  const double last = v[n - 1], prev = v[n - 2];
  const double cl = compactify(last), cp = compactify(prev);
  if (std::abs(last) >= h_inf) {
    const bool growing = last * prev >= 0.0 && std::abs(cl) >= std::abs(cp) - tol;
    return growing ? CellStatus::kEscaped : CellStatus::kAmbiguous;
  }
  if (std::abs(cl - cp) <= tol) return CellStatus::kConverged;
  if (n >= 3) {
    const double d1 = cp - compactify(v[n - 3]);
    const double d2 = cl - cp;
    if (d1 * d2 < 0.0 && std::abs(d1) > tol) return CellStatus::kOscillating;
  }
  return CellStatus::kAmbiguous;
}

std::size_t CascadeResult::count(CellStatus s) const {
  std::size_t c = 0;
  for (std::size_t k = 0; k < status.size(); ++k) {
    const auto& vals = limit()[k].values;
    for (std::size_t i = 0; i < status[k].size(); ++i)
      if (!std::isnan(vals[i]) && status[k][i] == s) ++c;
  }
  return c;
}

double CascadeResult::monotonicity_defect() const {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s + 1 < stages.size(); ++s)
    for (std::size_t k = 0; k < times.size(); ++k) {
      const auto& a = stages[s][k].values;
      const auto& b = stages[s + 1][k].values;
      for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i)
        if (std::isfinite(a[i]) && std::isfinite(b[i])) worst = std::max(worst, a[i] - b[i]);
    }
  return worst;
}

void CascadeResult::write_convergence_csv(std::ostream& out) const {
  out << "cell,t";
  for (double r : config.schedule) out << ",R_" << short_num(r);
  out << ",status\n";
  for (std::size_t k = 0; k < times.size(); ++k) {
    const auto& fin = limit()[k].values;
    for (std::size_t i = 0; i < fin.size(); ++i) {
      if (std::isnan(fin[i])) continue;
      out << i << ',' << num(times[k]);
      for (const auto& s : stages) {
        out << ',';
        if (i < s[k].values.size() && !std::isnan(s[k].values[i])) out << num(s[k].values[i]);
      }
      out << ',' << status_name(status[k][i]) << '\n';
    }
  }
}

double grid_integral(const Grid& g) {
  double sum = 0.0;
  for (double v : g.values)
    if (std::isfinite(v)) sum += v;
  return sum * std::pow(g.spacing, g.dim);
}

CascadeResult run_cascade(const CascadeProblem& problem, const CascadeConfig& config) {
  config.validate();
  if (!problem.u0) throw Error(ErrorCode::kConfig, "cascade: initial data missing");
  CascadeResult out;
  out.config = config;
  out.radial = problem.radial_dim > 0;
  out.dim = out.radial ? problem.radial_dim : problem.omega.dim();
  const double h = config.solver.h;
  const double r_max = config.schedule.back();
  double radius = config.mollify_radius >= 0.0 ? config.mollify_radius : std::min(0.5 / r_max, h);
  const std::size_t n_stages = config.schedule.size();
  out.reports.resize(n_stages);

  if (out.radial) {
    if (!(problem.rho > 0.0) || problem.rho > config.schedule.front())
      throw Error(ErrorCode::kConfig, "cascade: radial runs need 0 < rho <= the smallest R");
    const ExtendedFn u0 = problem.u0;
    ExtendedFn even = [u0](const Vec& x) {
      Vec r(1);
      r[0] = std::abs(x[0]);
      return u0(r);
    };
    const std::size_t cells = static_cast<std::size_t>(std::max(2.0, std::round(problem.rho / h)));
    const double hr = problem.rho / static_cast<double>(cells);
    std::vector<Vec> probes(cells + 1, Vec(1));
    for (std::size_t i = 0; i <= cells; ++i) probes[i][0] = hr * static_cast<double>(i);
    for (double big_r : config.schedule) radius = prepare_initial(even, big_r, 1, radius, probes).radius;
    for (std::size_t s = 0; s < n_stages; ++s) {
      const double big_r = config.schedule[s];
      const auto start = std::chrono::steady_clock::now();
      const PreparedInitial init = prepare_initial(even, big_r, 1, radius, probes, 0);
      auto f = init.u;
      Vec edge(1);
      edge[0] = problem.rho;
      const double bc_value = f(edge);
      RadialTrajectory tr = radial_solve(
          [f](double r) {
            Vec x(1);
            x[0] = r;
            return f(x);
          },
          problem.radial_dim, problem.rho, [bc_value](double) { return bc_value; }, config.solver);
      std::vector<Grid> frames;
      for (auto& fr : tr.frames) {
        Grid g({fr.size()}, hr, Vec::Zero(1));
        g.values = std::move(fr);
        frames.push_back(std::move(g));
      }
      if (s == 0) out.times = tr.times;
      out.stages.push_back(std::move(frames));
      out.domain_radius.push_back(problem.rho);
      auto& rep = out.reports[s];
      rep.big_r = big_r;
      rep.domain = "radial ball rho=" + short_num(problem.rho);
      rep.mollify_radius = init.radius;
      rep.mollify_error = init.sup_error;
      rep.steps = tr.steps;
      for (auto c : tr.capped) rep.capped += c;
      rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
  } else {
    const int dim = out.dim;
    if (dim != 1 && dim != 2) throw Error(ErrorCode::kConfig, "cascade: grid runs support dimensions 1 and 2");
    std::vector<TruncatedDomain> domains;
    for (double big_r : config.schedule)
      domains.push_back(truncate_domain(problem.omega, big_r, config.eps, config.cone, config.smoothing, config.seed));
    Vec lo(dim), hi(dim);
    {
      auto [blo, bhi] = bounding_box(problem.omega);
      const double outer = 2.0 * r_max;
      for (int k = 0; k < dim; ++k) {
        lo[k] = std::floor(std::max(blo[k], -outer) / h) * h;
        hi[k] = std::ceil(std::min(bhi[k], outer) / h) * h;
      }
    }
    std::vector<std::vector<Vec>> probes(n_stages);
    {
      const Grid layout(
          [&] {
            std::vector<std::uint64_t> ext(dim);
            for (int k = 0; k < dim; ++k)
              ext[k] = static_cast<std::uint64_t>(std::llround((hi[k] - lo[k]) / h)) + 1;
            return ext;
          }(),
          h, lo);
      for (std::size_t s = 0; s < n_stages; ++s) {
        const ScalarField d = signed_distance(domains[s].domain);
        for (std::size_t i = 0; i < layout.size(); ++i) {
          const Vec x = layout.node(i);
          if (d(x) > 0.0) probes[s].push_back(x);
        }
      }
    }
    for (std::size_t s = 0; s < n_stages; ++s)
      radius = prepare_initial(problem.u0, config.schedule[s], dim, radius, probes[s]).radius;
    for (std::size_t s = 0; s < n_stages; ++s) {
      const double big_r = config.schedule[s];
      const auto start = std::chrono::steady_clock::now();
      const PreparedInitial init = prepare_initial(problem.u0, big_r, dim, radius, probes[s], 0);
      auto f = init.u;
      GraphFlowState state = make_state(
          domains[s].domain, lo, hi, h, f, [f](const Vec& x, double) { return f(x); }, config.solver.theta_min);
      Trajectory tr = solve(state, config.solver);
      if (s == 0) out.times = tr.times;
      out.stages.push_back(std::move(tr.frames));
      auto& rep = out.reports[s];
      rep.big_r = big_r;
      rep.domain = domains[s].domain.describe();
      rep.truncated = domains[s].truncated;
      rep.mollify_radius = init.radius;
      rep.mollify_error = init.sup_error;
      rep.steps = tr.steps;
      rep.augmented_updates = tr.augmented_updates;
      for (auto c : tr.capped) rep.capped += c;
      rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
  }

  out.status.resize(out.times.size());
  for (std::size_t k = 0; k < out.times.size(); ++k) {
    const std::size_t cells = out.limit()[k].values.size();
    out.status[k].assign(cells, CellStatus::kConverged);
    parallel_for(cells, [&](std::size_t i) {
      out.status[k][i] = classify_cell(column(out.stages, k, i), config.h_inf, config.stabilization_tol,
                                       config.compactify);
    });
  }
  return out;
}

namespace {

ShadowTrace trace_layout(const Grid& g, int dim, bool radial) {
  ShadowTrace tr;
  tr.dim = dim;
  tr.radial = radial;
  tr.h = g.spacing;
  tr.layout = Grid(g.extents, g.spacing, g.origin, 0.0);
  return tr;
}

void fill_boundary(ShadowTrace& tr, std::size_t k) {
  const Grid& g = tr.layout;
  const auto& mask = tr.mask[k];
  const auto& active = tr.active[k];
  std::vector<Vec> pts;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!active[i]) continue;
    const auto idx = g.unflatten(i);
    for (int a = 0; a < g.dim; ++a) {
      auto j = idx;
      ++j[a];
      if (j[a] >= static_cast<std::int64_t>(g.extents[a])) continue;
      const std::size_t fj = g.flat(j);
      if (active[fj] && mask[fj] != mask[i]) pts.push_back(0.5 * (g.node(i) + g.node(fj)));
    }
  }
  tr.boundary.push_back(std::move(pts));
}

}  // namespace

ShadowTrace extract_shadow(const CascadeResult& result, double h_inf) {
  ShadowTrace tr = trace_layout(result.limit().front(), result.dim, result.radial);
  tr.times = result.times;
  if (result.radial) tr.domain_radius = result.domain_radius.back();
  const bool reuse = h_inf == result.config.h_inf;
  for (std::size_t k = 0; k < result.times.size(); ++k) {
    const auto& fin = result.limit()[k].values;
    std::vector<CellStatus> st(fin.size());
    if (reuse) {
      st = result.status[k];
    } else {
      parallel_for(fin.size(), [&](std::size_t i) {
        st[i] = classify_cell(column(result.stages, k, i), h_inf, result.config.stabilization_tol,
                              result.config.compactify);
      });
    }
    std::vector<std::uint8_t> mask(fin.size(), 0), active(fin.size(), 0);
    std::size_t ambiguous = 0;
    for (std::size_t i = 0; i < fin.size(); ++i) {
      if (std::isnan(fin[i])) continue;
      active[i] = 1;
      mask[i] = st[i] != CellStatus::kEscaped;
      if (st[i] == CellStatus::kAmbiguous || st[i] == CellStatus::kOscillating) ++ambiguous;
    }
    tr.mask.push_back(std::move(mask));
    tr.active.push_back(std::move(active));
    tr.ambiguous.push_back(ambiguous);
    if (result.radial) {
      const double hr = tr.h;
      double rad = tr.domain_radius;
      for (std::size_t i = 0; i < fin.size(); ++i) {
        if (tr.mask[k][i]) continue;
        if (i == 0) {
          rad = 0.0;
        } else {
          const double a = std::abs(fin[i - 1]), b = std::abs(fin[i]);
          const double w = b > a ? std::clamp((h_inf - a) / (b - a), 0.0, 1.0) : 1.0;
          rad = hr * (static_cast<double>(i - 1) + w);
        }
        break;
      }
      tr.radius.push_back(rad);
      tr.boundary.push_back({Vec::Constant(1, rad)});
    } else {
      fill_boundary(tr, k);
    }
  }
  return tr;
}

ShadowTrace extract_shadow(const Trajectory& traj, double h_inf) {
  ShadowTrace tr = trace_layout(traj.frames.front(), traj.frames.front().dim, false);
  tr.times = traj.times;
  for (const Grid& g : traj.frames) {
    std::vector<std::uint8_t> mask(g.size(), 0), active(g.size(), 0);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (std::isnan(g.values[i])) continue;
      active[i] = 1;
      mask[i] = std::abs(g.values[i]) < h_inf;
    }
    tr.mask.push_back(std::move(mask));
    tr.active.push_back(std::move(active));
    tr.ambiguous.push_back(0);
    fill_boundary(tr, tr.mask.size() - 1);
  }
  return tr;
}

void ShadowTrace::write_csv(std::ostream& out) const {
  out << "t,cells,in_shadow,rle,radius,ambiguous\n";
  for (std::size_t k = 0; k < times.size(); ++k) {
    std::size_t inside = 0;
    std::ostringstream rle;
    std::uint8_t cur = 0;
    std::size_t run = 0;
    bool first = true;
    for (auto m : mask[k]) {
      inside += m;
      if (m == cur) {
        ++run;
        continue;
      }
      rle << (first ? "" : " ") << run;
      first = false;
      cur = m;
      run = 1;
    }
    rle << (first ? "" : " ") << run;
    out << num(times[k]) << ',' << mask[k].size() << ',' << inside << ',' << rle.str() << ',';
    if (radial) out << num(radius[k]);
    out << ',' << ambiguous[k] << '\n';
  }
}

double probe_radius(const Probe& p, int dim, double t) {
  const double r2 = p.r0 * p.r0 - 2.0 * (dim - 1) * (t - p.t0);
  return r2 > 0.0 ? std::sqrt(r2) : 0.0;
}

namespace {

double radial_radius_at(const ShadowTrace& s, double t) {
  if (t <= s.times.front()) return s.radius.front();
  for (std::size_t k = 1; k < s.times.size(); ++k)
    if (t <= s.times[k]) {
      const double w = (t - s.times[k - 1]) / (s.times[k] - s.times[k - 1]);
      return (1.0 - w) * s.radius[k - 1] + w * s.radius[k];
    }
  return s.radius.back();
}

// Distance from c to the nearest cell selected by pick, or to the box edge.
double nearest(const ShadowTrace& s, const Vec& c, bool include_box, const std::function<bool(std::size_t)>& pick) {
  double best = std::numeric_limits<double>::infinity();
  if (include_box) {
    const Vec hi = s.layout.upper();
    for (int a = 0; a < s.layout.dim; ++a)
      best = std::min({best, c[a] - s.layout.origin[a], hi[a] - c[a]});
  }
  for (std::size_t i = 0; i < s.layout.size(); ++i)
    if (pick(i)) best = std::min(best, (s.layout.node(i) - c).norm());
  return best;
}

}  // namespace

ProbeResult avoidance_probe(const ShadowTrace& shadow, const Probe& probe) {
  ProbeResult res;
  res.probe = probe;
  const int dim = shadow.dim;
  if (probe.center.size() != dim || !(probe.r0 > 0.0)) {
    res.note = "malformed probe";
    return res;
  }
  std::size_t k0 = shadow.times.size();
  for (std::size_t k = 0; k < shadow.times.size(); ++k)
    if (shadow.times[k] >= probe.t0 - 1e-9) {
      k0 = k;
      break;
    }
  if (k0 == shadow.times.size()) {
    res.note = "starts after the trace ends";
    return res;
  }
  if (!shadow.radial && std::abs(shadow.times[k0] - probe.t0) > 1e-9) {
    res.note = "start time is not a trace frame";
    return res;
  }
  const bool inside = probe.side == ProbeSide::kInside;
  const double c_norm = probe.center.norm();

  // Margin against the shadow alone; clearance from the domain boundary for outside probes.
  auto shadow_margin = [&](std::size_t k, double rho, double r) {
    if (shadow.radial) return inside ? rho - c_norm - r : c_norm - r - rho;
    const auto& m = shadow.mask[k];
    const auto& act = shadow.active[k];
    if (inside) return nearest(shadow, probe.center, true, [&](std::size_t i) { return !act[i] || !m[i]; }) - r;
    return nearest(shadow, probe.center, false, [&](std::size_t i) { return act[i] && m[i]; }) - r;
  };
  auto domain_clearance = [&](std::size_t k) {
    if (shadow.radial) return shadow.domain_radius - c_norm - probe.r0;
    const auto& act = shadow.active[k];
    return nearest(shadow, probe.center, true, [&](std::size_t i) { return !act[i]; }) - probe.r0;
  };

  const double rho0 = shadow.radial ? radial_radius_at(shadow, probe.t0) : 0.0;
  res.start_margin = shadow_margin(k0, rho0, probe.r0);
  if (!inside) res.start_margin = std::min(res.start_margin, domain_clearance(k0));
  if (!(res.start_margin >= 2.0 * shadow.h)) {
    res.note = inside ? "start disc closer than 2h to the shadow boundary"
                      : "start disc closer than 2h to the shadow or the domain boundary";
    return res;
  }
  res.admissible = true;
  const double t_ext = dim > 1 ? probe.t0 + probe.r0 * probe.r0 / (2.0 * (dim - 1))
                               : std::numeric_limits<double>::infinity();
  res.passed = true;
  for (std::size_t k = k0; k < shadow.times.size(); ++k) {
    const double t = shadow.times[k];
    if (t >= t_ext) break;
    const double rho = shadow.radial ? shadow.radius[k] : 0.0;
    const double m = shadow_margin(k, rho, probe_radius(probe, dim, t));
    res.times.push_back(t);
    res.margins.push_back(m);
    res.min_margin = std::min(res.min_margin, m);
    if (!(m > 0.0)) res.passed = false;
  }
  if (res.times.empty()) res.note = "vanishes before the next frame";
  return res;
}

WeakSolutionReport run_probes(const ShadowTrace& shadow, const std::vector<Probe>& probes) {
  WeakSolutionReport rep;
  rep.results.resize(probes.size());
  parallel_for(probes.size(), [&](std::size_t i) { rep.results[i] = avoidance_probe(shadow, probes[i]); });
  for (const auto& r : rep.results) {
    if (!r.admissible) {
      ++rep.rejected;
      continue;
    }
    const bool in = r.probe.side == ProbeSide::kInside;
    if (r.passed) ++(in ? rep.inside_pass : rep.outside_pass);
    else ++(in ? rep.inside_fail : rep.outside_fail);
    rep.min_margin = std::min(rep.min_margin, r.min_margin);
  }
  return rep;
}

std::string WeakSolutionReport::to_text() const {
  std::ostringstream os;
  os << "weak solution probes: " << (passed() ? "PASS" : "FAIL") << "\n"
     << "  inside:  " << inside_pass << " passed, " << inside_fail << " failed\n"
     << "  outside: " << outside_pass << " passed, " << outside_fail << " failed\n"
     << "  rejected: " << rejected << "\n"
     << "  min margin: " << num(min_margin) << "\n";
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    os << "  probe " << i << " " << (r.probe.side == ProbeSide::kInside ? "inside" : "outside") << " t0=" << num(r.probe.t0)
       << " r0=" << num(r.probe.r0) << " center=(";
    for (int a = 0; a < r.probe.center.size(); ++a) os << (a ? "," : "") << num(r.probe.center[a]);
    os << ") ";
    if (!r.admissible) os << "rejected: " << r.note;
    else os << (r.passed ? "pass" : "FAIL") << " start_margin=" << num(r.start_margin) << " min_margin=" << num(r.min_margin);
    os << "\n";
  }
  return os.str();
}

void WeakSolutionReport::write_csv(std::ostream& out) const {
  out << "probe,side,t,radius,margin\n";
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    const char* side = r.probe.side == ProbeSide::kInside ? "inside" : "outside";
    const int dim = static_cast<int>(r.probe.center.size());
    for (std::size_t k = 0; k < r.times.size(); ++k)
      out << i << ',' << side << ',' << num(r.times[k]) << ',' << num(probe_radius(r.probe, dim, r.times[k])) << ','
          << num(r.margins[k]) << '\n';
  }
}

std::vector<Probe> random_probes(const ShadowTrace& shadow, ProbeSide side, std::size_t count, std::uint64_t seed,
                                 double t_lo, double t_hi) {
  std::vector<std::size_t> frames;
  for (std::size_t k = 0; k < shadow.times.size(); ++k)
    if (shadow.times[k] >= t_lo && shadow.times[k] <= t_hi) frames.push_back(k);
  std::vector<Probe> out;
  if (frames.empty() || count == 0) return out;
  const int dim = shadow.dim;
  Vec lo(dim), hi(dim);
  if (shadow.radial) {
    lo.setConstant(-shadow.domain_radius);
    hi.setConstant(shadow.domain_radius);
  } else {
    lo = shadow.layout.origin;
    hi = shadow.layout.upper();
  }
  const double extent = (hi - lo).maxCoeff();
  sample_stream<Probe>(
      1000000,
      [&](std::uint64_t i) -> std::optional<Probe> {
        Probe p;
        p.side = side;
        const auto k = frames[std::min(frames.size() - 1, static_cast<std::size_t>(unit(seed, i, 0) * frames.size()))];
        p.t0 = shadow.times[k];
        p.center = random_point_in_box(lo, hi, mix_seed(seed, 7), i);
        p.r0 = 2.0 * shadow.h + unit(seed, i, 1) * 0.25 * extent;
        if (!avoidance_probe(shadow, p).admissible) return std::nullopt;
        return p;
      },
      [&](const Probe& p) {
        out.push_back(p);
        return out.size() >= count;
      });
  return out;
}

}  // namespace gmcf
