#include "gmcf/gmcf_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

namespace gmcf {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Fraction s in (0, 1] at which level(x + s * step) first drops to <= 0.
double crossing_fraction(const ScalarField& level, const Vec& x, const Vec& step) {
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    (level(x + mid * step) > 0.0 ? lo : hi) = mid;
  }
  return hi;
}

double link_value(const Link& l, const double* u, const double* ghost) {
  return l.node >= 0 ? u[l.node] : ghost[l.ghost];
}

// Second-order gradient on a nonuniform three-point stencil.
double centered_slope(double ul, double u, double ur, double hl, double hr) {
  return (hl * hl * (ur - u) + hr * hr * (u - ul)) / (hl * hr * (hl + hr));
}

RhsValue rhs_at(const GraphFlowState& s, std::size_t i, const double* u, const double* ghost) {
  const int n = s.dim();
  const double ui = u[i];
  RhsValue out;
  out.stencil_min = out.stencil_max = ui;
  auto seen = [&out](double v) {
    out.stencil_min = std::min(out.stencil_min, v);
    out.stencil_max = std::max(out.stencil_max, v);
  };
  double ul[2] = {}, ur[2] = {}, hl[2] = {1, 1}, hr[2] = {1, 1}, p[2] = {}, uxx[2] = {};
  for (int k = 0; k < n; ++k) {
    const Link& a = s.link(i, k, 0);
    const Link& b = s.link(i, k, 1);
    ul[k] = link_value(a, u, ghost);
    ur[k] = link_value(b, u, ghost);
    hl[k] = a.dist;
    hr[k] = b.dist;
    seen(ul[k]);
    seen(ur[k]);
    p[k] = centered_slope(ul[k], ui, ur[k], hl[k], hr[k]);
    uxx[k] = 2.0 / (hl[k] + hr[k]) * ((ur[k] - ui) / hr[k] - (ui - ul[k]) / hl[k]);
  }
  if (n == 1) {
    // u_xx / (1 + u_x^2) = (arctan u_x)_x, exactly monotone in conservative form.
    out.rate = 2.0 / (hl[0] + hr[0]) * (std::atan((ur[0] - ui) / hr[0]) - std::atan((ui - ul[0]) / hl[0]));
    out.gradient_norm = std::abs(p[0]);
    return out;
  }

  const double w2 = 1.0 + p[0] * p[0] + p[1] * p[1];
  double axx = 1.0 - p[0] * p[0] / w2;
  double ayy = 1.0 - p[1] * p[1] / w2;
  const double axy = -p[0] * p[1] / w2;
  const double c = std::abs(axy);
  out.gradient_norm = std::sqrt(w2 - 1.0);
  // Raises a diagonal coefficient to the level that keeps every stencil weight
  // nonnegative; records the update as augmented when it does.
  auto lift = [&out](double& a, double need) {
    if (a < need) {
      a = need;
      out.augmented = true;
    }
  };
  double uxy = 0.0;
  if (axy != 0.0) {
    const double h = s.grid.spacing;
    const std::int64_t sx = static_cast<std::int64_t>(s.grid.extents[1]);  // stride of axis 0
    const std::int64_t ii = static_cast<std::int64_t>(i);
    auto full = [&](int k, int side) {
      const Link& l = s.link(i, k, side);
      return l.node >= 0 && l.dist == h;
    };
    auto diag = [&](int dx, int dy) -> std::int64_t {
      const std::int64_t j = ii + dx * sx + dy;
      return s.active(static_cast<std::size_t>(j)) ? j : -1;
    };
    const int want = axy > 0.0 ? 1 : -1;
    bool have = false;
    if (full(0, 0) && full(0, 1) && full(1, 0) && full(1, 1)) {
      // 7-point: second difference along the diagonal (1, want).
      const std::int64_t a = diag(1, want), b = diag(-1, -want);
      if (a >= 0 && b >= 0) {
        lift(axx, c);
        lift(ayy, c);
        uxy = want * (u[a] + u[b] + 2.0 * ui - ul[0] - ur[0] - ul[1] - ur[1]) / (2.0 * h * h);
        seen(u[a]);
        seen(u[b]);
        have = true;
      }
    }
    if (!have) {
      // One-sided quadrant stencil on a quadrant whose diagonal weight is positive.
      const int order[2][2] = {{1, want}, {-1, -want}};
      for (const auto& q : order) {
        const int qx = q[0], qy = q[1];
        if (!full(0, qx > 0) || !full(1, qy > 0)) continue;
        const std::int64_t d = diag(qx, qy);
        if (d < 0) continue;
        const double ux = qx > 0 ? ur[0] : ul[0];
        const double uy = qy > 0 ? ur[1] : ul[1];
        uxy = qx * qy * (u[d] - ux - uy + ui) / (h * h);
        seen(u[d]);
        lift(axx, c * (hl[0] + hr[0]) / (2.0 * h));
        lift(ayy, c * (hl[1] + hr[1]) / (2.0 * h));
        have = true;
        break;
      }
    }
    if (!have) out.augmented = true;  // cross term dropped
  }
  double rate = axx * uxx[0] + ayy * uxx[1] + 2.0 * axy * uxy;
  out.rate = rate;
  return out;
}

std::vector<double> ghost_values(const GraphFlowState& s, double t) {
  std::vector<double> g(s.ghost_points.size());
  parallel_for(g.size(), [&](std::size_t i) { g[i] = s.phi_bc(s.ghost_points[i], t); });
  return g;
}

// The data are a function on the whole box, so a node held fixed next to the
// boundary takes their value at the node itself; linear data stay exact.
double fixed_value(const GraphFlowState& s, std::size_t i, double t) { return s.phi_bc(s.grid.node(i), t); }

}  // namespace

GraphFlowState make_state(const DomainSpec& domain, const Vec& lo, const Vec& hi, double h,
                          const std::function<double(const Vec&)>& u0, SpaceTimeFn phi_bc, double theta_min) {
  const int n = domain.dim();
  if (n < 1 || n > 2) throw Error(ErrorCode::kParameter, "make_state: full-grid solver supports dim 1 and 2");
  if (!(h > 0.0)) throw Error(ErrorCode::kParameter, "make_state: spacing must be positive");
  if (lo.size() != n || hi.size() != n || !lo.allFinite() || !hi.allFinite())
    throw Error(ErrorCode::kParameter, "make_state: grid box must be finite and match the domain dimension");
  if (!(theta_min > 0.0 && theta_min < 1.0)) throw Error(ErrorCode::kParameter, "make_state: theta_min in (0,1)");

  std::vector<std::uint64_t> ext(n);
  for (int k = 0; k < n; ++k) ext[k] = static_cast<std::uint64_t>(std::ceil((hi[k] - lo[k]) / h - 1e-9)) + 1;
  GraphFlowState s;
  s.grid = Grid(ext, h, lo, kNaN);
  s.phi_bc = std::move(phi_bc);
  const std::size_t total = s.grid.size();
  s.kind.assign(total, NodeKind::kExterior);
  s.links.assign(total * n * 2, Link{});
  s.source.assign(total, -1);
  s.capped.assign(total, 0);

  const ScalarField level = signed_distance(domain);
  std::vector<double> lv(total);
  parallel_for(total, [&](std::size_t i) { lv[i] = level(s.grid.node(i)); });

  std::vector<std::int64_t> stride(n, 1);
  for (int k = n - 2; k >= 0; --k) stride[k] = stride[k + 1] * static_cast<std::int64_t>(ext[k + 1]);

  // Per-node ghost candidates computed in parallel, then numbered in node order.
  struct Cut {
    int axis;
    int side;
    double frac;
    Vec point;
  };
  std::vector<std::vector<Cut>> cuts(total);
  std::vector<std::uint8_t> edge(total, 0);
  parallel_for(total, [&](std::size_t i) {
    if (!(lv[i] > 0.0)) return;
    const auto idx = s.grid.unflatten(i);
    const Vec x = s.grid.node(i);
    for (int k = 0; k < n; ++k) {
      for (int side = 0; side < 2; ++side) {
        const std::int64_t j = idx[k] + (side ? 1 : -1);
        if (j < 0 || j >= static_cast<std::int64_t>(ext[k])) {
          edge[i] = 1;
          continue;
        }
        const std::size_t nb = static_cast<std::size_t>(static_cast<std::int64_t>(i) + (side ? 1 : -1) * stride[k]);
        if (lv[nb] > 0.0) continue;
        Vec stepv = Vec::Zero(n);
        stepv[k] = side ? h : -h;
        const double frac = crossing_fraction(level, x, stepv);
        cuts[i].push_back(Cut{k, side, frac, x + frac * stepv});
      }
    }
  });

  for (std::size_t i = 0; i < total; ++i) {
    if (!(lv[i] > 0.0)) continue;
    s.kind[i] = edge[i] ? NodeKind::kFixed : NodeKind::kInterior;
    const auto idx = s.grid.unflatten(i);
    for (int k = 0; k < n; ++k) {
      for (int side = 0; side < 2; ++side) {
        const std::int64_t j = idx[k] + (side ? 1 : -1);
        if (j < 0 || j >= static_cast<std::int64_t>(ext[k])) continue;
        Link& l = s.links[(i * n + k) * 2 + side];
        l.node = static_cast<std::int64_t>(i) + (side ? 1 : -1) * stride[k];
        l.dist = h;
      }
    }
    double nearest = 2.0;
    for (const Cut& c : cuts[i]) {
      Link& l = s.links[(i * n + c.axis) * 2 + c.side];
      l.node = -1;
      l.ghost = static_cast<std::int32_t>(s.ghost_points.size());
      l.dist = c.frac * h;
      s.ghost_points.push_back(c.point);
      if (c.frac < theta_min && c.frac < nearest) {
        nearest = c.frac;
        s.source[i] = l.ghost;
      }
    }
    if (s.source[i] >= 0) s.kind[i] = NodeKind::kFixed;
  }
  for (std::size_t i = 0; i < total; ++i)
    if (s.kind[i] == NodeKind::kInterior) s.interior.push_back(i);

  parallel_for(total, [&](std::size_t i) {
    if (s.kind[i] == NodeKind::kInterior) s.grid.values[i] = u0(s.grid.node(i));
    else if (s.kind[i] == NodeKind::kFixed) s.grid.values[i] = fixed_value(s, i, 0.0);
  });
  return s;
}

double max_stable_dt(const GraphFlowState& s) {
  const int n = s.dim();
  double worst = 0.0;
  for (std::size_t i : s.interior) {
    double c = 0.0;
    for (int k = 0; k < n; ++k) c += 2.0 / (s.link(i, k, 0).dist * s.link(i, k, 1).dist);
    worst = std::max(worst, c);
  }
  return worst > 0.0 ? 1.0 / worst : std::numeric_limits<double>::infinity();
}

RhsValue gmcf_rhs(const GraphFlowState& s, std::size_t node) {
  if (s.kind.at(node) != NodeKind::kInterior) throw Error(ErrorCode::kParameter, "gmcf_rhs: node is not interior");
  std::vector<double> ghost(s.ghost_points.size());
  for (std::size_t j = 0; j < ghost.size(); ++j) ghost[j] = 0.0;
  const int n = s.dim();
  for (int k = 0; k < n; ++k)
    for (int side = 0; side < 2; ++side) {
      const Link& l = s.link(node, k, side);
      if (l.node < 0) ghost[l.ghost] = s.phi_bc(s.ghost_points[l.ghost], s.t);
    }
  return rhs_at(s, node, s.grid.values.data(), ghost.data());
}

StepReport step(GraphFlowState& s, double dt, double h_cap, bool check_max_principle) {
  const double limit = max_stable_dt(s);
  if (!(dt > 0.0) || dt > limit * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "step: dt = " << dt << " violates the stability bound " << limit;
    throw Error(ErrorCode::kParameter, os.str());
  }
  const std::vector<double> ghost = ghost_values(s, s.t);
  const std::vector<double>& u = s.grid.values;
  std::vector<double> next = u;
  std::vector<std::uint8_t> flags(s.interior.size(), 0);
  const double t_next = s.t + dt;

  parallel_for(s.interior.size(), [&](std::size_t m) {
    const std::size_t i = s.interior[m];
    const RhsValue r = rhs_at(s, i, u.data(), ghost.data());
    const double v = u[i] + dt * r.rate;
    next[i] = v;
    std::uint8_t f = r.augmented ? 1 : 0;
    if (check_max_principle) {
      const double tol = 1e-12 * std::max(1.0, std::max(std::abs(r.stencil_min), std::abs(r.stencil_max)));
      if (v < r.stencil_min - tol || v > r.stencil_max + tol) f |= 2;
    }
    flags[m] = f;
  });
  parallel_for(s.size(), [&](std::size_t i) {
    if (s.kind[i] == NodeKind::kFixed) next[i] = fixed_value(s, i, t_next);
  });

  StepReport rep;
  for (std::size_t i = 0; i < next.size(); ++i) {
    if (s.kind[i] == NodeKind::kExterior) continue;
    if (!std::isfinite(next[i])) {
      std::ostringstream os;
      os << "non-finite value at node " << i << " (x = " << s.grid.node(i).transpose() << "), t = " << t_next;
      throw SolverAbort(os.str(), s);
    }
  }
  for (std::uint8_t f : flags) {
    rep.augmented += f & 1;
    rep.max_principle_violations += (f >> 1) & 1;
  }
  for (std::size_t i = 0; i < next.size(); ++i) {
    if (s.kind[i] == NodeKind::kExterior) continue;
    if (std::abs(next[i]) >= h_cap) {
      next[i] = std::copysign(h_cap, next[i]);
      s.capped[i] = 1;
    }
    rep.capped += s.capped[i];
  }
  s.grid.values = std::move(next);
  s.t = t_next;
  return rep;
}

namespace {

// Quadrature of the uniform ball of radius eps in R^(n+1), projected onto
// R^n: sub-points on a lattice of spacing h / kSub, each with its area and the
// half-length of the vertical chord of the ball above it. Values at sub-points
// are multilinear interpolants of the lattice values listed in `offsets`.
struct MedianStencil {
  std::vector<std::vector<std::int64_t>> offsets;
  std::vector<double> area;
  std::vector<double> half;
  std::vector<std::uint32_t> first;  // interpolation entries of sub-point q: [first[q], first[q + 1])
  std::vector<std::uint32_t> slot;
  std::vector<double> weight;
  double target = 0.0;  // sum area * half
  double dt = 0.0;      // half the second moment of the interpolated quadrature
};

MedianStencil build_median_stencil(int n, double h, double eps) {
  constexpr int kSub = 6;
  MedianStencil st;
  const std::int64_t reach = static_cast<std::int64_t>(std::ceil(eps / h * kSub));
  const std::int64_t side = 2 * reach + 1;
  std::int64_t count = 1;
  for (int k = 0; k < n; ++k) count *= side;
  const double sub_area = std::pow(h / kSub, n);
  std::map<std::vector<std::int64_t>, std::uint32_t> slots;
  double total = 0.0, moment = 0.0;
  st.first.push_back(0);
  for (std::int64_t c = 0; c < count; ++c) {
    std::vector<double> x(n);
    std::int64_t r = c;
    double r2 = 0.0;
    for (int k = n - 1; k >= 0; --k) {
      x[k] = h * (static_cast<double>(r % side - reach) + 0.5) / kSub;
      r /= side;
      r2 += x[k] * x[k];
    }
    if (r2 >= eps * eps) continue;
    std::vector<std::int64_t> base(n);
    std::vector<double> frac(n);
    for (int k = 0; k < n; ++k) {
      base[k] = static_cast<std::int64_t>(std::floor(x[k] / h));
      frac[k] = x[k] / h - static_cast<double>(base[k]);
    }
    for (int corner = 0; corner < (1 << n); ++corner) {
      std::vector<std::int64_t> o = base;
      double w = 1.0;
      for (int k = 0; k < n; ++k) {
        const bool up = (corner >> k) & 1;
        o[k] += up;
        w *= up ? frac[k] : 1.0 - frac[k];
      }
      if (w == 0.0) continue;
      auto [it, fresh] = slots.emplace(o, static_cast<std::uint32_t>(st.offsets.size()));
      if (fresh) st.offsets.push_back(o);
      st.slot.push_back(it->second);
      st.weight.push_back(w);
    }
    st.first.push_back(static_cast<std::uint32_t>(st.slot.size()));
    const double half = std::sqrt(eps * eps - r2);
    st.area.push_back(sub_area);
    st.half.push_back(half);
    st.target += sub_area * half;
    total += sub_area;
    // Interpolating x0^2 linearly adds h^2 frac (1 - frac).
    moment += sub_area * (x[0] * x[0] + h * h * frac[0] * (1.0 - frac[0]));
  }
  st.dt = total > 0.0 ? 0.5 * moment / total : 0.0;
  return st;
}

// Smallest tried radius whose stencil advances the flow by at least dt.
MedianStencil median_stencil_for(int n, double h, double dt) {
  double eps = std::sqrt(2.0 * (n + 2) * dt);
  MedianStencil st = build_median_stencil(n, h, eps);
  for (int it = 0; it < 6 && st.dt > 0.0; ++it) {
    eps *= std::sqrt(dt / st.dt);
    st = build_median_stencil(n, h, eps);
  }
  for (int it = 0; it < 200 && st.dt < dt; ++it) {
    eps *= 1.0 + 1e-3;
    st = build_median_stencil(n, h, eps);
  }
  if (eps < h || st.dt < dt) {
    std::ostringstream os;
    os << "median_step: dt = " << dt << " needs a ball radius below the grid spacing " << h;
    throw Error(ErrorCode::kParameter, os.str());
  }
  return st;
}

// Root m of sum area * clamp(v - m + half, 0, 2 half) = target. The left side
// is piecewise linear and nonincreasing in m: Newton steps, bisection when a
// step leaves the bracket.
double ball_median(const MedianStencil& st, const std::vector<double>& v) {
  double lo = *std::min_element(v.begin(), v.end());
  double hi = *std::max_element(v.begin(), v.end());
  if (!(hi > lo)) return lo;
  double m = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    double mass = 0.0, slope = 0.0;
    for (std::size_t q = 0; q < v.size(); ++q) {
      const double hq = st.half[q];
      const double y = v[q] - m + hq;
      if (y <= 0.0) continue;
      if (y >= 2.0 * hq) {
        mass += st.area[q] * 2.0 * hq;
      } else {
        mass += st.area[q] * y;
        slope += st.area[q];
      }
    }
    const double f = mass - st.target;
    if (f == 0.0) return m;
    (f > 0.0 ? lo : hi) = m;
    double next = slope > 0.0 ? m + f / slope : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == m || !(hi > lo)) return m;
    m = next;
  }
  return m;
}

}  // namespace

double median_step_dt(const GraphFlowState& s, double radius_cells) {
  if (!(radius_cells >= 1.0)) throw Error(ErrorCode::kParameter, "median_step_dt: radius must be at least one cell");
  return build_median_stencil(s.dim(), s.grid.spacing, radius_cells * s.grid.spacing).dt;
}

StepReport median_step(GraphFlowState& s, double dt, double h_cap, bool check_max_principle) {
  if (!(dt > 0.0)) throw Error(ErrorCode::kParameter, "median_step: dt must be positive");
  const int n = s.dim();
  const MedianStencil st = median_stencil_for(n, s.grid.spacing, dt);
  const std::vector<double>& u = s.grid.values;
  std::vector<double> next = u;
  std::vector<std::uint8_t> flags(s.interior.size(), 0);
  const double t_next = s.t + dt;

  parallel_for(s.interior.size(), [&](std::size_t m) {
    const std::size_t i = s.interior[m];
    const auto idx = s.grid.unflatten(i);
    std::vector<double> vals(st.offsets.size());
    std::vector<std::int64_t> j(n);
    for (std::size_t o = 0; o < st.offsets.size(); ++o) {
      bool inside = true;
      for (int k = 0; k < n; ++k) {
        j[k] = idx[k] + st.offsets[o][k];
        inside = inside && j[k] >= 0 && j[k] < static_cast<std::int64_t>(s.grid.extents[k]);
      }
      const std::size_t f = inside ? s.grid.flat(j) : 0;
      if (inside && s.active(f)) {
        vals[o] = u[f];
      } else {
        Vec x = s.grid.origin;
        for (int k = 0; k < n; ++k) x[k] += s.grid.spacing * static_cast<double>(j[k]);
        vals[o] = s.phi_bc(x, s.t);
      }
    }
    std::vector<double> sub(st.area.size());
    for (std::size_t q = 0; q < sub.size(); ++q) {
      double acc = 0.0;
      for (std::uint32_t e = st.first[q]; e < st.first[q + 1]; ++e) acc += st.weight[e] * vals[st.slot[e]];
      sub[q] = acc;
    }
    // The stencil advances by st.dt >= dt; the convex blend keeps monotonicity.
    const double v = u[i] + (dt / st.dt) * (ball_median(st, sub) - u[i]);
    next[i] = v;
    if (check_max_principle) {
      const auto [mn, mx] = std::minmax_element(vals.begin(), vals.end());
      if (v < *mn || v > *mx) flags[m] = 2;
    }
  });
  parallel_for(s.size(), [&](std::size_t i) {
    if (s.kind[i] == NodeKind::kFixed) next[i] = fixed_value(s, i, t_next);
  });

  StepReport rep;
  for (std::size_t i = 0; i < next.size(); ++i) {
    if (s.kind[i] == NodeKind::kExterior) continue;
    if (!std::isfinite(next[i])) {
      std::ostringstream os;
      os << "non-finite value at node " << i << " (x = " << s.grid.node(i).transpose() << "), t = " << t_next;
      throw SolverAbort(os.str(), s);
    }
  }
  for (std::uint8_t f : flags) rep.max_principle_violations += (f >> 1) & 1;
  for (std::size_t i = 0; i < next.size(); ++i) {
    if (s.kind[i] == NodeKind::kExterior) continue;
    if (std::abs(next[i]) >= h_cap) {
      next[i] = std::copysign(h_cap, next[i]);
      s.capped[i] = 1;
    }
    rep.capped += s.capped[i];
  }
  s.grid.values = std::move(next);
  s.t = t_next;
  return rep;
}

Vec node_gradient(const GraphFlowState& s, const std::vector<double>& u, std::size_t i) {
  const int n = s.dim();
  Vec g = Vec::Zero(n);
  auto side_value = [&](const Link& l, double* v) {
    if (l.node >= 0) {
      if (s.kind[l.node] == NodeKind::kExterior) return false;
      *v = u[l.node];
      return true;
    }
    if (l.ghost < 0) return false;
    *v = s.phi_bc(s.ghost_points[l.ghost], s.t);
    return true;
  };
  for (int k = 0; k < n; ++k) {
    const Link& a = s.link(i, k, 0);
    const Link& b = s.link(i, k, 1);
    double ul = 0.0, ur = 0.0;
    const bool has_l = a.dist > 0.0 && side_value(a, &ul);
    const bool has_r = b.dist > 0.0 && side_value(b, &ur);
    if (has_l && has_r) g[k] = centered_slope(ul, u[i], ur, a.dist, b.dist);
    else if (has_r) g[k] = (ur - u[i]) / b.dist;
    else if (has_l) g[k] = (u[i] - ul) / a.dist;
  }
  return g;
}

StepDiagnostics diagnose(const GraphFlowState& s, double dt) {
  StepDiagnostics d;
  d.t = s.t;
  d.dt = dt;
  d.min_u = std::numeric_limits<double>::infinity();
  std::vector<double> grads(s.interior.size());
  parallel_for(s.interior.size(), [&](std::size_t m) {
    grads[m] = node_gradient(s, s.grid.values, s.interior[m]).norm();
  });
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s.kind[i] == NodeKind::kExterior) continue;
    d.max_abs_u = std::max(d.max_abs_u, std::abs(s.grid.values[i]));
    d.min_u = std::min(d.min_u, s.grid.values[i]);
  }
  for (double g : grads) d.max_grad = std::max(d.max_grad, g);
  return d;
}

Trajectory solve(const GraphFlowState& initial, const SolverConfig& config) {
  if (!(config.cfl > 0.0 && config.cfl <= 1.0)) throw Error(ErrorCode::kParameter, "solve: cfl must lie in (0, 1]");
  if (!(config.t_end >= initial.t)) throw Error(ErrorCode::kParameter, "solve: t_end before the initial time");
  GraphFlowState s = initial;
  const bool median = config.scheme == Scheme::kWideMedian;
  const double limit = median ? median_step_dt(s, config.median_radius) : max_stable_dt(s);
  double dt0 = config.dt > 0.0 ? config.dt : (median ? limit : config.cfl * limit);
  if (!median && dt0 > limit * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "solve: dt = " << dt0 << " violates the stability bound " << limit;
    throw Error(ErrorCode::kParameter, os.str());
  }
  if (!std::isfinite(dt0)) dt0 = config.t_end - s.t;
  const double nominal = dt0;

  std::vector<double> targets;
  for (double t : config.output_times)
    if (t > s.t && t < config.t_end) targets.push_back(t);
  targets.push_back(config.t_end);
  std::sort(targets.begin(), targets.end());
  targets.erase(std::unique(targets.begin(), targets.end()), targets.end());

  Trajectory traj;
  traj.times.push_back(s.t);
  traj.frames.push_back(s.grid);
  traj.diagnostics.push_back(diagnose(s, 0.0));
  const std::size_t stride = std::max<std::size_t>(1, config.diagnostics_stride);
  for (double target : targets) {
    if (median) {
      // Equal steps per interval keep the ball radius near its nominal value.
      const double span = target - s.t;
      const double count = std::ceil(span / nominal - 1e-9);
      dt0 = count >= 1.0 ? span / count : nominal;
    }
    while (s.t < target) {
      double dt = dt0;
      bool last = false;
      if (s.t + dt >= target - (median ? 1e-9 * dt0 : 1e-14 * std::max(1.0, std::abs(target)))) {
        dt = target - s.t;
        last = true;
      }
      if (dt <= 0.0) break;
      const StepReport rep = median ? median_step(s, dt, config.h_cap, config.check_max_principle)
                                    : step(s, dt, config.h_cap, config.check_max_principle);
      if (last) s.t = target;
      ++traj.steps;
      traj.augmented_updates += rep.augmented;
      traj.max_principle_violations += rep.max_principle_violations;
      if (traj.steps % stride == 0 || (last && target == targets.back())) traj.diagnostics.push_back(diagnose(s, dt));
    }
    traj.times.push_back(s.t);
    traj.frames.push_back(s.grid);
  }
  traj.capped = s.capped;
  traj.final_state = std::move(s);
  return traj;
}

double residual(const SpaceTimeFn& exact, const GraphFlowState& state, const SpaceTimeFn& exact_dt, bool uncut_only) {
  GraphFlowState s = state;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (s.kind[i] != NodeKind::kExterior) s.grid.values[i] = exact(s.grid.node(i), s.t);
  const std::vector<double> ghost = ghost_values(s, s.t);
  std::vector<double> err(s.interior.size());
  parallel_for(s.interior.size(), [&](std::size_t m) {
    const std::size_t i = s.interior[m];
    if (uncut_only) {
      for (int k = 0; k < s.dim(); ++k)
        for (int side = 0; side < 2; ++side)
          if (s.link(i, k, side).node < 0 || s.kind[s.link(i, k, side).node] != NodeKind::kInterior) {
            err[m] = 0.0;
            return;
          }
    }
    const Vec x = s.grid.node(i);
    const double rate = rhs_at(s, i, s.grid.values.data(), ghost.data()).rate;
    double ut;
    if (exact_dt) {
      ut = exact_dt(x, s.t);
    } else {
      const double tau = 1e-5;
      ut = (exact(x, s.t + tau) - exact(x, s.t - tau)) / (2.0 * tau);
    }
    err[m] = std::abs(rate - ut);
  });
  double worst = 0.0;
  for (double e : err) worst = std::max(worst, e);
  return worst;
}

// ---------------------------------------------------------------------------
// Radial reduction

RadialTrajectory radial_solve(const std::function<double(double)>& u0, int n, double rho,
                              const std::function<double(double)>& bc, const SolverConfig& config) {
  if (n < 1) throw Error(ErrorCode::kParameter, "radial_solve: base dimension must be >= 1");
  if (!(rho > 0.0) || !(config.h > 0.0)) throw Error(ErrorCode::kParameter, "radial_solve: rho and h must be positive");
  if (!(config.cfl > 0.0 && config.cfl <= 1.0)) throw Error(ErrorCode::kParameter, "radial_solve: cfl must lie in (0, 1]");
  const std::size_t cells = static_cast<std::size_t>(std::max(2.0, std::round(rho / config.h)));
  const double h = rho / static_cast<double>(cells);
  const double limit = h * h / std::max(2.0 * n, n + 1.0);
  const double dt0 = config.dt > 0.0 ? config.dt : config.cfl * limit;
  if (dt0 > limit * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "radial_solve: dt = " << dt0 << " violates the stability bound " << limit;
    throw Error(ErrorCode::kParameter, os.str());
  }

  RadialTrajectory out;
  out.r.resize(cells + 1);
  std::vector<double> u(cells + 1), next(cells + 1), flux(cells);
  for (std::size_t i = 0; i <= cells; ++i) {
    out.r[i] = h * static_cast<double>(i);
    u[i] = i == cells ? bc(0.0) : u0(out.r[i]);
  }
  out.capped.assign(cells + 1, 0);
  const double cap = config.h_cap;
  for (std::size_t i = 0; i <= cells; ++i)
    if (std::abs(u[i]) >= cap) {
      u[i] = std::copysign(cap, u[i]);
      out.capped[i] = 1;
    }

  auto diag = [&](double t, double dt) {
    StepDiagnostics d;
    d.t = t;
    d.dt = dt;
    d.min_u = *std::min_element(u.begin(), u.end());
    for (std::size_t i = 0; i <= cells; ++i) d.max_abs_u = std::max(d.max_abs_u, std::abs(u[i]));
    for (std::size_t i = 0; i < cells; ++i) d.max_grad = std::max(d.max_grad, std::abs(u[i + 1] - u[i]) / h);
    return d;
  };

  std::vector<double> targets;
  for (double t : config.output_times)
    if (t > 0.0 && t < config.t_end) targets.push_back(t);
  targets.push_back(config.t_end);
  std::sort(targets.begin(), targets.end());
  targets.erase(std::unique(targets.begin(), targets.end()), targets.end());

  double t = 0.0;
  out.times.push_back(t);
  out.frames.push_back(u);
  out.diagnostics.push_back(diag(t, 0.0));
  const std::size_t stride = std::max<std::size_t>(1, config.diagnostics_stride);
  const double nm1 = n - 1.0;
  for (double target : targets) {
    while (t < target) {
      double dt = dt0;
      bool last = false;
      if (t + dt >= target - 1e-14 * std::max(1.0, target)) {
        dt = target - t;
        last = true;
      }
      if (dt <= 0.0) break;
      for (std::size_t i = 0; i < cells; ++i) flux[i] = std::atan((u[i + 1] - u[i]) / h);
      next[0] = u[0] + dt * 2.0 * n * (u[1] - u[0]) / (h * h);
      for (std::size_t i = 1; i < cells; ++i) {
        const double pl = (u[i] - u[i - 1]) / h;
        const double c = nm1 / out.r[i];
        double adv;
        if (1.0 / (h * (1.0 + pl * pl)) >= 0.5 * c) adv = c * (u[i + 1] - u[i - 1]) / (2.0 * h);
        else adv = c * (u[i + 1] - u[i]) / h;
        next[i] = u[i] + dt * ((flux[i] - flux[i - 1]) / h + adv);
      }
      const double t_next = last ? target : t + dt;
      next[cells] = bc(t_next);
      for (std::size_t i = 0; i <= cells; ++i) {
        if (!std::isfinite(next[i])) {
          std::ostringstream os;
          os << "radial_solve: non-finite value at r = " << out.r[i] << ", t = " << t_next;
          throw Error(ErrorCode::kSolver, os.str());
        }
        if (std::abs(next[i]) >= cap) {
          next[i] = std::copysign(cap, next[i]);
          out.capped[i] = 1;
        }
      }
      u.swap(next);
      t = t_next;
      ++out.steps;
      if (out.steps % stride == 0 || (last && target == targets.back())) out.diagnostics.push_back(diag(t, dt));
    }
    out.times.push_back(t);
    out.frames.push_back(u);
  }
  return out;
}

}  // namespace gmcf
