#include "gmcf/cli_runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#ifndef GMCF_VERSION
#define GMCF_VERSION "0.0.0"
#endif

namespace gmcf::cli {

namespace fs = std::filesystem;

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string frame_name(std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%04zu.gmcf", k);
  return buf;
}

// Collects output files relative to the run directory.
class Outputs {
 public:
  explicit Outputs(fs::path root) : root_(std::move(root)) {}

  std::ofstream open(const std::string& rel) {
    const fs::path p = root_ / rel;
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + p.string());
    files_.push_back(rel);
    return out;
  }
  void text(const std::string& rel, const std::string& body) { open(rel) << body; }
  void grid(const std::string& rel, const Grid& g) {
    auto out = open(rel);
    write_grid(out, g);
  }
  void frames(const std::string& dir, const std::vector<double>& times, const std::vector<Grid>& frames) {
    auto index = open(dir + "/frames.csv");
    index << "index,t,file\n";
    for (std::size_t k = 0; k < frames.size(); ++k) {
      index << k << ',' << num(times[k]) << ',' << frame_name(k) << '\n';
      grid(dir + "/" + frame_name(k), frames[k]);
    }
  }
  const std::vector<std::string>& files() const { return files_; }
  const fs::path& root() const { return root_; }

 private:
  fs::path root_;
  std::vector<std::string> files_;
};

SolverConfig solver_from(const FlowSection& f) {
  SolverConfig s;
  s.h = f.h;
  s.dt = f.dt;
  s.cfl = f.cfl;
  s.t_end = f.t_end;
  s.output_times = f.outputs;
  s.h_cap = f.h_cap;
  s.theta_min = f.theta_min;
  s.scheme = parse_scheme(f.scheme);
  s.median_radius = f.median_radius;
  s.diagnostics_stride = static_cast<std::size_t>(f.diagnostics_stride);
  s.check_max_principle = f.check_max_principle;
  return s;
}

std::pair<Vec, Vec> grid_box(const DomainSpec& domain, double h) {
  auto [lo, hi] = bounding_box(domain);
  if (!lo.allFinite() || !hi.allFinite()) throw Error(ErrorCode::kConfig, "flow needs a bounded domain");
  for (int k = 0; k < lo.size(); ++k) {
    lo[k] = std::floor(lo[k] / h) * h;
    hi[k] = std::ceil(hi[k] / h) * h;
  }
  return {lo, hi};
}

int run_smooth(const RunConfig& c, Outputs& out, std::ostringstream& summary) {
  const SmoothSection& s = c.smooth;
  std::ostringstream report;
  if (s.g_dominance > 0.0) {
    const BoundaryAlteration g = build_g(s.g_dominance, s.g_window);
    report << "g_dominance: " << num(g.curvature_dominance) << "\n"
           << "g_window: " << num(g.window) << "\n"
           << "g_slope: " << num(g.slope) << "\n";
  }
  const DomainSpec a = parse_domain(s.a);
  const DomainSpec b = parse_domain(s.b);
  const CurvatureCone cone = CurvatureCone::from_name(s.cone);
  SmoothingOptions opt;
  opt.inclusion_samples = s.inclusion_samples;
  opt.curvature_samples = s.curvature_samples;
  opt.seed = c.run.seed;
  const SmoothedIntersection r = smooth_intersection(a, b, s.eps, cone, opt);

  const int dim = a.dim();
  const double extent = (r.box_hi - r.box_lo).maxCoeff();
  const double spacing = extent / static_cast<double>(s.resolution - 1);
  std::vector<std::uint64_t> ext(dim);
  for (int k = 0; k < dim; ++k)
    ext[k] = static_cast<std::uint64_t>(std::ceil((r.box_hi[k] - r.box_lo[k]) / spacing)) + 1;
  Grid phi(ext, spacing, r.box_lo);
  parallel_for(phi.size(), [&](std::size_t i) { phi.values[i] = r.phi(phi.node(i)); });
  out.grid("phi.gmcf", phi);

  {
    auto csv = out.open("boundary.csv");
    const char* axes[] = {"x", "y", "z"};
    for (int k = 0; k < dim; ++k) csv << axes[k] << ',';
    for (int k = 1; k < dim; ++k) csv << "kappa" << k << ',';
    csv << "margin\n";
    const auto& cr = r.curvature;
    for (std::size_t i = 0; i < cr.points.size(); ++i) {
      for (int k = 0; k < dim; ++k) csv << num(cr.points[i][k]) << ',';
      for (int k = 0; k < cr.curvatures[i].size(); ++k) csv << num(cr.curvatures[i][k]) << ',';
      csv << num(cr.margins[i]) << '\n';
    }
  }

  report << "domain_a: " << a.describe() << "\n"
         << "domain_b: " << b.describe() << "\n"
         << "eps: " << num(r.eps) << "\n"
         << "eps_effective: " << num(r.eps_effective) << "\n"
         << "delta_selected: " << num(r.delta) << "\n"
         << "delta_halvings: " << r.selection.halvings << "\n"
         << "corner_samples: " << r.corner.size() << "\n"
         << r.inclusions.to_text() << r.curvature.to_text()
         << "result: " << (r.passed() ? "PASS" : "FAIL") << "\n";
  out.text("report.txt", report.str());
  summary << "smooth: " << (r.passed() ? "PASS" : "FAIL");
  return r.passed() ? kExitOk : kExitValidation;
}

int run_flow(const RunConfig& c, Outputs& out, std::ostringstream& summary) {
  const FlowSection& f = c.flow;
  const DomainSpec domain = parse_domain(f.domain);
  const SpaceTimeFn init = lookup_expression(f.initial);
  const SpaceTimeFn bc = lookup_expression(f.boundary);
  const auto [lo, hi] = grid_box(domain, f.h);
  const GraphFlowState state =
      make_state(domain, lo, hi, f.h, [init](const Vec& x) { return init(x, 0.0); }, bc, f.theta_min);
  Trajectory tr;
  try {
    tr = solve(state, solver_from(f));
  } catch (const SolverAbort& e) {
    out.grid("abort_state.gmcf", e.last_state().grid);
    throw;
  }
  out.frames("frames", tr.times, tr.frames);
  {
    auto csv = out.open("diagnostics.csv");
    csv << "t,max_abs_u,min_u,max_grad,dt\n";
    for (const auto& d : tr.diagnostics)
      csv << num(d.t) << ',' << num(d.max_abs_u) << ',' << num(d.min_u) << ',' << num(d.max_grad) << ',' << num(d.dt)
          << '\n';
  }
  std::size_t capped = 0;
  for (auto v : tr.capped) capped += v;
  const bool ok = !f.check_max_principle || tr.max_principle_violations == 0;
  std::ostringstream report;
  report << "domain: " << domain.describe() << "\n"
         << "nodes: " << state.size() << "\n"
         << "interior_nodes: " << state.interior.size() << "\n"
         << "steps: " << tr.steps << "\n"
         << "frames: " << tr.frames.size() << "\n"
         << "augmented_updates: " << tr.augmented_updates << "\n"
         << "max_principle_checked: " << (f.check_max_principle ? "true" : "false") << "\n"
         << "max_principle_violations: " << tr.max_principle_violations << "\n"
         << "capped_nodes: " << capped << "\n"
         << "result: " << (ok ? "PASS" : "FAIL") << "\n";
  out.text("report.txt", report.str());
  summary << "flow: " << tr.steps << " steps, " << tr.frames.size() << " frames";
  return ok ? kExitOk : kExitValidation;
}

CascadeResult cascade_from(const RunConfig& c) {
  const CascadeSection& s = c.cascade;
  CascadeProblem p;
  const SpaceTimeFn init = lookup_expression(s.initial);
  p.u0 = [init](const Vec& x) { return init(x, 0.0); };
  p.radial_dim = static_cast<int>(s.radial_dim);
  p.rho = s.rho;
  if (p.radial_dim == 0) p.omega = parse_domain(s.domain);
  CascadeConfig cfg;
  cfg.schedule = s.schedule;
  cfg.eps = s.eps;
  cfg.stabilization_tol = s.tol;
  cfg.h_inf = s.h_inf;
  cfg.solver.h = s.h;
  cfg.solver.cfl = s.cfl;
  cfg.solver.scheme = parse_scheme(s.scheme);
  cfg.solver.t_end = s.t_end;
  cfg.solver.output_times = s.outputs;
  cfg.solver.h_cap = s.h_cap;
  cfg.solver.diagnostics_stride = 1000000;
  cfg.cone = CurvatureCone::from_name(s.cone);
  cfg.seed = c.run.seed;
  cfg.smoothing.seed = c.run.seed;
  return run_cascade(p, cfg);
}

std::string cascade_text(const CascadeResult& r) {
  std::ostringstream os;
  os << "mode: " << (r.radial ? "radial" : "grid") << "\n"
     << "dimension: " << r.dim << "\n"
     << "frames: " << r.times.size() << "\n";
  for (std::size_t s = 0; s < r.reports.size(); ++s) {
    const auto& rep = r.reports[s];
    os << "stage_" << s << "_R: " << num(rep.big_r) << "\n"
       << "stage_" << s << "_domain: " << rep.domain << "\n"
       << "stage_" << s << "_truncated: " << (rep.truncated ? "true" : "false") << "\n"
       << "stage_" << s << "_mollify_radius: " << num(rep.mollify_radius) << "\n"
       << "stage_" << s << "_mollify_error: " << num(rep.mollify_error) << "\n"
       << "stage_" << s << "_steps: " << rep.steps << "\n"
       << "stage_" << s << "_augmented_updates: " << rep.augmented_updates << "\n"
       << "stage_" << s << "_capped_nodes: " << rep.capped << "\n";
  }
  os << "cells_converged: " << r.count(CellStatus::kConverged) << "\n"
     << "cells_escaped: " << r.count(CellStatus::kEscaped) << "\n"
     << "cells_ambiguous: " << r.count(CellStatus::kAmbiguous) << "\n"
     << "cells_oscillating: " << r.count(CellStatus::kOscillating) << "\n"
     << "monotonicity_defect: " << num(r.monotonicity_defect()) << "\n";
  return os.str();
}

int run_cascade_cmd(const RunConfig& c, Outputs& out, std::ostringstream& summary) {
  const CascadeResult r = cascade_from(c);
  if (c.cascade.dump_stages) {
    for (std::size_t s = 0; s < r.stages.size(); ++s) {
      char dir[32];
      std::snprintf(dir, sizeof dir, "stage_%02zu", s);
      out.frames(dir, r.times, r.stages[s]);
    }
  }
  {
    auto csv = out.open("convergence.csv");
    r.write_convergence_csv(csv);
  }
  const ShadowTrace shadow = extract_shadow(r, c.cascade.h_inf);
  {
    auto csv = out.open("shadow.csv");
    shadow.write_csv(csv);
  }
  out.text("report.txt", cascade_text(r));
  summary << "cascade: " << r.stages.size() << " stages, " << r.count(CellStatus::kOscillating) << " oscillating cells";
  return kExitOk;
}

int run_shadow_cmd(const RunConfig& c, Outputs& out, std::ostringstream& summary) {
  const CascadeResult r = cascade_from(c);
  const ShadowTrace shadow = extract_shadow(r, c.cascade.h_inf);
  std::vector<Probe> probes;
  if (!c.shadow.probes.empty()) {
    probes = read_probes(c.shadow.probes);
  } else {
    probes = random_probes(shadow, ProbeSide::kInside, c.shadow.random_inside, mix_seed(c.run.seed, 1), c.shadow.t_lo,
                           c.shadow.t_hi);
    auto outside = random_probes(shadow, ProbeSide::kOutside, c.shadow.random_outside, mix_seed(c.run.seed, 2),
                                 c.shadow.t_lo, c.shadow.t_hi);
    probes.insert(probes.end(), outside.begin(), outside.end());
  }
  const WeakSolutionReport rep = run_probes(shadow, probes);
  {
    auto csv = out.open("shadow.csv");
    shadow.write_csv(csv);
  }
  {
    auto csv = out.open("probe_margins.csv");
    rep.write_csv(csv);
  }
  out.text("report.txt", rep.to_text());
  summary << "shadow: " << (rep.passed() ? "PASS" : "FAIL");
  return rep.passed() ? kExitOk : kExitValidation;
}

int run_verify(const RunConfig& c, Outputs& out, std::ostringstream& summary) {
  const FrameSet fsn = read_frames(c.verify.trajectory);
  if (fsn.frames.empty()) throw Error(ErrorCode::kIo, "verify: no frames in " + c.verify.trajectory);
  const Barrier b = parse_barrier(c.verify.barrier);
  if (b.dim != fsn.frames.front().dim)
    throw Error(ErrorCode::kConfig, "verify: barrier dimension does not match the trajectory");
  const ViolationReport v = check_barrier(fsn.times, fsn.frames, b, c.verify.tol);
  const Grid& g0 = fsn.frames.front();
  const ResidualReport res = certify_residual(b, g0.origin, g0.upper(), fsn.times.front(), fsn.times.back(),
                                              static_cast<std::size_t>(c.verify.samples), c.run.seed, c.verify.tol);
  const bool ok = v.passed() && (c.verify.samples == 0 || res.passed());
  std::ostringstream report;
  report << "barrier: " << b.provenance << "\n" << v.to_text();
  if (c.verify.samples > 0) {
    report << "residual_samples: " << res.samples << "\n"
           << "residual_failures: " << res.failures << "\n"
           << "residual_worst: " << num(res.worst) << "\n";
    if (res.worst_x.size()) {
      report << "residual_worst_at:";
      for (int k = 0; k < res.worst_x.size(); ++k) report << ' ' << num(res.worst_x[k]);
      report << " t=" << num(res.worst_t) << "\n";
    }
  }
  report << "result: " << (ok ? "PASS" : "FAIL") << "\n";
  out.text("report.txt", report.str());
  summary << "verify: " << (ok ? "PASS" : "FAIL");
  return ok ? kExitOk : kExitValidation;
}

}  // namespace

void write_frames(const std::string& dir, const std::vector<double>& times, const std::vector<Grid>& frames) {
  Outputs out(dir);
  out.frames(".", times, frames);
}

FrameSet read_frames(const std::string& dir) {
  std::ifstream in(fs::path(dir) / "frames.csv");
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + (fs::path(dir) / "frames.csv").string());
  FrameSet out;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string idx, t, file;
    if (!std::getline(ls, idx, ',') || !std::getline(ls, t, ',') || !std::getline(ls, file))
      throw Error(ErrorCode::kIo, "malformed frames.csv line: " + line);
    out.times.push_back(std::stod(t));
    out.frames.push_back(read_grid_file((fs::path(dir) / file).string()));
  }
  return out;
}

std::vector<Probe> read_probes(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read probe list " + path);
  std::vector<Probe> out;
  std::string line;
  std::getline(in, line);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() < 4 || (cells[0] != "inside" && cells[0] != "outside"))
      throw Error(ErrorCode::kConfig, path + ":" + std::to_string(lineno) + ": expected side,t0,r0,c0[,c1..]");
    Probe p;
    p.side = cells[0] == "inside" ? ProbeSide::kInside : ProbeSide::kOutside;
    try {
      p.t0 = std::stod(cells[1]);
      p.r0 = std::stod(cells[2]);
      p.center.resize(static_cast<int>(cells.size() - 3));
      for (std::size_t k = 3; k < cells.size(); ++k) p.center[static_cast<int>(k - 3)] = std::stod(cells[k]);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kConfig, path + ":" + std::to_string(lineno) + ": bad number");
    }
    out.push_back(p);
  }
  return out;
}

RunResult run(const RunConfig& config, const std::string& out_dir) {
  const auto start = std::chrono::steady_clock::now();
  RunResult result;
  Outputs out{fs::path(out_dir)};
  std::ostringstream summary;
  try {
    fs::create_directories(out_dir);
    const auto errors = validate(config);
    if (!errors.empty()) throw ConfigError(errors);
    out.text("config.ini", serialize_config(config));
    const std::string& sub = config.run.subcommand;
    if (sub == "smooth") result.exit_code = run_smooth(config, out, summary);
    else if (sub == "flow") result.exit_code = run_flow(config, out, summary);
    else if (sub == "cascade") result.exit_code = run_cascade_cmd(config, out, summary);
    else if (sub == "shadow") result.exit_code = run_shadow_cmd(config, out, summary);
    else result.exit_code = run_verify(config, out, summary);
    result.message = summary.str();
  } catch (const Error& e) {
    result.exit_code = exit_code(e.code());
    result.message = e.what();
  } catch (const fs::filesystem_error& e) {
    result.exit_code = exit_code(ErrorCode::kIo);
    result.message = e.what();
  }

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  try {
    std::ostringstream m;
    m << "subcommand: " << config.run.subcommand << "\n"
      << "gmcf_version: " << GMCF_VERSION << "\n"
      << "eigen_version: " << EIGEN_WORLD_VERSION << "." << EIGEN_MAJOR_VERSION << "." << EIGEN_MINOR_VERSION << "\n"
      << "compiler: " << __VERSION__ << "\n"
      << "seed: " << config.run.seed << "\n"
      << "threads: " << thread_count() << "\n"
      << "parameter_hash: " << parameter_hash(config) << "\n"
      << "wall_seconds: " << wall << "\n"
      << "exit_code: " << result.exit_code << "\n"
      << "message: " << result.message << "\n";
    for (const auto& f : out.files()) m << "output: " << f << "\n";
    m << "\n" << serialize_config(config);
    out.text("manifest.txt", m.str());
  } catch (const std::exception& e) {
    if (result.exit_code == kExitOk) {
      result.exit_code = exit_code(ErrorCode::kIo);
      result.message = e.what();
    }
  }
  result.outputs = out.files();
  return result;
}

}  // namespace gmcf::cli
