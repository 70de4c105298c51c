#include "gmcf/cli_runner.hpp"

#include "CLI11.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

namespace gmcf::cli {

int exit_code(ErrorCode code) { return static_cast<int>(code); }

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.push_back("");
  return out;
}

std::optional<double> to_real(const std::string& s) {
  const std::string t = trim(s);
  if (t.empty()) return std::nullopt;
  if (t == "inf" || t == "+inf") return std::numeric_limits<double>::infinity();
  if (t == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const char* first = t.data() + (t[0] == '+' ? 1 : 0);
  const auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size()) return std::nullopt;
  return v;
}

template <class Int>
std::optional<Int> to_int(const std::string& s) {
  const std::string t = trim(s);
  Int v{};
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) return std::nullopt;
  return v;
}

std::vector<double> reals(const std::string& s, const std::string& what) {
  std::vector<double> out;
  for (const auto& p : split(s, ',')) {
    auto v = to_real(p);
    if (!v) throw Error(ErrorCode::kConfig, what + ": bad number '" + p + "'");
    out.push_back(*v);
  }
  return out;
}

Vec vec_of(const std::vector<double>& v) {
  Vec out(static_cast<int>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<int>(i)] = v[i];
  return out;
}

// One key of the schema. set returns an error message or "".
struct Field {
  std::string section;
  std::string key;
  std::string doc;
  std::function<std::string(const RunConfig&)> get;
  std::function<std::string(RunConfig&, const std::string&)> set;
};

template <class Ref>
auto const_ref(Ref ref) {
  return [ref](const RunConfig& c) -> decltype(auto) { return ref(const_cast<RunConfig&>(c)); };
}

Field real_field(std::string sec, std::string key, std::string doc, double lo, double hi, bool lo_open,
                 std::function<double&(RunConfig&)> ref) {
  Field f{std::move(sec), std::move(key), std::move(doc), {}, {}};
  auto cref = const_ref(ref);
  f.get = [cref](const RunConfig& c) { return num(cref(c)); };
  f.set = [=](RunConfig& c, const std::string& s) -> std::string {
    auto v = to_real(s);
    if (!v || std::isnan(*v)) return "not a number: '" + s + "'";
    if ((lo_open ? !(*v > lo) : !(*v >= lo)) || !(*v <= hi))
      return "out of range " + std::string(lo_open ? "(" : "[") + num(lo) + ", " + num(hi) + "]: " + s;
    ref(c) = *v;
    return "";
  };
  return f;
}

template <class Int>
Field int_field(std::string sec, std::string key, std::string doc, Int lo, Int hi, std::function<Int&(RunConfig&)> ref) {
  Field f{std::move(sec), std::move(key), std::move(doc), {}, {}};
  auto cref = const_ref(ref);
  f.get = [cref](const RunConfig& c) { return std::to_string(cref(c)); };
  f.set = [=](RunConfig& c, const std::string& s) -> std::string {
    auto v = to_int<Int>(s);
    if (!v) return "not an integer: '" + s + "'";
    if (*v < lo || *v > hi) return "out of range [" + std::to_string(lo) + ", " + std::to_string(hi) + "]: " + s;
    ref(c) = *v;
    return "";
  };
  return f;
}

Field bool_field(std::string sec, std::string key, std::string doc, std::function<bool&(RunConfig&)> ref) {
  Field f{std::move(sec), std::move(key), std::move(doc), {}, {}};
  auto cref = const_ref(ref);
  f.get = [cref](const RunConfig& c) { return std::string(cref(c) ? "true" : "false"); };
  f.set = [=](RunConfig& c, const std::string& s) -> std::string {
    const std::string t = trim(s);
    if (t == "true" || t == "1" || t == "yes") ref(c) = true;
    else if (t == "false" || t == "0" || t == "no") ref(c) = false;
    else return "not a boolean: '" + s + "'";
    return "";
  };
  return f;
}

Field string_field(std::string sec, std::string key, std::string doc, std::function<std::string&(RunConfig&)> ref) {
  Field f{std::move(sec), std::move(key), std::move(doc), {}, {}};
  auto cref = const_ref(ref);
  f.get = [cref](const RunConfig& c) { return "\"" + cref(c) + "\""; };
  f.set = [=](RunConfig& c, const std::string& s) -> std::string {
    ref(c) = trim(s);
    return "";
  };
  return f;
}

Field list_field(std::string sec, std::string key, std::string doc, double lo, bool lo_open,
                 std::function<std::vector<double>&(RunConfig&)> ref) {
  Field f{std::move(sec), std::move(key), std::move(doc), {}, {}};
  auto cref = const_ref(ref);
  f.get = [cref](const RunConfig& c) {
    std::string s = "\"";
    const auto& v = cref(c);
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + num(v[i]);
    return s + "\"";
  };
  f.set = [=](RunConfig& c, const std::string& s) -> std::string {
    std::vector<double> out;
    if (!trim(s).empty()) {
      for (const auto& p : split(s, ',')) {
        auto v = to_real(p);
        if (!v || !std::isfinite(*v)) return "not a finite number: '" + p + "'";
        if (lo_open ? !(*v > lo) : !(*v >= lo)) return "value below " + num(lo) + ": " + p;
        out.push_back(*v);
      }
    }
    ref(c) = std::move(out);
    return "";
  };
  return f;
}

const std::vector<Field>& schema() {
  static const std::vector<Field> fields = [] {
    const double inf = std::numeric_limits<double>::infinity();
    using U = std::uint64_t;
    using I = std::int64_t;
    std::vector<Field> f;
    f.push_back(string_field("run", "subcommand", "smooth | flow | cascade | shadow | verify",
                             [](RunConfig& c) -> std::string& { return c.run.subcommand; }));
    f.push_back(int_field<U>("run", "seed", "seed of every sampled validation", 0, ~U{0},
                             [](RunConfig& c) -> U& { return c.run.seed; }));

    f.push_back(string_field("smooth", "a", "first domain", [](RunConfig& c) -> std::string& { return c.smooth.a; }));
    f.push_back(string_field("smooth", "b", "second domain", [](RunConfig& c) -> std::string& { return c.smooth.b; }));
    f.push_back(real_field("smooth", "eps", "smoothing width", 0, 10, true,
                           [](RunConfig& c) -> double& { return c.smooth.eps; }));
    f.push_back(string_field("smooth", "cone", "positive | mean | custom:<id>",
                             [](RunConfig& c) -> std::string& { return c.smooth.cone; }));
    f.push_back(int_field<I>("smooth", "resolution", "nodes per axis of the Phi dump", 8, 4096,
                             [](RunConfig& c) -> I& { return c.smooth.resolution; }));
    f.push_back(int_field<U>("smooth", "inclusion_samples", "samples per inclusion class", 1, 100000000,
                             [](RunConfig& c) -> U& { return c.smooth.inclusion_samples; }));
    f.push_back(int_field<U>("smooth", "curvature_samples", "boundary curvature samples", 1, 100000000,
                             [](RunConfig& c) -> U& { return c.smooth.curvature_samples; }));
    f.push_back(real_field("smooth", "g_dominance", "explicit alteration constant C (0: automatic)", 0, inf, false,
                           [](RunConfig& c) -> double& { return c.smooth.g_dominance; }));
    f.push_back(real_field("smooth", "g_window", "explicit alteration window eps_g (0: automatic)", 0, inf, false,
                           [](RunConfig& c) -> double& { return c.smooth.g_window; }));

    f.push_back(string_field("flow", "domain", "domain string", [](RunConfig& c) -> std::string& { return c.flow.domain; }));
    f.push_back(string_field("flow", "initial", "initial data expression id",
                             [](RunConfig& c) -> std::string& { return c.flow.initial; }));
    f.push_back(string_field("flow", "boundary", "Dirichlet data expression id",
                             [](RunConfig& c) -> std::string& { return c.flow.boundary; }));
    f.push_back(real_field("flow", "h", "grid spacing", 0, 10, true, [](RunConfig& c) -> double& { return c.flow.h; }));
    f.push_back(real_field("flow", "t_end", "final time", 0, 1e6, true,
                           [](RunConfig& c) -> double& { return c.flow.t_end; }));
    f.push_back(real_field("flow", "cfl", "fraction of the stable time step", 0, 1, true,
                           [](RunConfig& c) -> double& { return c.flow.cfl; }));
    f.push_back(real_field("flow", "dt", "fixed time step (0: cfl * stable step)", 0, 1e6, false,
                           [](RunConfig& c) -> double& { return c.flow.dt; }));
    f.push_back(real_field("flow", "h_cap", "numerical infinity clip", 0, 1e300, true,
                           [](RunConfig& c) -> double& { return c.flow.h_cap; }));
    f.push_back(real_field("flow", "theta_min", "smallest resolved cut fraction", 0, 1, false,
                           [](RunConfig& c) -> double& { return c.flow.theta_min; }));
    f.push_back(string_field("flow", "scheme", "fd | median (wide-stencil median, exactly monotone)",
                             [](RunConfig& c) -> std::string& { return c.flow.scheme; }));
    f.push_back(real_field("flow", "median_radius", "ball radius of the median scheme in grid cells", 1, 50, false,
                           [](RunConfig& c) -> double& { return c.flow.median_radius; }));
    f.push_back(list_field("flow", "outputs", "output times besides 0 and t_end", 0, false,
                           [](RunConfig& c) -> std::vector<double>& { return c.flow.outputs; }));
    f.push_back(bool_field("flow", "check_max_principle", "count discrete maximum principle violations",
                           [](RunConfig& c) -> bool& { return c.flow.check_max_principle; }));
    f.push_back(int_field<U>("flow", "diagnostics_stride", "steps between diagnostics rows", 1, ~U{0},
                             [](RunConfig& c) -> U& { return c.flow.diagnostics_stride; }));

    f.push_back(string_field("cascade", "domain", "domain string (grid runs)",
                             [](RunConfig& c) -> std::string& { return c.cascade.domain; }));
    f.push_back(string_field("cascade", "initial", "extended-real initial data expression id",
                             [](RunConfig& c) -> std::string& { return c.cascade.initial; }));
    f.push_back(int_field<I>("cascade", "radial_dim", "0: grid run; n > 0: radial run in R^n", 0, 16,
                             [](RunConfig& c) -> I& { return c.cascade.radial_dim; }));
    f.push_back(real_field("cascade", "rho", "radius of the radial domain", 0, 1e6, true,
                           [](RunConfig& c) -> double& { return c.cascade.rho; }));
    f.push_back(list_field("cascade", "schedule", "truncation heights R, increasing", 0.5, true,
                           [](RunConfig& c) -> std::vector<double>& { return c.cascade.schedule; }));
    f.push_back(real_field("cascade", "eps", "domain smoothing width", 0, 10, true,
                           [](RunConfig& c) -> double& { return c.cascade.eps; }));
    f.push_back(real_field("cascade", "h", "grid spacing", 0, 10, true,
                           [](RunConfig& c) -> double& { return c.cascade.h; }));
    f.push_back(real_field("cascade", "t_end", "final time", 0, 1e6, true,
                           [](RunConfig& c) -> double& { return c.cascade.t_end; }));
    f.push_back(real_field("cascade", "cfl", "fraction of the stable time step", 0, 1, true,
                           [](RunConfig& c) -> double& { return c.cascade.cfl; }));
    f.push_back(string_field("cascade", "scheme", "fd | median",
                             [](RunConfig& c) -> std::string& { return c.cascade.scheme; }));
    f.push_back(list_field("cascade", "outputs", "output times besides 0 and t_end", 0, false,
                           [](RunConfig& c) -> std::vector<double>& { return c.cascade.outputs; }));
    f.push_back(real_field("cascade", "h_inf", "finiteness threshold of the shadow", 0, 1e300, true,
                           [](RunConfig& c) -> double& { return c.cascade.h_inf; }));
    f.push_back(real_field("cascade", "h_cap", "numerical infinity clip of the solver", 0, 1e300, true,
                           [](RunConfig& c) -> double& { return c.cascade.h_cap; }));
    f.push_back(real_field("cascade", "tol", "stabilization tolerance on compactified values", 0, 1, true,
                           [](RunConfig& c) -> double& { return c.cascade.tol; }));
    f.push_back(string_field("cascade", "cone", "cone preserved by domain truncation",
                             [](RunConfig& c) -> std::string& { return c.cascade.cone; }));
    f.push_back(bool_field("cascade", "dump_stages", "write every stage's frames",
                           [](RunConfig& c) -> bool& { return c.cascade.dump_stages; }));

    f.push_back(string_field("shadow", "probes", "probe list CSV (side,t0,r0,c0[,c1..]); empty: random",
                             [](RunConfig& c) -> std::string& { return c.shadow.probes; }));
    f.push_back(int_field<U>("shadow", "random_inside", "random inside probes", 0, 1000000,
                             [](RunConfig& c) -> U& { return c.shadow.random_inside; }));
    f.push_back(int_field<U>("shadow", "random_outside", "random outside probes", 0, 1000000,
                             [](RunConfig& c) -> U& { return c.shadow.random_outside; }));
    f.push_back(real_field("shadow", "t_lo", "earliest random probe start", 0, 1e300, false,
                           [](RunConfig& c) -> double& { return c.shadow.t_lo; }));
    f.push_back(real_field("shadow", "t_hi", "latest random probe start", 0, 1e300, false,
                           [](RunConfig& c) -> double& { return c.shadow.t_hi; }));

    f.push_back(string_field("verify", "trajectory", "directory with frames.csv",
                             [](RunConfig& c) -> std::string& { return c.verify.trajectory; }));
    f.push_back(string_field("verify", "barrier", "barrier string",
                             [](RunConfig& c) -> std::string& { return c.verify.barrier; }));
    f.push_back(real_field("verify", "tol", "violation and residual tolerance", 0, 1, false,
                           [](RunConfig& c) -> double& { return c.verify.tol; }));
    f.push_back(int_field<U>("verify", "samples", "residual certification samples", 0, 100000000,
                             [](RunConfig& c) -> U& { return c.verify.samples; }));
    return f;
  }();
  return fields;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> violations)
    : Error(ErrorCode::kConfig,
            [&] {
              std::string msg = "invalid configuration:";
              for (const auto& v : violations) msg += "\n  " + v;
              return msg;
            }()),
      violations_(std::move(violations)) {}

RunConfig parse_config(const std::string& text) {
  RunConfig config;
  std::vector<std::string> errors;
  std::vector<CLI::ConfigItem> items;
  try {
    std::istringstream in(text);
    items = CLI::ConfigINI().from_config(in);
  } catch (const std::exception& e) {
    throw ConfigError({std::string("unreadable config: ") + e.what()});
  }
  std::map<std::string, const Field*> index;
  for (const auto& f : schema()) index[f.section + "." + f.key] = &f;
  std::set<std::string> seen;
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;
    std::string section;
    for (const auto& p : item.parents) section += (section.empty() ? "" : ".") + p;
    const std::string full = (section.empty() ? "" : section + ".") + item.name;
    const auto it = index.find(full);
    if (it == index.end()) {
      errors.push_back("unknown key '" + full + "'");
      continue;
    }
    if (!seen.insert(full).second) {
      errors.push_back("duplicate key '" + full + "'");
      continue;
    }
    std::string value;
    for (std::size_t i = 0; i < item.inputs.size(); ++i) value += (i ? "," : "") + item.inputs[i];
    const std::string err = it->second->set(config, value);
    if (!err.empty()) errors.push_back(full + ": " + err);
  }
  if (errors.empty()) errors = validate(config);
  if (!errors.empty()) throw ConfigError(std::move(errors));
  return config;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& config) {
  std::ostringstream os;
  std::string section;
  for (const auto& f : schema()) {
    if (f.section != section) {
      os << (section.empty() ? "" : "\n") << "[" << f.section << "]\n";
      section = f.section;
    }
    os << f.key << " = " << f.get(config) << "\n";
  }
  return os.str();
}

std::vector<std::string> documented_keys() {
  std::vector<std::string> out;
  for (const auto& f : schema()) out.push_back(f.section + "." + f.key + ": " + f.doc);
  return out;
}

std::string parameter_hash(const RunConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : serialize_config(config)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<std::string> validate(const RunConfig& c) {
  std::vector<std::string> errors;
  static const std::set<std::string> subcommands{"smooth", "flow", "cascade", "shadow", "verify"};
  if (!subcommands.count(c.run.subcommand)) errors.push_back("run.subcommand: unknown subcommand '" + c.run.subcommand + "'");
  auto check = [&](const std::string& key, auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      errors.push_back(key + ": " + e.what());
    }
  };
  check("smooth.a", [&] { parse_domain(c.smooth.a); });
  check("smooth.b", [&] { parse_domain(c.smooth.b); });
  check("smooth.cone", [&] { CurvatureCone::from_name(c.smooth.cone); });
  if ((c.smooth.g_dominance > 0.0) != (c.smooth.g_window > 0.0))
    errors.push_back("smooth.g_dominance and smooth.g_window must be given together");
  check("flow.domain", [&] { parse_domain(c.flow.domain); });
  check("flow.initial", [&] { lookup_expression(c.flow.initial); });
  check("flow.boundary", [&] { lookup_expression(c.flow.boundary); });
  check("flow.scheme", [&] { parse_scheme(c.flow.scheme); });
  check("cascade.scheme", [&] { parse_scheme(c.cascade.scheme); });
  for (double t : c.flow.outputs)
    if (t > c.flow.t_end) errors.push_back("flow.outputs: time " + num(t) + " exceeds t_end");
  if (c.cascade.radial_dim == 0) check("cascade.domain", [&] { parse_domain(c.cascade.domain); });
  check("cascade.initial", [&] { lookup_expression(c.cascade.initial); });
  check("cascade.cone", [&] { CurvatureCone::from_name(c.cascade.cone); });
  if (c.cascade.schedule.size() < 2) errors.push_back("cascade.schedule: needs at least two values");
  for (std::size_t i = 1; i < c.cascade.schedule.size(); ++i)
    if (!(c.cascade.schedule[i] > c.cascade.schedule[i - 1]))
      errors.push_back("cascade.schedule: must be strictly increasing");
  if (!(c.cascade.h_inf < c.cascade.h_cap)) errors.push_back("cascade.h_inf: must be below cascade.h_cap");
  if (c.cascade.radial_dim > 0 && !c.cascade.schedule.empty() && c.cascade.rho > c.cascade.schedule.front())
    errors.push_back("cascade.rho: radial runs need rho <= the smallest R");
  for (double t : c.cascade.outputs)
    if (t > c.cascade.t_end) errors.push_back("cascade.outputs: time " + num(t) + " exceeds t_end");
  if (c.shadow.t_lo > c.shadow.t_hi) errors.push_back("shadow.t_lo: must not exceed shadow.t_hi");
  check("verify.barrier", [&] { parse_barrier(c.verify.barrier); });
  if (c.run.subcommand == "verify" && c.verify.trajectory.empty())
    errors.push_back("verify.trajectory: required for verify");
  return errors;
}

Scheme parse_scheme(const std::string& text) {
  if (text == "fd") return Scheme::kFiniteDifference;
  if (text == "median") return Scheme::kWideMedian;
  throw Error(ErrorCode::kConfig, "unknown scheme '" + text + "' (fd | median)");
}

DomainSpec parse_domain(const std::string& text) {
  const auto parts = split(text, ':');
  const std::string& kind = parts[0];
  auto need = [&](std::size_t n) {
    if (parts.size() != n) throw Error(ErrorCode::kConfig, "domain '" + text + "': expected " + std::to_string(n - 1) + " fields");
  };
  auto real = [&](std::size_t i) {
    auto v = to_real(parts[i]);
    if (!v) throw Error(ErrorCode::kConfig, "domain '" + text + "': bad number '" + parts[i] + "'");
    return *v;
  };
  if (kind == "ball") {
    need(3);
    const Vec c = vec_of(reals(parts[1], "domain center"));
    const double r = real(2);
    if (!(r > 0.0)) throw Error(ErrorCode::kConfig, "domain '" + text + "': radius must be positive");
    return make_ball(c, r, std::min(0.25, 0.5 * r));
  }
  if (kind == "halfspace") {
    need(3);
    const Vec n = vec_of(reals(parts[1], "domain normal"));
    if (!(n.norm() > 0.0)) throw Error(ErrorCode::kConfig, "domain '" + text + "': zero normal");
    return make_half_space(n, real(2));
  }
  if (kind == "ellipsoid") {
    need(3);
    const Vec c = vec_of(reals(parts[1], "domain center"));
    const Vec a = vec_of(reals(parts[2], "domain semi-axes"));
    if (c.size() != a.size() || (a.array() <= 0.0).any())
      throw Error(ErrorCode::kConfig, "domain '" + text + "': bad semi-axes");
    return make_ellipsoid(c, a);
  }
  if (kind == "perturbed") {
    need(5);
    const auto dim = to_int<int>(parts[1]);
    const auto freq = to_int<int>(parts[4]);
    if (!dim || (*dim != 2 && *dim != 3) || !freq || *freq < 0)
      throw Error(ErrorCode::kConfig, "domain '" + text + "': bad dimension or frequency");
    return make_perturbed_ball(*dim, real(2), real(3), *freq);
  }
  if (kind == "interval") {
    need(3);
    const double a = real(1), b = real(2);
    if (!(b > a)) throw Error(ErrorCode::kConfig, "domain '" + text + "': empty interval");
    return make_ball(Vec::Constant(1, 0.5 * (a + b)), 0.5 * (b - a), std::min(0.25, 0.25 * (b - a)));
  }
  if (kind == "whole") {
    need(2);
    const auto dim = to_int<int>(parts[1]);
    if (!dim || *dim < 1 || *dim > 3) throw Error(ErrorCode::kConfig, "domain '" + text + "': bad dimension");
    return DomainSpec{Whole{*dim}, 1.0};
  }
  if (kind == "grid") {
    if (parts.size() < 2) throw Error(ErrorCode::kConfig, "domain '" + text + "': missing path");
    std::string path = text.substr(5);
    return DomainSpec{GridSampled{read_grid_file(path)}, 0.1};
  }
  throw Error(ErrorCode::kConfig, "unknown domain kind '" + kind + "'");
}

namespace {

// -log|sin x|, +inf within 1e-12 of a multiple of pi.
double log_sin(double x) {
  const double d = x - std::numbers::pi * std::round(x / std::numbers::pi);
  if (std::abs(d) < 1e-12) return std::numeric_limits<double>::infinity();
  return -std::log(std::abs(std::sin(d)));
}

}  // namespace

SpaceTimeFn lookup_expression(const std::string& id) {
  const auto parts = split(id, ':');
  const std::string& name = parts[0];
  auto params = [&](std::size_t n) {
    std::vector<double> p;
    for (std::size_t i = 1; i < parts.size(); ++i) {
      auto v = to_real(parts[i]);
      if (!v) throw Error(ErrorCode::kConfig, "expression '" + id + "': bad parameter '" + parts[i] + "'");
      p.push_back(*v);
    }
    if (p.size() > n) throw Error(ErrorCode::kConfig, "expression '" + id + "': too many parameters");
    return p;
  };
  if (name == "zero") {
    params(0);
    return [](const Vec&, double) { return 0.0; };
  }
  if (name == "constant") {
    const auto p = params(1);
    const double c = p.empty() ? 0.0 : p[0];
    return [c](const Vec&, double) { return c; };
  }
  if (name == "linear") {
    if (parts.size() != 2) throw Error(ErrorCode::kConfig, "expression '" + id + "': expected linear:a0,a1,...");
    const Vec a = vec_of(reals(parts[1], "linear coefficients"));
    return [a](const Vec& x, double) {
      double s = 0.0;
      for (int k = 0; k < std::min<int>(static_cast<int>(x.size()), static_cast<int>(a.size())); ++k) s += a[k] * x[k];
      return s;
    };
  }
  if (name == "paraboloid") {
    const auto p = params(1);
    const double a = p.empty() ? 1.0 : p[0];
    return [a](const Vec& x, double) { return a * x.squaredNorm(); };
  }
  if (name == "wave") {
    const auto p = params(2);
    const double a = p.size() > 0 ? p[0] : 1.0;
    const double k = p.size() > 1 ? p[1] : std::numbers::pi;
    return [a, k](const Vec& x, double) {
      double v = a * std::sin(k * x[0]);
      if (x.size() > 1) v *= std::cos(k * x[1]);
      return v;
    };
  }
  if (name == "grim_reaper") {
    const auto p = params(1);
    const double shift = p.empty() ? 0.0 : p[0];
    return [shift](const Vec& x, double t) { return t + log_sin(x[0]) + shift; };
  }
  if (name == "grim_reaper_pair") {
    params(0);
    return [](const Vec& x, double) { return log_sin(x[0]); };
  }
  if (name == "proper_disk_profile") {
    params(0);
    return [](const Vec& x, double) {
      const double r2 = x.squaredNorm();
      return r2 >= 1.0 ? std::numeric_limits<double>::infinity() : -std::log1p(-r2);
    };
  }
  throw Error(ErrorCode::kConfig, "unknown expression '" + id + "'");
}

std::vector<std::string> expression_ids() {
  return {"zero", "constant:c", "linear:a0,a1", "paraboloid:a", "wave:a:k", "grim_reaper[:shift]",
          "grim_reaper_pair", "proper_disk_profile"};
}

Barrier parse_barrier(const std::string& text) {
  const auto parts = split(text, ':');
  const std::string& kind = parts[0];
  auto real = [&](std::size_t i) {
    auto v = to_real(parts[i]);
    if (!v) throw Error(ErrorCode::kConfig, "barrier '" + text + "': bad number '" + parts[i] + "'");
    return *v;
  };
  if (kind == "grim_reaper") {
    if (parts.size() > 2) throw Error(ErrorCode::kConfig, "barrier '" + text + "': expected grim_reaper[:shift]");
    return grim_reaper(1, parts.size() == 2 ? real(1) : 0.0);
  }
  if (kind == "sphere_upper" || kind == "sphere_lower") {
    if (parts.size() != 3 && parts.size() != 4)
      throw Error(ErrorCode::kConfig, "barrier '" + text + "': expected " + kind + ":c0,c1:r0[:height]");
    const Vec c = vec_of(reals(parts[1], "barrier center"));
    const double r0 = real(2);
    if (!(r0 > 0.0)) throw Error(ErrorCode::kConfig, "barrier '" + text + "': radius must be positive");
    const double height = parts.size() == 4 ? real(3) : 0.0;
    return sphere_graph_barrier(c, r0, static_cast<int>(c.size()),
                                kind == "sphere_upper" ? BarrierSide::kUpper : BarrierSide::kLower, height);
  }
  throw Error(ErrorCode::kConfig, "unknown barrier '" + kind + "'");
}

}  // namespace gmcf::cli
