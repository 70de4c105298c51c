#pragma once

// Configuration schema, built-in expression registry and the subcommand
// driver behind the gmcf command line tool.
//
// Exit codes: 0 success, 1 a validation or probe failed, 2 configuration
// error, 3 parameter error, 4 geometry error, 5 solver abort, 6 i/o error.

#include "gmcf/barrier_oracles.hpp"
#include "gmcf/cascade_shadow.hpp"

#include <string>
#include <vector>

namespace gmcf::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;

int exit_code(ErrorCode code);

struct RunSection {
  std::string subcommand = "flow";
  std::uint64_t seed = 1;
  bool operator==(const RunSection&) const = default;
};

struct SmoothSection {
  std::string a = "ball:-0.5,0:1";
  std::string b = "ball:0.5,0:1";
  double eps = 0.2;
  std::string cone = "positive";
  std::int64_t resolution = 128;  // nodes per axis of the Phi dump
  std::uint64_t inclusion_samples = 10000;
  std::uint64_t curvature_samples = 1000;
  double g_dominance = 0.0;  // explicit C of the boundary alteration; 0 lets the smoother choose
  double g_window = 0.0;     // explicit eps_g
  bool operator==(const SmoothSection&) const = default;
};

struct FlowSection {
  std::string domain = "ball:0,0:1";
  std::string initial = "zero";
  std::string boundary = "zero";
  double h = 0.05;
  double t_end = 1.0;
  double cfl = 0.9;
  double dt = 0.0;
  double h_cap = 1e6;
  double theta_min = 0.1;
  std::string scheme = "fd";  // fd | median
  double median_radius = 3.0;
  std::vector<double> outputs;
  bool check_max_principle = false;
  std::uint64_t diagnostics_stride = 1;
  bool operator==(const FlowSection&) const = default;
};

struct CascadeSection {
  std::string domain = "ball:0,0:1";
  std::string initial = "proper_disk_profile";
  std::int64_t radial_dim = 0;  // > 0: rotationally symmetric run on the ball of radius rho
  double rho = 1.0;
  std::vector<double> schedule{2.0, 4.0, 8.0};
  double eps = 0.2;
  double h = 0.05;
  double t_end = 0.5;
  double cfl = 0.9;
  std::string scheme = "fd";
  std::vector<double> outputs;
  double h_inf = 1e3;
  double h_cap = 1e6;
  double tol = 1e-3;
  std::string cone = "mean";
  bool dump_stages = true;
  bool operator==(const CascadeSection&) const = default;
};

struct ShadowSection {
  std::string probes;  // CSV probe list; empty draws random probes
  std::uint64_t random_inside = 20;
  std::uint64_t random_outside = 20;
  double t_lo = 0.0;
  double t_hi = 1e300;
  bool operator==(const ShadowSection&) const = default;
};

struct VerifySection {
  std::string trajectory;  // directory written by flow (frames.csv + frame files)
  std::string barrier = "grim_reaper";
  double tol = 1e-8;
  std::uint64_t samples = 10000;
  bool operator==(const VerifySection&) const = default;
};

struct RunConfig {
  RunSection run;
  SmoothSection smooth;
  FlowSection flow;
  CascadeSection cascade;
  ShadowSection shadow;
  VerifySection verify;
  bool operator==(const RunConfig&) const = default;
};

/// Thrown by parse_config; lists every violation found.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

/// INI-style text: [section] headers, key = value lines, # comments.
/// Lists are comma separated.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
std::string serialize_config(const RunConfig& config);
/// Cross-field checks on a config; empty when valid.
std::vector<std::string> validate(const RunConfig& config);
/// "section.key: description" for every accepted key.
std::vector<std::string> documented_keys();
/// FNV-1a 64 of the serialized config, hex.
std::string parameter_hash(const RunConfig& config);

/// Domain strings:
///   ball:c0,c1[,c2]:r   halfspace:n0,n1[,n2]:offset   ellipsoid:c0,c1:a0,a1
///   perturbed:dim:radius:amplitude:frequency   interval:a:b   whole:dim   grid:<path>
DomainSpec parse_domain(const std::string& text);

/// "fd" or "median".
Scheme parse_scheme(const std::string& text);

/// Built-in space-time expressions: zero, constant:c, linear:a0,a1, paraboloid:a,
/// wave:a:k, grim_reaper[:shift], grim_reaper_pair, proper_disk_profile.
SpaceTimeFn lookup_expression(const std::string& id);
std::vector<std::string> expression_ids();

/// Barrier strings for verify: grim_reaper[:shift], sphere_upper:c0,c1:r0[:height],
/// sphere_lower:c0,c1:r0[:height].
Barrier parse_barrier(const std::string& text);

struct RunResult {
  int exit_code = 0;
  std::vector<std::string> outputs;  // paths relative to the output directory
  std::string message;
};

/// Runs config.run.subcommand, writing artifacts and manifest.txt under out_dir.
/// Module errors are caught and mapped to exit codes.
RunResult run(const RunConfig& config, const std::string& out_dir);

/// Trajectory frames as written by flow.
struct FrameSet {
  std::vector<double> times;
  std::vector<Grid> frames;
};
void write_frames(const std::string& dir, const std::vector<double>& times, const std::vector<Grid>& frames);
FrameSet read_frames(const std::string& dir);

std::vector<Probe> read_probes(const std::string& path);

}  // namespace gmcf::cli
