#include "doctest.h"

#include "gmcf/cli_runner.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iterator>

#include <unistd.h>

using namespace gmcf;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("gmcf_test_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

cli::RunConfig small_flow() {
  cli::RunConfig c;
  c.run.subcommand = "flow";
  c.flow.domain = "ball:0,0:1";
  c.flow.initial = "paraboloid:0.5";
  c.flow.boundary = "paraboloid:0.5";
  c.flow.h = 0.1;
  c.flow.t_end = 0.02;
  c.flow.outputs = {0.01};
  return c;
}

}  // namespace

TEST_CASE("config text round trip") {
  const std::string text = R"(# demo
[run]
subcommand = cascade
seed = 9
[cascade]
schedule = 2, 8, 32
h = 0.025
scheme = median
[flow]
outputs = 0.1, 0.2
median_radius = 4
)";
  const auto c = cli::parse_config(text);
  CHECK(c.run.subcommand == "cascade");
  CHECK(c.run.seed == 9);
  CHECK(c.cascade.schedule == std::vector<double>{2, 8, 32});
  CHECK(c.cascade.scheme == "median");
  CHECK(c.flow.outputs == std::vector<double>{0.1, 0.2});
  CHECK(c.flow.median_radius == 4.0);
  const auto again = cli::parse_config(cli::serialize_config(c));
  CHECK(again == c);
  CHECK(cli::parameter_hash(again) == cli::parameter_hash(c));
  auto d = c;
  d.cascade.h = 0.05;
  CHECK(cli::parameter_hash(d) != cli::parameter_hash(c));
}

TEST_CASE("bad configs list every violation") {
  try {
    cli::parse_config("[flow]\nbogus = 1\nh = -2\n[nowhere]\nx = 1\n");
    FAIL("expected an error");
  } catch (const cli::ConfigError& e) {
    CHECK(e.code() == ErrorCode::kConfig);
    CHECK(e.violations().size() >= 3);
  }
  CHECK_THROWS_AS(cli::parse_config("[flow]\nscheme = spectral\n"), cli::ConfigError);
  CHECK_THROWS_AS(cli::parse_config("[cascade]\nschedule = 8, 4\n"), cli::ConfigError);
  CHECK(cli::exit_code(ErrorCode::kConfig) == 2);
  CHECK(cli::exit_code(ErrorCode::kParameter) == 3);
  CHECK(cli::exit_code(ErrorCode::kIo) == 6);
}

TEST_CASE("documented keys cover the schema") {
  const auto keys = cli::documented_keys();
  auto has = [&](const std::string& k) {
    return std::any_of(keys.begin(), keys.end(), [&](const std::string& s) { return s.rfind(k, 0) == 0; });
  };
  for (const char* k : {"run.seed", "smooth.eps", "flow.scheme", "flow.median_radius", "cascade.schedule",
                        "cascade.h_inf", "shadow.random_inside", "verify.barrier"})
    CHECK(has(k));
}

TEST_CASE("domain, expression and barrier strings") {
  CHECK(cli::parse_domain("ball:0,0:2").dim() == 2);
  CHECK(cli::parse_domain("interval:0:3").dim() == 1);
  CHECK(cli::parse_domain("perturbed:3:1:0.1:2").dim() == 3);
  CHECK_FALSE(cli::parse_domain("whole:2").bounded());
  CHECK_THROWS_AS(cli::parse_domain("ball:0,0:-1"), Error);
  CHECK_THROWS_AS(cli::parse_domain("torus:1"), Error);
  CHECK(cli::parse_scheme("median") == Scheme::kWideMedian);
  CHECK_THROWS_AS(cli::parse_scheme("upwind"), Error);
  Vec x(2);
  x << 0.5, 0.0;
  CHECK(cli::lookup_expression("paraboloid:2")(x, 0.0) == doctest::Approx(0.5));
  CHECK(cli::lookup_expression("constant:3")(x, 1.0) == 3.0);
  CHECK_THROWS_AS(cli::lookup_expression("nope"), Error);
  CHECK(cli::parse_barrier("grim_reaper").side == BarrierSide::kExact);
  CHECK(cli::parse_barrier("sphere_upper:0,0:1").side == BarrierSide::kUpper);
}

TEST_CASE("flow run writes frames and is byte-identical on rerun") {
  const auto c = small_flow();
  const fs::path a = scratch("flow_a"), b = scratch("flow_b");
  const auto ra = cli::run(c, a.string());
  REQUIRE(ra.exit_code == 0);
  CHECK(fs::exists(a / "manifest.txt"));
  const auto frames = cli::read_frames((a / "frames").string());
  CHECK(frames.times.size() == 3);
  CHECK(frames.frames.front().dim == 2);
  const auto rb = cli::run(c, b.string());
  REQUIRE(rb.exit_code == 0);
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file() || e.path().filename() == "manifest.txt") continue;
    CHECK(slurp(e.path()) == slurp(b / fs::relative(e.path(), a)));
  }
}

TEST_CASE("verify accepts the flow of the grim reaper") {
  auto c = small_flow();
  c.flow.domain = "interval:0.3:2.8";
  c.flow.initial = "grim_reaper";
  c.flow.boundary = "grim_reaper";
  c.flow.h = 0.02;
  c.flow.t_end = 0.1;
  const fs::path dir = scratch("grim");
  REQUIRE(cli::run(c, (dir / "flow").string()).exit_code == 0);
  c.run.subcommand = "verify";
  c.verify.trajectory = (dir / "flow" / "frames").string();
  c.verify.barrier = "grim_reaper";
  c.verify.tol = 1e-3;
  c.verify.samples = 500;
  CHECK(cli::run(c, (dir / "verify").string()).exit_code == 0);
  c.verify.tol = 1e-9;
  CHECK(cli::run(c, (dir / "verify_strict").string()).exit_code == cli::kExitValidation);
}

TEST_CASE("smooth demo succeeds and infeasible g is a parameter error") {
  cli::RunConfig c;
  c.run.subcommand = "smooth";
  c.smooth.resolution = 32;
  c.smooth.inclusion_samples = 1000;
  c.smooth.curvature_samples = 100;
  CHECK(cli::run(c, scratch("smooth").string()).exit_code == 0);
  c.smooth.g_dominance = 10.0;
  c.smooth.g_window = 0.5;
  const auto r = cli::run(c, scratch("smooth_bad").string());
  CHECK(r.exit_code == 3);
  CHECK(r.message.find("0.22") != std::string::npos);
}

TEST_CASE("config files and i/o errors") {
  const fs::path dir = scratch("cfg");
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "c.ini");
    out << cli::serialize_config(small_flow());
  }
  CHECK(cli::load_config((dir / "c.ini").string()) == small_flow());
  try {
    cli::load_config((dir / "missing.ini").string());
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(cli::exit_code(e.code()) != 0);
  }
  cli::RunConfig v;
  v.run.subcommand = "verify";
  v.verify.trajectory = (dir / "no_such_dir").string();
  CHECK(cli::run(v, (dir / "out").string()).exit_code == 6);
}
