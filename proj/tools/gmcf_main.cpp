// gmcf command line tool: smooth | flow | cascade | shadow | verify.

#include "gmcf/cli_runner.hpp"

#include "CLI11.hpp"

#include <cstdlib>
#include <iostream>

int main(int argc, char** argv) {
  using namespace gmcf;
  CLI::App app{"Graphical mean curvature flow toolkit"};
  app.require_subcommand(1);
  std::string config_path;
  std::string out_dir = "gmcf_out";
  int threads = 0;
  std::uint64_t seed = 0;
  bool list_keys = false;

  const char* names[] = {"smooth", "flow", "cascade", "shadow", "verify"};
  const char* help[] = {
      "smooth intersection of two domains with curvature validation",
      "solve the graph flow on a domain and dump frames",
      "run the approximation cascade over the R schedule",
      "test the shadow of a cascade against shrinking-sphere probes",
      "check a dumped trajectory against a barrier",
  };
  for (int i = 0; i < 5; ++i) {
    CLI::App* sub = app.add_subcommand(names[i], help[i]);
    sub->add_option("--config", config_path, "key = value configuration file")->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--threads", threads, "worker threads (default: GMCF_THREADS or 1)")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "seed override");
    sub->add_flag("--list-keys", list_keys, "print the accepted configuration keys and exit");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : cli::exit_code(ErrorCode::kConfig);
  }
  if (list_keys) {
    for (const auto& k : cli::documented_keys()) std::cout << k << "\n";
    return 0;
  }

  if (threads == 0) {
    if (const char* env = std::getenv("GMCF_THREADS")) threads = std::atoi(env);
  }
  set_thread_count(threads > 0 ? threads : 1);

  cli::RunConfig config;
  try {
    if (!config_path.empty()) config = cli::load_config(config_path);
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return cli::exit_code(e.code());
  }
  config.run.subcommand = app.get_subcommands().front()->get_name();
  if (app.get_subcommands().front()->count("--seed")) config.run.seed = seed;

  const cli::RunResult r = cli::run(config, out_dir);
  (r.exit_code == 0 ? std::cout : std::cerr) << r.message << "\n";
  return r.exit_code;
}
