#include <CLI11.hpp>
#include <iostream>

#include "ahs_cli/cli.hpp"

using namespace ahs;

int main(int argc, char** argv) {
  CLI::App app{"ahscat: scattering experiments on asymptotically hyperbolic models"};
  app.require_subcommand(1);
  std::string config_path, out_dir = ".";
  int threads = 0;
  std::uint64_t seed = 0;
  bool have_seed = false;
  for (const char* name : {"constants", "sweep", "compare", "invert", "layerstrip", "normalform"}) {
    auto* sub = app.add_subcommand(name, std::string("run a ") + name + " experiment");
    sub->add_option("--config", config_path, "JSON experiment configuration")->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--threads", threads, "worker threads (overrides the config)")->check(CLI::PositiveNumber);
    sub->add_option_function<std::uint64_t>("--seed", [&](const std::uint64_t& s) {
      seed = s;
      have_seed = true;
    }, "random seed (overrides the config)");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : cli::kExitConfig;
  }
  const std::string sub = app.get_subcommands().front()->get_name();
  cli::ExperimentConfig cfg;
  try {
    cfg = cli::load_config(config_path);
    if (cfg.experiment != sub)
      fail(ErrorCode::Config, "config key 'experiment': '" + cfg.experiment + "' does not match subcommand '" + sub + "'");
  } catch (const Error& e) {
    int rc = cli::exit_code_for(e.code());
    cli::json err = {{"error", {{"code", to_string(e.code())}, {"exit_code", rc}, {"message", e.what()}}}};
    std::cerr << err.dump() << "\n";
    return rc;
  }
  if (threads > 0) cfg.threads = threads;
  if (have_seed) cfg.seed = seed;
  auto res = cli::run(cfg, out_dir);
  if (res.exit_code != 0) {
    std::cerr << res.error.dump() << "\n";
    return res.exit_code;
  }
  for (const auto& p : res.artifacts) std::cout << p.string() << "\n";
  return 0;
}
