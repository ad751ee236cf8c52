#include "config.hpp"
#include "run.hpp"
#include "verify.hpp"

#include <CLI11.hpp>
#include <Eigen/Core>

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

namespace {

void apply_thread_cap() {
  int threads = 1;
  if (const char* env = std::getenv("PGD_THREADS")) {
    const int parsed = std::atoi(env);
    if (parsed >= 1) threads = parsed;
  }
  Eigen::setNbThreads(threads);
}

cfpgd::app::RunConfig load_config(const std::string& path,
                                  const std::vector<std::string>& overrides) {
  cfpgd::app::RawConfig raw = cfpgd::app::parse_config_file(path);
  for (const std::string& assignment : overrides) {
    cfpgd::app::apply_override(raw, assignment);
  }
  return cfpgd::app::make_run_config(raw);
}

}  // namespace

int main(int argc, char** argv) {
  apply_thread_cap();

  CLI::App app{"Greedy rank-one solver for separable conformable-fractional problems"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  auto* solve = app.add_subcommand("solve", "Run the greedy solver for a config file");
  solve->add_option("--config", config_path, "Path to the run configuration")->required();
  solve->add_option("--set", overrides, "Override config entries as section.key=value");

  std::string level = "fast";
  bool inject_asymmetry = false;
  auto* verify = app.add_subcommand("verify", "Run the built-in verification suites");
  verify->add_option("--level", level, "fast or full")
      ->check(CLI::IsMember({"fast", "full"}));
  verify->add_flag("--inject-asymmetry", inject_asymmetry,
                   "Test hook: corrupt a stiffness entry before the symmetry check");

  std::string export_config_path;
  std::string export_dir;
  std::vector<std::string> export_overrides;
  auto* export_cmd =
      app.add_subcommand("export-matrices", "Dump assembled operators in MatrixMarket format");
  export_cmd->add_option("--config", export_config_path, "Path to the run configuration")
      ->required();
  export_cmd->add_option("--out", export_dir, "Output directory")->required();
  export_cmd->add_option("--set", export_overrides, "Override config entries");

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) {
      return cfpgd::app::run_solve(load_config(config_path, overrides));
    }
    if (verify->parsed()) {
      cfpgd::app::VerifyOptions options;
      options.full = level == "full";
      options.inject_asymmetry = inject_asymmetry;
      return cfpgd::app::run_verify(options);
    }
    if (export_cmd->parsed()) {
      cfpgd::app::export_matrices(load_config(export_config_path, export_overrides), export_dir);
      return 0;
    }
  } catch (const cfpgd::app::ConfigError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 1;
}
