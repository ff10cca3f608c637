#include "twistkam_cli/config.hpp"
#include "twistkam_cli/runner.hpp"

#include "CLI11.hpp"

#include <iostream>

int main(int argc, char** argv) {
  using namespace twistkam::cli;
  CLI::App app{"Twist-map experiment runner"};
  app.require_subcommand(1);

  std::string run_path;
  std::string out_dir;
  bool quiet = false;
  auto* run_cmd = app.add_subcommand("run", "Run the experiment described by a JSON config");
  run_cmd->add_option("config", run_path, "Config file")->required();
  run_cmd->add_option("--output-dir", out_dir, "Override output.dir");
  run_cmd->add_flag("--quiet", quiet, "Do not print the report");

  std::string check_path;
  auto* validate_cmd = app.add_subcommand("validate", "Check a config without running it");
  validate_cmd->add_option("config", check_path, "Config file")->required();

  auto* list_cmd = app.add_subcommand("commands", "List the available commands");

  CLI11_PARSE(app, argc, argv);

  if (*list_cmd) {
    for (const auto& c : command_names()) std::cout << c << "\n";
    return exit_ok;
  }
  if (*validate_cmd) {
    try {
      const ExperimentConfig cfg = load_config(check_path);
      std::cout << "ok: " << cfg.command << "\n";
      return exit_ok;
    } catch (const ConfigError& e) {
      std::cerr << "invalid config: " << e.what() << "\n";
      return exit_invalid_config;
    }
  }
  ExperimentConfig cfg;
  try {
    cfg = load_config(run_path);
  } catch (const ConfigError& e) {
    std::cerr << "invalid config: " << e.what() << "\n";
    return exit_invalid_config;
  }
  if (!out_dir.empty()) cfg.output.dir = out_dir;
  const RunReport report = run(cfg);
  if (!quiet) std::cout << report.to_json().dump(2) << "\n";
  if (!report.error.empty()) std::cerr << report.error << "\n";
  return report.exit_code;
}
