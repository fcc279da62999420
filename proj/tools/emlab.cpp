#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "emlab/config.hpp"
#include "emlab/scenarios.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Numerical lab for damped Euler-Maxwell and Burgers flows"};
  std::string config_path;
  std::string out_dir = "./out";
  std::vector<std::string> overrides;
  bool list = false;
  app.add_option("--config", config_path, "scenario configuration (INI)");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--override", overrides, "section.key=value, repeatable");
  app.add_flag("--list-scenarios", list, "print the scenario names and exit");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : emlab::kExitError;
  }

  if (list) {
    for (const auto& name : emlab::scenario_names()) std::cout << name << "\n";
    return emlab::kExitPass;
  }
  if (config_path.empty()) {
    std::cerr << "error: --config is required\n";
    return emlab::kExitError;
  }
  try {
    const auto cfg = emlab::load_config_file(config_path, overrides);
    const int code = emlab::run_scenario(cfg, out_dir);
    std::cout << cfg.scenario << ": " << (code == emlab::kExitPass ? "all checks passed" : "check failed")
              << " (" << out_dir << "/summary.json)\n";
    return code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return emlab::kExitError;
  }
}
