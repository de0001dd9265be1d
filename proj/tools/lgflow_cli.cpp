// Command-line scenario runner.
//
//   lgflow run <config|bundled-name> [--output-root DIR]
//   lgflow report <trace-dir>
//   lgflow validate <config>
//   lgflow list-scenarios
//
// Exit codes: 0 ok, 2 validation error, 3 solver non-convergence (partial
// artifacts are written), 4 I/O error. The output root can also be set via
// the LGFLOW_OUTPUT_ROOT environment variable.
#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "lgflow/scenario.hpp"

using Scalar = double;

int main(int argc, char** argv) {
  CLI::App app{"gradient flows for linear-growth energies"};
  app.require_subcommand(1);

  std::string config;
  std::string output_root;
  if (const char* env = std::getenv("LGFLOW_OUTPUT_ROOT")) output_root = env;
  if (output_root.empty()) output_root = ".";

  CLI::App* run = app.add_subcommand("run", "execute a scenario config");
  run->add_option("config", config, "config file or bundled scenario name")->required();
  run->add_option("--output-root", output_root, "directory for artifacts");

  std::string report_dir;
  CLI::App* report = app.add_subcommand("report", "summarize a run directory");
  report->add_option("dir", report_dir, "artifact directory produced by run")->required();

  std::string validate_path;
  CLI::App* validate = app.add_subcommand("validate", "check a config without running");
  validate->add_option("config", validate_path, "config file or bundled scenario name")->required();

  CLI::App* list = app.add_subcommand("list-scenarios", "list bundled scenarios");

  CLI11_PARSE(app, argc, argv);

  try {
    if (list->parsed()) {
      for (const auto& [name, text] : lgflow::bundled_scenarios()) {
        auto cfg = nlohmann::json::parse(text);
        std::cout << name << "  [" << cfg["job"]["type"].get<std::string>() << ", "
                  << cfg["integrand"].get<std::string>() << "]\n";
      }
      return 0;
    }
    if (validate->parsed()) {
      auto cfg = lgflow::load_scenario_json(validate_path);
      lgflow::validate_scenario<Scalar>(cfg);
      std::cout << "ok\n";
      return 0;
    }
    if (run->parsed()) {
      auto cfg = lgflow::load_scenario_json(config);
      lgflow::Scenario<Scalar> s = lgflow::validate_scenario<Scalar>(cfg);
      lgflow::RunResult rr = lgflow::run_scenario(s, output_root);
      if (!rr.message.empty()) std::cerr << rr.message << "\n";
      if (rr.exit_code == 0)
        std::cout << "artifacts: " << rr.artifact_dir.string() << "\n";
      return rr.exit_code;
    }
    if (report->parsed()) {
      lgflow::RunResult rr = lgflow::report_directory(report_dir);
      if (!rr.message.empty()) std::cerr << rr.message << "\n";
      if (rr.exit_code == 0)
        std::cout << "report: " << (rr.artifact_dir / "report").string() << "\n";
      return rr.exit_code;
    }
  } catch (const lgflow::ScenarioError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const lgflow::TraceIoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
