// Command-line front end: run one scenario or a parameter sweep.

#include "hlb/scenario.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical load balancing simulator"};
  app.require_subcommand(1);

  std::string config;
  std::string out;
  std::string trace;
  auto* run = app.add_subcommand("run", "simulate one balancing round");
  run->add_option("--config", config, "scenario JSON")->required();
  run->add_option("--out", out, "metrics JSON")->required();
  run->add_option("--trace", trace, "message trace, one delivery per line");

  std::string spec;
  std::string sweep_out;
  unsigned jobs = 1;
  auto* sweep = app.add_subcommand("sweep", "run a configuration grid over several seeds");
  sweep->add_option("--spec", spec, "sweep JSON")->required();
  sweep->add_option("--out", sweep_out, "CSV rows, or JSON when the name ends in .json")
    ->required();
  sweep->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (CLI::ParseError const& e) {
    auto const rc = app.exit(e);
    return rc == 0 ? 0 : hlb::kExitConfig;
  }

  if (*run) {
    std::optional<std::string> trace_path;
    if (!trace.empty()) {
      trace_path = trace;
    }
    return hlb::cmd_run(config, out, trace_path, std::cerr);
  }
  return hlb::cmd_sweep(spec, sweep_out, jobs, std::cerr);
}
