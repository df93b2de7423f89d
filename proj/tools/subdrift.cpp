#include <iostream>

#include <CLI11.hpp>

#include "subdrift/cli/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Drift verification, subsampling plans and return-time moments for Markov chains"};
  app.require_subcommand(1);
  subdrift::cli::RunOptions opt;
  for (const auto& name : subdrift::cli::command_names()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", opt.config_path, "Experiment config (YAML)")->required();
    sub->add_option("--workers", opt.workers, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
    sub->add_option("--out", opt.out, "Report path (default stdout)");
    sub->add_option("--format", opt.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : subdrift::cli::kExitError;
  }
  return subdrift::cli::run(app.get_subcommands().front()->get_name(), opt, std::cout, std::cerr);
}
