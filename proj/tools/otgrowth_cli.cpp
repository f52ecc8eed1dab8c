#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "otgrowth/cli.hpp"

namespace cli = otgrowth::cli;

int main(int argc, char** argv) {
  CLI::App app{"Growth bounds for optimal transport maps: scenario checks and plot data"};
  app.require_subcommand(1);

  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  std::string flavor = "both";
  app.add_option("--seed", seed, "override the scenario seed");
  app.add_option("--out-dir", out_dir, "directory for CSV and JSON outputs");
  app.add_option("--flavor", flavor, "bound flavor")->check(CLI::IsMember({"published", "assembled", "both"}));

  std::string scenario_path;
  for (const char* name : {"verify-1d", "verify-nd", "bound-curve", "concentration-check", "ballprob-check"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("scenario", scenario_path, "scenario JSON file")->required();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : cli::kConfigError;
  }

  const std::string sub = app.get_subcommands().front()->get_name();
  cli::Options opt;
  opt.seed = seed;
  opt.out_dir = out_dir;
  opt.flavor = cli::parse_flavor(flavor);

  cli::Report rep;
  try {
    const auto scenario = cli::load_scenario(scenario_path);
    rep = cli::run_guarded(sub, scenario, opt, std::filesystem::path(scenario_path).stem().string());
  } catch (const otgrowth::Error& e) {
    rep.exit_code = cli::kConfigError;
    rep.summary = {{"subcommand", sub}, {"status", "config-error"}, {"error", e.what()}};
  }
  std::cout << rep.summary.dump(2) << '\n';
  return rep.exit_code;
}
