#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gfm/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Grid-forming inverter simulator: DADS-BS and PI control with a CBF current limiter"};
  app.require_subcommand(1);

  std::string config;
  std::string out = "out";
  std::uint64_t seed = 1;
  std::string param;
  std::vector<double> values;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "Scenario file (JSON); defaults apply when omitted")
        ->check(CLI::ExistingFile);
    sub->add_option("--out", out, "Output directory")->capture_default_str();
  };

  CLI::App* run = app.add_subcommand("run", "Simulate one scenario");
  add_common(run);

  CLI::App* verify = app.add_subcommand("verify", "Run the four reference cases and all checks");
  add_common(verify);
  verify->add_option("--seed", seed, "Seed for the randomized oracle suites")->capture_default_str();

  CLI::App* sweep = app.add_subcommand("sweep", "One simulation per value of a scalar key");
  add_common(sweep);
  sweep->add_option("--param", param, "Dotted config key, e.g. dads.Gamma")->required();
  sweep->add_option("--values", values, "Comma-separated values")->required()->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : gfm::cli::kConfigError;
  }

  if (*run) return gfm::cli::cmd_run(config, out, std::cout);
  if (*verify) return gfm::cli::cmd_verify(config, out, seed, std::cout);
  return gfm::cli::cmd_sweep(config, param, values, out, std::cout);
}
