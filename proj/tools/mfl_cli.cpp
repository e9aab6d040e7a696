#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mfl/config.hpp"
#include "mfl/run.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Underdamped mean-field Langevin dynamics: simulation, coupling, rates, GAN"};
  app.set_version_flag("--version", std::string(mfl::kVersion));
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> record_every;
  app.add_option("--config", config_path, "JSON config file (defaults apply when omitted)");
  app.add_option("--seed", seed, "Master seed");
  app.add_option("--out", out, "Output directory");
  app.add_option("--record-every", record_every, "Steps between diagnostic records")
      ->check(CLI::PositiveNumber);

  mfl::RunOptions options;
  app.add_subcommand("simulate", "Run the particle system and record the free energy");
  auto* couple = app.add_subcommand("couple", "Reflection/synchronous coupling contraction");
  couple->add_option("--dims", options.dims_override, "Override the particle dimension")
      ->check(CLI::PositiveNumber);
  auto* rates = app.add_subcommand("rates", "Assemble the contraction constants");
  std::string sweep;
  rates->add_option("--sweep", sweep, "Sweep a parameter and print CSV")
      ->check(CLI::IsMember({"iota"}));
  app.add_subcommand("gan", "Train the mean-field GAN");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  options.sweep_iota = sweep == "iota";

  mfl::RunConfig config;
  try {
    config = config_path.empty() ? mfl::parse_config(nlohmann::json::object())
                                 : mfl::load_config(config_path);
    mfl::apply_overrides(config, seed, out, record_every);
  } catch (const mfl::ConfigError& e) {
    std::cerr << mfl::error_json("config", e.what(), e.path()).dump() << '\n';
    return 2;
  } catch (const mfl::MissingFileError& e) {
    std::cerr << mfl::error_json("missing_file", e.what(), e.file()).dump() << '\n';
    return 2;
  }
  return mfl::run_subcommand(app.get_subcommands().front()->get_name(), config, options,
                             std::cout, std::cerr);
}
