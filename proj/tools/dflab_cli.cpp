#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "dflab/config.hpp"
#include "dflab/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Dirichlet-Ferguson diffusion simulator and verification harness"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run one task, or every task with `all`");
  std::string task;
  std::string config_pos;
  std::string config_opt;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<unsigned> workers;
  std::optional<std::string> format;
  run->add_option("subcommand", task, "Task name")->required()->check(CLI::IsMember(dflab::subcommands()));
  run->add_option("config_file", config_pos, "Config file (same as --config)");
  run->add_option("--config", config_opt, "Config file")->envname("DFLAB_CONFIG");
  run->add_option("--seed", seed, "Master seed")->envname("DFLAB_SEED");
  run->add_option("--out", out, "Output directory")->envname("DFLAB_OUT");
  run->add_option("--workers", workers, "Worker threads; results do not depend on it")
      ->envname("DFLAB_WORKERS")
      ->check(CLI::PositiveNumber);
  run->add_option("--format", format, "Report table format")
      ->envname("DFLAB_FORMAT")
      ->check(CLI::IsMember({"csv", "json"}));

  app.add_subcommand("defaults", "Print the built-in default config");
  app.add_subcommand("list", "List task names");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (app.got_subcommand("defaults")) {
    std::cout << dflab::default_config().dump(2) << '\n';
    return 0;
  }
  if (app.got_subcommand("list")) {
    for (const auto& s : dflab::subcommands()) std::cout << s << '\n';
    return 0;
  }

  if (!config_pos.empty() && !config_opt.empty() && config_pos != config_opt) {
    std::cerr << "error: config given both positionally and with --config\n";
    return 2;
  }
  const std::string config_path = config_pos.empty() ? config_opt : config_pos;
  const dflab::Overrides ov{seed, out, workers, format};
  try {
    const dflab::RunConfig cfg = config_path.empty() ? dflab::load_config(nlohmann::json::object(), ".", ov)
                                                     : dflab::load_config_file(config_path, ov);
    return dflab::run(task, cfg, std::cout);
  } catch (const dflab::SchemaError& e) {
    std::cerr << "schema error at " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
