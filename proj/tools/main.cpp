#include "commands.hpp"

#include <modip/reconstructor.hpp>

#include <iostream>

int main(int argc, char **argv)
{
  CLI::App app{"modip: dipole inversion with an untrained mini U-net and unrolled data-fidelity steps"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Print help for every subcommand");

  modip::cli::Action action;
  std::vector<std::string> const args(argv, argv + argc);
  modip::cli::add_commands(app, action, args);

  try {
    app.parse(argc, argv);
  } catch (CLI::ParseError const &e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    return action();
  } catch (modip::ConfigError const &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (modip::DivergenceError const &e) {
    std::cerr << "diverged: " << e.what() << "\n";
    return 2;
  } catch (std::exception const &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
