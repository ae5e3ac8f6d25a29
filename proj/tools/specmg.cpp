// Command-line front end: solves, parameter sweeps, dense theory checks, and
// two-phase simulations, all driven by one sectioned config file.
//
// Exit codes: 0 success, 2 configuration or usage error, 3 solver failure.

#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "specmg/config.hpp"
#include "specmg/experiment.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir = "out";
  std::vector<std::string> overrides;
};

void add_common(CLI::App* sub, CommonArgs& args) {
  sub->add_option("-c,--config", args.config_path, "configuration file")
      ->required()
      ->check(CLI::ExistingFile);
  sub->add_option("-o,--out", args.out_dir, "output directory (default: out)");
  sub->add_option("-s,--set", args.overrides,
                  "override a config entry as section.key=value (repeatable)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"high-contrast Darcy flow with nested spectral coarse spaces"};
  app.require_subcommand(1);

  CommonArgs args;
  CLI::App* solve = app.add_subcommand("solve", "single-phase pressure solve");
  CLI::App* sweep = app.add_subcommand("sweep", "parameter sweep of single-phase solves");
  CLI::App* verify = app.add_subcommand("verify-theory",
                                        "dense spectral checks of the preconditioner bounds");
  CLI::App* simulate = app.add_subcommand("simulate", "two-phase five-spot simulation");
  for (CLI::App* sub : {solve, sweep, verify, simulate}) add_common(sub, args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    specmg::Config cfg = specmg::Config::parse_file(args.config_path);
    for (const std::string& o : args.overrides) cfg.apply_override(o);

    if (app.got_subcommand(solve)) return specmg::run_solve(cfg, args.out_dir);
    if (app.got_subcommand(sweep)) return specmg::run_sweep(cfg, args.out_dir);
    if (app.got_subcommand(verify)) return specmg::run_verify_theory(cfg, args.out_dir);
    return specmg::run_simulate(cfg, args.out_dir);
  } catch (const specmg::SolverFailure& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return 3;
  } catch (const specmg::IndefiniteOperator& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return 3;
  } catch (const specmg::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::runtime_error& e) {
    // remaining runtime errors come from config parsing and typed getters
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 3;
  }
}
