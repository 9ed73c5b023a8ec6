// Command-line front end: figure-reproduction subcommands emitting CSV, plus
// the closed-form vs oracle self-check.
//
// Exit codes: 0 success, 1 usage/config/IO error, 2 math-domain error
// (orthogonal postselection, zero mass, fit divergence, ...), 3 oracle
// disagreement in `check`.

#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "wvsim/cli.hpp"

namespace {

struct CommonArgs {
  std::string preset;
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_given = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--preset", args.preset, "built-in parameter preset");
  cmd->add_option("--config", args.config, "flat key = value config file");
  cmd->add_option("--out", args.out, "output CSV path");
  cmd->add_option("--seed", args.seed, "RNG seed override")->each([&](const std::string&) {
    args.seed_given = true;
  });
}

wvsim::cli::RunConfig resolve(const CommonArgs& args) {
  wvsim::cli::RunConfig cfg;
  if (!args.preset.empty()) cfg = wvsim::cli::preset(args.preset);
  if (!args.config.empty()) wvsim::cli::apply_config_file(cfg, args.config);
  if (args.seed_given) cfg.seed = args.seed;
  return cfg;
}

std::string output_path(const CommonArgs& args, const wvsim::cli::RunConfig& cfg) {
  if (!args.out.empty()) return args.out;
  if (!cfg.output_path.empty()) return cfg.output_path;
  throw wvsim::cli::ConfigError("no output path: pass --out or set output_path");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"postselected pointer distributions for weak measurements "
               "with partially coherent pointers"};
  app.require_subcommand(1);

  CommonArgs profile_args, ampl_args, speckle_args, check_args;
  CLI::App* profile = app.add_subcommand("profile", "pointer profiles, one column per gamma");
  add_common(profile, profile_args);
  CLI::App* ampl = app.add_subcommand("amplification", "|amplification| vs gamma per epsilon");
  add_common(ampl, ampl_args);
  CLI::App* speckle = app.add_subcommand("speckle", "pseudo-thermal correlation curve and gamma");
  add_common(speckle, speckle_args);
  CLI::App* check = app.add_subcommand("check", "weak value, regime diagnostic, oracle agreement");
  add_common(check, check_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (profile->parsed()) {
      const auto cfg = resolve(profile_args);
      wvsim::cli::cmd_profile(cfg, output_path(profile_args, cfg));
    } else if (ampl->parsed()) {
      const auto cfg = resolve(ampl_args);
      wvsim::cli::cmd_amplification(cfg, output_path(ampl_args, cfg));
    } else if (speckle->parsed()) {
      const auto cfg = resolve(speckle_args);
      const auto est = wvsim::cli::cmd_speckle(cfg, output_path(speckle_args, cfg));
      std::cout << "w'_c = " << est.w_c_prime_mm << " mm, w_c = " << est.w_c_um
                << " um, gamma = " << est.gamma << " (fit rmse " << est.fit_rmse << ")\n";
    } else if (check->parsed()) {
      const auto cfg = resolve(check_args);
      const auto result = wvsim::cli::cmd_check(cfg, std::cout);
      return result.pass ? 0 : 3;
    }
  } catch (const wvsim::cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const wvsim::IoFailure& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 1;
  } catch (const wvsim::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
