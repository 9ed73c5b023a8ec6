#pragma once
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "wvsim/errors.hpp"
#include "wvsim/oracle.hpp"
#include "wvsim/pointer.hpp"
#include "wvsim/speckle.hpp"

namespace wvsim::cli {

inline constexpr const char* kToolVersion = "wvsim 0.1.0";

/// Bad flat-file key/value or inconsistent tool parameters (exit code 1).
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Everything the subcommands need. Flat key = value files and the built-in
/// presets populate this; unset grid fields fall back to [-6 w0, 6 w0], 4801.
struct RunConfig {
  std::string preset_name;  ///< recorded in CSV headers

  OpticalConfig optics{632.8, 100.0, 0.697};
  double w0_um = 0.0;  ///< pointer spread override; 0 derives lambda f/(pi w0')
  double a_um = 1.316;
  double epsilon_rad = 2.79e-2;
  std::vector<double> gamma_list;

  double grid_q_min_um = 0.0;
  double grid_q_max_um = 0.0;
  int grid_points = 0;

  // amplification sweep (used when gamma_list is empty)
  std::vector<double> epsilon_list_rad;
  double gamma_min = 0.1;
  double gamma_max = 20.0;
  int gamma_points = 41;

  // speckle source
  double field_corr_width_mm = 1.42;
  double x_extent_mm = 12.0;
  int n_samples = 512;
  int n_realizations = 2000;
  double ref_x_mm = 0.0;

  std::uint64_t seed = 0;
  std::string output_path;

  double pointer_w0_um() const { return w0_um > 0.0 ? w0_um : optics.w0_um(); }
  QGrid grid() const;
  SpeckleConfig speckle_config() const;
};

/// Presets carrying the reference experimental parameters.
///   fig2   - speckle correlation run (focused source, w_g = 1.42 mm)
///   fig3b  - profile sweep at epsilon = 1.00e-3
///   fig3d  - profile sweep at epsilon = 2.79e-2
///   fig4   - amplification curves for the bracketing epsilon pair
///   weak02 - weak-regime check point at epsilon = 0.2 (gamma = 1000
///            stands in for an effectively pure pointer)
RunConfig preset(const std::string& name);
std::vector<std::string> preset_names();

/// Overlays key = value lines from a flat config file ('#' comments allowed).
/// Unknown keys are rejected.
void apply_config_file(RunConfig& cfg, const std::string& path);

/// One column of q plus one normalized-density column per gamma.
void cmd_profile(const RunConfig& cfg, const std::string& out_path);

/// Rows of gamma (explicit gamma_list, or log-spaced sweep when empty) with
/// one |amplification| column per epsilon.
void cmd_amplification(const RunConfig& cfg, const std::string& out_path);

/// Correlation curve CSV plus fitted-width / gamma summary footer.
CoherenceEstimate cmd_speckle(const RunConfig& cfg, const std::string& out_path);

struct CheckResult {
  WeakValueResult weak;
  RegimeDiagnostic regime;
  std::vector<std::pair<double, double>> gamma_linf;  ///< (gamma, oracle Linf)
  bool pass;                                          ///< all Linf <= 1e-6
};

/// Prints weak value, overlap, regime diagnostic, and closed-form vs oracle
/// agreement per gamma.
CheckResult cmd_check(const RunConfig& cfg, std::ostream& report);

}  // namespace wvsim::cli
