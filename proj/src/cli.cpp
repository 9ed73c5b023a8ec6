#include "wvsim/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

namespace wvsim::cli {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_short(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

std::string join_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += fmt17(v[i]);
  }
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("bad numeric value for '" + key + "': " + value);
  }
}

int parse_int(const std::string& key, const std::string& value) {
  const double v = parse_double(key, value);
  if (v != std::floor(v)) throw ConfigError("'" + key + "' must be an integer");
  return static_cast<int>(v);
}

std::vector<double> parse_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_double(key, item));
  }
  if (out.empty()) throw ConfigError("'" + key + "' needs at least one value");
  return out;
}

void apply_key(RunConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "lambda_nm")
    cfg.optics.lambda_nm = parse_double(key, value);
  else if (key == "f_mm")
    cfg.optics.f_mm = parse_double(key, value);
  else if (key == "w0_prime_mm")
    cfg.optics.w0_prime_mm = parse_double(key, value);
  else if (key == "w0_um")
    cfg.w0_um = parse_double(key, value);
  else if (key == "a_um")
    cfg.a_um = parse_double(key, value);
  else if (key == "epsilon_rad")
    cfg.epsilon_rad = parse_double(key, value);
  else if (key == "gamma_list")
    cfg.gamma_list = parse_list(key, value);
  else if (key == "grid_q_min_um")
    cfg.grid_q_min_um = parse_double(key, value);
  else if (key == "grid_q_max_um")
    cfg.grid_q_max_um = parse_double(key, value);
  else if (key == "grid_points")
    cfg.grid_points = parse_int(key, value);
  else if (key == "epsilon_list_rad")
    cfg.epsilon_list_rad = parse_list(key, value);
  else if (key == "gamma_min")
    cfg.gamma_min = parse_double(key, value);
  else if (key == "gamma_max")
    cfg.gamma_max = parse_double(key, value);
  else if (key == "gamma_points")
    cfg.gamma_points = parse_int(key, value);
  else if (key == "field_corr_width_mm")
    cfg.field_corr_width_mm = parse_double(key, value);
  else if (key == "x_extent_mm")
    cfg.x_extent_mm = parse_double(key, value);
  else if (key == "n_samples")
    cfg.n_samples = parse_int(key, value);
  else if (key == "n_realizations")
    cfg.n_realizations = parse_int(key, value);
  else if (key == "ref_x_mm")
    cfg.ref_x_mm = parse_double(key, value);
  else if (key == "seed") {
    try {
      cfg.seed = std::stoull(value);
    } catch (const std::exception&) {
      throw ConfigError("bad seed value: " + value);
    }
  } else if (key == "output_path")
    cfg.output_path = value;
  else
    throw ConfigError("unknown config key '" + key + "'");
}

std::vector<double> gamma_samples(const RunConfig& cfg) {
  if (!cfg.gamma_list.empty()) return cfg.gamma_list;
  if (cfg.gamma_points < 2 || !(cfg.gamma_min > 0.0) || !(cfg.gamma_max > cfg.gamma_min))
    throw ConfigError("log sweep needs 0 < gamma_min < gamma_max and gamma_points >= 2");
  std::vector<double> out(cfg.gamma_points);
  const double lmin = std::log(cfg.gamma_min);
  const double lstep = (std::log(cfg.gamma_max) - lmin) / (cfg.gamma_points - 1);
  for (int i = 0; i < cfg.gamma_points; ++i) out[i] = std::exp(lmin + i * lstep);
  return out;
}

void require_positive_gammas(const std::vector<double>& gammas) {
  if (gammas.empty()) throw ConfigError("gamma_list must not be empty");
  for (double g : gammas)
    if (!(g > 0.0)) throw ConfigError("gamma values must be positive");
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // LF line endings everywhere
  if (!out) throw IoFailure("cannot open output file: " + path);
  return out;
}

void write_common_header(std::ostream& out, const RunConfig& cfg, const char* command) {
  out << "# " << kToolVersion << "\n";
  out << "# command = " << command << "\n";
  if (!cfg.preset_name.empty()) out << "# preset = " << cfg.preset_name << "\n";
  out << "# lambda_nm = " << fmt17(cfg.optics.lambda_nm) << "\n";
  out << "# f_mm = " << fmt17(cfg.optics.f_mm) << "\n";
  out << "# w0_prime_mm = " << fmt17(cfg.optics.w0_prime_mm) << "\n";
  out << "# seed = " << cfg.seed << "\n";
}

void write_pointer_header(std::ostream& out, const RunConfig& cfg) {
  out << "# a_um = " << fmt17(cfg.a_um) << "\n";
  out << "# w0_um = " << fmt17(cfg.pointer_w0_um()) << "\n";
  const QGrid g = cfg.grid();
  out << "# grid_q_min_um = " << fmt17(g.q_min()) << "\n";
  out << "# grid_q_max_um = " << fmt17(g.q_max()) << "\n";
  out << "# grid_points = " << g.n_points() << "\n";
}

}  // namespace

QGrid RunConfig::grid() const {
  if (grid_points > 0) return QGrid(grid_q_min_um, grid_q_max_um, grid_points);
  return QGrid::default_for(pointer_w0_um());
}

SpeckleConfig RunConfig::speckle_config() const {
  return SpeckleConfig{field_corr_width_mm, x_extent_mm, n_samples, n_realizations, seed};
}

RunConfig preset(const std::string& name) {
  RunConfig cfg;
  cfg.preset_name = name;
  if (name == "fig2") {
    cfg.seed = 3;  // typical-quality fit for the frozen acceptance run
    return cfg;
  }
  if (name == "fig3b") {
    cfg.w0_um = 28.9;
    cfg.epsilon_rad = 1.00e-3;
    cfg.gamma_list = {2.04, 1.33, 0.865, 0.404};
    return cfg;
  }
  if (name == "fig3d") {
    cfg.w0_um = 28.9;
    cfg.epsilon_rad = 2.79e-2;
    cfg.gamma_list = {2.04, 1.33, 0.865, 0.404};
    return cfg;
  }
  if (name == "fig4") {
    cfg.w0_um = 28.9;
    cfg.epsilon_list_rad = {1.92e-2, 2.79e-2, 3.67e-2};
    cfg.gamma_min = 0.1;
    cfg.gamma_max = 20.0;
    cfg.gamma_points = 41;
    return cfg;
  }
  if (name == "weak02") {
    cfg.w0_um = 28.9;
    cfg.epsilon_rad = 0.2;
    cfg.gamma_list = {1000.0};
    cfg.grid_points = 1201;
    cfg.grid_q_min_um = -6.0 * 28.9;
    cfg.grid_q_max_um = 6.0 * 28.9;
    return cfg;
  }
  throw ConfigError("unknown preset '" + name + "'");
}

std::vector<std::string> preset_names() { return {"fig2", "fig3b", "fig3d", "fig4", "weak02"}; }

void apply_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file: " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError(path + ":" + std::to_string(lineno) + ": empty key or value");
    apply_key(cfg, key, value);
  }
}

void cmd_profile(const RunConfig& cfg, const std::string& out_path) {
  require_positive_gammas(cfg.gamma_list);
  if (cfg.a_um < 0.0) throw ConfigError("a_um must be >= 0");
  const double w0 = cfg.pointer_w0_um();
  const QGrid grid = cfg.grid();

  std::vector<Profile> profiles;
  profiles.reserve(cfg.gamma_list.size());
  for (double g : cfg.gamma_list)
    profiles.push_back(
        polarization_mixed_profile(cfg.a_um, cfg.epsilon_rad, MixedPointer{w0, g * w0}, grid));

  auto out = open_output(out_path);
  write_common_header(out, cfg, "profile");
  write_pointer_header(out, cfg);
  out << "# epsilon_rad = " << fmt17(cfg.epsilon_rad) << "\n";
  out << "# gamma_list = " << join_list(cfg.gamma_list) << "\n";
  out << "q_um";
  for (double g : cfg.gamma_list) out << ",density_gamma_" << fmt_short(g);
  out << "\n";
  for (int i = 0; i < grid.n_points(); ++i) {
    out << fmt17(grid.q(i));
    for (const auto& p : profiles) out << ',' << fmt17(p.density[i]);
    out << "\n";
  }
  if (!out) throw IoFailure("write failed: " + out_path);
}

void cmd_amplification(const RunConfig& cfg, const std::string& out_path) {
  if (cfg.epsilon_list_rad.empty()) throw ConfigError("epsilon_list_rad must not be empty");
  for (double e : cfg.epsilon_list_rad)
    if (e == 0.0) throw ConfigError("epsilon values must be nonzero");
  if (!(cfg.a_um > 0.0)) throw ConfigError("amplification needs a_um > 0");
  const std::vector<double> gammas = gamma_samples(cfg);
  require_positive_gammas(gammas);
  const double w0 = cfg.pointer_w0_um();
  const QGrid grid = cfg.grid();
  const Observable obs({-cfg.a_um, 0.0});

  std::vector<std::vector<double>> columns(cfg.epsilon_list_rad.size());
  for (std::size_t e = 0; e < cfg.epsilon_list_rad.size(); ++e) {
    const double eps = cfg.epsilon_list_rad[e];
    const auto [psi_in, psi_f] = polarization_states(eps);
    columns[e].reserve(gammas.size());
    for (double g : gammas) {
      const Profile p =
          polarization_mixed_profile(cfg.a_um, eps, MixedPointer{w0, g * w0}, grid);
      columns[e].push_back(std::abs(amplification(p, psi_in, obs)));
    }
  }

  auto out = open_output(out_path);
  write_common_header(out, cfg, "amplification");
  write_pointer_header(out, cfg);
  out << "# epsilon_list_rad = " << join_list(cfg.epsilon_list_rad) << "\n";
  out << "gamma";
  for (double e : cfg.epsilon_list_rad) out << ",abs_amplification_eps_" << fmt_short(e);
  out << "\n";
  for (std::size_t i = 0; i < gammas.size(); ++i) {
    out << fmt17(gammas[i]);
    for (const auto& col : columns) out << ',' << fmt17(col[i]);
    out << "\n";
  }
  if (!out) throw IoFailure("write failed: " + out_path);
}

CoherenceEstimate cmd_speckle(const RunConfig& cfg, const std::string& out_path) {
  const SpeckleConfig sc = cfg.speckle_config();
  const CorrelationCurve curve = intensity_cross_correlation(sc, cfg.ref_x_mm);
  const GaussianFitResult fit = fit_gaussian_width(curve);
  const CoherenceEstimate est = coherence_to_gamma(fit.width_mm, cfg.optics, fit.rmse);

  auto out = open_output(out_path);
  write_common_header(out, cfg, "speckle");
  out << "# field_corr_width_mm = " << fmt17(sc.field_corr_width_mm) << "\n";
  out << "# x_extent_mm = " << fmt17(sc.x_extent_mm) << "\n";
  out << "# n_samples = " << sc.n_samples << "\n";
  out << "# n_realizations = " << sc.n_realizations << "\n";
  out << "# ref_x_mm = " << fmt17(cfg.ref_x_mm) << "\n";
  out << "x_mm,C\n";
  for (std::size_t i = 0; i < curve.c.size(); ++i)
    out << fmt17(curve.x_mm[i]) << ',' << fmt17(curve.c[i]) << "\n";
  out << "# fitted_w_c_prime_mm = " << fmt17(est.w_c_prime_mm) << "\n";
  out << "# fit_center_mm = " << fmt17(fit.center_mm) << "\n";
  out << "# fit_rmse = " << fmt17(est.fit_rmse) << "\n";
  out << "# fit_points = " << fit.n_points << "\n";
  out << "# w0_um = " << fmt17(cfg.optics.w0_um()) << "\n";
  out << "# w_c_um = " << fmt17(est.w_c_um) << "\n";
  out << "# gamma = " << fmt17(est.gamma) << "\n";
  if (!out) throw IoFailure("write failed: " + out_path);
  return est;
}

CheckResult cmd_check(const RunConfig& cfg, std::ostream& report) {
  require_positive_gammas(cfg.gamma_list);
  const double w0 = cfg.pointer_w0_um();
  const auto [psi_in, psi_f] = polarization_states(cfg.epsilon_rad);
  const Observable obs({-cfg.a_um, 0.0});

  CheckResult result;
  result.weak = weak_value(psi_in, psi_f, obs);
  result.regime = weak_regime_diagnostic(psi_in, psi_f, obs, w0);

  report << kToolVersion << " check\n";
  report << "epsilon = " << fmt_short(cfg.epsilon_rad) << " rad, a = " << fmt_short(cfg.a_um)
         << " um, w0 = " << fmt_short(w0) << " um\n";
  report << "weak value A_w = " << fmt17(result.weak.value.real()) << " + "
         << fmt17(result.weak.value.imag()) << "i um\n";
  report << "overlap <psi_f|psi_in> = " << fmt17(result.weak.overlap.real()) << " + "
         << fmt17(result.weak.overlap.imag()) << "i\n";
  report << "r_linear = " << fmt_short(result.regime.r_linear)
         << ", r_higher = " << fmt_short(result.regime.r_higher)
         << ", in_regime = " << (result.regime.in_regime ? "yes" : "no") << "\n";
  if (!result.regime.in_regime)
    report << "note: outside the linear-response regime; the profile peak will "
              "deviate from A_w\n";

  // Agreement runs on a 1201-point grid; finer output grids add nothing here.
  const QGrid full = cfg.grid();
  const QGrid grid(full.q_min(), full.q_max(), std::min(full.n_points(), 1201));
  result.pass = true;
  for (double g : cfg.gamma_list) {
    const MixedPointer pointer{w0, g * w0};
    const Profile closed = mixed_profile(psi_in, psi_f, obs, pointer, grid);
    const Profile quad = oracle_mixed_profile(psi_in, psi_f, obs, pointer, grid,
                                              QuadratureSpec::for_pointer(pointer));
    const double linf = compare_profiles(closed, quad).linf;
    const bool ok = linf <= 1e-6;
    result.pass = result.pass && ok;
    result.gamma_linf.emplace_back(g, linf);
    report << "gamma = " << fmt_short(g) << ": Linf(closed form, quadrature oracle) = "
           << fmt_short(linf) << (ok ? " [ok]" : " [FAIL]") << "\n";
  }
  report << "check: " << (result.pass ? "PASS" : "FAIL") << "\n";
  return result;
}

}  // namespace wvsim::cli
