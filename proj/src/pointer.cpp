#include "wvsim/pointer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "wvsim/errors.hpp"
#include "wvsim/parallel.hpp"

namespace wvsim {

namespace {

constexpr double kZeroMassFloor = 1e-300;

void require_dims(const SystemState& psi_in, const SystemState& psi_f, const Observable& obs) {
  if (psi_in.dim() != obs.dim() || psi_f.dim() != obs.dim())
    throw DimensionMismatch("state/observable dimensions disagree");
}

void validate_pure(const PurePointer& p) {
  if (!std::isfinite(p.w0_um) || !(p.w0_um > 0.0))
    throw InvalidParameter("pointer w0 must be finite and positive");
}

void validate_mixed(const MixedPointer& p) {
  if (!std::isfinite(p.w0_um) || !(p.w0_um > 0.0) || !std::isfinite(p.wc_um) || !(p.wc_um > 0.0))
    throw InvalidParameter("pointer widths must be finite and positive");
}

/// Postselection coefficients c_k = alpha_k beta_k^*.
std::vector<complexd> postselection_coeffs(const SystemState& psi_in, const SystemState& psi_f) {
  std::vector<complexd> c(psi_in.dim());
  for (std::size_t k = 0; k < c.size(); ++k) c[k] = psi_in[k] * std::conj(psi_f[k]);
  return c;
}

}  // namespace

namespace detail {

Profile normalize_into_profile(const QGrid& grid, std::vector<double> values, double log_scale,
                               double prefactor, ProfileEvalInfo* info) {
  double maxv = 0.0;
  double minv = 0.0;
  for (double v : values) {
    maxv = std::max(maxv, v);
    minv = std::min(minv, v);
  }
  if (info) info->min_density_rel = maxv > 0.0 ? minv / maxv : 0.0;
  for (double& v : values)
    if (v < 0.0) v = 0.0;

  const double mass = trapezoid_mass(grid, values);
  const double log_raw = std::log(prefactor) + log_scale + (mass > 0.0 ? std::log(mass) : -1e9);
  if (!(mass > 0.0) || log_raw < std::log(kZeroMassFloor))
    throw ZeroMass("postselected pointer mass below 1e-300 on this grid");
  for (double& v : values) v /= mass;
  return Profile{grid, std::move(values), std::exp(log_raw)};
}

}  // namespace detail

namespace {

/// Analytic gamma -> 0 limit: cross terms between distinct eigenvalues are
/// exponentially suppressed, but terms within a degenerate eigenvalue group
/// survive with weight |sum_k alpha_k beta_k^*|^2.
Profile incoherent_limit_profile(const SystemState& psi_in, const SystemState& psi_f,
                                 const Observable& obs, const MixedPointer& pointer,
                                 const QGrid& grid, ProfileEvalInfo* info) {
  const auto coeffs = postselection_coeffs(psi_in, psi_f);
  std::map<double, complexd> groups;
  for (std::size_t k = 0; k < obs.dim(); ++k) groups[obs[k]] += coeffs[k];

  const double w0 = pointer.w0_um;
  const double wc = pointer.wc_um;
  const double g2 = pointer.gamma() * pointer.gamma();
  const double envelope = w0 * w0 * (g2 + 2.0);  // density ~ exp(-2(q-a)^2/envelope)
  const double prefactor = std::sqrt(2.0 / (M_PI * (2.0 * w0 * w0 + wc * wc)));

  std::vector<double> values(grid.n_points(), 0.0);
  for (const auto& [a, c] : groups) {
    const double weight = std::norm(c);
    if (weight == 0.0) continue;
    for (int i = 0; i < grid.n_points(); ++i) {
      const double d = grid.q(i) - a;
      values[i] += weight * std::exp(-2.0 * d * d / envelope);
    }
  }
  if (info) *info = {};
  return detail::normalize_into_profile(grid, std::move(values), 0.0, prefactor, info);
}

}  // namespace

QGrid::QGrid(double q_min_um, double q_max_um, int n_points)
    : q_min_(q_min_um), q_max_(q_max_um), n_(n_points) {
  if (!std::isfinite(q_min_) || !std::isfinite(q_max_) || q_min_ >= q_max_)
    throw InvalidParameter("QGrid needs finite q_min < q_max");
  if (n_ < 3) throw InvalidParameter("QGrid needs at least 3 points");
}

QGrid QGrid::default_for(double w0_um) { return QGrid(-6.0 * w0_um, 6.0 * w0_um, 4801); }

double trapezoid_mass(const QGrid& grid, const std::vector<double>& values) {
  if (static_cast<int>(values.size()) != grid.n_points())
    throw GridMismatch("value count does not match grid");
  double sum = 0.5 * (values.front() + values.back());
  for (std::size_t i = 1; i + 1 < values.size(); ++i) sum += values[i];
  return sum * grid.dq();
}

Profile pure_profile(const SystemState& psi_in, const SystemState& psi_f, const Observable& obs,
                     const PurePointer& pointer, const QGrid& grid, ProfileEvalInfo* info) {
  require_dims(psi_in, psi_f, obs);
  validate_pure(pointer);
  const auto coeffs = postselection_coeffs(psi_in, psi_f);
  const double w0sq = pointer.w0_um * pointer.w0_um;
  const double prefactor = std::sqrt(2.0 / (M_PI * w0sq));

  std::vector<double> values(grid.n_points());
  parallel_for(values.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const double q = grid.q(static_cast<int>(i));
      complexd amp{0.0, 0.0};
      for (std::size_t k = 0; k < coeffs.size(); ++k) {
        const double d = q - obs[k];
        amp += coeffs[k] * std::exp(-d * d / w0sq);
      }
      values[i] = std::norm(amp);
    }
  });
  if (info) *info = {};  // |amp|^2 is real by construction
  return detail::normalize_into_profile(grid, std::move(values), 0.0, prefactor, info);
}

Profile weak_approx_profile(double weak_value_um, const PurePointer& pointer, const QGrid& grid) {
  validate_pure(pointer);
  if (!std::isfinite(weak_value_um)) throw InvalidParameter("weak value must be finite");
  const double w0sq = pointer.w0_um * pointer.w0_um;
  std::vector<double> values(grid.n_points());
  for (int i = 0; i < grid.n_points(); ++i) {
    const double d = grid.q(i) - weak_value_um;
    values[i] = std::exp(-2.0 * d * d / w0sq);
  }
  return detail::normalize_into_profile(grid, std::move(values), 0.0, std::sqrt(2.0 / (M_PI * w0sq)), nullptr);
}

Profile mixed_profile(const SystemState& psi_in, const SystemState& psi_f, const Observable& obs,
                      const MixedPointer& pointer, const QGrid& grid, ProfileEvalInfo* info) {
  require_dims(psi_in, psi_f, obs);
  validate_mixed(pointer);
  if (pointer.gamma() < kIncoherentGammaCutoff)
    return incoherent_limit_profile(psi_in, psi_f, obs, pointer, grid, info);

  const auto coeffs = postselection_coeffs(psi_in, psi_f);
  const std::size_t d = obs.dim();
  const double w0 = pointer.w0_um;
  const double wc = pointer.wc_um;
  const double g2 = pointer.gamma() * pointer.gamma();
  const double inv_w0sq = 1.0 / (w0 * w0);
  const double inv_g2 = 1.0 / g2;
  const double inv_g4p2g2 = 1.0 / (g2 * g2 + 2.0 * g2);
  const double prefactor = std::sqrt(2.0 / (M_PI * (2.0 * w0 * w0 + wc * wc)));

  const std::size_t n = static_cast<std::size_t>(grid.n_points());
  std::vector<double> real_scaled(n);
  std::vector<double> imag_scaled(n);
  std::vector<double> exp_max(n);

  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    std::vector<double> expo(d * d);
    for (std::size_t i = begin; i < end; ++i) {
      const double q = grid.q(static_cast<int>(i));
      double m = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < d; ++k) {
        const double dk = q - obs[k];
        for (std::size_t j = 0; j < d; ++j) {
          const double dj = q - obs[j];
          const double s = 2.0 * q - obs[k] - obs[j];
          const double e = inv_w0sq * (-(dk * dk + dj * dj) * inv_g2 + s * s * inv_g4p2g2);
          expo[k * d + j] = e;
          m = std::max(m, e);
        }
      }
      complexd sum{0.0, 0.0};
      for (std::size_t k = 0; k < d; ++k)
        for (std::size_t j = 0; j < d; ++j)
          sum += coeffs[k] * std::conj(coeffs[j]) * std::exp(expo[k * d + j] - m);
      real_scaled[i] = sum.real();
      imag_scaled[i] = sum.imag();
      exp_max[i] = m;
    }
  });

  const double global_max = *std::max_element(exp_max.begin(), exp_max.end());
  std::vector<double> values(n);
  double max_abs_real = 0.0;
  double max_abs_imag = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double scale = std::exp(exp_max[i] - global_max);
    values[i] = real_scaled[i] * scale;
    max_abs_real = std::max(max_abs_real, std::abs(values[i]));
    max_abs_imag = std::max(max_abs_imag, std::abs(imag_scaled[i]) * scale);
  }
  if (info) info->max_imag_rel = max_abs_real > 0.0 ? max_abs_imag / max_abs_real : 0.0;
  return detail::normalize_into_profile(grid, std::move(values), global_max, prefactor, info);
}

Profile polarization_mixed_profile(double a_um, double epsilon_rad, const MixedPointer& pointer,
                                   const QGrid& grid) {
  if (!std::isfinite(a_um) || a_um < 0.0) throw InvalidParameter("displacement a must be >= 0");
  if (!std::isfinite(epsilon_rad)) throw InvalidParameter("epsilon must be finite");
  validate_mixed(pointer);
  if (pointer.gamma() < kIncoherentGammaCutoff) {
    // The three-term expression is singular here too; use the general path,
    // which handles the limit, with the states spelled out.
    const double beta = -M_PI / 4 + epsilon_rad;
    SystemState psi_in({complexd{std::sqrt(0.5), 0.0}, complexd{std::sqrt(0.5), 0.0}});
    SystemState psi_f({complexd{std::cos(beta), 0.0}, complexd{std::sin(beta), 0.0}});
    return mixed_profile(psi_in, psi_f, Observable({-a_um, 0.0}), pointer, grid);
  }

  const double beta = -M_PI / 4 + epsilon_rad;
  const double cb2 = std::cos(beta) * std::cos(beta);
  const double sb2 = std::sin(beta) * std::sin(beta);
  const double s2b = std::sin(2.0 * beta);
  const double w0 = pointer.w0_um;
  const double wc = pointer.wc_um;
  const double g2 = pointer.gamma() * pointer.gamma();
  const double inv_w0sq = 1.0 / (w0 * w0);
  const double inv_g2 = 1.0 / g2;
  const double inv_g4p2g2 = 1.0 / (g2 * g2 + 2.0 * g2);
  // Overall 1/2 from |alpha|^2 at 45-degree preparation keeps raw_mass equal
  // to the general closed form's.
  const double prefactor = 0.5 * std::sqrt(2.0 / (M_PI * (2.0 * w0 * w0 + wc * wc)));

  std::vector<double> values(grid.n_points());
  parallel_for(values.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const double q = grid.q(static_cast<int>(i));
      const double aq = a_um + q;
      const double th = inv_w0sq * (-2.0 * aq * aq * inv_g2 + 4.0 * aq * aq * inv_g4p2g2);
      const double a2q = a_um + 2.0 * q;
      const double tc = inv_w0sq * (-(a_um * a_um + 2.0 * a_um * q + 2.0 * q * q) * inv_g2 +
                                    a2q * a2q * inv_g4p2g2);
      const double tv = inv_w0sq * (-2.0 * q * q * inv_g2 + 4.0 * q * q * inv_g4p2g2);
      values[i] = cb2 * std::exp(th) + s2b * std::exp(tc) + sb2 * std::exp(tv);
    }
  });
  return detail::normalize_into_profile(grid, std::move(values), 0.0, prefactor, nullptr);
}

double peak_location(const Profile& profile) {
  const auto& dens = profile.density;
  // max_element keeps the first occurrence, i.e. the leftmost on exact ties.
  const auto max_it = std::max_element(dens.begin(), dens.end());
  const auto min_it = std::min_element(dens.begin(), dens.end());
  if (*max_it - *min_it < 1e-12 * *max_it)
    throw FlatProfile("profile has no usable maximum");
  const int i = static_cast<int>(max_it - dens.begin());
  if (i == 0 || i == profile.grid.n_points() - 1) return profile.grid.q(i);
  const double y0 = dens[i - 1], y1 = dens[i], y2 = dens[i + 1];
  const double denom = y0 - 2.0 * y1 + y2;
  double shift = 0.0;
  if (denom != 0.0) shift = std::clamp(0.5 * (y0 - y2) / denom, -0.5, 0.5);
  return profile.grid.q(i) + shift * profile.grid.dq();
}

double amplification(const Profile& profile, const SystemState& psi_in, const Observable& obs) {
  const double mean = expectation(psi_in, obs);
  if (std::abs(mean) < 1e-15)
    throw ZeroExpectation("expectation value below 1e-15 um; amplification undefined");
  return peak_location(profile) / mean;
}

}  // namespace wvsim
