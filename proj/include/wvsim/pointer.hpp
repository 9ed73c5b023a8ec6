#pragma once
#include <cstddef>
#include <vector>

#include "wvsim/qsys.hpp"

namespace wvsim {

/// Gaussian pointer wavefunction amplitude exp(-q^2/w0^2); w0 is the spread.
struct PurePointer {
  double w0_um;
};

/// Partially coherent Gaussian pointer: coherent patches of width wc whose
/// centers are spread over w0. The degree of partial coherence is
/// gamma = wc/w0; gamma >> 1 is effectively pure, gamma -> 0 fully incoherent.
struct MixedPointer {
  double w0_um;
  double wc_um;
  double gamma() const { return wc_um / w0_um; }
};

/// Below this gamma the closed form is numerically singular and the analytic
/// incoherent limit (mixture of displaced marginals, no cross terms between
/// distinct eigenvalues) is returned instead.
inline constexpr double kIncoherentGammaCutoff = 1e-6;

/// Uniform pointer-position grid, q in um.
class QGrid {
public:
  QGrid(double q_min_um, double q_max_um, int n_points);

  double q_min() const { return q_min_; }
  double q_max() const { return q_max_; }
  int n_points() const { return n_; }
  double dq() const { return (q_max_ - q_min_) / (n_ - 1); }
  double q(int i) const { return q_min_ + i * dq(); }

  /// Default production grid: [-6 w0, +6 w0], 4801 points.
  static QGrid default_for(double w0_um);

  friend bool operator==(const QGrid& a, const QGrid& b) {
    return a.q_min_ == b.q_min_ && a.q_max_ == b.q_max_ && a.n_ == b.n_;
  }

private:
  double q_min_;
  double q_max_;
  int n_;
};

/// Postselected pointer probability density sampled on a grid. density is
/// normalized to unit trapezoid integral; raw_mass keeps the unnormalized
/// integral (with physical prefactor), a proxy for the postselection
/// probability.
struct Profile {
  QGrid grid;
  std::vector<double> density;  ///< um^-1, >= 0
  double raw_mass;
};

/// Numerical diagnostics from a closed-form evaluation.
struct ProfileEvalInfo {
  double max_imag_rel = 0.0;     ///< max |Im(sum)| relative to max |Re(sum)|
  double min_density_rel = 0.0;  ///< most negative pre-clamp value / max value
};

double trapezoid_mass(const QGrid& grid, const std::vector<double>& values);

namespace detail {
/// Clamps rounding negatives to zero and normalizes; the true unnormalized
/// density is values[i] * exp(log_scale) * prefactor. Throws ZeroMass when the
/// integral falls below 1e-300.
Profile normalize_into_profile(const QGrid& grid, std::vector<double> values, double log_scale,
                               double prefactor, ProfileEvalInfo* info);
}  // namespace detail

/// Exact postselected distribution for a pure pointer:
/// density(q) ~ |sum_k alpha_k beta_k^* exp(-(q-a_k)^2/w0^2)|^2.
Profile pure_profile(const SystemState& psi_in, const SystemState& psi_f, const Observable& obs,
                     const PurePointer& pointer, const QGrid& grid,
                     ProfileEvalInfo* info = nullptr);

/// Weak-regime single-Gaussian approximation: density ~ exp(-2(q-A_w)^2/w0^2).
Profile weak_approx_profile(double weak_value_um, const PurePointer& pointer, const QGrid& grid);

/// Exact postselected distribution for a partially coherent pointer
/// (closed form of the q0-convolved density matrix). Exponents are combined
/// in log space with max subtraction before exponentiation.
Profile mixed_profile(const SystemState& psi_in, const SystemState& psi_f, const Observable& obs,
                      const MixedPointer& pointer, const QGrid& grid,
                      ProfileEvalInfo* info = nullptr);

/// Polarization specialization (eigenvalues (-a, 0), preparation at pi/4,
/// postselection at beta = -pi/4 + epsilon), written as the explicit
/// three-term expression in cos^2(beta), sin(2 beta), sin^2(beta).
/// Pointwise equal to mixed_profile over the shared domain.
Profile polarization_mixed_profile(double a_um, double epsilon_rad, const MixedPointer& pointer,
                                   const QGrid& grid);

/// Abscissa of the global density maximum, refined by a 3-point parabolic fit;
/// exact ties resolve to the leftmost grid point.
double peak_location(const Profile& profile);

/// peak_location(profile) / <psi_in|A|psi_in>.
double amplification(const Profile& profile, const SystemState& psi_in, const Observable& obs);

}  // namespace wvsim
