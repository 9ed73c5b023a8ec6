#include "wvsim/qsys.hpp"

#include <cmath>
#include <limits>

#include "wvsim/errors.hpp"

namespace wvsim {

namespace {

void require_same_dim(const SystemState& a, const Observable& b) {
  if (a.dim() != b.dim())
    throw DimensionMismatch("state dimension " + std::to_string(a.dim()) +
                            " vs observable dimension " + std::to_string(b.dim()));
}

void require_same_dim(const SystemState& a, const SystemState& b) {
  if (a.dim() != b.dim())
    throw DimensionMismatch("state dimensions differ: " + std::to_string(a.dim()) + " vs " +
                            std::to_string(b.dim()));
}

}  // namespace

SystemState::SystemState(std::vector<complexd> amplitudes) : amps_(std::move(amplitudes)) {
  if (amps_.size() < 2) throw InvalidParameter("SystemState needs dimension >= 2");
  double norm2 = 0.0;
  for (const auto& a : amps_) {
    if (!std::isfinite(a.real()) || !std::isfinite(a.imag()))
      throw InvalidParameter("SystemState amplitude not finite");
    norm2 += std::norm(a);
  }
  if (std::abs(norm2 - 1.0) > 1e-12)
    throw InvalidParameter("SystemState not normalized: sum |a_k|^2 = " + std::to_string(norm2));
}

Observable::Observable(std::vector<double> eigenvalues_um) : eigs_(std::move(eigenvalues_um)) {
  if (eigs_.size() < 2) throw InvalidParameter("Observable needs dimension >= 2");
  for (double e : eigs_)
    if (!std::isfinite(e)) throw InvalidParameter("Observable eigenvalue not finite");
}

double Observable::max_abs_eigenvalue() const {
  double m = 0.0;
  for (double e : eigs_) m = std::max(m, std::abs(e));
  return m;
}

WeakValueResult weak_value(const SystemState& psi_in, const SystemState& psi_f,
                           const Observable& obs) {
  require_same_dim(psi_in, obs);
  require_same_dim(psi_in, psi_f);
  complexd num{0.0, 0.0};
  complexd den{0.0, 0.0};
  for (std::size_t k = 0; k < obs.dim(); ++k) {
    const complexd bk_conj = std::conj(psi_f[k]);
    num += bk_conj * obs[k] * psi_in[k];
    den += bk_conj * psi_in[k];
  }
  if (std::abs(den) < kOrthogonalityTol)
    throw OrthogonalPostselection("|<psi_f|psi_in>| = " + std::to_string(std::abs(den)) +
                                  " below tolerance; weak value undefined");
  return {num / den, den};
}

double expectation(const SystemState& psi, const Observable& obs) {
  require_same_dim(psi, obs);
  double sum = 0.0;
  for (std::size_t k = 0; k < obs.dim(); ++k) sum += std::norm(psi[k]) * obs[k];
  return sum;
}

RegimeDiagnostic weak_regime_diagnostic(const SystemState& psi_in, const SystemState& psi_f,
                                        const Observable& obs, double w0_um, int n_max) {
  if (!(w0_um > 0.0) || !std::isfinite(w0_um))
    throw InvalidParameter("w0 must be finite and positive");
  if (n_max < 2) throw InvalidParameter("n_max must be >= 2");

  const WeakValueResult wv = weak_value(psi_in, psi_f, obs);
  const double abs_aw = std::abs(wv.value);
  const double r_linear = abs_aw / w0_um;

  // |<f|A^n|in>/<f|in>| via running powers of the eigenvalues.
  double r_higher = 0.0;
  std::vector<double> pow_n(obs.dim());
  for (std::size_t k = 0; k < obs.dim(); ++k) pow_n[k] = obs[k];
  double w0_pow = 1.0;  // w0^{n-1}
  for (int n = 2; n <= n_max; ++n) {
    complexd moment{0.0, 0.0};
    for (std::size_t k = 0; k < obs.dim(); ++k) {
      pow_n[k] *= obs[k];
      moment += std::conj(psi_f[k]) * pow_n[k] * psi_in[k];
    }
    moment /= wv.overlap;
    w0_pow *= w0_um;
    const double num = std::abs(moment);
    double ratio;
    if (num == 0.0)
      ratio = 0.0;
    else if (abs_aw == 0.0)
      ratio = std::numeric_limits<double>::infinity();
    else
      ratio = num / (w0_pow * abs_aw);
    r_higher = std::max(r_higher, ratio);
  }
  return {r_linear, r_higher, r_higher < 1.0 && r_linear < 1.0};
}

std::pair<SystemState, SystemState> polarization_states(double epsilon_rad) {
  if (!std::isfinite(epsilon_rad) || std::abs(epsilon_rad) >= M_PI / 4)
    throw InvalidParameter("polarization epsilon must satisfy |epsilon| < pi/4");
  const double alpha = M_PI / 4;
  const double beta = -M_PI / 4 + epsilon_rad;
  SystemState psi_in({complexd{std::cos(alpha), 0.0}, complexd{std::sin(alpha), 0.0}});
  SystemState psi_f({complexd{std::cos(beta), 0.0}, complexd{std::sin(beta), 0.0}});
  return {psi_in, psi_f};
}

}  // namespace wvsim
