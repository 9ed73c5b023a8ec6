#pragma once
#include <complex>
#include <cstddef>
#include <utility>
#include <vector>

namespace wvsim {

using complexd = std::complex<double>;

/// Below this |<psi_f|psi_in>| the weak value is numerically meaningless.
inline constexpr double kOrthogonalityTol = 1e-12;

/// Pure system state expanded in the eigenbasis of the measured observable.
/// Amplitudes must be normalized to unity within 1e-12.
class SystemState {
public:
  explicit SystemState(std::vector<complexd> amplitudes);

  std::size_t dim() const { return amps_.size(); }
  const std::vector<complexd>& amplitudes() const { return amps_; }
  complexd operator[](std::size_t k) const { return amps_[k]; }

private:
  std::vector<complexd> amps_;
};

/// Observable given by its eigenvalues, in pointer-displacement units (um).
/// Degenerate eigenvalues are allowed.
class Observable {
public:
  explicit Observable(std::vector<double> eigenvalues_um);

  std::size_t dim() const { return eigs_.size(); }
  const std::vector<double>& eigenvalues() const { return eigs_; }
  double operator[](std::size_t k) const { return eigs_[k]; }
  double max_abs_eigenvalue() const;

private:
  std::vector<double> eigs_;
};

struct WeakValueResult {
  complexd value;    ///< <psi_f|A|psi_in> / <psi_f|psi_in>, um
  complexd overlap;  ///< <psi_f|psi_in>
};

/// Validity diagnostic for the linear-response (weak) expansion, using the
/// characteristic momentum p* = hbar/w0 so that r_linear = |A_w|/w0. The
/// momentum scale is a convention fixed up to an O(1) factor; rescale the
/// ratios if a different p* is wanted.
struct RegimeDiagnostic {
  double r_linear;   ///< |A_w| / w0
  double r_higher;   ///< max_{n=2..n_max} |<f|A^n|in>/<f|in>| / (w0^{n-1} |A_w|)
  bool in_regime;    ///< r_higher < 1 and r_linear < 1
};

WeakValueResult weak_value(const SystemState& psi_in, const SystemState& psi_f,
                           const Observable& obs);

/// <psi|A|psi> = sum_k |alpha_k|^2 a_k, um.
double expectation(const SystemState& psi, const Observable& obs);

RegimeDiagnostic weak_regime_diagnostic(const SystemState& psi_in, const SystemState& psi_f,
                                        const Observable& obs, double w0_um, int n_max = 4);

/// Linear-polarization preparation/postselection pair in the {|H>,|V>} basis:
/// psi_in at pi/4, psi_f at -pi/4 + epsilon, so <psi_f|psi_in> = sin(epsilon).
/// Requires |epsilon| < pi/4; epsilon = 0 gives exactly orthogonal states.
std::pair<SystemState, SystemState> polarization_states(double epsilon_rad);

}  // namespace wvsim
