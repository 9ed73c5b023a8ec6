#pragma once
#include <vector>

#include "wvsim/pointer.hpp"
#include "wvsim/qsys.hpp"

namespace wvsim {

/// Uniform trapezoid quadrature over the density-matrix center coordinate q0.
struct QuadratureSpec {
  double q0_min_um;
  double q0_max_um;
  int n_nodes;

  /// Default: +-6 max(w0, wc). 2001 nodes, scaled up when the narrowest
  /// integrand width would be undersampled (large gamma), so the built-in
  /// convergence check has a chance to pass.
  static QuadratureSpec for_pointer(const MixedPointer& pointer);
};

/// Pointer density matrix sampled on a grid; rho[i*n+j] = rho(q_i, q_j) * dq
/// (dimensionless cell mass, so the trace approximates 1).
struct DensityMatrixGrid {
  QGrid grid;
  std::vector<complexd> rho;

  complexd at(int i, int j) const { return rho[static_cast<std::size_t>(i) * grid.n_points() + j]; }
  double trace() const;
  double hermiticity_residual() const;  ///< max |rho_ij - conj(rho_ji)| / max |rho_ij|
};

/// Builds the partially coherent pointer density matrix by direct q0
/// quadrature of its defining Gaussian mixture.
DensityMatrixGrid build_pointer_density_matrix(const MixedPointer& pointer, const QGrid& grid);

struct EvolutionInfo {
  double hermiticity_residual = 0.0;  ///< sampled, relative to max sampled |rho_f|
  double max_imag_rel = 0.0;          ///< diagonal imaginary residual
};

/// Brute-force check of the closed form: evaluates the q0 integral of the
/// postselected density by trapezoid quadrature for every grid q. Always runs
/// the node-doubling convergence test and throws QuadratureUnderResolved if
/// the result is not converged to 1e-8 of the profile maximum.
Profile oracle_mixed_profile(const SystemState& psi_in, const SystemState& psi_f,
                             const Observable& obs, const MixedPointer& pointer, const QGrid& grid,
                             const QuadratureSpec& quad);

/// Independent route through the full state evolution: builds the pointer
/// density matrix on an internally padded grid, applies the per-eigenvalue
/// translations via bilinear interpolation, contracts with the postselection
/// coefficients, and returns the diagonal.
Profile oracle_density_evolution(const SystemState& psi_in, const SystemState& psi_f,
                                 const Observable& obs, const MixedPointer& pointer,
                                 const QGrid& grid, EvolutionInfo* info = nullptr);

struct ProfileDistance {
  double l1;             ///< integral |p1 - p2| dq
  double linf;           ///< max pointwise |p1 - p2| / max(p1)
  double peak_delta_um;  ///< |peak_location(p1) - peak_location(p2)|
};

ProfileDistance compare_profiles(const Profile& p1, const Profile& p2);

}  // namespace wvsim
