#pragma once
#include <cstdint>
#include <vector>

#include "wvsim/qsys.hpp"

namespace wvsim {

/// Pseudo-thermal source model: stationary circular complex Gaussian field
/// with Gaussian autocorrelation <E*(x) E(x')> = exp(-(x-x')^2 / w_g^2),
/// generated by convolving white complex Gaussian noise with a Gaussian
/// kernel and normalizing to unit mean intensity.
struct SpeckleConfig {
  double field_corr_width_mm;  ///< ground-truth w_g
  double x_extent_mm;
  int n_samples;
  int n_realizations;
  std::uint64_t seed;

  int sample_count() const { return n_samples; }
  double dx_mm() const { return x_extent_mm / (n_samples - 1); }
  double x_mm(int i) const { return -0.5 * x_extent_mm + i * dx_mm(); }

  void validate() const;  ///< extent >= 8 w_g, n_samples >= 256
};

/// Normalized intensity cross-correlation sampled against a fixed reference
/// detector. Values carry finite-sample noise of order 1/sqrt(n_realizations).
struct CorrelationCurve {
  std::vector<double> x_mm;  ///< D1 offsets relative to the reference detector
  std::vector<double> c;
};

struct GaussianFitResult {
  double width_mm;   ///< e^-2 width: c(x0 +- width) = e^-2
  double center_mm;
  double rmse;
  int n_points;      ///< lobe points used by the fit
};

/// Focusing optics that map the collimated-beam widths to the measurement
/// plane: w0 = lambda f / (pi w0').
struct OpticalConfig {
  double lambda_nm;
  double f_mm;
  double w0_prime_mm;

  double w0_um() const;
};

/// Measured-width conversion chain: w_c = w'_c w0 / w'_0, gamma = w_c / w0.
struct CoherenceEstimate {
  double w_c_prime_mm;
  double w_c_um;
  double gamma;
  double fit_rmse;
};

/// One field realization, deterministic in (seed, realization). Realizations
/// use independent RNG streams, so they are order-insensitive.
std::vector<complexd> generate_speckle_field(const SpeckleConfig& cfg, std::uint64_t realization);

/// Treats realizations as time samples and computes the normalized covariance
/// of intensity fluctuations between each position and ref_x.
CorrelationCurve intensity_cross_correlation(const SpeckleConfig& cfg, double ref_x_mm);

/// Least-squares fit of the contiguous c > 0.05 lobe around the curve maximum
/// to exp(-2 (x-x0)^2 / w^2). Throws FitDiverged when fewer than 9 lobe points
/// exist, the lobe is not Gaussian-concave, or the residual RMSE exceeds 0.2.
GaussianFitResult fit_gaussian_width(const CorrelationCurve& curve);

CoherenceEstimate coherence_to_gamma(double w_c_prime_mm, const OpticalConfig& optics,
                                     double fit_rmse = 0.0);

}  // namespace wvsim
