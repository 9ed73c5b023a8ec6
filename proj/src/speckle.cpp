#include "wvsim/speckle.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "wvsim/errors.hpp"
#include "wvsim/parallel.hpp"

namespace wvsim {

namespace {

std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 33;
  z *= 0xff51afd7ed558ccdULL;
  z ^= z >> 33;
  z *= 0xc4ceb9fe1a85ec53ULL;
  z ^= z >> 33;
  return z;
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t realization) {
  return mix64(seed + mix64(realization + 0x9e3779b97f4a7c15ULL));
}

/// Standard normal pairs from pinned 53-bit uniforms (Box-Muller), so the
/// stream depends only on the mt19937_64 sequence, not on the standard
/// library's distribution implementation.
class NormalSource {
public:
  explicit NormalSource(std::uint64_t seed) : rng_(seed) {}

  double operator()() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = (static_cast<double>(rng_() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
    const double u2 = static_cast<double>(rng_() >> 11) * 0x1.0p-53;          // [0, 1)
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * M_PI * u2);
    have_spare_ = true;
    return r * std::cos(2.0 * M_PI * u2);
  }

private:
  std::mt19937_64 rng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

struct Kernel {
  std::vector<double> taps;  // normalized so sum of squares = 1
  int half_width;
};

/// exp(-x^2/sigma^2) with sigma = w_g/sqrt(2), so the field autocorrelation
/// (kernel correlated with itself) is exp(-(dx)^2 / w_g^2). Truncated at
/// 5 sigma; tap normalization fixes <|E|^2> = 1 exactly in expectation.
Kernel make_kernel(const SpeckleConfig& cfg) {
  const double sigma = cfg.field_corr_width_mm / std::sqrt(2.0);
  const double dx = cfg.dx_mm();
  const int half = static_cast<int>(std::ceil(5.0 * sigma / dx));
  Kernel k;
  k.half_width = half;
  k.taps.resize(2 * half + 1);
  double sq = 0.0;
  for (int j = -half; j <= half; ++j) {
    const double v = std::exp(-(j * dx) * (j * dx) / (sigma * sigma));
    k.taps[j + half] = v;
    sq += v * v;
  }
  const double inv = 1.0 / std::sqrt(sq);
  for (double& t : k.taps) t *= inv;
  return k;
}

struct MomentSums {
  std::vector<double> s1, s2, s11;
  double s1_ref = 0.0, s2_ref = 0.0;

  explicit MomentSums(std::size_t n) : s1(n, 0.0), s2(n, 0.0), s11(n, 0.0) {}

  void merge(const MomentSums& other) {
    for (std::size_t i = 0; i < s1.size(); ++i) {
      s1[i] += other.s1[i];
      s2[i] += other.s2[i];
      s11[i] += other.s11[i];
    }
    s1_ref += other.s1_ref;
    s2_ref += other.s2_ref;
  }
};

std::vector<complexd> field_with_kernel(const SpeckleConfig& cfg, std::uint64_t realization,
                                        const Kernel& kernel) {
  const int n = cfg.n_samples;
  const int half = kernel.half_width;
  NormalSource normal(stream_seed(cfg.seed, realization));
  std::vector<complexd> noise(n + 2 * half);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (auto& z : noise) {
    const double re = normal();
    const double im = normal();
    z = complexd{re * inv_sqrt2, im * inv_sqrt2};  // unit-variance complex
  }
  std::vector<complexd> field(n);
  for (int i = 0; i < n; ++i) {
    complexd acc{0.0, 0.0};
    for (int j = 0; j < 2 * half + 1; ++j) acc += kernel.taps[j] * noise[i + j];
    field[i] = acc;
  }
  return field;
}

}  // namespace

void SpeckleConfig::validate() const {
  if (!std::isfinite(field_corr_width_mm) || field_corr_width_mm <= 0.0)
    throw InvalidParameter("field correlation width must be positive");
  if (!std::isfinite(x_extent_mm) || x_extent_mm < 8.0 * field_corr_width_mm)
    throw InvalidParameter("x extent must cover at least 8 correlation widths");
  if (n_samples < 256) throw InvalidParameter("need at least 256 spatial samples");
}

double OpticalConfig::w0_um() const {
  if (lambda_nm <= 0.0 || f_mm <= 0.0 || w0_prime_mm <= 0.0)
    throw InvalidParameter("optical parameters must be positive");
  // lambda f / (pi w0'), expressed in um.
  return (lambda_nm * 1e-3) * (f_mm * 1e3) / (M_PI * (w0_prime_mm * 1e3));
}

std::vector<complexd> generate_speckle_field(const SpeckleConfig& cfg, std::uint64_t realization) {
  cfg.validate();
  return field_with_kernel(cfg, realization, make_kernel(cfg));
}

CorrelationCurve intensity_cross_correlation(const SpeckleConfig& cfg, double ref_x_mm) {
  cfg.validate();
  if (cfg.n_realizations < 100)
    throw InsufficientRealizations("need at least 100 realizations, got " +
                                   std::to_string(cfg.n_realizations));
  if (ref_x_mm < cfg.x_mm(0) || ref_x_mm > cfg.x_mm(cfg.n_samples - 1))
    throw InvalidParameter("reference position outside the sampled extent");
  const int ref = static_cast<int>(std::lround((ref_x_mm - cfg.x_mm(0)) / cfg.dx_mm()));

  const Kernel kernel = make_kernel(cfg);
  const std::size_t n = static_cast<std::size_t>(cfg.n_samples);
  const int R = cfg.n_realizations;

  // Fixed-size realization chunks accumulated independently and merged in
  // order: the result is bitwise identical for any thread count.
  constexpr int kChunk = 64;
  const int n_chunks = (R + kChunk - 1) / kChunk;
  std::vector<MomentSums> partial(n_chunks, MomentSums(n));
  parallel_for(static_cast<std::size_t>(n_chunks), [&](std::size_t begin, std::size_t end) {
    std::vector<double> intensity(n);
    for (std::size_t c = begin; c < end; ++c) {
      MomentSums& m = partial[c];
      const int r_end = std::min(R, static_cast<int>(c + 1) * kChunk);
      for (int r = static_cast<int>(c) * kChunk; r < r_end; ++r) {
        const auto field = field_with_kernel(cfg, static_cast<std::uint64_t>(r), kernel);
        for (std::size_t i = 0; i < n; ++i) intensity[i] = std::norm(field[i]);
        const double iref = intensity[ref];
        for (std::size_t i = 0; i < n; ++i) {
          m.s1[i] += intensity[i];
          m.s2[i] += intensity[i] * intensity[i];
          m.s11[i] += intensity[i] * iref;
        }
        m.s1_ref += iref;
        m.s2_ref += iref * iref;
      }
    }
  });
  MomentSums total(n);
  for (const auto& p : partial) total.merge(p);

  const double invR = 1.0 / R;
  const double mean_ref = total.s1_ref * invR;
  const double var_ref = total.s2_ref * invR - mean_ref * mean_ref;
  CorrelationCurve curve;
  curve.x_mm.resize(n);
  curve.c.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double mean_i = total.s1[i] * invR;
    const double var_i = total.s2[i] * invR - mean_i * mean_i;
    const double cov = total.s11[i] * invR - mean_i * mean_ref;
    curve.x_mm[i] = cfg.x_mm(static_cast<int>(i)) - cfg.x_mm(ref);
    curve.c[i] = cov / std::sqrt(var_i * var_ref);
  }
  return curve;
}

GaussianFitResult fit_gaussian_width(const CorrelationCurve& curve) {
  const std::size_t n = curve.c.size();
  if (n < 9 || curve.x_mm.size() != n) throw InvalidParameter("correlation curve too short");

  // Contiguous lobe above 0.05 around the maximum. A plain threshold over the
  // whole curve would sweep in far-field noise points.
  const std::size_t ipk = static_cast<std::size_t>(
      std::max_element(curve.c.begin(), curve.c.end()) - curve.c.begin());
  std::size_t lo = ipk;
  while (lo > 0 && curve.c[lo - 1] > 0.05) --lo;
  std::size_t hi = ipk;
  while (hi + 1 < n && curve.c[hi + 1] > 0.05) ++hi;
  const std::size_t m = hi - lo + 1;
  if (m < 9) throw FitDiverged("fewer than 9 contiguous points above 0.05");

  // Log-space quadratic least squares for the starting point:
  // ln c = -(2/w^2) x^2 + (4 x0/w^2) x - 2 x0^2/w^2.
  double sx0 = 0, sx1 = 0, sx2 = 0, sx3 = 0, sx4 = 0, sy = 0, sxy = 0, sx2y = 0;
  for (std::size_t i = lo; i <= hi; ++i) {
    const double x = curve.x_mm[i];
    const double y = std::log(curve.c[i]);
    const double x2 = x * x;
    sx0 += 1;
    sx1 += x;
    sx2 += x2;
    sx3 += x2 * x;
    sx4 += x2 * x2;
    sy += y;
    sxy += x * y;
    sx2y += x2 * y;
  }
  // Solve the 3x3 normal equations by Cramer's rule.
  const double a11 = sx4, a12 = sx3, a13 = sx2;
  const double a22 = sx2, a23 = sx1, a33 = sx0;
  const double det = a11 * (a22 * a33 - a23 * a23) - a12 * (a12 * a33 - a23 * a13) +
                     a13 * (a12 * a23 - a22 * a13);
  if (det == 0.0) throw FitDiverged("degenerate lobe geometry");
  const double p2 = (sx2y * (a22 * a33 - a23 * a23) - a12 * (sxy * a33 - a23 * sy) +
                     a13 * (sxy * a23 - a22 * sy)) /
                    det;
  const double p1 = (a11 * (sxy * a33 - a23 * sy) - sx2y * (a12 * a33 - a23 * a13) +
                     a13 * (a12 * sy - sxy * a13)) /
                    det;
  if (p2 >= 0.0) throw FitDiverged("lobe is not concave in log space");
  double w = std::sqrt(-2.0 / p2);
  double x0 = -p1 / (2.0 * p2);

  // Gauss-Newton refinement of the amplitude-free model in linear space.
  for (int it = 0; it < 60; ++it) {
    double jtj00 = 0, jtj01 = 0, jtj11 = 0, jtr0 = 0, jtr1 = 0;
    for (std::size_t i = lo; i <= hi; ++i) {
      const double u = curve.x_mm[i] - x0;
      const double model = std::exp(-2.0 * u * u / (w * w));
      const double r = curve.c[i] - model;
      const double dw = model * 4.0 * u * u / (w * w * w);
      const double dx0 = model * 4.0 * u / (w * w);
      jtj00 += dw * dw;
      jtj01 += dw * dx0;
      jtj11 += dx0 * dx0;
      jtr0 += dw * r;
      jtr1 += dx0 * r;
    }
    const double d = jtj00 * jtj11 - jtj01 * jtj01;
    if (d == 0.0) break;
    const double step_w = (jtr0 * jtj11 - jtr1 * jtj01) / d;
    const double step_x0 = (jtr1 * jtj00 - jtr0 * jtj01) / d;
    w += step_w;
    x0 += step_x0;
    if (!(w > 0.0) || !std::isfinite(w) || !std::isfinite(x0))
      throw FitDiverged("width fit left the positive domain");
    if (std::abs(step_w) < 1e-13 * w && std::abs(step_x0) < 1e-13 * std::max(1.0, std::abs(x0)))
      break;
  }

  double ss = 0.0;
  for (std::size_t i = lo; i <= hi; ++i) {
    const double u = curve.x_mm[i] - x0;
    const double r = curve.c[i] - std::exp(-2.0 * u * u / (w * w));
    ss += r * r;
  }
  const double rmse = std::sqrt(ss / m);
  if (rmse > 0.2) throw FitDiverged("fit residual RMSE " + std::to_string(rmse) + " exceeds 0.2");
  return {w, x0, rmse, static_cast<int>(m)};
}

CoherenceEstimate coherence_to_gamma(double w_c_prime_mm, const OpticalConfig& optics,
                                     double fit_rmse) {
  if (!(w_c_prime_mm > 0.0) || !std::isfinite(w_c_prime_mm))
    throw InvalidParameter("w'_c must be positive");
  const double w0_um = optics.w0_um();
  const double w_c_um = w_c_prime_mm * w0_um / optics.w0_prime_mm;
  return {w_c_prime_mm, w_c_um, w_c_um / w0_um, fit_rmse};
}

}  // namespace wvsim
