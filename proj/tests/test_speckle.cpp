#include <cmath>

#include <doctest.h>

#include "wvsim/errors.hpp"
#include "wvsim/speckle.hpp"

using namespace wvsim;

namespace {

SpeckleConfig base_config(double w_g, std::uint64_t seed) {
  return SpeckleConfig{w_g, 12.0, 512, 2000, seed};
}

const OpticalConfig kOptics{632.8, 100.0, 0.697};

}  // namespace

TEST_CASE("field generation is deterministic per (seed, realization)") {
  const SpeckleConfig cfg = base_config(0.6, 11);
  const auto f1 = generate_speckle_field(cfg, 5);
  const auto f2 = generate_speckle_field(cfg, 5);
  REQUIRE(f1.size() == f2.size());
  for (std::size_t i = 0; i < f1.size(); ++i) CHECK(f1[i] == f2[i]);

  const auto f3 = generate_speckle_field(cfg, 6);
  double diff = 0.0;
  for (std::size_t i = 0; i < f1.size(); ++i) diff += std::abs(f1[i] - f3[i]);
  CHECK(diff > 0.0);

  SpeckleConfig other = cfg;
  other.seed = 12;
  const auto f4 = generate_speckle_field(other, 5);
  diff = 0.0;
  for (std::size_t i = 0; i < f1.size(); ++i) diff += std::abs(f1[i] - f4[i]);
  CHECK(diff > 0.0);
}

TEST_CASE("mean intensity is unity within 5% over 2000 realizations") {
  const SpeckleConfig cfg = base_config(0.6, 11);
  double sum = 0.0;
  std::size_t count = 0;
  for (int r = 0; r < cfg.n_realizations; ++r) {
    const auto field = generate_speckle_field(cfg, r);
    for (const auto& e : field) sum += std::norm(e);
    count += field.size();
  }
  CHECK(sum / count == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("lag-0 field autocorrelation equals the mean intensity") {
  const SpeckleConfig cfg = base_config(0.6, 11);
  const auto field = generate_speckle_field(cfg, 0);
  double acorr0 = 0.0;
  double mean_int = 0.0;
  for (const auto& e : field) {
    acorr0 += (std::conj(e) * e).real();
    mean_int += std::norm(e);
  }
  CHECK(acorr0 == mean_int);
}

TEST_CASE("ensemble field autocorrelation converges to the gaussian kernel") {
  const SpeckleConfig cfg = base_config(0.6, 4);
  const double dx = cfg.dx_mm();
  const int lag1 = static_cast<int>(std::round(0.5 * cfg.field_corr_width_mm / dx));
  const int lag2 = static_cast<int>(std::round(1.0 * cfg.field_corr_width_mm / dx));
  complexd c0{0, 0}, c1{0, 0}, c2{0, 0};
  for (int r = 0; r < 2000; ++r) {
    const auto f = generate_speckle_field(cfg, r);
    for (std::size_t i = 0; i + lag2 < f.size(); ++i) {
      c0 += std::conj(f[i]) * f[i];
      c1 += std::conj(f[i]) * f[i + lag1];
      c2 += std::conj(f[i]) * f[i + lag2];
    }
  }
  auto expect = [&](int lag) {
    const double u = lag * dx;
    return std::exp(-u * u / (cfg.field_corr_width_mm * cfg.field_corr_width_mm));
  };
  CHECK(std::abs(c1 / c0) == doctest::Approx(expect(lag1)).epsilon(0.05));
  CHECK(std::abs(c2 / c0) == doctest::Approx(expect(lag2)).epsilon(0.05));
}

TEST_CASE("cross-correlation: self point, far field, siegert shape") {
  const SpeckleConfig cfg = base_config(0.28, 3);
  const CorrelationCurve curve = intensity_cross_correlation(cfg, 0.0);
  REQUIRE(curve.c.size() == static_cast<std::size_t>(cfg.n_samples));

  // self-correlation is exactly 1 at the reference sample
  std::size_t ref = 0;
  for (std::size_t i = 0; i < curve.x_mm.size(); ++i)
    if (curve.x_mm[i] == 0.0) ref = i;
  CHECK(curve.c[ref] == doctest::Approx(1.0).epsilon(1e-12));

  double far_max = 0.0;
  double rmse = 0.0;
  double lo = 1e9, hi = -1e9;
  for (std::size_t i = 0; i < curve.c.size(); ++i) {
    const double x = curve.x_mm[i];
    if (std::abs(x) > 8 * cfg.field_corr_width_mm) far_max = std::max(far_max, std::abs(curve.c[i]));
    const double pred = std::exp(-2.0 * x * x /
                                 (cfg.field_corr_width_mm * cfg.field_corr_width_mm));
    rmse += (curve.c[i] - pred) * (curve.c[i] - pred);
    lo = std::min(lo, curve.c[i]);
    hi = std::max(hi, curve.c[i]);
  }
  rmse = std::sqrt(rmse / curve.c.size());
  CHECK(far_max <= 3.0 / std::sqrt(2000.0));
  CHECK(rmse <= 0.05);  // Siegert relation for circular gaussian fields
  CHECK(lo >= -0.2);
  CHECK(hi <= 1.2);
}

TEST_CASE("cross-correlation: input validation") {
  SpeckleConfig cfg = base_config(0.6, 1);
  cfg.n_realizations = 50;
  CHECK_THROWS_AS(intensity_cross_correlation(cfg, 0.0), InsufficientRealizations);
  cfg.n_realizations = 2000;
  CHECK_THROWS_AS(intensity_cross_correlation(cfg, 7.0), InvalidParameter);
  SpeckleConfig bad = cfg;
  bad.x_extent_mm = 3.0;  // < 8 correlation widths
  CHECK_THROWS_AS(intensity_cross_correlation(bad, 0.0), InvalidParameter);
  bad = cfg;
  bad.n_samples = 128;
  CHECK_THROWS_AS(intensity_cross_correlation(bad, 0.0), InvalidParameter);
}

TEST_CASE("width fit: exact synthetic curve recovered to 1e-6") {
  CorrelationCurve curve;
  const double w = 1.42;
  for (int i = 0; i <= 512; ++i) {
    const double x = -6.0 + 12.0 * i / 512;
    curve.x_mm.push_back(x);
    curve.c.push_back(std::exp(-2.0 * x * x / (w * w)));
  }
  const auto fit = fit_gaussian_width(curve);
  CHECK(std::abs(fit.width_mm - w) < 1e-6);
  CHECK(std::abs(fit.center_mm) < 1e-9);
  CHECK(fit.rmse < 1e-10);
}

TEST_CASE("width fit: flat curve and junk are rejected") {
  CorrelationCurve flat;
  for (int i = 0; i <= 512; ++i) {
    flat.x_mm.push_back(-6.0 + 12.0 * i / 512);
    flat.c.push_back(0.01);
  }
  CHECK_THROWS_AS(fit_gaussian_width(flat), FitDiverged);

  CorrelationCurve convex;  // rising toward the edges, no gaussian lobe
  for (int i = 0; i <= 512; ++i) {
    const double x = -6.0 + 12.0 * i / 512;
    convex.x_mm.push_back(x);
    convex.c.push_back(0.06 + 0.01 * x * x);
  }
  CHECK_THROWS_AS(fit_gaussian_width(convex), FitDiverged);
}

TEST_CASE("width fit: monte-carlo curve lands within 5% of ground truth") {
  const SpeckleConfig cfg = base_config(0.60, 3);
  const auto curve = intensity_cross_correlation(cfg, 0.0);
  const auto fit = fit_gaussian_width(curve);
  CHECK(std::abs(fit.width_mm - 0.60) / 0.60 <= 0.05);
  CHECK(fit.rmse <= 0.05);
}

TEST_CASE("coherence conversion: reference optics chain") {
  CHECK(kOptics.w0_um() == doctest::Approx(28.9).epsilon(1e-3));

  const auto est = coherence_to_gamma(1.42, kOptics);
  CHECK(est.w_c_um == doctest::Approx(59.0).epsilon(5e-3));
  CHECK(est.gamma == doctest::Approx(2.04).epsilon(5e-3));

  const auto low = coherence_to_gamma(0.28, kOptics);
  CHECK(low.gamma == doctest::Approx(0.402).epsilon(1e-2));

  // the four reference widths within 2% of the published gammas
  const double widths[] = {1.42, 0.93, 0.60, 0.28};
  const double gammas[] = {2.04, 1.33, 0.865, 0.404};
  for (int i = 0; i < 4; ++i) {
    const auto e = coherence_to_gamma(widths[i], kOptics);
    CHECK(std::abs(e.gamma - gammas[i]) / gammas[i] <= 0.02);
  }
}

TEST_CASE("coherence conversion: gamma is linear in the measured width") {
  const auto one = coherence_to_gamma(0.77, kOptics);
  const auto two = coherence_to_gamma(1.54, kOptics);
  CHECK(two.gamma == doctest::Approx(2.0 * one.gamma).epsilon(1e-12));
  // algebraic identity of the chain
  CHECK(one.gamma == doctest::Approx(0.77 / 0.697).epsilon(1e-12));
  CHECK_THROWS_AS(coherence_to_gamma(-1.0, kOptics), InvalidParameter);
}

TEST_CASE("correlation curve is bitwise reproducible") {
  const SpeckleConfig cfg = base_config(0.93, 3);
  const auto c1 = intensity_cross_correlation(cfg, 0.0);
  const auto c2 = intensity_cross_correlation(cfg, 0.0);
  REQUIRE(c1.c.size() == c2.c.size());
  for (std::size_t i = 0; i < c1.c.size(); ++i) CHECK(c1.c[i] == c2.c[i]);
}
