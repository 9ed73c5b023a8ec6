#include <cmath>
#include <random>

#include <doctest.h>

#include "wvsim/errors.hpp"
#include "wvsim/pointer.hpp"

using namespace wvsim;

namespace {

constexpr double kA = 1.316;
constexpr double kW0 = 28.9;

// Independent route for the exact pure-pointer density: the expanded double
// sum over eigenvalue pairs instead of the squared amplitude sum.
std::vector<double> pure_double_sum(const SystemState& psi_in, const SystemState& psi_f,
                                    const Observable& obs, double w0, const QGrid& grid) {
  std::vector<double> dens(grid.n_points(), 0.0);
  for (int i = 0; i < grid.n_points(); ++i) {
    const double q = grid.q(i);
    for (std::size_t k = 0; k < obs.dim(); ++k)
      for (std::size_t j = 0; j < obs.dim(); ++j) {
        const complexd c = psi_in[k] * std::conj(psi_f[k]) * std::conj(psi_in[j]) * psi_f[j];
        const double dk = q - obs[k];
        const double dj = q - obs[j];
        dens[i] += c.real() * std::exp(-(dk * dk + dj * dj) / (w0 * w0));
      }
  }
  const double mass = trapezoid_mass(grid, dens);
  for (auto& v : dens) v /= mass;
  return dens;
}

double linf_rel(const Profile& a, const std::vector<double>& b) {
  double md = 0.0, ma = 0.0;
  for (std::size_t i = 0; i < a.density.size(); ++i) {
    md = std::max(md, std::abs(a.density[i] - b[i]));
    ma = std::max(ma, a.density[i]);
  }
  return md / ma;
}

double linf_rel(const Profile& a, const Profile& b) { return linf_rel(a, b.density); }

int count_local_maxima(const Profile& p) {
  const double floor = 1e-9 * *std::max_element(p.density.begin(), p.density.end());
  int count = 0;
  for (std::size_t i = 1; i + 1 < p.density.size(); ++i)
    if (p.density[i] > p.density[i - 1] && p.density[i] >= p.density[i + 1] &&
        p.density[i] > floor)
      ++count;
  return count;
}

SystemState plus_state() {
  return SystemState({complexd{std::sqrt(0.5), 0}, complexd{std::sqrt(0.5), 0}});
}

}  // namespace

TEST_CASE("pure profile: single eigenstate reduces to one displaced Gaussian") {
  const SystemState h({complexd{1, 0}, complexd{0, 0}});
  const QGrid grid = QGrid::default_for(kW0);
  const Profile p = pure_profile(h, h, Observable({-kA, 0.0}), PurePointer{kW0}, grid);
  CHECK(peak_location(p) == doctest::Approx(-kA).epsilon(1e-9));
  // matches the normalized analytic Gaussian pointwise
  std::vector<double> ref(grid.n_points());
  for (int i = 0; i < grid.n_points(); ++i) {
    const double d = grid.q(i) + kA;
    ref[i] = std::exp(-2.0 * d * d / (kW0 * kW0));
  }
  const double mass = trapezoid_mass(grid, ref);
  for (auto& v : ref) v /= mass;
  CHECK(linf_rel(p, ref) < 1e-12);
}

TEST_CASE("pure profile: agrees with the double-sum route and peaks near A_w") {
  const auto [psi_in, psi_f] = polarization_states(0.2);
  const Observable obs({-kA, 0.0});
  const QGrid grid = QGrid::default_for(kW0);
  const Profile p = pure_profile(psi_in, psi_f, obs, PurePointer{kW0}, grid);
  CHECK(linf_rel(p, pure_double_sum(psi_in, psi_f, obs, kW0, grid)) < 1e-12);

  const double peak = peak_location(p);
  CHECK(peak == doctest::Approx(-3.8291).epsilon(1e-3));
  const double a_w = -(kA / 2) * (1.0 + 1.0 / std::tan(0.2));
  CHECK(std::abs(peak - a_w) <= 0.05 * std::abs(a_w));
  // postselection probability proxy: close to sin^2(eps) in the weak regime
  CHECK(p.raw_mass == doctest::Approx(3.99467e-2).epsilon(1e-4));
}

TEST_CASE("pure profile: symmetric selection peaks at -a/2") {
  const QGrid grid = QGrid::default_for(kW0);
  const Profile p =
      pure_profile(plus_state(), plus_state(), Observable({-kA, 0.0}), PurePointer{kW0}, grid);
  CHECK(std::abs(peak_location(p) - (-kA / 2)) < grid.dq() / 10);
}

TEST_CASE("pure profile: orthogonal disjoint selection has zero mass") {
  const SystemState h({complexd{1, 0}, complexd{0, 0}});
  const SystemState v({complexd{0, 0}, complexd{1, 0}});
  CHECK_THROWS_AS(
      pure_profile(h, v, Observable({-kA, 0.0}), PurePointer{kW0}, QGrid::default_for(kW0)),
      ZeroMass);
}

TEST_CASE("weak approx profile: centered Gaussian and translation") {
  const QGrid unit(-6, 6, 1201);
  CHECK(peak_location(weak_approx_profile(0.0, PurePointer{1.0}, unit)) ==
        doctest::Approx(0.0).epsilon(1e-12));
  const QGrid grid = QGrid::default_for(kW0);
  const Profile p = weak_approx_profile(-3.90, PurePointer{kW0}, grid);
  CHECK(std::abs(peak_location(p) - (-3.90)) < 1e-9);

  // weak-regime agreement with the exact profile at eps = 0.2
  const auto [psi_in, psi_f] = polarization_states(0.2);
  const double a_w = -(kA / 2) * (1.0 + 1.0 / std::tan(0.2));
  const Profile exact = pure_profile(psi_in, psi_f, Observable({-kA, 0.0}), PurePointer{kW0}, grid);
  const Profile approx = weak_approx_profile(a_w, PurePointer{kW0}, grid);
  CHECK(linf_rel(exact, approx) < 0.05);
}

TEST_CASE("mixed profile: zero coupling returns the pointer marginal") {
  const QGrid grid = QGrid::default_for(kW0);
  const MixedPointer pointer{kW0, 0.404 * kW0};
  const Observable zero({0.0, 0.0});
  const auto [psi_in, psi_f] = polarization_states(0.3);
  const Profile p = mixed_profile(psi_in, psi_f, zero, pointer, grid);
  CHECK(std::abs(peak_location(p)) < grid.dq() / 10);

  // analytic marginal: exp(-2 q^2 / (2 w0^2 + wc^2))
  std::vector<double> ref(grid.n_points());
  const double env = 2 * kW0 * kW0 + pointer.wc_um * pointer.wc_um;
  for (int i = 0; i < grid.n_points(); ++i) ref[i] = std::exp(-2.0 * grid.q(i) * grid.q(i) / env);
  const double mass = trapezoid_mass(grid, ref);
  for (auto& v : ref) v /= mass;
  CHECK(linf_rel(p, ref) < 1e-12);

  // independent of the system states
  const auto [in2, f2] = polarization_states(0.7);
  const Profile p2 = mixed_profile(in2, f2, zero, pointer, grid);
  CHECK(linf_rel(p, p2) < 1e-12);
}

TEST_CASE("mixed profile: gamma >> 1 reproduces the pure profile at the coherence width") {
  // The exact large-gamma limit of the mixed closed form is the pure-pointer
  // expression with spread wc (the coherent patch width), not w0.
  const QGrid grid = QGrid::default_for(kW0);
  const Observable obs({-kA, 0.0});
  {
    const auto [psi_in, psi_f] = polarization_states(2.79e-2);
    const double wc = 1000.0 * kW0;
    const Profile mixed = mixed_profile(psi_in, psi_f, obs, MixedPointer{kW0, wc}, grid);
    const Profile pure = pure_profile(psi_in, psi_f, obs, PurePointer{wc}, grid);
    CHECK(linf_rel(mixed, pure) <= 1e-4);
  }
  for (double eps : {1e-3, 2.79e-2}) {
    const auto [psi_in, psi_f] = polarization_states(eps);
    const double wc = 100.0 * kW0;
    const Profile mixed = mixed_profile(psi_in, psi_f, obs, MixedPointer{kW0, wc}, grid);
    const Profile pure = pure_profile(psi_in, psi_f, obs, PurePointer{wc}, grid);
    CHECK(linf_rel(mixed, pure) <= 1e-4);
  }
}

TEST_CASE("mixed profile: reference peaks of the partially coherent sweep") {
  const QGrid grid = QGrid::default_for(kW0);
  const Observable obs({-kA, 0.0});
  {
    // strongly postselected, gamma = 0.404
    const auto [psi_in, psi_f] = polarization_states(2.79e-2);
    const Profile p = mixed_profile(psi_in, psi_f, obs, MixedPointer{kW0, 0.404 * kW0}, grid);
    CHECK(peak_location(p) == doctest::Approx(-5.9719).epsilon(5e-4));
    CHECK(p.raw_mass == doctest::Approx(3.93931e-3).epsilon(1e-4));
    CHECK(amplification(p, psi_in, obs) == doctest::Approx(9.0758).epsilon(5e-4));
  }
  {
    // nearly orthogonal: double peak for large gamma, single near zero for small
    const auto [psi_in, psi_f] = polarization_states(1e-3);
    const Profile big = mixed_profile(psi_in, psi_f, obs, MixedPointer{kW0, 2.04 * kW0}, grid);
    CHECK(count_local_maxima(big) == 2);
    CHECK(peak_location(big) == doctest::Approx(-43.541).epsilon(1e-3));
    const Profile small = mixed_profile(psi_in, psi_f, obs, MixedPointer{kW0, 0.404 * kW0}, grid);
    CHECK(count_local_maxima(small) == 1);
    CHECK(peak_location(small) == doctest::Approx(-0.9266).epsilon(2e-3));
  }
}

TEST_CASE("mixed profile: normalization, reality, positivity over random configs") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> eig(-3.0, 3.0);
  std::uniform_real_distribution<double> gam(0.05, 5.0);
  std::uniform_real_distribution<double> w0d(10.0, 50.0);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t d = 2 + trial % 3;
    std::vector<complexd> a(d), b(d);
    double na = 0, nb = 0;
    for (std::size_t k = 0; k < d; ++k) {
      a[k] = complexd{normal(rng), normal(rng)};
      b[k] = complexd{normal(rng), normal(rng)};
      na += std::norm(a[k]);
      nb += std::norm(b[k]);
    }
    for (std::size_t k = 0; k < d; ++k) {
      a[k] /= std::sqrt(na);
      b[k] /= std::sqrt(nb);
    }
    std::vector<double> eigs(d);
    for (auto& e : eigs) e = eig(rng);
    const double w0 = w0d(rng);
    const MixedPointer pointer{w0, gam(rng) * w0};
    const QGrid grid(-6 * w0, 6 * w0, 1501);

    ProfileEvalInfo info;
    Profile p;
    try {
      p = mixed_profile(SystemState(a), SystemState(b), Observable(eigs), pointer, grid, &info);
    } catch (const ZeroMass&) {
      continue;
    }
    CHECK(trapezoid_mass(grid, p.density) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(info.max_imag_rel < 1e-12);
    CHECK(info.min_density_rel > -1e-12);
    for (double v : p.density) CHECK(v >= 0.0);
    CHECK(p.raw_mass > 0.0);
  }
}

TEST_CASE("polarization specialization is pointwise identical to the general form") {
  const QGrid grid = QGrid::default_for(kW0);
  const Observable obs({-kA, 0.0});
  double worst = 0.0;
  for (int ie = 0; ie < 5; ++ie) {
    const double eps = 5e-3 + ie * (0.2 - 5e-3) / 4;
    for (int ig = 0; ig < 5; ++ig) {
      const double gamma = 0.2 * std::pow(5.0 / 0.2, ig / 4.0);
      const MixedPointer pointer{kW0, gamma * kW0};
      const auto [psi_in, psi_f] = polarization_states(eps);
      const Profile general = mixed_profile(psi_in, psi_f, obs, pointer, grid);
      const Profile special = polarization_mixed_profile(kA, eps, pointer, grid);
      worst = std::max(worst, linf_rel(general, special));
      CHECK(general.raw_mass == doctest::Approx(special.raw_mass).epsilon(1e-10));
    }
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("polarization specialization: beta = 0 collapses to one Gaussian at -a") {
  const QGrid grid = QGrid::default_for(kW0);
  const MixedPointer pointer{kW0, 0.5 * kW0};
  const Profile p = polarization_mixed_profile(kA, M_PI / 4, pointer, grid);
  std::vector<double> ref(grid.n_points());
  const double env = kW0 * kW0 * (pointer.gamma() * pointer.gamma() + 2.0);
  for (int i = 0; i < grid.n_points(); ++i) {
    const double d = grid.q(i) + kA;
    ref[i] = std::exp(-2.0 * d * d / env);
  }
  const double mass = trapezoid_mass(grid, ref);
  for (auto& v : ref) v /= mass;
  CHECK(linf_rel(p, ref) < 1e-12);
}

TEST_CASE("mixed profile: translation covariance of the peak") {
  const QGrid grid(-6 * kW0, 6 * kW0 + 40.0, 5201);
  const auto [psi_in, psi_f] = polarization_states(2.79e-2);
  const MixedPointer pointer{kW0, 0.404 * kW0};
  const double base = peak_location(mixed_profile(psi_in, psi_f, Observable({-kA, 0.0}), pointer, grid));
  for (double shift : {5.0, 17.3}) {
    const double moved = peak_location(
        mixed_profile(psi_in, psi_f, Observable({-kA + shift, shift}), pointer, grid));
    CHECK(std::abs(moved - (base + shift)) < grid.dq() / 10);
  }
}

TEST_CASE("mixed profile: decoherence suppresses the anomalous peak") {
  const QGrid grid = QGrid::default_for(kW0);
  const auto [psi_in, psi_f] = polarization_states(2.79e-2);
  const Observable obs({-kA, 0.0});
  const double p005 =
      peak_location(mixed_profile(psi_in, psi_f, obs, MixedPointer{kW0, 0.05 * kW0}, grid));
  const double p0404 =
      peak_location(mixed_profile(psi_in, psi_f, obs, MixedPointer{kW0, 0.404 * kW0}, grid));
  CHECK(std::abs(p005) <= std::abs(p0404));
}

TEST_CASE("mixed profile: degenerate eigenvalues merge naturally") {
  const QGrid grid = QGrid::default_for(kW0);
  const auto [psi_in, psi_f] = polarization_states(0.3);
  const MixedPointer pointer{kW0, 0.7 * kW0};
  // all eigenvalues equal: profile is the marginal shifted to -a whatever the states
  const Profile p = mixed_profile(psi_in, psi_f, Observable({-kA, -kA}), pointer, grid);
  std::vector<double> ref(grid.n_points());
  const double env = 2 * kW0 * kW0 + pointer.wc_um * pointer.wc_um;
  for (int i = 0; i < grid.n_points(); ++i) {
    const double d = grid.q(i) + kA;
    ref[i] = std::exp(-2.0 * d * d / env);
  }
  const double mass = trapezoid_mass(grid, ref);
  for (auto& v : ref) v /= mass;
  CHECK(linf_rel(p, ref) < 1e-12);
}

TEST_CASE("mixed profile: incoherent limit below the gamma cutoff") {
  const QGrid grid = QGrid::default_for(kW0);
  const auto [psi_in, psi_f] = polarization_states(0.3);
  const Observable obs({-kA, 0.0});
  const MixedPointer tiny{kW0, 1e-8 * kW0};
  const Profile p = mixed_profile(psi_in, psi_f, obs, tiny, grid);

  // mixture of displaced marginals weighted by |alpha_k beta_k|^2
  const auto& ain = psi_in.amplitudes();
  const auto& af = psi_f.amplitudes();
  std::vector<double> ref(grid.n_points(), 0.0);
  const double env = kW0 * kW0 * (tiny.gamma() * tiny.gamma() + 2.0);
  double wsum = 0.0;
  for (int k = 0; k < 2; ++k) {
    const double w = std::norm(ain[k] * std::conj(af[k]));
    wsum += w;
    for (int i = 0; i < grid.n_points(); ++i) {
      const double d = grid.q(i) - obs[k];
      ref[i] += w * std::exp(-2.0 * d * d / env);
    }
  }
  const double mass = trapezoid_mass(grid, ref);
  for (auto& v : ref) v /= mass;
  CHECK(linf_rel(p, ref) < 1e-12);
  // raw mass keeps the group weights
  CHECK(p.raw_mass == doctest::Approx(wsum).epsilon(1e-6));

  // degenerate group keeps its interference weight: |sum alpha beta*|^2
  const Profile pd = mixed_profile(psi_in, psi_f, Observable({-kA, -kA}), tiny, grid);
  complexd coeff_sum{0, 0};
  for (int k = 0; k < 2; ++k) coeff_sum += ain[k] * std::conj(af[k]);
  CHECK(pd.raw_mass == doctest::Approx(std::norm(coeff_sum)).epsilon(1e-6));
}

TEST_CASE("peak location: parabolic refinement, ties, and flat profiles") {
  const QGrid coarse(-10, 10, 41);  // dq = 0.5
  std::vector<double> dens(41);
  for (int i = 0; i < 41; ++i) {
    const double d = coarse.q(i) + 3.9;
    dens[i] = std::exp(-2.0 * d * d / 9.0);
  }
  const double mass = trapezoid_mass(coarse, dens);
  for (auto& v : dens) v /= mass;
  const Profile p{coarse, dens, mass};
  CHECK(std::abs(peak_location(p) - (-3.9)) < coarse.dq() / 10);

  // exact tie resolves to the leftmost maximum
  std::vector<double> tie(41, 0.1);
  tie[10] = 1.0;
  tie[30] = 1.0;
  const Profile pt{coarse, tie, 1.0};
  CHECK(peak_location(pt) <= coarse.q(11));

  CHECK_THROWS_AS(peak_location(Profile{coarse, std::vector<double>(41, 0.25), 1.0}),
                  FlatProfile);

  // boundary maximum returns the endpoint without refinement
  std::vector<double> mono(41);
  for (int i = 0; i < 41; ++i) mono[i] = std::exp(0.1 * i);
  const Profile pm{coarse, mono, 1.0};
  CHECK(peak_location(pm) == coarse.q(40));
}

TEST_CASE("amplification: unity without a postselection anomaly") {
  const QGrid grid = QGrid::default_for(kW0);
  const Observable obs({-kA, 0.0});
  const Profile p = pure_profile(plus_state(), plus_state(), obs, PurePointer{kW0}, grid);
  CHECK(amplification(p, plus_state(), obs) == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("amplification: pure-pointer value at eps = 0.2") {
  const QGrid grid = QGrid::default_for(kW0);
  const auto [psi_in, psi_f] = polarization_states(0.2);
  const Observable obs({-kA, 0.0});
  const Profile p = pure_profile(psi_in, psi_f, obs, PurePointer{kW0}, grid);
  CHECK(amplification(p, psi_in, obs) == doctest::Approx(5.819).epsilon(1e-3));
}

TEST_CASE("amplification: zero expectation is rejected") {
  const QGrid grid = QGrid::default_for(kW0);
  const Observable sym({-1.0, 1.0});
  const Profile p = pure_profile(plus_state(), plus_state(), sym, PurePointer{kW0}, grid);
  CHECK_THROWS_AS(amplification(p, plus_state(), sym), ZeroExpectation);
}

TEST_CASE("grid and pointer validation") {
  CHECK_THROWS_AS(QGrid(1.0, -1.0, 100), InvalidParameter);
  CHECK_THROWS_AS(QGrid(-1.0, 1.0, 2), InvalidParameter);
  const QGrid grid = QGrid::default_for(kW0);
  const auto [psi_in, psi_f] = polarization_states(0.1);
  const Observable obs({-kA, 0.0});
  CHECK_THROWS_AS(pure_profile(psi_in, psi_f, obs, PurePointer{-1.0}, grid), InvalidParameter);
  CHECK_THROWS_AS(mixed_profile(psi_in, psi_f, obs, MixedPointer{kW0, 0.0}, grid),
                  InvalidParameter);
  CHECK_THROWS_AS(
      mixed_profile(psi_in, psi_f, Observable({1.0, 2.0, 3.0}), MixedPointer{kW0, kW0}, grid),
      DimensionMismatch);
}
