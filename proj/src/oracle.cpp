#include "wvsim/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "wvsim/errors.hpp"
#include "wvsim/parallel.hpp"

namespace wvsim {

namespace {

void require_dims(const SystemState& psi_in, const SystemState& psi_f, const Observable& obs) {
  if (psi_in.dim() != obs.dim() || psi_f.dim() != obs.dim())
    throw DimensionMismatch("state/observable dimensions disagree");
}

void validate_pointer(const MixedPointer& p) {
  if (!std::isfinite(p.w0_um) || !(p.w0_um > 0.0) || !std::isfinite(p.wc_um) || !(p.wc_um > 0.0))
    throw InvalidParameter("pointer widths must be finite and positive");
  if (p.gamma() < kIncoherentGammaCutoff)
    throw DegeneratePointer("gamma < 1e-6: quadrature cannot resolve the coherence width; "
                            "the closed form handles this regime analytically");
}

std::vector<complexd> postselection_coeffs(const SystemState& psi_in, const SystemState& psi_f) {
  std::vector<complexd> c(psi_in.dim());
  for (std::size_t k = 0; k < c.size(); ++k) c[k] = psi_in[k] * std::conj(psi_f[k]);
  return c;
}

/// Narrowest width of the three-Gaussian q0 integrand.
double integrand_min_width(const MixedPointer& p) {
  return 1.0 / std::sqrt(1.0 / (p.w0_um * p.w0_um) + 2.0 / (p.wc_um * p.wc_um));
}

/// Pointer density matrix values rho(x, y) on arbitrary coordinates, via
/// windowed trapezoid quadrature over q0. Symmetric real kernel.
class RhoBuilder {
public:
  RhoBuilder(const MixedPointer& p, double coord_abs_max) : w0_(p.w0_um), wc_(p.wc_um) {
    s_ = integrand_min_width(p);
    const double s2_over_wc2 = s_ * s_ / (wc_ * wc_);
    const double mu_max = 2.0 * coord_abs_max * s2_over_wc2;
    span_ = std::max(6.0 * std::max(w0_, wc_), mu_max + 9.0 * s_);
    step_ = s_ / 3.0;
    n_nodes_ = static_cast<int>(std::ceil(2.0 * span_ / step_)) + 1;
    step_ = 2.0 * span_ / (n_nodes_ - 1);
    ratio_step_ = std::exp(-2.0 * step_ * step_ / (s_ * s_));
    prefactor_ = std::sqrt(2.0) / (M_PI * w0_ * wc_);
  }

  double operator()(double x, double y) const {
    const double s2 = s_ * s_;
    const double mu = (x + y) * s2 / (wc_ * wc_);
    const double c = (x * x + y * y) / (wc_ * wc_) - mu * mu / s2;
    if (c > 745.0) return 0.0;  // underflows anyway
    // Window of nodes within 8.5 s of the integrand peak; the skipped tail is
    // below exp(-72) of the peak.
    int lo = static_cast<int>(std::floor((mu - 8.5 * s_ + span_) / step_));
    int hi = static_cast<int>(std::ceil((mu + 8.5 * s_ + span_) / step_));
    lo = std::max(lo, 0);
    hi = std::min(hi, n_nodes_ - 1);
    if (lo > hi) return 0.0;
    // g_m = exp(-(q0_m - mu)^2 / s^2) by multiplicative recurrence.
    const double x0 = (-span_ + lo * step_) - mu;
    double g = std::exp(-x0 * x0 / s2);
    double r = std::exp(-(2.0 * x0 * step_ + step_ * step_) / s2);
    double sum = 0.0;
    for (int m = lo; m <= hi; ++m) {
      double w = (m == 0 || m == n_nodes_ - 1) ? 0.5 : 1.0;
      sum += w * g;
      g *= r;
      r *= ratio_step_;
    }
    return prefactor_ * std::exp(-c) * sum * step_;
  }

private:
  double w0_, wc_, s_, span_, step_, ratio_step_, prefactor_;
  int n_nodes_;
};

/// Dense symmetric rho matrix on the given coordinates.
std::vector<double> build_rho_matrix(const MixedPointer& pointer,
                                     const std::vector<double>& coords) {
  const std::size_t n = coords.size();
  double cmax = 0.0;
  for (double q : coords) cmax = std::max(cmax, std::abs(q));
  RhoBuilder rho(pointer, cmax);

  std::vector<double> out(n * n);
  // Rows are paired first/last to balance the triangular work across threads.
  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t t = begin; t < end; ++t) {
      const std::size_t i = (t % 2 == 0) ? t / 2 : n - 1 - t / 2;
      for (std::size_t j = i; j < n; ++j) {
        const double v = rho(coords[i], coords[j]);
        out[i * n + j] = v;
        out[j * n + i] = v;
      }
    }
  });
  return out;
}

struct BilinearTable {
  const std::vector<double>& values;  // n x n
  double origin;
  double step;
  std::size_t n;

  double operator()(double x, double y) const {
    const double fx = (x - origin) / step;
    const double fy = (y - origin) / step;
    if (fx < 0.0 || fy < 0.0 || fx > static_cast<double>(n - 1) || fy > static_cast<double>(n - 1))
      throw InterpolationOutOfRange("shifted coordinate outside the density-matrix grid");
    std::size_t ix = std::min(static_cast<std::size_t>(fx), n - 2);
    std::size_t iy = std::min(static_cast<std::size_t>(fy), n - 2);
    const double tx = fx - ix;
    const double ty = fy - iy;
    const double* row0 = values.data() + ix * n + iy;
    const double* row1 = row0 + n;
    return row0[0] * (1 - tx) * (1 - ty) + row1[0] * tx * (1 - ty) + row0[1] * (1 - tx) * ty +
           row1[1] * tx * ty;
  }
};

}  // namespace

QuadratureSpec QuadratureSpec::for_pointer(const MixedPointer& pointer) {
  const double span = 6.0 * std::max(pointer.w0_um, pointer.wc_um);
  const double s = integrand_min_width(pointer);
  const int needed = static_cast<int>(std::ceil(2.0 * span / (s / 3.0))) + 1;
  return {-span, span, std::max(2001, needed)};
}

double DensityMatrixGrid::trace() const {
  double t = 0.0;
  for (int i = 0; i < grid.n_points(); ++i) t += at(i, i).real();
  return t;
}

double DensityMatrixGrid::hermiticity_residual() const {
  const int n = grid.n_points();
  double res = 0.0;
  double maxabs = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      res = std::max(res, std::abs(at(i, j) - std::conj(at(j, i))));
      maxabs = std::max(maxabs, std::abs(at(i, j)));
    }
  return maxabs > 0.0 ? res / maxabs : 0.0;
}

DensityMatrixGrid build_pointer_density_matrix(const MixedPointer& pointer, const QGrid& grid) {
  validate_pointer(pointer);
  std::vector<double> coords(grid.n_points());
  for (int i = 0; i < grid.n_points(); ++i) coords[i] = grid.q(i);
  const auto raw = build_rho_matrix(pointer, coords);
  DensityMatrixGrid out{grid, std::vector<complexd>(raw.size())};
  const double dq = grid.dq();
  for (std::size_t i = 0; i < raw.size(); ++i) out.rho[i] = complexd{raw[i] * dq, 0.0};
  return out;
}

Profile oracle_mixed_profile(const SystemState& psi_in, const SystemState& psi_f,
                             const Observable& obs, const MixedPointer& pointer, const QGrid& grid,
                             const QuadratureSpec& quad) {
  require_dims(psi_in, psi_f, obs);
  validate_pointer(pointer);
  if (quad.n_nodes < 51) throw InvalidParameter("QuadratureSpec needs at least 51 nodes");
  const double covered = 6.0 * std::max(pointer.w0_um, pointer.wc_um);
  if (quad.q0_min_um > -covered * (1.0 - 1e-12) || quad.q0_max_um < covered * (1.0 - 1e-12))
    throw InvalidParameter("QuadratureSpec range must cover +-6 max(w0, wc)");

  const auto coeffs = postselection_coeffs(psi_in, psi_f);
  const std::size_t d = obs.dim();
  const double w0sq = pointer.w0_um * pointer.w0_um;
  const double wcsq = pointer.wc_um * pointer.wc_um;
  const double prefactor = std::sqrt(2.0) / (M_PI * pointer.w0_um * pointer.wc_um);

  // Evaluate on the doubled node set; the coarse sum (every other node) gives
  // the convergence reference for free.
  const int nf = 2 * (quad.n_nodes - 1) + 1;
  const double df = (quad.q0_max_um - quad.q0_min_um) / (nf - 1);
  std::vector<double> env(nf);
  for (int m = 0; m < nf; ++m) {
    const double q0 = quad.q0_min_um + m * df;
    env[m] = std::exp(-q0 * q0 / w0sq);
  }

  const std::size_t n = static_cast<std::size_t>(grid.n_points());
  std::vector<double> fine(n, 0.0);
  std::vector<double> coarse(n, 0.0);
  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const double q = grid.q(static_cast<int>(i));
      double fsum_total = 0.0;
      double csum_total = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        for (std::size_t j = k; j < d; ++j) {
          // (k,j) and (j,k) share the integrand; their coefficients combine
          // to 2 Re(c_k conj(c_j)), so the sum is real term by term.
          const double ck = (coeffs[k] * std::conj(coeffs[j])).real();
          const double mult = (j == k) ? ck : 2.0 * ck;
          if (mult == 0.0) continue;
          const double xk = q - obs[k];
          const double xj = q - obs[j];
          double fsum = 0.0;
          double csum = 0.0;
          for (int m = 0; m < nf; ++m) {
            const double q0 = quad.q0_min_um + m * df;
            const double dk = xk - q0;
            const double dj = xj - q0;
            const double val = env[m] * std::exp(-(dk * dk + dj * dj) / wcsq);
            const double wf = (m == 0 || m == nf - 1) ? 0.5 : 1.0;
            fsum += wf * val;
            if (m % 2 == 0) {
              const double wc_w = (m == 0 || m == nf - 1) ? 0.5 : 1.0;
              csum += wc_w * val;
            }
          }
          fsum_total += mult * fsum * df;
          csum_total += mult * csum * (2.0 * df);
        }
      }
      fine[i] = fsum_total;
      coarse[i] = csum_total;
    }
  });

  double max_fine = 0.0;
  double max_diff = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    max_fine = std::max(max_fine, std::abs(fine[i]));
    max_diff = std::max(max_diff, std::abs(fine[i] - coarse[i]));
  }
  if (max_fine > 0.0 && max_diff / max_fine > 1e-8)
    throw QuadratureUnderResolved("doubling the q0 nodes changes the density by " +
                                  std::to_string(max_diff / max_fine) +
                                  " of its maximum (tolerance 1e-8)");
  return detail::normalize_into_profile(grid, std::move(fine), 0.0, prefactor, nullptr);
}

Profile oracle_density_evolution(const SystemState& psi_in, const SystemState& psi_f,
                                 const Observable& obs, const MixedPointer& pointer,
                                 const QGrid& grid, EvolutionInfo* info) {
  require_dims(psi_in, psi_f, obs);
  validate_pointer(pointer);
  const auto coeffs = postselection_coeffs(psi_in, psi_f);
  const std::size_t d = obs.dim();
  const int n = grid.n_points();
  const double dq = grid.dq();

  // Pad the internal grid so every shifted coordinate q - a_k stays inside.
  const int pad = static_cast<int>(std::ceil(obs.max_abs_eigenvalue() / dq)) + 1;
  const std::size_t npad = static_cast<std::size_t>(n) + 2 * pad;
  std::vector<double> coords(npad);
  for (std::size_t i = 0; i < npad; ++i)
    coords[i] = grid.q_min() + (static_cast<int>(i) - pad) * dq;

  const auto rho_phi = build_rho_matrix(pointer, coords);
  const BilinearTable rho{rho_phi, coords.front(), dq, npad};

  auto evolved = [&](double qi, double qj) {
    complexd sum{0.0, 0.0};
    for (std::size_t k = 0; k < d; ++k)
      for (std::size_t l = 0; l < d; ++l)
        sum += coeffs[k] * std::conj(coeffs[l]) * rho(qi - obs[k], qj - obs[l]);
    return sum;
  };

  std::vector<double> diag(n);
  double max_abs = 0.0;
  double max_imag = 0.0;
  for (int i = 0; i < n; ++i) {
    const complexd v = evolved(grid.q(i), grid.q(i));
    diag[i] = v.real();
    max_abs = std::max(max_abs, std::abs(v.real()));
    max_imag = std::max(max_imag, std::abs(v.imag()));
  }

  if (info) {
    info->max_imag_rel = max_abs > 0.0 ? max_imag / max_abs : 0.0;
    // Hermiticity of the evolved matrix, sampled on a coarse index lattice.
    const int stride = std::max(1, n / 600);
    double res = 0.0;
    double amax = 0.0;
    for (int i = 0; i < n; i += stride)
      for (int j = i; j < n; j += stride) {
        const complexd a = evolved(grid.q(i), grid.q(j));
        const complexd b = evolved(grid.q(j), grid.q(i));
        res = std::max(res, std::abs(a - std::conj(b)));
        amax = std::max(amax, std::abs(a));
      }
    info->hermiticity_residual = amax > 0.0 ? res / amax : 0.0;
  }
  return detail::normalize_into_profile(grid, std::move(diag), 0.0, 1.0, nullptr);
}

ProfileDistance compare_profiles(const Profile& p1, const Profile& p2) {
  if (!(p1.grid == p2.grid)) throw GridMismatch("profiles live on different grids");
  const std::size_t n = p1.density.size();
  std::vector<double> absdiff(n);
  double max1 = 0.0;
  double maxd = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    absdiff[i] = std::abs(p1.density[i] - p2.density[i]);
    max1 = std::max(max1, p1.density[i]);
    maxd = std::max(maxd, absdiff[i]);
  }
  return {trapezoid_mass(p1.grid, absdiff), max1 > 0.0 ? maxd / max1 : 0.0,
          std::abs(peak_location(p1) - peak_location(p2))};
}

}  // namespace wvsim
