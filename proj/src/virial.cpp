#include "css/virial.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "css/spectral.hpp"
#include "css/symmetry.hpp"

namespace css {

namespace {

// Degree-9 smoothstep: S(0) = 0, S(1) = 1, derivatives 1..4 vanish at both
// ends. Coefficients of s^0..s^9.
std::array<double, 10> smoothstep_coefficients() {
  constexpr int n = 4;
  std::array<double, 10> c{};
  auto binom = [](int a, int b) {
    double r = 1.0;
    for (int k = 1; k <= b; ++k) r = r * (a - b + k) / k;
    return r;
  };
  for (int k = 0; k <= n; ++k) c[n + 1 + k] = binom(n + k, k) * binom(2 * n + 1, n - k) * (k % 2 == 0 ? 1.0 : -1.0);
  return c;
}

// m-th derivative of the smoothstep at s in [0, 1].
double smoothstep(double s, int m) {
  static const std::array<double, 10> c = smoothstep_coefficients();
  double v = 0.0;
  for (int k = 9; k >= m; --k) {
    double f = 1.0;
    for (int q = 0; q < m; ++q) f *= (k - q);
    v = v * s + c[k] * f;
  }
  return v;
}

double cutoff_prime(double r) { return r * (1.0 - smoothstep((r - 1.0) / 9.0, 0)); }

// int_1^r chi'(t) dt; the integrand is a degree-10 polynomial, so 6-point
// Gauss-Legendre is exact.
double cutoff_rise(double r) {
  static const double x[6] = {-0.9324695142031521, -0.6612093864662645, -0.2386191860831969,
                              0.2386191860831969,  0.6612093864662645,  0.9324695142031521};
  static const double w[6] = {0.1713244923791704, 0.3607615730481386, 0.4679139345726910,
                              0.4679139345726910, 0.3607615730481386, 0.1713244923791704};
  const double h = 0.5 * (r - 1.0);
  double s = 0.0;
  for (int k = 0; k < 6; ++k) s += w[k] * cutoff_prime(1.0 + h * (x[k] + 1.0));
  return h * s;
}

}  // namespace

double unit_cutoff(double r, int k) {
  if (r < 0.0) throw std::invalid_argument("unit_cutoff: negative radius");
  if (r <= 1.0) {
    switch (k) {
      case 0: return 0.5 * r * r;
      case 1: return r;
      case 2: return 1.0;
      default: return 0.0;
    }
  }
  if (r >= 10.0) {
    static const double top = 0.5 + cutoff_rise(10.0);
    return k == 0 ? top : 0.0;
  }
  const double s = (r - 1.0) / 9.0;
  switch (k) {
    case 0: return 0.5 + cutoff_rise(r);
    case 1: return cutoff_prime(r);
    case 2: return 1.0 - smoothstep(s, 0) - r * smoothstep(s, 1) / 9.0;
    case 3: return -2.0 * smoothstep(s, 1) / 9.0 - r * smoothstep(s, 2) / 81.0;
    case 4: return -3.0 * smoothstep(s, 2) / 81.0 - r * smoothstep(s, 3) / 729.0;
    default: throw std::invalid_argument("unit_cutoff: derivative order must be 0..4");
  }
}

namespace {

double unit_laplacian(double r) { return r <= 1.0 ? 2.0 : unit_cutoff(r, 2) + unit_cutoff(r, 1) / r; }

double unit_bilaplacian(double r) {
  if (r <= 1.0) return 0.0;
  return unit_cutoff(r, 4) + 2.0 * unit_cutoff(r, 3) / r - unit_cutoff(r, 2) / (r * r) + unit_cutoff(r, 1) / (r * r * r);
}

template <class F>
double sup_over_cutoff(F&& f) {
  double m = 0.0;
  for (int k = 0; k <= 90000; ++k) m = std::max(m, f(1.0 + 9.0 * k / 90000.0));
  return m;
}

}  // namespace

double cutoff_laplacian_deficit_sup() {
  static const double v = sup_over_cutoff([](double r) { return 2.0 - unit_laplacian(r); });
  return v;
}

double cutoff_bilaplacian_sup() {
  static const double v = sup_over_cutoff([](double r) { return std::abs(unit_bilaplacian(r)); });
  return v;
}

RadialWeight radial_weight(const GridPtr& grid, const std::function<double(double, int)>& profile) {
  RadialWeight w{RealField(grid), RealField(grid), RealField(grid), RealField(grid), RealField(grid),
                 RealField(grid), RealField(grid), RealField(grid), 0.0};
  const double r_min = 1e-9 * std::min(grid->dx(), grid->dy());
  for (int i = 0; i < grid->nx(); ++i)
    for (int j = 0; j < grid->ny(); ++j) {
      const double x = grid->x(i);
      const double y = grid->y(j);
      const double r = std::hypot(x, y);
      const std::size_t k = grid->index(i, j);
      w.value[k] = profile(r, 0);
      if (r < r_min) {
        // Smooth radial profiles have vanishing odd derivatives at 0.
        const double f2 = profile(0.0, 2);
        w.d11[k] = f2;
        w.d22[k] = f2;
        w.laplacian[k] = 2.0 * f2;
        w.bilaplacian[k] = 8.0 / 3.0 * profile(0.0, 4);
        continue;
      }
      const double f1 = profile(r, 1), f2 = profile(r, 2), f3 = profile(r, 3), f4 = profile(r, 4);
      const double ex = x / r, ey = y / r;
      w.d1[k] = f1 * ex;
      w.d2[k] = f1 * ey;
      w.d11[k] = f2 * ex * ex + f1 / r * (1.0 - ex * ex);
      w.d12[k] = (f2 - f1 / r) * ex * ey;
      w.d22[k] = f2 * ey * ey + f1 / r * (1.0 - ey * ey);
      w.laplacian[k] = f2 + f1 / r;
      w.bilaplacian[k] = f4 + 2.0 * f3 / r - f2 / (r * r) + f1 / (r * r * r);
      w.grad_sup = std::max(w.grad_sup, std::abs(f1));
    }
  return w;
}

RadialWeight quadratic_weight(const GridPtr& grid, double a) {
  return radial_weight(grid, [a](double r, int k) {
    switch (k) {
      case 0: return a * r * r;
      case 1: return 2.0 * a * r;
      case 2: return 2.0 * a;
      default: return 0.0;
    }
  });
}

CutoffChiR make_cutoff(const GridPtr& grid, double r_inner) {
  if (!(r_inner > 0.0)) throw std::invalid_argument("make_cutoff: R must be positive");
  const double R = r_inner;
  CutoffChiR chi;
  chi.r_inner = R;
  chi.weight = radial_weight(grid, [R](double r, int k) { return std::pow(R, 2 - k) * unit_cutoff(r / R, k); });
  return chi;
}

double virial_i(const ComplexField& phi) {
  const auto& g = phi.grid();
  double s = 0.0;
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 0; j < g.ny(); ++j) s += (g.x(i) * g.x(i) + g.y(j) * g.y(j)) * std::norm(phi(i, j));
  return s * g.cell_area();
}

double tail_mass(const ComplexField& phi, double margin) {
  const auto& g = phi.grid();
  const double r0 = 0.5 * std::min(g.lx(), g.ly()) - margin;
  double s = 0.0;
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 0; j < g.ny(); ++j)
      if (std::hypot(g.x(i), g.y(j)) > r0) s += std::norm(phi(i, j));
  return s * g.cell_area();
}

namespace {

void require_radial_weight(const RadialWeight& xi, const ComplexField& phi) {
  require_same_grid(xi.value.grid(), phi.grid(), "virial");
  if (angular_variance(xi.value) > radial_tolerance) throw std::invalid_argument("virial: weight is not radial");
}

}  // namespace

double virial_v(const ComplexField& phi, const GaugeFields& g, const RadialWeight& xi) {
  require_radial_weight(xi, phi);
  const ComplexField d1 = covariant_derivative(phi, g, 1);
  const ComplexField d2 = covariant_derivative(phi, g, 2);
  double s = 0.0;
  for (std::size_t k = 0; k < phi.size(); ++k)
    s += (std::conj(phi[k]) * (d1[k] * xi.d1[k] + d2[k] * xi.d2[k])).imag();
  return s * phi.grid().cell_area();
}

double virial_rhs(const ComplexField& phi, const GaugeFields& g, const ModelParams& params, const RadialWeight& xi) {
  require_radial_weight(xi, phi);
  const ComplexField d1 = covariant_derivative(phi, g, 1);
  const ComplexField d2 = covariant_derivative(phi, g, 2);
  double kin = 0.0, pot = 0.0, lin = 0.0;
  for (std::size_t k = 0; k < phi.size(); ++k) {
    kin += std::norm(d1[k]) * xi.d11[k] + 2.0 * (std::conj(d1[k]) * d2[k]).real() * xi.d12[k] +
           std::norm(d2[k]) * xi.d22[k];
    const double a2 = std::norm(phi[k]);
    pot += std::pow(a2, 0.5 * params.p) * xi.laplacian[k];
    lin += a2 * xi.bilaplacian[k];
  }
  const double da = phi.grid().cell_area();
  return (2.0 * kin - params.lambda * (params.p - 2.0) / params.p * pot - 0.5 * lin) * da;
}

BlowupBound blowup_bound_check(const ComplexField& phi, const GaugeFields& g, const ModelParams& params,
                               const CutoffChiR& chi) {
  if (!(params.p > 2.0)) throw std::invalid_argument("blowup_bound_check: p must exceed 2");
  if (angular_variance(phi) > radial_tolerance) throw std::invalid_argument("blowup_bound_check: field is not radial");
  BlowupBound b;
  b.lhs = virial_rhs(phi, g, params, chi.weight);
  const EnergyBreakdown e = energy_terms(phi, g, params.p);
  b.two_q = 2.0 * pohozaev_q(e, params);
  const ComplexField d1 = covariant_derivative(phi, g, 1);
  const ComplexField d2 = covariant_derivative(phi, g, 2);
  double n1 = 0.0, n2 = 0.0;
  for (std::size_t k = 0; k < phi.size(); ++k) {
    n1 += std::norm(d1[k]);
    n2 += std::norm(d2[k]);
  }
  const double da = phi.grid().cell_area();
  const double dn = std::sqrt(n1 * da) + std::sqrt(n2 * da);
  const double m = mass(phi);
  const double q = 0.5 * (params.p - 2.0);
  const double R = chi.r_inner;
  b.c_nonlinear = params.lambda * (params.p - 2.0) / params.p * cutoff_laplacian_deficit_sup() *
                  std::pow(std::numbers::pi, -q) * std::pow(m, 1.0 + 0.5 * q);
  b.c_mass = 0.5 * cutoff_bilaplacian_sup() * m;
  b.slack_nonlinear = b.c_nonlinear * std::pow(R, -q) * std::pow(dn, q);
  b.slack_mass = b.c_mass / (R * R);
  b.rhs = b.two_q + b.slack_nonlinear + b.slack_mass;
  return b;
}

}  // namespace css
