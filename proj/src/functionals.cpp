#include "css/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <nlohmann/json.hpp>

#include "css/spectral.hpp"

namespace css {

void validate(const ModelParams& params) {
  if (!(params.p > 2.0) || !std::isfinite(params.p)) throw std::invalid_argument("p must exceed 2");
  if (!(params.lambda > 0.0) || !std::isfinite(params.lambda)) throw std::invalid_argument("lambda must be positive");
  if (!(params.c > 0.0) || !std::isfinite(params.c)) throw std::invalid_argument("c must be positive");
  if (!(params.tol.identity > 0.0) || !(params.tol.constraint > 0.0))
    throw std::invalid_argument("tolerances must be positive");
}

void to_json(nlohmann::json& j, const EnergyBreakdown& e) {
  j = nlohmann::json{{"kinetic_cov", e.kinetic_cov}, {"grad", e.grad},         {"mag", e.mag},
                     {"cross", e.cross},             {"potential", e.potential}, {"a0_weight", e.a0_weight}};
}

GaugeFields gauge_for(const ComplexField& u, const ModelParams& params) {
  if (!params.gauge) return zero_gauge(u.grid_ptr());
  return compute_gauge(u, params.boundary);
}

ComplexField covariant_derivative(const ComplexField& u, const GaugeFields& g, int axis) {
  const RealField& a = axis == 1 ? g.a1 : g.a2;
  require_same_grid(u.grid(), a.grid(), "covariant_derivative");
  ComplexField d = spectral_derivative(u, axis);
  for (std::size_t k = 0; k < u.size(); ++k) d[k] += cplx(0.0, a[k]) * u[k];
  return d;
}

double mass(const ComplexField& u) {
  require_finite(u, "mass");
  double s = 0.0;
  for (const cplx& v : u.values()) s += std::norm(v);
  return s * u.grid().cell_area();
}

double potential_integral(const ComplexField& u, double p) {
  double s = 0.0;
  for (const cplx& v : u.values()) {
    const double a2 = std::norm(v);
    s += a2 == 0.0 ? 0.0 : std::pow(a2, 0.5 * p);
  }
  return s * u.grid().cell_area();
}

ComplexField power_nonlinearity(const ComplexField& u, double p) {
  ComplexField out(u.grid_ptr());
  for (std::size_t k = 0; k < u.size(); ++k) {
    const double a2 = std::norm(u[k]);
    out[k] = a2 == 0.0 ? cplx(0.0) : std::pow(a2, 0.5 * (p - 2.0)) * u[k];
  }
  return out;
}

EnergyBreakdown energy_terms(const ComplexField& u, const GaugeFields& g, double p) {
  require_finite(u, "energy");
  require_same_grid(u.grid(), g.a1.grid(), "energy");
  const auto [d1, d2] = spectral_gradient(u);
  EnergyBreakdown e;
  for (std::size_t k = 0; k < u.size(); ++k) {
    const double a1 = g.a1[k];
    const double a2 = g.a2[k];
    const double rho = std::norm(u[k]);
    const cplx c1 = d1[k] + cplx(0.0, a1) * u[k];
    const cplx c2 = d2[k] + cplx(0.0, a2) * u[k];
    e.kinetic_cov += std::norm(c1) + std::norm(c2);
    e.grad += std::norm(d1[k]) + std::norm(d2[k]);
    e.mag += (a1 * a1 + a2 * a2) * rho;
    e.cross += ((a1 * d1[k] + a2 * d2[k]) * std::conj(u[k])).imag();
    e.a0_weight += g.a0[k] * rho;
    e.potential += rho == 0.0 ? 0.0 : std::pow(rho, 0.5 * p);
  }
  const double w = u.grid().cell_area();
  e.kinetic_cov *= w;
  e.grad *= w;
  e.mag *= w;
  e.cross *= w;
  e.a0_weight *= w;
  e.potential *= w;
  return e;
}

std::pair<double, double> identity_residuals(const EnergyBreakdown& e) {
  constexpr double tiny = std::numeric_limits<double>::min();
  const double s1 = std::max({e.kinetic_cov, e.grad, tiny});
  const double r1 = std::abs(e.kinetic_cov - (e.grad + e.mag + 2.0 * e.cross)) / s1;
  const double s2 = std::max({std::abs(e.a0_weight), 2.0 * e.mag + 2.0 * std::abs(e.cross), tiny});
  const double r2 = std::abs(e.a0_weight - 2.0 * e.mag - 2.0 * e.cross) / s2;
  return {e.kinetic_cov == 0.0 && e.grad == 0.0 ? 0.0 : r1, e.a0_weight == 0.0 && e.mag == 0.0 ? 0.0 : r2};
}

EnergyResult energy(const ComplexField& u, const GaugeFields& g, const ModelParams& params) {
  EnergyResult r;
  r.terms = energy_terms(u, g, params.p);
  r.energy = 0.5 * r.terms.kinetic_cov - params.lambda / params.p * r.terms.potential;
  const auto [idd, aid] = identity_residuals(r.terms);
  if (idd > params.tol.identity)
    throw IdentityViolation("energy: kinetic expansion identity off by " + std::to_string(idd));
  if (aid > params.tol.identity) throw IdentityViolation("energy: A0 weight identity off by " + std::to_string(aid));
  return r;
}

EnergyResult energy(const ComplexField& u, const ModelParams& params) { return energy(u, gauge_for(u, params), params); }

double pohozaev_q(const EnergyBreakdown& e, const ModelParams& params) {
  return e.kinetic_cov - params.lambda * (params.p - 2.0) / params.p * e.potential;
}

double pohozaev_q(const ComplexField& u, const ModelParams& params) {
  return pohozaev_q(energy_terms(u, gauge_for(u, params), params.p), params);
}

double multiplier_estimate(const EnergyBreakdown& e, double m, double lambda) {
  if (!(m > 0.0)) throw std::invalid_argument("multiplier_estimate: zero mass");
  return -(e.kinetic_cov + e.a0_weight - lambda * e.potential) / m;
}

double multiplier_estimate(const ComplexField& u, const GaugeFields& g, const ModelParams& params) {
  return multiplier_estimate(energy_terms(u, g, params.p), mass(u), params.lambda);
}

double self_dual_residual(const ComplexField& u, const GaugeFields& g) {
  const ComplexField d1 = covariant_derivative(u, g, 1);
  const ComplexField d2 = covariant_derivative(u, g, 2);
  const auto [g1, g2] = spectral_gradient(u);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    num += std::norm(d1[k] + cplx(0.0, 1.0) * d2[k]);
    den += std::norm(g1[k]) + std::norm(g2[k]);
  }
  return den == 0.0 ? 0.0 : std::sqrt(num / den);
}

SelfDualSplit self_dual_split(const ComplexField& u, const GaugeFields& g) {
  const ComplexField d1 = covariant_derivative(u, g, 1);
  const ComplexField d2 = covariant_derivative(u, g, 2);
  SelfDualSplit s;
  for (std::size_t k = 0; k < u.size(); ++k) {
    s.dual_norm2 += std::norm(d1[k] + cplx(0.0, 1.0) * d2[k]);
    s.quartic += std::norm(u[k]) * std::norm(u[k]);
  }
  const double w = u.grid().cell_area();
  s.dual_norm2 *= w;
  s.quartic *= w;
  if (g.boundary == GaugeBoundary::periodic) {
    const double m = mass(u);
    s.background = -m * m / (4.0 * u.grid().area());
  }
  return s;
}

namespace {

// Re(conj(u) d u)/|u| on each axis; zero where u vanishes.
std::pair<RealField, RealField> modulus_gradient(const ComplexField& u) {
  const auto [d1, d2] = spectral_gradient(u);
  RealField m1(u.grid_ptr()), m2(u.grid_ptr());
  for (std::size_t k = 0; k < u.size(); ++k) {
    const double a = std::abs(u[k]);
    if (a == 0.0) continue;
    m1[k] = (std::conj(u[k]) * d1[k]).real() / a;
    m2[k] = (std::conj(u[k]) * d2[k]).real() / a;
  }
  return {std::move(m1), std::move(m2)};
}

}  // namespace

double diamagnetic_margin(const ComplexField& u, const GaugeFields& g) {
  const ComplexField d1 = covariant_derivative(u, g, 1);
  const ComplexField d2 = covariant_derivative(u, g, 2);
  const auto [m1, m2] = modulus_gradient(u);
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < u.size(); ++k)
    margin = std::min(margin, std::abs(d1[k]) + std::abs(d2[k]) - std::hypot(m1[k], m2[k]));
  return margin;
}

double gagliardo_nirenberg_ratio(const ComplexField& u, double t) {
  const auto [m1, m2] = modulus_gradient(u);
  double s = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) s += m1[k] * m1[k] + m2[k] * m2[k];
  const double grad_mod = std::sqrt(s * u.grid().cell_area());
  const double l2 = lp_norm(u, 2.0);
  return lp_norm(u, t) / (std::pow(grad_mod, 1.0 - 2.0 / t) * std::pow(l2, 2.0 / t));
}

std::pair<double, double> far_separation_additivity(const ComplexField& u1, const ComplexField& u2, double distance,
                                                    const ModelParams& params) {
  require_same_grid(u1.grid(), u2.grid(), "far_separation_additivity");
  const auto& g = u1.grid();
  double peak = 0.0;
  for (std::size_t k = 0; k < u1.size(); ++k) peak = std::max({peak, std::abs(u1[k]), std::abs(u2[k])});
  std::vector<std::pair<double, double>> s1, s2;
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 0; j < g.ny(); ++j) {
      const bool in1 = std::abs(u1(i, j)) > 1e-12 * peak;
      const bool in2 = std::abs(u2(i, j)) > 1e-12 * peak;
      if (in1 && in2) throw std::invalid_argument("far_separation_additivity: overlapping supports");
      if (in1) s1.emplace_back(g.x(i), g.y(j));
      if (in2) s2.emplace_back(g.x(i), g.y(j));
    }
  if (s1.size() * s2.size() <= 100'000'000ULL) {
    double dmin2 = std::numeric_limits<double>::infinity();
    for (const auto& a : s1)
      for (const auto& b : s2)
        dmin2 = std::min(dmin2, (a.first - b.first) * (a.first - b.first) + (a.second - b.second) * (a.second - b.second));
    // Half a cell of slack: the sampled supports under-resolve the true ones.
    if (!s1.empty() && !s2.empty() && std::sqrt(dmin2) + 0.5 * std::hypot(g.dx(), g.dy()) < distance)
      throw std::invalid_argument("far_separation_additivity: supports closer than the stated distance");
  }

  ComplexField sum = u1 + u2;
  const EnergyResult e = energy(sum, params);
  const EnergyResult e1 = energy(u1, params);
  const EnergyResult e2 = energy(u2, params);

  // |A(u_a)| <= mass_a / (4 pi d) on the other support.
  const double a = 1.0 / (4.0 * std::numbers::pi * distance);
  const double m1 = mass(u1);
  const double m2 = mass(u2);
  const double g1 = std::sqrt(e1.terms.grad);
  const double g2 = std::sqrt(e2.terms.grad);
  const double mag_cross = a * a * m1 * m2 * (m1 + m2) +
                           2.0 * a * (m2 * std::sqrt(e1.terms.mag * m1) + m1 * std::sqrt(e2.terms.mag * m2));
  const double cross_cross = a * (m1 * g2 * std::sqrt(m2) + m2 * g1 * std::sqrt(m1));
  const double bound = 0.5 * mag_cross + cross_cross;
  return {e.energy - e1.energy - e2.energy, bound};
}

}  // namespace css
