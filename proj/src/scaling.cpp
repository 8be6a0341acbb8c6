#include "css/scaling.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include "css/spectral.hpp"

namespace css {

ComplexField dilate(const ComplexField& u, double t) {
  if (!(t > 0.0) || !std::isfinite(t)) throw std::invalid_argument("dilate: t must be positive");
  if (t == 1.0) return u;
  const auto& g = u.grid();
  auto grid = make_grid(g.nx(), g.ny(), g.lx() / t, g.ly() / t, g.dealias_fraction());
  std::vector<cplx> values(u.values().begin(), u.values().end());
  for (auto& v : values) v *= t;
  return ComplexField(grid, std::move(values));
}

InterpolatedField dilate_on_grid(const ComplexField& u, double t) {
  if (!(t > 0.0) || !std::isfinite(t)) throw std::invalid_argument("dilate_on_grid: t must be positive");
  const auto& g = u.grid();
  const int nx = g.nx();
  const int ny = g.ny();
  const auto coeffs = to_spectral(u);
  // Separable evaluation of the trigonometric interpolant at t*x. The Nyquist
  // modes are split symmetrically so the interpolant of real data stays real.
  auto phase_table = [](int n, double l, double origin, const std::vector<double>& pts) {
    std::vector<cplx> tab(pts.size() * n);
    for (std::size_t a = 0; a < pts.size(); ++a)
      for (int m = 0; m < n; ++m) {
        const int mm = m < n / 2 ? m : m - n;
        const double k = 2.0 * M_PI * mm / l;
        const double xs = pts[a] - origin;
        tab[a * n + m] = m == n / 2 ? cplx(std::cos(k * xs), 0.0) : std::polar(1.0, k * xs);
      }
    return tab;
  };
  std::vector<double> px(nx), py(ny);
  for (int i = 0; i < nx; ++i) px[i] = t * g.x(i);
  for (int j = 0; j < ny; ++j) py[j] = t * g.y(j);
  const auto ex = phase_table(nx, g.lx(), -0.5 * g.lx(), px);
  const auto ey = phase_table(ny, g.ly(), -0.5 * g.ly(), py);
  // Stage 1: along y for every x-mode.
  std::vector<cplx> stage(static_cast<std::size_t>(nx) * ny);
  for (int mx = 0; mx < nx; ++mx)
    for (int b = 0; b < ny; ++b) {
      cplx s = 0.0;
      for (int my = 0; my < ny; ++my) s += coeffs[g.index(mx, my)] * ey[static_cast<std::size_t>(b) * ny + my];
      stage[static_cast<std::size_t>(mx) * ny + b] = s;
    }
  ComplexField out(u.grid_ptr());
  const double norm = 1.0 / (static_cast<double>(nx) * ny);
  for (int a = 0; a < nx; ++a) {
    const bool inside_x = std::abs(px[a]) <= 0.5 * g.lx();
    for (int b = 0; b < ny; ++b) {
      if (!inside_x || std::abs(py[b]) > 0.5 * g.ly()) continue;
      cplx s = 0.0;
      for (int mx = 0; mx < nx; ++mx) s += stage[static_cast<std::size_t>(mx) * ny + b] * ex[static_cast<std::size_t>(a) * nx + mx];
      out(a, b) = t * s * norm;
    }
  }
  return {std::move(out), true};
}

double fiber_energy(double kinetic, double potential, const ModelParams& params, double t) {
  return 0.5 * t * t * kinetic - params.lambda * std::pow(t, params.p - 2.0) * potential / params.p;
}

double fiber_q(double kinetic, double potential, const ModelParams& params, double t) {
  return t * t * kinetic - params.lambda * (params.p - 2.0) / params.p * std::pow(t, params.p - 2.0) * potential;
}

double fiber_energy(const ComplexField& u, const ModelParams& params, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("fiber_energy: t must be positive");
  const auto e = energy_terms(u, gauge_for(u, params), params.p);
  return fiber_energy(e.kinetic_cov, e.potential, params, t);
}

double t_star(double kinetic, double potential, const ModelParams& params) {
  if (params.p == 4.0) throw std::invalid_argument("t_star: p = 4 has no interior fiber critical point");
  if (!(kinetic > 0.0) || !(potential > 0.0)) throw std::invalid_argument("t_star: K and P must be positive");
  return std::pow(params.p * kinetic / (params.lambda * (params.p - 2.0) * potential), 1.0 / (params.p - 4.0));
}

double t_star(const ComplexField& u, const ModelParams& params) {
  const auto e = energy_terms(u, gauge_for(u, params), params.p);
  return t_star(e.kinetic_cov, e.potential, params);
}

std::vector<FiberPoint> fiber_scan(const ComplexField& u, const ModelParams& params, const std::vector<double>& ts) {
  const auto e = energy_terms(u, gauge_for(u, params), params.p);
  std::vector<FiberPoint> out;
  out.reserve(ts.size());
  for (double t : ts) {
    if (!(t > 0.0)) throw std::invalid_argument("fiber_scan: t must be positive");
    out.push_back({t, fiber_energy(e.kinetic_cov, e.potential, params, t), fiber_q(e.kinetic_cov, e.potential, params, t)});
  }
  return out;
}

void write_fiber_csv(std::ostream& os, const std::vector<FiberPoint>& scan) {
  os << "t,E,Q\n";
  os.precision(17);
  for (const auto& f : scan) os << f.t << ',' << f.energy_at_t << ',' << f.q_at_t << '\n';
}

double beta_exponent(double p) {
  if (!(p > 2.0 && p < 4.0)) throw std::invalid_argument("beta_scale: requires 2 < p < 4");
  return (p - 2.0) / (8.0 - 2.0 * p);
}

ComplexField beta_scale(const ComplexField& u, double theta, const ModelParams& params) {
  const double beta = beta_exponent(params.p);
  if (!(theta > 0.0)) throw std::invalid_argument("beta_scale: theta must be positive");
  ComplexField v = dilate(u, std::pow(theta, beta));
  v *= std::sqrt(theta);
  return v;
}

std::optional<double> largest_unit_root(double a, double b, double c) {
  auto f = [&](double s) { return a + b * s + c * s * s; };
  const double f1 = f(1.0);
  if (f1 == 0.0) return 1.0;
  double lo;
  double hi = 1.0;
  if (f1 < 0.0) {
    lo = 0.0;
    if (f(lo) <= 0.0) return std::nullopt;
  } else {
    // f(1) > 0: a crossing needs a dip below zero inside (0, 1).
    if (!(c > 0.0)) return std::nullopt;
    const double vertex = -b / (2.0 * c);
    if (!(vertex > 0.0 && vertex < 1.0) || f(vertex) > 0.0) return std::nullopt;
    if (f(vertex) == 0.0) return std::sqrt(vertex);
    // Largest root lies in (vertex, 1) where f increases.
    lo = vertex;
    hi = 1.0;
    while (hi - lo > 1e-13) {
      const double mid = 0.5 * (lo + hi);
      (f(mid) < 0.0 ? lo : hi) = mid;
    }
    return std::sqrt(0.5 * (lo + hi));
  }
  // f(lo) > 0 > f(hi).
  while (hi - lo > 1e-13) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) > 0.0 ? lo : hi) = mid;
  }
  return std::sqrt(0.5 * (lo + hi));
}

std::optional<double> amplitude_zero_energy(const EnergyBreakdown& e, double lambda) {
  return largest_unit_root(0.5 * e.grad, e.cross - 0.25 * lambda * e.potential, 0.5 * e.mag);
}

std::optional<double> amplitude_zero_energy(const ComplexField& u, const ModelParams& params) {
  if (params.p != 4.0) throw std::invalid_argument("amplitude_zero_energy: requires p = 4");
  return amplitude_zero_energy(energy_terms(u, gauge_for(u, params), params.p), params.lambda);
}

}  // namespace css
