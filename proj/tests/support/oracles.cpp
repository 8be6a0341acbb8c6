#include "oracles.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_odeiv2.h>

namespace oracle {

namespace {

constexpr double pi = std::numbers::pi;

struct ShotParams {
  double p;
};

// y = (Q, Q', int Q^2, int Q'^2, int Q^p), all integrals over the plane.
int rhs(double r, const double y[], double f[], void* params) {
  const double p = static_cast<ShotParams*>(params)->p;
  const double q = y[0];
  const double aq = std::abs(q);
  f[0] = y[1];
  f[1] = -y[1] / r + q - std::pow(aq, p - 2.0) * q;
  f[2] = 2.0 * pi * r * q * q;
  f[3] = 2.0 * pi * r * y[1] * y[1];
  f[4] = 2.0 * pi * r * std::pow(aq, p);
  return GSL_SUCCESS;
}

enum class Shot { overshoot, undershoot };

Shot shoot(double p, double q0, double out[5]) {
  ShotParams sp{p};
  gsl_odeiv2_system sys{rhs, nullptr, 5, &sp};
  gsl_odeiv2_driver* d = gsl_odeiv2_driver_alloc_y_new(&sys, gsl_odeiv2_step_rk8pd, 1e-6, 1e-13, 1e-13);
  const double r0 = 1e-6;
  const double q2 = 0.5 * (q0 - std::pow(q0, p - 1.0));
  double y[5] = {q0 + 0.5 * q2 * r0 * r0, q2 * r0, 0.0, 0.0, 0.0};
  double r = r0;
  Shot result = Shot::undershoot;
  for (int k = 1; k <= 40000; ++k) {
    const double target = r0 + 1e-3 * k;
    if (gsl_odeiv2_driver_apply(d, &r, target, y) != GSL_SUCCESS) break;
    if (y[0] < 0.0) {
      result = Shot::overshoot;
      break;
    }
    if (y[1] > 0.0) break;
  }
  gsl_odeiv2_driver_free(d);
  for (int i = 0; i < 5; ++i) out[i] = y[i];
  return result;
}

}  // namespace

NlsProfile nls_profile(double p) {
  double lo = 1.0 + 1e-9, hi = 20.0;
  double y[5];
  if (shoot(p, hi, y) != Shot::overshoot) throw std::runtime_error("nls_profile: no overshoot bracket");
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (shoot(p, mid, y) == Shot::overshoot)
      hi = mid;
    else
      lo = mid;
  }
  shoot(p, lo, y);
  return {lo, y[2], y[3], y[4]};
}

NlsGroundState nls_ground_state(double p, double lambda, double c) {
  const NlsProfile q = nls_profile(p);
  // c = lambda^{-2/(p-2)} alpha^{2/(p-2) - 1} M
  const double e = 2.0 / (p - 2.0) - 1.0;
  const double alpha = std::pow(c * std::pow(lambda, 2.0 / (p - 2.0)) / q.mass, 1.0 / e);
  const double a = std::pow(alpha / lambda, 1.0 / (p - 2.0));
  NlsGroundState g;
  g.alpha = alpha;
  g.kinetic = a * a * q.grad;
  const double pot = std::pow(a, p) * q.potential / alpha;
  g.energy = 0.5 * g.kinetic - lambda / p * pot;
  return g;
}

std::pair<double, double> periodic_gaussian_gauge(double s, double box, double x, double y) {
  const double dk = 2.0 * pi / box;
  const int m = static_cast<int>(std::ceil(18.0 / (s * dk))) + 1;
  double a1 = 0.0, a2 = 0.0;
  for (int i = -m; i <= m; ++i)
    for (int j = -m; j <= m; ++j) {
      if (i == 0 && j == 0) continue;
      const double k1 = dk * i, k2 = dk * j, kk = k1 * k1 + k2 * k2;
      const double rho_hat = pi * s * s * std::exp(-0.25 * kk * s * s);
      const double w = rho_hat * std::sin(k1 * x + k2 * y) / (2.0 * kk * box * box);
      a1 += k2 * w;
      a2 -= k1 * w;
    }
  return {a1, a2};
}

double gaussian_flux(double s, double r) { return 0.25 * s * s * (1.0 - std::exp(-r * r / (s * s))); }

LiouvilleIntegrals liouville_integrals() { return {8.0 * pi, 16.0 * pi / 3.0, 16.0 * pi / 3.0, 64.0 * pi / 3.0}; }

double liouville_zero_energy_s(double lambda) { return lambda - std::sqrt(lambda * lambda - 1.0); }

std::complex<double> free_gaussian(double s, double t, double x, double y) {
  const std::complex<double> w = s * s + std::complex<double>(0.0, 2.0 * t);
  return s * s / w * std::exp(-(x * x + y * y) / (2.0 * w));
}

double central_difference(const std::function<double(double)>& f, double x, double h) {
  return (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h);
}

}  // namespace oracle
