#pragma once

// Independent reference values for the tests. Nothing here calls into the
// library's numerics.

#include <complex>
#include <functional>
#include <utility>

namespace oracle {

/// Radial NLS ground state -Q'' - Q'/r + Q = Q^{p-1}, found by shooting on
/// Q(0), with its integrals over the plane.
struct NlsProfile {
  double q0 = 0.0;
  double mass = 0.0;       // int Q^2
  double grad = 0.0;       // int |Q'|^2
  double potential = 0.0;  // int Q^p
};
NlsProfile nls_profile(double p);

/// Minimizer of (1/2) int |grad u|^2 - (lambda/p) int |u|^p on int |u|^2 = c,
/// from the scaling u = (alpha/lambda)^{1/(p-2)} Q(sqrt(alpha) x). 2 < p < 4.
struct NlsGroundState {
  double alpha = 0.0;
  double energy = 0.0;
  double kinetic = 0.0;
};
NlsGroundState nls_ground_state(double p, double lambda, double c);

/// Periodic (A1, A2) of the density exp(-r^2/s^2) on the L x L torus, with
/// the zero mode removed, summed directly over the reciprocal lattice using
/// the continuous Fourier transform pi s^2 exp(-k^2 s^2 / 4).
std::pair<double, double> periodic_gaussian_gauge(double s, double box, double x, double y);

/// Whole-plane tangential field of exp(-r^2/s^2): h(r) = s^2 (1 - exp(-r^2/s^2)) / 4.
double gaussian_flux(double s, double r);

/// Integrals of the mu = 2 Liouville profile 2 sqrt(2) / (1 + r^2).
struct LiouvilleIntegrals {
  double mass;       // 8 pi
  double grad;       // 16 pi / 3
  double mag;        // 16 pi / 3
  double potential;  // 64 pi / 3
};
LiouvilleIntegrals liouville_integrals();

/// Smallest theta^2 with E(theta L) = 0 at p = 4: lambda - sqrt(lambda^2 - 1).
double liouville_zero_energy_s(double lambda);

/// Free evolution i phi_t = -Lap phi of exp(-r^2 / (2 s^2)).
std::complex<double> free_gaussian(double s, double t, double x, double y);

/// Fourth-order central difference of f at x.
double central_difference(const std::function<double(double)>& f, double x, double h);

}  // namespace oracle
