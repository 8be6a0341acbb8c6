#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "css/functionals.hpp"
#include "css/grid.hpp"

namespace css {

/// u_t(x) = t u(t x), represented exactly: same samples times t on the box
/// scaled by 1/t. Mass is preserved to rounding. Throws for t <= 0.
ComplexField dilate(const ComplexField& u, double t);

/// u_t resampled onto u's own grid by Fourier interpolation (samples whose
/// preimage t*x leaves the box are set to zero). Not exact; excluded from
/// identity tests.
struct InterpolatedField {
  ComplexField field;
  bool interpolated = true;
};
InterpolatedField dilate_on_grid(const ComplexField& u, double t);

struct FiberPoint {
  double t = 1.0;
  double energy_at_t = 0.0;
  double q_at_t = 0.0;
};

/// t^2 K/2 - lambda t^{p-2} P / p with K = kinetic_cov(u), P = int |u|^p.
double fiber_energy(double kinetic, double potential, const ModelParams& params, double t);
double fiber_energy(const ComplexField& u, const ModelParams& params, double t);
/// Q(u_t) = t^2 K - lambda (p-2)/p t^{p-2} P.
double fiber_q(double kinetic, double potential, const ModelParams& params, double t);

/// Unique critical point (pK / (lambda (p-2) P))^{1/(p-4)} of the fiber map.
/// Throws for p == 4 or nonpositive K, P.
double t_star(double kinetic, double potential, const ModelParams& params);
double t_star(const ComplexField& u, const ModelParams& params);

/// Closed-form fiber samples from a single evaluation of K and P.
std::vector<FiberPoint> fiber_scan(const ComplexField& u, const ModelParams& params, const std::vector<double>& ts);
void write_fiber_csv(std::ostream& os, const std::vector<FiberPoint>& scan);

/// beta = (p-2)/(8-2p); throws unless 2 < p < 4.
double beta_exponent(double p);
/// u^theta(x) = theta^{(1+2 beta)/2} u(theta^beta x), exact via dilate.
/// mass(u^theta) = theta * mass(u).
ComplexField beta_scale(const ComplexField& u, double theta, const ModelParams& params);

/// Largest s = theta in (0, 1] with a + b theta^2 + c theta^4 = 0, by
/// bisection to 1e-12; nullopt when there is none. a > 0, c >= 0 expected.
std::optional<double> largest_unit_root(double a, double b, double c);
/// theta in (0, 1] with E(theta u) = 0 at p = 4, where
/// E(theta u) = (grad/2) theta^2 + (cross - lambda P/4) theta^4 + (mag/2) theta^6.
std::optional<double> amplitude_zero_energy(const ComplexField& u, const ModelParams& params);
std::optional<double> amplitude_zero_energy(const EnergyBreakdown& e, double lambda);

}  // namespace css
