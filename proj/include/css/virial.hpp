#pragma once

#include <functional>

#include "css/functionals.hpp"
#include "css/grid.hpp"

namespace css {

/// A radial weight xi(|x|) sampled with the partial derivatives the virial
/// formulas need. Built from the radial profile and its first four
/// derivatives, so no spectral differentiation of a non-periodic field occurs.
struct RadialWeight {
  RealField value;
  RealField d1, d2;              // first partials
  RealField d11, d12, d22;       // second partials
  RealField laplacian;
  RealField bilaplacian;         // d1^4 + 2 d1^2 d2^2 + d2^4
  double grad_sup = 0.0;         // max |grad xi| over the nodes
};

/// profile(r, k) must return the k-th radial derivative, k = 0..4.
RadialWeight radial_weight(const GridPtr& grid, const std::function<double(double, int)>& profile);

/// xi = a |x|^2.
RadialWeight quadratic_weight(const GridPtr& grid, double a);

/// k-th derivative of the unit cutoff: r^2/2 on [0, 1], constant on
/// [10, inf), chi'(r) = r (1 - S((r - 1) / 9)) in between with S the
/// degree-9 smoothstep, so chi is C^5.
double unit_cutoff(double r, int k);

struct CutoffChiR {
  double r_inner = 0.0;  // R
  RadialWeight weight;   // chi_R(r) = R^2 chi(r / R)
};

CutoffChiR make_cutoff(const GridPtr& grid, double r_inner);

/// max over r of 2 - Delta chi and of |Delta^2 chi| for the unit cutoff
/// (scale-free: Delta chi_R(r) = Delta chi(r/R), Delta^2 chi_R = R^-2 Delta^2 chi(r/R)).
double cutoff_laplacian_deficit_sup();
double cutoff_bilaplacian_sup();

/// I = int |x|^2 |phi|^2 about the box center.
double virial_i(const ComplexField& phi);

/// Mass outside the disc of radius lx/2 - margin (the virial precondition).
double tail_mass(const ComplexField& phi, double margin = 2.0);

/// V_xi = Im int conj(phi) (D1 phi d1 xi + D2 phi d2 xi).
double virial_v(const ComplexField& phi, const GaugeFields& g, const RadialWeight& xi);

/// Closed-form d V_xi / dt.
double virial_rhs(const ComplexField& phi, const GaugeFields& g, const ModelParams& params, const RadialWeight& xi);

struct BlowupBound {
  double lhs = 0.0;         // virial_rhs(chi_R)
  double rhs = 0.0;         // two_q + slack_nonlinear + slack_mass
  double two_q = 0.0;
  double slack_nonlinear = 0.0;  // c_nonlinear R^{-(p-2)/2} (|D1 phi| + |D2 phi|)^{(p-2)/2}
  double slack_mass = 0.0;       // c_mass R^{-2}
  double c_nonlinear = 0.0;
  double c_mass = 0.0;
};

/// Localized virial bound for radial phi. The constants come from the
/// radial Strauss bound r |f(r)|^2 <= ||f||_2 ||d_r f||_2 / pi applied to |phi|
/// (diamagnetic inequality), the supremum of 2 - Delta chi and of |Delta^2 chi|:
///   c_nonlinear = lambda (p-2)/p * sup(2 - Delta chi) * pi^{-(p-2)/2} * m^{1 + (p-2)/4}
///   c_mass      = sup|Delta^2 chi| * m / 2
/// Throws std::invalid_argument for a non-radial phi.
BlowupBound blowup_bound_check(const ComplexField& phi, const GaugeFields& g, const ModelParams& params,
                               const CutoffChiR& chi);

/// Angular-variance threshold used by the radial preconditions.
inline constexpr double radial_tolerance = 1e-3;

}  // namespace css
