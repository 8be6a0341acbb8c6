#pragma once

#include <stdexcept>
#include <utility>

#include <nlohmann/json_fwd.hpp>

#include "css/gauge.hpp"
#include "css/grid.hpp"

namespace css {

struct Tolerances {
  double identity = 1e-6;    // relative, for the energy identities
  double constraint = 1e-8;  // gauge and mass constraints
};

struct ModelParams {
  double lambda = 1.0;
  double p = 4.0;
  double c = 1.0;
  bool gauge = true;  // false: decoupled NLS limit, all A_mu = 0
  GaugeBoundary boundary = GaugeBoundary::free_space;
  Tolerances tol;
};

/// Throws std::invalid_argument unless lambda > 0, p > 2, c > 0.
void validate(const ModelParams& params);

/// Thrown when a checked identity fails beyond tolerance.
class IdentityViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EnergyBreakdown {
  double kinetic_cov = 0.0;  // int |D1 u|^2 + |D2 u|^2
  double grad = 0.0;         // int |grad u|^2
  double mag = 0.0;          // int (A1^2 + A2^2) |u|^2
  double cross = 0.0;        // Im int (A1 d1 u + A2 d2 u) conj(u)
  double potential = 0.0;    // int |u|^p
  double a0_weight = 0.0;    // int A0 |u|^2
};

void to_json(nlohmann::json& j, const EnergyBreakdown& e);

struct EnergyResult {
  double energy = 0.0;
  EnergyBreakdown terms;
};

/// Gauge fields for u under the model's closure (zero when gauge is off).
GaugeFields gauge_for(const ComplexField& u, const ModelParams& params);

ComplexField covariant_derivative(const ComplexField& u, const GaugeFields& g, int axis);

/// Every term of the energy. Does not check identities.
EnergyBreakdown energy_terms(const ComplexField& u, const GaugeFields& g, double p);

/// E = kinetic_cov/2 - lambda/p * potential. Throws IdentityViolation when
/// the expansion kinetic_cov = grad + mag + 2 cross or the A0 identity
/// a0_weight = 2 mag + 2 cross fails beyond params.tol.identity.
EnergyResult energy(const ComplexField& u, const GaugeFields& g, const ModelParams& params);
EnergyResult energy(const ComplexField& u, const ModelParams& params);

/// Residuals of the two identities, relative to kinetic_cov (or grad when
/// larger).
std::pair<double, double> identity_residuals(const EnergyBreakdown& e);

double pohozaev_q(const EnergyBreakdown& e, const ModelParams& params);
double pohozaev_q(const ComplexField& u, const ModelParams& params);

double mass(const ComplexField& u);
/// int |u|^p.
double potential_integral(const ComplexField& u, double p);
/// |u|^{p-2} u, defined as 0 where u = 0.
ComplexField power_nonlinearity(const ComplexField& u, double p);

/// alpha = -(kinetic_cov + a0_weight - lambda * potential) / mass.
double multiplier_estimate(const ComplexField& u, const GaugeFields& g, const ModelParams& params);
double multiplier_estimate(const EnergyBreakdown& e, double mass, double lambda);

/// ||D1 u + i D2 u||_2 / ||grad u||_2.
double self_dual_residual(const ComplexField& u, const GaugeFields& g);

/// Energy through the first-order factorization
///   E = ||(D1 + i D2) u||^2 / 2 + (1 - lambda)/4 int |u|^4 + background,
/// valid for p = 4. background is -mass^2 / (4 area) for periodic fields
/// (the torus cannot carry net flux) and 0 for free-space fields.
struct SelfDualSplit {
  double dual_norm2 = 0.0;
  double quartic = 0.0;
  double background = 0.0;
  double energy(double lambda) const { return 0.5 * dual_norm2 + 0.25 * (1.0 - lambda) * quartic + background; }
};
SelfDualSplit self_dual_split(const ComplexField& u, const GaugeFields& g);

/// Smallest nodal value of |D1 u| + |D2 u| - |grad |u||; the gradient of
/// |u| is taken as Re(conj(u) grad u)/|u| where u != 0.
double diamagnetic_margin(const ComplexField& u, const GaugeFields& g);

/// ||u||_t / (||grad |u| ||_2^{1-2/t} ||u||_2^{2/t}).
double gagliardo_nirenberg_ratio(const ComplexField& u, double t);

/// (E(u1 + u2) - E(u1) - E(u2), bound) where bound is the explicit
/// interaction estimate for supports separated by `distance`. Throws
/// std::invalid_argument when the supports overlap or lie closer than
/// `distance` (support = samples above 1e-12 of the peak).
std::pair<double, double> far_separation_additivity(const ComplexField& u1, const ComplexField& u2, double distance,
                                                    const ModelParams& params);

}  // namespace css
