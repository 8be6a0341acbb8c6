#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "css/functionals.hpp"
#include "css/grid.hpp"

namespace css {

struct SolverConfig {
  int max_iters = 2000;
  double step_initial = 1.0;
  double step_max = 64.0;
  double step_backtrack = 0.5;
  double step_min = 1e-12;
  double armijo_c1 = 1e-4;
  double grad_tol = 1e-7;  // relative L2 norm of the projected gradient (see grad_norm)
  double q_tol = 1e-6;     // |Q| / kinetic_cov
  bool radial = false;     // D4-symmetrize iterates
  int radial_every = 10;
  bool conjugate = true;   // Polak-Ribiere directions
  std::uint64_t seed = 1;
  double perturbation = 0.0;  // relative size of the random initial perturbation
  double initial_width = 0.0; // Gaussian width; 0 = box / 16
};

void validate(const SolverConfig& config);

enum class Regime { subcritical, critical, supercritical };
Regime regime_of(double p);
const char* to_string(Regime r);

struct GroundStateResult {
  ComplexField u;
  double energy = 0.0;
  double q_residual = 0.0;  // Q(u) / kinetic_cov(u)
  double multiplier = 0.0;
  // Gradient with the Nyquist modes dropped and the components along u
  // removed; for p > 4 also along x.grad u + u, the flat direction of F.
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  Regime regime = Regime::subcritical;
  std::vector<double> history;  // accepted objective values
  EnergyBreakdown terms;
};

/// L2 gradient of E: -d_j(D_j u) - i A_j D_j u + A0 u - lambda |u|^{p-2} u.
ComplexField energy_gradient(const ComplexField& u, const GaugeFields& g, const ModelParams& params);
ComplexField energy_gradient(const ComplexField& u, const ModelParams& params);

/// Gradient of the kinetic half K/2 alone (the lambda = 0 part).
ComplexField kinetic_gradient(const ComplexField& u, const GaugeFields& g);

/// Relative norm of the component of g orthogonal to u.
double projected_gradient_norm(const ComplexField& u, const ComplexField& g);

/// Radial Gaussian of the given mass and width exp(-|x|^2 / (2 w^2)),
/// optionally perturbed by a smooth random field and renormalized.
ComplexField gaussian_initial(const GridPtr& grid, double c, double width, double perturbation = 0.0,
                              std::uint64_t seed = 1);

/// Global minimizer of E on S(c), 2 < p < 4.
GroundStateResult minimize_subcritical(const GridPtr& grid, const ModelParams& params, const SolverConfig& config);
GroundStateResult minimize_subcritical(ComplexField initial, const ModelParams& params, const SolverConfig& config);

/// Minimizer of F(u) = max_t E(u_t) on S(c), p > 4. The returned field is
/// u_{t_u}, carried on the box scaled by 1/t_u so that the dilation is exact.
GroundStateResult minimize_supercritical(const GridPtr& grid, const ModelParams& params, const SolverConfig& config);
GroundStateResult minimize_supercritical(ComplexField initial, const ModelParams& params, const SolverConfig& config);

struct CertifyReport {
  double grad_norm = 0.0;
  double q_residual = 0.0;
  double multiplier = 0.0;
  double aid_residual = 0.0;
  std::optional<double> self_dual;
  bool passed = false;
};

/// Stationarity, Pohozaev and (Aid) check of a candidate ground state; the
/// gradient measure matches GroundStateResult::grad_norm.
CertifyReport certify(const ComplexField& u, const ModelParams& params, const SolverConfig& config);

void to_json(nlohmann::json& j, const CertifyReport& r);

}  // namespace css
