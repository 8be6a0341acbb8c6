#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "css/functionals.hpp"
#include "css/grid.hpp"

namespace css {

/// u(x) = 4 sqrt(2) mu / (4 + mu^2 |x - x0|^2), real.
ComplexField liouville_profile(double mu, double x0, double y0, const GridPtr& grid);
inline ComplexField liouville_profile(double mu, const GridPtr& grid) { return liouville_profile(mu, 0.0, 0.0, grid); }

/// Closed-form gauge of the Liouville profile: A1 = 2 mu^2 x2 / (4 + mu^2 r^2),
/// A2 = -2 mu^2 x1 / (4 + mu^2 r^2), A0 = 0 left unset.
std::pair<RealField, RealField> liouville_gauge(double mu, double x0, double y0, const GridPtr& grid);

enum class CriticalCase { below_one, self_dual, above_one };
const char* to_string(CriticalCase c);

struct CriticalReport {
  double lambda = 0.0;
  CriticalCase regime = CriticalCase::below_one;
  double energy = 0.0;
  double kinetic_cov = 0.0;
  double dual_norm2 = 0.0;               // ||D1 u + i D2 u||^2
  double self_dual_residual = 0.0;       // ||D1 u + i D2 u|| / ||grad u||
  std::optional<double> zero_amplitude;  // theta with E(theta u) = 0 (lambda > 1)
  bool sign_ok = false;  // below_one: E > 0; self_dual: E >= -tol, E ~ 0 iff residual ~ 0; above_one: always
  std::string detail;
};

void to_json(nlohmann::json& j, const CriticalReport& r);

/// Sign structure of E at p = 4 from the self-dual split. tol is relative
/// to kinetic_cov. Throws unless params.p == 4.
CriticalReport classify_critical(const ComplexField& u, const ModelParams& params, double tol = 1e-3);

struct CstarConfig {
  int n = 256;               // grid nodes per side
  double box = 80.0;         // box side
  double mu = 2.0;           // Liouville scale (E is dilation invariant at p = 4)
  double basis_radius = 4.0; // Fourier-Bessel radius in units of 1/mu
  int modes = 4;             // number of J0(j_k r / R) perturbations, 0..8
  int max_evals = 400;
  double simplex_step = 0.05;
  double size_tol = 1e-4;    // simplex size stopping criterion
  std::uint64_t seed = 1;    // randomizes the initial simplex
  double energy_tol = 1e-8;  // |E| / kinetic_cov certificate
};

void validate(const CstarConfig& config);

struct CstarEstimate {
  double lambda = 0.0;
  double cstar = 0.0;            // best zero-energy mass found (upper bound)
  double energy_residual = 0.0;  // |E| / kinetic_cov of the certified candidate
  double theta = 0.0;            // amplitude of the projected candidate
  std::vector<double> coefficients;
  int evaluations = 0;
  bool certified = false;
};

void to_json(nlohmann::json& j, const CstarEstimate& e);

/// Candidate u_a = L_mu(r) (1 + sum_k a_k J0(j_k r / R)); each is scaled to
/// the smallest amplitude with E = 0 (amplitude_zero_energy) and the
/// resulting mass is minimized over a by Nelder-Mead. The result is an
/// upper estimate of the infimum. Throws for lambda <= 1, for p != 4, and
/// when no zero-energy candidate is found.
CstarEstimate estimate_cstar(const ModelParams& params, const CstarConfig& config);

/// Header "lambda,cstar_estimate,energy_residual".
void write_cstar_csv(std::ostream& os, const std::vector<CstarEstimate>& sweep);

}  // namespace css
