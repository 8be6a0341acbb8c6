#include "css/critical_mass.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <gsl/gsl_multimin.h>
#include <gsl/gsl_sf_bessel.h>
#include <nlohmann/json.hpp>

#include "css/scaling.hpp"

namespace css {

ComplexField liouville_profile(double mu, double x0, double y0, const GridPtr& grid) {
  if (!(mu > 0.0)) throw std::invalid_argument("liouville_profile: mu must be positive");
  return sample<cplx>(grid, [&](double x, double y) {
    const double r2 = (x - x0) * (x - x0) + (y - y0) * (y - y0);
    return 4.0 * std::sqrt(2.0) * mu / (4.0 + mu * mu * r2);
  });
}

std::pair<RealField, RealField> liouville_gauge(double mu, double x0, double y0, const GridPtr& grid) {
  auto f = [&](double x, double y) { return 4.0 + mu * mu * ((x - x0) * (x - x0) + (y - y0) * (y - y0)); };
  return {sample<double>(grid, [&](double x, double y) { return 2.0 * mu * mu * (y - y0) / f(x, y); }),
          sample<double>(grid, [&](double x, double y) { return -2.0 * mu * mu * (x - x0) / f(x, y); })};
}

const char* to_string(CriticalCase c) {
  switch (c) {
    case CriticalCase::below_one: return "lambda<1";
    case CriticalCase::self_dual: return "lambda=1";
    case CriticalCase::above_one: return "lambda>1";
  }
  return "?";
}

void to_json(nlohmann::json& j, const CriticalReport& r) {
  j = {{"lambda", r.lambda},
       {"case", to_string(r.regime)},
       {"energy", r.energy},
       {"kinetic_cov", r.kinetic_cov},
       {"dual_norm2", r.dual_norm2},
       {"self_dual_residual", r.self_dual_residual},
       {"sign_ok", r.sign_ok},
       {"detail", r.detail}};
  j["zero_amplitude"] = r.zero_amplitude ? nlohmann::json(*r.zero_amplitude) : nlohmann::json(nullptr);
}

CriticalReport classify_critical(const ComplexField& u, const ModelParams& params, double tol) {
  if (params.p != 4.0) throw std::invalid_argument("classify_critical: requires p = 4");
  const GaugeFields g = gauge_for(u, params);
  const EnergyBreakdown e = energy_terms(u, g, params.p);
  const SelfDualSplit split = self_dual_split(u, g);
  CriticalReport r;
  r.lambda = params.lambda;
  r.kinetic_cov = e.kinetic_cov;
  r.energy = 0.5 * e.kinetic_cov - 0.25 * params.lambda * e.potential;
  r.dual_norm2 = split.dual_norm2;
  r.self_dual_residual = e.grad > 0.0 ? std::sqrt(split.dual_norm2 / e.grad) : 0.0;
  const double scale = tol * e.kinetic_cov;
  std::ostringstream os;
  if (std::abs(params.lambda - 1.0) <= 1e-12) {
    r.regime = CriticalCase::self_dual;
    const double mismatch = std::abs(r.energy - split.energy(params.lambda));
    r.sign_ok = r.energy >= -scale && mismatch <= scale;
    os << "E = ||D1u + iD2u||^2/2" << (split.background != 0.0 ? " + background" : "") << " (mismatch " << mismatch
       << ")";
  } else if (params.lambda < 1.0) {
    r.regime = CriticalCase::below_one;
    r.sign_ok = r.energy > 0.0;
    os << "E >= (1 - lambda)/4 int |u|^4 > 0 expected";
  } else {
    r.regime = CriticalCase::above_one;
    r.zero_amplitude = amplitude_zero_energy(e, params.lambda);
    r.sign_ok = true;
    os << (r.zero_amplitude ? "E(theta u) = 0 has a root in (0, 1]" : "no root of E(theta u) = 0 in (0, 1]");
  }
  r.detail = os.str();
  return r;
}

void validate(const CstarConfig& c) {
  if (c.n < 16 || c.n % 2 != 0) throw std::invalid_argument("cstar: n must be even and >= 16");
  if (!(c.box > 0.0) || !(c.mu > 0.0) || !(c.basis_radius > 0.0))
    throw std::invalid_argument("cstar: box, mu and basis_radius must be positive");
  if (c.modes < 0 || c.modes > 8) throw std::invalid_argument("cstar: modes must be in 0..8");
  if (c.max_evals < 1) throw std::invalid_argument("cstar: max_evals must be >= 1");
  if (!(c.simplex_step > 0.0) || !(c.size_tol > 0.0) || !(c.energy_tol > 0.0))
    throw std::invalid_argument("cstar: simplex_step, size_tol and energy_tol must be positive");
}

void to_json(nlohmann::json& j, const CstarEstimate& e) {
  j = {{"lambda", e.lambda},         {"cstar_estimate", e.cstar}, {"energy_residual", e.energy_residual},
       {"theta", e.theta},           {"coefficients", e.coefficients}, {"evaluations", e.evaluations},
       {"certified", e.certified}};
}

namespace {

struct CstarProblem {
  ModelParams params;
  ComplexField base;              // Liouville profile
  std::vector<RealField> basis;   // J0(j_k r / R)
  int evaluations = 0;

  ComplexField candidate(const double* a) const {
    ComplexField u = base;
    for (std::size_t k = 0; k < u.size(); ++k) {
      double f = 1.0;
      for (std::size_t m = 0; m < basis.size(); ++m) f += a[m] * basis[m][k];
      u[k] *= f;
    }
    return u;
  }

  struct Projection {
    double mass = std::numeric_limits<double>::infinity();
    double scale = 0.0;  // multiply the candidate by this to reach E = 0
  };

  // Smallest zero-energy multiple of u. The candidate is first scaled so that
  // the quadratic in theta^2 has its vertex at 1, which places the smaller
  // root inside (0, 1] where amplitude_zero_energy looks for it.
  Projection project(const ComplexField& u) const {
    const EnergyBreakdown e = energy_terms(u, gauge_for(u, params), 4.0);
    const double b = e.cross - 0.25 * params.lambda * e.potential;
    Projection pr;
    if (!(b < 0.0) || !(e.mag > 0.0)) return pr;
    const double v = -b / e.mag;  // vertex of grad/2 + b s + mag/2 s^2
    EnergyBreakdown es = e;
    es.grad *= v;
    es.cross *= v * v;
    es.potential *= v * v;
    es.mag *= v * v * v;
    const auto theta = amplitude_zero_energy(es, params.lambda);
    if (!theta) return pr;
    pr.scale = std::sqrt(v) * *theta;
    pr.mass = pr.scale * pr.scale * mass(u);
    return pr;
  }
};

double objective(const gsl_vector* x, void* data) {
  auto* pb = static_cast<CstarProblem*>(data);
  ++pb->evaluations;
  const double m = pb->project(pb->candidate(x->data)).mass;
  return std::isfinite(m) ? m : 1e30;
}

}  // namespace

CstarEstimate estimate_cstar(const ModelParams& params, const CstarConfig& config) {
  validate(config);
  if (params.p != 4.0) throw std::invalid_argument("estimate_cstar: requires p = 4");
  if (!(params.lambda > 1.0)) throw std::invalid_argument("estimate_cstar: requires lambda > 1");

  const GridPtr grid = make_grid(config.n, config.n, config.box, config.box);
  CstarProblem pb;
  pb.params = params;
  pb.base = liouville_profile(config.mu, grid);
  const double radius = config.basis_radius / config.mu;
  for (int k = 1; k <= config.modes; ++k) {
    const double jk = gsl_sf_bessel_zero_J0(static_cast<unsigned>(k));
    pb.basis.push_back(
        sample<double>(grid, [&](double x, double y) { return gsl_sf_bessel_J0(jk * std::hypot(x, y) / radius); }));
  }

  CstarEstimate est;
  est.lambda = params.lambda;
  std::vector<double> best(static_cast<std::size_t>(config.modes), 0.0);

  if (config.modes > 0) {
    const std::size_t dim = static_cast<std::size_t>(config.modes);
    gsl_vector* x = gsl_vector_calloc(dim);
    gsl_vector* step = gsl_vector_alloc(dim);
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> jitter(0.5, 1.5);
    for (std::size_t k = 0; k < dim; ++k) gsl_vector_set(step, k, config.simplex_step * jitter(rng));
    gsl_multimin_function fn{&objective, dim, &pb};
    gsl_multimin_fminimizer* s = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, dim);
    gsl_multimin_fminimizer_set(s, &fn, x, step);
    while (pb.evaluations < config.max_evals) {
      if (gsl_multimin_fminimizer_iterate(s) != GSL_SUCCESS) break;
      if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(s), config.size_tol) == GSL_SUCCESS) break;
    }
    for (std::size_t k = 0; k < dim; ++k) best[k] = gsl_vector_get(s->x, k);
    gsl_multimin_fminimizer_free(s);
    gsl_vector_free(step);
    gsl_vector_free(x);
  }

  const ComplexField u = pb.candidate(best.data());
  const auto pr = pb.project(u);
  est.evaluations = pb.evaluations + 1;
  est.coefficients = best;
  if (!std::isfinite(pr.mass)) throw std::runtime_error("estimate_cstar: no zero-energy candidate found");
  ComplexField w = u;
  w *= pr.scale;
  const EnergyBreakdown e = energy_terms(w, gauge_for(w, params), 4.0);
  const double energy = 0.5 * e.kinetic_cov - 0.25 * params.lambda * e.potential;
  est.cstar = mass(w);
  est.theta = pr.scale;
  est.energy_residual = std::abs(energy) / e.kinetic_cov;
  est.certified = est.energy_residual <= config.energy_tol;
  return est;
}

void write_cstar_csv(std::ostream& os, const std::vector<CstarEstimate>& sweep) {
  os << "lambda,cstar_estimate,energy_residual\n";
  os.precision(17);
  for (const auto& e : sweep) os << e.lambda << ',' << e.cstar << ',' << e.energy_residual << '\n';
}

}  // namespace css
