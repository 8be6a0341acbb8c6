#include "css/ground_state.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <nlohmann/json.hpp>

#include "css/scaling.hpp"
#include "css/spectral.hpp"
#include "css/symmetry.hpp"

namespace css {

void validate(const SolverConfig& c) {
  if (c.max_iters < 1) throw std::invalid_argument("solver: max_iters must be >= 1");
  if (!(c.step_initial > 0.0) || !(c.step_min > 0.0) || !(c.step_max >= c.step_initial) || !(c.step_backtrack > 0.0 && c.step_backtrack < 1.0))
    throw std::invalid_argument("solver: invalid step-size schedule");
  if (!(c.armijo_c1 > 0.0 && c.armijo_c1 < 1.0)) throw std::invalid_argument("solver: armijo_c1 must lie in (0, 1)");
  if (!(c.grad_tol > 0.0) || !(c.q_tol > 0.0)) throw std::invalid_argument("solver: tolerances must be positive");
  if (c.radial_every < 1) throw std::invalid_argument("solver: radial_every must be >= 1");
  if (c.perturbation < 0.0 || c.initial_width < 0.0) throw std::invalid_argument("solver: negative perturbation or width");
}

Regime regime_of(double p) {
  if (p < 4.0) return Regime::subcritical;
  if (p == 4.0) return Regime::critical;
  return Regime::supercritical;
}

const char* to_string(Regime r) {
  switch (r) {
    case Regime::subcritical: return "subcritical";
    case Regime::critical: return "critical";
    case Regime::supercritical: return "supercritical";
  }
  return "unknown";
}

ComplexField kinetic_gradient(const ComplexField& u, const GaugeFields& g) {
  const auto& grid = u.grid();
  ComplexField d1 = spectral_derivative(u, 1);
  ComplexField d2 = spectral_derivative(u, 2);
  for (std::size_t k = 0; k < u.size(); ++k) {
    d1[k] += cplx(0.0, g.a1[k]) * u[k];
    d2[k] += cplx(0.0, g.a2[k]) * u[k];
  }
  // -(d1 D1u + d2 D2u) in one transform pair.
  auto c1 = to_spectral(d1);
  const auto c2 = to_spectral(d2);
  for (int i = 0; i < grid.nx(); ++i)
    for (int j = 0; j < grid.ny(); ++j) {
      const std::size_t k = grid.index(i, j);
      c1[k] = -(cplx(0.0, grid.kx_deriv(i)) * c1[k] + cplx(0.0, grid.ky_deriv(j)) * c2[k]);
    }
  ComplexField out = from_spectral(u.grid_ptr(), c1);
  for (std::size_t k = 0; k < u.size(); ++k)
    out[k] += -cplx(0.0, 1.0) * (g.a1[k] * d1[k] + g.a2[k] * d2[k]) + g.a0[k] * u[k];
  return out;
}

ComplexField energy_gradient(const ComplexField& u, const GaugeFields& g, const ModelParams& params) {
  ComplexField out = kinetic_gradient(u, g);
  const ComplexField nl = power_nonlinearity(u, params.p);
  for (std::size_t k = 0; k < u.size(); ++k) out[k] -= params.lambda * nl[k];
  return out;
}

ComplexField energy_gradient(const ComplexField& u, const ModelParams& params) {
  return energy_gradient(u, gauge_for(u, params), params);
}

double projected_gradient_norm(const ComplexField& u, const ComplexField& g) {
  const double uu = inner(u, u);
  const double gg = inner(g, g);
  if (uu == 0.0 || gg == 0.0) return 0.0;
  const double mu = inner(u, g) / uu;
  double s = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) s += std::norm(g[k] - mu * u[k]);
  return std::sqrt(s * u.grid().cell_area() / gg);
}

ComplexField gaussian_initial(const GridPtr& grid, double c, double width, double perturbation, std::uint64_t seed) {
  if (!(width > 0.0)) throw std::invalid_argument("gaussian_initial: width must be positive");
  ComplexField u = sample<cplx>(grid, [&](double x, double y) { return std::exp(-(x * x + y * y) / (2.0 * width * width)); });
  if (perturbation > 0.0) {
    // Smooth random field: random low modes, localized by the Gaussian.
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<cplx> coeffs(grid->size(), 0.0);
    const double kcut = 2.0 / width;
    for (int i = 0; i < grid->nx(); ++i)
      for (int j = 0; j < grid->ny(); ++j) {
        const double k2 = grid->kx()[i] * grid->kx()[i] + grid->ky()[j] * grid->ky()[j];
        const double a = normal(rng);
        const double b = normal(rng);
        if (i == grid->nx() / 2 || j == grid->ny() / 2) continue;
        coeffs[grid->index(i, j)] = cplx(a, b) * std::exp(-k2 / (2.0 * kcut * kcut));
      }
    ComplexField noise = from_spectral(grid, coeffs);
    double nmax = 0.0;
    for (const auto& v : noise.values()) nmax = std::max(nmax, std::abs(v));
    for (std::size_t k = 0; k < u.size(); ++k) u[k] *= 1.0 + perturbation * noise[k] / nmax;
  }
  u *= std::sqrt(c / mass(u));
  return u;
}

namespace {

void renormalize(ComplexField& u, double c) { u *= std::sqrt(c / mass(u)); }

// (sigma - Laplacian)^{-1}, built from the derivative wavenumbers so that it
// inverts the discrete kinetic operator (Nyquist modes carry no k^2 there).
ComplexField precondition(const ComplexField& f, double sigma) {
  const auto& g = f.grid();
  auto c = to_spectral(f);
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 0; j < g.ny(); ++j) {
      const double kx = g.kx_deriv(i);
      const double ky = g.ky_deriv(j);
      c[g.index(i, j)] /= sigma + kx * kx + ky * ky;
    }
  return from_spectral(f.grid_ptr(), c);
}

// Zeroes the Nyquist rows and columns, where the discrete derivative
// vanishes and the kinetic form gives no control.
ComplexField strip_nyquist(const ComplexField& f) {
  const auto& g = f.grid();
  auto c = to_spectral(f);
  for (int i = 0; i < g.nx(); ++i) c[g.index(i, g.ny() / 2)] = 0.0;
  for (int j = 0; j < g.ny(); ++j) c[g.index(g.nx() / 2, j)] = 0.0;
  return from_spectral(f.grid_ptr(), c);
}

// Coefficients a with <c_i, f - sum_j a_j q_j> = 0 for one or two
// constraint directions c_i.
std::vector<double> solve_constraints(const std::vector<ComplexField>& cons, const std::vector<ComplexField>& q,
                                      const ComplexField& f) {
  if (cons.size() == 1) return {inner(cons[0], f) / inner(cons[0], q[0])};
  const double m00 = inner(cons[0], q[0]), m01 = inner(cons[0], q[1]);
  const double m10 = inner(cons[1], q[0]), m11 = inner(cons[1], q[1]);
  const double r0 = inner(cons[0], f), r1 = inner(cons[1], f);
  const double det = m00 * m11 - m01 * m10;
  if (det == 0.0) return {r0 / m00, 0.0};
  return {(r0 * m11 - m01 * r1) / det, (m00 * r1 - m10 * r0) / det};
}

// Relative L2 norm of g after removing its components along `cons`.
double constrained_gradient_norm(const ComplexField& g, const std::vector<ComplexField>& cons) {
  const double gg = inner(g, g);
  if (gg == 0.0) return 0.0;
  const std::vector<double> a = solve_constraints(cons, cons, g);
  ComplexField r = g;
  for (std::size_t i = 0; i < cons.size(); ++i)
    for (std::size_t k = 0; k < r.size(); ++k) r[k] -= a[i] * cons[i][k];
  return std::sqrt(inner(r, r) / gg);
}

ComplexField dilation_generator(const ComplexField& u);

// Stationarity measure shared by the solver and the certificate: Nyquist
// modes dropped, components along u (and the dilation generator when the
// fiber objective is in play) removed.
double stationarity(const ComplexField& u, const ComplexField& g, bool fiber) {
  std::vector<ComplexField> cons{u};
  if (fiber) cons.push_back(strip_nyquist(dilation_generator(u)));
  return constrained_gradient_norm(strip_nyquist(g), cons);
}

// x . grad u + u, the generator of u -> t u(t x) at t = 1.
ComplexField dilation_generator(const ComplexField& u) {
  const auto [d1, d2] = spectral_gradient(u);
  const auto& g = u.grid();
  ComplexField out(u.grid_ptr());
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 0; j < g.ny(); ++j) {
      const std::size_t k = g.index(i, j);
      out[k] = g.x(i) * d1[k] + g.y(j) * d2[k] + u[k];
    }
  return out;
}

struct Evaluation {
  double value = 0.0;
  EnergyBreakdown terms;
  GaugeFields gauge;
  double t = 1.0;  // fiber maximizer (supercritical)
};

class Objective {
 public:
  Objective(const ModelParams& params, bool fiber) : params_(params), fiber_(fiber) {}

  Evaluation value(const ComplexField& u) const {
    Evaluation ev;
    ev.gauge = gauge_for(u, params_);
    ev.terms = energy_terms(u, ev.gauge, params_.p);
    if (fiber_) {
      if (!(ev.terms.potential > 0.0)) throw std::runtime_error("minimize_supercritical: fiber collapse (P -> 0)");
      ev.t = t_star(ev.terms.kinetic_cov, ev.terms.potential, params_);
      ev.value = fiber_energy(ev.terms.kinetic_cov, ev.terms.potential, params_, ev.t);
    } else {
      ev.value = 0.5 * ev.terms.kinetic_cov - params_.lambda / params_.p * ev.terms.potential;
    }
    if (!std::isfinite(ev.value)) throw std::runtime_error("ground state: non-finite objective");
    return ev;
  }

  ComplexField gradient(const ComplexField& u, const Evaluation& ev) const {
    ComplexField g = kinetic_gradient(u, ev.gauge);
    const ComplexField nl = power_nonlinearity(u, params_.p);
    const double wk = fiber_ ? ev.t * ev.t : 1.0;
    const double wp = fiber_ ? params_.lambda * std::pow(ev.t, params_.p - 2.0) : params_.lambda;
    for (std::size_t k = 0; k < u.size(); ++k) g[k] = wk * g[k] - wp * nl[k];
    return g;
  }

 private:
  ModelParams params_;
  bool fiber_;
};

struct DescentOutcome {
  ComplexField u;
  Evaluation ev;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> history;
};

DescentOutcome descend(ComplexField u, const ModelParams& params, const SolverConfig& cfg, bool fiber) {
  const Objective obj(params, fiber);
  const double c = params.c;
  u = strip_nyquist(u);
  renormalize(u, c);
  if (cfg.radial) {
    u = d4_symmetrize(u);
    renormalize(u, c);
  }
  Evaluation ev = obj.value(u);
  ComplexField g = strip_nyquist(obj.gradient(u, ev));
  DescentOutcome out{u, ev, 0.0, 0, false, {ev.value}};

  std::optional<ComplexField> d_prev;
  std::optional<ComplexField> z_prev;
  double gz_prev = 0.0;
  double step = cfg.step_initial;

  for (int it = 1; it <= cfg.max_iters; ++it) {
    // Constraint directions: the mass sphere's normal u and, for the fiber
    // objective, the dilation generator along which F is flat.
    std::vector<ComplexField> cons{u};
    if (fiber) cons.push_back(strip_nyquist(dilation_generator(u)));
    const double gn = constrained_gradient_norm(g, cons);  // g is already Nyquist-free
    const double qr = std::abs(pohozaev_q(ev.terms, params)) / std::max(ev.terms.kinetic_cov, 1e-300);
    // For the fiber objective Q vanishes on u_{t_u} by construction, so only
    // the gradient decides.
    if (gn <= cfg.grad_tol && (fiber || qr <= cfg.q_tol)) {
      out.converged = true;
      out.grad_norm = gn;
      out.iterations = it - 1;
      break;
    }
    if (gn <= cfg.grad_tol) {
      // Stationary on this grid, yet Q misses its tolerance: the residual is
      // discretization error that further descent cannot remove.
      out.grad_norm = gn;
      out.iterations = it - 1;
      break;
    }
    out.grad_norm = gn;
    out.iterations = it;

    // z = P w with w = g - sum a_i c_i chosen so that z is L2-orthogonal to
    // every constraint direction; then <w, z> = w'Pw >= 0 and -z descends
    // while staying tangent to all of them.
    const double alpha = -(ev.terms.kinetic_cov + ev.terms.a0_weight - params.lambda * ev.terms.potential) / c;
    const double sigma = std::max({alpha, ev.terms.kinetic_cov / c, 1e-12});
    std::vector<ComplexField> pcons;
    for (const auto& ci : cons) pcons.push_back(precondition(ci, sigma));
    const ComplexField pg = precondition(g, sigma);
    const std::vector<double> coef = solve_constraints(cons, pcons, pg);
    ComplexField z = pg;
    ComplexField w = g;
    for (std::size_t i = 0; i < cons.size(); ++i)
      for (std::size_t k = 0; k < z.size(); ++k) {
        z[k] -= coef[i] * pcons[i][k];
        w[k] -= coef[i] * cons[i][k];
      }
    const double gz = inner(w, z);

    ComplexField d = z;
    d *= -1.0;
    if (cfg.conjugate && d_prev && z_prev && gz_prev > 0.0) {
      const double beta = std::max((gz - inner(w, *z_prev)) / gz_prev, 0.0);
      ComplexField dp = *d_prev;
      for (const auto& ci : cons) {
        const double proj = inner(ci, dp) / inner(ci, ci);
        for (std::size_t k = 0; k < dp.size(); ++k) dp[k] -= proj * ci[k];
      }
      for (std::size_t k = 0; k < d.size(); ++k) d[k] += beta * dp[k];
      if (inner(w, d) >= 0.0) {
        d = z;
        d *= -1.0;
      }
    }
    const double slope = inner(w, d);
    if (!(slope < 0.0)) break;

    // Armijo line search seeded by the last accepted step and refined by the
    // parabola through (0, f0, slope) and the trial value.
    const double round = 1e-13 * (std::abs(ev.value) + 0.5 * ev.terms.kinetic_cov);
    auto try_step = [&](double sv, ComplexField& out_u, Evaluation& out_ev) {
      out_u = u;
      for (std::size_t k = 0; k < out_u.size(); ++k) out_u[k] += sv * d[k];
      renormalize(out_u, c);
      out_ev = obj.value(out_u);
      return out_ev.value <= ev.value + cfg.armijo_c1 * sv * slope + round;
    };
    auto parabola_min = [&](double sv, double fv) {
      const double curv = fv - ev.value - slope * sv;
      return curv > 0.0 ? -slope * sv * sv / (2.0 * curv) : cfg.step_max;
    };
    // Once the predicted decrease of a full step sinks below the objective's
    // rounding noise, function values cannot rank trial points; progress is
    // then judged by the stationarity measure instead.
    const double s_full = std::min(std::max(step, cfg.step_initial), cfg.step_max);
    const bool noisy = -slope * s_full < 1e2 * round;
    double s = std::min(step, cfg.step_max);
    bool accepted = false;
    ComplexField trial(u.grid_ptr());
    Evaluation tev;
    while (!noisy && s >= cfg.step_min) {
      if (try_step(s, trial, tev)) {
        accepted = true;
        // Extend or shorten once towards the parabola's minimum.
        const double sq = std::clamp(parabola_min(s, tev.value), 0.25 * s, std::min(4.0 * s, cfg.step_max));
        if (std::abs(sq - s) > 0.1 * s) {
          ComplexField alt(u.grid_ptr());
          Evaluation aev;
          if (try_step(sq, alt, aev) && aev.value < tev.value) {
            trial = std::move(alt);
            tev = std::move(aev);
            s = sq;
          }
        }
        break;
      }
      const double sq = parabola_min(s, tev.value);
      s = std::clamp(sq, 0.1 * s, cfg.step_backtrack * s);
    }
    std::optional<ComplexField> trial_grad;
    auto eval_with_grad = [&](double sv, ComplexField& tu, Evaluation& te, ComplexField& tg) {
      tu = u;
      for (std::size_t k = 0; k < tu.size(); ++k) tu[k] += sv * d[k];
      renormalize(tu, c);
      te = obj.value(tu);
      tg = strip_nyquist(obj.gradient(tu, te));
      std::vector<ComplexField> tcons{tu};
      if (fiber) tcons.push_back(strip_nyquist(dilation_generator(tu)));
      const std::vector<double> a = solve_constraints(tcons, tcons, tg);
      ComplexField tw = tg;
      for (std::size_t i = 0; i < tcons.size(); ++i)
        for (std::size_t k = 0; k < tw.size(); ++k) tw[k] -= a[i] * tcons[i][k];
      return inner(tw, d);  // slope along d at the trial point
    };
    if (!accepted && noisy) {
      // Secant on the directional derivative, which stays accurate where
      // energy differences drown in rounding.
      ComplexField tg(u.grid_ptr());
      const double s1 = s_full;
      const double d1 = eval_with_grad(s1, trial, tev, tg);
      double sv = s1;
      if (d1 > slope) sv = std::min(s1 * slope / (slope - d1), cfg.step_max);
      const double dv = sv == s1 ? d1 : eval_with_grad(sv, trial, tev, tg);
      if (std::abs(dv) < 0.5 * std::abs(slope) && tev.value <= ev.value + 10.0 * round) {
        s = sv;
        trial_grad = std::move(tg);
        accepted = true;
      }
    }
    if (!accepted && -slope * s_full < 1e4 * round) {
      s = s_full;
      for (int tries = 0; tries < 30 && s >= cfg.step_min; ++tries, s *= cfg.step_backtrack) {
        trial = u;
        for (std::size_t k = 0; k < trial.size(); ++k) trial[k] += s * d[k];
        renormalize(trial, c);
        tev = obj.value(trial);
        ComplexField tg = strip_nyquist(obj.gradient(trial, tev));
        std::vector<ComplexField> tcons{trial};
        if (fiber) tcons.push_back(strip_nyquist(dilation_generator(trial)));
        if (constrained_gradient_norm(tg, tcons) < gn && tev.value <= ev.value + 10.0 * round) {
          trial_grad = std::move(tg);
          accepted = true;
          break;
        }
      }
    }
    if (!accepted) break;
    step = s;
    u = std::move(trial);
    ev = std::move(tev);
    d_prev = std::move(d);
    z_prev = std::move(z);
    gz_prev = gz;

    bool reset = false;
    if (fiber && std::abs(ev.t - 1.0) > 0.02) {
      u = strip_nyquist(dilate_on_grid(u, ev.t).field);
      reset = true;
    }
    if (cfg.radial && it % cfg.radial_every == 0) {
      u = d4_symmetrize(u);
      reset = true;
    }
    if (reset) {
      renormalize(u, c);
      ev = obj.value(u);
      d_prev.reset();
      z_prev.reset();
    }
    out.history.push_back(ev.value);
    if (trial_grad && !reset)
      g = std::move(*trial_grad);
    else
      g = strip_nyquist(obj.gradient(u, ev));
  }
  if (!out.converged) out.grad_norm = stationarity(u, g, fiber);
  out.u = std::move(u);
  out.ev = std::move(ev);
  return out;
}

GroundStateResult finish(ComplexField u, const ModelParams& params, DescentOutcome&& o, Regime regime) {
  GroundStateResult r;
  const GaugeFields gf = gauge_for(u, params);
  r.terms = energy_terms(u, gf, params.p);
  r.energy = 0.5 * r.terms.kinetic_cov - params.lambda / params.p * r.terms.potential;
  r.q_residual = pohozaev_q(r.terms, params) / std::max(r.terms.kinetic_cov, 1e-300);
  r.multiplier = multiplier_estimate(r.terms, mass(u), params.lambda);
  r.grad_norm = stationarity(u, energy_gradient(u, gf, params), regime == Regime::supercritical);
  r.iterations = o.iterations;
  r.converged = o.converged;
  r.regime = regime;
  r.history = std::move(o.history);
  r.u = std::move(u);
  return r;
}

}  // namespace

GroundStateResult minimize_subcritical(ComplexField initial, const ModelParams& params, const SolverConfig& config) {
  validate(params);
  validate(config);
  if (!(params.p > 2.0 && params.p < 4.0)) throw std::invalid_argument("minimize_subcritical: requires 2 < p < 4");
  DescentOutcome o = descend(std::move(initial), params, config, false);
  ComplexField u = o.u;
  return finish(std::move(u), params, std::move(o), Regime::subcritical);
}

GroundStateResult minimize_subcritical(const GridPtr& grid, const ModelParams& params, const SolverConfig& config) {
  const double w = config.initial_width > 0.0 ? config.initial_width : std::min(grid->lx(), grid->ly()) / 16.0;
  return minimize_subcritical(gaussian_initial(grid, params.c, w, config.perturbation, config.seed), params, config);
}

GroundStateResult minimize_supercritical(ComplexField initial, const ModelParams& params, const SolverConfig& config) {
  validate(params);
  validate(config);
  if (!(params.p > 4.0)) throw std::invalid_argument("minimize_supercritical: requires p > 4");
  DescentOutcome o = descend(std::move(initial), params, config, true);
  ComplexField uc = dilate(o.u, o.ev.t);
  return finish(std::move(uc), params, std::move(o), Regime::supercritical);
}

GroundStateResult minimize_supercritical(const GridPtr& grid, const ModelParams& params, const SolverConfig& config) {
  validate(params);
  double w = config.initial_width > 0.0 ? config.initial_width : std::min(grid->lx(), grid->ly()) / 16.0;
  // Pick the width whose fiber maximizer is t = 1, so the iterate already
  // sits at the scale of the box.
  for (int pass = 0; pass < 4; ++pass) {
    const ComplexField trial = gaussian_initial(grid, params.c, w, 0.0, config.seed);
    const auto e = energy_terms(trial, gauge_for(trial, params), params.p);
    w /= t_star(e.kinetic_cov, e.potential, params);
  }
  return minimize_supercritical(gaussian_initial(grid, params.c, w, config.perturbation, config.seed), params, config);
}

CertifyReport certify(const ComplexField& u, const ModelParams& params, const SolverConfig& config) {
  CertifyReport r;
  const GaugeFields g = gauge_for(u, params);
  const EnergyBreakdown e = energy_terms(u, g, params.p);
  r.grad_norm = stationarity(u, energy_gradient(u, g, params), params.p > 4.0);
  r.q_residual = std::abs(pohozaev_q(e, params)) / std::max(e.kinetic_cov, 1e-300);
  r.multiplier = multiplier_estimate(e, mass(u), params.lambda);
  r.aid_residual = identity_residuals(e).second;
  if (params.p == 4.0 && params.lambda == 1.0) r.self_dual = self_dual_residual(u, g);
  r.passed = r.grad_norm <= config.grad_tol && r.q_residual <= config.q_tol && r.aid_residual <= params.tol.identity;
  return r;
}

void to_json(nlohmann::json& j, const CertifyReport& r) {
  j = nlohmann::json{{"grad_norm", r.grad_norm},
                     {"q_residual", r.q_residual},
                     {"multiplier", r.multiplier},
                     {"aid_residual", r.aid_residual},
                     {"passed", r.passed}};
  if (r.self_dual) j["self_dual_residual"] = *r.self_dual;
}

}  // namespace css
