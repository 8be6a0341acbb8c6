#include "css/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "css/ground_state.hpp"
#include "css/spectral.hpp"
#include "css/virial.hpp"

namespace css {

const char* to_string(GaugeRefresh r) { return r == GaugeRefresh::every_substep ? "every_substep" : "every_step"; }
const char* to_string(Scheme s) { return s == Scheme::strang_split ? "strang_split" : "rk4_spectral"; }

const char* to_string(VerdictKind v) {
  switch (v) {
    case VerdictKind::completed: return "completed";
    case VerdictKind::blowup_suspected: return "blowup_suspected";
    case VerdictKind::aborted: return "aborted";
  }
  return "?";
}

void validate(const EvolutionConfig& c) {
  if (!(c.dt > 0.0)) throw std::invalid_argument("evolution: dt must be positive");
  if (!(c.t_max > 0.0)) throw std::invalid_argument("evolution: t_max must be positive");
  if (c.monitor_stride < 1 || c.checkpoint_stride < 1) throw std::invalid_argument("evolution: strides must be >= 1");
  if (!(c.blowup_threshold > 1.0)) throw std::invalid_argument("evolution: blowup_threshold must exceed 1");
  if (c.chi_radius < 0.0) throw std::invalid_argument("evolution: chi_radius must be >= 0");
  if (!(c.implicit_tol > 0.0) || c.implicit_max_iters < 1)
    throw std::invalid_argument("evolution: implicit_tol > 0 and implicit_max_iters >= 1 required");
}

namespace {

double max_abs(const ComplexField& u) {
  double m = 0.0;
  for (const cplx& v : u.values()) m = std::max(m, std::abs(v));
  return m;
}

// exp(i s Lap) with the derivative wavenumbers.
ComplexField free_flow(const ComplexField& u, double s) {
  const auto& g = u.grid();
  auto c = to_spectral(u);
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 0; j < g.ny(); ++j) {
      const double k2 = g.kx_deriv(i) * g.kx_deriv(i) + g.ky_deriv(j) * g.ky_deriv(j);
      c[g.index(i, j)] *= std::polar(1.0, -s * k2);
    }
  return from_spectral(u.grid_ptr(), c);
}

// (A.grad u + div(A u)) / 2; skew with the spectral derivative.
ComplexField advection(const ComplexField& u, const RealField& a1, const RealField& a2) {
  auto [d1, d2] = spectral_gradient(u);
  ComplexField f1 = multiply(a1, u);
  ComplexField f2 = multiply(a2, u);
  const ComplexField g1 = spectral_derivative(f1, 1);
  const ComplexField g2 = spectral_derivative(f2, 2);
  ComplexField out(u.grid_ptr());
  for (std::size_t k = 0; k < u.size(); ++k) out[k] = 0.5 * (a1[k] * d1[k] + a2[k] * d2[k] + g1[k] + g2[k]);
  return out;
}

double nonlinear_potential(double amp2, const ModelParams& params) {
  return params.lambda * std::pow(amp2, 0.5 * (params.p - 2.0));
}

// u * exp(-i s V), V = a1^2 + a2^2 + a0 - lambda |w|^{p-2}.
ComplexField phase(const ComplexField& u, const ComplexField& w, const GaugeFields& g, const ModelParams& params,
                   double s) {
  ComplexField out(u.grid_ptr());
  for (std::size_t k = 0; k < u.size(); ++k) {
    const double v = g.a1[k] * g.a1[k] + g.a2[k] * g.a2[k] + g.a0[k] - nonlinear_potential(std::norm(w[k]), params);
    out[k] = u[k] * std::polar(1.0, -s * v);
  }
  return out;
}

double max_diff(const ComplexField& a, const ComplexField& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

// chi = u - dt B_mid (u + chi), B_mid from the endpoint average of A when
// `refresh`, else from the fixed (a1, a2).
ComplexField advect_midpoint(const ComplexField& u, const RealField& a1, const RealField& a2, bool refresh,
                             const ModelParams& params, const EvolutionConfig& cfg, double dt) {
  const double scale = std::max(max_abs(u), 1e-300);
  ComplexField chi = u;
  RealField m1 = a1, m2 = a2;
  for (int it = 0; it < cfg.implicit_max_iters; ++it) {
    if (refresh) {
      auto [o1, o2] = compute_a1_a2(chi, params.boundary);
      for (std::size_t k = 0; k < u.size(); ++k) {
        m1[k] = 0.5 * (a1[k] + o1[k]);
        m2[k] = 0.5 * (a2[k] + o2[k]);
      }
    }
    ComplexField s = u + chi;
    const ComplexField b = advection(s, m1, m2);
    ComplexField next(u.grid_ptr());
    for (std::size_t k = 0; k < u.size(); ++k) next[k] = u[k] - dt * b[k];
    const double d = max_diff(next, chi);
    chi = std::move(next);
    if (!std::isfinite(d)) throw NonFiniteField("step: non-finite advection iterate", 0);
    if (d <= cfg.implicit_tol * scale) return chi;
  }
  throw StepFailure("step: advection substep did not converge; reduce dt");
}

ComplexField strang(const ComplexField& phi, const ModelParams& params, const EvolutionConfig& cfg, double dt) {
  const GaugeFields g0 = gauge_for(phi, params);
  const bool frozen = cfg.gauge_refresh == GaugeRefresh::every_step;
  ComplexField u = phase(phi, phi, g0, params, 0.5 * dt);
  u = free_flow(u, 0.5 * dt);
  if (params.gauge) {
    if (frozen) {
      u = advect_midpoint(u, g0.a1, g0.a2, false, params, cfg, dt);
    } else {
      auto [a1, a2] = compute_a1_a2(u, params.boundary);
      u = advect_midpoint(u, a1, a2, true, params, cfg, dt);
    }
  }
  u = free_flow(u, 0.5 * dt);
  if (!params.gauge || frozen) return phase(u, u, g0, params, 0.5 * dt);

  // Closing half phase: |phi| is fixed by the phase, A0 is not.
  GaugeFields g;
  g.boundary = params.boundary;
  std::tie(g.a1, g.a2) = compute_a1_a2(u, params.boundary);
  g.a0 = compute_a0(u, g.a1, g.a2, params.boundary);
  const double s = 0.5 * std::abs(dt);
  for (int it = 0; it < cfg.implicit_max_iters; ++it) {
    const ComplexField out = phase(u, u, g, params, 0.5 * dt);
    const RealField a0 = compute_a0(out, g.a1, g.a2, params.boundary);
    double d = 0.0;
    for (std::size_t k = 0; k < a0.size(); ++k) d = std::max(d, std::abs(a0[k] - g.a0[k]));
    g.a0 = a0;
    if (!std::isfinite(d)) throw NonFiniteField("step: non-finite A0 iterate", 0);
    if (s * d <= cfg.implicit_tol) return phase(u, u, g, params, 0.5 * dt);
  }
  throw StepFailure("step: closing phase did not converge; reduce dt");
}

ComplexField rhs(const ComplexField& phi, const ModelParams& params) {
  ComplexField f = energy_gradient(phi, params);
  for (auto& v : f.data()) v *= cplx(0.0, -1.0);
  return f;
}

ComplexField rk4(const ComplexField& phi, const ModelParams& params, double dt) {
  const ComplexField k1 = rhs(phi, params);
  const ComplexField k2 = rhs(phi + (0.5 * dt) * k1, params);
  const ComplexField k3 = rhs(phi + (0.5 * dt) * k2, params);
  const ComplexField k4 = rhs(phi + dt * k3, params);
  ComplexField out = phi;
  for (std::size_t k = 0; k < out.size(); ++k) out[k] += dt / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]);
  return out;
}

double kinetic_only(const ComplexField& phi, const ModelParams& params) {
  GaugeFields g = zero_gauge(phi.grid_ptr());
  if (params.gauge) std::tie(g.a1, g.a2) = compute_a1_a2(phi, params.boundary);
  const ComplexField d1 = covariant_derivative(phi, g, 1);
  const ComplexField d2 = covariant_derivative(phi, g, 2);
  double s = 0.0;
  for (std::size_t k = 0; k < phi.size(); ++k) s += std::norm(d1[k]) + std::norm(d2[k]);
  return s * phi.grid().cell_area();
}

}  // namespace

ComplexField step(const ComplexField& phi, const ModelParams& params, const EvolutionConfig& config, double dt) {
  require_finite(phi, "step");
  ComplexField out = config.scheme == Scheme::strang_split ? strang(phi, params, config, dt) : rk4(phi, params, dt);
  if (config.dealias) out = dealias(out);
  require_finite(out, "step");
  return out;
}

ComplexField step(const ComplexField& phi, const ModelParams& params, const EvolutionConfig& config) {
  return step(phi, params, config, config.dt);
}

DiagnosticsRecord diagnose(const ComplexField& phi, double t, const ModelParams& params) {
  const GaugeFields g = gauge_for(phi, params);
  const EnergyBreakdown e = energy_terms(phi, g, params.p);
  DiagnosticsRecord r;
  r.t = t;
  r.mass = mass(phi);
  r.kinetic_cov = e.kinetic_cov;
  r.energy = 0.5 * e.kinetic_cov - params.lambda / params.p * e.potential;
  r.q = pohozaev_q(e, params);
  r.max_amp = max_abs(phi);
  return r;
}

void write_diagnostics_csv(std::ostream& os, const std::vector<DiagnosticsRecord>& records) {
  os << diagnostics_header << '\n';
  os.precision(17);
  for (const auto& r : records) {
    os << r.t << ',' << r.mass << ',' << r.energy << ',' << r.q << ',' << r.kinetic_cov << ',';
    if (r.i_virial) os << *r.i_virial;
    os << ',';
    if (r.v_localized) os << *r.v_localized;
    os << ',' << r.max_amp << '\n';
  }
}

void to_json(nlohmann::json& j, const DiagnosticsRecord& r) {
  j = {{"t", r.t}, {"mass", r.mass}, {"energy", r.energy}, {"q", r.q}, {"kinetic_cov", r.kinetic_cov},
       {"max_amp", r.max_amp}};
  j["i_virial"] = r.i_virial ? nlohmann::json(*r.i_virial) : nlohmann::json(nullptr);
  j["v_localized"] = r.v_localized ? nlohmann::json(*r.v_localized) : nlohmann::json(nullptr);
}

void to_json(nlohmann::json& j, const Verdict& v) {
  j = {{"kind", to_string(v.kind)}, {"t_star", v.t_star}, {"t_star_refined", v.t_star_refined}, {"reason", v.reason}};
}

namespace {

struct Trajectory {
  ComplexField field;
  double t = 0.0;
  std::vector<DiagnosticsRecord> records;
  std::optional<double> t_growth;
  ComplexField checkpoint;
  double checkpoint_time = 0.0;
  std::string abort_reason;
  std::vector<std::string> warnings;
};

Trajectory integrate(const ComplexField& phi0, const ModelParams& params, const EvolutionConfig& cfg, double dt,
                     bool monitor, const CheckpointSink& sink) {
  Trajectory tr;
  tr.field = phi0;
  tr.checkpoint = phi0;
  std::optional<CutoffChiR> chi;
  if (monitor && cfg.chi_radius > 0.0) chi = make_cutoff(phi0.grid_ptr(), cfg.chi_radius);

  auto record = [&](const ComplexField& phi, double t) {
    DiagnosticsRecord r = diagnose(phi, t, params);
    if (cfg.virial) r.i_virial = virial_i(phi);
    if (chi) r.v_localized = virial_v(phi, gauge_for(phi, params), chi->weight);
    tr.records.push_back(r);
  };

  const double k0 = kinetic_only(phi0, params);
  if (monitor) {
    record(phi0, 0.0);
    if (params.gauge) {
      auto [a1, a2] = compute_a1_a2(phi0, params.boundary);
      double amax = 0.0;
      for (std::size_t k = 0; k < a1.size(); ++k) amax = std::max(amax, a1[k] * a1[k] + a2[k] * a2[k]);
      if (dt * amax > 0.5) {
        std::ostringstream os;
        os << "dt * max|A|^2 = " << dt * amax << " exceeds 0.5; phase factors are under-resolved";
        tr.warnings.push_back(os.str());
      }
    }
    if (cfg.virial && tail_mass(phi0) > 1e-8 * mass(phi0))
      tr.warnings.push_back("tail mass near the box edge exceeds 1e-8 of the total; I(t) is unreliable");
  }

  const long n = std::max(1L, static_cast<long>(std::ceil(cfg.t_max / dt - 1e-9)));
  double k_prev = k0;
  for (long s = 1; s <= n; ++s) {
    const double h = s == n ? cfg.t_max - tr.t : dt;
    ComplexField next;
    try {
      next = step(tr.field, params, cfg, h);
    } catch (const NonFiniteField& e) {
      tr.abort_reason = std::string("non-finite field: ") + e.what();
      return tr;
    } catch (const StepFailure& e) {
      tr.abort_reason = e.what();
      return tr;
    }
    tr.field = std::move(next);
    const double t_prev = tr.t;
    tr.t = s == n ? cfg.t_max : s * dt;

    const double k = kinetic_only(tr.field, params);
    if (!std::isfinite(k)) {
      tr.abort_reason = "non-finite kinetic energy";
      return tr;
    }
    const double target = cfg.blowup_threshold * k0;
    if (k >= target) {
      tr.t_growth = t_prev + (tr.t - t_prev) * (target - k_prev) / (k - k_prev);
      if (monitor) record(tr.field, tr.t);
      return tr;
    }
    k_prev = k;
    if (monitor && (s % cfg.monitor_stride == 0 || s == n)) record(tr.field, tr.t);
    if (s % cfg.checkpoint_stride == 0) {
      tr.checkpoint = tr.field;
      tr.checkpoint_time = tr.t;
      if (sink) sink(tr.t, tr.field);
    }
  }
  return tr;
}

}  // namespace

EvolutionResult evolve(const ComplexField& phi0, const ModelParams& params, const EvolutionConfig& config,
                       const CheckpointSink& sink) {
  validate(config);
  // lambda = 0 (linear flow) is allowed here.
  if (!(params.p > 2.0) || !(params.lambda >= 0.0)) throw std::invalid_argument("evolve: need p > 2 and lambda >= 0");
  require_finite(phi0, "evolve");
  Trajectory tr = integrate(phi0, params, config, config.dt, true, sink);

  EvolutionResult res;
  res.final_field = tr.field;
  res.t_final = tr.t;
  res.records = std::move(tr.records);
  res.checkpoint = std::move(tr.checkpoint);
  res.checkpoint_time = tr.checkpoint_time;
  res.warnings = std::move(tr.warnings);
  if (!res.records.empty()) {
    const auto& r0 = res.records.front();
    const double escale = r0.energy != 0.0 ? std::abs(r0.energy) : r0.kinetic_cov;
    for (const auto& r : res.records) {
      res.max_mass_drift = std::max(res.max_mass_drift, std::abs(r.mass - r0.mass) / r0.mass);
      res.max_energy_drift = std::max(res.max_energy_drift, std::abs(r.energy - r0.energy) / escale);
    }
  }

  if (!tr.abort_reason.empty()) {
    res.verdict = {VerdictKind::aborted, tr.t, 0.0, tr.abort_reason};
  } else if (tr.t_growth) {
    const double tg = *tr.t_growth;
    const Trajectory fine = integrate(phi0, params, config, 0.5 * config.dt, false, {});
    res.verdict.t_star = tg;
    if (fine.t_growth && std::abs(*fine.t_growth - tg) <= 0.1 * tg) {
      res.verdict.kind = VerdictKind::blowup_suspected;
      res.verdict.t_star_refined = *fine.t_growth;
      res.verdict.reason = "kinetic_cov growth reproduced at dt/2";
    } else {
      res.verdict.kind = VerdictKind::aborted;
      if (fine.t_growth) res.verdict.t_star_refined = *fine.t_growth;
      res.verdict.reason = fine.t_growth ? "growth time moved by more than 10% at dt/2"
                                         : "growth not reproduced at dt/2" +
                                               (fine.abort_reason.empty() ? std::string() : ": " + fine.abort_reason);
    }
  } else {
    res.verdict = {VerdictKind::completed, tr.t, 0.0, ""};
  }
  return res;
}

double orbit_distance(const ComplexField& phi, const ComplexField& u) {
  require_same_grid(phi.grid(), u.grid(), "orbit_distance");
  const auto& g = u.grid();
  const auto a = to_spectral(u);
  auto b = to_spectral(phi);
  for (std::size_t k = 0; k < b.size(); ++k) b[k] *= std::conj(a[k]);
  std::vector<cplx> corr(b.size());
  fft_inverse(g.nx(), g.ny(), b, corr);
  double best = 0.0;
  for (const cplx& c : corr) best = std::max(best, std::abs(c));
  const double d2 = mass(phi) + mass(u) - 2.0 * best * g.cell_area();
  return std::sqrt(std::max(0.0, d2));
}

double stability_probe(const ComplexField& u_star, const ModelParams& params, double perturbation_size,
                       const EvolutionConfig& config, std::uint64_t seed) {
  if (perturbation_size < 0.0) throw std::invalid_argument("stability_probe: negative perturbation size");
  const GridPtr& grid = u_star.grid_ptr();
  const double m = mass(u_star);
  ComplexField phi0 = u_star;
  if (perturbation_size > 0.0) {
    // Random low modes localized by |u_star|, scaled to relative L2 size delta.
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<cplx> coeffs(grid->size(), 0.0);
    const double kcut = 4.0 * 2.0 * std::acos(-1.0) / std::min(grid->lx(), grid->ly());
    for (int i = 0; i < grid->nx(); ++i)
      for (int j = 0; j < grid->ny(); ++j) {
        const double k2 = grid->kx()[i] * grid->kx()[i] + grid->ky()[j] * grid->ky()[j];
        const double a = normal(rng);
        const double b = normal(rng);
        coeffs[grid->index(i, j)] = cplx(a, b) * std::exp(-k2 / (2.0 * kcut * kcut));
      }
    ComplexField eta = from_spectral(grid, coeffs);
    for (std::size_t k = 0; k < eta.size(); ++k) eta[k] *= std::abs(u_star[k]);
    const double scale = perturbation_size * std::sqrt(m / mass(eta));
    for (std::size_t k = 0; k < eta.size(); ++k) phi0[k] += scale * eta[k];
    phi0 *= std::sqrt(m / mass(phi0));
  }

  EvolutionConfig cfg = config;
  double worst = 0.0;
  const double norm = std::sqrt(m);
  ComplexField phi = phi0;
  const long n = std::max(1L, static_cast<long>(std::ceil(cfg.t_max / cfg.dt - 1e-9)));
  double t = 0.0;
  worst = orbit_distance(phi, u_star) / norm;
  for (long s = 1; s <= n; ++s) {
    const double h = s == n ? cfg.t_max - t : cfg.dt;
    phi = step(phi, params, cfg, h);
    t += h;
    if (s % cfg.monitor_stride == 0 || s == n) worst = std::max(worst, orbit_distance(phi, u_star) / norm);
  }
  return worst;
}

}  // namespace css
