#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "css/dynamics.hpp"
#include "css/ground_state.hpp"
#include "css/spectral.hpp"
#include "oracles.hpp"

using namespace css;

namespace {

ComplexField generic_field(const GridPtr& g, double c = 1.5) {
  ComplexField u = gaussian_initial(g, c, 1.0, 0.3, 11);
  for (int i = 0; i < g->nx(); ++i)
    for (int j = 0; j < g->ny(); ++j) u(i, j) *= std::polar(1.0, 0.5 * g->x(i) - 0.3 * g->y(j));
  return u;
}

double rel_distance(const ComplexField& a, const ComplexField& b) {
  ComplexField d = a;
  d -= b;
  return std::sqrt(inner(d, d) / inner(b, b));
}

}  // namespace

TEST(Dynamics, ConfigValidation) {
  EvolutionConfig c;
  c.dt = 0.0;
  EXPECT_THROW(validate(c), std::invalid_argument);
  c = {};
  c.blowup_threshold = 1.0;
  EXPECT_THROW(validate(c), std::invalid_argument);
  c = {};
  c.monitor_stride = 0;
  EXPECT_THROW(validate(c), std::invalid_argument);
}

TEST(Dynamics, FreeFlowMatchesAnalyticGaussian) {
  const GridPtr g = make_grid(128, 128, 40.0, 40.0);
  const double s = 1.0;
  const ComplexField u0 = sample<cplx>(g, [&](double x, double y) { return oracle::free_gaussian(s, 0.0, x, y); });
  ModelParams p;
  p.lambda = 0.0;
  p.gauge = false;
  EvolutionConfig c;
  c.dt = 0.01;
  c.t_max = 1.0;
  const EvolutionResult r = evolve(u0, p, c);
  ASSERT_EQ(r.verdict.kind, VerdictKind::completed);
  const ComplexField exact = sample<cplx>(g, [&](double x, double y) { return oracle::free_gaussian(s, 1.0, x, y); });
  EXPECT_LT(rel_distance(r.final_field, exact), 1e-10);
}

TEST(Dynamics, StrangIsUnitaryAndReversible) {
  const GridPtr g = make_grid(64, 64, 14.0, 14.0);
  const ComplexField u = generic_field(g);
  ModelParams p;
  p.p = 3.0;
  EvolutionConfig c;
  ComplexField v = u;
  for (int k = 0; k < 20; ++k) v = step(v, p, c, 1e-2);
  EXPECT_NEAR(mass(v) / mass(u), 1.0, 1e-13);
  for (int k = 0; k < 20; ++k) v = step(v, p, c, -1e-2);
  EXPECT_LT(rel_distance(v, u), 1e-10);
}

TEST(Dynamics, StrangIsSecondOrder) {
  const GridPtr g = make_grid(64, 64, 14.0, 14.0);
  const ComplexField u = generic_field(g);
  ModelParams p;
  p.p = 3.0;
  EvolutionConfig c;
  c.scheme = Scheme::rk4_spectral;
  auto run = [&](const EvolutionConfig& cfg, double dt, int n) {
    ComplexField v = u;
    for (int k = 0; k < n; ++k) v = step(v, p, cfg, dt);
    return v;
  };
  const ComplexField ref = run(c, 1e-4, 1000);  // RK4 reference at t = 0.1
  EvolutionConfig sc;
  const double e1 = rel_distance(run(sc, 1e-2, 10), ref);
  const double e2 = rel_distance(run(sc, 5e-3, 20), ref);
  EXPECT_NEAR(e1 / e2, 4.0, 0.3);
}

TEST(Dynamics, RefreshModesAgree) {
  const GridPtr g = make_grid(64, 64, 14.0, 14.0);
  const ComplexField u = generic_field(g);
  ModelParams p;
  p.p = 3.0;
  EvolutionConfig a, b;
  b.gauge_refresh = GaugeRefresh::every_step;
  ComplexField va = u, vb = u;
  for (int k = 0; k < 50; ++k) {
    va = step(va, p, a, 2e-3);
    vb = step(vb, p, b, 2e-3);
  }
  EXPECT_LT(rel_distance(va, vb), 1e-4);
  EXPECT_NEAR(mass(vb) / mass(u), 1.0, 1e-12);
}

TEST(Dynamics, EvolveRecordsAndCsv) {
  const GridPtr g = make_grid(32, 32, 12.0, 12.0);
  ModelParams p;
  p.p = 3.0;
  EvolutionConfig c;
  c.dt = 1e-2;
  c.t_max = 0.2;
  c.monitor_stride = 5;
  c.virial = true;
  int sunk = 0;
  const EvolutionResult r = evolve(generic_field(g), p, c, [&](double, const ComplexField&) { ++sunk; });
  EXPECT_EQ(r.records.size(), 5u);  // t = 0, 0.05, ..., 0.2
  EXPECT_NEAR(r.t_final, 0.2, 1e-12);
  EXPECT_TRUE(r.records[0].i_virial.has_value());
  EXPECT_FALSE(r.records[0].v_localized.has_value());
  std::ostringstream os;
  write_diagnostics_csv(os, r.records);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), diagnostics_header);
  nlohmann::json j;
  to_json(j, r.verdict);
  EXPECT_EQ(j["kind"], "completed");
  EXPECT_LT(r.max_mass_drift, 1e-12);
}

TEST(Dynamics, NonFiniteInputAborts) {
  const GridPtr g = make_grid(32, 32, 12.0, 12.0);
  ComplexField u = generic_field(g);
  u(3, 3) = cplx(INFINITY, 0.0);
  ModelParams p;
  p.p = 3.0;
  EvolutionConfig c;
  c.t_max = 0.01;
  EXPECT_THROW(evolve(u, p, c), NonFiniteField);
}

TEST(Dynamics, OrbitDistanceIgnoresPhaseAndShift) {
  const GridPtr g = make_grid(64, 64, 14.0, 14.0);
  const ComplexField u = generic_field(g);
  ComplexField v = roll(u, 3, -5);
  v *= std::polar(1.0, 1.234);
  EXPECT_LT(orbit_distance(v, u), 1e-10);
  ComplexField w = u;
  w *= 1.1;
  EXPECT_NEAR(orbit_distance(w, u), 0.1 * std::sqrt(inner(u, u)), 1e-10);
}

TEST(Dynamics, StabilityProbeOfGroundStateIsSmall) {
  ModelParams p;
  p.p = 3.0;
  p.c = 10.0;
  SolverConfig s;
  s.radial = true;
  const GroundStateResult gs = minimize_subcritical(make_grid(64, 64, 30.0, 30.0), p, s);
  EvolutionConfig c;
  c.dt = 2e-3;
  c.t_max = 0.5;
  const double d0 = stability_probe(gs.u, p, 0.0, c);
  const double d1 = stability_probe(gs.u, p, 1e-2, c);
  EXPECT_LT(d0, 1e-5);
  EXPECT_LT(d1, 5e-2);
}
