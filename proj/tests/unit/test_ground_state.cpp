#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "css/functionals.hpp"
#include "css/ground_state.hpp"
#include "css/spectral.hpp"
#include "oracles.hpp"

using namespace css;

namespace {

ComplexField smooth_random(const GridPtr& g, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  const double a = n(rng), b = n(rng), c = n(rng), d = n(rng);
  return sample<cplx>(g, [&](double x, double y) {
    return cplx(a * std::cos(0.7 * x) + b * y, c * std::sin(0.5 * y) + d * x) * std::exp(-(x * x + y * y) / 4.0);
  });
}

}  // namespace

TEST(GroundState, RegimeOf) {
  EXPECT_EQ(regime_of(3.0), Regime::subcritical);
  EXPECT_EQ(regime_of(4.0), Regime::critical);
  EXPECT_EQ(regime_of(6.0), Regime::supercritical);
}

TEST(GroundState, SolverConfigValidation) {
  SolverConfig c;
  c.grad_tol = 0.0;
  EXPECT_THROW(validate(c), std::invalid_argument);
}

TEST(GroundState, GaussianInitialHasRequestedMass) {
  const GridPtr g = make_grid(64, 64, 16.0, 16.0);
  EXPECT_NEAR(mass(gaussian_initial(g, 3.0, 1.5)), 3.0, 1e-12);
  EXPECT_NEAR(mass(gaussian_initial(g, 3.0, 1.5, 0.5, 9)), 3.0, 1e-12);
}

TEST(GroundState, GradientMatchesCentralDifferences) {
  const GridPtr g = make_grid(64, 64, 12.0, 12.0);
  std::mt19937_64 rng(42);
  ModelParams p;
  p.p = 3.0;
  ComplexField u = gaussian_initial(g, 2.0, 1.0, 0.3, 5);
  for (int i = 0; i < 64; ++i)
    for (int j = 0; j < 64; ++j) u(i, j) *= std::polar(1.0, 0.3 * g->x(i));
  const ComplexField grad = energy_gradient(u, p);
  for (int trial = 0; trial < 5; ++trial) {
    const ComplexField v = smooth_random(g, rng);
    auto e = [&](double s) {
      ComplexField w = u;
      for (std::size_t k = 0; k < w.size(); ++k) w[k] += s * v[k];
      return energy(w, p).energy;
    };
    const double fd = oracle::central_difference(e, 0.0, 1e-3);
    const double an = inner(grad, v);
    EXPECT_NEAR(an, fd, 1e-6 * std::abs(fd)) << "trial " << trial;
  }
}

TEST(GroundState, SubcriticalGaugeOffMatchesShootingOracle) {
  ModelParams p;
  p.p = 3.0;
  p.c = 20.0;  // alpha ~ 0.65, core width ~ 1.2
  p.gauge = false;
  SolverConfig s;
  s.radial = true;
  const GroundStateResult r = minimize_subcritical(make_grid(128, 128, 32.0, 32.0), p, s);
  const auto oracle_gs = oracle::nls_ground_state(3.0, 1.0, 20.0);
  EXPECT_TRUE(r.converged);
  EXPECT_LT(r.energy, 0.0);
  EXPECT_NEAR(r.energy / oracle_gs.energy, 1.0, 1e-6);
  EXPECT_NEAR(r.multiplier / oracle_gs.alpha, 1.0, 1e-5);
  const CertifyReport cert = certify(r.u, p, s);
  EXPECT_TRUE(cert.passed);
}

TEST(GroundState, SubcriticalWithGaugeLiesAboveNls) {
  // The gauge terms only add energy at fixed |u|: m(c) >= m_NLS(c).
  ModelParams p;
  p.p = 3.0;
  p.c = 20.0;
  SolverConfig s;
  s.radial = true;
  // The gauge tails need a wider box than the NLS control.
  const GroundStateResult r = minimize_subcritical(make_grid(128, 128, 48.0, 48.0), p, s);
  EXPECT_TRUE(r.converged);
  EXPECT_LT(r.energy, 0.0);
  EXPECT_GT(r.energy, oracle::nls_ground_state(3.0, 1.0, 20.0).energy);
  EXPECT_LT(std::abs(r.q_residual), 1e-6);
}
