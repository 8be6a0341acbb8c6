#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "css/critical_mass.hpp"
#include "css/ground_state.hpp"
#include "css/spectral.hpp"
#include "oracles.hpp"

using namespace css;

namespace {
constexpr double pi = std::numbers::pi;
}

TEST(CriticalMass, LiouvilleMassIsEightPi) {
  const GridPtr g = make_grid(512, 512, 80.0, 80.0);
  for (double mu : {1.0, 2.0, 4.0}) EXPECT_NEAR(mass(liouville_profile(mu, g)) / (8.0 * pi), 1.0, 1e-2) << mu;
}

TEST(CriticalMass, ClosedFormGaugeMatchesSpectral) {
  const GridPtr g = make_grid(256, 256, 40.0, 40.0);
  const ComplexField u = liouville_profile(2.0, 0.5, -0.25, g);
  const auto [e1, e2] = liouville_gauge(2.0, 0.5, -0.25, g);
  const auto [a1, a2] = compute_a1_a2(u);
  double num = 0.0, den = 0.0;
  for (int i = 0; i < 256; ++i)
    for (int j = 0; j < 256; ++j) {
      if (std::hypot(g->x(i), g->y(j)) > 10.0) continue;
      num += std::pow(a1(i, j) - e1(i, j), 2) + std::pow(a2(i, j) - e2(i, j), 2);
      den += e1(i, j) * e1(i, j) + e2(i, j) * e2(i, j);
    }
  // The discrepancy is the truncated r^-2 mass tail outside the box.
  EXPECT_LT(std::sqrt(num / den), 5e-3);
}

TEST(CriticalMass, ClassifySigns) {
  const GridPtr g = make_grid(256, 256, 40.0, 40.0);
  const ComplexField u = liouville_profile(2.0, g);
  ModelParams p;
  p.p = 4.0;
  for (double lambda : {0.5, 1.0, 1.5}) {
    p.lambda = lambda;
    const CriticalReport r = classify_critical(u, p);
    EXPECT_TRUE(r.sign_ok) << lambda;
    if (lambda < 1.0) EXPECT_GT(r.energy, 0.0);
    if (lambda > 1.0) {
      EXPECT_LT(r.energy, 0.0);
      ASSERT_TRUE(r.zero_amplitude);
    }
    if (lambda == 1.0) EXPECT_EQ(r.regime, CriticalCase::self_dual);
  }
  p.p = 3.0;
  EXPECT_THROW(classify_critical(u, p), std::invalid_argument);
}

TEST(CriticalMass, SelfDualNeverNegativeOnGenericFields) {
  const GridPtr g = make_grid(64, 64, 14.0, 14.0);
  ModelParams p;
  p.p = 4.0;
  p.lambda = 1.0;
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    ComplexField u = gaussian_initial(g, 1.0 + seed, 1.0, 0.5, seed);
    for (int i = 0; i < 64; ++i)
      for (int j = 0; j < 64; ++j) u(i, j) *= std::polar(1.0, 0.2 * seed * g->y(j));
    const CriticalReport r = classify_critical(u, p);
    EXPECT_TRUE(r.sign_ok);
    EXPECT_GT(r.energy, 0.0);
  }
}

TEST(CriticalMass, RayEstimateMatchesAnalyticBound) {
  // With no perturbation modes the estimate is the Liouville ray itself:
  // c = 8 pi (lambda - sqrt(lambda^2 - 1)).
  ModelParams p;
  p.p = 4.0;
  CstarConfig c;
  c.n = 256;
  c.box = 40.0;
  c.modes = 0;
  for (double lambda : {1.01, 1.5}) {
    p.lambda = lambda;
    const CstarEstimate e = estimate_cstar(p, c);
    EXPECT_TRUE(e.certified);
    const double exact = 8.0 * pi * oracle::liouville_zero_energy_s(lambda);
    EXPECT_NEAR(e.cstar / exact, 1.0, 1e-2) << lambda;
  }
}

TEST(CriticalMass, EstimateIsCertifiedAndBelowRay) {
  ModelParams p;
  p.p = 4.0;
  p.lambda = 1.5;
  CstarConfig c;
  c.n = 128;
  c.box = 40.0;
  c.modes = 2;
  c.max_evals = 60;
  const CstarEstimate e = estimate_cstar(p, c);
  c.modes = 0;
  const CstarEstimate ray = estimate_cstar(p, c);
  EXPECT_TRUE(e.certified);
  EXPECT_LE(e.energy_residual, 1e-8);
  EXPECT_LE(e.cstar, ray.cstar * (1.0 + 1e-12));
  EXPECT_EQ(e.coefficients.size(), 2u);
}

TEST(CriticalMass, RejectsOutOfRegime) {
  ModelParams p;
  p.p = 4.0;
  p.lambda = 1.0;
  EXPECT_THROW(estimate_cstar(p, CstarConfig{}), std::invalid_argument);
  CstarConfig c;
  c.modes = 9;
  EXPECT_THROW(validate(c), std::invalid_argument);
}

TEST(CriticalMass, CsvHeader) {
  std::ostringstream os;
  write_cstar_csv(os, {CstarEstimate{}});
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "lambda,cstar_estimate,energy_residual");
}
