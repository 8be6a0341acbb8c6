#include <gtest/gtest.h>

#include <cmath>

#include "css/functionals.hpp"
#include "css/ground_state.hpp"
#include "css/virial.hpp"
#include "oracles.hpp"

using namespace css;

namespace {

ComplexField radial_bump(const GridPtr& g, double c, double w) {
  ComplexField u = sample<cplx>(g, [&](double x, double y) {
    const double r2 = x * x + y * y;
    return std::exp(-r2 / (2.0 * w * w)) * std::polar(1.0, 0.2 * r2);
  });
  u *= std::sqrt(c / mass(u));
  return u;
}

}  // namespace

TEST(Virial, UnitCutoffPieces) {
  EXPECT_DOUBLE_EQ(unit_cutoff(0.5, 0), 0.125);
  EXPECT_DOUBLE_EQ(unit_cutoff(0.5, 2), 1.0);
  EXPECT_DOUBLE_EQ(unit_cutoff(12.0, 1), 0.0);
  EXPECT_DOUBLE_EQ(unit_cutoff(12.0, 0), unit_cutoff(20.0, 0));
}

TEST(Virial, UnitCutoffDerivativesAreConsistent) {
  for (int k = 0; k < 4; ++k)
    for (double r : {0.99, 1.0, 1.01, 3.0, 5.5, 9.99, 10.0, 10.01}) {
      const double fd = oracle::central_difference([&](double s) { return unit_cutoff(s, k); }, r, 1e-3);
      EXPECT_NEAR(fd, unit_cutoff(r, k + 1), 1e-8) << "k = " << k << " r = " << r;
    }
}

TEST(Virial, CutoffProfileConstraints) {
  // chi'' <= 1 everywhere, chi' >= 0, and the sup constants are finite.
  for (int k = 0; k <= 2000; ++k) {
    const double r = 0.006 * k;
    EXPECT_LE(unit_cutoff(r, 2), 1.0 + 1e-12);
    EXPECT_GE(unit_cutoff(r, 1), -1e-12);
  }
  EXPECT_GT(cutoff_laplacian_deficit_sup(), 0.0);
  EXPECT_GT(cutoff_bilaplacian_sup(), 0.0);
}

TEST(Virial, QuadraticWeightGivesEightQ) {
  const GridPtr g = make_grid(64, 64, 14.0, 14.0);
  ComplexField u = gaussian_initial(g, 2.0, 1.0, 0.4, 3);
  for (int i = 0; i < 64; ++i)
    for (int j = 0; j < 64; ++j) u(i, j) *= std::polar(1.0, 0.6 * g->x(i));
  ModelParams p;
  p.p = 5.0;
  const GaugeFields gf = gauge_for(u, p);
  const double rhs = virial_rhs(u, gf, p, quadratic_weight(g, 2.0));
  const double q = pohozaev_q(energy_terms(u, gf, p.p), p);
  EXPECT_NEAR(rhs, 8.0 * q, 1e-10 * std::abs(8.0 * q));
}

TEST(Virial, CutoffEqualsTwoQWhenFieldSitsInside) {
  // chi_R = |x|^2 / 2 inside R, a quarter of 2 |x|^2.
  const GridPtr g = make_grid(96, 96, 30.0, 30.0);
  const ComplexField u = radial_bump(g, 2.0, 0.8);
  ModelParams p;
  p.p = 6.0;
  const GaugeFields gf = gauge_for(u, p);
  const double q = pohozaev_q(energy_terms(u, gf, p.p), p);
  const double rhs = virial_rhs(u, gf, p, make_cutoff(g, 8.0).weight);
  EXPECT_NEAR(rhs, 2.0 * q, 1e-9 * std::abs(q));
}

TEST(Virial, VirialIOfGaussian) {
  const GridPtr g = make_grid(64, 64, 16.0, 16.0);
  const ComplexField u = sample<cplx>(g, [](double x, double y) { return std::exp(-(x * x + y * y) / 2.0); });
  // int r^2 exp(-r^2) = pi
  EXPECT_NEAR(virial_i(u), std::acos(-1.0), 1e-10);
  EXPECT_LT(tail_mass(u), 1e-12);
}

TEST(Virial, RadialWeightRequired) {
  const GridPtr g = make_grid(64, 64, 16.0, 16.0);
  const ComplexField u = radial_bump(g, 1.0, 1.0);
  ModelParams p;
  p.p = 6.0;
  RadialWeight w = quadratic_weight(g, 1.0);
  for (int i = 0; i < 64; ++i) w.value(i, 3) += 5.0;  // no longer radial
  EXPECT_THROW(virial_rhs(u, gauge_for(u, p), p, w), std::invalid_argument);
}

TEST(Virial, BlowupBoundHoldsAndScales) {
  const GridPtr g = make_grid(128, 128, 60.0, 60.0);
  ModelParams p;
  p.p = 6.0;
  for (double w : {0.7, 1.0, 1.5}) {
    const ComplexField u = radial_bump(g, 1.5, w);
    const GaugeFields gf = gauge_for(u, p);
    const BlowupBound b1 = blowup_bound_check(u, gf, p, make_cutoff(g, 1.0));
    const BlowupBound b2 = blowup_bound_check(u, gf, p, make_cutoff(g, 2.0));
    EXPECT_LE(b1.lhs, b1.rhs) << "w = " << w;
    EXPECT_LE(b2.lhs, b2.rhs) << "w = " << w;
    EXPECT_NEAR(b1.slack_mass / b2.slack_mass, 4.0, 1e-12);
    EXPECT_NEAR(b1.slack_nonlinear / b2.slack_nonlinear, 4.0, 1e-12);  // R^{-(p-2)/2} at p = 6
  }
}

TEST(Virial, BlowupBoundRejectsNonRadial) {
  const GridPtr g = make_grid(64, 64, 16.0, 16.0);
  const ComplexField u = sample<cplx>(g, [](double x, double y) { return std::exp(-((x - 2) * (x - 2) + y * y)); });
  ModelParams p;
  p.p = 6.0;
  EXPECT_THROW(blowup_bound_check(u, gauge_for(u, p), p, make_cutoff(g, 2.0)), std::invalid_argument);
}
