#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "css/critical_mass.hpp"
#include "css/functionals.hpp"
#include "css/ground_state.hpp"
#include "css/scaling.hpp"
#include "oracles.hpp"

using namespace css;

namespace {

ComplexField generic_field(const GridPtr& g, std::uint64_t seed) {
  ComplexField u = gaussian_initial(g, 2.0, 1.0, 0.3, seed);
  for (int i = 0; i < g->nx(); ++i)
    for (int j = 0; j < g->ny(); ++j) u(i, j) *= std::polar(1.0, 0.4 * g->x(i));
  return u;
}

}  // namespace

TEST(Scaling, DilatePreservesMassAndScalesTerms) {
  const GridPtr g = make_grid(64, 64, 16.0, 16.0);
  const ComplexField u = generic_field(g, 1);
  ModelParams p;
  p.p = 5.0;
  const double t = 1.7;
  const ComplexField v = dilate(u, t);
  EXPECT_NEAR(v.grid().lx(), 16.0 / t, 1e-14);
  EXPECT_NEAR(mass(v), mass(u), 1e-12);
  const EnergyBreakdown a = energy_terms(u, gauge_for(u, p), p.p);
  const EnergyBreakdown b = energy_terms(v, gauge_for(v, p), p.p);
  EXPECT_NEAR(b.kinetic_cov, t * t * a.kinetic_cov, 1e-10 * b.kinetic_cov);
  EXPECT_NEAR(b.potential, std::pow(t, p.p - 2.0) * a.potential, 1e-10 * b.potential);
  EXPECT_THROW(dilate(u, 0.0), std::invalid_argument);
}

TEST(Scaling, FiberClosedFormMatchesDirectEnergy) {
  const GridPtr g = make_grid(64, 64, 16.0, 16.0);
  const ComplexField u = generic_field(g, 2);
  ModelParams p;
  p.p = 6.0;
  for (double t : {0.5, 1.0, 2.0, 3.0}) {
    const double direct = energy(dilate(u, t), p).energy;
    EXPECT_NEAR(fiber_energy(u, p, t), direct, 1e-10 * std::abs(direct));
  }
}

TEST(Scaling, TStarZeroesPohozaev) {
  const GridPtr g = make_grid(64, 64, 16.0, 16.0);
  const ComplexField u = generic_field(g, 3);
  for (double pp : {3.0, 5.0, 6.0}) {
    ModelParams p;
    p.p = pp;
    const double ts = t_star(u, p);
    const ComplexField v = dilate(u, ts);
    const EnergyBreakdown e = energy_terms(v, gauge_for(v, p), p.p);
    EXPECT_LT(std::abs(pohozaev_q(e, p)) / e.kinetic_cov, 1e-10) << "p = " << pp;
  }
  ModelParams crit;
  crit.p = 4.0;
  EXPECT_THROW(t_star(u, crit), std::invalid_argument);
}

TEST(Scaling, FiberDerivativeIsQOverT) {
  const GridPtr g = make_grid(64, 64, 16.0, 16.0);
  const ComplexField u = generic_field(g, 4);
  ModelParams p;
  p.p = 5.0;
  for (double t : {0.7, 1.0, 1.6}) {
    // E(u_s) evaluated from scratch on each exactly dilated grid.
    const double d = oracle::central_difference([&](double s) { return energy(dilate(u, s), p).energy; }, t, 1e-3);
    const ComplexField v = dilate(u, t);
    const double q = pohozaev_q(energy_terms(v, gauge_for(v, p), p.p), p);
    EXPECT_NEAR(d, q / t, 1e-6 * std::abs(q / t));
  }
}

TEST(Scaling, FiberScanCsv) {
  const GridPtr g = make_grid(32, 32, 12.0, 12.0);
  ModelParams p;
  p.p = 6.0;
  const auto scan = fiber_scan(generic_field(g, 5), p, {0.5, 1.0});
  std::ostringstream os;
  write_fiber_csv(os, scan);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "t,E,Q");
  ASSERT_EQ(scan.size(), 2u);
  EXPECT_EQ(scan[1].t, 1.0);
}

TEST(Scaling, BetaScaleMultipliesMass) {
  const GridPtr g = make_grid(64, 64, 16.0, 16.0);
  const ComplexField u = generic_field(g, 6);
  ModelParams p;
  p.p = 3.0;
  EXPECT_DOUBLE_EQ(beta_exponent(3.0), 0.5);
  for (double theta : {0.5, 2.0}) EXPECT_NEAR(mass(beta_scale(u, theta, p)), theta * mass(u), 1e-11);
  p.p = 5.0;
  EXPECT_THROW(beta_scale(u, 2.0, p), std::invalid_argument);
}

TEST(Scaling, LargestUnitRoot) {
  // 1 - 3 s + s^2: roots 0.381966..., 2.618...
  const auto r = largest_unit_root(1.0, -3.0, 1.0);
  ASSERT_TRUE(r);
  EXPECT_NEAR(*r * *r, (3.0 - std::sqrt(5.0)) / 2.0, 1e-12);
  EXPECT_FALSE(largest_unit_root(1.0, 1.0, 1.0));
  // Both roots inside (0, 1): 0.25 and 0.5.
  const auto r2 = largest_unit_root(0.125, -0.75, 1.0);
  ASSERT_TRUE(r2);
  EXPECT_NEAR(*r2 * *r2, 0.5, 1e-12);
}

TEST(Scaling, LiouvilleZeroEnergyAmplitude) {
  const GridPtr g = make_grid(512, 512, 80.0, 80.0);
  const ComplexField u = liouville_profile(2.0, g);
  ModelParams p;
  p.p = 4.0;
  for (double lambda : {1.01, 1.5, 2.0}) {
    p.lambda = lambda;
    const auto theta = amplitude_zero_energy(u, p);
    ASSERT_TRUE(theta);
    EXPECT_NEAR(*theta * *theta, oracle::liouville_zero_energy_s(lambda), 2e-3) << "lambda = " << lambda;
  }
  p.lambda = 0.9;
  EXPECT_FALSE(amplitude_zero_energy(u, p));
}
