#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "css/critical_mass.hpp"
#include "css/functionals.hpp"
#include "css/ground_state.hpp"
#include "css/spectral.hpp"
#include "oracles.hpp"

using namespace css;

namespace {

constexpr double pi = std::numbers::pi;

ComplexField generic_field(const GridPtr& g, std::uint64_t seed, double c = 2.0) {
  ComplexField u = gaussian_initial(g, c, 1.2, 0.4, seed);
  for (int i = 0; i < g->nx(); ++i)
    for (int j = 0; j < g->ny(); ++j) u(i, j) *= std::polar(1.0, 0.5 * g->x(i) - 0.2 * g->y(j));
  return u;
}

}  // namespace

TEST(Functionals, ValidateRejectsBadParams) {
  ModelParams p;
  p.p = 2.0;
  EXPECT_THROW(validate(p), std::invalid_argument);
  p.p = 3.0;
  p.c = 0.0;
  EXPECT_THROW(validate(p), std::invalid_argument);
  p.c = 1.0;
  EXPECT_NO_THROW(validate(p));
}

TEST(Functionals, IdentitiesOnGenericFields) {
  const GridPtr g = make_grid(96, 96, 16.0, 16.0);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const ComplexField u = generic_field(g, seed);
    ModelParams p;
    p.p = 3.0;
    const GaugeFields gf = gauge_for(u, p);
    const EnergyBreakdown e = energy_terms(u, gf, p.p);
    const auto [idd, aid] = identity_residuals(e);
    EXPECT_LT(idd, 1e-10);
    EXPECT_LT(aid, 1e-10);
    EXPECT_NO_THROW(energy(u, gf, p));
  }
}

TEST(Functionals, GaugeOffIsPlainNls) {
  const GridPtr g = make_grid(64, 64, 12.0, 12.0);
  const ComplexField u = generic_field(g, 3);
  ModelParams p;
  p.p = 5.0;
  p.gauge = false;
  const EnergyResult r = energy(u, p);
  const auto [d1, d2] = spectral_gradient(u);
  double grad = 0.0, pot = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    grad += std::norm(d1[k]) + std::norm(d2[k]);
    pot += std::pow(std::abs(u[k]), 5.0);
  }
  const double da = g->cell_area();
  EXPECT_NEAR(r.energy, 0.5 * grad * da - pot * da / 5.0, 1e-12 * grad * da);
  EXPECT_EQ(r.terms.mag, 0.0);
}

TEST(Functionals, MassAndPohozaev) {
  const GridPtr g = make_grid(64, 64, 12.0, 12.0);
  const ComplexField u = generic_field(g, 4, 3.5);
  EXPECT_NEAR(mass(u), 3.5, 1e-12);
  ModelParams p;
  p.p = 6.0;
  p.lambda = 2.0;
  const EnergyBreakdown e = energy_terms(u, gauge_for(u, p), p.p);
  EXPECT_NEAR(pohozaev_q(e, p), e.kinetic_cov - 2.0 * (4.0 / 6.0) * e.potential, 1e-12);
  EXPECT_NEAR(pohozaev_q(u, p), pohozaev_q(e, p), 1e-12);
}

TEST(Functionals, LiouvilleIntegralsMatchClosedForm) {
  const GridPtr g = make_grid(512, 512, 80.0, 80.0);
  const ComplexField u = liouville_profile(2.0, g);
  ModelParams p;
  p.p = 4.0;
  const GaugeFields gf = gauge_for(u, p);
  const EnergyBreakdown e = energy_terms(u, gf, 4.0);
  const auto exact = oracle::liouville_integrals();
  // The algebraic tails (|u|^2 ~ r^-4) dominate the truncation error.
  EXPECT_NEAR(mass(u) / exact.mass, 1.0, 1e-3);
  EXPECT_NEAR(e.grad / exact.grad, 1.0, 1e-5);
  EXPECT_NEAR(e.potential / exact.potential, 1.0, 1e-6);
  EXPECT_NEAR(e.mag / exact.mag, 1.0, 3e-3);
  EXPECT_NEAR(e.cross, 0.0, 1e-10);
}

TEST(Functionals, SelfDualLiouville) {
  const GridPtr g = make_grid(256, 256, 40.0, 40.0);
  const ComplexField u = liouville_profile(2.0, g);
  ModelParams p;
  p.p = 4.0;
  const GaugeFields gf = gauge_for(u, p);
  EXPECT_LT(self_dual_residual(u, gf), 1e-3);
  const SelfDualSplit s = self_dual_split(u, gf);
  EXPECT_EQ(s.background, 0.0);
}

TEST(Functionals, SelfDualSplitMatchesEnergy) {
  const GridPtr g = make_grid(96, 96, 16.0, 16.0);
  for (auto boundary : {GaugeBoundary::free_space, GaugeBoundary::periodic}) {
    const ComplexField u = generic_field(g, 7);
    ModelParams p;
    p.p = 4.0;
    p.lambda = 1.3;
    p.boundary = boundary;
    const GaugeFields gf = gauge_for(u, p);
    const EnergyResult r = energy(u, gf, p);
    const SelfDualSplit s = self_dual_split(u, gf);
    EXPECT_NEAR(s.energy(p.lambda), r.energy, 1e-9 * r.terms.kinetic_cov);
    if (boundary == GaugeBoundary::periodic) EXPECT_NEAR(s.background, -std::pow(mass(u), 2) / (4.0 * g->area()), 1e-12);
  }
}

TEST(Functionals, DiamagneticInequalityHoldsPointwise) {
  const GridPtr g = make_grid(64, 64, 12.0, 12.0);
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const ComplexField u = generic_field(g, seed);
    ModelParams p;
    EXPECT_GE(diamagnetic_margin(u, gauge_for(u, p)), -1e-12);
  }
}

TEST(Functionals, GagliardoNirenbergRatioBoundedByTownes) {
  // Sharp constant: ||u||_4^4 <= (2 / ||Q||_2^2) ||grad u||^2 ||u||^2.
  const double townes = oracle::nls_profile(4.0).mass;
  const GridPtr g = make_grid(64, 64, 16.0, 16.0);
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const ComplexField u = generic_field(g, seed);
    const double r = gagliardo_nirenberg_ratio(u, 4.0);
    EXPECT_LE(std::pow(r, 4.0), 2.0 / townes * (1.0 + 1e-9));
  }
}

TEST(Functionals, FarSeparatedFieldsAreAdditive) {
  const GridPtr g = make_grid(128, 128, 48.0, 48.0);
  auto bump = [&](double x0) {
    return sample<cplx>(g, [&](double x, double y) {
      const double r2 = (x - x0) * (x - x0) + y * y;
      return r2 < 9.0 ? std::pow(1.0 - r2 / 9.0, 4) : 0.0;
    });
  };
  ModelParams p;
  p.p = 3.0;
  const auto [defect, bound] = far_separation_additivity(bump(-10.0), bump(10.0), 12.0, p);
  EXPECT_LE(std::abs(defect), bound);
  EXPECT_THROW(far_separation_additivity(bump(-1.0), bump(1.0), 12.0, p), std::invalid_argument);
}
