#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "css/grid.hpp"

namespace css {

/// How the elliptic gauge equations are closed on the finite box.
///
/// free_space convolves with the whole-plane kernels G_j (truncated-kernel
/// spectral method, aperiodic). periodic solves the Poisson equations on the
/// torus with the zero mode removed; it satisfies the differential
/// constraints to rounding but carries a neutralizing background and image
/// fields.
enum class GaugeBoundary { free_space, periodic };

struct GaugeFields {
  RealField a0;
  RealField a1;
  RealField a2;
  GaugeBoundary boundary = GaugeBoundary::free_space;
};

struct RadialProfile {
  std::vector<double> r;
  std::vector<double> values;
};

/// (A1, A2) from |u|^2. A1 = -G2*rho/2, A2 = G1*rho/2.
std::pair<RealField, RealField> compute_a1_a2(const ComplexField& u,
                                              GaugeBoundary boundary = GaugeBoundary::free_space);

/// A0 = -G1*J2 + G2*J1 with J_j = Im(conj(u) D_j u).
RealField compute_a0(const ComplexField& u, const RealField& a1, const RealField& a2,
                     GaugeBoundary boundary = GaugeBoundary::free_space);

GaugeFields compute_gauge(const ComplexField& u, GaugeBoundary boundary = GaugeBoundary::free_space);
/// All three fields identically zero (decoupled NLS limit).
GaugeFields zero_gauge(const GridPtr& grid);

/// Current densities J_j = Im(conj(u) d_j u) + A_j |u|^2.
std::pair<RealField, RealField> current_density(const ComplexField& u, const RealField& a1, const RealField& a2);

/// Raw kernel convolution G_axis * f with the selected closure.
RealField apply_kernel(const RealField& f, int axis, GaugeBoundary boundary = GaugeBoundary::free_space);

/// h(r) = (1/2) int_0^r s rho(s) ds on the sampled radii. The tangential
/// field of a radial density is A1 = x2 h / r^2, A2 = -x1 h / r^2.
RadialProfile radial_gauge_oracle(const RadialProfile& rho);
/// Same, with rho given as a function and integrated by adaptive Simpson.
RadialProfile radial_gauge_oracle(const std::function<double(double)>& rho, const std::vector<double>& r,
                                  double rel_tol = 1e-10);

/// (||d1 A1 + d2 A2||, ||d1 A2 - d2 A1 + (rho - mean rho)/2||) / ||u||^2.
/// The mean is removed because no periodic field can carry net flux; the
/// residuals are exact only for periodic fields; free-space fields are not
/// periodic on the box and their spectral derivatives see the wrap-around.
std::pair<double, double> gauge_constraint_residuals(const ComplexField& u, const GaugeFields& g);

/// Writes an (r, h) two-column CSV.
void write_profile_csv(std::ostream& os, const RadialProfile& profile);

}  // namespace css
