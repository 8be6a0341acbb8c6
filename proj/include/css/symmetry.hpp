#pragma once

#include "css/grid.hpp"

namespace css {

// Symmetry maps on square grids (nx == ny, lx == ly). The origin is the node
// (n/2, n/2), so quarter turns and axis reflections are index permutations.

/// v(x) = u(R^{-1} x) for R the counter-clockwise quarter turn.
ComplexField rotate_quarter(const ComplexField& u, int turns = 1);
RealField rotate_quarter(const RealField& f, int turns = 1);

/// v(x1, x2) = conj(u(x1, -x2)). Reflection alone is not a symmetry of the
/// energy (it flips the sign of the curl); combined with conjugation it is.
ComplexField reflect_conjugate(const ComplexField& u);

/// Average over the eight elements generated by quarter turns and
/// reflect_conjugate. Fixed points include every real radial field.
ComplexField d4_symmetrize(const ComplexField& u);

/// Relative L2 distance between |f| and its radial average. With dx = dy the
/// average is taken over exact lattice circles (a^2 + b^2 fixed), otherwise
/// over shells of width min(dx, dy), linearly interpolated. Small for radial
/// fields; O(1) for strongly anisotropic ones.
double angular_variance(const RealField& f);
double angular_variance(const ComplexField& u);

}  // namespace css
