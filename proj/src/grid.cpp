#include "css/grid.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace css {

namespace {

std::vector<double> wavenumbers(int n, double l) {
  std::vector<double> k(n);
  const double base = 2.0 * std::numbers::pi / l;
  for (int m = 0; m < n; ++m) k[m] = base * (m < n / 2 ? m : m - n);
  return k;
}

}  // namespace

Grid2D::Grid2D(int nx, int ny, double lx, double ly, double dealias_fraction)
    : nx_(nx), ny_(ny), lx_(lx), ly_(ly), dealias_fraction_(dealias_fraction) {
  if (nx < 16 || ny < 16 || nx % 2 != 0 || ny % 2 != 0)
    throw std::invalid_argument("Grid2D: nx and ny must be even and >= 16");
  if (!(lx > 0.0) || !(ly > 0.0) || !std::isfinite(lx) || !std::isfinite(ly))
    throw std::invalid_argument("Grid2D: box lengths must be positive and finite");
  if (!(dealias_fraction > 0.0) || dealias_fraction > 1.0)
    throw std::invalid_argument("Grid2D: dealias_fraction must lie in (0, 1]");
  kx_ = wavenumbers(nx, lx);
  ky_ = wavenumbers(ny, ly);
}

bool Grid2D::keeps_mode(int i, int j) const {
  const int mi = i < nx_ / 2 ? i : i - nx_;
  const int mj = j < ny_ / 2 ? j : j - ny_;
  return std::abs(mi) < dealias_fraction_ * 0.5 * nx_ && std::abs(mj) < dealias_fraction_ * 0.5 * ny_;
}

Grid2D Grid2D::scaled(double factor) const {
  return Grid2D(nx_, ny_, lx_ * factor, ly_ * factor, dealias_fraction_);
}

std::string Grid2D::describe() const {
  std::ostringstream os;
  os << nx_ << "x" << ny_ << " on " << lx_ << "x" << ly_;
  return os.str();
}

GridPtr make_grid(int nx, int ny, double lx, double ly, double dealias_fraction) {
  return std::make_shared<const Grid2D>(nx, ny, lx, ly, dealias_fraction);
}

RealField abs2(const ComplexField& u) {
  RealField out(u.grid_ptr());
  for (std::size_t k = 0; k < u.size(); ++k) out[k] = std::norm(u[k]);
  return out;
}

RealField real_part(const ComplexField& u) {
  RealField out(u.grid_ptr());
  for (std::size_t k = 0; k < u.size(); ++k) out[k] = u[k].real();
  return out;
}

RealField imag_part(const ComplexField& u) {
  RealField out(u.grid_ptr());
  for (std::size_t k = 0; k < u.size(); ++k) out[k] = u[k].imag();
  return out;
}

ComplexField to_complex(const RealField& f) {
  ComplexField out(f.grid_ptr());
  for (std::size_t k = 0; k < f.size(); ++k) out[k] = f[k];
  return out;
}

ComplexField multiply(const RealField& a, const ComplexField& u) {
  require_same_grid(a.grid(), u.grid(), "multiply");
  ComplexField out(u.grid_ptr());
  for (std::size_t k = 0; k < u.size(); ++k) out[k] = a[k] * u[k];
  return out;
}

}  // namespace css
