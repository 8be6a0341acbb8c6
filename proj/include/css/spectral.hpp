#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

#include "css/grid.hpp"

namespace css {

/// Thrown when a field carries NaN or Inf samples.
class NonFiniteField : public std::domain_error {
 public:
  NonFiniteField(const std::string& what, std::size_t index)
      : std::domain_error(what), index_(index) {}
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

// Raw transforms. Forward is unnormalized (e^{-ikx}); inverse divides by the
// point count so inverse(forward(u)) == u. Plans are shared between threads;
// concurrent calls on distinct buffers are safe.
void fft_forward(int nx, int ny, std::span<const cplx> in, std::span<cplx> out);
void fft_inverse(int nx, int ny, std::span<const cplx> in, std::span<cplx> out);
// Real transforms over the half spectrum of size nx*(ny/2+1).
void fft_forward_real(int nx, int ny, std::span<const double> in, std::span<cplx> out);
void fft_inverse_real(int nx, int ny, std::span<const cplx> in, std::span<double> out);

std::vector<cplx> to_spectral(const ComplexField& u);
ComplexField from_spectral(const GridPtr& grid, std::span<const cplx> coeffs);

/// Sum of f over the nodes times dx*dy.
double integrate(const RealField& f);
double integrate(const ComplexField& f);  // integral of the complex samples' real part
/// Real L2 inner product Re sum conj(a) b dx dy.
double inner(const ComplexField& a, const ComplexField& b);

/// d/dx (axis 1) or d/dy (axis 2) by multiplication with i*k.
ComplexField spectral_derivative(const ComplexField& u, int axis);
RealField spectral_derivative(const RealField& f, int axis);
/// Both first derivatives with a single forward transform.
std::pair<ComplexField, ComplexField> spectral_gradient(const ComplexField& u);
ComplexField spectral_laplacian(const ComplexField& u);

/// (integral |u|^t)^(1/t); t >= 1.
double lp_norm(const ComplexField& u, double t);

/// Zeroes the modes outside the dealiasing mask.
ComplexField dealias(const ComplexField& u);

/// Throws NonFiniteField naming the first non-finite sample.
void require_finite(const RealField& f, const char* what);
void require_finite(const ComplexField& f, const char* what);

/// Integer index roll: out(i, j) = u(i - si, j - sj) (periodic).
template <class T>
Field<T> roll(const Field<T>& u, int si, int sj) {
  const auto& g = u.grid();
  Field<T> out(u.grid_ptr());
  for (int i = 0; i < g.nx(); ++i) {
    const int ii = ((i - si) % g.nx() + g.nx()) % g.nx();
    for (int j = 0; j < g.ny(); ++j) {
      const int jj = ((j - sj) % g.ny() + g.ny()) % g.ny();
      out(i, j) = u(ii, jj);
    }
  }
  return out;
}

// Field dump: little-endian "CSSF", u32 version = 1, u32 nx, u32 ny, f64 lx,
// f64 ly, then nx*ny interleaved (re, im) f64 pairs, row-major.
void write_field_dump(std::ostream& os, const ComplexField& u);
ComplexField read_field_dump(std::istream& is);
void save_field_dump(const std::filesystem::path& path, const ComplexField& u);
ComplexField load_field_dump(const std::filesystem::path& path);

}  // namespace css
