#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace css {

using cplx = std::complex<double>;

/// Uniform periodic grid on the box [-lx/2, lx/2) x [-ly/2, ly/2).
///
/// Node (i, j) sits at x = -lx/2 + i*dx, y = -ly/2 + j*dy, so the origin is
/// the node (nx/2, ny/2). Storage is row-major with y contiguous: the flat
/// index of (i, j) is i*ny + j. Wavenumber tables use the standard FFT
/// ordering (0, 1, ..., n/2-1, -n/2, ..., -1) scaled by 2*pi/l.
class Grid2D {
 public:
  Grid2D(int nx, int ny, double lx, double ly, double dealias_fraction = 2.0 / 3.0);

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double lx() const { return lx_; }
  double ly() const { return ly_; }
  double dx() const { return lx_ / nx_; }
  double dy() const { return ly_ / ny_; }
  double cell_area() const { return dx() * dy(); }
  double area() const { return lx_ * ly_; }
  double dealias_fraction() const { return dealias_fraction_; }
  std::size_t size() const { return static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_); }
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(ny_) + static_cast<std::size_t>(j);
  }

  double x(int i) const { return -0.5 * lx_ + i * dx(); }
  double y(int j) const { return -0.5 * ly_ + j * dy(); }

  const std::vector<double>& kx() const { return kx_; }
  const std::vector<double>& ky() const { return ky_; }

  /// Wavenumber for a first derivative: identical to kx/ky except that the
  /// Nyquist entry is zero, which keeps odd derivatives real and skew.
  double kx_deriv(int i) const { return i == nx_ / 2 ? 0.0 : kx_[i]; }
  double ky_deriv(int j) const { return j == ny_ / 2 ? 0.0 : ky_[j]; }

  /// True when mode (i, j) survives the dealiasing mask.
  bool keeps_mode(int i, int j) const;

  /// Same node count, box scaled by `factor` in both directions.
  Grid2D scaled(double factor) const;

  bool operator==(const Grid2D& other) const {
    return nx_ == other.nx_ && ny_ == other.ny_ && lx_ == other.lx_ && ly_ == other.ly_;
  }
  bool operator!=(const Grid2D& other) const { return !(*this == other); }

  std::string describe() const;

 private:
  int nx_;
  int ny_;
  double lx_;
  double ly_;
  double dealias_fraction_;
  std::vector<double> kx_;
  std::vector<double> ky_;
};

using GridPtr = std::shared_ptr<const Grid2D>;

GridPtr make_grid(int nx, int ny, double lx, double ly, double dealias_fraction = 2.0 / 3.0);

/// Thrown when two fields that must share a grid do not.
class GridMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline void require_same_grid(const Grid2D& a, const Grid2D& b, const char* what) {
  if (a != b) throw GridMismatch(std::string(what) + ": grid mismatch (" + a.describe() + " vs " + b.describe() + ")");
}

/// Sampled scalar field on a Grid2D.
template <class T>
class Field {
 public:
  using value_type = T;

  Field() = default;
  explicit Field(GridPtr grid) : grid_(std::move(grid)), values_(grid_->size(), T{}) {}
  Field(GridPtr grid, std::vector<T> values) : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() != grid_->size()) throw std::invalid_argument("Field: value count does not match grid size");
  }

  const Grid2D& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }

  std::span<T> values() { return values_; }
  std::span<const T> values() const { return values_; }
  std::vector<T>& data() { return values_; }
  const std::vector<T>& data() const { return values_; }
  std::size_t size() const { return values_.size(); }

  T& operator[](std::size_t k) { return values_[k]; }
  const T& operator[](std::size_t k) const { return values_[k]; }
  T& operator()(int i, int j) { return values_[grid_->index(i, j)]; }
  const T& operator()(int i, int j) const { return values_[grid_->index(i, j)]; }

  Field& operator+=(const Field& other) {
    require_same_grid(*grid_, other.grid(), "Field::operator+=");
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += other.values_[k];
    return *this;
  }
  Field& operator-=(const Field& other) {
    require_same_grid(*grid_, other.grid(), "Field::operator-=");
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= other.values_[k];
    return *this;
  }
  template <class S>
  Field& operator*=(S s) {
    for (auto& v : values_) v *= s;
    return *this;
  }

  friend Field operator+(Field a, const Field& b) { return a += b; }
  friend Field operator-(Field a, const Field& b) { return a -= b; }
  template <class S>
  friend Field operator*(S s, Field a) {
    return a *= s;
  }

 private:
  GridPtr grid_;
  std::vector<T> values_;
};

using RealField = Field<double>;
using ComplexField = Field<cplx>;

/// Samples f(x, y) on every node.
template <class T, class F>
Field<T> sample(const GridPtr& grid, F&& f) {
  Field<T> out(grid);
  for (int i = 0; i < grid->nx(); ++i)
    for (int j = 0; j < grid->ny(); ++j) out(i, j) = static_cast<T>(f(grid->x(i), grid->y(j)));
  return out;
}

RealField abs2(const ComplexField& u);
RealField real_part(const ComplexField& u);
RealField imag_part(const ComplexField& u);
ComplexField to_complex(const RealField& f);
ComplexField multiply(const RealField& a, const ComplexField& u);

}  // namespace css
