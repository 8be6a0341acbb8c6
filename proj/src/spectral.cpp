#include "css/spectral.hpp"

#include <fftw3.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <mutex>
#include <tuple>

namespace css {

namespace {

enum class PlanKind { c2c_forward, c2c_inverse, r2c, c2r };

// Plans are created once per (shape, kind) and executed through the
// new-array interface, which FFTW documents as thread safe.
class PlanCache {
 public:
  fftw_plan get(int nx, int ny, PlanKind kind) {
    std::lock_guard lock(mutex_);
    const auto key = std::make_tuple(nx, ny, kind);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    const std::size_t n = static_cast<std::size_t>(nx) * ny;
    const std::size_t nh = static_cast<std::size_t>(nx) * (ny / 2 + 1);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    fftw_plan plan = nullptr;
    switch (kind) {
      case PlanKind::c2c_forward:
      case PlanKind::c2c_inverse: {
        auto* a = fftw_alloc_complex(n);
        auto* b = fftw_alloc_complex(n);
        plan = fftw_plan_dft_2d(nx, ny, a, b, kind == PlanKind::c2c_forward ? FFTW_FORWARD : FFTW_BACKWARD, flags);
        fftw_free(a);
        fftw_free(b);
        break;
      }
      case PlanKind::r2c: {
        auto* a = fftw_alloc_real(n);
        auto* b = fftw_alloc_complex(nh);
        plan = fftw_plan_dft_r2c_2d(nx, ny, a, b, flags);
        fftw_free(a);
        fftw_free(b);
        break;
      }
      case PlanKind::c2r: {
        auto* a = fftw_alloc_complex(nh);
        auto* b = fftw_alloc_real(n);
        plan = fftw_plan_dft_c2r_2d(nx, ny, a, b, flags);
        fftw_free(a);
        fftw_free(b);
        break;
      }
    }
    if (!plan) throw std::runtime_error("fft: plan creation failed");
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<std::tuple<int, int, PlanKind>, fftw_plan> plans_;
};

PlanCache& plan_cache() {
  static PlanCache cache;
  return cache;
}

fftw_complex* as_fftw(cplx* p) { return reinterpret_cast<fftw_complex*>(p); }

void check_size(std::size_t got, std::size_t want, const char* what) {
  if (got != want) throw std::invalid_argument(std::string(what) + ": buffer size mismatch");
}

}  // namespace

void fft_forward(int nx, int ny, std::span<const cplx> in, std::span<cplx> out) {
  const std::size_t n = static_cast<std::size_t>(nx) * ny;
  check_size(in.size(), n, "fft_forward");
  check_size(out.size(), n, "fft_forward");
  // FFTW may scribble on the input of some transforms; copy to keep `in` const.
  std::vector<cplx> tmp(in.begin(), in.end());
  fftw_execute_dft(plan_cache().get(nx, ny, PlanKind::c2c_forward), as_fftw(tmp.data()), as_fftw(out.data()));
}

void fft_inverse(int nx, int ny, std::span<const cplx> in, std::span<cplx> out) {
  const std::size_t n = static_cast<std::size_t>(nx) * ny;
  check_size(in.size(), n, "fft_inverse");
  check_size(out.size(), n, "fft_inverse");
  std::vector<cplx> tmp(in.begin(), in.end());
  fftw_execute_dft(plan_cache().get(nx, ny, PlanKind::c2c_inverse), as_fftw(tmp.data()), as_fftw(out.data()));
  const double s = 1.0 / static_cast<double>(n);
  for (auto& v : out) v *= s;
}

void fft_forward_real(int nx, int ny, std::span<const double> in, std::span<cplx> out) {
  check_size(in.size(), static_cast<std::size_t>(nx) * ny, "fft_forward_real");
  check_size(out.size(), static_cast<std::size_t>(nx) * (ny / 2 + 1), "fft_forward_real");
  std::vector<double> tmp(in.begin(), in.end());
  fftw_execute_dft_r2c(plan_cache().get(nx, ny, PlanKind::r2c), tmp.data(), as_fftw(out.data()));
}

void fft_inverse_real(int nx, int ny, std::span<const cplx> in, std::span<double> out) {
  const std::size_t n = static_cast<std::size_t>(nx) * ny;
  check_size(in.size(), static_cast<std::size_t>(nx) * (ny / 2 + 1), "fft_inverse_real");
  check_size(out.size(), n, "fft_inverse_real");
  // c2r always destroys its input.
  std::vector<cplx> tmp(in.begin(), in.end());
  fftw_execute_dft_c2r(plan_cache().get(nx, ny, PlanKind::c2r), as_fftw(tmp.data()), out.data());
  const double s = 1.0 / static_cast<double>(n);
  for (auto& v : out) v *= s;
}

std::vector<cplx> to_spectral(const ComplexField& u) {
  std::vector<cplx> out(u.size());
  fft_forward(u.grid().nx(), u.grid().ny(), u.values(), out);
  return out;
}

ComplexField from_spectral(const GridPtr& grid, std::span<const cplx> coeffs) {
  ComplexField out(grid);
  fft_inverse(grid->nx(), grid->ny(), coeffs, out.values());
  return out;
}

void require_finite(const RealField& f, const char* what) {
  for (std::size_t k = 0; k < f.size(); ++k)
    if (!std::isfinite(f[k]))
      throw NonFiniteField(std::string(what) + ": non-finite sample at index " + std::to_string(k), k);
}

void require_finite(const ComplexField& f, const char* what) {
  for (std::size_t k = 0; k < f.size(); ++k)
    if (!std::isfinite(f[k].real()) || !std::isfinite(f[k].imag()))
      throw NonFiniteField(std::string(what) + ": non-finite sample at index " + std::to_string(k), k);
}

double integrate(const RealField& f) {
  require_finite(f, "integrate");
  double s = 0.0;
  for (double v : f.values()) s += v;
  return s * f.grid().cell_area();
}

double integrate(const ComplexField& f) {
  require_finite(f, "integrate");
  double s = 0.0;
  for (const cplx& v : f.values()) s += v.real();
  return s * f.grid().cell_area();
}

double inner(const ComplexField& a, const ComplexField& b) {
  require_same_grid(a.grid(), b.grid(), "inner");
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k].real() * b[k].real() + a[k].imag() * b[k].imag();
  return s * a.grid().cell_area();
}

ComplexField spectral_derivative(const ComplexField& u, int axis) {
  if (axis != 1 && axis != 2) throw std::invalid_argument("spectral_derivative: axis must be 1 or 2");
  const auto& g = u.grid();
  auto c = to_spectral(u);
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 0; j < g.ny(); ++j) {
      const double k = axis == 1 ? g.kx_deriv(i) : g.ky_deriv(j);
      c[g.index(i, j)] *= cplx(0.0, k);
    }
  return from_spectral(u.grid_ptr(), c);
}

RealField spectral_derivative(const RealField& f, int axis) {
  if (axis != 1 && axis != 2) throw std::invalid_argument("spectral_derivative: axis must be 1 or 2");
  const auto& g = f.grid();
  const int nyh = g.ny() / 2 + 1;
  std::vector<cplx> c(static_cast<std::size_t>(g.nx()) * nyh);
  fft_forward_real(g.nx(), g.ny(), f.values(), c);
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 0; j < nyh; ++j) {
      const double k = axis == 1 ? g.kx_deriv(i) : g.ky_deriv(j);
      c[static_cast<std::size_t>(i) * nyh + j] *= cplx(0.0, k);
    }
  RealField out(f.grid_ptr());
  fft_inverse_real(g.nx(), g.ny(), c, out.values());
  return out;
}

std::pair<ComplexField, ComplexField> spectral_gradient(const ComplexField& u) {
  const auto& g = u.grid();
  const auto c = to_spectral(u);
  std::vector<cplx> c1(c.size()), c2(c.size());
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 0; j < g.ny(); ++j) {
      const std::size_t k = g.index(i, j);
      c1[k] = c[k] * cplx(0.0, g.kx_deriv(i));
      c2[k] = c[k] * cplx(0.0, g.ky_deriv(j));
    }
  return {from_spectral(u.grid_ptr(), c1), from_spectral(u.grid_ptr(), c2)};
}

ComplexField spectral_laplacian(const ComplexField& u) {
  const auto& g = u.grid();
  auto c = to_spectral(u);
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 0; j < g.ny(); ++j) c[g.index(i, j)] *= -(g.kx()[i] * g.kx()[i] + g.ky()[j] * g.ky()[j]);
  return from_spectral(u.grid_ptr(), c);
}

double lp_norm(const ComplexField& u, double t) {
  if (!(t >= 1.0)) throw std::invalid_argument("lp_norm: exponent must be >= 1");
  require_finite(u, "lp_norm");
  double s = 0.0;
  if (t == 2.0) {
    for (const cplx& v : u.values()) s += std::norm(v);
  } else {
    for (const cplx& v : u.values()) s += std::pow(std::abs(v), t);
  }
  return std::pow(s * u.grid().cell_area(), 1.0 / t);
}

ComplexField dealias(const ComplexField& u) {
  const auto& g = u.grid();
  auto c = to_spectral(u);
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 0; j < g.ny(); ++j)
      if (!g.keeps_mode(i, j)) c[g.index(i, j)] = 0.0;
  return from_spectral(u.grid_ptr(), c);
}

namespace {

static_assert(std::endian::native == std::endian::little, "field dump IO assumes a little-endian host");

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("field dump: truncated input");
  return v;
}

}  // namespace

void write_field_dump(std::ostream& os, const ComplexField& u) {
  const auto& g = u.grid();
  os.write("CSSF", 4);
  put<std::uint32_t>(os, 1);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(g.nx()));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(g.ny()));
  put<double>(os, g.lx());
  put<double>(os, g.ly());
  os.write(reinterpret_cast<const char*>(u.values().data()), static_cast<std::streamsize>(u.size() * sizeof(cplx)));
  if (!os) throw std::runtime_error("field dump: write failed");
}

ComplexField read_field_dump(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "CSSF", 4) != 0) throw std::runtime_error("field dump: bad magic");
  if (get<std::uint32_t>(is) != 1) throw std::runtime_error("field dump: unsupported version");
  const auto nx = get<std::uint32_t>(is);
  const auto ny = get<std::uint32_t>(is);
  const auto lx = get<double>(is);
  const auto ly = get<double>(is);
  auto grid = make_grid(static_cast<int>(nx), static_cast<int>(ny), lx, ly);
  ComplexField u(grid);
  is.read(reinterpret_cast<char*>(u.values().data()), static_cast<std::streamsize>(u.size() * sizeof(cplx)));
  if (!is) throw std::runtime_error("field dump: truncated payload");
  return u;
}

void save_field_dump(const std::filesystem::path& path, const ComplexField& u) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("field dump: cannot open " + path.string());
  write_field_dump(os, u);
}

ComplexField load_field_dump(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("field dump: cannot open " + path.string());
  return read_field_dump(is);
}

}  // namespace css
