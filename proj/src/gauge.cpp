#include "css/gauge.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <tuple>

#include "css/spectral.hpp"

namespace css {

namespace {

constexpr double kPi = std::numbers::pi;

// Fourier transform of -(1/2pi) log|x| restricted to |x| <= R.
double truncated_log_kernel(double k, double radius) {
  if (k == 0.0) return radius * radius / 4.0 - radius * radius / 2.0 * std::log(radius);
  const double z = k * radius;
  return (1.0 - std::cyl_bessel_j(0.0, z)) / (k * k) - radius * std::log(radius) * std::cyl_bessel_j(1.0, z) / k;
}

// Half spectra (2nx x (ny+1)) of the two derivative kernels on the doubled
// aperiodic grid, for the reference box lx = 1, ly = aspect. Already
// multiplied by the reference cell area.
struct FreeSpaceKernel {
  std::vector<cplx> k1;
  std::vector<cplx> k2;
};

FreeSpaceKernel build_free_space_kernel(int nx, int ny, double aspect) {
  const double lx = 1.0;
  const double ly = aspect;
  const double hx = lx / nx;
  const double hy = ly / ny;
  const double diag = std::hypot(lx, ly);
  double radius = 1.05 * diag;
  const double limit = 4.0 * std::min(lx, ly) - diag;
  if (radius > limit) radius = limit;
  if (radius <= diag) throw std::invalid_argument("free-space gauge: box aspect ratio too extreme for kernel truncation");

  // Oversampled grid: 4nx x 4ny nodes, box 4lx x 4ly, same spacing.
  const int px = 4 * nx;
  const int py = 4 * ny;
  const int pyh = py / 2 + 1;
  const double dkx = 2.0 * kPi / (4.0 * lx);
  const double dky = 2.0 * kPi / (4.0 * ly);

  // The symbol depends on |k| only: tabulate it on the first quadrant.
  std::vector<double> symbol(static_cast<std::size_t>(px / 2 + 1) * pyh);
  for (int a = 0; a <= px / 2; ++a)
    for (int b = 0; b < pyh; ++b)
      symbol[static_cast<std::size_t>(a) * pyh + b] = truncated_log_kernel(std::hypot(a * dkx, b * dky), radius);

  std::vector<cplx> spec1(static_cast<std::size_t>(px) * pyh);
  std::vector<cplx> spec2(spec1.size());
  for (int i = 0; i < px; ++i) {
    const int mi = i < px / 2 ? i : i - px;
    const double kx = i == px / 2 ? 0.0 : mi * dkx;
    for (int j = 0; j < pyh; ++j) {
      const double ky = j == py / 2 ? 0.0 : j * dky;
      const double g = symbol[static_cast<std::size_t>(std::abs(mi)) * pyh + j];
      spec1[static_cast<std::size_t>(i) * pyh + j] = cplx(0.0, kx * g);
      spec2[static_cast<std::size_t>(i) * pyh + j] = cplx(0.0, ky * g);
    }
  }

  const int wx = 2 * nx;
  const int wy = 2 * ny;
  const int wyh = wy / 2 + 1;
  FreeSpaceKernel out;
  std::vector<double> full(static_cast<std::size_t>(px) * py);
  std::vector<double> window(static_cast<std::size_t>(wx) * wy);
  for (int axis = 0; axis < 2; ++axis) {
    fft_inverse_real(px, py, axis == 0 ? spec1 : spec2, full);
    // Continuous inverse transform = discrete inverse / cell area.
    const double scale = 1.0 / (hx * hy);
    for (int a = 0; a < wx; ++a) {
      const int ma = a < nx ? a : a - wx;
      const int ia = (ma + px) % px;
      for (int b = 0; b < wy; ++b) {
        const int mb = b < ny ? b : b - wy;
        const int ib = (mb + py) % py;
        window[static_cast<std::size_t>(a) * wy + b] = full[static_cast<std::size_t>(ia) * py + ib] * scale;
      }
    }
    auto& dst = axis == 0 ? out.k1 : out.k2;
    dst.resize(static_cast<std::size_t>(wx) * wyh);
    fft_forward_real(wx, wy, window, dst);
    for (auto& v : dst) v *= hx * hy;
  }
  return out;
}

const FreeSpaceKernel& free_space_kernel(const Grid2D& g) {
  static std::mutex mutex;
  static std::map<std::tuple<int, int, long long>, std::shared_ptr<FreeSpaceKernel>> cache;
  const long long aspect_key = std::llround(g.ly() / g.lx() * 1e12);
  const auto key = std::make_tuple(g.nx(), g.ny(), aspect_key);
  std::lock_guard lock(mutex);
  auto it = cache.find(key);
  if (it == cache.end()) {
    auto k = std::make_shared<FreeSpaceKernel>(build_free_space_kernel(g.nx(), g.ny(), aspect_key * 1e-12));
    it = cache.emplace(key, std::move(k)).first;
  }
  return *it->second;
}

// Half spectrum of f zero-padded to the doubled grid.
std::vector<cplx> padded_spectrum(const RealField& f) {
  const auto& g = f.grid();
  const int wx = 2 * g.nx();
  const int wy = 2 * g.ny();
  std::vector<double> pad(static_cast<std::size_t>(wx) * wy, 0.0);
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 0; j < g.ny(); ++j) pad[static_cast<std::size_t>(i) * wy + j] = f(i, j);
  std::vector<cplx> out(static_cast<std::size_t>(wx) * (wy / 2 + 1));
  fft_forward_real(wx, wy, pad, out);
  return out;
}

RealField crop_inverse(const GridPtr& grid, const std::vector<cplx>& spec) {
  const int wx = 2 * grid->nx();
  const int wy = 2 * grid->ny();
  std::vector<double> pad(static_cast<std::size_t>(wx) * wy);
  fft_inverse_real(wx, wy, spec, pad);
  RealField out(grid);
  for (int i = 0; i < grid->nx(); ++i)
    for (int j = 0; j < grid->ny(); ++j) out(i, j) = pad[static_cast<std::size_t>(i) * wy + j];
  return out;
}

std::vector<cplx> half_spectrum(const RealField& f) {
  const auto& g = f.grid();
  std::vector<cplx> out(static_cast<std::size_t>(g.nx()) * (g.ny() / 2 + 1));
  fft_forward_real(g.nx(), g.ny(), f.values(), out);
  return out;
}

RealField half_inverse(const GridPtr& grid, const std::vector<cplx>& spec) {
  RealField out(grid);
  fft_inverse_real(grid->nx(), grid->ny(), spec, out.values());
  return out;
}

// Periodic symbol of G_axis: i k_axis / |k|^2, zero mode and Nyquist removed.
cplx periodic_symbol(const Grid2D& g, int i, int j, int axis) {
  const double kx = g.kx()[i];
  const double ky = g.ky()[j];
  const double k2 = kx * kx + ky * ky;
  if (k2 == 0.0) return 0.0;
  if ((kx != 0.0 && g.kx_deriv(i) == 0.0) || (ky != 0.0 && g.ky_deriv(j) == 0.0)) return 0.0;
  return cplx(0.0, (axis == 1 ? g.kx_deriv(i) : g.ky_deriv(j)) / k2);
}

// Returns sum_n coeff_n * (G_{axis_n} * f_n) for up to two sources.
struct KernelTerm {
  const RealField* f;
  int axis;
  double coeff;
};

RealField combine(const GridPtr& grid, std::initializer_list<KernelTerm> terms, GaugeBoundary boundary) {
  const auto& g = *grid;
  if (boundary == GaugeBoundary::free_space) {
    const auto& kernel = free_space_kernel(g);
    const double s = g.lx();
    std::vector<cplx> acc;
    std::map<const RealField*, std::vector<cplx>> spectra;
    for (const auto& t : terms) {
      auto it = spectra.find(t.f);
      if (it == spectra.end()) it = spectra.emplace(t.f, padded_spectrum(*t.f)).first;
      const auto& fs = it->second;
      const auto& ks = t.axis == 1 ? kernel.k1 : kernel.k2;
      if (acc.empty()) acc.assign(fs.size(), 0.0);
      for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += (t.coeff * s) * ks[k] * fs[k];
    }
    return crop_inverse(grid, acc);
  }
  const int nyh = g.ny() / 2 + 1;
  std::vector<cplx> acc;
  std::map<const RealField*, std::vector<cplx>> spectra;
  for (const auto& t : terms) {
    auto it = spectra.find(t.f);
    if (it == spectra.end()) it = spectra.emplace(t.f, half_spectrum(*t.f)).first;
    const auto& fs = it->second;
    if (acc.empty()) acc.assign(fs.size(), 0.0);
    for (int i = 0; i < g.nx(); ++i)
      for (int j = 0; j < nyh; ++j) {
        const std::size_t k = static_cast<std::size_t>(i) * nyh + j;
        acc[k] += t.coeff * periodic_symbol(g, i, j, t.axis) * fs[k];
      }
  }
  return half_inverse(grid, acc);
}

}  // namespace

RealField apply_kernel(const RealField& f, int axis, GaugeBoundary boundary) {
  if (axis != 1 && axis != 2) throw std::invalid_argument("apply_kernel: axis must be 1 or 2");
  require_finite(f, "apply_kernel");
  return combine(f.grid_ptr(), {{&f, axis, 1.0}}, boundary);
}

std::pair<RealField, RealField> compute_a1_a2(const ComplexField& u, GaugeBoundary boundary) {
  require_finite(u, "compute_a1_a2");
  const RealField rho = abs2(u);
  if (boundary == GaugeBoundary::free_space) {
    // One padded transform of rho serves both components.
    const auto& g = u.grid();
    const auto& kernel = free_space_kernel(g);
    const auto fs = padded_spectrum(rho);
    std::vector<cplx> s1(fs.size()), s2(fs.size());
    const double s = 0.5 * g.lx();
    for (std::size_t k = 0; k < fs.size(); ++k) {
      s1[k] = -s * kernel.k2[k] * fs[k];
      s2[k] = s * kernel.k1[k] * fs[k];
    }
    return {crop_inverse(u.grid_ptr(), s1), crop_inverse(u.grid_ptr(), s2)};
  }
  return {combine(u.grid_ptr(), {{&rho, 2, -0.5}}, boundary), combine(u.grid_ptr(), {{&rho, 1, 0.5}}, boundary)};
}

std::pair<RealField, RealField> current_density(const ComplexField& u, const RealField& a1, const RealField& a2) {
  require_same_grid(u.grid(), a1.grid(), "current_density");
  require_same_grid(u.grid(), a2.grid(), "current_density");
  const auto [d1, d2] = spectral_gradient(u);
  RealField j1(u.grid_ptr()), j2(u.grid_ptr());
  for (std::size_t k = 0; k < u.size(); ++k) {
    const double rho = std::norm(u[k]);
    j1[k] = (std::conj(u[k]) * d1[k]).imag() + a1[k] * rho;
    j2[k] = (std::conj(u[k]) * d2[k]).imag() + a2[k] * rho;
  }
  return {std::move(j1), std::move(j2)};
}

RealField compute_a0(const ComplexField& u, const RealField& a1, const RealField& a2, GaugeBoundary boundary) {
  require_finite(u, "compute_a0");
  const auto [j1, j2] = current_density(u, a1, a2);
  return combine(u.grid_ptr(), {{&j2, 1, -1.0}, {&j1, 2, 1.0}}, boundary);
}

GaugeFields compute_gauge(const ComplexField& u, GaugeBoundary boundary) {
  auto [a1, a2] = compute_a1_a2(u, boundary);
  RealField a0 = compute_a0(u, a1, a2, boundary);
  return {std::move(a0), std::move(a1), std::move(a2), boundary};
}

GaugeFields zero_gauge(const GridPtr& grid) {
  return {RealField(grid), RealField(grid), RealField(grid), GaugeBoundary::free_space};
}

namespace {

void check_profile(const std::vector<double>& r) {
  if (r.empty() || r.front() != 0.0) throw std::invalid_argument("radial profile: radii must start at 0");
  for (std::size_t k = 1; k < r.size(); ++k)
    if (!(r[k] > r[k - 1])) throw std::invalid_argument("radial profile: radii must be strictly increasing");
}

double simpson(double a, double b, double fa, double fm, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double fa, double fm, double fb,
                        double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = simpson(a, m, fa, flm, fm);
  const double right = simpson(m, b, fm, frm, fb);
  const double diff = left + right - whole;
  if (depth <= 0 || std::abs(diff) <= 15.0 * tol) return left + right + diff / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

RadialProfile radial_gauge_oracle(const std::function<double(double)>& rho, const std::vector<double>& r,
                                  double rel_tol) {
  check_profile(r);
  const std::function<double(double)> integrand = [&](double s) {
    const double v = rho(s);
    if (v < 0.0) throw std::invalid_argument("radial_gauge_oracle: negative density");
    return s * v;
  };
  RadialProfile out{r, std::vector<double>(r.size(), 0.0)};
  double acc = 0.0;
  for (std::size_t k = 1; k < r.size(); ++k) {
    const double a = r[k - 1];
    const double b = r[k];
    const double fa = integrand(a);
    const double fm = integrand(0.5 * (a + b));
    const double fb = integrand(b);
    const double coarse = simpson(a, b, fa, fm, fb);
    const double tol = rel_tol * std::max(std::abs(coarse), 1e-300);
    acc += adaptive_simpson(integrand, a, b, fa, fm, fb, coarse, tol, 40);
    out.values[k] = 0.5 * acc;
  }
  return out;
}

RadialProfile radial_gauge_oracle(const RadialProfile& rho) {
  check_profile(rho.r);
  if (rho.values.size() != rho.r.size()) throw std::invalid_argument("radial_gauge_oracle: size mismatch");
  for (double v : rho.values)
    if (v < 0.0) throw std::invalid_argument("radial_gauge_oracle: negative density");
  const auto& r = rho.r;
  const std::size_t n = r.size();
  RadialProfile out{r, std::vector<double>(n, 0.0)};
  if (n < 2) return out;
  // Integrate the local cubic through four neighbouring samples of s*rho(s)
  // with three-point Gauss-Legendre on each interval.
  const double gl_x[3] = {-std::sqrt(0.6), 0.0, std::sqrt(0.6)};
  const double gl_w[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const std::size_t npts = std::min<std::size_t>(4, n);
    std::size_t lo = k > 0 ? k - 1 : 0;
    if (lo + npts > n) lo = n - npts;
    const double a = r[k];
    const double b = r[k + 1];
    double piece = 0.0;
    for (int q = 0; q < 3; ++q) {
      const double s = 0.5 * (a + b) + 0.5 * (b - a) * gl_x[q];
      double val = 0.0;
      for (std::size_t m = lo; m < lo + npts; ++m) {
        double basis = 1.0;
        for (std::size_t l = lo; l < lo + npts; ++l)
          if (l != m) basis *= (s - r[l]) / (r[m] - r[l]);
        val += basis * r[m] * rho.values[m];
      }
      piece += gl_w[q] * val;
    }
    acc += 0.5 * (b - a) * piece;
    out.values[k + 1] = 0.5 * acc;
  }
  return out;
}

std::pair<double, double> gauge_constraint_residuals(const ComplexField& u, const GaugeFields& g) {
  require_same_grid(u.grid(), g.a1.grid(), "gauge_constraint_residuals");
  require_same_grid(u.grid(), g.a2.grid(), "gauge_constraint_residuals");
  const double m = lp_norm(u, 2.0);
  if (m == 0.0) return {0.0, 0.0};
  // Compare against the modes the Poisson solve can represent: the mean and
  // the Nyquist lines carry no first derivative.
  RealField rho = abs2(u);
  {
    const int nx = u.grid().nx(), ny = u.grid().ny(), nh = ny / 2 + 1;
    std::vector<cplx> hat(static_cast<std::size_t>(nx) * nh);
    fft_forward_real(nx, ny, rho.values(), hat);
    for (int i = 0; i < nx; ++i) hat[static_cast<std::size_t>(i) * nh + ny / 2] = 0.0;
    for (int j = 0; j < nh; ++j) hat[static_cast<std::size_t>(nx / 2) * nh + j] = 0.0;
    hat[0] = 0.0;
    fft_inverse_real(nx, ny, hat, rho.values());
  }
  const RealField d1a1 = spectral_derivative(g.a1, 1);
  const RealField d2a2 = spectral_derivative(g.a2, 2);
  const RealField d1a2 = spectral_derivative(g.a2, 1);
  const RealField d2a1 = spectral_derivative(g.a1, 2);
  double div = 0.0;
  double curl = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    const double dv = d1a1[k] + d2a2[k];
    const double cv = d1a2[k] - d2a1[k] + 0.5 * rho[k];
    div += dv * dv;
    curl += cv * cv;
  }
  const double w = u.grid().cell_area();
  return {std::sqrt(div * w) / (m * m), std::sqrt(curl * w) / (m * m)};
}

void write_profile_csv(std::ostream& os, const RadialProfile& profile) {
  os << "r,h\n";
  os.precision(17);
  for (std::size_t k = 0; k < profile.r.size(); ++k) os << profile.r[k] << ',' << profile.values[k] << '\n';
}

}  // namespace css
