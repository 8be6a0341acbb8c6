#include "css/symmetry.hpp"

#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

namespace css {

namespace {

void require_square(const Grid2D& g, const char* what) {
  if (g.nx() != g.ny() || g.lx() != g.ly()) throw std::invalid_argument(std::string(what) + ": square grid required");
}

template <class T>
Field<T> rotate_impl(const Field<T>& u, int turns) {
  const auto& g = u.grid();
  require_square(g, "rotate_quarter");
  const int n = g.nx();
  turns = ((turns % 4) + 4) % 4;
  Field<T> cur = u;
  for (int t = 0; t < turns; ++t) {
    Field<T> next(u.grid_ptr());
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) next(i, j) = cur(j, (n - i) % n);
    cur = std::move(next);
  }
  return cur;
}

}  // namespace

ComplexField rotate_quarter(const ComplexField& u, int turns) { return rotate_impl(u, turns); }
RealField rotate_quarter(const RealField& f, int turns) { return rotate_impl(f, turns); }

ComplexField reflect_conjugate(const ComplexField& u) {
  const auto& g = u.grid();
  require_square(g, "reflect_conjugate");
  const int n = g.nx();
  ComplexField v(u.grid_ptr());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) v(i, j) = std::conj(u(i, (n - j) % n));
  return v;
}

ComplexField d4_symmetrize(const ComplexField& u) {
  ComplexField acc(u.grid_ptr());
  const ComplexField r = reflect_conjugate(u);
  for (int t = 0; t < 4; ++t) {
    acc += rotate_quarter(u, t);
    acc += rotate_quarter(r, t);
  }
  acc *= 0.125;
  return acc;
}

double angular_variance(const RealField& f) {
  const auto& g = f.grid();
  // Equal spacing: nodes with the same integer a^2 + b^2 lie on one exact
  // circle, so the shell mean carries no radial interpolation error.
  if (std::abs(g.dx() - g.dy()) <= 1e-12 * g.dx()) {
    std::map<long, std::pair<double, int>> shells;
    auto key = [&](int i, int j) {
      const long a = i - g.nx() / 2, b = j - g.ny() / 2;
      return a * a + b * b;
    };
    for (int i = 0; i < g.nx(); ++i)
      for (int j = 0; j < g.ny(); ++j) {
        auto& s = shells[key(i, j)];
        s.first += std::abs(f(i, j));
        ++s.second;
      }
    double num = 0.0, den = 0.0;
    for (int i = 0; i < g.nx(); ++i)
      for (int j = 0; j < g.ny(); ++j) {
        const auto& s = shells[key(i, j)];
        const double v = std::abs(f(i, j));
        const double mean = s.first / s.second;
        num += (v - mean) * (v - mean);
        den += v * v;
      }
    return den == 0.0 ? 0.0 : std::sqrt(num / den);
  }
  const double h = std::min(g.dx(), g.dy());
  const double rmax = std::hypot(0.5 * g.lx(), 0.5 * g.ly());
  const int nb = static_cast<int>(rmax / h) + 2;
  std::vector<double> sum(nb, 0.0), rsum(nb, 0.0);
  std::vector<int> cnt(nb, 0);
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 0; j < g.ny(); ++j) {
      const double r = std::hypot(g.x(i), g.y(j));
      const int b = static_cast<int>(r / h);
      sum[b] += std::abs(f(i, j));
      rsum[b] += r;
      ++cnt[b];
    }
  std::vector<double> rb, vb;
  for (int b = 0; b < nb; ++b)
    if (cnt[b] > 0) {
      rb.push_back(rsum[b] / cnt[b]);
      vb.push_back(sum[b] / cnt[b]);
    }
  double num = 0.0;
  double den = 0.0;
  std::size_t b = 0;
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 0; j < g.ny(); ++j) {
      const double r = std::hypot(g.x(i), g.y(j));
      const double v = std::abs(f(i, j));
      double interp;
      if (r <= rb.front()) {
        interp = vb.front();
      } else if (r >= rb.back()) {
        interp = vb.back();
      } else {
        b = 0;
        std::size_t lo = 0, hi = rb.size() - 1;
        while (hi - lo > 1) {
          const std::size_t mid = (lo + hi) / 2;
          (rb[mid] <= r ? lo : hi) = mid;
        }
        b = lo;
        const double w = (r - rb[b]) / (rb[b + 1] - rb[b]);
        interp = (1.0 - w) * vb[b] + w * vb[b + 1];
      }
      num += (v - interp) * (v - interp);
      den += v * v;
    }
  return den == 0.0 ? 0.0 : std::sqrt(num / den);
}

double angular_variance(const ComplexField& u) {
  RealField m(u.grid_ptr());
  for (std::size_t k = 0; k < u.size(); ++k) m[k] = std::abs(u[k]);
  return angular_variance(m);
}

}  // namespace css
