#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "ipm/fft.hpp"
#include "ipm/grid.hpp"

namespace ipm {

/// Unitary forward transform of a real field.
inline SpectralField forward(const RealField& f) {
  const Grid& g = f.grid;
  SpectralField out(g);
  std::vector<double> work(f.values);
  detail::FftPlans::instance().r2c(g.n2(), g.n1(), work.data(), out.coeffs.data());
  const double scale = std::sqrt(g.area()) / static_cast<double>(g.size());
  for (auto& c : out.coeffs) c *= scale;
  return out;
}

/// Inverse of forward(); the result is real by construction of the half spectrum.
inline RealField inverse(const SpectralField& F) {
  const Grid& g = F.grid;
  RealField out(g);
  std::vector<Complex> work(F.coeffs);
  detail::FftPlans::instance().c2r(g.n2(), g.n1(), work.data(), out.values.data());
  const double scale = 1.0 / std::sqrt(g.area());
  for (auto& v : out.values) v *= scale;
  return out;
}

inline double squared_l2(const SpectralField& F) {
  double sum = 0.0;
  F.for_each([&](int n, double, const Complex& c) { sum += F.grid.column_weight(n) * std::norm(c); });
  return sum;
}

inline double l2_norm(const SpectralField& F) { return std::sqrt(squared_l2(F)); }

/// Rectangle-rule L2 norm over the domain; equals the spectral norm by Parseval.
inline double l2_norm(const RealField& f) {
  double sum = 0.0;
  for (double v : f.values) sum += v * v;
  return std::sqrt(sum * f.grid.area() / static_cast<double>(f.grid.size()));
}

inline double linf_norm(const RealField& f) {
  double m = 0.0;
  for (double v : f.values) m = std::max(m, std::abs(v));
  return m;
}

/// Real L2 inner product <A, B>.
inline double inner(const SpectralField& A, const SpectralField& B) {
  require_same_grid(A.grid, B.grid, "inner");
  double sum = 0.0;
  const int h = A.grid.half_n1();
  for (std::size_t q = 0; q < A.coeffs.size(); ++q) {
    const int n = static_cast<int>(q % h);
    sum += A.grid.column_weight(n) * std::real(std::conj(A.coeffs[q]) * B.coeffs[q]);
  }
  return sum;
}

enum class Axis { x1, x2, both };

/// Fractional derivative |D1|^s, |D2|^s or |D1|^s + |D2|^s as a Fourier multiplier.
inline SpectralField frac_deriv(const SpectralField& F, Axis axis, double s) {
  if (!(s >= 0.0)) throw std::invalid_argument("frac_deriv: exponent must be >= 0");
  if (s == 0.0) return F;
  SpectralField out(F);
  out.for_each([&](int n, double xi, Complex& c) {
    const double a = std::pow(static_cast<double>(n), s);
    const double b = std::pow(std::abs(xi), s);
    switch (axis) {
      case Axis::x1: c *= a; break;
      case Axis::x2: c *= b; break;
      case Axis::both: c *= a + b; break;
    }
  });
  return out;
}

/// ||F||_{H^k} with ||f||^2_{H^k} = ||f||^2 + sum (|n|^{2k} + |xi|^{2k}) |f^|^2.
/// At k = 0 the homogeneous term is taken to be ||f||^2, so H^0 = sqrt(2) L^2.
inline double sobolev_norm(const SpectralField& F, double k) {
  if (!(k >= 0.0)) throw std::invalid_argument("sobolev_norm: k must be >= 0");
  const double l2 = squared_l2(F);
  if (k == 0.0) return std::sqrt(2.0 * l2);
  double hom = 0.0;
  F.for_each([&](int n, double xi, const Complex& c) {
    const double w = std::pow(static_cast<double>(n), 2.0 * k) + std::pow(std::abs(xi), 2.0 * k);
    hom += F.grid.column_weight(n) * w * std::norm(c);
  });
  return std::sqrt(l2 + hom);
}

/// sqrt( sum |n|^{2 s1} (|n|^{2 s2} + |xi|^{2 s2}) |F^|^2 ), with 0^0 = 1.
inline double aniso_seminorm(const SpectralField& F, double s1, double s2) {
  if (!(s1 >= 0.0) || !(s2 >= 0.0)) {
    throw std::invalid_argument("aniso_seminorm: exponents must be >= 0");
  }
  double sum = 0.0;
  F.for_each([&](int n, double xi, const Complex& c) {
    const double nn = static_cast<double>(n);
    const double w = std::pow(nn, 2.0 * s1) * (std::pow(nn, 2.0 * s2) + std::pow(std::abs(xi), 2.0 * s2));
    sum += F.grid.column_weight(n) * w * std::norm(c);
  });
  return std::sqrt(sum);
}

/// Zero the horizontal and vertical Nyquist coefficients.
inline void zero_nyquist(SpectralField& F) {
  const Grid& g = F.grid;
  const int r_nyq = g.n2() / 2;
  for (int n = 0; n < g.half_n1(); ++n) F(n, r_nyq) = 0.0;
  for (int r = 0; r < g.n2(); ++r) F(g.n1() / 2, r) = 0.0;
}

/// First derivative along x1 or x2.
inline SpectralField derivative(const SpectralField& F, Axis axis) {
  if (axis == Axis::both) throw std::invalid_argument("derivative: axis must be x1 or x2");
  SpectralField out(F);
  zero_nyquist(out);
  const bool horizontal = axis == Axis::x1;
  out.for_each([&](int n, double xi, Complex& c) {
    c *= Complex(0.0, horizontal ? static_cast<double>(n) : xi);
  });
  return out;
}

/// Stream function solving -Laplace(Psi) = d1 theta, with zero horizontal mean.
inline SpectralField stream_function(const SpectralField& theta) {
  SpectralField psi(theta);
  zero_nyquist(psi);
  psi.for_each([](int n, double xi, Complex& c) {
    if (n == 0) {
      c = 0.0;
      return;
    }
    const double nn = static_cast<double>(n);
    c *= Complex(0.0, nn / (nn * nn + xi * xi));
  });
  return psi;
}

struct Velocity {
  SpectralField u1;
  SpectralField u2;
};

/// Darcy velocity u = grad_perp Psi = (-d2 Psi, d1 Psi).
inline Velocity velocity(const SpectralField& theta) {
  const SpectralField psi = stream_function(theta);
  Velocity v{psi, psi};
  v.u1.for_each([](int, double xi, Complex& c) { c *= Complex(0.0, -xi); });
  v.u2.for_each([](int n, double, Complex& c) { c *= Complex(0.0, static_cast<double>(n)); });
  return v;
}

/// Spectral divergence i n u1^ + i xi u2^.
inline SpectralField divergence(const Velocity& v) {
  SpectralField d(v.u1.grid);
  const int h = d.grid.half_n1();
  for (int r = 0; r < d.grid.n2(); ++r) {
    const double xi = d.grid.xi_of_row(r);
    for (int n = 0; n < h; ++n) {
      d(n, r) = Complex(0.0, n) * v.u1(n, r) + Complex(0.0, xi) * v.u2(n, r);
    }
  }
  return d;
}

inline bool outside_two_thirds(const Grid& g, int n, int m) {
  return 3 * std::abs(n) > g.n1() || 3 * std::abs(m) > g.n2();
}

/// 2/3-rule truncation.
inline SpectralField dealias(const SpectralField& F) {
  SpectralField out(F);
  const Grid& g = F.grid;
  for (int r = 0; r < g.n2(); ++r) {
    const int m = g.mode_of_row(r);
    for (int n = 0; n < g.half_n1(); ++n) {
      if (outside_two_thirds(g, n, m)) out(n, r) = 0.0;
    }
  }
  return out;
}

inline bool is_dealiased(const SpectralField& F) {
  const Grid& g = F.grid;
  for (int r = 0; r < g.n2(); ++r) {
    for (int n = 0; n < g.half_n1(); ++n) {
      if (outside_two_thirds(g, n, g.mode_of_row(r)) && F(n, r) != Complex{}) return false;
    }
  }
  return true;
}

/// max over collocation points of |grad F|.
inline double grad_linf(const SpectralField& F) {
  const RealField d1 = inverse(derivative(F, Axis::x1));
  const RealField d2 = inverse(derivative(F, Axis::x2));
  double m = 0.0;
  for (std::size_t q = 0; q < d1.values.size(); ++q) {
    m = std::max(m, std::hypot(d1.values[q], d2.values[q]));
  }
  return m;
}

/// Pointwise product in physical space.
inline RealField multiply(const RealField& a, const RealField& b) {
  require_same_grid(a.grid, b.grid, "multiply");
  RealField out(a.grid);
  for (std::size_t q = 0; q < out.values.size(); ++q) out.values[q] = a.values[q] * b.values[q];
  return out;
}

}  // namespace ipm
