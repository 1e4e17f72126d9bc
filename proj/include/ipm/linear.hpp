#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "ipm/grid.hpp"
#include "ipm/profile.hpp"
#include "ipm/spectral.hpp"

namespace ipm {

/// Decay factor exp(-t n^2 / (n^2 + xi^2)) of mode (n, xi) under the
/// linearization around rho_s = -x2. The n = 0 slice is frozen.
inline double multiplier(int n, double xi, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("multiplier: t must be >= 0");
  if (n == 0) return 1.0;
  const double nn = static_cast<double>(n) * n;
  return std::exp(-t * nn / (nn + xi * xi));
}

struct LinearState {
  SpectralField theta;
  double t = 0.0;
};

inline LinearState evolve_exact(const LinearState& state, double dt) {
  if (!(dt >= 0.0)) throw std::invalid_argument("evolve_exact: dt must be >= 0");
  LinearState out{state.theta, state.t + dt};
  if (dt == 0.0) return out;
  out.theta.for_each([&](int n, double xi, Complex& c) { c *= multiplier(n, xi, dt); });
  return out;
}

/// Exact evolution is only a Fourier multiplier for the affine background.
inline LinearState evolve_exact(const LinearState& state, double dt, const StratifiedProfile& profile) {
  if (!profile.is_affine()) {
    throw std::invalid_argument(
        "evolve_exact: background is not affine; use the solver with the nonlinear term disabled");
  }
  return evolve_exact(state, dt);
}

/// W = n^{2 s1} / (n^2 + xi^2)^{k - s2} * exp(-2 t n^2 / (n^2 + xi^2)).
inline double weight_W(double t, int n, double xi, double k, double s1, double s2) {
  if (n == 0) throw std::invalid_argument("weight_W: n must be nonzero");
  if (s1 < 0.0 || s2 < 0.0 || s1 + s2 > k) {
    throw std::invalid_argument("weight_W: need s1, s2 >= 0 and s1 + s2 <= k");
  }
  if (!(t >= 0.0)) throw std::invalid_argument("weight_W: t must be >= 0");
  const double nn = static_cast<double>(n) * n;
  const double r = nn + xi * xi;
  return std::pow(nn, s1) / std::pow(r, k - s2) * std::exp(-2.0 * t * nn / r);
}

/// Uniform bound W <= ((k - s2) / (2e))^{k - s2} t^{-(k - s2)}, from sup x^a e^{-x} = (a/e)^a.
inline double weight_W_bound(double t, double k, double s2) {
  const double a = k - s2;
  if (a == 0.0) return 1.0;
  return std::pow(a / (2.0 * std::exp(1.0)), a) * std::pow(t, -a);
}

/// Rough linear data with Fourier tail |xi|^{-k-1/2-2 eps} on the n = +-1 modes.
struct SharpnessSpec {
  double k;
  double eps;
  Grid grid;

  SharpnessSpec(double k_, double eps_, const Grid& g) : k(k_), eps(eps_), grid(g) {
    if (!(k > 2.0)) throw std::invalid_argument("SharpnessSpec: k must be > 2");
    if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("SharpnessSpec: eps must lie in (0, 1)");
    if (grid.dxi() > 0.5) {
      throw std::invalid_argument("SharpnessSpec: grid too coarse, dxi = " + std::to_string(grid.dxi()) +
                                  " > 0.5");
    }
  }

  double tail_exponent() const { return k + 0.5 + 2.0 * eps; }
};

/// |xi|^{-k-1/2-2 eps} 1_{|xi| >= 1}
inline double sharpness_amplitude(double k, double eps, double xi) {
  const double a = std::abs(xi);
  return a >= 1.0 ? std::pow(a, -(k + 0.5 + 2.0 * eps)) : 0.0;
}

/// Fraction of the cell [|xi| - dxi/2, |xi| + dxi/2] lying in |xi| >= 1.
inline double indicator_cell_weight(double xi, double dxi) {
  return std::clamp((std::abs(xi) + 0.5 * dxi - 1.0) / dxi, 0.0, 1.0);
}

/// Grid realization of the sharpness data. Unitary coefficients carry the
/// spectral density times sqrt(dxi) so that squared norms are Riemann sums of
/// the continuous xi integrals; the phase (-1)^m centres the field at x2 = 0.
inline SpectralField sharpness_data(const SharpnessSpec& spec) {
  const Grid& g = spec.grid;
  SpectralField out(g);
  const double dxi = g.dxi();
  const double p = spec.tail_exponent();
  for (int r = 0; r < g.n2(); ++r) {
    const int m = g.mode_of_row(r);
    if (m == -g.n2() / 2) continue;
    const double xi = g.xi_of_row(r);
    const double w = indicator_cell_weight(xi, dxi);
    if (w == 0.0) continue;
    const double sign = (m % 2 == 0) ? 1.0 : -1.0;
    out(1, r) = sign * std::pow(std::abs(xi), -p) * std::sqrt(dxi * w);
  }
  return out;
}

enum class LinearQuantity { L2, H2_of_U, H2_of_U2 };

inline std::string to_string(LinearQuantity q) {
  switch (q) {
    case LinearQuantity::L2: return "l2_theta_sq";
    case LinearQuantity::H2_of_U: return "h2_u_sq";
    case LinearQuantity::H2_of_U2: return "h2_u2_sq";
  }
  return "unknown";
}

namespace detail {

// Multiplier weight of each quantity on the n = 1 mode, relative to |theta^|^2.
// H^2 weight is 1 + n^4 + xi^4; |U^|^2 = n^2/(n^2+xi^2) |theta^|^2,
// |U2^|^2 = n^4/(n^2+xi^2)^2 |theta^|^2.
inline double linear_quantity_weight(LinearQuantity q, double xi) {
  const double x2 = xi * xi;
  switch (q) {
    case LinearQuantity::L2: return 1.0;
    case LinearQuantity::H2_of_U: return (2.0 + x2 * x2) / (1.0 + x2);
    case LinearQuantity::H2_of_U2: return (2.0 + x2 * x2) / ((1.0 + x2) * (1.0 + x2));
  }
  return 0.0;
}

}  // namespace detail

/// Squared norm of the evolved sharpness data from a 1D integral over
/// |xi| >= 1 (the n = 1 component). Independent of the 2D grid pipeline.
inline double linear_norm_oracle(const SharpnessSpec& spec, double t, LinearQuantity quantity) {
  if (!(t >= 0.0)) throw std::invalid_argument("linear_norm_oracle: t must be >= 0");
  const double two_p = 2.0 * spec.tail_exponent();
  auto integrand = [&](double xi) {
    if (!std::isfinite(xi)) return 0.0;
    return std::exp(-2.0 * t / (1.0 + xi * xi)) * std::pow(xi, -two_p) *
           detail::linear_quantity_weight(quantity, xi);
  };
  using boost::math::quadrature::gauss_kronrod;
  constexpr double tol = 1e-12;
  double total = 0.0;
  double err_total = 0.0;
  const double split = std::max(1.0, std::sqrt(t));
  if (split > 1.0) {
    double err = 0.0;
    total += gauss_kronrod<double, 31>::integrate(integrand, 1.0, split, 20, tol, &err);
    err_total += err;
  }
  double err = 0.0;
  total += gauss_kronrod<double, 31>::integrate(integrand, split, std::numeric_limits<double>::infinity(),
                                                20, tol, &err);
  err_total += err;
  if (!(err_total <= 1e-8 * std::abs(total)) && total != 0.0) {
    throw std::runtime_error("linear_norm_oracle: quadrature did not converge (error " +
                             std::to_string(err_total) + ")");
  }
  return 2.0 * total;
}

/// Grid counterpart of linear_norm_oracle: half the squared norm of the real
/// field, i.e. the contribution of the n >= 1 half of the Hermitian pair.
inline double linear_norm_grid(const SpectralField& theta, LinearQuantity quantity) {
  switch (quantity) {
    case LinearQuantity::L2: return 0.5 * squared_l2(theta);
    case LinearQuantity::H2_of_U: {
      const Velocity u = velocity(theta);
      const double a = sobolev_norm(u.u1, 2.0);
      const double b = sobolev_norm(u.u2, 2.0);
      return 0.5 * (a * a + b * b);
    }
    case LinearQuantity::H2_of_U2: {
      const double b = sobolev_norm(velocity(theta).u2, 2.0);
      return 0.5 * b * b;
    }
  }
  return 0.0;
}

/// C = int_0^1 e^{-2 eta} eta^{k+1} d eta, the constant in the lower bound
/// ||theta(t)||^2 >= C t^{-k-2 eps} for t >= 1.
inline double sharpness_lower_constant(double k) {
  using boost::math::quadrature::gauss_kronrod;
  return gauss_kronrod<double, 31>::integrate(
      [k](double eta) { return std::exp(-2.0 * eta) * std::pow(eta, k + 1.0); }, 0.0, 1.0, 15, 1e-14);
}

}  // namespace ipm
