#pragma once

// pchip.hpp (Boost 1.74) calls isnan unqualified; it must already be visible.
#include <boost/math/special_functions/fpclassify.hpp>
#include <boost/math/interpolators/pchip.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "ipm/fft.hpp"
#include "ipm/grid.hpp"
#include "ipm/profile.hpp"
#include "ipm/snapshot.hpp"
#include "ipm/spectral.hpp"

namespace ipm {

/// Raised when a density is not strictly decreasing in x2 on the analysis window.
class MonotonicityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Total density f(x1, x2) = -slope * x2 + periodic(x1, x2).
struct DensityField {
  RealField periodic;
  double slope = 1.0;

  const Grid& grid() const { return periodic.grid; }
  double operator()(int i, int j) const { return -slope * grid().x2(j) + periodic(i, j); }

  /// rho_s + theta
  static DensityField from_profile(const StratifiedProfile& profile, const RealField& theta) {
    require_same_grid(profile.grid(), theta.grid, "DensityField::from_profile");
    DensityField f{theta, 1.0};
    const Grid& g = theta.grid;
    for (int j = 0; j < g.n2(); ++j) {
      const double p = profile.periodic_value(g.x2(j));
      for (int i = 0; i < g.n1(); ++i) f.periodic(i, j) += p;
    }
    return f;
  }

  template <class F>
  static DensityField sample_perturbation(const Grid& g, F&& theta) {
    return DensityField{RealField::sample(g, std::forward<F>(theta)), 1.0};
  }
};

/// Rows j with |x2_j| <= L - margin, as an inclusive range.
struct Window {
  int row_lo = 0;
  int row_hi = 0;

  static Window interior(const Grid& g, double margin) {
    Window w{g.n2(), -1};
    for (int j = 0; j < g.n2(); ++j) {
      if (std::abs(g.x2(j)) <= g.L() - margin) {
        w.row_lo = std::min(w.row_lo, j);
        w.row_hi = std::max(w.row_hi, j);
      }
    }
    if (w.row_hi <= w.row_lo) throw std::invalid_argument("Window: margin leaves no interior rows");
    return w;
  }

  double area(const Grid& g) const { return 2.0 * pi * (g.x2(row_hi) - g.x2(row_lo)); }
};

/// Trigonometric interpolant of one vertical column, plus the affine part.
class ColumnInterpolant {
 public:
  ColumnInterpolant(const Grid& g, std::vector<double> periodic_samples, double slope)
      : grid_(g), slope_(slope), samples_(std::move(periodic_samples)) {
    const int n = g.n2();
    coeffs_.resize(static_cast<std::size_t>(n / 2 + 1));
    std::vector<double> work(samples_);
    detail::FftPlans::instance().r2c(1, n, work.data(), coeffs_.data());
    for (auto& c : coeffs_) c /= static_cast<double>(n);
    weights_.assign(coeffs_.size(), 2.0);
    weights_.front() = 1.0;
    weights_.back() = 1.0;
  }

  static ColumnInterpolant of(const DensityField& f, int i) {
    const Grid& g = f.grid();
    std::vector<double> col(static_cast<std::size_t>(g.n2()));
    for (int j = 0; j < g.n2(); ++j) col[static_cast<std::size_t>(j)] = f.periodic(i, j);
    return {g, std::move(col), f.slope};
  }

  double node_value(int j) const { return -slope_ * grid_.x2(j) + samples_[static_cast<std::size_t>(j)]; }

  /// (f(x2), df/dx2)
  std::pair<double, double> evaluate(double x2) const {
    const double kappa = pi / grid_.L();
    const Complex z = std::polar(1.0, kappa * (x2 + grid_.L()));
    Complex w{1.0, 0.0};
    double v = 0.0;
    double d = 0.0;
    for (std::size_t m = 0; m < coeffs_.size(); ++m) {
      const Complex t = weights_[m] * coeffs_[m] * w;
      v += t.real();
      d -= kappa * static_cast<double>(m) * t.imag();
      w *= z;
    }
    return {v - slope_ * x2, d - slope_};
  }
  double value(double x2) const { return evaluate(x2).first; }

  /// Exact integral of f(x2) * x2 over [a, b] for the interpolant.
  double moment(double a, double b) const {
    const double L = grid_.L();
    const double kappa0 = pi / L;
    double total = -slope_ * (b * b * b - a * a * a) / 3.0;
    total += coeffs_[0].real() * (b * b - a * a) / 2.0;
    for (std::size_t m = 1; m < coeffs_.size(); ++m) {
      const double kappa = kappa0 * static_cast<double>(m);
      auto antideriv = [&](double x) {
        return std::polar(1.0, kappa * (x + L)) * Complex(1.0 / (kappa * kappa), -x / kappa);
      };
      total += weights_[m] * std::real(coeffs_[m] * (antideriv(b) - antideriv(a)));
    }
    return total;
  }

  /// Smallest -df/dx2 from node differences over the window rows.
  double discrete_gamma(const Window& w) const {
    double g = std::numeric_limits<double>::infinity();
    for (int j = w.row_lo; j < w.row_hi; ++j) {
      g = std::min(g, -(node_value(j + 1) - node_value(j)) / grid_.dx2());
    }
    return g;
  }

  /// x2 with f(x2) = s inside the window: node bracket, bisection to 1e-6,
  /// then at most five Newton steps kept inside the bracket.
  double solve(double s, const Window& w) const {
    const double top = node_value(w.row_hi);
    const double bottom = node_value(w.row_lo);
    if (s < top || s > bottom) {
      throw std::out_of_range("level_curve: level " + std::to_string(s) + " outside column range [" +
                              std::to_string(top) + ", " + std::to_string(bottom) + "]");
    }
    int lo = w.row_lo;
    int hi = w.row_hi;
    while (hi - lo > 1) {
      const int mid = (lo + hi) / 2;
      (node_value(mid) >= s ? lo : hi) = mid;
    }
    double a = grid_.x2(lo);
    double b = grid_.x2(hi);
    if (node_value(lo) == s) return a;
    if (node_value(hi) == s) return b;
    while (b - a > 1e-6) {
      const double mid = 0.5 * (a + b);
      (value(mid) >= s ? a : b) = mid;
    }
    double x = 0.5 * (a + b);
    for (int it = 0; it < 5; ++it) {
      const auto [v, d] = evaluate(x);
      const double r = v - s;
      if (std::abs(r) < 1e-14) return x;
      (r > 0.0 ? a : b) = x;
      double next = x - r / d;
      if (!(next > a && next < b)) next = 0.5 * (a + b);
      x = next;
    }
    // Newton stalled; finish by bisection to machine resolution.
    while (b - a > 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(a))) {
      const double mid = 0.5 * (a + b);
      if (mid <= a || mid >= b) break;
      (value(mid) >= s ? a : b) = mid;
    }
    return 0.5 * (a + b);
  }

 private:
  Grid grid_;
  double slope_;
  std::vector<double> samples_;
  std::vector<Complex> coeffs_;
  std::vector<double> weights_;
};

inline double default_margin(const Grid& g) { return 0.1 * g.L(); }

/// Solve f(x1_i, phi) = s on column i.
inline double level_curve(const DensityField& f, double s, int x1_index, double margin) {
  const Grid& g = f.grid();
  if (x1_index < 0 || x1_index >= g.n1()) throw std::out_of_range("level_curve: column index");
  const Window w = Window::interior(g, margin);
  const ColumnInterpolant col = ColumnInterpolant::of(f, x1_index);
  if (!(col.discrete_gamma(w) > 0.0)) {
    throw MonotonicityError("level_curve: column " + std::to_string(x1_index) +
                            " is not strictly decreasing in x2");
  }
  return col.solve(s, w);
}

inline double level_curve(const DensityField& f, double s, int x1_index) {
  return level_curve(f, s, x1_index, default_margin(f.grid()));
}

/// Uniform levels covering the range attained by every column inside the window.
struct LevelGrid {
  std::vector<double> s_values;
  double margin = 0.0;

  static LevelGrid automatic(const DensityField& f, double margin, int count = 0) {
    const Grid& g = f.grid();
    if (count == 0) count = 2 * g.n2();
    if (count < 2) throw std::invalid_argument("LevelGrid: need at least two levels");
    const Window w = Window::interior(g, margin);
    double s_min = -std::numeric_limits<double>::infinity();
    double s_max = std::numeric_limits<double>::infinity();
    for (int i = 0; i < g.n1(); ++i) {
      s_min = std::max(s_min, f(i, w.row_hi));
      s_max = std::min(s_max, f(i, w.row_lo));
    }
    if (!(s_max > s_min)) throw MonotonicityError("LevelGrid: empty common level range");
    LevelGrid lg{{}, margin};
    lg.s_values.resize(static_cast<std::size_t>(count));
    for (int q = 0; q < count; ++q) {
      lg.s_values[static_cast<std::size_t>(q)] = s_min + (s_max - s_min) * q / (count - 1);
    }
    lg.s_values.back() = s_max;
    return lg;
  }

  static LevelGrid automatic(const DensityField& f) { return automatic(f, default_margin(f.grid())); }

  std::size_t size() const { return s_values.size(); }
  double ds() const { return s_values[1] - s_values[0]; }
};

/// Level-set split phi(x1, s) = phi0(s) + h(x1, s) and the stratification f*.
struct LevelSetDecomposition {
  Grid grid;
  std::vector<double> s;
  std::vector<double> phi;     // [level][i]
  std::vector<double> phi0;    // per level
  std::vector<double> h;       // [level][i]
  std::vector<double> f_star;  // per vertical grid row
  int star_row_lo = 0;         // rows where f* comes from inverting phi0
  int star_row_hi = -1;
  double slope = 1.0;
  double gamma = 0.0;  // measured min(-d2 f) over the window
  double margin = 0.0;

  std::size_t levels() const { return s.size(); }
  double h_at(int i, std::size_t q) const { return h[q * static_cast<std::size_t>(grid.n1()) + i]; }
  double phi_at(int i, std::size_t q) const { return phi[q * static_cast<std::size_t>(grid.n1()) + i]; }
};

namespace detail {

inline boost::math::interpolators::pchip<std::vector<double>> phi0_interpolant(
    const LevelSetDecomposition& dec) {
  return {std::vector<double>(dec.s), std::vector<double>(dec.phi0)};
}

// s with phi0(s) = x2, for phi0 decreasing; nullopt outside the level range.
template <class Interp>
std::optional<double> invert_phi0(const LevelSetDecomposition& dec, const Interp& interp, double x2) {
  const auto& p = dec.phi0;
  if (x2 > p.front() || x2 < p.back()) return std::nullopt;
  // First index with phi0 <= x2.
  auto it = std::lower_bound(p.begin(), p.end(), x2, std::greater<>());
  auto k = static_cast<std::size_t>(it - p.begin());
  if (k < p.size() && p[k] == x2) return dec.s[k];
  if (k == 0) return dec.s.front();
  double a = dec.s[k - 1];
  double b = dec.s[k];
  for (int it2 = 0; it2 < 200 && b - a > 1e-15 * std::max(1.0, std::abs(a)); ++it2) {
    const double mid = 0.5 * (a + b);
    if (mid <= a || mid >= b) break;
    (interp(mid) >= x2 ? a : b) = mid;
  }
  return 0.5 * (a + b);
}

}  // namespace detail

/// Value of f* at an arbitrary height inside the level range.
inline double stratified_value(const LevelSetDecomposition& dec, double x2) {
  const auto interp = detail::phi0_interpolant(dec);
  const auto s = detail::invert_phi0(dec, interp, x2);
  if (!s) throw std::out_of_range("stratified_value: x2 outside the level range");
  return *s;
}

inline LevelSetDecomposition decompose(const DensityField& f, const LevelGrid& levels, int threads = 1) {
  const Grid& g = f.grid();
  const Window w = Window::interior(g, levels.margin);
  const std::size_t nl = levels.size();
  const auto n1 = static_cast<std::size_t>(g.n1());

  LevelSetDecomposition dec{g, levels.s_values, std::vector<double>(nl * n1), std::vector<double>(nl),
                            std::vector<double>(nl * n1), std::vector<double>(static_cast<std::size_t>(g.n2())),
                            0, -1, f.slope, 0.0, levels.margin};
  for (std::size_t q = 1; q < nl; ++q) {
    if (!(levels.s_values[q] > levels.s_values[q - 1])) {
      throw std::invalid_argument("decompose: levels must be strictly increasing");
    }
  }

  std::vector<double> column_gamma(n1);
  auto work = [&](int i_begin, int i_end) {
    for (int i = i_begin; i < i_end; ++i) {
      const ColumnInterpolant col = ColumnInterpolant::of(f, i);
      column_gamma[static_cast<std::size_t>(i)] = col.discrete_gamma(w);
      if (!(column_gamma[static_cast<std::size_t>(i)] > 0.0)) continue;
      for (std::size_t q = 0; q < nl; ++q) dec.phi[q * n1 + static_cast<std::size_t>(i)] = col.solve(dec.s[q], w);
    }
  };
  threads = std::clamp(threads, 1, g.n1());
  if (threads == 1) {
    work(0, g.n1());
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back(work, g.n1() * t / threads, g.n1() * (t + 1) / threads);
    }
  }
  dec.gamma = *std::min_element(column_gamma.begin(), column_gamma.end());
  if (!(dec.gamma > 0.0)) {
    const auto bad = std::min_element(column_gamma.begin(), column_gamma.end()) - column_gamma.begin();
    throw MonotonicityError("decompose: density is not strictly decreasing in x2 (column " +
                            std::to_string(bad) + ", min -d2 f = " + std::to_string(dec.gamma) + ")");
  }

  for (std::size_t q = 0; q < nl; ++q) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n1; ++i) mean += dec.phi[q * n1 + i];
    mean /= static_cast<double>(n1);
    dec.phi0[q] = mean;
    for (std::size_t i = 0; i < n1; ++i) dec.h[q * n1 + i] = dec.phi[q * n1 + i] - mean;
  }
  for (std::size_t q = 1; q < nl; ++q) {
    if (!(dec.phi0[q] < dec.phi0[q - 1])) {
      throw MonotonicityError("decompose: phi0 is not strictly decreasing");
    }
  }

  const auto interp = detail::phi0_interpolant(dec);
  for (int j = 0; j < g.n2(); ++j) {
    const double x2 = g.x2(j);
    if (const auto s = detail::invert_phi0(dec, interp, x2)) {
      dec.f_star[static_cast<std::size_t>(j)] = *s;
      if (dec.star_row_hi < dec.star_row_lo) dec.star_row_lo = j;
      dec.star_row_hi = j;
    } else {
      // Outside the level range f is taken to be stratified already.
      double mean = 0.0;
      for (int i = 0; i < g.n1(); ++i) mean += f(i, j);
      dec.f_star[static_cast<std::size_t>(j)] = mean / g.n1();
    }
  }
  return dec;
}

inline LevelSetDecomposition decompose(const DensityField& f) { return decompose(f, LevelGrid::automatic(f)); }

/// f* as a DensityField (independent of x1).
inline DensityField stratified_density(const LevelSetDecomposition& dec) {
  const Grid& g = dec.grid;
  DensityField out{RealField(g), dec.slope};
  for (int j = 0; j < g.n2(); ++j) {
    const double p = dec.f_star[static_cast<std::size_t>(j)] + dec.slope * g.x2(j);
    for (int i = 0; i < g.n1(); ++i) out.periodic(i, j) = p;
  }
  return out;
}

/// 1/2 ||h||^2 over T x [s_min, s_max]: trapezoid in s, exact sample mean in x1.
inline double potential_energy(const LevelSetDecomposition& dec) {
  const std::size_t nl = dec.levels();
  const int n1 = dec.grid.n1();
  double total = 0.0;
  for (std::size_t q = 0; q < nl; ++q) {
    double row = 0.0;
    for (int i = 0; i < n1; ++i) row += dec.h_at(i, q) * dec.h_at(i, q);
    row *= 2.0 * pi / n1;
    const double ds_lo = q > 0 ? dec.s[q] - dec.s[q - 1] : 0.0;
    const double ds_hi = q + 1 < nl ? dec.s[q + 1] - dec.s[q] : 0.0;
    total += 0.5 * (ds_lo + ds_hi) * row;
  }
  return 0.5 * total;
}

/// max |h| at the two end levels relative to max |h| overall.
inline double endpoint_decay_ratio(const LevelSetDecomposition& dec) {
  double overall = 0.0;
  for (double v : dec.h) overall = std::max(overall, std::abs(v));
  if (overall == 0.0) return 0.0;
  double ends = 0.0;
  for (int i = 0; i < dec.grid.n1(); ++i) {
    ends = std::max({ends, std::abs(dec.h_at(i, 0)), std::abs(dec.h_at(i, dec.levels() - 1))});
  }
  return ends / overall;
}

/// Largest symmetric cutoff s with [-s, s] inside the level range.
inline double admissible_cutoff(const LevelSetDecomposition& dec) {
  return std::min(-dec.s.front(), dec.s.back());
}

/// E_s(f) - E_s(f*) with E_s(f) = integral over {-s < f < s} of f x2, by exact
/// column integrals of the trigonometric interpolants between the level curves.
inline double potential_energy_direct(const DensityField& f, const LevelSetDecomposition& dec, double s_cut) {
  const Grid& g = f.grid();
  if (!(s_cut > 0.0) || s_cut > admissible_cutoff(dec) * (1.0 + 1e-12)) {
    throw std::invalid_argument("potential_energy_direct: s_cut outside the level grid");
  }
  const Window w = Window::interior(g, dec.margin);
  double e_f = 0.0;
  double phi0_hi = 0.0;  // phi0(s_cut), the lower boundary in x2
  double phi0_lo = 0.0;  // phi0(-s_cut)
  for (int i = 0; i < g.n1(); ++i) {
    const ColumnInterpolant col = ColumnInterpolant::of(f, i);
    const double a = col.solve(s_cut, w);
    const double b = col.solve(-s_cut, w);
    phi0_hi += a;
    phi0_lo += b;
    e_f += col.moment(a, b);
  }
  e_f *= g.dx1();
  phi0_hi /= g.n1();
  phi0_lo /= g.n1();

  std::vector<double> star(static_cast<std::size_t>(g.n2()));
  for (int j = 0; j < g.n2(); ++j) star[static_cast<std::size_t>(j)] = dec.f_star[static_cast<std::size_t>(j)] + dec.slope * g.x2(j);
  const ColumnInterpolant star_col(g, std::move(star), dec.slope);
  const double e_star = 2.0 * pi * star_col.moment(phi0_hi, phi0_lo);
  return e_f - e_star;
}

/// Area of {x in window : f(x) > s}, with the crossing located by linear
/// interpolation between vertical nodes.
inline double distribution_measure(const DensityField& f, double s, const Window& w) {
  const Grid& g = f.grid();
  const double dx2 = g.dx2();
  double total = 0.0;
  for (int i = 0; i < g.n1(); ++i) {
    double len = 0.0;
    for (int j = w.row_lo; j < w.row_hi; ++j) {
      const double a = f(i, j);
      const double b = f(i, j + 1);
      if (a > s && b > s) {
        len += dx2;
      } else if (a > s) {
        len += (a - s) / (a - b) * dx2;
      } else if (b > s) {
        len += (b - s) / (b - a) * dx2;
      }
    }
    total += len;
  }
  return total * g.dx1();
}

/// ||f - f*||_{L2} over the window rows.
inline double stratification_gap(const DensityField& f, const LevelSetDecomposition& dec, const Window& w) {
  const Grid& g = f.grid();
  double sum = 0.0;
  for (int j = w.row_lo; j <= w.row_hi; ++j) {
    const double fs = dec.f_star[static_cast<std::size_t>(j)];
    for (int i = 0; i < g.n1(); ++i) {
      const double d = f(i, j) - fs;
      sum += d * d;
    }
  }
  return std::sqrt(sum * g.dx1() * g.dx2());
}

/// ||f* - fn*||_{L2} over the common interior window.
inline double stratification_stability(const DensityField& f, const DensityField& fn, int threads = 1) {
  require_same_grid(f.grid(), fn.grid(), "stratification_stability");
  const auto a = decompose(f, LevelGrid::automatic(f), threads);
  const auto b = decompose(fn, LevelGrid::automatic(fn), threads);
  const Grid& g = f.grid();
  const Window w = Window::interior(g, default_margin(g));
  double sum = 0.0;
  for (int j = w.row_lo; j <= w.row_hi; ++j) {
    const double d = a.f_star[static_cast<std::size_t>(j)] - b.f_star[static_cast<std::size_t>(j)];
    sum += d * d;
  }
  return std::sqrt(sum * 2.0 * pi * g.dx2());
}

/// Potential energy via the first moment: the integral of (f - f*) x2 over the
/// domain, valid when f - f* vanishes near x2 = +-L. `theta` and `theta_star`
/// are perturbations of the same background.
inline double energy_moment(const RealField& theta, const std::vector<double>& theta_star) {
  const Grid& g = theta.grid;
  double total = 0.0;
  for (int j = 0; j < g.n2(); ++j) {
    double row = 0.0;
    for (int i = 0; i < g.n1(); ++i) row += theta(i, j) - theta_star[static_cast<std::size_t>(j)];
    total += row * g.x2(j);
  }
  return total * g.dx1() * g.dx2();
}

/// E / (||v||^{2(k-1)/k} ||v||_{H^k}^{2/k}) with v = grad_perp (-Laplace)^{-1} d1 theta,
/// the velocity generated by the perturbation.
inline double interpolation_ratio(double energy, const SpectralField& theta, double k) {
  const Velocity v = velocity(theta);
  const double l2 = std::sqrt(squared_l2(v.u1) + squared_l2(v.u2));
  const double a = sobolev_norm(v.u1, k);
  const double b = sobolev_norm(v.u2, k);
  const double hk = std::sqrt(a * a + b * b);
  if (l2 == 0.0) return 0.0;
  return energy / (std::pow(l2, 2.0 * (k - 1.0) / k) * std::pow(hk, 2.0 / k));
}

struct PotentialEnergyReport {
  double energy_h = 0.0;
  double energy_direct = 0.0;
  double l2_gap = 0.0;
  double ratio_lower = 0.0;
  double ratio_upper = 0.0;
  double endpoint_ratio = 0.0;
  double s_cut = 0.0;
  bool endpoint_warning = false;
};

inline PotentialEnergyReport potential_energy_report(const DensityField& f, const LevelSetDecomposition& dec) {
  PotentialEnergyReport r;
  r.energy_h = potential_energy(dec);
  r.s_cut = admissible_cutoff(dec);
  r.energy_direct = potential_energy_direct(f, dec, r.s_cut);
  r.l2_gap = stratification_gap(f, dec, Window::interior(f.grid(), dec.margin));
  const double gap2 = r.l2_gap * r.l2_gap;
  if (gap2 > 0.0) {
    r.ratio_lower = std::min(r.energy_h, r.energy_direct) / gap2;
    r.ratio_upper = std::max(r.energy_h, r.energy_direct) / gap2;
  }
  r.endpoint_ratio = endpoint_decay_ratio(dec);
  r.endpoint_warning = r.endpoint_ratio > 1e-8;
  return r;
}

/// CSV with columns s,phi0,h_rms,h_max.
inline void write_decomposition_csv(const std::filesystem::path& path, const LevelSetDecomposition& dec) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << "s,phi0,h_rms,h_max\n" << std::setprecision(17);
  const int n1 = dec.grid.n1();
  for (std::size_t q = 0; q < dec.levels(); ++q) {
    double sq = 0.0;
    double mx = 0.0;
    for (int i = 0; i < n1; ++i) {
      sq += dec.h_at(i, q) * dec.h_at(i, q);
      mx = std::max(mx, std::abs(dec.h_at(i, q)));
    }
    os << dec.s[q] << ',' << dec.phi0[q] << ',' << std::sqrt(sq / n1) << ',' << mx << '\n';
  }
}

/// Binary block of the full h: magic "IPMHLEV1", uint32 n1, uint32 levels,
/// float64 s[levels], float64 h[levels][n1]; little-endian.
inline void write_h_block(const std::filesystem::path& path, const LevelSetDecomposition& dec) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  const std::array<char, 8> magic{'I', 'P', 'M', 'H', 'L', 'E', 'V', '1'};
  os.write(magic.data(), magic.size());
  detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(dec.grid.n1()));
  detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(dec.levels()));
  for (double v : dec.s) detail::put_le<double>(os, v);
  for (double v : dec.h) detail::put_le<double>(os, v);
}

/// 1D profile file: CSV x2,f_star.
inline void write_f_star(const std::filesystem::path& path, const LevelSetDecomposition& dec) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << "x2,f_star\n" << std::setprecision(17);
  for (int j = 0; j < dec.grid.n2(); ++j) os << dec.grid.x2(j) << ',' << dec.f_star[static_cast<std::size_t>(j)] << '\n';
}

}  // namespace ipm
