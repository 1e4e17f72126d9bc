#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "ipm/grid.hpp"
#include "ipm/linear.hpp"
#include "ipm/spectral.hpp"

namespace ipm {

/// a sin(mode x1) exp(-x2^2 / width^2)
inline RealField gaussian_bump(const Grid& g, double amplitude, double width = 1.0, int mode = 1) {
  if (!(width > 0.0)) throw std::invalid_argument("gaussian_bump: width must be > 0");
  return RealField::sample(g, [&](double x1, double x2) {
    return amplitude * std::sin(mode * x1) * std::exp(-x2 * x2 / (width * width));
  });
}

/// Sharpness-type rough field: the n = +-1 power-law data, normalized to unit
/// sup norm, then localized by exp(-x2^2 / (2 w^2)) with w = window_fraction L.
/// The window smooths the |xi| = 1 cutoff but keeps the |xi|^{-k-1/2-2 eps} tail.
inline RealField rough_component(const Grid& g, double k, double eps, double amplitude,
                                 double window_fraction = 1.0 / 6.0) {
  RealField r = inverse(sharpness_data(SharpnessSpec(k, eps, g)));
  const double peak = linf_norm(r);
  const double w = window_fraction * g.L();
  for (int j = 0; j < g.n2(); ++j) {
    const double win = std::exp(-0.5 * g.x2(j) * g.x2(j) / (w * w));
    for (int i = 0; i < g.n1(); ++i) r(i, j) *= amplitude * win / peak;
  }
  return r;
}

/// Seeded smooth perturbation: a few horizontal modes times Gaussians in x2,
/// rescaled so that max |theta| = amplitude. Deterministic in (grid, seed).
inline RealField random_smooth(const Grid& g, std::uint64_t seed, double amplitude) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  struct Term {
    int n;
    double phase, weight, centre, sigma;
  };
  std::vector<Term> terms;
  const double spread = std::min(2.0, 0.15 * g.L());
  for (int n = 1; n <= 3; ++n) {
    for (int q = 0; q < 2; ++q) {
      terms.push_back({n, 2.0 * pi * u01(rng), 2.0 * u01(rng) - 1.0, spread * (2.0 * u01(rng) - 1.0),
                       0.6 + 0.6 * u01(rng)});
    }
  }
  RealField f = RealField::sample(g, [&](double x1, double x2) {
    double v = 0.0;
    for (const auto& t : terms) {
      const double z = (x2 - t.centre) / t.sigma;
      v += t.weight * std::sin(t.n * x1 + t.phase) * std::exp(-0.5 * z * z);
    }
    return v;
  });
  const double peak = linf_norm(f);
  if (peak > 0.0) {
    for (double& v : f.values) v *= amplitude / peak;
  }
  return f;
}

/// max over grid of |d2 f| by spectral differentiation.
inline double max_vertical_slope(const RealField& f) {
  return linf_norm(inverse(derivative(forward(f), Axis::x2)));
}

}  // namespace ipm
