#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "ipm/grid.hpp"

namespace ipm {

enum class ProfileKind { affine, affine_plus_periodic };

/// Stably stratified background rho_s(x2) = -x2 + sum_j c_j cos(j pi x2 / L).
///
/// Holds samples of d2 rho_s on the vertical grid, gamma = min(-d2 rho_s) and
/// c_norm, a finite-difference proxy for ||d2 rho_s||_{C^{k+1}}.
class StratifiedProfile {
 public:
  static StratifiedProfile affine(const Grid& grid) { return {grid, ProfileKind::affine, {}, 3.0}; }

  static StratifiedProfile affine_plus_periodic(const Grid& grid, std::vector<double> coeffs,
                                                double k = 3.0) {
    return {grid, ProfileKind::affine_plus_periodic, std::move(coeffs), k};
  }

  ProfileKind kind() const { return kind_; }
  const Grid& grid() const { return grid_; }
  const std::vector<double>& coefficients() const { return coeffs_; }
  bool is_affine() const { return kind_ == ProfileKind::affine; }

  double gamma() const { return gamma_; }
  double c_norm() const { return c_norm_; }

  /// min{k - 2, gamma, 1 / c_norm}
  double structure_constant(double k) const {
    return std::min({k - 2.0, gamma_, 1.0 / c_norm_});
  }

  /// Periodic part of rho_s at x2.
  double periodic_value(double x2) const {
    double v = 0.0;
    for (std::size_t j = 0; j < coeffs_.size(); ++j) {
      v += coeffs_[j] * std::cos(static_cast<double>(j + 1) * pi * x2 / grid_.L());
    }
    return v;
  }
  double value(double x2) const { return -x2 + periodic_value(x2); }
  double derivative(double x2) const {
    double d = -1.0;
    for (std::size_t j = 0; j < coeffs_.size(); ++j) {
      const double w = static_cast<double>(j + 1) * pi / grid_.L();
      d -= coeffs_[j] * w * std::sin(w * x2);
    }
    return d;
  }

  /// d2 rho_s at vertical grid row j.
  double drho(int j) const { return drho_[static_cast<std::size_t>(j)]; }
  const std::vector<double>& drho_samples() const { return drho_; }

 private:
  StratifiedProfile(const Grid& grid, ProfileKind kind, std::vector<double> coeffs, double k)
      : grid_(grid), kind_(kind), coeffs_(std::move(coeffs)) {
    if (kind_ == ProfileKind::affine && !coeffs_.empty()) {
      throw std::invalid_argument("StratifiedProfile: affine profile takes no coefficients");
    }
    drho_.resize(static_cast<std::size_t>(grid_.n2()));
    for (int j = 0; j < grid_.n2(); ++j) drho_[static_cast<std::size_t>(j)] = derivative(grid_.x2(j));
    gamma_ = -*std::max_element(drho_.begin(), drho_.end());
    if (!(gamma_ > 0.0)) {
      throw std::invalid_argument("StratifiedProfile: not stably stratified (min -d2 rho_s = " +
                                  std::to_string(gamma_) + ")");
    }
    // Repeated centred differences of the periodic samples up to order ceil(k+1).
    const int orders = static_cast<int>(std::ceil(k + 1.0));
    std::vector<double> d = drho_;
    c_norm_ = 0.0;
    for (int q = 0; q <= orders; ++q) {
      for (double v : d) c_norm_ = std::max(c_norm_, std::abs(v));
      std::vector<double> next(d.size());
      const int n = grid_.n2();
      for (int j = 0; j < n; ++j) {
        next[static_cast<std::size_t>(j)] =
            (d[static_cast<std::size_t>((j + 1) % n)] - d[static_cast<std::size_t>((j + n - 1) % n)]) /
            (2.0 * grid_.dx2());
      }
      d = std::move(next);
    }
  }

  Grid grid_;
  ProfileKind kind_;
  std::vector<double> coeffs_;
  std::vector<double> drho_;
  double gamma_ = 0.0;
  double c_norm_ = 0.0;
};

}  // namespace ipm
