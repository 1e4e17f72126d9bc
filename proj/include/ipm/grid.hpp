#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace ipm {

using Complex = std::complex<double>;

inline constexpr double pi = std::numbers::pi;

/// Periodic collocation grid on [0, 2pi) x [-L, L).
///
/// Horizontal wavenumbers are integers n in [-n1/2, n1/2 - 1]; vertical
/// wavenumbers are xi = (pi / L) m for integer m in [-n2/2, n2/2 - 1].
class Grid {
 public:
  Grid(int n1, int n2, double half_height) : n1_(n1), n2_(n2), L_(half_height) {
    auto pow2 = [](int n) { return n > 0 && (n & (n - 1)) == 0; };
    if (n1 < 16 || n2 < 16 || !pow2(n1) || !pow2(n2)) {
      throw std::invalid_argument("Grid: n1 and n2 must be powers of two >= 16 (got " +
                                  std::to_string(n1) + " x " + std::to_string(n2) + ")");
    }
    if (!(half_height > 0.0) || !std::isfinite(half_height)) {
      throw std::invalid_argument("Grid: L must be positive and finite");
    }
  }

  int n1() const { return n1_; }
  int n2() const { return n2_; }
  double L() const { return L_; }

  double dx1() const { return 2.0 * pi / n1_; }
  double dx2() const { return 2.0 * L_ / n2_; }
  double dxi() const { return pi / L_; }
  double area() const { return 4.0 * pi * L_; }

  double x1(int i) const { return i * dx1(); }
  double x2(int j) const { return -L_ + j * dx2(); }

  std::size_t size() const { return static_cast<std::size_t>(n1_) * n2_; }

  // Half-spectrum layout: n in [0, n1/2], all rows m.
  int half_n1() const { return n1_ / 2 + 1; }
  std::size_t spectral_size() const { return static_cast<std::size_t>(half_n1()) * n2_; }

  /// Signed vertical mode index of FFT row r.
  int mode_of_row(int r) const { return r < n2_ / 2 ? r : r - n2_; }
  int row_of_mode(int m) const { return m >= 0 ? m : m + n2_; }
  double xi_of_row(int r) const { return dxi() * mode_of_row(r); }

  /// Multiplicity of half-spectrum column n in full-spectrum sums.
  double column_weight(int n) const { return (n == 0 || n == n1_ / 2) ? 1.0 : 2.0; }

  bool operator==(const Grid& other) const = default;

 private:
  int n1_;
  int n2_;
  double L_;
};

inline void require_same_grid(const Grid& a, const Grid& b, const char* where) {
  if (!(a == b)) {
    throw std::invalid_argument(std::string(where) + ": grid mismatch");
  }
}

/// Real samples on the collocation points, row-major with x1 fastest.
struct RealField {
  Grid grid;
  std::vector<double> values;

  explicit RealField(const Grid& g) : grid(g), values(g.size(), 0.0) {}
  RealField(const Grid& g, std::vector<double> v) : grid(g), values(std::move(v)) {
    if (values.size() != grid.size()) {
      throw std::invalid_argument("RealField: sample count does not match grid");
    }
  }

  template <class F>
  static RealField sample(const Grid& g, F&& f) {
    RealField out(g);
    for (int j = 0; j < g.n2(); ++j) {
      for (int i = 0; i < g.n1(); ++i) {
        out.values[static_cast<std::size_t>(j) * g.n1() + i] = f(g.x1(i), g.x2(j));
      }
    }
    return out;
  }

  double& operator()(int i, int j) { return values[static_cast<std::size_t>(j) * grid.n1() + i]; }
  double operator()(int i, int j) const {
    return values[static_cast<std::size_t>(j) * grid.n1() + i];
  }
};

/// Unitary Fourier coefficients: sum over all (n, m) of |c|^2 equals the
/// integral of |f|^2 over the domain. Only n >= 0 is stored; coefficients at
/// negative n are the conjugates of (-n, -m).
struct SpectralField {
  Grid grid;
  std::vector<Complex> coeffs;

  explicit SpectralField(const Grid& g) : grid(g), coeffs(g.spectral_size(), Complex{}) {}

  Complex& operator()(int n, int row) {
    return coeffs[static_cast<std::size_t>(row) * grid.half_n1() + n];
  }
  Complex operator()(int n, int row) const {
    return coeffs[static_cast<std::size_t>(row) * grid.half_n1() + n];
  }

  /// Coefficient at signed wavenumbers (n, m) of the full spectrum.
  Complex at(int n, int m) const {
    const int half = grid.n1() / 2;
    if (n < -half || n >= half || m < -grid.n2() / 2 || m >= grid.n2() / 2) {
      throw std::out_of_range("SpectralField::at: wavenumber outside grid");
    }
    if (n >= 0) return (*this)(n, grid.row_of_mode(m));
    if (n == -half) return (*this)(half, grid.row_of_mode(m));
    // (-m) wraps for the vertical Nyquist row.
    const int mm = (m == -grid.n2() / 2) ? m : -m;
    return std::conj((*this)(-n, grid.row_of_mode(mm)));
  }

  /// Visit every stored coefficient as f(n, xi, coefficient).
  template <class F>
  void for_each(F&& f) {
    const int h = grid.half_n1();
    for (int r = 0; r < grid.n2(); ++r) {
      const double xi = grid.xi_of_row(r);
      for (int n = 0; n < h; ++n) f(n, xi, coeffs[static_cast<std::size_t>(r) * h + n]);
    }
  }
  template <class F>
  void for_each(F&& f) const {
    const int h = grid.half_n1();
    for (int r = 0; r < grid.n2(); ++r) {
      const double xi = grid.xi_of_row(r);
      for (int n = 0; n < h; ++n) f(n, xi, coeffs[static_cast<std::size_t>(r) * h + n]);
    }
  }

  SpectralField& operator+=(const SpectralField& o) {
    require_same_grid(grid, o.grid, "SpectralField::operator+=");
    for (std::size_t q = 0; q < coeffs.size(); ++q) coeffs[q] += o.coeffs[q];
    return *this;
  }
  SpectralField& operator-=(const SpectralField& o) {
    require_same_grid(grid, o.grid, "SpectralField::operator-=");
    for (std::size_t q = 0; q < coeffs.size(); ++q) coeffs[q] -= o.coeffs[q];
    return *this;
  }
  SpectralField& operator*=(double a) {
    for (auto& c : coeffs) c *= a;
    return *this;
  }
  friend SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
  friend SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
  friend SpectralField operator*(double s, SpectralField a) { return a *= s; }

  /// a += s * b
  void axpy(double s, const SpectralField& b) {
    for (std::size_t q = 0; q < coeffs.size(); ++q) coeffs[q] += s * b.coeffs[q];
  }

  bool all_finite() const {
    for (const auto& c : coeffs) {
      if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) return false;
    }
    return true;
  }

  /// Largest violation of c(0,-m) = conj c(0,m) on the self-conjugate columns.
  double hermitian_defect() const {
    double worst = 0.0;
    for (int n : {0, grid.n1() / 2}) {
      for (int r = 0; r < grid.n2(); ++r) {
        const int m = grid.mode_of_row(r);
        const int mirror = grid.row_of_mode(m == -grid.n2() / 2 ? m : -m);
        worst = std::max(worst, std::abs((*this)(n, r) - std::conj((*this)(n, mirror))));
      }
    }
    return worst;
  }
};

}  // namespace ipm
