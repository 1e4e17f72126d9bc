#pragma once

#include <fftw3.h>

#include <complex>
#include <map>
#include <mutex>
#include <stdexcept>
#include <tuple>

namespace ipm::detail {

// FFTW planning is not thread-safe; execution on fresh arrays is. Plans are
// created once per shape under a lock and reused through the new-array API.
class FftPlans {
 public:
  enum class Kind { r2c, c2r };

  static FftPlans& instance() {
    static FftPlans plans;
    return plans;
  }

  /// Forward real-to-complex transform of an (rows x cols) row-major array.
  void r2c(int rows, int cols, double* in, std::complex<double>* out) {
    fftw_execute_dft_r2c(get(Kind::r2c, rows, cols), in, reinterpret_cast<fftw_complex*>(out));
  }
  /// Inverse (unnormalized) complex-to-real transform; destroys `in`.
  void c2r(int rows, int cols, std::complex<double>* in, double* out) {
    fftw_execute_dft_c2r(get(Kind::c2r, rows, cols), reinterpret_cast<fftw_complex*>(in), out);
  }

  FftPlans(const FftPlans&) = delete;
  FftPlans& operator=(const FftPlans&) = delete;

 private:
  FftPlans() = default;
  ~FftPlans() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(Kind kind, int rows, int cols) {
    std::lock_guard lock(mutex_);
    const auto key = std::make_tuple(kind, rows, cols);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;

    const auto n_real = static_cast<std::size_t>(rows) * cols;
    const auto n_cplx = static_cast<std::size_t>(rows) * (cols / 2 + 1);
    double* r = fftw_alloc_real(n_real);
    fftw_complex* c = fftw_alloc_complex(n_cplx);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    fftw_plan plan = nullptr;
    if (rows == 1) {
      plan = kind == Kind::r2c ? fftw_plan_dft_r2c_1d(cols, r, c, flags)
                               : fftw_plan_dft_c2r_1d(cols, c, r, flags);
    } else {
      plan = kind == Kind::r2c ? fftw_plan_dft_r2c_2d(rows, cols, r, c, flags)
                               : fftw_plan_dft_c2r_2d(rows, cols, c, r, flags);
    }
    fftw_free(r);
    fftw_free(c);
    if (plan == nullptr) throw std::runtime_error("FFTW plan creation failed");
    plans_.emplace(key, plan);
    return plan;
  }

  std::mutex mutex_;
  std::map<std::tuple<Kind, int, int>, fftw_plan> plans_;
};

}  // namespace ipm::detail
