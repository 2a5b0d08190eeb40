#include "polsqueeze/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <stdexcept>

namespace polsqueeze {

namespace detail {
void* fftw_aligned_alloc(std::size_t bytes) {
  void* p = fftw_malloc(bytes == 0 ? 1 : bytes);
  if (p == nullptr) throw std::bad_alloc();
  return p;
}
void fftw_aligned_free(void* p) noexcept { fftw_free(p); }
}  // namespace detail

namespace {

// The FFTW planner is not reentrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

fftw_complex* as_fftw(Complex* p) { return reinterpret_cast<fftw_complex*>(p); }
fftw_complex* as_fftw(const Complex* p) {
  return reinterpret_cast<fftw_complex*>(const_cast<Complex*>(p));
}

void check_size(std::size_t got, std::size_t want) {
  if (got != want) throw std::invalid_argument("spectral transform: buffer size mismatch");
}

}  // namespace

SpectralTransform::SpectralTransform(std::size_t n) : n_(n), scale_(1.0 / std::sqrt(double(n))) {
  if (n < 2) throw std::invalid_argument("spectral transform needs at least two points");
  ComplexVector a(n), b(n);
  RealVector r(n);
  ComplexVector h(n / 2 + 1);
  const int ni = static_cast<int>(n);
  std::lock_guard lock(planner_mutex());
  plan_to_freq_ = fftw_plan_dft_1d(ni, as_fftw(a.data()), as_fftw(b.data()), FFTW_BACKWARD, FFTW_ESTIMATE);
  plan_to_time_ = fftw_plan_dft_1d(ni, as_fftw(a.data()), as_fftw(b.data()), FFTW_FORWARD, FFTW_ESTIMATE);
  plan_r2c_ = fftw_plan_dft_r2c_1d(ni, r.data(), as_fftw(h.data()), FFTW_ESTIMATE);
  plan_c2r_ = fftw_plan_dft_c2r_1d(ni, as_fftw(h.data()), r.data(), FFTW_ESTIMATE);
}

SpectralTransform::~SpectralTransform() {
  std::lock_guard lock(planner_mutex());
  for (void* p : {plan_to_freq_, plan_to_time_, plan_r2c_, plan_c2r_}) {
    if (p != nullptr) fftw_destroy_plan(static_cast<fftw_plan>(p));
  }
}

void SpectralTransform::to_frequency(std::span<const Complex> in, std::span<Complex> out) const {
  check_size(in.size(), n_);
  check_size(out.size(), n_);
  fftw_execute_dft(static_cast<fftw_plan>(plan_to_freq_), as_fftw(in.data()), as_fftw(out.data()));
  for (auto& v : out) v *= scale_;
}

void SpectralTransform::to_time(std::span<const Complex> in, std::span<Complex> out) const {
  check_size(in.size(), n_);
  check_size(out.size(), n_);
  fftw_execute_dft(static_cast<fftw_plan>(plan_to_time_), as_fftw(in.data()), as_fftw(out.data()));
  for (auto& v : out) v *= scale_;
}

void SpectralTransform::real_forward(std::span<const double> in, std::span<Complex> out) const {
  check_size(in.size(), n_);
  check_size(out.size(), n_ / 2 + 1);
  fftw_execute_dft_r2c(static_cast<fftw_plan>(plan_r2c_), const_cast<double*>(in.data()),
                       as_fftw(out.data()));
}

void SpectralTransform::real_inverse(std::span<Complex> in, std::span<double> out) const {
  check_size(in.size(), n_ / 2 + 1);
  check_size(out.size(), n_);
  fftw_execute_dft_c2r(static_cast<fftw_plan>(plan_c2r_), as_fftw(in.data()), out.data());
}

}  // namespace polsqueeze
