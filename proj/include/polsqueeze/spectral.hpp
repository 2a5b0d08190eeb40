#pragma once

#include <complex>
#include <cstddef>
#include <new>
#include <span>
#include <vector>

namespace polsqueeze {

namespace detail {
void* fftw_aligned_alloc(std::size_t bytes);
void fftw_aligned_free(void* p) noexcept;
}  // namespace detail

/// Allocator returning FFTW-aligned storage, so any buffer can be handed to
/// a shared plan through the new-array execute interface.
template <class T>
struct FftwAllocator {
  using value_type = T;
  FftwAllocator() = default;
  template <class U>
  FftwAllocator(const FftwAllocator<U>&) noexcept {}
  T* allocate(std::size_t n) {
    return static_cast<T*>(detail::fftw_aligned_alloc(n * sizeof(T)));
  }
  void deallocate(T* p, std::size_t) noexcept { detail::fftw_aligned_free(p); }
  friend bool operator==(const FftwAllocator&, const FftwAllocator&) { return true; }
};

using Complex = std::complex<double>;
using ComplexVector = std::vector<Complex, FftwAllocator<Complex>>;
using RealVector = std::vector<double, FftwAllocator<double>>;

/// Unitary discrete Fourier pair on n points.
///
/// Envelope convention: u(t_j) = n^{-1/2} sum_k U(w_k) exp(-i w_k t_j), so a
/// positive w_k is a blue detuning from the carrier. `to_frequency` and
/// `to_time` are exact inverses, and both preserve the l2 norm.
///
/// Real-input transforms (`real_forward`, `real_inverse`) are unnormalized
/// r2c / c2r pairs used for convolutions and real noise fields; their
/// kernel is exp(-i w_k t_j) forward and exp(+i w_k t_j) inverse, with the
/// inverse carrying no 1/n factor.
///
/// Input and output buffers must not alias. Plans are created once (FFTW_ESTIMATE, which is deterministic) and are
/// safe to execute concurrently from multiple threads.
class SpectralTransform {
 public:
  explicit SpectralTransform(std::size_t n);
  ~SpectralTransform();
  SpectralTransform(const SpectralTransform&) = delete;
  SpectralTransform& operator=(const SpectralTransform&) = delete;

  std::size_t size() const { return n_; }

  void to_frequency(std::span<const Complex> in, std::span<Complex> out) const;
  void to_time(std::span<const Complex> in, std::span<Complex> out) const;

  /// r2c: out has n/2 + 1 bins.
  void real_forward(std::span<const double> in, std::span<Complex> out) const;
  /// c2r: in has n/2 + 1 bins and is clobbered.
  void real_inverse(std::span<Complex> in, std::span<double> out) const;

 private:
  std::size_t n_;
  double scale_;
  void* plan_to_freq_ = nullptr;
  void* plan_to_time_ = nullptr;
  void* plan_r2c_ = nullptr;
  void* plan_c2r_ = nullptr;
};

}  // namespace polsqueeze
