#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>

#include "polsqueeze/field.hpp"
#include "polsqueeze/rng.hpp"
#include "polsqueeze/spectral.hpp"

namespace polsqueeze {

/// Single damped-oscillator Raman response of silica.
struct RamanModel {
  double fraction = 0.15;
  double tau1 = 12.2e-15;
  double tau2 = 32e-15;
  double temperature = 300.0;
  bool enabled = true;

  /// Fraction actually applied (zero when disabled).
  double effective_fraction() const { return enabled ? fraction : 0.0; }
  void validate() const;
};

/// Closed-form h_R(t) = (tau1^2 + tau2^2)/(tau1 tau2^2) exp(-t/tau2) sin(t/tau1)
/// for t >= 0, zero before.
double raman_response(const RamanModel& model, double t);

/// Delay of the response maximum: tau1 * atan(tau2 / tau1).
double raman_response_peak_time(const RamanModel& model);

/// Discrete causal kernel on the grid. Element j holds h_R(j dt) for
/// j < n/2 and zero for the upper half (negative delays, circular layout).
/// Normalized so that sum h dt = 1. Throws TruncationError when the window
/// is shorter than 10 tau2.
RealVector response_kernel(const RamanModel& model, const TimeGrid& grid);

/// H(w_k) = sum_j h_j exp(-i w_k t_j) dt for the n/2 + 1 non-negative bins.
/// In this convention Im H is odd and positive for w < 0: the Stokes
/// (red-detuned) side sees gain.
ComplexVector response_spectrum(const RealVector& kernel, const TimeGrid& grid,
                                const SpectralTransform& fft);

/// Bose occupation 1/(exp(hbar|w|/kT) - 1); zero at T = 0.
/// Throws ParameterError for w = 0.
double thermal_occupation(double omega, double temperature);

/// Draws the real multiplicative phase-noise increment of one propagation
/// step. Its two-sided power spectral density is
///
///   S(w) = 2 f_R gamma_flux dz Im H(-|w|) (n_th(|w|) + 1/2),
///
/// the symmetrized fluctuation-dissipation partner of the delayed Kerr
/// response, so that <Gamma(t) Gamma(t')> = (1/(n dt)) sum_k S_k exp(i w_k (t - t')).
/// The zero-frequency bin takes the finite classical limit
/// 2 f_R gamma_flux dz (kT/hbar) sum t h(t) dt.
class RamanNoiseSampler {
 public:
  RamanNoiseSampler(const RamanModel& model, const TimeGrid& grid, double gamma_flux, double dz,
                    const SpectralTransform& fft);

  /// S_k for the n/2 + 1 non-negative bins.
  std::span<const double> spectral_density() const { return density_; }
  /// Bins whose density came out negative and were clipped to zero.
  std::size_t clipped_bins() const { return clipped_; }
  bool active() const { return active_; }

  /// Fill `out` (length n) with one sample. `scratch` must hold n/2 + 1 bins.
  void sample(RngStream& rng, std::span<Complex> scratch, std::span<double> out) const;

 private:
  const SpectralTransform* fft_;
  std::size_t n_;
  RealVector density_;
  RealVector amplitude_;
  std::size_t clipped_ = 0;
  bool active_ = false;
};

/// Convenience wrapper: one noise sample for the given step, or zeros when
/// the model is disabled.
RealVector raman_noise_sample(const RamanModel& model, const TimeGrid& grid, double gamma_flux,
                              double dz, RngStream& rng);

/// Two-column CSV dumps for inspection.
void write_kernel_csv(std::ostream& os, const RealVector& kernel, const TimeGrid& grid);
void write_noise_spectrum_csv(std::ostream& os, const RamanNoiseSampler& sampler, const TimeGrid& grid);

}  // namespace polsqueeze
