#include "polsqueeze/raman.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <string>

#include "polsqueeze/errors.hpp"

namespace polsqueeze {

void RamanModel::validate() const {
  if (!(fraction >= 0.0 && fraction < 1.0)) throw ParameterError("Raman fraction must lie in [0, 1)");
  if (!(tau1 > 0.0 && tau2 > 0.0)) throw ParameterError("Raman time constants must be positive");
  if (!(temperature >= 0.0)) throw ParameterError("temperature must be non-negative");
}

double raman_response(const RamanModel& m, double t) {
  if (t < 0.0) return 0.0;
  const double prefactor = (m.tau1 * m.tau1 + m.tau2 * m.tau2) / (m.tau1 * m.tau2 * m.tau2);
  return prefactor * std::exp(-t / m.tau2) * std::sin(t / m.tau1);
}

double raman_response_peak_time(const RamanModel& m) { return m.tau1 * std::atan(m.tau2 / m.tau1); }

RealVector response_kernel(const RamanModel& model, const TimeGrid& grid) {
  model.validate();
  if (grid.window < 10.0 * model.tau2) {
    throw TruncationError("window " + std::to_string(grid.window) + " s is shorter than 10 tau2");
  }
  RealVector h(grid.n_points, 0.0);
  double sum = 0.0;
  for (std::size_t j = 0; j < grid.n_points / 2; ++j) {
    h[j] = raman_response(model, static_cast<double>(j) * grid.dt);
    sum += h[j];
  }
  const double norm = 1.0 / (sum * grid.dt);
  for (auto& v : h) v *= norm;
  return h;
}

ComplexVector response_spectrum(const RealVector& kernel, const TimeGrid& grid,
                                const SpectralTransform& fft) {
  ComplexVector spec(grid.n_points / 2 + 1);
  fft.real_forward(kernel, spec);
  for (auto& v : spec) v *= grid.dt;
  return spec;
}

double thermal_occupation(double omega, double temperature) {
  if (omega == 0.0) throw ParameterError("thermal occupation diverges at zero frequency");
  if (temperature <= 0.0) return 0.0;
  const double x = constants::kHbar * std::abs(omega) / (constants::kBoltzmann * temperature);
  return 1.0 / std::expm1(x);
}

RamanNoiseSampler::RamanNoiseSampler(const RamanModel& model, const TimeGrid& grid,
                                     double gamma_flux, double dz, const SpectralTransform& fft)
    : fft_(&fft), n_(grid.n_points), density_(grid.n_points / 2 + 1, 0.0),
      amplitude_(grid.n_points / 2 + 1, 0.0) {
  const double fr = model.effective_fraction();
  if (fr == 0.0 || gamma_flux == 0.0 || dz == 0.0) return;
  active_ = true;

  const RealVector kernel = response_kernel(model, grid);
  const ComplexVector spectrum = response_spectrum(kernel, grid, fft);
  const double scale = 2.0 * fr * gamma_flux * std::abs(dz);

  for (std::size_t k = 1; k < density_.size(); ++k) {
    // Im H(-|w|) = -Im H(|w|) for a real kernel.
    const double gain_side = -spectrum[k].imag();
    const double occupation = thermal_occupation(grid.angular_frequency(k), model.temperature) + 0.5;
    double s = scale * gain_side * occupation;
    if (s < 0.0) {
      ++clipped_;
      s = 0.0;
    }
    density_[k] = s;
  }
  if (model.temperature > 0.0) {
    double mean_delay = 0.0;
    for (std::size_t j = 0; j < n_ / 2; ++j) mean_delay += static_cast<double>(j) * grid.dt * kernel[j];
    mean_delay *= grid.dt;
    density_[0] = scale * constants::kBoltzmann * model.temperature / constants::kHbar * mean_delay;
  }
  if (clipped_ > 0) {
    std::clog << "warning: Raman noise density negative in " << clipped_
              << " bins (discretization); clipped to zero\n";
  }
  const double bin_norm = 1.0 / (static_cast<double>(n_) * grid.dt);
  for (std::size_t k = 0; k < density_.size(); ++k) amplitude_[k] = std::sqrt(density_[k] * bin_norm);
}

void RamanNoiseSampler::sample(RngStream& rng, std::span<Complex> scratch, std::span<double> out) const {
  if (!active_) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  const std::size_t half = n_ / 2;
  constexpr double kInvSqrt2 = 0.70710678118654752440;
  scratch[0] = amplitude_[0] * rng.normal();
  for (std::size_t k = 1; k < half; ++k) scratch[k] = (amplitude_[k] * kInvSqrt2) * rng.complex_normal();
  scratch[half] = amplitude_[half] * rng.normal();
  fft_->real_inverse(scratch, out);
}

RealVector raman_noise_sample(const RamanModel& model, const TimeGrid& grid, double gamma_flux,
                              double dz, RngStream& rng) {
  RealVector out(grid.n_points, 0.0);
  if (!model.enabled) return out;
  SpectralTransform fft(grid.n_points);
  RamanNoiseSampler sampler(model, grid, gamma_flux, dz, fft);
  ComplexVector scratch(grid.n_points / 2 + 1);
  sampler.sample(rng, scratch, out);
  return out;
}

void write_kernel_csv(std::ostream& os, const RealVector& kernel, const TimeGrid& grid) {
  os << "t,h\n" << std::setprecision(17);
  for (std::size_t j = 0; j < grid.n_points / 2; ++j) {
    os << static_cast<double>(j) * grid.dt << ',' << kernel[j] << '\n';
  }
}

void write_noise_spectrum_csv(std::ostream& os, const RamanNoiseSampler& sampler, const TimeGrid& grid) {
  os << "omega,density\n" << std::setprecision(17);
  const auto density = sampler.spectral_density();
  for (std::size_t k = 0; k < density.size(); ++k) {
    os << grid.angular_frequency(k) << ',' << density[k] << '\n';
  }
}

}  // namespace polsqueeze
