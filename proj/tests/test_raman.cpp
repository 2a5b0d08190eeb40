#include <doctest.h>

#include <cmath>
#include <vector>

#include "polsqueeze/errors.hpp"
#include "polsqueeze/propagation.hpp"
#include "polsqueeze/raman.hpp"

using namespace polsqueeze;

namespace {

const TimeGrid kGrid = make_grid(1024, 5e-12);
constexpr double kGammaFlux = 1e-21;
constexpr double kDz = 13.2 / 1500.0;

}  // namespace

TEST_CASE("kernel normalization and causality") {
  RamanModel m;
  const RealVector h = response_kernel(m, kGrid);
  double sum = 0.0;
  for (double v : h) sum += v;
  CHECK(std::abs(sum * kGrid.dt - 1.0) < 1e-6);
  CHECK(h[0] == 0.0);
  for (std::size_t j = kGrid.n_points / 2; j < kGrid.n_points; ++j) CHECK(h[j] == 0.0);
  CHECK(raman_response(m, -1e-15) == 0.0);
  CHECK_THROWS_AS(response_kernel(m, make_grid(64, 200e-15)), TruncationError);
}

TEST_CASE("response peak against brute-force maximization") {
  RamanModel m;
  double best_t = 0.0, best = -1.0;
  for (int i = 0; i <= 200000; ++i) {
    const double t = i * 1e-19;
    const double v = raman_response(m, t);
    if (v > best) {
      best = v;
      best_t = t;
    }
  }
  CHECK(raman_response_peak_time(m) == doctest::Approx(best_t).epsilon(1e-4));
}

TEST_CASE("thermal occupation") {
  const double kT = constants::kBoltzmann * 300.0;
  const double w = kT / constants::kHbar;
  CHECK(thermal_occupation(w, 300.0) == doctest::Approx(1.0 / (std::exp(1.0) - 1.0)).epsilon(1e-12));
  CHECK(thermal_occupation(w, 300.0) == doctest::Approx(0.5820).epsilon(1e-4));
  CHECK(thermal_occupation(-w, 300.0) == thermal_occupation(w, 300.0));
  CHECK(thermal_occupation(1e13, 0.0) == 0.0);
  CHECK_THROWS_AS(thermal_occupation(0.0, 300.0), ParameterError);
  double prev = thermal_occupation(1e11, 300.0);
  for (double x = 2e11; x < 1e15; x *= 1.5) {
    const double v = thermal_occupation(x, 300.0);
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("Im H is negative on the blue side and peaks near 13 THz") {
  RamanModel m;
  SpectralTransform fft(kGrid.n_points);
  const ComplexVector H = response_spectrum(response_kernel(m, kGrid), kGrid, fft);
  CHECK(H[0].real() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(H[0].imag()) < 1e-14);
  std::size_t peak = 1;
  for (std::size_t k = 1; k < H.size(); ++k) {
    if (k > 0 && k + 1 < H.size() && kGrid.angular_frequency(k) < 2.0 * constants::kPi * 60e12) CHECK(H[k].imag() < 0.0);
    if (-H[k].imag() > -H[peak].imag()) peak = k;
  }
  const double f_peak = kGrid.angular_frequency(peak) / (2.0 * constants::kPi);
  CHECK(f_peak > 11e12);
  CHECK(f_peak < 15e12);
}

TEST_CASE("noise density scales with dz and fraction and keeps vacuum noise at T = 0") {
  RamanModel m;
  SpectralTransform fft(kGrid.n_points);
  const RamanNoiseSampler base(m, kGrid, kGammaFlux, kDz, fft);
  const RamanNoiseSampler twice_dz(m, kGrid, kGammaFlux, 2.0 * kDz, fft);
  RamanModel m2 = m;
  m2.fraction = 0.3;
  const RamanNoiseSampler twice_fr(m2, kGrid, kGammaFlux, kDz, fft);
  RamanModel cold = m;
  cold.temperature = 0.0;
  const RamanNoiseSampler zero_t(cold, kGrid, kGammaFlux, kDz, fft);
  const ComplexVector H = response_spectrum(response_kernel(m, kGrid), kGrid, fft);

  const auto d = base.spectral_density();
  for (std::size_t k = 0; k < d.size(); ++k) {
    CHECK(twice_dz.spectral_density()[k] == doctest::Approx(2.0 * d[k]).epsilon(1e-12));
    CHECK(twice_fr.spectral_density()[k] == doctest::Approx(2.0 * d[k]).epsilon(1e-12));
    if (k > 0 && -H[k].imag() > 0.0) CHECK(zero_t.spectral_density()[k] > 0.0);
    CHECK(zero_t.spectral_density()[k] <= d[k]);
  }
}

TEST_CASE("disabled model gives a zero sample") {
  RamanModel m;
  m.enabled = false;
  RngStream r(1, 0, StreamPurpose::kRamanNoise);
  const RealVector s = raman_noise_sample(m, kGrid, kGammaFlux, kDz, r);
  for (double v : s) CHECK(v == 0.0);
}

TEST_CASE("sampled noise reproduces its spectral density") {
  constexpr int n_samples = 10000;
  RamanModel m;
  SpectralTransform fft(kGrid.n_points);
  const RamanNoiseSampler sampler(m, kGrid, kGammaFlux, kDz, fft);
  REQUIRE(sampler.active());
  const std::size_t half = kGrid.n_points / 2 + 1;

  ComplexVector scratch(half), G(half);
  RealVector sample(kGrid.n_points);
  std::vector<double> power(half, 0.0);
  double mean0 = 0.0, var0 = 0.0;
  RngStream r(11, 0, StreamPurpose::kRamanNoise);
  for (int i = 0; i < n_samples; ++i) {
    sampler.sample(r, scratch, sample);
    mean0 += sample[0];
    var0 += sample[0] * sample[0];
    fft.real_forward(sample, G);
    for (std::size_t k = 0; k < half; ++k) power[k] += std::norm(G[k]);
  }

  // Periodogram normalization: E|G_k|^2 = n S_k / dt.
  const auto S = sampler.spectral_density();
  double sq = 0.0;
  std::size_t used = 0;
  for (std::size_t k = 0; k < half; ++k) {
    if (S[k] <= 0.0) continue;
    const double est = power[k] / n_samples * kGrid.dt / static_cast<double>(kGrid.n_points);
    sq += std::pow(est / S[k] - 1.0, 2);
    ++used;
  }
  CHECK(used > half / 2);
  CHECK(std::sqrt(sq / static_cast<double>(used)) < 0.05);

  // Point variance: (1/(n dt)) sum over all n bins of the two-sided density.
  double expected_var = S[0] + S[half - 1];
  for (std::size_t k = 1; k + 1 < half; ++k) expected_var += 2.0 * S[k];
  expected_var /= static_cast<double>(kGrid.n_points) * kGrid.dt;
  mean0 /= n_samples;
  var0 = var0 / n_samples - mean0 * mean0;
  CHECK(std::abs(mean0) < 5.0 * std::sqrt(expected_var / n_samples));
  CHECK(std::abs(var0 / expected_var - 1.0) < 5.0 * std::sqrt(2.0 / n_samples));
}

TEST_CASE("Raman noise power is small next to vacuum noise on the default grid") {
  // Sanity bound on the magnitude: per-step phase noise at the default step
  // is far below one radian.
  ExperimentSpec spec;
  RamanModel m;
  SpectralTransform fft(kGrid.n_points);
  const RamanNoiseSampler sampler(m, kGrid, flux_nonlinear_coefficient(spec), kDz, fft);
  const auto S = sampler.spectral_density();
  double var = 0.0;
  for (std::size_t k = 0; k < S.size(); ++k) var += (k == 0 || k + 1 == S.size() ? 1.0 : 2.0) * S[k];
  var /= static_cast<double>(kGrid.n_points) * kGrid.dt;
  CHECK(std::sqrt(var) < 0.1);
  CHECK(sampler.clipped_bins() < kGrid.n_points / 8);
}
