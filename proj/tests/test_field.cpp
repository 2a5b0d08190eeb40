#include <doctest.h>

#include <cmath>
#include <sstream>

#include "polsqueeze/errors.hpp"
#include "polsqueeze/field.hpp"
#include "polsqueeze/propagation.hpp"

using namespace polsqueeze;

namespace {

ComplexVector random_field(std::size_t n, std::uint64_t seed) {
  RngStream r(seed, 0, StreamPurpose::kTest);
  ComplexVector v(n);
  for (auto& x : v) x = r.complex_normal();
  return v;
}

double l2(std::span<const Complex> v) {
  double s = 0.0;
  for (const auto& x : v) s += std::norm(x);
  return std::sqrt(s);
}

// Direct O(n^2) DFT in the envelope convention U_k = n^{-1/2} sum_j u_j e^{+i w_k t_j}.
ComplexVector naive_to_frequency(const ComplexVector& u) {
  const std::size_t n = u.size();
  ComplexVector out(n);
  for (std::size_t k = 0; k < n; ++k) {
    Complex acc = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      acc += u[j] * std::polar(1.0, 2.0 * 3.14159265358979323846 * static_cast<double>(k * j % n) / n);
    out[k] = acc / std::sqrt(static_cast<double>(n));
  }
  return out;
}

}  // namespace

TEST_CASE("grid construction") {
  const TimeGrid g = make_grid(4096, 10e-12);
  CHECK(g.dt == doctest::Approx(2.44140625e-15).epsilon(1e-14));
  CHECK(g.time(2048) == 0.0);
  CHECK(g.angular_frequency(1) == doctest::Approx(2.0 * 3.14159265358979323846 / 10e-12).epsilon(1e-14));
  CHECK(g.angular_frequency(4095) == doctest::Approx(-g.angular_frequency(1)).epsilon(1e-14));
  CHECK_THROWS_AS(make_grid(100, 10e-12), ParameterError);
  CHECK_THROWS_AS(make_grid(32, 10e-12), ParameterError);
  CHECK_THROWS_AS(make_grid(1024, 0.0), ParameterError);
}

TEST_CASE("spectral transform is unitary and matches a direct DFT") {
  for (std::size_t n : {64u, 1024u, 4096u}) {
    SpectralTransform fft(n);
    const ComplexVector u = random_field(n, n);
    ComplexVector spec(n), back(n);
    fft.to_frequency(u, spec);
    fft.to_time(spec, back);
    ComplexVector diff(n);
    for (std::size_t j = 0; j < n; ++j) diff[j] = back[j] - u[j];
    CHECK(l2(diff) / l2(u) < 1e-12);
    CHECK(std::abs(l2(spec) / l2(u) - 1.0) < 1e-10);
  }
  SpectralTransform fft(64);
  const ComplexVector u = random_field(64, 3);
  ComplexVector spec(64);
  fft.to_frequency(u, spec);
  const ComplexVector ref = naive_to_frequency(u);
  ComplexVector diff(64);
  for (std::size_t k = 0; k < 64; ++k) diff[k] = spec[k] - ref[k];
  CHECK(l2(diff) / l2(ref) < 1e-12);
}

TEST_CASE("positive frequency is a blue detuning") {
  // u(t) = exp(-i w1 t) should land in bin 1.
  const TimeGrid g = make_grid(64, 1e-12);
  ComplexVector u(64), spec(64);
  for (std::size_t j = 0; j < 64; ++j) u[j] = std::polar(1.0, -g.angular_frequency(1) * g.time(j));
  SpectralTransform(64).to_frequency(u, spec);
  CHECK(std::abs(spec[1]) == doctest::Approx(8.0).epsilon(1e-12));
  CHECK(std::abs(spec[63]) < 1e-10);
}

TEST_CASE("coherent sech pulse") {
  ExperimentSpec spec;
  const TimeGrid g = make_grid(4096, 10e-12);

  spec.pulse.total_energy = 117.4e-12;
  const FieldState s = init_coherent_sech(spec, g);
  const double expected = 58.7e-12 / photon_energy(1499.5e-9);
  CHECK(photon_number(s.pol_x, g.dt) == doctest::Approx(expected).epsilon(1e-9));
  CHECK(photon_number(s.pol_y, g.dt) == doctest::Approx(expected).epsilon(1e-9));
  CHECK(photon_number(s.pol_x, g.dt) == doctest::Approx(4.43e8).epsilon(3e-3));

  ExperimentSpec doubled = spec;
  doubled.pulse.total_energy *= 2.0;
  const FieldState d = init_coherent_sech(doubled, g);
  CHECK(photon_number(d.pol_x, g.dt) / photon_number(s.pol_x, g.dt) == doctest::Approx(2.0).epsilon(1e-14));

  spec.pulse.total_energy = 0.0;
  const FieldState z = init_coherent_sech(spec, g);
  for (std::size_t j = 0; j < g.n_points; ++j) {
    CHECK(z.pol_x[j] == Complex(0.0, 0.0));
    CHECK(z.pol_y[j] == Complex(0.0, 0.0));
  }
}

TEST_CASE("window shorter than 16 t0 is rejected") {
  ExperimentSpec spec;
  const double t0 = sech_width(spec.pulse.fwhm_duration);
  CHECK_THROWS_AS(init_coherent_sech(spec, make_grid(256, 15.0 * t0)), TruncationError);
  CHECK_NOTHROW(init_coherent_sech(spec, make_grid(256, 16.5 * t0)));
}

TEST_CASE("Parseval between time and frequency photon numbers") {
  ExperimentSpec spec;
  const TimeGrid g = make_grid(4096, 10e-12);
  FieldState s = init_coherent_sech(spec, g);
  RngStream r(1, 0);
  add_vacuum_noise(s, r);
  ComplexVector spectrum(g.n_points);
  SpectralTransform(g.n_points).to_frequency(s.pol_x, spectrum);
  CHECK(std::abs(photon_number(spectrum, g.dt) / photon_number(s.pol_x, g.dt) - 1.0) < 1e-10);
}

TEST_CASE("vacuum noise statistics") {
  constexpr std::size_t n_traj = 10000;
  const TimeGrid g = make_grid(64, 1e-12);
  ExperimentSpec spec;
  spec.pulse.fwhm_duration = 20e-15;
  const FieldState coherent = init_coherent_sech(spec, g);
  EnsembleConfig ens;
  ens.n_trajectories = n_traj;
  PropagationModel model;

  const double sigma2 = 1.0 / (4.0 * g.dt);
  std::vector<double> s1(4 * g.n_points, 0.0), s2(4 * g.n_points, 0.0);
  double excess = 0.0;
  for (std::size_t i = 0; i < n_traj; ++i) {
    const FieldState s = initial_state(coherent, ens, model, i);
    for (std::size_t j = 0; j < g.n_points; ++j) {
      const Complex dx = s.pol_x[j] - coherent.pol_x[j];
      const Complex dy = s.pol_y[j] - coherent.pol_y[j];
      const double parts[4] = {dx.real(), dx.imag(), dy.real(), dy.imag()};
      for (int p = 0; p < 4; ++p) {
        s1[4 * j + p] += parts[p];
        s2[4 * j + p] += parts[p] * parts[p];
      }
    }
    excess += photon_number(s.pol_x, g.dt) - photon_number(coherent.pol_x, g.dt);
  }

  const double n = static_cast<double>(n_traj);
  const double var_sd = sigma2 * std::sqrt(2.0 / (n - 1.0));
  for (std::size_t b = 0; b < s1.size(); ++b) {
    const double mean = s1[b] / n;
    const double var = (s2[b] - n * mean * mean) / (n - 1.0);
    CHECK(std::abs(mean) < 5.0 * std::sqrt(sigma2 / n));
    CHECK(std::abs(var - sigma2) < 4.0 * var_sd);
  }
  // Half a photon per mode; the excess per trajectory has sd sqrt(n/4 + 2 N_coh dt sigma2).
  const double photons = photon_number(coherent.pol_x, g.dt);
  const double excess_sd = std::sqrt(g.n_points / 4.0 + photons) / std::sqrt(n);
  CHECK(std::abs(excess / n - 0.5 * g.n_points) < 5.0 * excess_sd);
}

TEST_CASE("noise disabled leaves the coherent state untouched") {
  ExperimentSpec spec;
  const TimeGrid g = make_grid(2048, 5e-12);
  const FieldState coherent = init_coherent_sech(spec, g);
  EnsembleConfig ens;
  ens.noise_enabled = false;
  const FieldState s = initial_state(coherent, ens, PropagationModel{}, 17);
  for (std::size_t j = 0; j < g.n_points; ++j) CHECK(s.pol_x[j] == coherent.pol_x[j]);
}

TEST_CASE("field CSV layout") {
  const TimeGrid g = make_grid(64, 1e-12);
  FieldState s(g);
  s.pol_x[0] = Complex(1.5, -2.0);
  std::ostringstream os;
  write_field_csv(os, s);
  std::istringstream is(os.str());
  std::string header, first;
  std::getline(is, header);
  std::getline(is, first);
  CHECK(header == "t,re_x,im_x,re_y,im_y");
  CHECK(first.find(",1.5,-2,0,0") != std::string::npos);
}
