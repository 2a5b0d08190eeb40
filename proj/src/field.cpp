#include "polsqueeze/field.hpp"

#include <bit>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <string>

#include "polsqueeze/errors.hpp"

namespace polsqueeze {

double TimeGrid::frequency_step() const { return 2.0 * constants::kPi / window; }

double TimeGrid::angular_frequency(std::size_t k) const {
  const auto kk = static_cast<double>(k);
  const auto n = static_cast<double>(n_points);
  return frequency_step() * (k < n_points / 2 ? kk : kk - n);
}

TimeGrid make_grid(std::size_t n_points, double window) {
  if (n_points < 64 || !std::has_single_bit(n_points)) {
    throw ParameterError("grid size must be a power of two >= 64, got " + std::to_string(n_points));
  }
  if (!(window > 0.0)) throw ParameterError("time window must be positive");
  return TimeGrid{n_points, window, window / static_cast<double>(n_points)};
}

double photon_number(std::span<const Complex> pol, double dt) {
  double sum = 0.0;
  for (const auto& v : pol) sum += std::norm(v);
  return sum * dt;
}

double total_photon_number(const FieldState& state) {
  return photon_number(state.pol_x, state.grid.dt) + photon_number(state.pol_y, state.grid.dt);
}

void EnsembleConfig::validate() const {
  if (n_trajectories < 1) throw ParameterError("ensemble needs at least one trajectory");
}

double sech_peak_flux(double photons, double t0) { return photons / (2.0 * t0); }

FieldState init_coherent_sech(const ExperimentSpec& spec, const TimeGrid& grid) {
  spec.pulse.validate();
  const double t0 = sech_width(spec.pulse.fwhm_duration);
  if (grid.window < kMinWindowInT0 * t0) {
    throw TruncationError("time window " + std::to_string(grid.window) + " s is shorter than 16 t0 = " +
                          std::to_string(kMinWindowInT0 * t0) + " s");
  }
  const double photons = spec.pulse.energy_per_polarization() / photon_energy(spec.pulse.center_wavelength);
  const double amplitude = std::sqrt(sech_peak_flux(photons, t0));

  FieldState state(grid);
  for (std::size_t j = 0; j < grid.n_points; ++j) {
    const double v = amplitude / std::cosh(grid.time(j) / t0);
    state.pol_x[j] = v;
    state.pol_y[j] = v;
  }
  return state;
}

void add_vacuum_noise(FieldState& state, RngStream& rng) {
  const double sigma = std::sqrt(1.0 / (4.0 * state.grid.dt));
  for (auto* pol : {&state.pol_x, &state.pol_y}) {
    for (auto& v : *pol) v += sigma * rng.complex_normal();
  }
}

void write_field_csv(std::ostream& os, const FieldState& state) {
  os << "t,re_x,im_x,re_y,im_y\n" << std::setprecision(17);
  for (std::size_t j = 0; j < state.grid.n_points; ++j) {
    os << state.grid.time(j) << ',' << state.pol_x[j].real() << ',' << state.pol_x[j].imag() << ','
       << state.pol_y[j].real() << ',' << state.pol_y[j].imag() << '\n';
  }
}

}  // namespace polsqueeze
