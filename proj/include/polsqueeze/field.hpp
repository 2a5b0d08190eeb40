#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>

#include "polsqueeze/physical_model.hpp"
#include "polsqueeze/rng.hpp"
#include "polsqueeze/spectral.hpp"

namespace polsqueeze {

/// Uniform time grid centered on t = 0, with the standard DFT frequency
/// ordering (zero frequency at bin 0, negative frequencies in the upper half).
struct TimeGrid {
  std::size_t n_points = 0;
  double window = 0.0;
  double dt = 0.0;

  double time(std::size_t j) const {
    return (static_cast<double>(j) - 0.5 * static_cast<double>(n_points)) * dt;
  }
  double angular_frequency(std::size_t k) const;
  double frequency_step() const;  // rad/s between bins

  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;
};

TimeGrid make_grid(std::size_t n_points, double window);

/// Default grid: 4096 points over 10 ps.
inline constexpr std::size_t kDefaultGridPoints = 4096;
inline constexpr double kDefaultWindow = 10e-12;

/// Window must hold at least this many sech widths.
inline constexpr double kMinWindowInT0 = 16.0;

/// Two polarization envelopes in photon-flux units: |u(t)|^2 dt is the
/// photon number in a bin.
struct FieldState {
  TimeGrid grid;
  ComplexVector pol_x;
  ComplexVector pol_y;

  explicit FieldState(const TimeGrid& g) : grid(g), pol_x(g.n_points), pol_y(g.n_points) {}
};

double photon_number(std::span<const Complex> pol, double dt);
double total_photon_number(const FieldState& state);

struct EnsembleConfig {
  std::size_t n_trajectories = 1000;
  std::uint64_t master_seed = 1;
  bool noise_enabled = true;

  void validate() const;
};

/// Photon flux amplitude of a sech pulse carrying `photons` photons:
/// |u|^2 = photons / (2 t0) at the peak.
double sech_peak_flux(double photons, double t0);

/// Equal coherent sech pulses on both polarizations, zero relative phase.
/// Throws TruncationError when the window is shorter than 16 t0.
FieldState init_coherent_sech(const ExperimentSpec& spec, const TimeGrid& grid);

/// Symmetric-ordering vacuum noise: Var(Re u) = Var(Im u) = 1/(4 dt) in
/// every bin of both polarizations, drawn x-bins first then y-bins.
void add_vacuum_noise(FieldState& state, RngStream& rng);

/// CSV record: t,re_x,im_x,re_y,im_y with a header line.
void write_field_csv(std::ostream& os, const FieldState& state);

}  // namespace polsqueeze
