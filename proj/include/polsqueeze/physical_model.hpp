#pragma once

#include <optional>

namespace polsqueeze {

namespace constants {
// CODATA values, six significant digits. hbar is derived from h rather
// than rounded on its own, so h c / lambda and hbar omega agree exactly.
inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kPlanck = 6.62607e-34;          // J s
inline constexpr double kHbar = kPlanck / (2.0 * kPi);  // J s
inline constexpr double kSpeedOfLight = 2.99792e8;      // m/s
inline constexpr double kBoltzmann = 1.38065e-23;       // J/K
}  // namespace constants

/// Birefringent fiber. All quantities SI: beta2 in s^2/m, beta3 in s^3/m,
/// attenuation in dB/km.
struct FiberSpec {
  double length = 13.2;
  double beta2 = -11.1e-27;
  double beta3 = 83.8e-42;
  double n2 = 2.9e-20;
  double core_diameter = 5.7e-6;
  double attenuation_db_per_km = 2.03;
  std::optional<double> effective_area_override;

  /// Geometric core area unless an override is set.
  double effective_area() const;
  void validate() const;
};

enum class PulseShape { kSech };

/// Input pulse. `total_energy` is the sum over both polarizations; each
/// polarization carries exactly half.
struct PulseSpec {
  double center_wavelength = 1499.5e-9;
  double fwhm_duration = 140e-15;
  double total_energy = 98.6e-12;
  PulseShape shape = PulseShape::kSech;

  double energy_per_polarization() const { return 0.5 * total_energy; }
  void validate() const;
};

struct DetectionSpec {
  double total_transmittance = 0.87;
  double electronic_noise_floor_dbm = -85.1;
  double gawbs_coefficient = 0.0;  // rad^2 per joule of per-polarization energy

  void validate() const;
};

/// Scales derived from fiber and pulse. Soliton fields are only meaningful
/// when `soliton_defined` is set (anomalous dispersion).
struct DerivedScales {
  double gamma = 0.0;               // 1/(W m)
  double t0 = 0.0;                  // sech width parameter, s
  double peak_power = 0.0;          // W, per polarization
  double soliton_order = 0.0;
  double soliton_energy_per_pol = 0.0;  // J
  double photon_energy = 0.0;       // J
  double photons_per_pulse = 0.0;   // per polarization
  double dispersion_length = 0.0;   // m
  bool soliton_defined = false;
};

struct ExperimentSpec {
  FiberSpec fiber;
  PulseSpec pulse;
  DetectionSpec detection;

  void validate() const;
};

double effective_area(double core_diameter);
double nonlinear_coefficient(const FiberSpec& fiber, double wavelength);

/// FWHM to sech width: t0 = FWHM / (2 ln(1 + sqrt 2)).
double sech_width(double fwhm);
double photon_energy(double wavelength);

DerivedScales derive_scales(const FiberSpec& fiber, const PulseSpec& pulse);

/// Inverse of the peak-power part of derive_scales: total (two-polarization)
/// energy of a sech pulse with the given per-polarization peak power.
double energy_from_scales(const DerivedScales& scales);

/// Total energy (both polarizations) that makes each polarization an N = 1
/// soliton. Requires beta2 < 0.
double fundamental_soliton_total_energy(const FiberSpec& fiber, const PulseSpec& pulse);

/// Power transmission of the full fiber length from its dB/km attenuation.
double fiber_power_transmission(const FiberSpec& fiber);

}  // namespace polsqueeze
