#include "polsqueeze/physical_model.hpp"

#include <cmath>
#include <string>

#include "polsqueeze/errors.hpp"

namespace polsqueeze {

using constants::kPi;

double effective_area(double core_diameter) {
  if (!(core_diameter > 0.0)) {
    throw ParameterError("core diameter must be positive, got " + std::to_string(core_diameter));
  }
  const double r = 0.5 * core_diameter;
  return kPi * r * r;
}

double FiberSpec::effective_area() const {
  if (effective_area_override) return *effective_area_override;
  return polsqueeze::effective_area(core_diameter);
}

void FiberSpec::validate() const {
  if (!(length > 0.0)) throw ParameterError("fiber length must be positive");
  if (!(attenuation_db_per_km >= 0.0)) throw ParameterError("attenuation must be non-negative");
  if (!(n2 >= 0.0)) throw ParameterError("n2 must be non-negative");
  if (effective_area_override && !(*effective_area_override > 0.0)) {
    throw ParameterError("effective area override must be positive");
  }
  if (!(effective_area() > 0.0)) throw ParameterError("effective area must be positive");
}

void PulseSpec::validate() const {
  if (!(center_wavelength > 0.0)) throw ParameterError("center wavelength must be positive");
  if (!(fwhm_duration > 0.0)) throw ParameterError("FWHM duration must be positive");
  if (!(total_energy >= 0.0)) throw ParameterError("pulse energy must be non-negative");
}

void DetectionSpec::validate() const {
  if (!(total_transmittance > 0.0 && total_transmittance <= 1.0)) {
    throw ParameterError("total transmittance must lie in (0, 1], got " +
                         std::to_string(total_transmittance));
  }
  if (!(gawbs_coefficient >= 0.0)) throw ParameterError("GAWBS coefficient must be non-negative");
}

void ExperimentSpec::validate() const {
  fiber.validate();
  pulse.validate();
  detection.validate();
}

double nonlinear_coefficient(const FiberSpec& fiber, double wavelength) {
  const double area = fiber.effective_area();
  if (!(wavelength > 0.0) || !(area > 0.0) || !(fiber.n2 >= 0.0)) {
    throw ParameterError("nonlinear coefficient needs positive wavelength and area");
  }
  return 2.0 * kPi * fiber.n2 / (wavelength * area);
}

double sech_width(double fwhm) { return fwhm / (2.0 * std::log(1.0 + std::sqrt(2.0))); }

double photon_energy(double wavelength) {
  return constants::kPlanck * constants::kSpeedOfLight / wavelength;
}

DerivedScales derive_scales(const FiberSpec& fiber, const PulseSpec& pulse) {
  fiber.validate();
  pulse.validate();
  DerivedScales s;
  s.gamma = nonlinear_coefficient(fiber, pulse.center_wavelength);
  s.t0 = sech_width(pulse.fwhm_duration);
  // |sech|^2 integrates to 2 t0.
  s.peak_power = pulse.energy_per_polarization() / (2.0 * s.t0);
  s.photon_energy = photon_energy(pulse.center_wavelength);
  s.photons_per_pulse = pulse.energy_per_polarization() / s.photon_energy;

  if (fiber.beta2 < 0.0) {
    const double b2 = std::abs(fiber.beta2);
    s.soliton_defined = true;
    s.dispersion_length = s.t0 * s.t0 / b2;
    s.soliton_order = std::sqrt(s.gamma * s.peak_power * s.t0 * s.t0 / b2);
    s.soliton_energy_per_pol = s.gamma > 0.0 ? 2.0 * b2 / (s.gamma * s.t0) : 0.0;
  }
  return s;
}

double energy_from_scales(const DerivedScales& scales) {
  return 2.0 * (2.0 * scales.t0 * scales.peak_power);
}

double fundamental_soliton_total_energy(const FiberSpec& fiber, const PulseSpec& pulse) {
  const DerivedScales s = derive_scales(fiber, pulse);
  if (!s.soliton_defined) throw ParameterError("soliton energy undefined for beta2 >= 0");
  if (!(s.gamma > 0.0)) throw ParameterError("soliton energy undefined for a linear fiber");
  return 2.0 * s.soliton_energy_per_pol;
}

double fiber_power_transmission(const FiberSpec& fiber) {
  const double loss_db = fiber.attenuation_db_per_km * fiber.length * 1e-3;
  return std::pow(10.0, -loss_db / 10.0);
}

}  // namespace polsqueeze
