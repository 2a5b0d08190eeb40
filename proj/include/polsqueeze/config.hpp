#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "polsqueeze/field.hpp"
#include "polsqueeze/physical_model.hpp"
#include "polsqueeze/propagation.hpp"

namespace polsqueeze {

/// How the 2.03 dB/km fiber attenuation is accounted for.
enum class LossConvention {
  kLumped,       // folded into the detection transmittance; no in-fiber loss
  kDistributed,  // applied in the propagation; removed from the lumped eta
};

struct RunConfig {
  ExperimentSpec experiment;
  PropagationModel model;
  StepperConfig stepper;
  EnsembleConfig ensemble;
  LossConvention loss_convention = LossConvention::kLumped;
  std::size_t grid_points = kDefaultGridPoints;
  double window = kDefaultWindow;
  std::size_t reference_trajectories = 10000;
  std::vector<double> energies;  // J, total over both polarizations
  std::size_t theta_points = 720;
  std::string output_directory = "out";
  std::optional<std::string> comparison_data;
  unsigned threads = 1;

  TimeGrid grid() const { return make_grid(grid_points, window); }
  /// Transmittance applied as lumped loss after propagation.
  double lumped_transmittance() const;
  /// Throws ConfigError describing the first violated rule.
  void validate() const;
};

/// Quantity kinds accepted in config values ("140 fs", "13.2 m", ...).
enum class Dimension {
  kDimensionless,
  kLength,
  kTime,
  kEnergy,
  kArea,
  kGroupVelocityDispersion,  // s^2/m
  kThirdOrderDispersion,     // s^3/m
  kAttenuation,              // dB/km
  kTemperature,
  kPowerDbm,
  kNonlinearIndex,           // m^2/W
  kGawbs,                    // rad^2/J
};

/// Parse "<number> [unit]" into SI. A bare number is taken as SI.
double parse_quantity(const std::string& text, Dimension dimension);

/// `count` logarithmically spaced energies between lo and hi inclusive.
std::vector<double> log_spaced_energies(double lo, double hi, std::size_t count);

inline constexpr double kSweepMinEnergy = 3.5e-12;
inline constexpr double kSweepMaxEnergy = 178.8e-12;
inline constexpr std::size_t kSweepDefaultPoints = 12;

RunConfig default_run_config();

/// Parse a YAML document; `overrides` are "section.key=value" strings
/// applied on top of the document before interpretation.
RunConfig parse_run_config(const std::string& yaml_text, const std::vector<std::string>& overrides = {});
RunConfig load_run_config(const std::string& path, const std::vector<std::string>& overrides = {});

/// Fully resolved configuration in SI units, for manifests.
nlohmann::json to_json(const RunConfig& config);

}  // namespace polsqueeze
