#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

namespace polsqueeze {

/// Single-mode Kerr squeezing computed two ways: the propagator run as a
/// truncated-Wigner ensemble on one coherent bin (dispersion, Raman and loss
/// off), and the exact number-basis evolution.
struct OracleComparison {
  double mean_photons = 0.0;
  double kerr_phase = 0.0;  // rad, total mean-field rotation 2 kappa |alpha|^2
  double kappa = 0.0;
  double exact_min_db = 0.0;
  double wigner_min_db = 0.0;
  double wigner_error_db = 0.0;  // one-sigma sampling error
  std::size_t samples = 0;

  double difference_db() const { return wigner_min_db - exact_min_db; }
};

inline constexpr double kOracleToleranceDb = 0.1;

/// Both polarizations carry the coherent bin, so each trajectory yields two
/// samples.
OracleComparison compare_kerr_oracle(double mean_photons, double kerr_phase, std::size_t trajectories,
                                     std::uint64_t seed, unsigned threads = 1);

struct OracleCase {
  double mean_photons;
  double kerr_phase;
};

/// Cases run by the `oracle` subcommand.
std::vector<OracleCase> default_oracle_cases();

void write_oracle_report(std::ostream& os, const std::vector<OracleComparison>& results);

}  // namespace polsqueeze
