#pragma once

#include <cstddef>

namespace polsqueeze {

/// Exact single-mode Kerr evolution U = exp(i kappa n^2) of a coherent state
/// with real amplitude sqrt(mean_photons), in a truncated number basis.
/// Quadratures are X_theta = a e^{-i theta} + a^dag e^{i theta}, so the
/// vacuum variance is 1.
struct KerrOracleResult {
  double min_variance = 0.0;
  double max_variance = 0.0;
  double theta_min = 0.0;  // rad, from the mean-field (amplitude) direction
  std::size_t cutoff = 0;  // highest number state kept
  double retained_norm = 0.0;
};

KerrOracleResult fock_kerr_oracle(double mean_photons, double kappa);

}  // namespace polsqueeze
