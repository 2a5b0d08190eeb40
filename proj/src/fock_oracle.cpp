#include "polsqueeze/fock_oracle.hpp"

#include <cmath>
#include <complex>
#include <vector>

#include "polsqueeze/errors.hpp"

namespace polsqueeze {

namespace {
constexpr double kAmplitudeFloor = 1e-12;
}

KerrOracleResult fock_kerr_oracle(double mean_photons, double kappa) {
  if (!(mean_photons > 0.0)) throw ParameterError("oracle needs a positive mean photon number");
  using C = std::complex<double>;
  const double alpha = std::sqrt(mean_photons);

  // Poisson amplitudes by recurrence; stop past the peak once they fall
  // below the floor.
  std::vector<C> c;
  double amp = std::exp(-0.5 * mean_photons);
  for (std::size_t n = 0;; ++n) {
    if (n > 0) amp *= alpha / std::sqrt(static_cast<double>(n));
    if (static_cast<double>(n) > mean_photons && amp < kAmplitudeFloor) break;
    const double nn = static_cast<double>(n);
    c.push_back(amp * std::polar(1.0, kappa * nn * nn));
  }
  const std::size_t size = c.size();

  C mean_a{0.0, 0.0};
  C mean_aa{0.0, 0.0};
  double mean_n = 0.0;
  double norm = 0.0;
  for (std::size_t n = 0; n < size; ++n) {
    const double nn = static_cast<double>(n);
    norm += std::norm(c[n]);
    mean_n += nn * std::norm(c[n]);
    if (n + 1 < size) mean_a += std::conj(c[n]) * c[n + 1] * std::sqrt(nn + 1.0);
    if (n + 2 < size) mean_aa += std::conj(c[n]) * c[n + 2] * std::sqrt((nn + 1.0) * (nn + 2.0));
  }

  // Var X_theta = A + Re(B e^{-2 i theta})
  const double a_term = 2.0 * mean_n + 1.0 - 2.0 * std::norm(mean_a);
  const C b_term = 2.0 * (mean_aa - mean_a * mean_a);
  KerrOracleResult r;
  r.min_variance = a_term - std::abs(b_term);
  r.max_variance = a_term + std::abs(b_term);
  // Minimum where 2 theta - arg B = pi, measured from the mean-field phase.
  const double theta_abs = 0.5 * (std::arg(b_term) + 3.14159265358979323846);
  r.theta_min = std::remainder(theta_abs - std::arg(mean_a), 3.14159265358979323846);
  r.cutoff = size - 1;
  r.retained_norm = norm;
  return r;
}

}  // namespace polsqueeze
