#include "polsqueeze/oracle_suite.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "polsqueeze/fock_oracle.hpp"
#include "polsqueeze/parallel.hpp"
#include "polsqueeze/propagation.hpp"

namespace polsqueeze {

namespace {
constexpr std::size_t kOracleGridPoints = 64;
constexpr double kOracleWindow = 1e-12;
constexpr double kOracleStepPhase = 0.005;

double to_db(double v) { return 10.0 * std::log10(v); }
}  // namespace

OracleComparison compare_kerr_oracle(double mean_photons, double kerr_phase, std::size_t trajectories,
                                     std::uint64_t seed, unsigned threads) {
  const TimeGrid grid = make_grid(kOracleGridPoints, kOracleWindow);
  ExperimentSpec spec;
  const double gamma_flux = flux_nonlinear_coefficient(spec);
  // Kerr phase of the mean field: gamma_flux L |alpha|^2 / dt.
  spec.fiber.length = kerr_phase * grid.dt / (gamma_flux * mean_photons);

  PropagationModel model = PropagationModel::all_disabled();
  model.kerr_enabled = true;
  model.input_noise_enabled = true;
  StepperConfig stepper;
  stepper.n_steps = std::max<std::size_t>(4, static_cast<std::size_t>(std::ceil(kerr_phase / kOracleStepPhase)));
  stepper.scheme = SplitScheme::kStrang;
  stepper.aliasing_guard = 1.0;  // a single-bin pulse is spectrally flat

  EnsembleConfig ensemble;
  ensemble.n_trajectories = trajectories;
  ensemble.master_seed = seed;
  ensemble.validate();

  const std::size_t bin = grid.n_points / 2;
  FieldState coherent(grid);
  coherent.pol_x[bin] = coherent.pol_y[bin] = Complex(std::sqrt(mean_photons / grid.dt), 0.0);
  const Propagator prop(spec, grid, model, stepper, true);
  const double scale = std::sqrt(grid.dt);

  auto results = parallel_map<std::array<Complex, 2>>(trajectories, threads, [&](std::size_t i) {
    const FieldState out = prop.propagate(initial_state(coherent, ensemble, model, i), seed, i);
    return std::array<Complex, 2>{out.pol_x[bin] * scale, out.pol_y[bin] * scale};
  });

  double sx = 0.0, sy = 0.0;
  std::size_t n = 0;
  for (const auto& r : results.values) {
    if (!r) continue;
    for (const auto& a : *r) {
      sx += a.real();
      sy += a.imag();
      ++n;
    }
  }
  const double mx = sx / static_cast<double>(n);
  const double my = sy / static_cast<double>(n);
  double cxx = 0.0, cyy = 0.0, cxy = 0.0;
  for (const auto& r : results.values) {
    if (!r) continue;
    for (const auto& a : *r) {
      const double dx = a.real() - mx;
      const double dy = a.imag() - my;
      cxx += dx * dx;
      cyy += dy * dy;
      cxy += dx * dy;
    }
  }
  const double norm = 1.0 / static_cast<double>(n - 1);
  cxx *= norm;
  cyy *= norm;
  cxy *= norm;
  // X = 2 Re(a e^{-i theta}) so Var X = 4 x (quadrature variance of a).
  const double lambda_min = 0.5 * (cxx + cyy) - std::hypot(0.5 * (cxx - cyy), cxy);

  OracleComparison c;
  c.mean_photons = mean_photons;
  c.kerr_phase = kerr_phase;
  c.kappa = kerr_phase / (2.0 * mean_photons);
  c.exact_min_db = to_db(fock_kerr_oracle(mean_photons, c.kappa).min_variance);
  c.wigner_min_db = to_db(4.0 * lambda_min);
  c.samples = n;
  // Gaussian sampling: relative standard error sqrt(2 / (n - 1)).
  c.wigner_error_db = 10.0 / std::log(10.0) * std::sqrt(2.0 / static_cast<double>(n - 1));
  return c;
}

std::vector<OracleCase> default_oracle_cases() {
  return {{10.0, 0.02}, {10.0, 0.05}, {10.0, 0.1}, {30.0, 0.1}};
}

void write_oracle_report(std::ostream& os, const std::vector<OracleComparison>& results) {
  os << "mean_photons,kerr_phase_rad,exact_min_dB,wigner_min_dB,difference_dB,sampling_err_dB,pass\n";
  for (const auto& r : results) {
    char buf[256];
    const bool pass = std::abs(r.difference_db()) <= kOracleToleranceDb;
    std::snprintf(buf, sizeof buf, "%.1f,%.3f,%.4f,%.4f,%.4f,%.4f,%s\n", r.mean_photons, r.kerr_phase,
                  r.exact_min_db, r.wigner_min_db, r.difference_db(), r.wigner_error_db, pass ? "yes" : "no");
    os << buf;
  }
}

}  // namespace polsqueeze
