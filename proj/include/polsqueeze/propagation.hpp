#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "polsqueeze/field.hpp"
#include "polsqueeze/parallel.hpp"
#include "polsqueeze/physical_model.hpp"
#include "polsqueeze/raman.hpp"
#include "polsqueeze/rng.hpp"
#include "polsqueeze/spectral.hpp"

namespace polsqueeze {

/// Physics terms of the propagation equation. Both polarizations evolve
/// independently under the same operator.
struct PropagationModel {
  bool gvd_enabled = true;   // beta2
  bool tod_enabled = true;   // beta3
  bool kerr_enabled = true;  // whole chi(3) term, instantaneous and delayed
  RamanModel raman;
  bool loss_enabled = false;  // distributed fiber attenuation
  bool input_noise_enabled = true;
  bool raman_noise_enabled = true;

  /// gamma = 0, Raman off, loss off, vacuum noise on: the shot-noise
  /// calibration configuration.
  static PropagationModel linear_reference();
  /// Every term off; propagation is the identity.
  static PropagationModel all_disabled();
};

enum class SplitScheme {
  kAuto,         // fourth order when the run is noise-free, Strang otherwise
  kStrang,       // symmetric second order: L/2 N L/2
  kFourthOrder,  // triple-jump composition of Strang steps; deterministic only
};

struct StepperConfig {
  std::size_t n_steps = 4000;
  SplitScheme scheme = SplitScheme::kAuto;
  double aliasing_guard = 1e-5;   // allowed excess edge-band photon fraction
  double max_step_phase = 0.05;   // rad, at the input peak
  std::size_t guard_interval = 250;

  void validate() const;
};

std::string to_string(SplitScheme scheme);
SplitScheme parse_split_scheme(const std::string& name);

/// Nonlinear coefficient in photon-flux units: phase per metre per
/// (photon/s), gamma_flux = gamma * hbar * omega0.
double flux_nonlinear_coefficient(const ExperimentSpec& spec);

/// Split-step stochastic integrator for one grid and one set of physics
/// terms. Immutable after construction and shared read-only by all threads;
/// per-trajectory scratch lives in a Workspace.
///
/// One step of length dz applies
///   linear:    U(w) <- U(w) exp[(i b2/2 w^2 + i b3/6 w^3 - alpha/2) dz]
///   nonlinear: u(t) <- u(t) exp[i dz gamma_flux ((1-fR)|u|^2 + fR h*|u|^2) + i Gamma(t)]
/// in the symmetric order (L/2, N, L/2). Adjacent half steps are fused.
class Propagator {
 public:
  Propagator(const ExperimentSpec& spec, const TimeGrid& grid, const PropagationModel& model,
             const StepperConfig& stepper, bool noise_enabled = true);
  ~Propagator();
  Propagator(const Propagator&) = delete;
  Propagator& operator=(const Propagator&) = delete;

  struct Workspace {
    ComplexVector spectrum;
    RealVector intensity;
    RealVector convolution;
    RealVector noise;
    ComplexVector half_spectrum;
    explicit Workspace(std::size_t n)
        : spectrum(n), intensity(n), convolution(n), noise(n), half_spectrum(n / 2 + 1) {}
  };
  Workspace make_workspace() const { return Workspace(grid_.n_points); }

  /// Linear operator over `weight` * dz (0.5 for a half step).
  void linear_step(std::span<Complex> u, double weight, Workspace& ws,
                   RngStream* loss_rng = nullptr) const;
  /// Nonlinear phase over `weight` * dz. `raman_noise` may be empty.
  void nonlinear_step(std::span<Complex> u, std::span<const double> raman_noise, double weight,
                      Workspace& ws) const;

  /// Propagate over the full fiber. Raman and loss noise streams are used
  /// only when the corresponding terms are active.
  FieldState propagate(FieldState state, RngStream& raman_rng, RngStream& loss_rng) const;
  /// Same, with the streams of trajectory `index`.
  FieldState propagate(FieldState state, std::uint64_t seed, std::uint64_t index) const;

  /// Peak nonlinear phase of a single step for this field.
  double peak_step_phase(const FieldState& state) const;

  const TimeGrid& grid() const { return grid_; }
  const SpectralTransform& transform() const { return *fft_; }
  double dz() const { return dz_; }
  double gamma_flux() const { return gamma_flux_; }
  bool nonlinear_active() const { return gamma_flux_ != 0.0; }
  SplitScheme scheme() const { return scheme_; }
  const RamanNoiseSampler* raman_noise() const { return raman_sampler_.get(); }

 private:
  struct LinearFactor {
    double weight;
    ComplexVector factor;
    RealVector loss_noise_sigma;
  };
  const LinearFactor& factor_for(double weight) const;
  void check_guard(std::span<const Complex> spectrum) const;
  void propagate_polarization(std::span<Complex> u, RngStream& raman_rng, RngStream& loss_rng,
                              Workspace& ws) const;

  TimeGrid grid_;
  PropagationModel model_;
  StepperConfig stepper_;
  bool noise_;
  bool loss_noise_;
  SplitScheme scheme_;
  double dz_;
  double gamma_flux_;
  double raman_fraction_;
  std::unique_ptr<SpectralTransform> fft_;
  ComplexVector raman_transfer_;  // kernel spectrum scaled for c2r
  std::unique_ptr<RamanNoiseSampler> raman_sampler_;
  std::vector<double> composition_;  // Strang sub-step weights per step
  std::vector<LinearFactor> factors_;
};

struct EnsembleStats {
  std::size_t requested = 0;
  std::size_t aborted = 0;
  std::vector<AbortRecord> aborts;
};

/// Abort fraction above which an ensemble run fails.
inline constexpr double kMaxAbortFraction = 0.01;

/// Input state for trajectory `index`: the coherent field plus vacuum noise
/// from that trajectory's stream when enabled.
FieldState initial_state(const FieldState& coherent, const EnsembleConfig& ensemble,
                         const PropagationModel& model, std::uint64_t index);

/// One propagated trajectory per index, in index order. Aborted
/// trajectories are excluded and recorded; more than 1 % aborts throws.
std::vector<FieldState> propagate_ensemble(const ExperimentSpec& spec, const TimeGrid& grid,
                                           const PropagationModel& model,
                                           const StepperConfig& stepper,
                                           const EnsembleConfig& ensemble, unsigned threads = 1,
                                           EnsembleStats* stats = nullptr);

void check_abort_budget(const EnsembleStats& stats);

}  // namespace polsqueeze
