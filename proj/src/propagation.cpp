#include "polsqueeze/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "polsqueeze/errors.hpp"

namespace polsqueeze {

namespace {

constexpr double kTripleJumpOuter = 1.3512071919596578;    // 1 / (2 - 2^(1/3))
constexpr double kTripleJumpInner = -1.7024143839193155;   // -2^(1/3) / (2 - 2^(1/3))

double attenuation_per_metre(double db_per_km) { return db_per_km * std::log(10.0) / 10.0 * 1e-3; }

}  // namespace

PropagationModel PropagationModel::linear_reference() {
  PropagationModel m;
  m.kerr_enabled = false;
  m.raman.enabled = false;
  m.loss_enabled = false;
  m.input_noise_enabled = true;
  m.raman_noise_enabled = false;
  return m;
}

PropagationModel PropagationModel::all_disabled() {
  PropagationModel m;
  m.gvd_enabled = false;
  m.tod_enabled = false;
  m.kerr_enabled = false;
  m.raman.enabled = false;
  m.loss_enabled = false;
  m.input_noise_enabled = false;
  m.raman_noise_enabled = false;
  return m;
}

void StepperConfig::validate() const {
  if (n_steps < 1) throw ParameterError("stepper needs at least one step");
  if (!(aliasing_guard > 0.0)) throw ParameterError("aliasing guard must be positive");
  if (!(max_step_phase > 0.0)) throw ParameterError("step phase bound must be positive");
  if (guard_interval < 1) throw ParameterError("guard interval must be at least one step");
}

std::string to_string(SplitScheme scheme) {
  switch (scheme) {
    case SplitScheme::kAuto: return "auto";
    case SplitScheme::kStrang: return "strang";
    case SplitScheme::kFourthOrder: return "fourth-order";
  }
  return "unknown";
}

SplitScheme parse_split_scheme(const std::string& name) {
  if (name == "auto") return SplitScheme::kAuto;
  if (name == "strang") return SplitScheme::kStrang;
  if (name == "fourth-order") return SplitScheme::kFourthOrder;
  throw ParameterError("unknown split scheme '" + name + "'");
}

double flux_nonlinear_coefficient(const ExperimentSpec& spec) {
  const double gamma = nonlinear_coefficient(spec.fiber, spec.pulse.center_wavelength);
  const double omega0 = 2.0 * constants::kPi * constants::kSpeedOfLight / spec.pulse.center_wavelength;
  return gamma * constants::kHbar * omega0;
}

Propagator::Propagator(const ExperimentSpec& spec, const TimeGrid& grid, const PropagationModel& model,
                       const StepperConfig& stepper, bool noise_enabled)
    : grid_(grid), model_(model), stepper_(stepper), noise_(noise_enabled) {
  spec.fiber.validate();
  spec.pulse.validate();
  stepper_.validate();
  if (model_.raman.enabled) model_.raman.validate();

  dz_ = spec.fiber.length / static_cast<double>(stepper_.n_steps);
  gamma_flux_ = model_.kerr_enabled ? flux_nonlinear_coefficient(spec) : 0.0;
  raman_fraction_ = (gamma_flux_ != 0.0) ? model_.raman.effective_fraction() : 0.0;
  loss_noise_ = noise_ && model_.loss_enabled && spec.fiber.attenuation_db_per_km > 0.0;
  fft_ = std::make_unique<SpectralTransform>(grid_.n_points);

  if (raman_fraction_ > 0.0) {
    const RealVector kernel = response_kernel(model_.raman, grid_);
    raman_transfer_ = response_spectrum(kernel, grid_, *fft_);
    // c2r is unnormalized; fold 1/n in here.
    const double norm = 1.0 / static_cast<double>(grid_.n_points);
    for (auto& v : raman_transfer_) v *= norm;
    if (noise_ && model_.raman_noise_enabled) {
      raman_sampler_ = std::make_unique<RamanNoiseSampler>(model_.raman, grid_, gamma_flux_, dz_, *fft_);
    }
  }

  const bool in_fiber_noise = (raman_sampler_ && raman_sampler_->active()) || loss_noise_;
  const bool stochastic = noise_ && (model_.input_noise_enabled || in_fiber_noise);
  scheme_ = stepper_.scheme;
  if (scheme_ == SplitScheme::kAuto) scheme_ = stochastic ? SplitScheme::kStrang : SplitScheme::kFourthOrder;
  if (scheme_ == SplitScheme::kFourthOrder && in_fiber_noise) {
    throw ParameterError("fourth-order splitting has a negative sub-step and cannot carry in-fiber noise");
  }
  composition_ = scheme_ == SplitScheme::kFourthOrder
                     ? std::vector<double>{kTripleJumpOuter, kTripleJumpInner, kTripleJumpOuter}
                     : std::vector<double>{1.0};

  // Per-bin linear exponent per metre.
  const double alpha = model_.loss_enabled ? attenuation_per_metre(spec.fiber.attenuation_db_per_km) : 0.0;
  const double b2 = model_.gvd_enabled ? spec.fiber.beta2 : 0.0;
  const double b3 = model_.tod_enabled ? spec.fiber.beta3 : 0.0;
  std::vector<Complex> exponent(grid_.n_points);
  for (std::size_t k = 0; k < grid_.n_points; ++k) {
    const double w = grid_.angular_frequency(k);
    exponent[k] = Complex(-0.5 * alpha, 0.5 * b2 * w * w + b3 * w * w * w / 6.0);
  }

  std::vector<double> weights;
  const auto& c = composition_;
  weights.push_back(0.5 * c.front());
  weights.push_back(0.5 * c.back());
  weights.push_back(0.5 * (c.back() + c.front()));
  for (std::size_t i = 0; i + 1 < c.size(); ++i) weights.push_back(0.5 * (c[i] + c[i + 1]));
  weights.push_back(static_cast<double>(stepper_.n_steps));
  weights.push_back(1.0);
  weights.push_back(0.5);
  for (double w : weights) {
    if (std::any_of(factors_.begin(), factors_.end(), [&](const LinearFactor& f) { return f.weight == w; })) {
      continue;
    }
    LinearFactor f{w, ComplexVector(grid_.n_points), {}};
    for (std::size_t k = 0; k < grid_.n_points; ++k) f.factor[k] = std::exp(exponent[k] * (w * dz_));
    if (loss_noise_) {
      f.loss_noise_sigma.resize(grid_.n_points);
      for (std::size_t k = 0; k < grid_.n_points; ++k) {
        const double transmitted = std::norm(f.factor[k]);
        f.loss_noise_sigma[k] = std::sqrt(std::max(0.0, 1.0 - transmitted) / (4.0 * grid_.dt));
      }
    }
    factors_.push_back(std::move(f));
  }
}

Propagator::~Propagator() = default;

const Propagator::LinearFactor& Propagator::factor_for(double weight) const {
  for (const auto& f : factors_) {
    if (f.weight == weight) return f;
  }
  throw ParameterError("no precomputed linear factor for step weight " + std::to_string(weight));
}

void Propagator::check_guard(std::span<const Complex> spectrum) const {
  const std::size_t n = grid_.n_points;
  const std::size_t lo = 7 * n / 16;
  const std::size_t hi = 9 * n / 16;
  double total = 0.0;
  double edge = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double p = std::norm(spectrum[k]);
    total += p;
    if (k >= lo && k < hi) edge += p;
  }
  total *= grid_.dt;
  edge *= grid_.dt;
  if (!std::isfinite(total)) throw TrajectoryAbort("non-finite field encountered during propagation");
  // Vacuum contributes half a photon per bin on average, with spread sqrt(bins)/2.
  const double bins = static_cast<double>(hi - lo);
  const double vacuum = noise_ ? 0.5 * bins : 0.0;
  const double allowance = noise_ ? 8.0 * 0.5 * std::sqrt(bins) : 0.0;
  if (edge - vacuum > stepper_.aliasing_guard * total + allowance) {
    std::ostringstream msg;
    msg << "aliasing guard tripped: edge-band photons " << edge << " of " << total;
    throw TrajectoryAbort(msg.str());
  }
}

void Propagator::linear_step(std::span<Complex> u, double weight, Workspace& ws, RngStream* loss_rng) const {
  const LinearFactor& f = factor_for(weight);
  fft_->to_frequency(u, ws.spectrum);
  const std::size_t n = grid_.n_points;
  for (std::size_t k = 0; k < n; ++k) ws.spectrum[k] *= f.factor[k];
  if (loss_noise_ && loss_rng != nullptr) {
    for (std::size_t k = 0; k < n; ++k) ws.spectrum[k] += f.loss_noise_sigma[k] * loss_rng->complex_normal();
  }
  fft_->to_time(ws.spectrum, u);
}

void Propagator::nonlinear_step(std::span<Complex> u, std::span<const double> raman_noise, double weight,
                                Workspace& ws) const {
  if (gamma_flux_ == 0.0) return;
  const std::size_t n = grid_.n_points;
  const double k_instant = weight * dz_ * gamma_flux_ * (1.0 - raman_fraction_);
  double total = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    ws.intensity[j] = std::norm(u[j]);
    total += ws.intensity[j];
  }
  if (!std::isfinite(total)) throw TrajectoryAbort("non-finite field encountered during propagation");

  if (raman_fraction_ > 0.0) {
    fft_->real_forward(ws.intensity, ws.half_spectrum);
    for (std::size_t k = 0; k < ws.half_spectrum.size(); ++k) ws.half_spectrum[k] *= raman_transfer_[k];
    fft_->real_inverse(ws.half_spectrum, ws.convolution);
    const double k_delayed = weight * dz_ * gamma_flux_ * raman_fraction_;
    for (std::size_t j = 0; j < n; ++j) {
      double phase = k_instant * ws.intensity[j] + k_delayed * ws.convolution[j];
      if (!raman_noise.empty()) phase += raman_noise[j];
      u[j] *= std::polar(1.0, phase);
    }
  } else {
    for (std::size_t j = 0; j < n; ++j) {
      double phase = k_instant * ws.intensity[j];
      if (!raman_noise.empty()) phase += raman_noise[j];
      u[j] *= std::polar(1.0, phase);
    }
  }
}

void Propagator::propagate_polarization(std::span<Complex> u, RngStream& raman_rng, RngStream& loss_rng,
                                        Workspace& ws) const {
  if (!nonlinear_active()) {
    // Linear operators commute: one exact step over the whole length.
    linear_step(u, static_cast<double>(stepper_.n_steps), ws, &loss_rng);
    check_guard(ws.spectrum);
    return;
  }
  const bool sample_noise = raman_sampler_ && raman_sampler_->active();
  const std::span<const double> no_noise;
  const auto& c = composition_;
  const std::size_t m = c.size();
  const std::size_t n_steps = stepper_.n_steps;

  linear_step(u, 0.5 * c.front(), ws, &loss_rng);
  for (std::size_t s = 0; s < n_steps; ++s) {
    const bool last_step = s + 1 == n_steps;
    for (std::size_t i = 0; i < m; ++i) {
      if (sample_noise) raman_sampler_->sample(raman_rng, ws.half_spectrum, ws.noise);
      nonlinear_step(u, sample_noise ? std::span<const double>(ws.noise) : no_noise, c[i], ws);
      double w;
      if (i + 1 < m) {
        w = 0.5 * (c[i] + c[i + 1]);
      } else {
        w = last_step ? 0.5 * c.back() : 0.5 * (c.back() + c.front());
      }
      linear_step(u, w, ws, &loss_rng);
    }
    if (last_step || (s + 1) % stepper_.guard_interval == 0) check_guard(ws.spectrum);
  }
}

double Propagator::peak_step_phase(const FieldState& state) const {
  double peak = 0.0;
  for (const auto* pol : {&state.pol_x, &state.pol_y}) {
    for (const auto& v : *pol) peak = std::max(peak, std::norm(v));
  }
  double w = 0.0;
  for (double c : composition_) w = std::max(w, std::abs(c));
  return gamma_flux_ * dz_ * w * peak;
}

FieldState Propagator::propagate(FieldState state, RngStream& raman_rng, RngStream& loss_rng) const {
  if (!(state.grid == grid_)) throw ParameterError("field grid does not match propagator grid");
  const double phase = peak_step_phase(state);
  if (phase > stepper_.max_step_phase) {
    std::ostringstream msg;
    msg << "per-step nonlinear phase " << phase << " rad exceeds " << stepper_.max_step_phase
        << " rad; increase the step count";
    throw ParameterError(msg.str());
  }
  Workspace ws = make_workspace();
  propagate_polarization(state.pol_x, raman_rng, loss_rng, ws);
  propagate_polarization(state.pol_y, raman_rng, loss_rng, ws);
  return state;
}

FieldState Propagator::propagate(FieldState state, std::uint64_t seed, std::uint64_t index) const {
  RngStream raman_rng = trajectory_rng(seed, index, StreamPurpose::kRamanNoise);
  RngStream loss_rng = trajectory_rng(seed, index, StreamPurpose::kLossNoise);
  return propagate(std::move(state), raman_rng, loss_rng);
}

FieldState initial_state(const FieldState& coherent, const EnsembleConfig& ensemble,
                         const PropagationModel& model, std::uint64_t index) {
  FieldState state = coherent;
  if (ensemble.noise_enabled && model.input_noise_enabled) {
    RngStream rng = trajectory_rng(ensemble.master_seed, index, StreamPurpose::kVacuumNoise);
    add_vacuum_noise(state, rng);
  }
  return state;
}

void check_abort_budget(const EnsembleStats& stats) {
  if (static_cast<double>(stats.aborted) > kMaxAbortFraction * static_cast<double>(stats.requested)) {
    std::ostringstream msg;
    msg << stats.aborted << " of " << stats.requested << " trajectories aborted";
    if (!stats.aborts.empty()) msg << " (first: " << stats.aborts.front().message << ")";
    throw std::runtime_error(msg.str());
  }
}

std::vector<FieldState> propagate_ensemble(const ExperimentSpec& spec, const TimeGrid& grid,
                                           const PropagationModel& model, const StepperConfig& stepper,
                                           const EnsembleConfig& ensemble, unsigned threads,
                                           EnsembleStats* stats) {
  ensemble.validate();
  const FieldState coherent = init_coherent_sech(spec, grid);
  const Propagator propagator(spec, grid, model, stepper, ensemble.noise_enabled);

  auto results = parallel_map<FieldState>(ensemble.n_trajectories, threads, [&](std::size_t i) {
    return propagator.propagate(initial_state(coherent, ensemble, model, i), ensemble.master_seed, i);
  });

  EnsembleStats local{ensemble.n_trajectories, results.aborts.size(), results.aborts};
  if (stats != nullptr) *stats = local;
  check_abort_budget(local);

  std::vector<FieldState> out;
  out.reserve(results.values.size());
  for (auto& v : results.values) {
    if (v) out.push_back(std::move(*v));
  }
  return out;
}

}  // namespace polsqueeze
