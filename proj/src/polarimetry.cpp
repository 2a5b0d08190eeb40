#include "polsqueeze/polarimetry.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "polsqueeze/errors.hpp"
#include "polsqueeze/parallel.hpp"

namespace polsqueeze {

namespace {

constexpr double kDbPerNeper = 10.0 / 2.302585092994045684;  // 10 / ln 10

double to_db(double v) { return 10.0 * std::log10(v); }
double from_db(double db) { return std::pow(10.0, db / 10.0); }

double wrap_half_turn_deg(double deg) {
  // into (-90, 90]
  double d = std::fmod(deg, 180.0);
  if (d <= -90.0) d += 180.0;
  if (d > 90.0) d -= 180.0;
  return d;
}

struct Extremum {
  double theta;
  double value;
};

// Vertex of the parabola through three equally spaced points on a periodic
// curve, around index i.
Extremum refine(const std::vector<double>& v, std::size_t i, double step) {
  const std::size_t n = v.size();
  const double left = v[(i + n - 1) % n];
  const double mid = v[i];
  const double right = v[(i + 1) % n];
  const double curvature = left - 2.0 * mid + right;
  if (curvature == 0.0) return {static_cast<double>(i) * step, mid};
  const double offset = 0.5 * (left - right) / curvature;
  return {(static_cast<double>(i) + offset) * step, mid - 0.25 * (left - right) * offset};
}

// Standard error of the unbiased sample variance from central moments.
double variance_standard_error(std::span<const double> x) {
  const auto n = static_cast<double>(x.size());
  if (x.size() < 4) return 0.0;
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double m2 = 0.0;
  double m4 = 0.0;
  for (double v : x) {
    const double d = (v - mean) * (v - mean);
    m2 += d;
    m4 += d * d;
  }
  m2 /= n;
  m4 /= n;
  const double var_of_var = (m4 - (n - 3.0) / (n - 1.0) * m2 * m2) / n;
  return std::sqrt(std::max(0.0, var_of_var));
}

std::vector<double> projected(const StokesSampleSet& samples, double theta) {
  std::vector<double> x(samples.size());
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  for (std::size_t i = 0; i < samples.size(); ++i) x[i] = samples.samples[i].s1 * c + samples.samples[i].s2 * s;
  return x;
}

}  // namespace

StokesSample StokesSampleSet::mean() const {
  StokesSample m;
  if (samples.empty()) return m;
  for (const auto& s : samples) {
    m.s0 += s.s0;
    m.s1 += s.s1;
    m.s2 += s.s2;
    m.s3 += s.s3;
  }
  const double inv = 1.0 / static_cast<double>(samples.size());
  m.s0 *= inv;
  m.s1 *= inv;
  m.s2 *= inv;
  m.s3 *= inv;
  return m;
}

StokesSample stokes_of(const FieldState& state, double relative_phase) {
  double nx = 0.0;
  double ny = 0.0;
  Complex overlap{0.0, 0.0};
  for (std::size_t j = 0; j < state.grid.n_points; ++j) {
    nx += std::norm(state.pol_x[j]);
    ny += std::norm(state.pol_y[j]);
    overlap += std::conj(state.pol_x[j]) * state.pol_y[j];
  }
  const double dt = state.grid.dt;
  // s2 + i s3 = 2 e^{i phi} sum ux* uy dt
  const Complex rotated = 2.0 * dt * overlap * std::polar(1.0, relative_phase);
  return {(nx + ny) * dt, (nx - ny) * dt, rotated.real(), rotated.imag()};
}

StokesSampleSet stokes_samples(std::span<const FieldState> outputs, double relative_phase) {
  StokesSampleSet set;
  set.relative_phase = relative_phase;
  set.samples.reserve(outputs.size());
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    if (!(outputs[i].grid == outputs.front().grid)) {
      throw ParameterError("Stokes reduction needs every trajectory on the same grid");
    }
    set.samples.push_back(stokes_of(outputs[i], relative_phase));
    set.trajectory_indices.push_back(i);
  }
  return set;
}

StokesSampleSet simulate_stokes(const ExperimentSpec& spec, const TimeGrid& grid, const PropagationModel& model,
                                const StepperConfig& stepper, const EnsembleConfig& ensemble, unsigned threads,
                                std::uint64_t index_offset, EnsembleStats* stats) {
  ensemble.validate();
  const FieldState coherent = init_coherent_sech(spec, grid);
  const Propagator propagator(spec, grid, model, stepper, ensemble.noise_enabled);

  auto results = parallel_map<StokesSample>(ensemble.n_trajectories, threads, [&](std::size_t i) {
    const std::uint64_t index = index_offset + i;
    FieldState out =
        propagator.propagate(initial_state(coherent, ensemble, model, index), ensemble.master_seed, index);
    return stokes_of(out, kCircularPhase);
  });

  EnsembleStats local{ensemble.n_trajectories, results.aborts.size(), results.aborts};
  if (stats != nullptr) *stats = local;
  check_abort_budget(local);

  StokesSampleSet set;
  set.master_seed = ensemble.master_seed;
  set.relative_phase = kCircularPhase;
  set.energy_per_polarization = spec.pulse.energy_per_polarization();
  for (std::size_t i = 0; i < results.values.size(); ++i) {
    if (!results.values[i]) continue;
    set.samples.push_back(*results.values[i]);
    set.trajectory_indices.push_back(index_offset + i);
  }
  return set;
}

double DarkPlaneCovariance::variance(double theta) const {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return c11 * c * c + c22 * s * s + 2.0 * c12 * s * c;
}

double DarkPlaneCovariance::min_eigenvalue() const {
  const double mean = 0.5 * (c11 + c22);
  const double radius = std::hypot(0.5 * (c11 - c22), c12);
  return mean - radius;
}

double DarkPlaneCovariance::max_eigenvalue() const {
  const double mean = 0.5 * (c11 + c22);
  const double radius = std::hypot(0.5 * (c11 - c22), c12);
  return mean + radius;
}

DarkPlaneCovariance dark_plane_covariance(const StokesSampleSet& samples) {
  const std::size_t n = samples.size();
  if (n < 2) throw ParameterError("dark-plane variance needs at least two trajectories");
  double m1 = 0.0;
  double m2 = 0.0;
  for (const auto& s : samples.samples) {
    m1 += s.s1;
    m2 += s.s2;
  }
  m1 /= static_cast<double>(n);
  m2 /= static_cast<double>(n);
  DarkPlaneCovariance c;
  c.n = n;
  for (const auto& s : samples.samples) {
    const double d1 = s.s1 - m1;
    const double d2 = s.s2 - m2;
    c.c11 += d1 * d1;
    c.c22 += d2 * d2;
    c.c12 += d1 * d2;
  }
  const double inv = 1.0 / static_cast<double>(n - 1);
  c.c11 *= inv;
  c.c22 *= inv;
  c.c12 *= inv;
  return c;
}

double dark_plane_variance(const StokesSampleSet& samples, double theta) {
  return dark_plane_covariance(samples).variance(theta);
}

double dark_plane_variance_error(const StokesSampleSet& samples, double theta) {
  const auto x = projected(samples, theta);
  return variance_standard_error(x);
}

double shot_noise_anisotropy_tolerance(std::size_t n_trajectories) {
  return 0.02 + 6.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(n_trajectories, 1)));
}

ShotNoiseReference shot_noise_reference(const StokesSampleSet& reference_samples) {
  const DarkPlaneCovariance cov = dark_plane_covariance(reference_samples);
  ShotNoiseReference ref;
  ref.n_trajectories = reference_samples.size();
  ref.variance = 0.5 * (cov.c11 + cov.c22);
  ref.mean_s0 = reference_samples.mean().s0;
  if (!(ref.variance > 0.0)) throw CalibrationError("shot-noise reference variance is not positive");
  ref.anisotropy = (cov.max_eigenvalue() - cov.min_eigenvalue()) / ref.variance;
  const double e1 = dark_plane_variance_error(reference_samples, 0.0);
  const double e2 = dark_plane_variance_error(reference_samples, 0.5 * constants::kPi);
  ref.sampling_error = 0.5 * std::hypot(e1, e2);
  const double tolerance = shot_noise_anisotropy_tolerance(ref.n_trajectories);
  if (ref.anisotropy > tolerance) {
    std::ostringstream msg;
    msg << "shot-noise reference varies by " << 100.0 * ref.anisotropy << " % across theta (tolerance "
        << 100.0 * tolerance << " %)";
    throw CalibrationError(msg.str());
  }
  return ref;
}

ShotNoiseReference shot_noise_reference(const ExperimentSpec& spec, const TimeGrid& grid,
                                        const StepperConfig& stepper, const EnsembleConfig& ensemble,
                                        unsigned threads, std::uint64_t index_offset) {
  EnsembleConfig reference_ensemble = ensemble;
  reference_ensemble.noise_enabled = true;
  const auto samples = simulate_stokes(spec, grid, PropagationModel::linear_reference(), stepper,
                                       reference_ensemble, threads, index_offset);
  return shot_noise_reference(samples);
}

SqueezingResult extract_squeezing(const StokesSampleSet& samples, const ShotNoiseReference& reference,
                                  std::size_t theta_points) {
  if (!(reference.variance > 0.0)) throw ParameterError("shot-noise reference must be positive");
  if (theta_points < 8) throw ParameterError("theta scan needs at least 8 points");
  const DarkPlaneCovariance cov = dark_plane_covariance(samples);

  SqueezingResult r;
  r.n_trajectories = samples.size();
  r.low_confidence = samples.size() < kMinConfidentTrajectories;
  r.shot_noise_reference = reference.variance;
  const double step = constants::kPi / static_cast<double>(theta_points);
  r.theta.resize(theta_points);
  r.variance.resize(theta_points);
  r.variance_db.resize(theta_points);
  for (std::size_t i = 0; i < theta_points; ++i) {
    r.theta[i] = static_cast<double>(i) * step;
    r.variance[i] = cov.variance(r.theta[i]) / reference.variance;
    r.variance_db[i] = to_db(r.variance[i]);
  }
  const auto [min_it, max_it] = std::minmax_element(r.variance.begin(), r.variance.end());
  const Extremum lo = refine(r.variance, static_cast<std::size_t>(min_it - r.variance.begin()), step);
  const Extremum hi = refine(r.variance, static_cast<std::size_t>(max_it - r.variance.begin()), step);
  r.squeezing_db = to_db(lo.value);
  r.antisqueezing_db = to_db(hi.value);
  r.theta_sq_deg = wrap_half_turn_deg(lo.theta * 180.0 / constants::kPi);
  r.theta_antisq_deg = wrap_half_turn_deg(hi.theta * 180.0 / constants::kPi);

  const double ref_rel = reference.sampling_error / reference.variance;
  const double sq_rel = dark_plane_variance_error(samples, lo.theta) / (lo.value * reference.variance);
  const double asq_rel = dark_plane_variance_error(samples, hi.theta) / (hi.value * reference.variance);
  r.sampling_error_db = kDbPerNeper * std::hypot(sq_rel, ref_rel);
  r.antisqueezing_error_db = kDbPerNeper * std::hypot(asq_rel, ref_rel);
  return r;
}

double apply_lumped_loss(double variance, double eta) {
  if (!(eta > 0.0 && eta <= 1.0)) {
    throw ParameterError("transmittance must lie in (0, 1], got " + std::to_string(eta));
  }
  return eta * variance + (1.0 - eta);
}

SqueezingResult apply_lumped_loss(const SqueezingResult& result, double eta) {
  SqueezingResult r = result;
  for (std::size_t i = 0; i < r.variance.size(); ++i) {
    r.variance[i] = apply_lumped_loss(result.variance[i], eta);
    r.variance_db[i] = to_db(r.variance[i]);
  }
  const double v_min = apply_lumped_loss(from_db(result.squeezing_db), eta);
  const double v_max = apply_lumped_loss(from_db(result.antisqueezing_db), eta);
  r.squeezing_db = to_db(v_min);
  r.antisqueezing_db = to_db(v_max);
  // Absolute variance errors scale by eta.
  r.sampling_error_db = result.sampling_error_db * eta * from_db(result.squeezing_db) / v_min;
  r.antisqueezing_error_db = result.antisqueezing_error_db * eta * from_db(result.antisqueezing_db) / v_max;
  return r;
}

double infer_lossless(double measured_db, double eta) {
  if (!(eta > 0.0 && eta <= 1.0)) {
    throw ParameterError("transmittance must lie in (0, 1], got " + std::to_string(eta));
  }
  const double measured = from_db(measured_db);
  const double floor = 1.0 - eta;
  if (measured <= floor) {
    std::ostringstream msg;
    msg << "measured variance " << measured << " (" << measured_db << " dB) is at or below the loss floor 1 - eta = "
        << floor << "; no lossless state reproduces it";
    throw ParameterError(msg.str());
  }
  return to_db((measured - floor) / eta);
}

void apply_gawbs(StokesSampleSet& samples, double coefficient) {
  if (!(coefficient >= 0.0)) throw ParameterError("GAWBS coefficient must be non-negative");
  if (coefficient == 0.0) return;
  const double sigma = std::sqrt(coefficient * samples.energy_per_polarization);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    RngStream rng = trajectory_rng(samples.master_seed, samples.trajectory_indices[i], StreamPurpose::kGawbs);
    const double phase_x = sigma * rng.normal();
    const double phase_y = sigma * rng.normal();
    auto& s = samples.samples[i];
    const Complex rotated = Complex(s.s2, s.s3) * std::polar(1.0, phase_y - phase_x);
    s.s2 = rotated.real();
    s.s3 = rotated.imag();
  }
}

void apply_gawbs(FieldState& state, double coefficient, double energy_per_polarization, std::uint64_t master_seed,
                 std::uint64_t trajectory_index) {
  if (!(coefficient >= 0.0)) throw ParameterError("GAWBS coefficient must be non-negative");
  if (coefficient == 0.0) return;
  const double sigma = std::sqrt(coefficient * energy_per_polarization);
  RngStream rng = trajectory_rng(master_seed, trajectory_index, StreamPurpose::kGawbs);
  const Complex rx = std::polar(1.0, sigma * rng.normal());
  const Complex ry = std::polar(1.0, sigma * rng.normal());
  for (auto& v : state.pol_x) v *= rx;
  for (auto& v : state.pol_y) v *= ry;
}

GawbsFit fit_gawbs_coefficient(std::span<const AnglePoint> measured, const AngleSimulator& simulator,
                               const GawbsFitOptions& options) {
  if (measured.size() < options.min_points) {
    throw ParameterError("GAWBS fit needs at least " + std::to_string(options.min_points) + " angle points, got " +
                         std::to_string(measured.size()));
  }
  if (!(options.max_coefficient > 0.0)) throw ParameterError("GAWBS search range must be positive");

  auto objective = [&](double g) {
    double sum = 0.0;
    for (const auto& p : measured) {
      const double d = std::abs(simulator(p.energy, g)) - std::abs(p.theta_deg);
      sum += d * d;
    }
    return sum;
  };

  constexpr double kInvPhi = 0.6180339887498948482;
  double a = 0.0;
  double b = options.max_coefficient;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = objective(c);
  double fd = objective(d);
  const double target = options.tolerance * options.max_coefficient;
  std::size_t iter = 0;
  while (b - a > target) {
    if (iter == options.max_iterations) {
      std::ostringstream msg;
      msg << "GAWBS fit did not converge in " << options.max_iterations << " iterations; bracket [" << a << ", " << b
          << "]";
      throw std::runtime_error(msg.str());
    }
    ++iter;
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = objective(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = objective(d);
    }
  }

  GawbsFit fit;
  fit.iterations = iter;
  fit.bracket_low = a;
  fit.bracket_high = b;
  // The bracket never evaluates g = 0 itself.
  const double mid = 0.5 * (a + b);
  fit.coefficient = objective(0.0) <= objective(mid) ? 0.0 : mid;
  for (const auto& p : measured) {
    const double r = std::abs(simulator(p.energy, fit.coefficient)) - std::abs(p.theta_deg);
    fit.point_residuals.push_back(r);
    fit.residual += r * r;
  }
  return fit;
}

void write_variance_curve_csv(std::ostream& os, const SqueezingResult& result) {
  const auto flags = os.flags();
  const auto precision = os.precision();
  os << "theta_deg,variance_db\n" << std::fixed;
  for (std::size_t i = 0; i < result.theta.size(); ++i) {
    os << std::setprecision(3) << result.theta[i] * 180.0 / constants::kPi << ',' << result.variance_db[i] << '\n';
  }
  os.flags(flags);
  os.precision(precision);
}

}  // namespace polsqueeze
