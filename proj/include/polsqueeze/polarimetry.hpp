#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "polsqueeze/field.hpp"
#include "polsqueeze/propagation.hpp"

namespace polsqueeze {

/// Relative phase between the polarizations at the Stokes measurement;
/// pi/2 makes the mean state circular.
inline constexpr double kCircularPhase = 0.5 * constants::kPi;

/// Pulse-integrated Stokes observables of one trajectory, in photons.
struct StokesSample {
  double s0 = 0.0;
  double s1 = 0.0;
  double s2 = 0.0;
  double s3 = 0.0;
};

struct StokesSampleSet {
  std::vector<StokesSample> samples;
  std::vector<std::uint64_t> trajectory_indices;  // stream index of each sample
  std::uint64_t master_seed = 0;
  double relative_phase = kCircularPhase;
  double energy_per_polarization = 0.0;  // J, scales GAWBS noise

  std::size_t size() const { return samples.size(); }
  StokesSample mean() const;
};

/// s0 = int |ux|^2 + |uy|^2, s1 = int |ux|^2 - |uy|^2,
/// s2 = int ux* uy e^{i phi} + c.c., s3 = int -i ux* uy e^{i phi} + c.c.
StokesSample stokes_of(const FieldState& state, double relative_phase);

/// Throws ParameterError if the trajectories do not share one grid.
StokesSampleSet stokes_samples(std::span<const FieldState> outputs, double relative_phase = kCircularPhase);

/// Propagate an ensemble and reduce each trajectory to its Stokes sample on
/// the fly. Trajectory i uses stream index `index_offset + i`.
StokesSampleSet simulate_stokes(const ExperimentSpec& spec, const TimeGrid& grid, const PropagationModel& model,
                                const StepperConfig& stepper, const EnsembleConfig& ensemble,
                                unsigned threads = 1, std::uint64_t index_offset = 0,
                                EnsembleStats* stats = nullptr);

/// Unbiased covariance of (s1, s2) over the ensemble. V(theta) is the
/// variance of s1 cos(theta) + s2 sin(theta).
struct DarkPlaneCovariance {
  double c11 = 0.0;
  double c22 = 0.0;
  double c12 = 0.0;
  std::size_t n = 0;

  double variance(double theta) const;
  double min_eigenvalue() const;
  double max_eigenvalue() const;
};

DarkPlaneCovariance dark_plane_covariance(const StokesSampleSet& samples);
double dark_plane_variance(const StokesSampleSet& samples, double theta);

/// Standard error of the sample variance of s_theta (variance-of-variance).
double dark_plane_variance_error(const StokesSampleSet& samples, double theta);

struct ShotNoiseReference {
  double variance = 0.0;        // photons^2, theta-averaged
  double sampling_error = 0.0;  // photons^2
  double anisotropy = 0.0;      // (max - min eigenvalue) / mean
  double mean_s0 = 0.0;
  std::size_t n_trajectories = 0;
};

/// Relative anisotropy tolerated in the reference before calibration fails:
/// 2 % plus a sampling allowance of 6/sqrt(N).
double shot_noise_anisotropy_tolerance(std::size_t n_trajectories);

/// Reduce an already simulated reference ensemble. Throws CalibrationError
/// when V(theta) is not isotropic within tolerance.
ShotNoiseReference shot_noise_reference(const StokesSampleSet& reference_samples);

/// Run the gamma = 0 reference ensemble (no Raman, no loss, vacuum noise)
/// at the spec's pulse energy and grid, then reduce it.
ShotNoiseReference shot_noise_reference(const ExperimentSpec& spec, const TimeGrid& grid,
                                        const StepperConfig& stepper, const EnsembleConfig& ensemble,
                                        unsigned threads = 1, std::uint64_t index_offset = 0);

inline constexpr std::size_t kDefaultThetaPoints = 720;
inline constexpr std::size_t kMinConfidentTrajectories = 100;

struct SqueezingResult {
  std::vector<double> theta;     // rad, uniform on [0, pi)
  std::vector<double> variance;  // shot-noise units
  std::vector<double> variance_db;
  double squeezing_db = 0.0;
  double antisqueezing_db = 0.0;
  double theta_sq_deg = 0.0;       // argmin, in (-90, 90], from the amplitude (s1) axis
  double theta_antisq_deg = 0.0;   // argmax, same range
  double sampling_error_db = 0.0;  // on squeezing_db
  double antisqueezing_error_db = 0.0;
  double shot_noise_reference = 0.0;  // photons^2
  std::size_t n_trajectories = 0;
  bool low_confidence = false;
};

/// Scan theta on a uniform grid, refine the extrema parabolically and
/// normalize to the reference.
SqueezingResult extract_squeezing(const StokesSampleSet& samples, const ShotNoiseReference& reference,
                                  std::size_t theta_points = kDefaultThetaPoints);

/// Beam-splitter loss in shot-noise units: V' = eta V + (1 - eta).
double apply_lumped_loss(double variance, double eta);
SqueezingResult apply_lumped_loss(const SqueezingResult& result, double eta);

/// Inverse of the lumped loss, in dB. Throws ParameterError when the
/// measured variance is at or below the 1 - eta floor.
double infer_lossless(double measured_db, double eta);

/// Independent Gaussian phase jitter per trajectory and polarization,
/// variance coefficient * E_pol. Deviates come from each trajectory's GAWBS
/// stream, so the same jitter is applied to fields and to samples.
void apply_gawbs(StokesSampleSet& samples, double coefficient);
void apply_gawbs(FieldState& state, double coefficient, double energy_per_polarization,
                 std::uint64_t master_seed, std::uint64_t trajectory_index);

/// One (energy, angle) observation for the GAWBS fit.
struct AnglePoint {
  double energy = 0.0;     // J, total over both polarizations
  double theta_deg = 0.0;
};

struct GawbsFit {
  double coefficient = 0.0;
  double residual = 0.0;                // sum of squared angle residuals, deg^2
  std::vector<double> point_residuals;  // deg, simulated minus measured magnitude
  std::size_t iterations = 0;
  double bracket_low = 0.0;
  double bracket_high = 0.0;
};

struct GawbsFitOptions {
  double max_coefficient = 1e6;  // rad^2/J
  double tolerance = 1e-6;       // relative to max_coefficient
  std::size_t max_iterations = 100;
  std::size_t min_points = 3;
};

/// Simulated squeezing angle (deg) at a total energy for a GAWBS coefficient.
using AngleSimulator = std::function<double(double energy, double coefficient)>;

/// Golden-section least squares of sum_i (|theta_sim(E_i; g)| - |theta_i|)^2
/// over g in [0, max_coefficient]. Angles are compared by magnitude since
/// their sign depends on the handedness convention of the measurement.
GawbsFit fit_gawbs_coefficient(std::span<const AnglePoint> measured, const AngleSimulator& simulator,
                               const GawbsFitOptions& options = {});

/// theta_deg,variance_db
void write_variance_curve_csv(std::ostream& os, const SqueezingResult& result);

}  // namespace polsqueeze
