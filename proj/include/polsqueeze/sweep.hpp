#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "polsqueeze/config.hpp"
#include "polsqueeze/polarimetry.hpp"

namespace polsqueeze {

inline constexpr const char* kVersion = "polsqueeze 0.1.0";

/// Reference ensembles draw from stream indices starting here, disjoint
/// from the squeezed ensemble's indices.
inline constexpr std::uint64_t kReferenceIndexOffset = std::uint64_t{1} << 40;

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

struct SweepRow {
  double energy = 0.0;  // J, total
  bool ok = false;
  std::string error;
  SqueezingResult intrinsic;  // after GAWBS, before detection loss
  SqueezingResult detected;   // after detection loss
  std::size_t aborted = 0;
  std::vector<StageTiming> timings;
};

struct SweepTable {
  std::vector<SweepRow> rows;
  std::size_t failures() const;
  std::size_t aborted() const;
};

/// Everything needed to repeat a run.
struct RunManifest {
  nlohmann::json config;
  std::uint64_t master_seed = 0;
  std::string version = kVersion;
  std::vector<StageTiming> timings;
  std::size_t aborted = 0;
  std::size_t failures = 0;
  bool complete = false;

  nlohmann::json to_json() const;
};

RunManifest make_manifest(const RunConfig& config);

/// Cached g = 0 ensembles per energy; GAWBS is applied to copies so a
/// coefficient scan reuses the same trajectories.
class EnergyEnsemble {
 public:
  EnergyEnsemble(const RunConfig& config, double energy, unsigned threads);

  double energy() const { return energy_; }
  const StokesSampleSet& samples() const { return samples_; }
  const ShotNoiseReference& reference() const { return reference_; }
  std::size_t aborted() const { return aborted_; }
  const std::vector<StageTiming>& timings() const { return timings_; }

  SqueezingResult intrinsic(double gawbs_coefficient, std::size_t theta_points) const;

 private:
  double energy_;
  StokesSampleSet samples_;
  ShotNoiseReference reference_;
  std::size_t aborted_ = 0;
  std::vector<StageTiming> timings_;
};

/// Angle simulator over lazily simulated energies, for fit_gawbs_coefficient.
class GawbsAngleModel {
 public:
  GawbsAngleModel(const RunConfig& config, unsigned threads) : config_(config), threads_(threads) {}
  double operator()(double energy, double coefficient);
  const EnergyEnsemble& ensemble(double energy);

 private:
  RunConfig config_;
  unsigned threads_;
  std::map<double, EnergyEnsemble> cache_;
};

/// One energy: reference, squeezed ensemble, GAWBS, lumped loss. Errors
/// are returned in the row rather than thrown.
SweepRow run_energy(const RunConfig& config, double energy, unsigned threads);

/// Streams rows to disk as they complete. The constructor creates the
/// directory and the summary file, so an unwritable location fails before
/// any computation.
class SweepWriter {
 public:
  explicit SweepWriter(const std::filesystem::path& directory);
  void append(const SweepRow& row);
  void write_manifest(const RunManifest& manifest) const;
  /// Angle, squeezing and antisqueezing versus energy, from all rows so far.
  void write_panels(const SweepTable& table) const;
  const std::filesystem::path& directory() const { return dir_; }

 private:
  std::filesystem::path dir_;
  std::ofstream summary_;
};

using SweepProgress = std::function<void(const SweepRow&)>;

SweepTable run_sweep(const RunConfig& config, SweepWriter* writer = nullptr, const SweepProgress& progress = {});

/// Summary, curves, panels and manifest for a finished (or partial) table.
void emit_outputs(const SweepTable& table, const RunManifest& manifest, const std::filesystem::path& directory);

/// energy_pJ,squeezing_dB,antisqueezing_dB,theta_sq_deg,sampling_err_dB
inline constexpr const char* kSummaryHeader = "energy_pJ,squeezing_dB,antisqueezing_dB,theta_sq_deg,sampling_err_dB";
void write_summary_line(std::ostream& os, const SweepRow& row);

/// Rows of a summary CSV (detected values only).
SweepTable read_summary_csv(std::istream& is);

/// Linear-power subtraction of the detector floor. Throws ParameterError
/// when raw <= floor. A floor of -inf is the identity.
double correct_electronic_noise(double raw_dbm, double floor_dbm);

struct MeasuredPoint {
  double energy = 0.0;  // J, total
  double squeezing_db = 0.0;
  double antisqueezing_db = 0.0;
  double theta_deg = 0.0;
  std::optional<double> squeezing_error_db;
  std::optional<double> antisqueezing_error_db;
  std::optional<double> raw_noise_dbm;
  std::optional<double> electronic_floor_dbm;

  /// raw_noise_dbm with the floor removed, when both are present.
  std::optional<double> corrected_noise_dbm() const;
};

/// Header-driven CSV: energy_pJ,squeezing_dB,antisqueezing_dB,theta_deg and
/// optionally squeezing_err_dB, antisqueezing_err_dB, raw_noise_dBm,
/// electronic_floor_dBm. Empty cells are missing values.
std::vector<MeasuredPoint> read_measured_points(std::istream& is);
std::vector<MeasuredPoint> read_measured_points(const std::filesystem::path& path);

struct PointResidual {
  double energy = 0.0;
  double squeezing = 0.0;      // dB, simulated minus measured
  double antisqueezing = 0.0;  // dB
  double angle = 0.0;          // deg, |simulated| - |measured|
  bool outside_squeezing_bar = false;
  bool outside_antisqueezing_bar = false;
};

struct ResidualReport {
  std::vector<PointResidual> points;
  std::vector<double> skipped_energies;
  double rms_squeezing = 0.0;
  double rms_antisqueezing = 0.0;
  double rms_angle = 0.0;
};

/// Throws ParameterError when `measured` is empty or the table has no
/// successful rows.
ResidualReport compare_to_measurement(const SweepTable& table, std::span<const MeasuredPoint> measured);
void write_residual_report(std::ostream& os, const ResidualReport& report);

}  // namespace polsqueeze
