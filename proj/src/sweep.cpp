#include "polsqueeze/sweep.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <limits>
#include <sstream>

#include "polsqueeze/errors.hpp"

namespace polsqueeze {

namespace {

class Stopwatch {
 public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - start_).count();
    start_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string format_fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  for (std::string cell; std::getline(ss, cell, ',');) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& text, const std::string& what) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || *end != '\0') throw ParameterError("cannot parse " + what + " from '" + text + "'");
  return v;
}

// Column lookup for header-driven CSV files.
class CsvHeader {
 public:
  explicit CsvHeader(const std::string& line) {
    const auto names = split_csv(line);
    for (std::size_t i = 0; i < names.size(); ++i) index_[names[i]] = i;
  }
  std::optional<std::size_t> find(const std::string& name) const {
    const auto it = index_.find(name);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  std::size_t require(const std::string& name) const {
    const auto i = find(name);
    if (!i) throw ParameterError("CSV is missing column '" + name + "'");
    return *i;
  }

 private:
  std::map<std::string, std::size_t> index_;
};

std::optional<double> optional_cell(const std::vector<std::string>& cells, std::optional<std::size_t> col,
                                    const std::string& what) {
  if (!col || *col >= cells.size() || cells[*col].empty()) return std::nullopt;
  return parse_number(cells[*col], what);
}

double required_cell(const std::vector<std::string>& cells, std::size_t col, const std::string& what) {
  if (col >= cells.size()) throw ParameterError("CSV row is missing " + what);
  return parse_number(cells[col], what);
}

nlohmann::json timings_json(const std::vector<StageTiming>& timings) {
  auto j = nlohmann::json::array();
  for (const auto& t : timings) j.push_back({{"stage", t.stage}, {"seconds", t.seconds}});
  return j;
}

std::string curve_file_name(const SweepRow& row) {
  return "variance_" + format_fixed(row.energy * 1e12, 3) + "pJ.csv";
}

}  // namespace

std::size_t SweepTable::failures() const {
  return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const SweepRow& r) { return !r.ok; }));
}

std::size_t SweepTable::aborted() const {
  std::size_t n = 0;
  for (const auto& r : rows) n += r.aborted;
  return n;
}

nlohmann::json RunManifest::to_json() const {
  return {{"version", version},          {"master_seed", master_seed}, {"config", config},
          {"timings", timings_json(timings)}, {"aborted_trajectories", aborted},
          {"failed_energies", failures}, {"complete", complete}};
}

RunManifest make_manifest(const RunConfig& config) {
  RunManifest m;
  m.config = polsqueeze::to_json(config);
  m.master_seed = config.ensemble.master_seed;
  return m;
}

EnergyEnsemble::EnergyEnsemble(const RunConfig& config, double energy, unsigned threads) : energy_(energy) {
  ExperimentSpec spec = config.experiment;
  spec.pulse.total_energy = energy;
  const TimeGrid grid = config.grid();
  const std::string tag = format_fixed(energy * 1e12, 3) + " pJ/";

  Stopwatch clock;
  EnsembleConfig ref = config.ensemble;
  ref.n_trajectories = config.reference_trajectories;
  ref.noise_enabled = true;
  reference_ = shot_noise_reference(spec, grid, config.stepper, ref, threads, kReferenceIndexOffset);
  timings_.push_back({tag + "reference", clock.lap()});

  EnsembleStats stats;
  samples_ = simulate_stokes(spec, grid, config.model, config.stepper, config.ensemble, threads, 0, &stats);
  aborted_ = stats.aborted;
  timings_.push_back({tag + "squeezed", clock.lap()});
}

SqueezingResult EnergyEnsemble::intrinsic(double gawbs_coefficient, std::size_t theta_points) const {
  if (gawbs_coefficient == 0.0) return extract_squeezing(samples_, reference_, theta_points);
  StokesSampleSet jittered = samples_;
  apply_gawbs(jittered, gawbs_coefficient);
  return extract_squeezing(jittered, reference_, theta_points);
}

const EnergyEnsemble& GawbsAngleModel::ensemble(double energy) {
  auto it = cache_.find(energy);
  if (it == cache_.end()) it = cache_.try_emplace(energy, config_, energy, threads_).first;
  return it->second;
}

double GawbsAngleModel::operator()(double energy, double coefficient) {
  return ensemble(energy).intrinsic(coefficient, config_.theta_points).theta_sq_deg;
}

SweepRow run_energy(const RunConfig& config, double energy, unsigned threads) {
  SweepRow row;
  row.energy = energy;
  try {
    const EnergyEnsemble ens(config, energy, threads);
    row.timings = ens.timings();
    row.aborted = ens.aborted();
    Stopwatch clock;
    row.intrinsic = ens.intrinsic(config.experiment.detection.gawbs_coefficient, config.theta_points);
    row.detected = apply_lumped_loss(row.intrinsic, config.lumped_transmittance());
    row.timings.push_back({format_fixed(energy * 1e12, 3) + " pJ/extract", clock.lap()});
    row.ok = true;
  } catch (const std::exception& e) {
    row.error = e.what();
  }
  return row;
}

SweepWriter::SweepWriter(const std::filesystem::path& directory) : dir_(directory) {
  std::error_code ec;
  std::filesystem::create_directories(dir_ / "curves", ec);
  if (ec) throw ConfigError("cannot create output directory " + dir_.string() + ": " + ec.message());
  summary_.open(dir_ / "summary.csv", std::ios::trunc);
  if (!summary_) throw ConfigError("cannot write to output directory " + dir_.string());
  summary_ << kSummaryHeader << '\n';
  summary_.flush();
}

void SweepWriter::append(const SweepRow& row) {
  if (!row.ok) return;
  write_summary_line(summary_, row);
  summary_.flush();
  std::ofstream curve(dir_ / "curves" / curve_file_name(row), std::ios::trunc);
  write_variance_curve_csv(curve, row.detected);
}

void SweepWriter::write_manifest(const RunManifest& manifest) const {
  // Write-then-rename so an interrupted run never leaves a truncated file.
  const auto tmp = dir_ / "manifest.json.tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << manifest.to_json().dump(2) << '\n';
  }
  std::filesystem::rename(tmp, dir_ / "manifest.json");
}

void SweepWriter::write_panels(const SweepTable& table) const {
  std::ofstream a(dir_ / "panel_angle.dat", std::ios::trunc);
  std::ofstream b(dir_ / "panel_squeezing.dat", std::ios::trunc);
  std::ofstream c(dir_ / "panel_antisqueezing.dat", std::ios::trunc);
  a << "# energy_pJ theta_sq_deg theta_antisq_deg\n";
  b << "# energy_pJ squeezing_dB sampling_err_dB intrinsic_squeezing_dB\n";
  c << "# energy_pJ antisqueezing_dB sampling_err_dB intrinsic_antisqueezing_dB\n";
  for (const auto& r : table.rows) {
    if (!r.ok) continue;
    const std::string e = format_fixed(r.energy * 1e12, 1);
    const auto& d = r.detected;
    a << e << ' ' << format_fixed(d.theta_sq_deg, 3) << ' ' << format_fixed(d.theta_antisq_deg, 3) << '\n';
    b << e << ' ' << format_fixed(d.squeezing_db, 3) << ' ' << format_fixed(d.sampling_error_db, 3) << ' '
      << format_fixed(r.intrinsic.squeezing_db, 3) << '\n';
    c << e << ' ' << format_fixed(d.antisqueezing_db, 3) << ' ' << format_fixed(d.antisqueezing_error_db, 3)
      << ' ' << format_fixed(r.intrinsic.antisqueezing_db, 3) << '\n';
  }
}

void write_summary_line(std::ostream& os, const SweepRow& row) {
  const auto& d = row.detected;
  os << format_fixed(row.energy * 1e12, 1) << ',' << format_fixed(d.squeezing_db, 3) << ','
     << format_fixed(d.antisqueezing_db, 3) << ',' << format_fixed(d.theta_sq_deg, 3) << ','
     << format_fixed(d.sampling_error_db, 3) << '\n';
}

SweepTable run_sweep(const RunConfig& config, SweepWriter* writer, const SweepProgress& progress) {
  config.validate();
  SweepTable table;
  RunManifest manifest = make_manifest(config);
  if (writer) writer->write_manifest(manifest);

  for (double energy : config.energies) {
    SweepRow row = run_energy(config, energy, config.threads);
    if (!row.ok) std::clog << "energy " << energy * 1e12 << " pJ failed: " << row.error << '\n';
    table.rows.push_back(row);
    manifest.timings.insert(manifest.timings.end(), row.timings.begin(), row.timings.end());
    manifest.aborted = table.aborted();
    manifest.failures = table.failures();
    if (writer) {
      writer->append(row);
      writer->write_panels(table);
      writer->write_manifest(manifest);
    }
    if (progress) progress(row);
  }

  manifest.complete = true;
  if (writer) writer->write_manifest(manifest);
  return table;
}

void emit_outputs(const SweepTable& table, const RunManifest& manifest, const std::filesystem::path& directory) {
  SweepWriter writer(directory);
  for (const auto& row : table.rows) writer.append(row);
  writer.write_panels(table);
  writer.write_manifest(manifest);
}

SweepTable read_summary_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ParameterError("summary CSV is empty");
  const CsvHeader header(trim(line));
  const std::size_t ce = header.require("energy_pJ");
  const std::size_t cs = header.require("squeezing_dB");
  const std::size_t ca = header.require("antisqueezing_dB");
  const std::size_t ct = header.require("theta_sq_deg");
  const auto cerr = header.find("sampling_err_dB");

  SweepTable table;
  while (std::getline(is, line)) {
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    SweepRow row;
    row.ok = true;
    row.energy = required_cell(cells, ce, "energy_pJ") * 1e-12;
    row.detected.squeezing_db = required_cell(cells, cs, "squeezing_dB");
    row.detected.antisqueezing_db = required_cell(cells, ca, "antisqueezing_dB");
    row.detected.theta_sq_deg = required_cell(cells, ct, "theta_sq_deg");
    row.detected.sampling_error_db = optional_cell(cells, cerr, "sampling_err_dB").value_or(0.0);
    row.intrinsic = row.detected;
    table.rows.push_back(row);
  }
  return table;
}

double correct_electronic_noise(double raw_dbm, double floor_dbm) {
  if (floor_dbm == -std::numeric_limits<double>::infinity()) return raw_dbm;
  if (!(raw_dbm > floor_dbm)) throw ParameterError("raw noise is not above the electronic noise floor");
  return 10.0 * std::log10(std::pow(10.0, raw_dbm / 10.0) - std::pow(10.0, floor_dbm / 10.0));
}

std::optional<double> MeasuredPoint::corrected_noise_dbm() const {
  if (!raw_noise_dbm || !electronic_floor_dbm) return std::nullopt;
  return correct_electronic_noise(*raw_noise_dbm, *electronic_floor_dbm);
}

std::vector<MeasuredPoint> read_measured_points(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ParameterError("measured-data CSV is empty");
  const CsvHeader header(trim(line));
  const std::size_t ce = header.require("energy_pJ");
  const std::size_t cs = header.require("squeezing_dB");
  const std::size_t ca = header.require("antisqueezing_dB");
  const std::size_t ct = header.require("theta_deg");
  const auto cse = header.find("squeezing_err_dB");
  const auto cae = header.find("antisqueezing_err_dB");
  const auto craw = header.find("raw_noise_dBm");
  const auto cfloor = header.find("electronic_floor_dBm");

  std::vector<MeasuredPoint> out;
  while (std::getline(is, line)) {
    if (trim(line).empty() || trim(line).front() == '#') continue;
    const auto cells = split_csv(line);
    MeasuredPoint p;
    p.energy = required_cell(cells, ce, "energy_pJ") * 1e-12;
    p.squeezing_db = required_cell(cells, cs, "squeezing_dB");
    p.antisqueezing_db = required_cell(cells, ca, "antisqueezing_dB");
    p.theta_deg = required_cell(cells, ct, "theta_deg");
    p.squeezing_error_db = optional_cell(cells, cse, "squeezing_err_dB");
    p.antisqueezing_error_db = optional_cell(cells, cae, "antisqueezing_err_dB");
    p.raw_noise_dbm = optional_cell(cells, craw, "raw_noise_dBm");
    p.electronic_floor_dbm = optional_cell(cells, cfloor, "electronic_floor_dBm");
    if (p.energy < 0.0) throw ParameterError("measured energy must be >= 0");
    if (p.raw_noise_dbm && p.electronic_floor_dbm && !(*p.raw_noise_dbm > *p.electronic_floor_dbm))
      throw ParameterError("measured point at " + format_fixed(p.energy * 1e12, 1) +
                           " pJ has raw noise at or below the electronic floor");
    out.push_back(p);
  }
  return out;
}

std::vector<MeasuredPoint> read_measured_points(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("cannot read measured data " + path.string());
  return read_measured_points(in);
}

ResidualReport compare_to_measurement(const SweepTable& table, std::span<const MeasuredPoint> measured) {
  if (measured.empty()) throw ParameterError("no measured points to compare");
  std::vector<const SweepRow*> rows;
  for (const auto& r : table.rows)
    if (r.ok) rows.push_back(&r);
  if (rows.empty()) throw ParameterError("sweep table has no successful rows");
  std::sort(rows.begin(), rows.end(), [](const SweepRow* a, const SweepRow* b) { return a->energy < b->energy; });

  ResidualReport report;
  double ss = 0.0, sa = 0.0, st = 0.0;
  for (const auto& m : measured) {
    if (m.energy < rows.front()->energy || m.energy > rows.back()->energy) {
      std::clog << "warning: measured energy " << m.energy * 1e12 << " pJ is outside the simulated range; skipped\n";
      report.skipped_energies.push_back(m.energy);
      continue;
    }
    const auto upper = std::upper_bound(rows.begin(), rows.end(), m.energy,
                                        [](double e, const SweepRow* r) { return e < r->energy; });
    const SweepRow& lo = **(upper - 1);
    double sq = lo.detected.squeezing_db;
    double asq = lo.detected.antisqueezing_db;
    double th = std::abs(lo.detected.theta_sq_deg);
    if (m.energy != lo.energy) {
      const SweepRow& hi = **upper;
      const double t = (m.energy - lo.energy) / (hi.energy - lo.energy);
      sq += t * (hi.detected.squeezing_db - sq);
      asq += t * (hi.detected.antisqueezing_db - asq);
      th += t * (std::abs(hi.detected.theta_sq_deg) - th);
    }

    PointResidual r;
    r.energy = m.energy;
    r.squeezing = sq - m.squeezing_db;
    r.antisqueezing = asq - m.antisqueezing_db;
    r.angle = th - std::abs(m.theta_deg);
    r.outside_squeezing_bar = m.squeezing_error_db && std::abs(r.squeezing) > *m.squeezing_error_db;
    r.outside_antisqueezing_bar = m.antisqueezing_error_db && std::abs(r.antisqueezing) > *m.antisqueezing_error_db;
    ss += r.squeezing * r.squeezing;
    sa += r.antisqueezing * r.antisqueezing;
    st += r.angle * r.angle;
    report.points.push_back(r);
  }
  if (!report.points.empty()) {
    const double n = static_cast<double>(report.points.size());
    report.rms_squeezing = std::sqrt(ss / n);
    report.rms_antisqueezing = std::sqrt(sa / n);
    report.rms_angle = std::sqrt(st / n);
  }
  return report;
}

void write_residual_report(std::ostream& os, const ResidualReport& report) {
  os << "energy_pJ,squeezing_resid_dB,antisqueezing_resid_dB,angle_resid_deg,outside_sq_bar,outside_antisq_bar\n";
  for (const auto& p : report.points) {
    os << format_fixed(p.energy * 1e12, 1) << ',' << format_fixed(p.squeezing, 3) << ','
       << format_fixed(p.antisqueezing, 3) << ',' << format_fixed(p.angle, 3) << ','
       << (p.outside_squeezing_bar ? 1 : 0) << ',' << (p.outside_antisqueezing_bar ? 1 : 0) << '\n';
  }
  os << "rms," << format_fixed(report.rms_squeezing, 3) << ',' << format_fixed(report.rms_antisqueezing, 3) << ','
     << format_fixed(report.rms_angle, 3) << ",,\n";
}

}  // namespace polsqueeze
