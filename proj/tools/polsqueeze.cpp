#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "polsqueeze/config.hpp"
#include "polsqueeze/errors.hpp"
#include "polsqueeze/oracle_suite.hpp"
#include "polsqueeze/sweep.hpp"

using namespace polsqueeze;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPartial = 1;
constexpr int kExitConfig = 2;

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  unsigned threads = 0;
  std::string seed;

  RunConfig load() const {
    std::vector<std::string> all = overrides;
    if (!seed.empty()) all.push_back("ensemble.seed=" + seed);
    RunConfig cfg = config_path.empty() ? parse_run_config("", all) : load_run_config(config_path, all);
    if (threads > 0) cfg.threads = threads;
    cfg.validate();
    return cfg;
  }
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("-c,--config", opts.config_path, "YAML run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--set", opts.overrides, "Override a config key, e.g. --set pulse.energy=\"98.6 pJ\"")
      ->take_all();
  cmd->add_option("-j,--threads", opts.threads, "Worker threads per ensemble");
}

void print_row(const SweepRow& row) {
  if (!row.ok) {
    std::cout << row.energy * 1e12 << " pJ: FAILED (" << row.error << ")\n";
    return;
  }
  write_summary_line(std::cout, row);
}

int run_sweep_command(const CommonOptions& opts, const std::string& output) {
  RunConfig cfg = opts.load();
  if (!output.empty()) cfg.output_directory = output;
  SweepWriter writer(cfg.output_directory);
  std::cout << kSummaryHeader << '\n';
  const SweepTable table = run_sweep(cfg, &writer, print_row);

  if (cfg.comparison_data) {
    const auto measured = read_measured_points(*cfg.comparison_data);
    const ResidualReport report = compare_to_measurement(table, measured);
    std::ofstream out(writer.directory() / "residuals.csv");
    write_residual_report(out, report);
  }
  std::cerr << "wrote " << writer.directory().string() << '\n';
  return table.failures() > 0 ? kExitPartial : kExitOk;
}

int run_single_command(const CommonOptions& opts, const std::string& energy_text, const std::string& curve) {
  RunConfig cfg = opts.load();
  const double energy = energy_text.empty() ? cfg.experiment.pulse.total_energy
                                            : parse_quantity(energy_text, Dimension::kEnergy);
  cfg.energies = {energy};
  cfg.validate();
  const SweepRow row = run_energy(cfg, energy, cfg.threads);
  std::cout << kSummaryHeader << '\n';
  print_row(row);
  if (!row.ok) return kExitPartial;
  std::cout << "intrinsic: squeezing " << row.intrinsic.squeezing_db << " dB, antisqueezing "
            << row.intrinsic.antisqueezing_db << " dB\n";
  if (row.aborted > 0) std::cout << "aborted trajectories: " << row.aborted << '\n';
  if (!curve.empty()) {
    std::ofstream out(curve);
    write_variance_curve_csv(out, row.detected);
  }
  return kExitOk;
}

int run_fit_command(const CommonOptions& opts, const std::string& data, const std::vector<std::string>& points,
                    GawbsFitOptions fit_options) {
  const RunConfig cfg = opts.load();
  std::vector<AnglePoint> measured;
  if (!data.empty()) {
    for (const auto& p : read_measured_points(data)) measured.push_back({p.energy, p.theta_deg});
  }
  for (const auto& p : points) {
    const auto colon = p.find(':');
    if (colon == std::string::npos) throw ConfigError("--point expects ENERGY:ANGLE_DEG, got '" + p + "'");
    measured.push_back({parse_quantity(p.substr(0, colon), Dimension::kEnergy), std::stod(p.substr(colon + 1))});
  }
  if (measured.empty()) throw ConfigError("fit-gawbs needs --data or at least one --point");

  GawbsAngleModel model(cfg, cfg.threads);
  const GawbsFit fit = fit_gawbs_coefficient(
      measured, [&](double e, double g) { return model(e, g); }, fit_options);
  std::cout << "gawbs_coefficient_rad2_per_J " << fit.coefficient << '\n'
            << "residual_deg2 " << fit.residual << '\n'
            << "iterations " << fit.iterations << '\n';
  for (std::size_t i = 0; i < measured.size(); ++i) {
    std::cout << "  " << measured[i].energy * 1e12 << " pJ: measured " << measured[i].theta_deg
              << " deg, residual " << fit.point_residuals[i] << " deg\n";
  }
  return kExitOk;
}

int run_compare_command(const std::string& summary, const std::string& data) {
  std::ifstream in(summary);
  if (!in) throw ConfigError("cannot read " + summary);
  const SweepTable table = read_summary_csv(in);
  const auto measured = read_measured_points(data);
  write_residual_report(std::cout, compare_to_measurement(table, measured));
  return kExitOk;
}

int run_oracle_command(std::size_t trajectories, std::uint64_t seed, unsigned threads) {
  std::vector<OracleComparison> results;
  for (const auto& c : default_oracle_cases())
    results.push_back(compare_kerr_oracle(c.mean_photons, c.kerr_phase, trajectories, seed, std::max(1u, threads)));
  write_oracle_report(std::cout, results);
  for (const auto& r : results)
    if (std::abs(r.difference_db()) > kOracleToleranceDb) return kExitPartial;
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic simulation of polarization squeezing in Kerr fiber"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  CommonOptions sweep_opts, single_opts, fit_opts;
  std::string output, energy, curve, data, summary;
  std::vector<std::string> points;
  GawbsFitOptions fit_options;
  std::size_t oracle_trajectories = 50000;
  std::uint64_t oracle_seed = 1;
  unsigned oracle_threads = 1;

  auto* sweep = app.add_subcommand("sweep", "Run the pulse-energy sweep");
  add_common(sweep, sweep_opts);
  sweep->add_option("--seed", sweep_opts.seed, "Master seed")->required();
  sweep->add_option("-o,--output", output, "Output directory (overrides output.directory)");

  auto* single = app.add_subcommand("single", "Simulate one energy and print its row");
  add_common(single, single_opts);
  single->add_option("--seed", single_opts.seed, "Master seed");
  single->add_option("-e,--energy", energy, "Total pulse energy, e.g. \"98.6 pJ\"");
  single->add_option("--curve", curve, "Write the detected V(theta) curve to this CSV");

  auto* fit = app.add_subcommand("fit-gawbs", "Fit the GAWBS coefficient to measured squeezing angles");
  add_common(fit, fit_opts);
  fit->add_option("--seed", fit_opts.seed, "Master seed");
  fit->add_option("--data", data, "Measured-data CSV")->check(CLI::ExistingFile);
  fit->add_option("--point", points, "ENERGY:ANGLE_DEG, e.g. \"98.6 pJ:1.71\"")->take_all();
  fit->add_option("--max-coefficient", fit_options.max_coefficient, "Upper bound of the search, rad^2/J");
  fit->add_option("--min-points", fit_options.min_points, "Minimum number of angle points");

  auto* compare = app.add_subcommand("compare", "Residuals of a summary CSV against measured data");
  compare->add_option("--summary", summary, "summary.csv from a sweep")->required()->check(CLI::ExistingFile);
  compare->add_option("--data", data, "Measured-data CSV")->required()->check(CLI::ExistingFile);

  auto* oracle = app.add_subcommand("oracle", "Compare single-mode Kerr squeezing with the number-basis oracle");
  oracle->add_option("-n,--trajectories", oracle_trajectories, "Trajectories per case");
  oracle->add_option("--seed", oracle_seed, "Master seed");
  oracle->add_option("-j,--threads", oracle_threads, "Worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*sweep) return run_sweep_command(sweep_opts, output);
    if (*single) return run_single_command(single_opts, energy, curve);
    if (*fit) return run_fit_command(fit_opts, data, points, fit_options);
    if (*compare) return run_compare_command(summary, data);
    if (*oracle) return run_oracle_command(oracle_trajectories, oracle_seed, oracle_threads);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ParameterError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitPartial;
  }
  return kExitOk;
}
