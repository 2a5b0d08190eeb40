#include "polsqueeze/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "polsqueeze/errors.hpp"

namespace polsqueeze {

namespace {

using UnitTable = std::map<std::string, double>;

const UnitTable& units_for(Dimension dimension) {
  static const std::map<Dimension, UnitTable> tables = {
      {Dimension::kDimensionless, {{"", 1.0}}},
      {Dimension::kLength, {{"m", 1.0}, {"km", 1e3}, {"mm", 1e-3}, {"um", 1e-6}, {"nm", 1e-9}}},
      {Dimension::kTime,
       {{"s", 1.0}, {"ms", 1e-3}, {"us", 1e-6}, {"ns", 1e-9}, {"ps", 1e-12}, {"fs", 1e-15}}},
      {Dimension::kEnergy,
       {{"J", 1.0}, {"mJ", 1e-3}, {"uJ", 1e-6}, {"nJ", 1e-9}, {"pJ", 1e-12}, {"fJ", 1e-15}}},
      {Dimension::kArea, {{"m^2", 1.0}, {"mm^2", 1e-6}, {"um^2", 1e-12}}},
      {Dimension::kGroupVelocityDispersion,
       {{"s^2/m", 1.0}, {"ps^2/km", 1e-27}, {"ps^2/m", 1e-24}, {"fs^2/mm", 1e-27}}},
      {Dimension::kThirdOrderDispersion,
       {{"s^3/m", 1.0}, {"ps^3/km", 1e-39}, {"ps^3/m", 1e-36}, {"fs^3/mm", 1e-42}}},
      {Dimension::kAttenuation, {{"dB/km", 1.0}, {"dB/m", 1e3}}},
      {Dimension::kTemperature, {{"K", 1.0}}},
      {Dimension::kPowerDbm, {{"dBm", 1.0}}},
      {Dimension::kNonlinearIndex, {{"m^2/W", 1.0}, {"cm^2/W", 1e-4}}},
      {Dimension::kGawbs, {{"rad^2/J", 1.0}, {"rad^2/pJ", 1e12}}},
  };
  return tables.at(dimension);
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

// Reads keys of one mapping and complains about anything left unread.
class Section {
 public:
  Section(const YAML::Node& node, std::string name) : node_(node), name_(std::move(name)) {
    if (node_ && !node_.IsMap()) throw ConfigError("section '" + name_ + "' must be a mapping");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return node_ && node_[key];
  }

  std::string scalar(const std::string& key) {
    const YAML::Node v = node_[key];
    if (!v.IsScalar()) throw ConfigError(path(key) + " must be a scalar");
    return v.Scalar();
  }

  void read(const std::string& key, double& out, Dimension dim) {
    if (!has(key)) return;
    try {
      out = parse_quantity(scalar(key), dim);
    } catch (const ConfigError& e) {
      throw ConfigError(path(key) + ": " + e.what());
    }
  }

  void read(const std::string& key, bool& out) {
    if (!has(key)) return;
    try {
      out = node_[key].as<bool>();
    } catch (const YAML::Exception&) {
      throw ConfigError(path(key) + " must be true or false");
    }
  }

  template <typename Int>
  void read_count(const std::string& key, Int& out) {
    if (!has(key)) return;
    const std::string text = scalar(key);
    char* end = nullptr;
    const unsigned long long v = std::strtoull(text.c_str(), &end, 10);
    if (text.empty() || *end != '\0' || text.front() == '-')
      throw ConfigError(path(key) + " must be a non-negative integer, got '" + text + "'");
    out = static_cast<Int>(v);
  }

  void read(const std::string& key, std::string& out) {
    if (has(key)) out = scalar(key);
  }

  YAML::Node node(const std::string& key) {
    seen_.insert(key);
    return node_ ? node_[key] : YAML::Node();
  }

  void finish() const {
    if (!node_) return;
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!seen_.count(key)) throw ConfigError("unknown key " + path(key));
    }
  }

 private:
  std::string path(const std::string& key) const { return name_ + "." + key; }

  YAML::Node node_;
  std::string name_;
  std::set<std::string> seen_;
};

void apply_override(YAML::Node& root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override '" + assignment + "' is not of the form key=value");
  const std::string key = trim(assignment.substr(0, eq));
  const std::string value = trim(assignment.substr(eq + 1));

  std::vector<std::string> parts;
  std::stringstream ss(key);
  for (std::string part; std::getline(ss, part, '.');) {
    if (part.empty()) throw ConfigError("override key '" + key + "' has an empty component");
    parts.push_back(part);
  }

  YAML::Node parsed;
  try {
    parsed = YAML::Load(value);
  } catch (const YAML::Exception& e) {
    throw ConfigError("override '" + assignment + "': " + e.what());
  }

  // yaml-cpp nodes are handles, so walking with operator[] on copies edits
  // the tree in place.
  std::vector<YAML::Node> chain{root};
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    YAML::Node child = chain.back()[parts[i]];
    if (child.IsDefined() && !child.IsNull() && !child.IsMap())
      throw ConfigError("override '" + key + "': '" + parts[i] + "' is not a section");
    if (!child.IsDefined() || child.IsNull()) {
      chain.back()[parts[i]] = YAML::Node(YAML::NodeType::Map);
      child = chain.back()[parts[i]];
    }
    chain.push_back(child);
  }
  chain.back()[parts.back()] = parsed;
}

std::vector<double> read_energy_list(const YAML::Node& list) {
  if (!list.IsSequence()) throw ConfigError("sweep.energies must be a list");
  std::vector<double> out;
  for (const auto& item : list) {
    if (!item.IsScalar()) throw ConfigError("sweep.energies entries must be scalars");
    out.push_back(parse_quantity(item.Scalar(), Dimension::kEnergy));
  }
  return out;
}

RunConfig interpret(const YAML::Node& root) {
  if (root && !root.IsNull() && !root.IsMap()) throw ConfigError("config root must be a mapping");
  RunConfig cfg = default_run_config();

  {
    Section s(root["fiber"], "fiber");
    auto& f = cfg.experiment.fiber;
    s.read("length", f.length, Dimension::kLength);
    s.read("beta2", f.beta2, Dimension::kGroupVelocityDispersion);
    s.read("beta3", f.beta3, Dimension::kThirdOrderDispersion);
    s.read("n2", f.n2, Dimension::kNonlinearIndex);
    s.read("core_diameter", f.core_diameter, Dimension::kLength);
    s.read("attenuation", f.attenuation_db_per_km, Dimension::kAttenuation);
    if (s.has("effective_area")) {
      double a = 0.0;
      s.read("effective_area", a, Dimension::kArea);
      f.effective_area_override = a;
    }
    s.finish();
  }
  {
    Section s(root["pulse"], "pulse");
    auto& p = cfg.experiment.pulse;
    s.read("wavelength", p.center_wavelength, Dimension::kLength);
    s.read("fwhm", p.fwhm_duration, Dimension::kTime);
    s.read("energy", p.total_energy, Dimension::kEnergy);
    if (s.has("shape") && s.scalar("shape") != "sech")
      throw ConfigError("pulse.shape: only 'sech' is supported");
    s.finish();
  }
  {
    Section s(root["detection"], "detection");
    auto& d = cfg.experiment.detection;
    s.read("transmittance", d.total_transmittance, Dimension::kDimensionless);
    s.read("electronic_floor", d.electronic_noise_floor_dbm, Dimension::kPowerDbm);
    s.read("gawbs_coefficient", d.gawbs_coefficient, Dimension::kGawbs);
    if (s.has("loss_convention")) {
      const std::string c = s.scalar("loss_convention");
      if (c == "lumped") cfg.loss_convention = LossConvention::kLumped;
      else if (c == "distributed") cfg.loss_convention = LossConvention::kDistributed;
      else throw ConfigError("detection.loss_convention must be 'lumped' or 'distributed'");
    }
    s.finish();
  }
  {
    Section s(root["model"], "model");
    auto& m = cfg.model;
    s.read("gvd", m.gvd_enabled);
    s.read("tod", m.tod_enabled);
    s.read("kerr", m.kerr_enabled);
    s.read("raman", m.raman.enabled);
    s.read("raman_fraction", m.raman.fraction, Dimension::kDimensionless);
    s.read("tau1", m.raman.tau1, Dimension::kTime);
    s.read("tau2", m.raman.tau2, Dimension::kTime);
    s.read("temperature", m.raman.temperature, Dimension::kTemperature);
    s.read("input_noise", m.input_noise_enabled);
    s.read("raman_noise", m.raman_noise_enabled);
    s.finish();
  }
  {
    Section s(root["stepper"], "stepper");
    auto& st = cfg.stepper;
    s.read_count("steps", st.n_steps);
    if (s.has("scheme")) {
      try {
        st.scheme = parse_split_scheme(s.scalar("scheme"));
      } catch (const ParameterError& e) {
        throw ConfigError(std::string("stepper.scheme: ") + e.what());
      }
    }
    s.read("aliasing_guard", st.aliasing_guard, Dimension::kDimensionless);
    s.read("max_step_phase", st.max_step_phase, Dimension::kDimensionless);
    s.read_count("guard_interval", st.guard_interval);
    s.finish();
  }
  {
    Section s(root["grid"], "grid");
    s.read_count("points", cfg.grid_points);
    s.read("window", cfg.window, Dimension::kTime);
    s.finish();
  }
  {
    Section s(root["ensemble"], "ensemble");
    s.read_count("trajectories", cfg.ensemble.n_trajectories);
    s.read_count("reference_trajectories", cfg.reference_trajectories);
    s.read_count("seed", cfg.ensemble.master_seed);
    s.read("noise", cfg.ensemble.noise_enabled);
    s.read_count("threads", cfg.threads);
    s.finish();
  }
  {
    Section s(root["sweep"], "sweep");
    const bool has_list = s.has("energies");
    double lo = kSweepMinEnergy, hi = kSweepMaxEnergy;
    std::size_t points = kSweepDefaultPoints;
    s.read("min_energy", lo, Dimension::kEnergy);
    s.read("max_energy", hi, Dimension::kEnergy);
    s.read_count("points", points);
    const bool has_range = s.has("min_energy") || s.has("max_energy") || s.has("points");
    if (has_list && has_range)
      throw ConfigError("sweep: give either 'energies' or a min_energy/max_energy/points range");
    cfg.energies = has_list ? read_energy_list(s.node("energies")) : log_spaced_energies(lo, hi, points);
    s.read_count("theta_points", cfg.theta_points);
    s.finish();
  }
  {
    Section s(root["output"], "output");
    s.read("directory", cfg.output_directory);
    if (s.has("comparison_data")) cfg.comparison_data = s.scalar("comparison_data");
    s.finish();
  }

  if (root && root.IsMap()) {
    static const std::set<std::string> known = {"fiber", "pulse",    "detection", "model", "stepper",
                                                "grid",  "ensemble", "sweep",     "output"};
    for (const auto& kv : root) {
      const auto key = kv.first.as<std::string>();
      if (!known.count(key)) throw ConfigError("unknown section '" + key + "'");
    }
  }
  cfg.model.loss_enabled = cfg.loss_convention == LossConvention::kDistributed;
  return cfg;
}

}  // namespace

double parse_quantity(const std::string& text, Dimension dimension) {
  const std::string t = trim(text);
  char* end = nullptr;
  const double value = std::strtod(t.c_str(), &end);
  if (end == t.c_str()) throw ConfigError("'" + text + "' does not start with a number");
  const std::string unit = trim(std::string(end));
  const auto& table = units_for(dimension);
  if (unit.empty()) return value;
  const auto it = table.find(unit);
  if (it == table.end()) throw ConfigError("unit '" + unit + "' not accepted for '" + text + "'");
  return value * it->second;
}

std::vector<double> log_spaced_energies(double lo, double hi, std::size_t count) {
  if (count == 0) throw ConfigError("energy grid needs at least one point");
  if (!(lo > 0.0) || !(hi >= lo)) throw ConfigError("energy range must satisfy 0 < min <= max");
  if (count == 1) return {lo};
  std::vector<double> out(count);
  const double step = std::log(hi / lo) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) out[i] = lo * std::exp(step * static_cast<double>(i));
  out.back() = hi;
  return out;
}

RunConfig default_run_config() {
  RunConfig cfg;
  cfg.energies = log_spaced_energies(kSweepMinEnergy, kSweepMaxEnergy, kSweepDefaultPoints);
  return cfg;
}

double RunConfig::lumped_transmittance() const {
  const double eta = experiment.detection.total_transmittance;
  if (loss_convention == LossConvention::kLumped) return eta;
  return std::min(1.0, eta / fiber_power_transmission(experiment.fiber));
}

void RunConfig::validate() const {
  try {
    experiment.validate();
    model.raman.validate();
    stepper.validate();
    ensemble.validate();
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }

  const double eta = experiment.detection.total_transmittance;
  if (!(eta > 0.0 && eta <= 1.0)) throw ConfigError("detection.transmittance must lie in (0, 1]");
  if (energies.empty()) throw ConfigError("sweep energy list is empty");
  for (double e : energies)
    if (!(e >= 0.0) || !std::isfinite(e)) throw ConfigError("sweep energies must be finite and >= 0");
  if (theta_points < 8) throw ConfigError("sweep.theta_points must be at least 8");
  if (reference_trajectories < 2) throw ConfigError("ensemble.reference_trajectories must be at least 2");
  if (threads < 1) throw ConfigError("ensemble.threads must be at least 1");

  TimeGrid g;
  try {
    g = grid();
  } catch (const ParameterError& e) {
    throw ConfigError(std::string("grid: ") + e.what());
  }
  const double t0 = sech_width(experiment.pulse.fwhm_duration);
  if (window < kMinWindowInT0 * t0) {
    std::ostringstream msg;
    msg << "grid.window " << window << " s is shorter than " << kMinWindowInT0 << " t0 = " << kMinWindowInT0 * t0
        << " s";
    throw ConfigError(msg.str());
  }

  // Per-step phase bound at the highest energy of the sweep.
  ExperimentSpec spec = experiment;
  spec.pulse.total_energy = *std::max_element(energies.begin(), energies.end());
  try {
    const Propagator prop(spec, g, model, stepper, ensemble.noise_enabled);
    const double phase = prop.peak_step_phase(init_coherent_sech(spec, g));
    if (phase > stepper.max_step_phase) {
      std::ostringstream msg;
      msg << "per-step nonlinear phase " << phase << " rad at " << spec.pulse.total_energy * 1e12
          << " pJ exceeds stepper.max_step_phase = " << stepper.max_step_phase << " rad";
      throw ConfigError(msg.str());
    }
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  } catch (const TruncationError& e) {
    throw ConfigError(e.what());
  }
}

RunConfig parse_run_config(const std::string& yaml_text, const std::vector<std::string>& overrides) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config is not valid YAML: ") + e.what());
  }
  if (!root || root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
  for (const auto& o : overrides) apply_override(root, o);
  try {
    return interpret(root);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

RunConfig load_run_config(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str(), overrides);
}

nlohmann::json to_json(const RunConfig& c) {
  const auto& f = c.experiment.fiber;
  const auto& p = c.experiment.pulse;
  const auto& d = c.experiment.detection;
  const auto& m = c.model;
  nlohmann::json j;
  j["fiber"] = {{"length_m", f.length},
                {"beta2_s2_per_m", f.beta2},
                {"beta3_s3_per_m", f.beta3},
                {"n2_m2_per_W", f.n2},
                {"core_diameter_m", f.core_diameter},
                {"attenuation_dB_per_km", f.attenuation_db_per_km},
                {"effective_area_m2", f.effective_area()}};
  j["pulse"] = {{"wavelength_m", p.center_wavelength}, {"fwhm_s", p.fwhm_duration}, {"shape", "sech"}};
  j["detection"] = {{"transmittance", d.total_transmittance},
                    {"lumped_transmittance", c.lumped_transmittance()},
                    {"electronic_floor_dBm", d.electronic_noise_floor_dbm},
                    {"gawbs_coefficient_rad2_per_J", d.gawbs_coefficient},
                    {"loss_convention", c.loss_convention == LossConvention::kLumped ? "lumped" : "distributed"}};
  j["model"] = {{"gvd", m.gvd_enabled},
                {"tod", m.tod_enabled},
                {"kerr", m.kerr_enabled},
                {"raman", m.raman.enabled},
                {"raman_fraction", m.raman.fraction},
                {"tau1_s", m.raman.tau1},
                {"tau2_s", m.raman.tau2},
                {"temperature_K", m.raman.temperature},
                {"loss", m.loss_enabled},
                {"input_noise", m.input_noise_enabled},
                {"raman_noise", m.raman_noise_enabled}};
  j["stepper"] = {{"steps", c.stepper.n_steps},
                  {"scheme", to_string(c.stepper.scheme)},
                  {"aliasing_guard", c.stepper.aliasing_guard},
                  {"max_step_phase", c.stepper.max_step_phase},
                  {"guard_interval", c.stepper.guard_interval}};
  j["grid"] = {{"points", c.grid_points}, {"window_s", c.window}};
  j["ensemble"] = {{"trajectories", c.ensemble.n_trajectories},
                   {"reference_trajectories", c.reference_trajectories},
                   {"seed", c.ensemble.master_seed},
                   {"noise", c.ensemble.noise_enabled}};
  j["sweep"] = {{"energies_J", c.energies}, {"theta_points", c.theta_points}};
  j["output"] = {{"directory", c.output_directory}};
  if (c.comparison_data) j["output"]["comparison_data"] = *c.comparison_data;
  return j;
}

}  // namespace polsqueeze
