#include <doctest.h>

#include <cmath>

#include "polsqueeze/config.hpp"
#include "polsqueeze/errors.hpp"

using namespace polsqueeze;

TEST_CASE("quantities with unit suffixes") {
  CHECK(parse_quantity("140 fs", Dimension::kTime) == doctest::Approx(140e-15).epsilon(1e-15));
  CHECK(parse_quantity("1499.5 nm", Dimension::kLength) == doctest::Approx(1499.5e-9).epsilon(1e-15));
  CHECK(parse_quantity("98.6 pJ", Dimension::kEnergy) == doctest::Approx(98.6e-12).epsilon(1e-15));
  CHECK(parse_quantity("13.2 m", Dimension::kLength) == 13.2);
  CHECK(parse_quantity("5.7um", Dimension::kLength) == doctest::Approx(5.7e-6).epsilon(1e-15));
  CHECK(parse_quantity("-11.1 fs^2/mm", Dimension::kGroupVelocityDispersion) ==
        doctest::Approx(-11.1e-27).epsilon(1e-15));
  CHECK(parse_quantity("-11.1 ps^2/km", Dimension::kGroupVelocityDispersion) ==
        doctest::Approx(-11.1e-27).epsilon(1e-15));
  CHECK(parse_quantity("83.8 fs^3/mm", Dimension::kThirdOrderDispersion) == doctest::Approx(83.8e-42).epsilon(1e-15));
  CHECK(parse_quantity("2.03 dB/km", Dimension::kAttenuation) == 2.03);
  CHECK(parse_quantity("-85.1 dBm", Dimension::kPowerDbm) == -85.1);
  CHECK(parse_quantity("2.9e-20", Dimension::kNonlinearIndex) == 2.9e-20);
  CHECK(parse_quantity("25.5 um^2", Dimension::kArea) == doctest::Approx(25.5e-12).epsilon(1e-15));
  CHECK_THROWS_AS(parse_quantity("140 furlongs", Dimension::kTime), ConfigError);
  CHECK_THROWS_AS(parse_quantity("140 pJ", Dimension::kTime), ConfigError);
  CHECK_THROWS_AS(parse_quantity("fs", Dimension::kTime), ConfigError);
}

TEST_CASE("default energy grid") {
  const RunConfig c = default_run_config();
  REQUIRE(c.energies.size() == 12);
  CHECK(c.energies.front() == doctest::Approx(3.5e-12).epsilon(1e-14));
  CHECK(c.energies.back() == 178.8e-12);
  for (std::size_t i = 1; i + 1 < c.energies.size(); ++i) {
    CHECK(c.energies[i] / c.energies[i - 1] == doctest::Approx(c.energies[i + 1] / c.energies[i]).epsilon(1e-12));
  }
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("YAML document with overrides") {
  const std::string yaml = R"(
fiber:
  length: 13.2 m
  beta2: -11.1 fs^2/mm
pulse:
  fwhm: 140 fs
  energy: 98.6 pJ
model:
  raman_fraction: 0.15
ensemble:
  trajectories: 500
  seed: 7
sweep:
  energies: [30 pJ, 98.6 pJ, 178.8 pJ]
grid:
  points: 2048
  window: 5 ps
)";
  const RunConfig c = parse_run_config(yaml, {"ensemble.seed=11", "model.raman=false", "stepper.steps=3000"});
  CHECK(c.experiment.fiber.beta2 == doctest::Approx(-11.1e-27).epsilon(1e-15));
  CHECK(c.ensemble.n_trajectories == 500);
  CHECK(c.ensemble.master_seed == 11);
  CHECK_FALSE(c.model.raman.enabled);
  CHECK(c.stepper.n_steps == 3000);
  CHECK(c.grid_points == 2048);
  REQUIRE(c.energies.size() == 3);
  CHECK(c.energies[1] == doctest::Approx(98.6e-12).epsilon(1e-15));
  CHECK_NOTHROW(c.validate());

  const RunConfig range = parse_run_config("sweep: {min_energy: 10 pJ, max_energy: 40 pJ, points: 3}");
  REQUIRE(range.energies.size() == 3);
  CHECK(range.energies[1] == doctest::Approx(20e-12).epsilon(1e-12));

  const RunConfig list = parse_run_config("", {"sweep.energies=[1 pJ, 2 pJ]"});
  CHECK(list.energies.size() == 2);
}

TEST_CASE("schema errors") {
  CHECK_THROWS_AS(parse_run_config("fiber: {lenght: 3 m}"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("fibre: {length: 3 m}"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("fiber: {length: 3 s}"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("ensemble: {trajectories: -5}"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("model: {raman: maybe}"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("stepper: {scheme: euler}"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("sweep: {energies: [1 pJ], points: 3}"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("[1, 2]"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("", {"noequals"}), ConfigError);
  CHECK_THROWS_AS(load_run_config("/nonexistent/config.yaml"), ConfigError);
}

TEST_CASE("validation rules") {
  auto invalid = [](const std::vector<std::string>& overrides) {
    return parse_run_config("", overrides);
  };
  CHECK_THROWS_AS(invalid({"grid.points=1000"}).validate(), ConfigError);
  CHECK_THROWS_AS(invalid({"grid.window=1 ps"}).validate(), ConfigError);
  CHECK_THROWS_AS(invalid({"stepper.steps=100"}).validate(), ConfigError);
  CHECK_THROWS_AS(invalid({"detection.transmittance=0"}).validate(), ConfigError);
  CHECK_THROWS_AS(invalid({"detection.transmittance=1.1"}).validate(), ConfigError);
  CHECK_NOTHROW(invalid({"detection.transmittance=1"}).validate());
  CHECK_THROWS_AS(invalid({"sweep.energies=[]"}).validate(), ConfigError);
  CHECK_THROWS_AS(invalid({"sweep.energies=[-1 pJ]"}).validate(), ConfigError);
  CHECK_NOTHROW(invalid({"sweep.energies=[0 pJ, 5 pJ]"}).validate());
}

TEST_CASE("loss conventions") {
  const RunConfig lumped = parse_run_config("");
  CHECK_FALSE(lumped.model.loss_enabled);
  CHECK(lumped.lumped_transmittance() == 0.87);

  const RunConfig dist = parse_run_config("detection: {loss_convention: distributed}");
  CHECK(dist.model.loss_enabled);
  CHECK(dist.lumped_transmittance() == doctest::Approx(0.87 / 0.993849).epsilon(1e-5));
}

TEST_CASE("resolved config as JSON") {
  const RunConfig c = parse_run_config("", {"ensemble.seed=1234"});
  const auto j = to_json(c);
  CHECK(j["ensemble"]["seed"] == 1234);
  CHECK(j["grid"]["points"] == 4096);
  CHECK(j["sweep"]["energies_J"].size() == 12);
  CHECK(j["stepper"]["scheme"] == "auto");
}
