#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "polsqueeze/errors.hpp"
#include "polsqueeze/propagation.hpp"

using namespace polsqueeze;

namespace {

double relative_l2(std::span<const Complex> a, std::span<const Complex> b) {
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    num += std::norm(a[j] - b[j]);
    den += std::norm(b[j]);
  }
  return std::sqrt(num / den);
}

double time_centroid(const FieldState& s) {
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < s.grid.n_points; ++j) {
    num += s.grid.time(j) * std::norm(s.pol_x[j]);
    den += std::norm(s.pol_x[j]);
  }
  return num / den;
}

double mean_frequency(const FieldState& s) {
  const std::size_t n = s.grid.n_points;
  ComplexVector spec(n);
  SpectralTransform(n).to_frequency(s.pol_x, spec);
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    num += s.grid.angular_frequency(k) * std::norm(spec[k]);
    den += std::norm(spec[k]);
  }
  return num / den;
}

PropagationModel deterministic(PropagationModel m) {
  m.input_noise_enabled = false;
  m.raman_noise_enabled = false;
  return m;
}

StepperConfig steps(std::size_t n, SplitScheme scheme = SplitScheme::kAuto) {
  StepperConfig s;
  s.n_steps = n;
  s.scheme = scheme;
  return s;
}

ExperimentSpec at_energy(double e) {
  ExperimentSpec spec;
  spec.pulse.total_energy = e;
  return spec;
}

FieldState run(const ExperimentSpec& spec, const TimeGrid& g, const PropagationModel& m, const StepperConfig& st) {
  const Propagator p(spec, g, m, st, false);
  return p.propagate(init_coherent_sech(spec, g), 1, 0);
}

}  // namespace

TEST_CASE("dispersed Gaussian matches the closed form") {
  const TimeGrid g = make_grid(4096, 10e-12);
  ExperimentSpec spec;
  spec.fiber.length = 2.0;
  PropagationModel m = PropagationModel::all_disabled();
  m.gvd_enabled = true;
  const Propagator p(spec, g, m, steps(1), false);

  const double T = 100e-15;
  FieldState s(g);
  for (std::size_t j = 0; j < g.n_points; ++j) s.pol_x[j] = std::exp(-0.5 * std::pow(g.time(j) / T, 2));
  const FieldState out = p.propagate(s, 1, 0);

  // u(z,t) = T / sqrt(T^2 - i b2 z) exp(-t^2 / (2 (T^2 - i b2 z)))
  const Complex q(T * T, -spec.fiber.beta2 * spec.fiber.length);
  ComplexVector expected(g.n_points);
  for (std::size_t j = 0; j < g.n_points; ++j)
    expected[j] = T / std::sqrt(q) * std::exp(-g.time(j) * g.time(j) / (2.0 * q));
  CHECK(relative_l2(out.pol_x, expected) < 1e-8);
}

TEST_CASE("all terms disabled is the identity") {
  const TimeGrid g = make_grid(1024, 5e-12);
  const ExperimentSpec spec;
  const FieldState in = init_coherent_sech(spec, g);
  const FieldState out = run(spec, g, PropagationModel::all_disabled(), steps(100));
  CHECK(relative_l2(out.pol_x, in.pol_x) < 1e-14);
  CHECK(relative_l2(out.pol_y, in.pol_y) < 1e-14);
}

TEST_CASE("distributed loss over the fiber") {
  const TimeGrid g = make_grid(1024, 5e-12);
  const ExperimentSpec spec;
  PropagationModel m = PropagationModel::all_disabled();
  m.loss_enabled = true;
  const FieldState in = init_coherent_sech(spec, g);
  const FieldState out = run(spec, g, m, steps(10));
  const double ratio = total_photon_number(out) / total_photon_number(in);
  CHECK(ratio == doctest::Approx(std::pow(10.0, -0.0026796)).epsilon(1e-9));
  CHECK(ratio == doctest::Approx(0.99385).epsilon(1e-5));
}

TEST_CASE("nonlinear step") {
  const TimeGrid g = make_grid(256, 2e-12);
  const ExperimentSpec spec;
  PropagationModel kerr = deterministic(PropagationModel::all_disabled());
  kerr.kerr_enabled = true;
  const Propagator p(spec, g, kerr, steps(1000, SplitScheme::kStrang), false);
  auto ws = p.make_workspace();

  SUBCASE("pure phase without Raman") {
    FieldState s = init_coherent_sech(spec, g);
    const ComplexVector before = s.pol_x;
    p.nonlinear_step(s.pol_x, {}, 1.0, ws);
    for (std::size_t j = 0; j < g.n_points; ++j)
      CHECK(std::abs(std::abs(s.pol_x[j]) - std::abs(before[j])) <= 4e-16 * std::abs(before[j]));
  }

  SUBCASE("single bin phase advance") {
    ComplexVector u(g.n_points);
    u[17] = Complex(3e7, 4e7);
    const double expected = p.dz() * p.gamma_flux() * std::norm(u[17]);
    p.nonlinear_step(u, {}, 1.0, ws);
    CHECK(std::abs(std::arg(u[17]) - std::atan2(4.0, 3.0) - expected) < 1e-10);
  }

  SUBCASE("CW field sees the same phase with and without Raman") {
    PropagationModel raman = kerr;
    raman.raman.enabled = true;
    const Propagator pr(spec, g, raman, steps(1000, SplitScheme::kStrang), false);
    auto wr = pr.make_workspace();
    ComplexVector a(g.n_points, Complex(2e8, 0.0)), b = a;
    p.nonlinear_step(a, {}, 1.0, ws);
    pr.nonlinear_step(b, {}, 1.0, wr);
    for (std::size_t j = 0; j < g.n_points; ++j) CHECK(std::abs(std::arg(a[j]) - std::arg(b[j])) < 1e-12);
  }
}

TEST_CASE("photon number is conserved without loss or noise") {
  const TimeGrid g = make_grid(1024, 5e-12);
  const ExperimentSpec spec = at_energy(178.8e-12);
  const double n0 = total_photon_number(init_coherent_sech(spec, g));
  for (int mask = 0; mask < 16; ++mask) {
    PropagationModel m = deterministic(PropagationModel{});
    m.gvd_enabled = mask & 1;
    m.tod_enabled = mask & 2;
    m.kerr_enabled = mask & 4;
    m.raman.enabled = mask & 8;
    const FieldState out = run(spec, g, m, steps(1500));
    CAPTURE(mask);
    CHECK(std::abs(total_photon_number(out) / n0 - 1.0) < 1e-9);
  }
}

TEST_CASE("step doubling converges") {
  const TimeGrid g = make_grid(1024, 5e-12);
  const ExperimentSpec spec;
  const PropagationModel m = deterministic(PropagationModel{});
  const FieldState a = run(spec, g, m, steps(4000));
  const FieldState b = run(spec, g, m, steps(8000));
  CHECK(relative_l2(a.pol_x, b.pol_x) < 1e-6);
}

TEST_CASE("Strang and fourth-order schemes agree") {
  const TimeGrid g = make_grid(1024, 5e-12);
  const ExperimentSpec spec;
  const PropagationModel m = deterministic(PropagationModel{});
  const FieldState a = run(spec, g, m, steps(4000, SplitScheme::kStrang));
  const FieldState b = run(spec, g, m, steps(4000, SplitScheme::kFourthOrder));
  CHECK(relative_l2(a.pol_x, b.pol_x) < 1e-4);
}

TEST_CASE("fundamental soliton keeps its shape and gains only the z / 2L_D phase") {
  const TimeGrid g = make_grid(1024, 5e-12);
  ExperimentSpec spec;
  spec.pulse.total_energy = fundamental_soliton_total_energy(spec.fiber, spec.pulse);
  PropagationModel m = PropagationModel::all_disabled();
  m.gvd_enabled = true;
  m.kerr_enabled = true;
  const FieldState in = init_coherent_sech(spec, g);
  const FieldState out = run(spec, g, m, steps(4000));
  const double phase = spec.fiber.length / (2.0 * derive_scales(spec.fiber, spec.pulse).dispersion_length);
  ComplexVector expected(in.pol_x.begin(), in.pol_x.end());
  for (auto& v : expected) v *= std::polar(1.0, phase);
  CHECK(relative_l2(out.pol_x, expected) < 1e-6);
}

TEST_CASE("third-order dispersion delays the soliton") {
  const TimeGrid g = make_grid(1024, 5e-12);
  ExperimentSpec spec;
  spec.pulse.total_energy = fundamental_soliton_total_energy(spec.fiber, spec.pulse);
  PropagationModel m = deterministic(PropagationModel{});
  m.raman.enabled = false;
  const FieldState coarse = run(spec, g, m, steps(2000));
  const FieldState fine = run(spec, g, m, steps(4000));
  CHECK(time_centroid(fine) > 1e-16);
  CHECK(time_centroid(coarse) == doctest::Approx(time_centroid(fine)).epsilon(1e-4));

  spec.fiber.beta3 = -spec.fiber.beta3;
  CHECK(time_centroid(run(spec, g, m, steps(4000))) < -1e-16);
}

TEST_CASE("Raman shifts the spectrum to the red, more at higher energy") {
  const TimeGrid g = make_grid(1024, 5e-12);
  PropagationModel m = deterministic(PropagationModel{});
  m.tod_enabled = false;
  const double w_low = mean_frequency(run(at_energy(98.6e-12), g, m, steps(1500)));
  const double w_high = mean_frequency(run(at_energy(178.8e-12), g, m, steps(1500)));
  CHECK(w_low < 0.0);
  CHECK(w_high < w_low);

  m.raman.enabled = false;
  CHECK(std::abs(mean_frequency(run(at_energy(178.8e-12), g, m, steps(1500)))) < 1e-6 * std::abs(w_high));
}

TEST_CASE("deterministic classical limit matches stored golden output") {
  const TimeGrid g = make_grid(256, 2e-12);
  const ExperimentSpec spec;
  const FieldState out = run(spec, g, deterministic(PropagationModel{}), steps(1000));

  std::ifstream in(std::string(POLSQUEEZE_TEST_DATA) + "/golden_classical.txt");
  REQUIRE(in);
  std::string line;
  std::size_t checked = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::size_t j;
    double re, im;
    ls >> j >> re >> im;
    CAPTURE(j);
    CHECK(out.pol_x[j].real() == doctest::Approx(re).epsilon(1e-9));
    CHECK(out.pol_x[j].imag() == doctest::Approx(im).epsilon(1e-9));
    ++checked;
  }
  CHECK(checked >= 8);
}

TEST_CASE("guards") {
  const TimeGrid g = make_grid(256, 2e-12);
  ExperimentSpec spec;

  SUBCASE("excess step phase is rejected") {
    const Propagator p(spec, g, deterministic(PropagationModel{}), steps(50), false);
    CHECK_THROWS_AS(p.propagate(init_coherent_sech(spec, g), 1, 0), ParameterError);
  }
  SUBCASE("edge-band energy aborts the trajectory") {
    PropagationModel m = deterministic(PropagationModel{});
    const Propagator p(spec, g, m, steps(1000), false);
    FieldState s = init_coherent_sech(spec, g);
    for (std::size_t j = 0; j < g.n_points; ++j) s.pol_x[j] += (j % 2 ? 1.0 : -1.0) * 1e9;
    CHECK_THROWS_AS(p.propagate(s, 1, 0), TrajectoryAbort);
  }
  SUBCASE("non-finite field aborts the trajectory") {
    const Propagator p(spec, g, deterministic(PropagationModel{}), steps(1000), false);
    FieldState s = init_coherent_sech(spec, g);
    s.pol_y[3] = Complex(std::nan(""), 0.0);
    CHECK_THROWS_AS(p.propagate(s, 1, 0), TrajectoryAbort);
  }
  SUBCASE("fourth order refuses in-fiber noise") {
    CHECK_THROWS_AS(Propagator(spec, g, PropagationModel{}, steps(1000, SplitScheme::kFourthOrder), true),
                    ParameterError);
  }
  SUBCASE("auto picks the scheme from the noise setting") {
    CHECK(Propagator(spec, g, PropagationModel{}, steps(1000), true).scheme() == SplitScheme::kStrang);
    CHECK(Propagator(spec, g, PropagationModel{}, steps(1000), false).scheme() == SplitScheme::kFourthOrder);
  }
}

TEST_CASE("ensemble propagation") {
  const TimeGrid g = make_grid(256, 2e-12);
  const ExperimentSpec spec;
  const PropagationModel m;
  const StepperConfig st = steps(1000);

  SUBCASE("one noiseless trajectory equals a single propagate") {
    EnsembleConfig ens;
    ens.n_trajectories = 1;
    ens.noise_enabled = false;
    const auto out = propagate_ensemble(spec, g, m, st, ens);
    const FieldState direct = run(spec, g, m, st);
    REQUIRE(out.size() == 1);
    CHECK(relative_l2(out[0].pol_x, direct.pol_x) == 0.0);
  }

  SUBCASE("thread count does not change results") {
    EnsembleConfig ens;
    ens.n_trajectories = 6;
    ens.master_seed = 99;
    const auto a = propagate_ensemble(spec, g, m, st, ens, 1);
    const auto b = propagate_ensemble(spec, g, m, st, ens, 3);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      for (std::size_t j = 0; j < g.n_points; ++j) {
        CHECK(a[i].pol_x[j] == b[i].pol_x[j]);
        CHECK(a[i].pol_y[j] == b[i].pol_y[j]);
      }
    }
  }
}

TEST_CASE("linear propagation preserves vacuum statistics") {
  constexpr std::size_t n_traj = 4000;
  const TimeGrid g = make_grid(256, 2e-12);
  const ExperimentSpec spec;
  EnsembleConfig ens;
  ens.n_trajectories = n_traj;
  const auto out = propagate_ensemble(spec, g, PropagationModel::linear_reference(), steps(1000), ens);
  const FieldState mean_field = run(spec, g, PropagationModel::linear_reference(), steps(1000));

  const double sigma2 = 1.0 / (4.0 * g.dt);
  const double tol = 4.0 * sigma2 * std::sqrt(2.0 / (n_traj - 1.0));
  for (std::size_t j : {0u, 64u, 128u, 200u}) {
    double s = 0.0, ss = 0.0;
    for (const auto& f : out) {
      const double d = (f.pol_x[j] - mean_field.pol_x[j]).real();
      s += d;
      ss += d * d;
    }
    const double var = (ss - s * s / n_traj) / (n_traj - 1.0);
    CAPTURE(j);
    CHECK(std::abs(var - sigma2) < tol);
  }
}
