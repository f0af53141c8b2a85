#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "tcsim/constants.hpp"
#include "tcsim/coupling.hpp"
#include "tcsim/levmar.hpp"
#include "tcsim/resonator.hpp"
#include "tcsim/spectrum.hpp"

using namespace tcsim;
using fixtures::close_rel;

namespace {

Eigen::ArrayXd linspace(double a, double b, int n) {
  Eigen::ArrayXd out(n);
  for (int i = 0; i < n; ++i) out(i) = a + (b - a) * i / (n - 1.0);
  return out;
}

}  // namespace

TEST_CASE("bare tank gives a noise maximum at resonance") {
  EquivalentCircuit circuit;
  circuit.tank = *fixtures::arkr().resonator;
  const double fwhm_hz =
      rad_to_hz(circuit.tank.resonance_frequency() / circuit.tank.quality_factor());
  const Eigen::ArrayXd axis = linspace(-3.0 * fwhm_hz, 3.0 * fwhm_hz, 301);
  const Eigen::ArrayXd power = dip_spectrum(circuit, axis, 4.2);
  Eigen::Index best;
  power.maxCoeff(&best);
  CHECK(std::abs(axis(best)) < fwhm_hz);
  // Local minima only at the window edges, none inside.
  for (Eigen::Index j = 5; j + 5 < axis.size(); ++j)
    CHECK(!(power(j) < power(j - 5) - 3.0 && power(j) < power(j + 5) - 3.0));
}

TEST_CASE("one thermalised ion: noise short at the bare frequency, mode at the pulled one") {
  const CouplingScenario sc = fixtures::arkr(400.0);
  const Resonator& tank = *sc.resonator;
  const double omega_r = tank.resonance_frequency();
  const EffectiveCircuit eff = effective_circuit(tank, sc.resonator_detuning);

  const double dressed = eff.working_frequency;
  const double shift =
      shifted_axial_frequency(sc.ion2, sc.port2, eff.effective_capacitance, dressed) -
      dressed;
  const double bare = dressed - shift;

  EquivalentCircuit circuit;
  circuit.tank = tank;
  circuit.branches = {IonBranch::from_ion(sc.ion2, sc.port2, bare)};

  const Eigen::ArrayXd axis = linspace(398.8, 401.2, 1201);  // 2 mHz bins
  const Eigen::ArrayXd power =
      dip_spectrum(circuit, axis, 4.2, 0.0, 1e-3 * eff.effective_resistance);

  Eigen::Index i_min, i_max;
  power.minCoeff(&i_min);
  power.maxCoeff(&i_max);
  const double step = axis(1) - axis(0);

  // Exactly one deep local minimum across the window.
  int deep_minima = 0;
  const double median = power(0);
  for (Eigen::Index j = 1; j + 1 < axis.size(); ++j)
    if (power(j) <= power(j - 1) && power(j) <= power(j + 1) &&
        power(j) < median - 10.0)
      ++deep_minima;
  CHECK(deep_minima == 1);

  // The short sits at the bare branch frequency...
  CHECK(std::abs(axis(i_min) - rad_to_hz(bare - omega_r)) < 1.5 * step);
  // ...and the mode feature at the pulled frequency: their separation is the
  // pulling shift.
  const double measured_shift = hz_to_rad(axis(i_max) - axis(i_min));
  CHECK(measured_shift == doctest::Approx(shift).epsilon(0.01));
}

TEST_CASE("matched pair splits by the Rabi frequency") {
  const CouplingScenario sc = fixtures::arkr();
  const CouplingSummary s = summarize_coupling(sc);
  Eigen::ArrayXd sweep(1);
  sweep << 0.0;
  const Eigen::ArrayXd window = linspace(146.5, 152.5, 241);  // 25 mHz bins
  const SpectrumGrid grid = avoided_crossing_map(sc, sweep, window);

  const auto features = extract_mode_features(grid);
  REQUIRE(features[0].position_hz.size() == 2);
  const double split = features[0].position_hz[1] - features[0].position_hz[0];
  const double bin = window(1) - window(0);
  CHECK(std::abs(split - rad_to_hz(s.rabi_frequency)) < bin);
}

TEST_CASE("map traces follow the normal-mode hyperbola") {
  const CouplingScenario sc = fixtures::arkr();
  const CouplingSummary s = summarize_coupling(sc);
  const Eigen::ArrayXd sweep = linspace(-3.0, 3.0, 41);
  const Eigen::ArrayXd window = linspace(145.5, 153.5, 321);
  const SpectrumGrid grid = avoided_crossing_map(sc, sweep, window);
  const double bin = window(1) - window(0);

  const auto features = extract_mode_features(grid);
  const double f2 = rad_to_hz(s.shifted_frequencies[1] -
                              sc.resonator->resonance_frequency());
  int checked = 0;
  for (Eigen::Index k = 0; k < sweep.size(); ++k) {
    if (features[k].position_hz.size() != 2) continue;
    const ModeFrequencies m = mode_frequencies(
        s.shifted_frequencies[1] + hz_to_rad(sweep(k)), s.shifted_frequencies[1],
        s.rabi_frequency);
    const double upper =
        rad_to_hz(m.upper - sc.resonator->resonance_frequency());
    const double lower =
        rad_to_hz(m.lower - sc.resonator->resonance_frequency());
    CHECK(std::abs(features[k].position_hz[1] - upper) < bin);
    CHECK(std::abs(features[k].position_hz[0] - lower) < bin);
    ++checked;
  }
  CHECK(checked > 25);
  (void)f2;

  const SplittingEstimate est = minimal_splitting(grid);
  CHECK(std::abs(est.minimal_splitting_hz - rad_to_hz(s.rabi_frequency)) < bin);
  CHECK(std::abs(est.crossing_hz) < 0.2);
}

TEST_CASE("counter mode becomes transparent near the crossing") {
  const CouplingScenario sc = fixtures::arkr();
  const Eigen::ArrayXd sweep = linspace(-3.0, 3.0, 61);
  const Eigen::ArrayXd window = linspace(145.5, 153.5, 321);
  const SpectrumGrid grid = avoided_crossing_map(sc, sweep, window);
  const auto features = extract_mode_features(grid, 1.5);

  // Prominence of the lower branch, far from and close to the crossing.
  double far_prom = 0.0;
  for (Eigen::Index k : {Eigen::Index(0), sweep.size() - 1})
    if (features[k].position_hz.size() == 2)
      far_prom = std::max(far_prom, features[k].prominence_db[0]);
  REQUIRE(far_prom > 0.0);

  double near_min = 1e300;
  for (Eigen::Index k = 0; k < sweep.size(); ++k) {
    if (std::abs(sweep(k)) > 1.0) continue;
    const auto& f = features[k];
    // A vanished lower branch counts as zero prominence.
    const double prom = f.position_hz.size() == 2 ? f.prominence_db[0] : 0.0;
    near_min = std::min(near_min, prom);
  }
  CHECK(near_min < 0.2 * far_prom);
}

TEST_CASE("column power is invariant under relabeling the ions") {
  const CouplingScenario sc = fixtures::arkr();
  const Resonator& tank = *sc.resonator;
  const double omega_r = tank.resonance_frequency();

  const IonBranch ar = IonBranch::from_ion(sc.ion1, sc.port1,
                                           omega_r + hz_to_rad(150.2));
  const IonBranch kr = IonBranch::from_ion(sc.ion2, sc.port2,
                                           omega_r + hz_to_rad(149.3));
  EquivalentCircuit first{tank, {ar, kr}};
  EquivalentCircuit swapped{tank, {kr, ar}};

  const Eigen::ArrayXd window = linspace(146.5, 152.5, 101);
  const Eigen::ArrayXd pa = dip_spectrum(first, window, 4.2, 0.0, 1e3);
  const Eigen::ArrayXd pb = dip_spectrum(swapped, window, 4.2, 0.0, 1e3);
  for (Eigen::Index j = 0; j < window.size(); ++j)
    CHECK(pa(j) == doctest::Approx(pb(j)).epsilon(1e-12));
}

TEST_CASE("fit model is unbiased on its own synthesis") {
  const CouplingScenario sc = fixtures::arkr();
  const EffectiveCircuit eff =
      effective_circuit(*sc.resonator, sc.resonator_detuning);

  Eigen::VectorXd truth(6);
  truth << eff.effective_capacitance, 149.52, 1.015, 0.08, 3.0,
      std::log10(1e-3 * eff.effective_resistance);

  const Eigen::ArrayXd sweep = linspace(-3.0, 3.0, 31);
  const Eigen::ArrayXd window = linspace(145.5, 153.5, 241);
  SpectrumGrid grid;
  grid.sweep_axis = sweep;
  grid.frequency_axis = window;
  grid.power = model_spectrum(sc, sweep, window, truth);

  FitGuess guess;
  guess.effective_capacitance = truth(0) * 1.25;
  guess.ion2_frequency_hz = truth(1) + 0.3;
  guess.sweep_scale = 1.0;
  guess.sweep_offset_hz = 0.0;
  guess.gain_db = 3.0;
  guess.noise_floor_ohm = 1e-3 * eff.effective_resistance;
  const FitResult fit = fit_avoided_crossing(grid, sc, guess);

  CHECK(fit.converged);
  CHECK(close_rel(fit.effective_capacitance, truth(0), 1e-8));
  CHECK(std::abs(fit.ion2_frequency - truth(1)) < 1e-7);
  CHECK(close_rel(fit.parameters(2), truth(2), 1e-7));
}

TEST_CASE("noisy round trip recovers the injected capacitance") {
  const CouplingScenario sc = fixtures::arkr();
  const EffectiveCircuit eff =
      effective_circuit(*sc.resonator, sc.resonator_detuning);

  const Eigen::ArrayXd sweep = linspace(-3.0, 3.0, 31);
  const Eigen::ArrayXd window = linspace(145.5, 153.5, 241);
  SpectrumGrid grid = avoided_crossing_map(sc, sweep, window);
  add_noise(grid, 0.02, 12345);

  const FitResult fit = fit_avoided_crossing(grid, sc);
  CHECK(fit.converged);
  CHECK(close_rel(fit.effective_capacitance, eff.effective_capacitance, 0.02));
  CHECK(fit.capacitance_uncertainty > 0.0);
  CHECK(fit.capacitance_uncertainty < 0.05 * eff.effective_capacitance);
}

TEST_CASE("coupled model nests the no-interaction model") {
  const CouplingScenario sc = fixtures::arkr();
  const Eigen::ArrayXd sweep = linspace(-2.0, 2.0, 21);
  const Eigen::ArrayXd window = linspace(146.5, 152.5, 201);
  SpectrumGrid grid = avoided_crossing_map(sc, sweep, window);
  add_noise(grid, 0.01, 77);

  const FitResult coupled = fit_avoided_crossing(grid, sc, std::nullopt, true);
  const FitResult uncoupled = fit_avoided_crossing(grid, sc, std::nullopt, false);
  CHECK(coupled.residual_norm < uncoupled.residual_norm);
}

TEST_CASE("splitting scales inversely with the effective capacitance") {
  const CouplingScenario sc = fixtures::arkr();
  const EffectiveCircuit eff =
      effective_circuit(*sc.resonator, sc.resonator_detuning);
  const Eigen::ArrayXd sweep = linspace(-2.0, 2.0, 41);
  const Eigen::ArrayXd window = linspace(145.5, 153.5, 641);

  double previous = -1.0;
  for (double scale : {1.0, 2.0, 4.0}) {
    Eigen::VectorXd p(6);
    p << scale * eff.effective_capacitance, 149.5, 1.0, 0.0, 0.0,
        std::log10(1e-3 * eff.effective_resistance);
    SpectrumGrid grid;
    grid.sweep_axis = sweep;
    grid.frequency_axis = window;
    grid.power = model_spectrum(sc, sweep, window, p);
    const double split = minimal_splitting(grid).minimal_splitting_hz;
    if (previous > 0.0) CHECK(split == doctest::Approx(previous / 2.0).epsilon(0.05));
    previous = split;
  }
}

TEST_CASE("levenberg-marquardt basics") {
  // Residuals (x-3, y+1, coupling) with a unique minimum.
  const auto residuals = [](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(3);
    r << p(0) - 3.0, p(1) + 1.0, 0.1 * (p(0) - 3.0) * (p(1) + 1.0);
    return r;
  };
  Eigen::VectorXd x0(2);
  x0 << 10.0, 5.0;
  const FitOutcome fit = levenberg_marquardt(residuals, x0);
  CHECK(fit.converged);
  CHECK(fit.parameters(0) == doctest::Approx(3.0).epsilon(1e-6));
  CHECK(fit.parameters(1) == doctest::Approx(-1.0).epsilon(1e-6));

  FitOptions strict;
  strict.max_iterations = 1;
  const FitOutcome early = levenberg_marquardt(residuals, x0, strict);
  CHECK(!early.converged);
}
