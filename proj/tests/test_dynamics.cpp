#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "fixtures.hpp"
#include "tcsim/analytics.hpp"
#include "tcsim/constants.hpp"
#include "tcsim/coupling.hpp"
#include "tcsim/dynamics.hpp"

using namespace tcsim;
using fixtures::close_rel;

namespace {

// Single damped ion with matched Johnson noise; the scale R fixes gamma.
RwaSystem single_ion_system(double gamma, double temperature) {
  const IonSpecies h2 = fixtures::h2_ion();
  const TrapPort port = fixtures::coupling_trap_port();
  const double d = port.effective_distance;
  const double r = gamma * h2.mass * d * d / (h2.charge * h2.charge);
  RwaSystem sys;
  sys.omega1 = sys.omega2 = hz_to_rad(893.76e3);
  sys.c12 = sys.c21 = 0.0;
  sys.damping.g11 = gamma;
  sys.damping.g22 = 0.0;
  sys.mass1 = h2.total_mass();
  sys.mass2 = fixtures::be_cloud().total_mass();
  sys.force1 = h2.charge / (h2.mass * d);
  sys.force2 = 0.0;
  sys.noise = NoiseSource::johnson(temperature, r);
  return sys;
}

}  // namespace

TEST_CASE("full coherent energy transfer at the exchange time") {
  const CouplingScenario sc = fixtures::h2be_endcap();
  const CouplingSummary s = summarize_coupling(sc);
  const RwaSystem sys = RwaSystem::from_scenario(sc, 0.0, false);

  const int n = 4096;
  const double dt = s.exchange_time / n;
  const RwaIntegrator integrator(sys, dt, 0.0);
  RwaState state;
  state.amplitude1 = {2e-6, 0.0};
  const double e0 = sys.energy1_of(state.amplitude1);

  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    state = integrator.step(state, nullptr);
    const double expected =
        e0 * std::pow(std::cos(0.5 * s.rabi_frequency * state.time), 2);
    worst = std::max(worst, std::abs(sys.energy1_of(state.amplitude1) - expected) / e0);
  }
  CHECK(worst < 1e-6);
  CHECK(sys.energy1_of(state.amplitude1) < 1e-8 * e0);
  // The partner holds the full energy at the swap.
  CHECK(close_rel(sys.energy2_of(state.amplitude2), e0, 1e-9));
}

TEST_CASE("decoupled damped ion loses energy at the resistive rate") {
  RwaSystem sys = single_ion_system(0.5, 4.2);
  sys.noise.psd = 0.0;
  const RwaIntegrator integrator(sys, 0.01, 0.0);
  RwaState state;
  state.amplitude1 = {1e-6, 5e-7};
  const double e0 = sys.energy1_of(state.amplitude1);
  for (int i = 0; i < 200; ++i) state = integrator.step(state, nullptr);
  const double expected = e0 * std::exp(-0.5 * state.time);
  CHECK(close_rel(sys.energy1_of(state.amplitude1), expected, 1e-9));
}

TEST_CASE("fluctuation-dissipation: matched noise thermalises to T0") {
  const double gamma = 1.0;
  const double t0 = 4.2;
  const RwaSystem sys = single_ion_system(gamma, t0);
  const double dt = 0.01;
  const RwaIntegrator integrator(sys, dt, 0.5 / dt);

  const int ensemble = 300;
  const double t_end = 30.0;
  const int n_steps = static_cast<int>(t_end / dt);
  std::vector<double> mean_tail(ensemble);
  parallel_for(ensemble, [&](int run) {
    RandomStream rng(424242, run);
    RwaState state;  // starts cold: relaxation must come from the noise
    double acc = 0.0;
    int count = 0;
    for (int i = 0; i < n_steps; ++i) {
      state = integrator.step(state, &rng);
      if (state.time > 10.0) {
        acc += sys.energy1_of(state.amplitude1);
        ++count;
      }
    }
    mean_tail[run] = acc / count;
  });
  double mean = 0.0;
  for (double v : mean_tail) mean += v;
  mean /= ensemble;
  CHECK(mean == doctest::Approx(k_boltzmann * t0).epsilon(0.05));
}

TEST_CASE("identical seeds give identical trajectories") {
  const CouplingScenario sc = fixtures::h2be_tank();
  SimulationParams params;
  params.duration = 2.0;
  params.rng_seed = 99;
  ExchangeOptions options;
  options.with_noise = true;
  const Trajectory a = simulate_exchange(sc, params, options);
  const Trajectory b = simulate_exchange(sc, params, options);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.energy1[i] == b.energy1[i]);
    CHECK(a.energy2[i] == b.energy2[i]);
  }
}

TEST_CASE("shared noise correlates the two amplitudes") {
  // No coupling, equal damping; the only cross-talk is the common voltage.
  const IonSpecies h2 = fixtures::h2_ion();
  const TrapPort port = fixtures::coupling_trap_port();
  const double d = port.effective_distance;
  const double gamma = 1.0;
  const double r = gamma * h2.mass * d * d / (h2.charge * h2.charge);

  RwaSystem sys;
  sys.omega1 = sys.omega2 = hz_to_rad(893.76e3);
  sys.damping.g11 = sys.damping.g22 = gamma;
  sys.mass1 = sys.mass2 = h2.total_mass();
  sys.force1 = h2.charge / (h2.mass * d);
  sys.force2 = sys.force1;
  sys.noise = NoiseSource::johnson(4.2, r);

  const auto correlation = [&](double force2_sign) {
    RwaSystem local = sys;
    local.force2 = force2_sign * sys.force2;
    const double dt = 0.01;
    const RwaIntegrator integrator(local, dt, 0.5 / dt);
    double acc = 0.0;
    int count = 0;
    for (int run = 0; run < 200; ++run) {
      RandomStream rng(321, run);
      RwaState state;
      for (int i = 0; i < 1500; ++i) {
        state = integrator.step(state, &rng);
        if (state.time > 5.0) {
          acc += (state.amplitude1 * std::conj(state.amplitude2)).real();
          ++count;
        }
      }
    }
    return acc / count;
  };

  const double same_sign = correlation(+1.0);
  const double flipped = correlation(-1.0);
  CHECK(same_sign > 0.0);
  CHECK(flipped < 0.0);
  CHECK(close_rel(same_sign, -flipped, 1e-9));
}

TEST_CASE("displacement couplings obey the mass-weighted identity") {
  const CouplingScenario sc = fixtures::arkr();
  const RwaSystem sys = RwaSystem::from_scenario(sc, 0.0, false);
  // c12/c21 = (N2 m2)/(N1 m1) follows from the shared-capacitance origin.
  const double expected = (sc.ion2.count * sc.ion2.mass) / (sc.ion1.count * sc.ion1.mass);
  CHECK(close_rel(sys.c12 / sys.c21, expected, 1e-12));
  // Symmetric energy coupling constant.
  CHECK(close_rel(sys.mass1 * sys.c12, sys.mass2 * sys.c21, 1e-12));
}

TEST_CASE("full equations conserve energy without damping and noise") {
  const CouplingScenario sc = fixtures::h2be_endcap();
  const RwaSystem sys = RwaSystem::from_scenario(sc, 0.0, false);

  const double cycles = 1000.0;
  const double dt = 0.015 / sys.omega1;
  const long n = std::lround(cycles * two_pi / sys.omega1 / dt);
  FullState state;
  state.z1 = 1e-6;
  state.z2 = -0.4e-6;
  state.v2 = 0.3e-6 * sys.omega2;
  const double h0 = full_energies(state, sys).total();
  double worst = 0.0;
  for (long i = 0; i < n; ++i) {
    state = step_full(state, sys, dt);
    worst = std::max(worst, std::abs(full_energies(state, sys).total() - h0) / h0);
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("full and envelope integrations agree through one swap") {
  // Stronger capacitive coupling keeps omega/Omega_R at 2e4 (still deep in
  // the envelope regime) so the cross-check stays cheap.
  CouplingScenario sc = fixtures::h2be_endcap();
  sc.port1.trap_capacitance = sc.port2.trap_capacitance = 3.475e-15;
  const CouplingSummary s = summarize_coupling(sc);
  REQUIRE(sc.axial_frequency / s.rabi_frequency > 1e4);

  const RwaSystem sys = RwaSystem::from_scenario(sc, 0.0, false);
  const int rwa_samples = 1024;
  const double dt_rwa = s.exchange_time / rwa_samples;
  const long substeps = std::lround(std::ceil(dt_rwa * sys.omega1 / 0.02));
  const double dt_full = dt_rwa / static_cast<double>(substeps);

  const RwaIntegrator integrator(sys, dt_rwa, 0.0);
  RwaState rwa;
  rwa.amplitude1 = {1e-6, 0.0};
  FullState full;
  full.z1 = 1e-6;

  const double e0 = sys.energy1_of(rwa.amplitude1);
  double sum_sq = 0.0;
  for (int i = 0; i < rwa_samples; ++i) {
    rwa = integrator.step(rwa, nullptr);
    for (long k = 0; k < substeps; ++k) full = step_full(full, sys, dt_full);
    const double diff =
        full_energies(full, sys).energy1 - sys.energy1_of(rwa.amplitude1);
    sum_sq += diff * diff;
  }
  const double rms = std::sqrt(sum_sq / rwa_samples) / e0;
  CHECK(rms < 0.02);
}

TEST_CASE("energy returns fully after twice the exchange time") {
  const CouplingScenario sc = fixtures::h2be_endcap();
  SimulationParams params;
  params.duration = 130.0;
  params.rng_seed = 5;
  ExchangeOptions options;
  options.with_noise = false;
  const Trajectory traj = simulate_exchange(sc, params, options);

  // First full return of E1 after the dip: search past the swap.
  const double e0 = traj.energy1.front();
  double best_t = 0.0, best = -1.0;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    if (traj.times[i] < 80.0 || traj.times[i] > 130.0) continue;
    if (traj.energy1[i] > best) {
      best = traj.energy1[i];
      best_t = traj.times[i];
    }
  }
  CHECK(best_t == doctest::Approx(114.0).epsilon(0.02));
  // Interference with the thermal partner amplitude moves the sampled peak
  // by up to ~sqrt(T_D/T_0)^2 relative.
  CHECK(close_rel(best, e0, 1e-3));
}

TEST_CASE("cooling-time map: optimum near the Rabi frequency, even in mismatch") {
  const CouplingScenario sc = fixtures::h2be_endcap();
  const CouplingSummary s = summarize_coupling(sc);
  SimulationParams params;
  params.duration = 3000.0;
  params.rng_seed = 3;

  const std::vector<double> gammas = {0.1 * s.rabi_frequency, s.rabi_frequency,
                                      10.0 * s.rabi_frequency};
  const std::vector<double> detunings = {-0.5 * s.rabi_frequency, 0.0,
                                         0.5 * s.rabi_frequency};
  const CoolingTimeMap map = cooling_time_map(sc, gammas, detunings, params);

  REQUIRE(map.converged(0, 1));
  REQUIRE(map.converged(1, 1));
  REQUIRE(map.converged(2, 1));
  CHECK(map.tau_cool(1, 1) < map.tau_cool(0, 1));
  CHECK(map.tau_cool(1, 1) < map.tau_cool(2, 1));
  // Even in the mismatch.
  CHECK(close_rel(map.tau_cool(1, 0), map.tau_cool(1, 2), 0.02));
}

TEST_CASE("strongly overdamped laser cooling is slower than matched damping") {
  const CouplingScenario sc = fixtures::h2be_endcap();
  const CouplingSummary s = summarize_coupling(sc);
  SimulationParams params;
  params.duration = 40000.0;
  params.rng_seed = 3;
  const CoolingTimeMap map = cooling_time_map(
      sc, {s.rabi_frequency, 1000.0 * s.rabi_frequency}, {0.0}, params);
  REQUIRE(map.converged(0, 0));
  REQUIRE(map.converged(1, 0));
  CHECK(map.tau_cool(1, 0) > 10.0 * map.tau_cool(0, 0));
}

TEST_CASE("intermittent protocol edge cases") {
  const CouplingScenario sc = fixtures::h2be_tank();
  SimulationParams params;
  params.rng_seed = 100;

  SUBCASE("zero cycles record only the initial state") {
    const Trajectory traj = simulate_intermittent_cooling(sc, 0.1, 0, params);
    CHECK(traj.size() == 1);
    CHECK(traj.times[0] == 0.0);
  }
  SUBCASE("ensemble mean of the initial state is the environment temperature") {
    params.ensemble_size = 400;
    const Trajectory traj = intermittent_ensemble_mean(sc, 0.1, 0, params);
    CHECK(traj.temperature1[0] == doctest::Approx(4.2).epsilon(0.2));
  }
  SUBCASE("coupling interval must stay coherent") {
    const CouplingSummary s = summarize_coupling(sc);
    CHECK_THROWS_AS(
        simulate_intermittent_cooling(sc, 1.1 * pi / s.rabi_frequency, 5, params),
        integration_error);
  }
}

TEST_CASE("noise-free intermittent cooling decays at the per-cycle rate") {
  CouplingScenario sc = fixtures::h2be_tank();
  sc.doppler_limit = 1e-12;
  const CouplingSummary s = summarize_coupling(sc);
  const double tau_c = 0.6 / s.rabi_frequency;
  const int cycles = 60;
  SimulationParams params;
  params.rng_seed = 8;
  IntermittentOptions options;
  options.with_noise = false;
  const Trajectory traj =
      simulate_intermittent_cooling(sc, tau_c, cycles, params, options);

  CHECK(traj.energy1.back() < 0.01 * traj.energy1.front());
  // Log-slope against the small-transfer prediction 1/tau_eff.
  const double rate = std::log(traj.energy1.front() / traj.energy1.back()) /
                      traj.times.back();
  const double predicted = 1.0 / effective_time_constant(s.rabi_frequency, tau_c);
  CHECK(rate == doctest::Approx(predicted).epsilon(0.10));
}

TEST_CASE("step preconditions are enforced") {
  const CouplingScenario sc = fixtures::h2be_tank();
  const RwaSystem sys = RwaSystem::from_scenario(sc, 0.0, true);
  RwaState state;
  CHECK_THROWS_AS(step_rwa(state, sys, 0.1 / sys.rabi(), 100.0, nullptr),
                  integration_error);
  CHECK_THROWS_AS(step_rwa(state, sys, -1.0, 100.0, nullptr), integration_error);
  FullState full;
  CHECK_THROWS_AS(step_full(full, sys, 1.0 / sys.omega1), integration_error);

  RwaSystem stiff = sys;
  stiff.damping.g22 = 1000.0;
  CHECK_THROWS_AS(step_rwa(state, stiff, 1e-3, 100.0, nullptr), integration_error);
}
