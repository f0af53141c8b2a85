#include "tcsim/dynamics.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "tcsim/constants.hpp"
#include "tcsim/resonator.hpp"

namespace tcsim {

namespace {

using complexd = std::complex<double>;
constexpr complexd imag_unit{0.0, 1.0};

// exp(M) for a 2x2 complex matrix, via M = mu*I + E with E traceless:
// exp(M) = e^mu (cosh(lambda) I + sinhc(lambda) E), lambda^2 = det-free
// invariant E00^2 + E01*E10.
Eigen::Matrix2cd expm_2x2(const Eigen::Matrix2cd& m) {
  const complexd mu = 0.5 * (m(0, 0) + m(1, 1));
  Eigen::Matrix2cd e = m;
  e(0, 0) -= mu;
  e(1, 1) -= mu;
  const complexd lambda2 = e(0, 0) * e(0, 0) + e(0, 1) * e(1, 0);
  const complexd lambda = std::sqrt(lambda2);
  complexd ch, shc;
  if (std::abs(lambda) < 1e-8) {
    ch = 1.0 + 0.5 * lambda2;
    shc = 1.0 + lambda2 / 6.0;
  } else {
    ch = std::cosh(lambda);
    shc = std::sinh(lambda) / lambda;
  }
  Eigen::Matrix2cd out = shc * e;
  out(0, 0) += ch;
  out(1, 1) += ch;
  return std::exp(mu) * out;
}

void check_step(const RwaSystem& sys, double dt) {
  if (!(dt > 0.0)) throw integration_error("step size must be > 0");
  if (dt * std::abs(sys.delta_omega()) >= 0.1)
    throw integration_error("step size violates dt*|delta_omega| < 0.1");
  if (dt * sys.damping.max_rate() >= 0.1)
    throw integration_error("step size violates dt*max(gamma) < 0.1");
  if (dt * sys.rabi() >= 0.01)
    throw integration_error("step size violates dt*Omega_R < 0.01");
}

}  // namespace

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t stream)
    : normal_(0.0, 1.0), uniform_(0.0, 1.0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream & 0xffffffffu),
                    static_cast<std::uint32_t>(stream >> 32)};
  engine_.seed(seq);
}

double RandomStream::gaussian() { return normal_(engine_); }
double RandomStream::uniform() { return uniform_(engine_); }

std::complex<double> RandomStream::complex_gaussian() {
  const double re = gaussian();
  const double im = gaussian();
  return {re * std::numbers::sqrt2 / 2.0, im * std::numbers::sqrt2 / 2.0};
}

double DampingMatrix::max_rate() const {
  return std::max(std::max(std::abs(g11), std::abs(g12)),
                  std::max(std::abs(g21), std::abs(g22)));
}

NoiseSource NoiseSource::johnson(double temperature, double effective_resistance) {
  NoiseSource n;
  n.psd = 4.0 * k_boltzmann * temperature * effective_resistance;
  return n;
}

void Trajectory::append(double t, double e1, double e2) {
  times.push_back(t);
  energy1.push_back(e1);
  energy2.push_back(e2);
  temperature1.push_back(e1 / k_boltzmann);
  temperature2.push_back(e2 / k_boltzmann);
}

double RwaSystem::rabi() const {
  return std::sqrt(std::abs(c12 * c21)) / std::sqrt(omega1 * omega2);
}

double RwaSystem::energy1_of(const std::complex<double>& a1) const {
  return 0.5 * mass1 * omega1 * omega1 * std::norm(a1);
}

double RwaSystem::energy2_of(const std::complex<double>& a2) const {
  return 0.5 * mass2 * omega2 * omega2 * std::norm(a2);
}

double RwaSystem::thermal_sigma1(double temperature) const {
  return std::sqrt(k_boltzmann * temperature / (mass1 * omega1 * omega1));
}

double RwaSystem::thermal_sigma2(double temperature) const {
  return std::sqrt(k_boltzmann * temperature / (mass2 * omega2 * omega2));
}

RwaSystem RwaSystem::from_scenario(const CouplingScenario& scenario,
                                   double gamma_laser, bool with_noise) {
  RwaSystem sys;
  const double omega = scenario.working_frequency();
  const double delta = scenario.ion_frequency_mismatch;
  sys.omega1 = omega + 0.5 * delta;
  sys.omega2 = omega - 0.5 * delta;
  const double c_cpl = scenario_coupling_capacitance(scenario);
  sys.c12 = coupling_constant(scenario.ion1, scenario.port1, scenario.ion2,
                              scenario.port2, c_cpl);
  sys.c21 = coupling_constant(scenario.ion2, scenario.port2, scenario.ion1,
                              scenario.port1, c_cpl);
  sys.mass1 = scenario.ion1.total_mass();
  sys.mass2 = scenario.ion2.total_mass();
  sys.force1 = scenario.ion1.charge /
               (scenario.ion1.mass * scenario.port1.effective_distance);
  sys.force2 = scenario.ion2.charge /
               (scenario.ion2.mass * scenario.port2.effective_distance);

  if (scenario.resonator) {
    const EffectiveCircuit eff =
        effective_circuit(*scenario.resonator, scenario.resonator_detuning);
    const double r_eff = eff.effective_resistance;
    const double q1 = scenario.ion1.charge, q2 = scenario.ion2.charge;
    const double m1 = scenario.ion1.mass, m2 = scenario.ion2.mass;
    const double d1 = scenario.port1.effective_distance;
    const double d2 = scenario.port2.effective_distance;
    sys.damping.g11 = scenario.ion1.count * q1 * q1 * r_eff / (m1 * d1 * d1);
    sys.damping.g22 = scenario.ion2.count * q2 * q2 * r_eff / (m2 * d2 * d2);
    sys.damping.g12 = scenario.ion2.count * q1 * q2 * r_eff / (m1 * d1 * d2);
    sys.damping.g21 = scenario.ion1.count * q1 * q2 * r_eff / (m2 * d1 * d2);
    if (with_noise)
      sys.noise = NoiseSource::johnson(scenario.circuit_temperature, r_eff);
  }
  sys.damping.g22 += gamma_laser;
  return sys;
}

double suggest_time_step(const RwaSystem& sys) {
  const double rabi_mod = std::hypot(sys.rabi(), sys.delta_omega());
  double dt = 1.0;
  if (rabi_mod > 0.0) dt = std::min(dt, 0.005 / rabi_mod);
  const double gmax = sys.damping.max_rate();
  if (gmax > 0.0) dt = std::min(dt, 0.05 / gmax);
  return dt;
}

RwaIntegrator::RwaIntegrator(const RwaSystem& sys, double dt, double bandwidth_hz)
    : sys_(sys), dt_(dt) {
  check_step(sys, dt);
  const double delta = sys.delta_omega();
  // Co-rotating frame B1 = A1 e^{+i delta t/2}, B2 = A2 e^{-i delta t/2}
  // turns the amplitude equations time-invariant.
  Eigen::Matrix2cd m;
  m(0, 0) = imag_unit * (0.5 * delta) - 0.5 * sys.damping.g11;
  m(1, 1) = -imag_unit * (0.5 * delta) - 0.5 * sys.damping.g22;
  m(0, 1) = (imag_unit * sys.c12 - sys.omega2 * sys.damping.g12) / (2.0 * sys.omega1);
  m(1, 0) = (imag_unit * sys.c21 - sys.omega1 * sys.damping.g21) / (2.0 * sys.omega2);
  propagator_ = expm_2x2(m * dt);

  if (sys.noise.psd > 0.0) {
    const double u_rms = std::sqrt(sys.noise.psd * bandwidth_hz);
    noise_gain1_ = -imag_unit * (sys.force1 / sys.omega1) * u_rms * dt;
    noise_gain2_ = -imag_unit * (sys.force2 / sys.omega2) * u_rms * dt;
  }
}

RwaState RwaIntegrator::step(const RwaState& state, RandomStream* rng) const {
  const double delta = sys_.delta_omega();
  const complexd in_phase = std::polar(1.0, 0.5 * delta * state.time);
  Eigen::Vector2cd b;
  b(0) = state.amplitude1 * in_phase;
  b(1) = state.amplitude2 / in_phase;
  b = (propagator_ * b).eval();
  if (sys_.noise.psd > 0.0 && rng != nullptr) {
    // One shared voltage sample drives both ions within the step.
    const complexd eta = rng->complex_gaussian();
    b(0) += noise_gain1_ * eta;
    b(1) += noise_gain2_ * eta;
  }
  RwaState next;
  next.time = state.time + dt_;
  const complexd out_phase = std::polar(1.0, 0.5 * delta * next.time);
  next.amplitude1 = b(0) / out_phase;
  next.amplitude2 = b(1) * out_phase;
  return next;
}

RwaState step_rwa(const RwaState& state, const RwaSystem& sys, double dt,
                  double bandwidth_hz, RandomStream* rng) {
  return RwaIntegrator(sys, dt, bandwidth_hz).step(state, rng);
}

FullState step_full(const FullState& state, const RwaSystem& sys, double dt,
                    double noise_voltage) {
  if (!(dt > 0.0)) throw integration_error("step size must be > 0");
  if (dt * std::max(sys.omega1, sys.omega2) >= 0.05)
    throw integration_error("step size violates dt*omega < 0.05");

  struct Deriv {
    double z1, v1, z2, v2;
  };
  const auto rhs = [&](const FullState& s) {
    Deriv d;
    d.z1 = s.v1;
    d.z2 = s.v2;
    d.v1 = -sys.omega1 * sys.omega1 * s.z1 - sys.c12 * s.z2 -
           sys.damping.g11 * s.v1 - sys.damping.g12 * s.v2 -
           sys.force1 * noise_voltage;
    d.v2 = -sys.omega2 * sys.omega2 * s.z2 - sys.c21 * s.z1 -
           sys.damping.g22 * s.v2 - sys.damping.g21 * s.v1 -
           sys.force2 * noise_voltage;
    return d;
  };
  const auto advance = [](const FullState& s, const Deriv& d, double h) {
    FullState n = s;
    n.z1 += h * d.z1;
    n.v1 += h * d.v1;
    n.z2 += h * d.z2;
    n.v2 += h * d.v2;
    return n;
  };

  const Deriv k1 = rhs(state);
  const Deriv k2 = rhs(advance(state, k1, 0.5 * dt));
  const Deriv k3 = rhs(advance(state, k2, 0.5 * dt));
  const Deriv k4 = rhs(advance(state, k3, dt));

  FullState next = state;
  next.z1 += dt / 6.0 * (k1.z1 + 2.0 * k2.z1 + 2.0 * k3.z1 + k4.z1);
  next.v1 += dt / 6.0 * (k1.v1 + 2.0 * k2.v1 + 2.0 * k3.v1 + k4.v1);
  next.z2 += dt / 6.0 * (k1.z2 + 2.0 * k2.z2 + 2.0 * k3.z2 + k4.z2);
  next.v2 += dt / 6.0 * (k1.v2 + 2.0 * k2.v2 + 2.0 * k3.v2 + k4.v2);
  next.time = state.time + dt;
  return next;
}

FullEnergies full_energies(const FullState& s, const RwaSystem& sys) {
  FullEnergies e;
  e.energy1 = 0.5 * sys.mass1 *
              (s.v1 * s.v1 + sys.omega1 * sys.omega1 * s.z1 * s.z1);
  e.energy2 = 0.5 * sys.mass2 *
              (s.v2 * s.v2 + sys.omega2 * sys.omega2 * s.z2 * s.z2);
  e.cross = sys.mass1 * sys.c12 * s.z1 * s.z2;
  return e;
}

namespace {

complexd thermal_amplitude(double sigma, RandomStream& rng) {
  return {sigma * rng.gaussian(), sigma * rng.gaussian()};
}

}  // namespace

Trajectory simulate_exchange(const CouplingScenario& scenario,
                             const SimulationParams& params,
                             const ExchangeOptions& options) {
  const RwaSystem sys =
      RwaSystem::from_scenario(scenario, options.gamma_laser, options.with_noise);
  const double dt = params.time_step > 0.0 ? params.time_step : suggest_time_step(sys);
  if (!(params.duration > 0.0))
    throw integration_error("simulate_exchange: duration must be > 0");
  const RwaIntegrator integrator(sys, dt, params.bandwidth_for(dt));

  RandomStream rng(params.rng_seed, options.stream);
  RwaState state;
  state.amplitude1 =
      thermal_amplitude(sys.thermal_sigma1(scenario.circuit_temperature), rng);
  state.amplitude2 = thermal_amplitude(sys.thermal_sigma2(scenario.doppler_limit), rng);

  const long n_steps = std::lround(std::ceil(params.duration / dt - 1e-9));
  const int stride = std::max(1, options.sample_stride);
  Trajectory traj;
  traj.append(0.0, sys.energy1_of(state.amplitude1), sys.energy2_of(state.amplitude2));
  for (long i = 0; i < n_steps; ++i) {
    state = integrator.step(state, &rng);
    if ((i + 1) % stride == 0 || i + 1 == n_steps)
      traj.append(state.time, sys.energy1_of(state.amplitude1),
                  sys.energy2_of(state.amplitude2));
  }
  return traj;
}

Trajectory exchange_ensemble_mean(const CouplingScenario& scenario,
                                  const SimulationParams& params,
                                  const ExchangeOptions& options) {
  const int n = std::max(1, params.ensemble_size);
  std::vector<Trajectory> runs(n);
  parallel_for(n, [&](int i) {
    ExchangeOptions run = options;
    run.stream = options.stream + static_cast<std::uint64_t>(i);
    runs[i] = simulate_exchange(scenario, params, run);
  });
  Trajectory mean = runs[0];
  for (int i = 1; i < n; ++i) {
    for (std::size_t k = 0; k < mean.size(); ++k) {
      mean.energy1[k] += runs[i].energy1[k];
      mean.energy2[k] += runs[i].energy2[k];
    }
  }
  for (std::size_t k = 0; k < mean.size(); ++k) {
    mean.energy1[k] /= n;
    mean.energy2[k] /= n;
    mean.temperature1[k] = mean.energy1[k] / k_boltzmann;
    mean.temperature2[k] = mean.energy2[k] / k_boltzmann;
  }
  return mean;
}

CoolingTimeMap cooling_time_map(const CouplingScenario& scenario,
                                const std::vector<double>& gamma_grid,
                                const std::vector<double>& detuning_grid,
                                const SimulationParams& params) {
  if (gamma_grid.empty() || detuning_grid.empty())
    throw std::invalid_argument("cooling_time_map: grids must be non-empty");
  if (!(params.duration > 0.0))
    throw std::invalid_argument("cooling_time_map: duration must be > 0");

  CoolingTimeMap map;
  map.gamma_laser = gamma_grid;
  map.detuning = detuning_grid;
  const int ng = static_cast<int>(gamma_grid.size());
  const int nd = static_cast<int>(detuning_grid.size());
  map.tau_cool.resize(ng, nd);
  map.converged.resize(ng, nd);

  parallel_for(ng * nd, [&](int cell) {
    const int ig = cell / nd;
    const int id = cell % nd;
    CouplingScenario local = scenario;
    local.ion_frequency_mismatch = detuning_grid[id];
    const RwaSystem sys =
        RwaSystem::from_scenario(local, gamma_grid[ig], /*with_noise=*/false);
    double dt = params.time_step > 0.0 ? params.time_step : suggest_time_step(sys);
    dt = std::min(dt, params.duration / 100.0);
    const RwaIntegrator integrator(sys, dt, params.bandwidth_for(dt));

    RandomStream rng(params.rng_seed, static_cast<std::uint64_t>(cell));
    RwaState state;
    // Fixed thermal magnitudes, random phases: the e-folding of the envelope
    // should not inherit shot-to-shot energy scatter.
    state.amplitude1 = std::polar(std::numbers::sqrt2 *
                                      sys.thermal_sigma1(local.circuit_temperature),
                                  two_pi * rng.uniform());
    state.amplitude2 = std::polar(
        std::numbers::sqrt2 * sys.thermal_sigma2(local.doppler_limit),
        two_pi * rng.uniform());

    const double e0 = sys.energy1_of(state.amplitude1) + sys.energy2_of(state.amplitude2);
    const double threshold = e0 / std::numbers::e;
    const long n_steps = std::lround(std::ceil(params.duration / dt));
    double last_above = 0.0;
    double e_tot = e0;
    for (long i = 0; i < n_steps; ++i) {
      state = integrator.step(state, nullptr);
      e_tot = sys.energy1_of(state.amplitude1) + sys.energy2_of(state.amplitude2);
      if (e_tot > threshold) last_above = state.time;
      if (e_tot < 0.2 * threshold) break;  // envelope cannot recover: damped linear system
    }
    const bool ok = e_tot <= threshold;
    map.converged(ig, id) = ok;
    map.tau_cool(ig, id) = ok ? last_above + dt : std::nan("");
  });
  return map;
}

Trajectory simulate_intermittent_cooling(const CouplingScenario& scenario,
                                         double coupling_interval, int n_cycles,
                                         const SimulationParams& params,
                                         const IntermittentOptions& options) {
  if (n_cycles < 0)
    throw std::invalid_argument("simulate_intermittent_cooling: n_cycles >= 0");
  const RwaSystem sys =
      RwaSystem::from_scenario(scenario, 0.0, options.with_noise);
  const double rabi_mod = std::hypot(sys.rabi(), sys.delta_omega());
  if (!(coupling_interval > 0.0) || coupling_interval >= pi / rabi_mod)
    throw integration_error(
        "simulate_intermittent_cooling: coupling interval must satisfy "
        "tau_c < pi / Omega'_R (coherent over one cycle)");

  double dt = params.time_step > 0.0 ? params.time_step : suggest_time_step(sys);
  const long steps_per_cycle =
      std::max<long>(1, std::lround(std::ceil(coupling_interval / dt)));
  dt = coupling_interval / static_cast<double>(steps_per_cycle);
  const RwaIntegrator integrator(sys, dt, params.bandwidth_for(dt));

  RandomStream rng(params.rng_seed, options.stream);
  RwaState state;
  state.amplitude1 =
      thermal_amplitude(sys.thermal_sigma1(scenario.circuit_temperature), rng);
  state.amplitude2 = thermal_amplitude(sys.thermal_sigma2(scenario.doppler_limit), rng);

  Trajectory traj;
  traj.append(0.0, sys.energy1_of(state.amplitude1), sys.energy2_of(state.amplitude2));
  for (int cycle = 0; cycle < n_cycles; ++cycle) {
    // Instantaneous Doppler re-cooling of ion 2 to a fresh thermal state.
    state.amplitude2 =
        thermal_amplitude(sys.thermal_sigma2(scenario.doppler_limit), rng);
    for (long i = 0; i < steps_per_cycle; ++i) state = integrator.step(state, &rng);
    if (!std::isfinite(std::norm(state.amplitude1)) ||
        !std::isfinite(std::norm(state.amplitude2)))
      throw integration_error("simulate_intermittent_cooling: amplitude became non-finite");
    traj.append(state.time, sys.energy1_of(state.amplitude1),
                sys.energy2_of(state.amplitude2));
  }
  return traj;
}

Trajectory intermittent_ensemble_mean(const CouplingScenario& scenario,
                                      double coupling_interval, int n_cycles,
                                      const SimulationParams& params,
                                      const IntermittentOptions& options) {
  const int n = std::max(1, params.ensemble_size);
  std::vector<Trajectory> runs(n);
  parallel_for(n, [&](int i) {
    IntermittentOptions run = options;
    run.stream = options.stream + static_cast<std::uint64_t>(i);
    runs[i] = simulate_intermittent_cooling(scenario, coupling_interval, n_cycles,
                                            params, run);
  });
  Trajectory mean = runs[0];
  for (int i = 1; i < n; ++i) {
    for (std::size_t k = 0; k < mean.size(); ++k) {
      mean.energy1[k] += runs[i].energy1[k];
      mean.energy2[k] += runs[i].energy2[k];
    }
  }
  for (std::size_t k = 0; k < mean.size(); ++k) {
    mean.energy1[k] /= n;
    mean.energy2[k] /= n;
    mean.temperature1[k] = mean.energy1[k] / k_boltzmann;
    mean.temperature2[k] = mean.energy2[k] / k_boltzmann;
  }
  return mean;
}

void parallel_for(int n, const std::function<void(int)>& body) {
  if (n <= 0) return;
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  const unsigned n_threads = std::min<unsigned>(hw, static_cast<unsigned>(n));
  if (n_threads <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  for (unsigned t = 0; t < n_threads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= n) return;
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace tcsim
