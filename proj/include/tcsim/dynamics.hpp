#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "tcsim/coupling.hpp"
#include "tcsim/model.hpp"

namespace tcsim {

// Deterministic per-run random stream; independent streams are derived from
// (base seed, stream index) so ensemble members can run in any order.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream = 0);
  double gaussian();
  double uniform();
  // Isotropic complex Gaussian with <|eta|^2> = 1.
  std::complex<double> complex_gaussian();

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
  std::uniform_real_distribution<double> uniform_;
};

// Slowly varying complex axial amplitudes of the two ions.
struct RwaState {
  std::complex<double> amplitude1{0.0, 0.0};  // A_1, m
  std::complex<double> amplitude2{0.0, 0.0};  // A_2, m
  double time = 0.0;                          // s
};

// gamma_ij: velocity-damping couplings. The resonator gives the rank-one
// pattern gamma_ij = N_j q_i q_j R_eff / (m_i D_i D_j); laser cooling adds
// to gamma_22.
struct DampingMatrix {
  double g11 = 0.0, g12 = 0.0, g21 = 0.0, g22 = 0.0;  // 1/s
  double max_rate() const;
};

// Common-mode Johnson voltage noise of the tank at the working point.
struct NoiseSource {
  double psd = 0.0;  // S_U = 4 k_B T_0 R_eff, V^2/Hz (one-sided)
  static NoiseSource johnson(double temperature, double effective_resistance);
};

struct Trajectory {
  std::vector<double> times;                      // s
  std::vector<double> energy1, energy2;           // J
  std::vector<double> temperature1, temperature2; // K (E/k_B)
  void append(double t, double e1, double e2);
  std::size_t size() const { return times.size(); }
};

// All fixed coefficients of the amplitude equations for one configuration.
struct RwaSystem {
  double omega1 = 0.0, omega2 = 0.0;  // shifted axial frequencies, rad/s
  double c12 = 0.0, c21 = 0.0;        // displacement couplings, 1/s^2
  DampingMatrix damping;
  double force1 = 0.0, force2 = 0.0;  // q_i/(m_i D_i): acceleration per volt
  NoiseSource noise;
  double mass1 = 0.0, mass2 = 0.0;    // oscillator (cloud) masses N_i m_i, kg

  double delta_omega() const { return omega1 - omega2; }
  double rabi() const;
  double energy1_of(const std::complex<double>& a1) const;
  double energy2_of(const std::complex<double>& a2) const;
  // Amplitude whose mean energy is k_B T.
  double thermal_sigma1(double temperature) const;
  double thermal_sigma2(double temperature) const;

  // gamma_laser adds to gamma_22; with_noise keeps/clears the Johnson drive.
  static RwaSystem from_scenario(const CouplingScenario& scenario,
                                 double gamma_laser = 0.0, bool with_noise = true);
};

// Time step that satisfies every step_rwa precondition with margin.
double suggest_time_step(const RwaSystem& sys);

// One step of the amplitude equations: the linear deterministic part is
// propagated exactly (closed-form 2x2 exponential in the co-rotating frame),
// the shared Johnson-noise increment is added Euler-Maruyama style.
// Preconditions: dt*|delta_omega| < 0.1, dt*max(gamma) < 0.1, dt*Omega_R < 0.01.
RwaState step_rwa(const RwaState& state, const RwaSystem& sys, double dt,
                  double bandwidth_hz, RandomStream* rng);

// Precomputed fixed-step propagator for long runs.
class RwaIntegrator {
 public:
  RwaIntegrator(const RwaSystem& sys, double dt, double bandwidth_hz);
  RwaState step(const RwaState& state, RandomStream* rng) const;
  double dt() const { return dt_; }
  const RwaSystem& system() const { return sys_; }

 private:
  RwaSystem sys_;
  double dt_ = 0.0;
  Eigen::Matrix2cd propagator_;
  std::complex<double> noise_gain1_{0.0, 0.0}, noise_gain2_{0.0, 0.0};
};

// Full (non-RWA) equations of motion; cross-check oracle for the envelope
// dynamics at short durations.
struct FullState {
  double z1 = 0.0, v1 = 0.0;  // m, m/s
  double z2 = 0.0, v2 = 0.0;
  double time = 0.0;
};

// One RK4 step. Precondition: dt * max(omega) < 0.05.
FullState step_full(const FullState& state, const RwaSystem& sys, double dt,
                    double noise_voltage = 0.0);

// E_i = M_i (v_i^2 + w_i^2 z_i^2)/2 and the shared-capacitance cross term
// kappa z1 z2 with kappa = M_1 c12 = M_2 c21.
struct FullEnergies {
  double energy1 = 0.0, energy2 = 0.0, cross = 0.0;
  double total() const { return energy1 + energy2 + cross; }
};
FullEnergies full_energies(const FullState& state, const RwaSystem& sys);

struct ExchangeOptions {
  double gamma_laser = 0.0;  // rad... 1/s velocity damping of ion 2
  bool with_noise = false;
  int sample_stride = 1;
  std::uint64_t stream = 0;  // ensemble member index
};

// Integrates from (ion 1 thermal at T_0, ion 2 thermal at T_D, phases from
// the seed) for params.duration.
Trajectory simulate_exchange(const CouplingScenario& scenario,
                             const SimulationParams& params,
                             const ExchangeOptions& options = {});

// Mean of params.ensemble_size independent runs (parallel, order-independent).
Trajectory exchange_ensemble_mean(const CouplingScenario& scenario,
                                  const SimulationParams& params,
                                  const ExchangeOptions& options = {});

struct CoolingTimeMap {
  std::vector<double> gamma_laser;  // 1/s
  std::vector<double> detuning;     // delta_omega grid, rad/s
  Eigen::MatrixXd tau_cool;         // s; rows follow gamma_laser
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> converged;
};

// tau_cool(gamma_L, delta_omega): first time the total-energy envelope drops
// below E_tot(0)/e (noise off). Cells that never cross within
// params.duration are flagged not converged.
CoolingTimeMap cooling_time_map(const CouplingScenario& scenario,
                                const std::vector<double>& gamma_grid,
                                const std::vector<double>& detuning_grid,
                                const SimulationParams& params);

struct IntermittentOptions {
  bool with_noise = true;
  std::uint64_t stream = 0;
};

// Repeated cycles: reset ion 2 to a thermal sample at T_D (instantaneous
// Doppler cooling), then couple for tau_c with resonator damping and
// common-mode Johnson noise. Records one point per cycle boundary.
// Precondition: tau_c < pi / Omega'_R (coherence over one cycle).
Trajectory simulate_intermittent_cooling(const CouplingScenario& scenario,
                                         double coupling_interval, int n_cycles,
                                         const SimulationParams& params,
                                         const IntermittentOptions& options = {});

Trajectory intermittent_ensemble_mean(const CouplingScenario& scenario,
                                      double coupling_interval, int n_cycles,
                                      const SimulationParams& params,
                                      const IntermittentOptions& options = {});

// Runs body(i) for i in [0, n) on a small thread pool; results must be
// written to per-index slots so the merge is order-independent.
void parallel_for(int n, const std::function<void(int)>& body);

}  // namespace tcsim
