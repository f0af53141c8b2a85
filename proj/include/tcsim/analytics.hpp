#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "tcsim/model.hpp"

namespace tcsim {

// Closed-form figures of merit for the intermittent cooling protocol.
struct IntermittentTheory {
  double transferred_12 = 0.0;          // <dE_{1->2}> per cycle, J
  double transferred_21 = 0.0;          // <dE_{2->1}> per cycle, J
  double equilibrium_temperature = 0.0; // T_1,eq at the chosen tau_c, K
  double minimal_temperature = 0.0;     // T_1,min, K
  double optimal_coupling_time = 0.0;   // tau_c,opt, s
  double effective_time_constant = 0.0; // tau_eff = 4/(Omega_R^2 tau_c), s
  double resonator_time1 = 0.0;         // tau_{1-Res}, s
  double resonator_time2 = 0.0;         // tau_{2-Res}, s
  double rabi_frequency = 0.0;          // rad/s
  double coupling_interval = 0.0;       // tau_c used, s
  std::vector<std::string> warnings;
};

// Mean energies moved between the ions during one coupling interval under
// white-noise heating (target starting at e1_initial, helper at T_D):
//   <dE_{1->2}> = Omega^2 tau_c^2/4 (E_1(0) + k_B T_0 tau_c/(3 tau_1)),
//   <dE_{2->1}> = Omega^2 tau_c^2/4 (k_B T_D + k_B T_0 tau_c/(3 tau_2)).
// Valid for tau_c << pi/Omega << tau_i; violations append a warning.
std::pair<double, double> transferred_energies(
    double rabi, double tau_c, double e1_initial, double t_doppler,
    double t_circuit, double tau_1res, double tau_2res,
    std::vector<std::string>* warnings = nullptr);

// T_1,eq = T_D + T_0 tau_c/(3 tau_2) + 4 T_0/(Omega^2 tau_c tau_1).
double equilibrium_temperature(double rabi, double tau_c, double t_doppler,
                               double t_circuit, double tau_1res, double tau_2res,
                               std::vector<std::string>* warnings = nullptr);

// Minimum of the equilibrium temperature over tau_c, for tau_1 > tau_2:
//   T_1,min = 4 T_0/(sqrt(3) Omega) / sqrt(tau_1 tau_2) + T_D,
//   tau_c,opt = (2/Omega) sqrt(3 tau_2 / (tau_1 - tau_2)).
struct OptimalCoupling {
  double minimal_temperature = 0.0;  // K
  double coupling_time = 0.0;        // s
};
OptimalCoupling optimal_coupling(double rabi, double t_doppler, double t_circuit,
                                 double tau_1res, double tau_2res);

double effective_time_constant(double rabi, double tau_c);

// T(t) = (T_0 - T_eq) exp(-t/tau_eff) + T_eq.
Eigen::ArrayXd cooling_curve(double t_initial, double t_equilibrium, double rabi,
                             double tau_c, const Eigen::ArrayXd& times);

// Full evaluation for a scenario; tau_c <= 0 selects tau_c,opt.
IntermittentTheory intermittent_theory(const CouplingScenario& scenario,
                                       double tau_c = 0.0);

struct DetuningScanRow {
  double detuning = 0.0;              // working-point offset, rad/s
  double equilibrium_temperature = 0.0;  // K
  double effective_time_constant = 0.0;  // s
  double coupling_time = 0.0;         // tau_c (or tau_c,opt) used, s
};

// Closed-form scan over working-point detunings (tau_c <= 0 -> optimal).
std::vector<DetuningScanRow> detuning_scan_intermittent(
    const CouplingScenario& scenario, const std::vector<double>& detunings,
    double tau_c = 0.0);

// Simulation-backed scan for continuous laser cooling: per detuning runs an
// ensemble with Johnson noise and laser damping (gamma <= 0 -> Omega_R at
// that working point), reads T_eq from the late-time mean and tau_eff from
// an exponential fit.
std::vector<DetuningScanRow> detuning_scan_continuous(
    const CouplingScenario& scenario, const std::vector<double>& detunings,
    double gamma_laser, const SimulationParams& params);

// Least-squares fit of T(t) = (T(0) - T_eq) e^{-t/tau} + T_eq in log space.
struct CoolingFit {
  double equilibrium_temperature = 0.0;
  double time_constant = 0.0;
  bool converged = false;
};
CoolingFit fit_cooling_curve(const std::vector<double>& times,
                             const std::vector<double>& temperatures);

}  // namespace tcsim
