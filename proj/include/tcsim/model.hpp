#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "tcsim/errors.hpp"

namespace tcsim {

// One trapped species, or the centre-of-mass mode of a cloud of `count`
// identical ions. A cloud behaves as a single oscillator with charge
// count*charge and mass count*mass.
struct IonSpecies {
  std::string name;
  double charge = 0.0;  // per ion, C
  double mass = 0.0;    // per ion, kg
  int count = 1;

  double total_charge() const { return count * charge; }
  double total_mass() const { return count * mass; }
  void validate() const;
};

// Pickup electrode geometry of one trap.
struct TrapPort {
  double effective_distance = 0.0;  // D, m
  double trap_capacitance = 0.0;    // C_T, F
  void validate() const;
};

// Parallel RLC tank circuit shared by the two traps.
struct Resonator {
  double inductance = 0.0;           // L, H
  double coil_capacitance = 0.0;     // C_R, F
  double parallel_resistance = 0.0;  // R_p, Ohm
  double total_capacitance = 0.0;    // C = C_R + attached trap capacitance, F

  double resonance_frequency() const;  // omega_R = 1/sqrt(L C), rad/s
  double quality_factor() const;       // Q = R_p / (omega_R L)
  void validate() const;
};

struct CouplingScenario {
  IonSpecies ion1, ion2;
  TrapPort port1, port2;
  std::optional<Resonator> resonator;
  double circuit_temperature = 0.0;  // T_0, K
  double doppler_limit = 0.0;        // T_D, K
  // Detuning of the working point from the tank resonance, rad/s.
  double resonator_detuning = 0.0;
  // delta_omega = w1 - w2 between the two (shifted) axial frequencies, rad/s.
  double ion_frequency_mismatch = 0.0;
  // Working axial frequency, rad/s. Derived as omega_R + detuning when a
  // resonator is present; must be configured explicitly otherwise.
  double axial_frequency = 0.0;

  double working_frequency() const;
  void validate() const;
};

struct SimulationParams {
  double time_step = 0.0;  // dt, s; 0 lets every simulation pick its own
  double duration = 0.0;   // s
  std::uint64_t rng_seed = 1;
  double noise_bandwidth = 0.0;  // Hz; 0 derives 1/(2 dt)
  int ensemble_size = 1;

  double bandwidth_for(double dt) const {
    return noise_bandwidth > 0.0 ? noise_bandwidth : 0.5 / dt;
  }
  void validate(double ion_frequency_mismatch) const;
};

struct ScenarioConfig {
  CouplingScenario scenario;
  SimulationParams params;
};

// Parses the sectioned key-value config format ([ion1], [port1], [ion2],
// [port2], [resonator], [environment], [simulation]). All values SI;
// frequencies are given in Hz and converted to rad/s on load.
ScenarioConfig load_scenario(const std::string& config_text);
ScenarioConfig load_scenario_file(const std::string& path);

// Emits config text that load_scenario parses back to an equal scenario.
std::string serialize_scenario(const CouplingScenario& scenario,
                               const SimulationParams& params);

// FNV-1a over the raw config bytes; stable identifier for run manifests.
std::uint64_t config_digest(const std::string& bytes);

bool scenario_equal(const CouplingScenario& a, const CouplingScenario& b);

}  // namespace tcsim
