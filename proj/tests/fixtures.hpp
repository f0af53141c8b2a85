#pragma once

#include <cmath>

#include "tcsim/constants.hpp"
#include "tcsim/model.hpp"

namespace tcsim::fixtures {

inline IonSpecies h2_ion() {
  return {"H2+", elementary_charge, 2.0151 * atomic_mass_unit, 1};
}

inline IonSpecies be_cloud(int count = 100) {
  return {"9Be+", elementary_charge, 9.0122 * atomic_mass_unit, count};
}

inline IonSpecies ar_ion() {
  return {"40Ar11+", 11 * elementary_charge, 39.962 * atomic_mass_unit, 1};
}

inline IonSpecies kr_ion() {
  return {"84Kr23+", 23 * elementary_charge, 83.912 * atomic_mass_unit, 1};
}

inline IonSpecies pb_ion() {
  return {"208Pb81+", 81 * elementary_charge, 207.9767 * atomic_mass_unit, 1};
}

inline TrapPort coupling_trap_port() { return {4.6e-3, 10e-12}; }

// Single H2+ against 100 Be+ through the bare common endcap at 500 kHz.
inline CouplingScenario h2be_endcap() {
  CouplingScenario sc;
  sc.ion1 = h2_ion();
  sc.ion2 = be_cloud();
  sc.port1 = coupling_trap_port();
  sc.port2 = coupling_trap_port();
  sc.circuit_temperature = 4.2;
  sc.doppler_limit = 0.5e-3;
  sc.axial_frequency = hz_to_rad(500e3);
  return sc;
}

// Same pair assisted by the coupling-trap tank circuit, 5 kHz above resonance.
inline CouplingScenario h2be_tank(double detuning_hz = 5e3) {
  CouplingScenario sc = h2be_endcap();
  sc.axial_frequency = 0.0;
  Resonator res;
  res.inductance = 2.1e-3;
  res.coil_capacitance = 5.1e-12;
  res.parallel_resistance = 344e6;
  res.total_capacitance = res.coil_capacitance + 10e-12;
  sc.resonator = res;
  sc.resonator_detuning = hz_to_rad(detuning_hz);
  return sc;
}

// Ar11+/Kr23+ on the analysis-trap resonator, 149.5 Hz above resonance.
inline CouplingScenario arkr(double detuning_hz = 149.5) {
  CouplingScenario sc;
  sc.ion1 = ar_ion();
  sc.ion2 = kr_ion();
  sc.port1 = {25e-3, 15.2e-12};
  sc.port2 = {19e-3, 15.2e-12};
  Resonator res;
  res.inductance = 10.5e-3;
  res.coil_capacitance = 6.3e-12;
  res.parallel_resistance = 155e6;
  res.total_capacitance = res.coil_capacitance + 15.2e-12;
  sc.resonator = res;
  sc.circuit_temperature = 4.2;
  sc.doppler_limit = 4.2;
  sc.resonator_detuning = hz_to_rad(detuning_hz);
  return sc;
}

// Pb81+ in the precision trap against 100 Be+, one coil loaded by both traps.
inline CouplingScenario pb_pt(double detuning_hz = 3e3) {
  CouplingScenario sc;
  sc.ion1 = pb_ion();
  sc.ion2 = be_cloud();
  sc.port1 = {29.2e-3, 23.3e-12};
  sc.port2 = coupling_trap_port();
  Resonator res;
  res.inductance = 2.1e-3;
  res.coil_capacitance = 5.1e-12;
  res.parallel_resistance = 344e6;
  res.total_capacitance = res.coil_capacitance + 23.3e-12 + 10e-12;
  sc.resonator = res;
  sc.circuit_temperature = 4.2;
  sc.doppler_limit = 0.5e-3;
  sc.resonator_detuning = hz_to_rad(detuning_hz);
  return sc;
}

inline bool close_rel(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max(std::abs(a), std::abs(b));
}

}  // namespace tcsim::fixtures
