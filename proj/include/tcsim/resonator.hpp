#pragma once

#include <complex>

#include "tcsim/model.hpp"

namespace tcsim {

// Series-equivalent view of the detuned tank circuit as the ions see it:
// a dissipative part R_eff and a reactive part C_eff.
struct EffectiveCircuit {
  double effective_resistance = 0.0;   // R_eff, Ohm
  double effective_capacitance = 0.0;  // C_eff, F (negative below resonance)
  double working_frequency = 0.0;      // omega = omega_R + detuning, rad/s
};

enum class CircuitModel { exact, approximate };

// Z_LC(omega) = (1/R_p + i omega C + 1/(i omega L))^{-1}, physicist
// convention e^{+i omega t}: capacitive reactance has Im < 0.
std::complex<double> impedance(const Resonator& res, double omega);

// Reduces the tank impedance at omega_R + detuning to (R_eff, C_eff).
// `exact` evaluates the full impedance; `approximate` uses the quadratic /
// linear closed forms valid far outside the resonance width.
// Requires |detuning| > FWHM = omega_R/Q; inside the resonance width the
// series reduction is meaningless and the full impedance must be used.
EffectiveCircuit effective_circuit(const Resonator& res, double detuning,
                                   CircuitModel model = CircuitModel::exact);

// Resistive coupling rate gamma_{i-Res} = N q^2 R_eff / (m D^2); the energy
// of a hot ion relaxes towards the circuit temperature with this rate.
double ion_resonator_rate(const IonSpecies& ion, const TrapPort& port,
                          double effective_resistance);

}  // namespace tcsim
