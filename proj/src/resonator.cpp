#include "tcsim/resonator.hpp"

#include <cmath>
#include <stdexcept>

namespace tcsim {

std::complex<double> impedance(const Resonator& res, double omega) {
  if (!(omega > 0.0)) throw std::invalid_argument("impedance: omega must be > 0");
  const std::complex<double> admittance(
      1.0 / res.parallel_resistance,
      omega * res.total_capacitance - 1.0 / (omega * res.inductance));
  return 1.0 / admittance;
}

EffectiveCircuit effective_circuit(const Resonator& res, double detuning,
                                   CircuitModel model) {
  const double omega_r = res.resonance_frequency();
  const double q = res.quality_factor();
  const double fwhm = omega_r / q;
  if (!(std::abs(detuning) > fwhm))
    throw std::invalid_argument(
        "effective_circuit: working point lies inside the resonance width "
        "(|detuning| <= omega_R/Q); use the exact impedance dynamics instead");

  const double omega = omega_r + detuning;
  EffectiveCircuit eff;
  eff.working_frequency = omega;
  if (model == CircuitModel::exact) {
    const std::complex<double> z = impedance(res, omega);
    eff.effective_resistance = z.real();
    eff.effective_capacitance = -1.0 / (z.imag() * omega);
  } else {
    eff.effective_resistance =
        res.parallel_resistance * omega * omega / (4.0 * q * q * detuning * detuning);
    eff.effective_capacitance =
        2.0 * res.total_capacitance * omega_r * detuning / (omega * omega);
  }
  return eff;
}

double ion_resonator_rate(const IonSpecies& ion, const TrapPort& port,
                          double effective_resistance) {
  if (effective_resistance < 0.0)
    throw std::invalid_argument("ion_resonator_rate: R_eff must be >= 0");
  const double d = port.effective_distance;
  return ion.count * ion.charge * ion.charge * effective_resistance /
         (ion.mass * d * d);
}

}  // namespace tcsim
