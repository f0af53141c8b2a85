#include "tcsim/coupling.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "tcsim/constants.hpp"

namespace tcsim {

double rabi_frequency(const IonSpecies& ion1, const TrapPort& port1,
                      const IonSpecies& ion2, const TrapPort& port2,
                      double coupling_capacitance, double omega) {
  if (!(coupling_capacitance != 0.0))
    throw std::invalid_argument("rabi_frequency: coupling capacitance must be nonzero");
  if (!(omega > 0.0)) throw std::invalid_argument("rabi_frequency: omega must be > 0");
  const double n_scale = std::sqrt(static_cast<double>(ion1.count) * ion2.count /
                                   (ion1.mass * ion2.mass));
  return std::abs(ion1.charge * ion2.charge) * n_scale /
         (omega * port1.effective_distance * port2.effective_distance *
          std::abs(coupling_capacitance));
}

double coupling_constant(const IonSpecies& target, const TrapPort& target_port,
                         const IonSpecies& source, const TrapPort& source_port,
                         double coupling_capacitance) {
  return source.count * target.charge * source.charge /
         (target.mass * target_port.effective_distance *
          source_port.effective_distance * coupling_capacitance);
}

double shifted_axial_frequency(const IonSpecies& ion, const TrapPort& port,
                               double effective_capacitance, double omega) {
  if (!(effective_capacitance != 0.0))
    throw std::invalid_argument("shifted_axial_frequency: C_eff must be nonzero");
  const double d = port.effective_distance;
  return omega + ion.count * ion.charge * ion.charge /
                     (2.0 * ion.mass * omega * d * d * effective_capacitance);
}

ModeFrequencies mode_frequencies(double shifted1, double shifted2, double rabi) {
  if (!(shifted1 > 0.0 && shifted2 > 0.0))
    throw std::invalid_argument("mode_frequencies: shifted frequencies must be > 0");
  const double delta = shifted1 - shifted2;
  const double split = std::sqrt(delta * delta + rabi * rabi);
  ModeFrequencies m;
  m.upper = 0.5 * (shifted1 + shifted2 + split);
  m.lower = 0.5 * (shifted1 + shifted2 - split);
  m.modified_rabi = split;
  return m;
}

ModeCoefficients mode_coefficients(double shifted1, double shifted2, double c12,
                                   double c21) {
  Eigen::Matrix2d k;
  k << shifted1 * shifted1, c12, c21, shifted2 * shifted2;
  Eigen::EigenSolver<Eigen::Matrix2d> solver(k);
  const Eigen::Vector2d values = solver.eigenvalues().real();
  const Eigen::Matrix2d vectors = solver.eigenvectors().real();
  const int upper = values(0) >= values(1) ? 0 : 1;
  const int lower = 1 - upper;
  ModeCoefficients mc;
  // Normalise each eigenvector to unit z1 content; the in-phase combination
  // belongs to the upper branch for positive coupling.
  mc.alpha = vectors(1, upper) / vectors(0, upper);
  mc.beta = -vectors(1, lower) / vectors(0, lower);
  return mc;
}

double scenario_coupling_capacitance(const CouplingScenario& scenario) {
  if (scenario.resonator) {
    return effective_circuit(*scenario.resonator, scenario.resonator_detuning)
        .effective_capacitance;
  }
  return scenario.port1.trap_capacitance;
}

CouplingSummary summarize_coupling(const CouplingScenario& scenario) {
  CouplingSummary s;
  s.coupling_capacitance = scenario_coupling_capacitance(scenario);
  const double omega = scenario.working_frequency();
  const double delta = scenario.ion_frequency_mismatch;
  s.shifted_frequencies = {omega + 0.5 * delta, omega - 0.5 * delta};
  s.rabi_frequency = rabi_frequency(scenario.ion1, scenario.port1, scenario.ion2,
                                    scenario.port2, s.coupling_capacitance, omega);
  s.exchange_time = pi / s.rabi_frequency;
  const ModeFrequencies m =
      mode_frequencies(s.shifted_frequencies[0], s.shifted_frequencies[1],
                       s.rabi_frequency);
  s.mode_frequencies = {m.upper, m.lower};
  s.modified_rabi = m.modified_rabi;
  s.coupling_constants = {
      coupling_constant(scenario.ion1, scenario.port1, scenario.ion2, scenario.port2,
                        s.coupling_capacitance),
      coupling_constant(scenario.ion2, scenario.port2, scenario.ion1, scenario.port1,
                        s.coupling_capacitance)};
  return s;
}

}  // namespace tcsim
