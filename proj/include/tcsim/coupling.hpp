#pragma once

#include <array>

#include "tcsim/model.hpp"
#include "tcsim/resonator.hpp"

namespace tcsim {

// Closed-form description of one coupled two-ion configuration.
struct CouplingSummary {
  double rabi_frequency = 0.0;   // Omega_R, rad/s
  double exchange_time = 0.0;    // tau_ex = pi / Omega_R, s
  std::array<double, 2> shifted_frequencies{};  // w1, w2, rad/s
  std::array<double, 2> mode_frequencies{};     // {omega_u, omega_v}, rad/s
  double modified_rabi = 0.0;    // sqrt(Omega_R^2 + delta_omega^2), rad/s
  std::array<double, 2> coupling_constants{};   // {C_12, C_21}, 1/s^2
  double coupling_capacitance = 0.0;            // C_T or C_eff actually used, F
};

// Omega_R = q1 q2 sqrt(N1 N2 / (m1 m2)) / (omega D1 D2 C); the rate of
// coherent energy exchange through the shared capacitance C.
double rabi_frequency(const IonSpecies& ion1, const TrapPort& port1,
                      const IonSpecies& ion2, const TrapPort& port2,
                      double coupling_capacitance, double omega);

// C_ij = N_j q_i q_j / (m_i D_i D_j C): force per displacement that ion j
// exerts on ion i through the shared capacitance.
double coupling_constant(const IonSpecies& target, const TrapPort& target_port,
                         const IonSpecies& source, const TrapPort& source_port,
                         double coupling_capacitance);

// Frequency pulling by the series-equivalent reactance:
// w_i = omega_i + N_i q_i^2 / (2 m_i omega_i D_i^2 C_eff).
double shifted_axial_frequency(const IonSpecies& ion, const TrapPort& port,
                               double effective_capacitance, double omega);

struct ModeFrequencies {
  double upper = 0.0;          // omega_u, rad/s
  double lower = 0.0;          // omega_v, rad/s
  double modified_rabi = 0.0;  // omega_u - omega_v, rad/s
};

// omega_{u,v} = (w1 + w2)/2 +- sqrt(delta^2 + Omega_R^2)/2.
ModeFrequencies mode_frequencies(double shifted1, double shifted2, double rabi);

// u = z1 + alpha z2, v = z1 - beta z2 from the eigenvectors of the
// displacement-coupling matrix [[w1^2, c12], [c21, w2^2]].
struct ModeCoefficients {
  double alpha = 0.0;
  double beta = 0.0;
};
ModeCoefficients mode_coefficients(double shifted1, double shifted2, double c12,
                                   double c21);

// Capacitance the ions couple through: C_eff of the detuned tank when a
// resonator is configured, otherwise the bare common-endcap C_T.
double scenario_coupling_capacitance(const CouplingScenario& scenario);

CouplingSummary summarize_coupling(const CouplingScenario& scenario);

}  // namespace tcsim
