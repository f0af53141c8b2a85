#pragma once

#include <numbers>

namespace tcsim {

// SI defining constants (2019 redefinition) and CODATA mass unit.
inline constexpr double k_boltzmann = 1.380649e-23;            // J/K
inline constexpr double elementary_charge = 1.602176634e-19;   // C
inline constexpr double atomic_mass_unit = 1.66053906660e-27;  // kg

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

// Frequencies are rad/s everywhere inside the library; Hz only at I/O.
inline constexpr double hz_to_rad(double f_hz) { return two_pi * f_hz; }
inline constexpr double rad_to_hz(double w) { return w / two_pi; }

}  // namespace tcsim
