#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

#include "tcsim/levmar.hpp"
#include "tcsim/model.hpp"

namespace tcsim {

// Image-current equivalent of one ion (or cloud COM mode): a lossless
// series-LC branch with l = m D^2/(N q^2) and c = 1/(l w^2), resonant at the
// ion's bare axial frequency.
struct IonBranch {
  double inductance = 0.0;   // H
  double capacitance = 0.0;  // F
  double frequency = 0.0;    // rad/s

  static IonBranch from_ion(const IonSpecies& ion, const TrapPort& port,
                            double omega);
  std::complex<double> impedance(double omega) const;
};

// Tank circuit in parallel with the ion branches. The total port impedance
// has a zero at each bare branch frequency and poles at the dressed normal
// modes; the mode poles carry the avoided-crossing structure.
struct EquivalentCircuit {
  Resonator tank;
  std::vector<IonBranch> branches;
  std::complex<double> total_impedance(double omega) const;
};

struct SpectrumGrid {
  Eigen::ArrayXd sweep_axis;      // labeled frequency difference, Hz
  Eigen::ArrayXd frequency_axis;  // offset from the tank resonance, Hz
  Eigen::MatrixXd power;          // dB, rows follow frequency_axis
};

// Johnson-noise spectrum of the loaded circuit over `frequency_axis`
// (uniform bin centers, Hz offsets from the tank resonance):
// P = gain + 10 log10(4 k_B T <Re Z_tot>_bin + floor term).
// The linear power is averaged over each bin (finite resolution bandwidth),
// so a mode that decouples from the tank fades out of the spectrum instead
// of surviving as an unphysically narrow line.
Eigen::ArrayXd dip_spectrum(const EquivalentCircuit& circuit,
                            const Eigen::ArrayXd& frequency_axis_hz,
                            double temperature, double gain_db = 0.0,
                            double noise_floor_ohm = 0.0);

struct SyntheticMapOptions {
  double gain_db = 0.0;
  // 0 picks 1e-3 of R_eff at the working point.
  double noise_floor_ohm = 0.0;
};

// Per sweep value, retunes the ion-1 branch so the dressed frequencies
// differ by that amount, and emits one dip_spectrum column. The mode traces
// form the two avoided-crossing branches.
SpectrumGrid avoided_crossing_map(const CouplingScenario& scenario,
                                  const Eigen::ArrayXd& sweep_hz,
                                  const Eigen::ArrayXd& frequency_hz,
                                  const SyntheticMapOptions& options = {});

// Adds Gaussian noise, sigma = fraction * (grid dynamic range), in dB space.
void add_noise(SpectrumGrid& grid, double fraction_of_depth, std::uint64_t seed);

// Up to two mode features per column (position above the local baseline,
// parabolic sub-bin refinement), sorted by frequency.
struct FeatureColumn {
  std::vector<double> position_hz;
  std::vector<double> prominence_db;
};
std::vector<FeatureColumn> extract_mode_features(const SpectrumGrid& grid,
                                                 double min_prominence_db = 5.0);

// Least-squares hyperbola through the feature separations,
// d^2(x) = (x - x0)^2 + s^2, restricted to near-crossing columns.
struct SplittingEstimate {
  double minimal_splitting_hz = 0.0;
  double crossing_hz = 0.0;  // sweep value of closest approach
  int columns_used = 0;
};
SplittingEstimate minimal_splitting(const SpectrumGrid& grid,
                                    double min_prominence_db = 5.0);

struct FitResult {
  double effective_capacitance = 0.0;   // F, at the scenario working point
  double capacitance_uncertainty = 0.0; // statistical, F
  double rabi_frequency = 0.0;          // rad/s, derived from the capacitance
  double ion2_frequency = 0.0;          // dressed ion-2 offset from resonance, Hz
  double sweep_calibration = 0.0;       // true Hz per column step
  double residual_norm = 0.0;
  bool converged = false;
  int iterations = 0;
  Eigen::VectorXd parameters;           // raw model parameters
  Eigen::MatrixXd covariance;
};

struct FitGuess {
  double effective_capacitance = 0.0;
  double ion2_frequency_hz = 0.0;
  double sweep_scale = 1.0;
  double sweep_offset_hz = 0.0;
  double gain_db = 0.0;
  double noise_floor_ohm = 0.0;
};

// Forward model used by the fit: series effective tank (exact dissipative
// part, linear-in-detuning effective capacitance scaled by parameters(0))
// loaded with the two ion branches. Parameter layout:
// [C_eff_ref, f2_hz, sweep_scale, sweep_offset_hz, gain_db, log10_floor_ohm].
Eigen::MatrixXd model_spectrum(const CouplingScenario& scenario,
                               const Eigen::ArrayXd& sweep_hz,
                               const Eigen::ArrayXd& frequency_hz,
                               const Eigen::VectorXd& parameters,
                               bool coupled = true);

// Weighted least squares of the model over all grid cells in log-power
// space. The initial guess comes from the feature-position heuristic when
// not supplied. `coupled = false` fits the no-interaction null model (each
// branch loads its own copy of the tank) for nesting comparisons.
FitResult fit_avoided_crossing(const SpectrumGrid& grid,
                               const CouplingScenario& scenario,
                               const std::optional<FitGuess>& guess = std::nullopt,
                               bool coupled = true);

}  // namespace tcsim
