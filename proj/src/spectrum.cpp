#include "tcsim/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tcsim/constants.hpp"
#include "tcsim/coupling.hpp"
#include "tcsim/dynamics.hpp"
#include "tcsim/resonator.hpp"

namespace tcsim {

namespace {

using complexd = std::complex<double>;

// Resolution sub-samples per frequency bin (midpoint rule).
constexpr int kBinSubsamples = 8;

complexd safe_admittance(const complexd& z) {
  const double mag = std::abs(z);
  if (mag < 1e-12) return complexd(1e12, 0.0);
  return 1.0 / z;
}

double bin_width(const Eigen::ArrayXd& axis) {
  if (axis.size() < 2) return 0.0;
  return (axis(axis.size() - 1) - axis(0)) / static_cast<double>(axis.size() - 1);
}

// Bin-averaged linear power 4kT(Re Z + floor), returned in dB.
template <typename ReZFn>
double averaged_power_db(double f_center_hz, double width_hz, double temperature,
                         double gain_db, double floor_ohm, const ReZFn& re_z_at) {
  double acc = 0.0;
  if (width_hz <= 0.0) {
    acc = std::max(re_z_at(f_center_hz), 0.0);
  } else {
    for (int s = 0; s < kBinSubsamples; ++s) {
      const double f =
          f_center_hz + width_hz * ((s + 0.5) / kBinSubsamples - 0.5);
      acc += std::max(re_z_at(f), 0.0);
    }
    acc /= kBinSubsamples;
  }
  const double p = 4.0 * k_boltzmann * temperature * (acc + floor_ohm);
  return gain_db + 10.0 * std::log10(std::max(p, 1e-300));
}

}  // namespace

IonBranch IonBranch::from_ion(const IonSpecies& ion, const TrapPort& port,
                              double omega) {
  IonBranch b;
  const double d = port.effective_distance;
  b.inductance = ion.mass * d * d / (ion.count * ion.charge * ion.charge);
  b.frequency = omega;
  b.capacitance = 1.0 / (b.inductance * omega * omega);
  return b;
}

complexd IonBranch::impedance(double omega) const {
  return complexd(0.0, omega * inductance - 1.0 / (omega * capacitance));
}

complexd EquivalentCircuit::total_impedance(double omega) const {
  complexd admittance = 1.0 / tcsim::impedance(tank, omega);
  for (const IonBranch& b : branches) admittance += safe_admittance(b.impedance(omega));
  return 1.0 / admittance;
}

Eigen::ArrayXd dip_spectrum(const EquivalentCircuit& circuit,
                            const Eigen::ArrayXd& frequency_axis_hz,
                            double temperature, double gain_db,
                            double noise_floor_ohm) {
  const double omega_r = circuit.tank.resonance_frequency();
  const double width = bin_width(frequency_axis_hz);
  const auto re_z = [&](double f_hz) {
    return circuit.total_impedance(omega_r + hz_to_rad(f_hz)).real();
  };
  Eigen::ArrayXd power(frequency_axis_hz.size());
  for (Eigen::Index j = 0; j < frequency_axis_hz.size(); ++j)
    power(j) = averaged_power_db(frequency_axis_hz(j), width, temperature,
                                 gain_db, noise_floor_ohm, re_z);
  return power;
}

SpectrumGrid avoided_crossing_map(const CouplingScenario& scenario,
                                  const Eigen::ArrayXd& sweep_hz,
                                  const Eigen::ArrayXd& frequency_hz,
                                  const SyntheticMapOptions& options) {
  if (!scenario.resonator)
    throw std::invalid_argument("avoided_crossing_map: scenario has no resonator");
  const Resonator& tank = *scenario.resonator;
  // Also validates that the working point sits outside the resonance width.
  const EffectiveCircuit eff = effective_circuit(tank, scenario.resonator_detuning);
  const double omega_r = tank.resonance_frequency();
  const double floor_ohm = options.noise_floor_ohm > 0.0
                               ? options.noise_floor_ohm
                               : 1e-3 * eff.effective_resistance;

  // Dressed positions are targeted; the bare branch frequency is backed out
  // of the pulling shift at the local effective capacitance.
  const auto bare_frequency = [&](const IonSpecies& ion, const TrapPort& port,
                                  double dressed) {
    const EffectiveCircuit local = effective_circuit(tank, dressed - omega_r);
    const double shift =
        shifted_axial_frequency(ion, port, local.effective_capacitance, dressed) -
        dressed;
    return dressed - shift;
  };

  const double dressed2 = eff.working_frequency;
  const IonBranch branch2 = IonBranch::from_ion(
      scenario.ion2, scenario.port2,
      bare_frequency(scenario.ion2, scenario.port2, dressed2));

  SpectrumGrid grid;
  grid.sweep_axis = sweep_hz;
  grid.frequency_axis = frequency_hz;
  grid.power.resize(frequency_hz.size(), sweep_hz.size());
  for (Eigen::Index k = 0; k < sweep_hz.size(); ++k) {
    const double dressed1 = dressed2 + hz_to_rad(sweep_hz(k));
    EquivalentCircuit circuit;
    circuit.tank = tank;
    circuit.branches = {
        IonBranch::from_ion(scenario.ion1, scenario.port1,
                            bare_frequency(scenario.ion1, scenario.port1, dressed1)),
        branch2};
    grid.power.col(k) = dip_spectrum(circuit, frequency_hz,
                                     scenario.circuit_temperature, options.gain_db,
                                     floor_ohm);
  }
  return grid;
}

void add_noise(SpectrumGrid& grid, double fraction_of_depth, std::uint64_t seed) {
  // Depth of the mode features above the shoulder; the median over the grid
  // sits on the shoulder because the features are narrow.
  std::vector<double> cells(grid.power.data(), grid.power.data() + grid.power.size());
  std::nth_element(cells.begin(), cells.begin() + cells.size() / 2, cells.end());
  const double depth = grid.power.maxCoeff() - cells[cells.size() / 2];
  const double sigma = fraction_of_depth * depth;
  RandomStream rng(seed);
  for (Eigen::Index k = 0; k < grid.power.cols(); ++k)
    for (Eigen::Index j = 0; j < grid.power.rows(); ++j)
      grid.power(j, k) += sigma * rng.gaussian();
}

std::vector<FeatureColumn> extract_mode_features(const SpectrumGrid& grid,
                                                 double min_prominence_db) {
  std::vector<FeatureColumn> columns(grid.power.cols());
  const Eigen::Index rows = grid.power.rows();
  for (Eigen::Index k = 0; k < grid.power.cols(); ++k) {
    // Three-point smoothing knocks down per-bin noise without biasing the
    // symmetric peak positions.
    Eigen::VectorXd col = grid.power.col(k);
    for (Eigen::Index j = 1; j + 1 < rows; ++j)
      col(j) = (grid.power(j - 1, k) + grid.power(j, k) + grid.power(j + 1, k)) / 3.0;
    std::vector<double> sorted(col.data(), col.data() + rows);
    std::nth_element(sorted.begin(), sorted.begin() + rows / 2, sorted.end());
    const double baseline = sorted[rows / 2];

    std::vector<std::pair<double, Eigen::Index>> maxima;  // (-prominence, index)
    for (Eigen::Index j = 1; j + 1 < rows; ++j) {
      if (col(j) >= col(j - 1) && col(j) >= col(j + 1) &&
          col(j) - baseline >= min_prominence_db)
        maxima.emplace_back(baseline - col(j), j);
    }
    std::sort(maxima.begin(), maxima.end());
    FeatureColumn out;
    std::vector<Eigen::Index> kept;
    for (const auto& [neg_prom, j] : maxima) {
      bool close = false;
      for (Eigen::Index other : kept)
        if (std::abs(static_cast<long>(j) - static_cast<long>(other)) <= 3)
          close = true;
      if (close) continue;
      kept.push_back(j);
      const double ym = col(j - 1), y0 = col(j), yp = col(j + 1);
      const double denom = ym - 2.0 * y0 + yp;
      double frac = 0.0;
      if (std::abs(denom) > 1e-12) frac = 0.5 * (ym - yp) / denom;
      frac = std::clamp(frac, -0.5, 0.5);
      const double step = grid.frequency_axis(1) - grid.frequency_axis(0);
      out.position_hz.push_back(grid.frequency_axis(j) + frac * step);
      out.prominence_db.push_back(-neg_prom);
      if (kept.size() == 2) break;
    }
    if (out.position_hz.size() == 2 && out.position_hz[0] > out.position_hz[1]) {
      std::swap(out.position_hz[0], out.position_hz[1]);
      std::swap(out.prominence_db[0], out.prominence_db[1]);
    }
    columns[k] = std::move(out);
  }
  return columns;
}

SplittingEstimate minimal_splitting(const SpectrumGrid& grid,
                                    double min_prominence_db) {
  const auto columns = extract_mode_features(grid, min_prominence_db);
  std::vector<double> xs, ds;
  for (Eigen::Index k = 0; k < grid.sweep_axis.size(); ++k) {
    if (columns[k].position_hz.size() != 2) continue;
    xs.push_back(grid.sweep_axis(k));
    ds.push_back(columns[k].position_hz[1] - columns[k].position_hz[0]);
  }
  if (xs.size() < 3)
    throw std::runtime_error("minimal_splitting: fewer than 3 columns show both modes");

  // d^2 - x^2 = -2 x0 x + (x0^2 + s^2): linear least squares with one
  // rejection pass against spurious noise features.
  const auto solve = [&](const std::vector<char>& keep) {
    int n = 0;
    for (char c : keep) n += c;
    Eigen::MatrixXd a(n, 2);
    Eigen::VectorXd y(n);
    int i = 0;
    for (std::size_t j = 0; j < xs.size(); ++j) {
      if (!keep[j]) continue;
      a(i, 0) = xs[j];
      a(i, 1) = 1.0;
      y(i) = ds[j] * ds[j] - xs[j] * xs[j];
      ++i;
    }
    return Eigen::Vector2d(a.colPivHouseholderQr().solve(y));
  };

  std::vector<char> keep(xs.size(), 1);
  Eigen::Vector2d sol = solve(keep);
  for (int pass = 0; pass < 2; ++pass) {
    double rms = 0.0;
    int n = 0;
    for (std::size_t j = 0; j < xs.size(); ++j) {
      if (!keep[j]) continue;
      const double r = ds[j] * ds[j] - xs[j] * xs[j] - (sol(0) * xs[j] + sol(1));
      rms += r * r;
      ++n;
    }
    rms = std::sqrt(rms / n);
    int kept = 0;
    for (std::size_t j = 0; j < xs.size(); ++j) {
      const double r = ds[j] * ds[j] - xs[j] * xs[j] - (sol(0) * xs[j] + sol(1));
      keep[j] = std::abs(r) <= 3.0 * rms;
      kept += keep[j];
    }
    if (kept < 3) break;
    sol = solve(keep);
  }

  const double x0 = -0.5 * sol(0);
  const double s2 = sol(1) - x0 * x0;
  SplittingEstimate est;
  est.crossing_hz = x0;
  est.minimal_splitting_hz = s2 > 0.0 ? std::sqrt(s2) : 0.0;
  est.columns_used = static_cast<int>(std::count(keep.begin(), keep.end(), 1));
  return est;
}

Eigen::MatrixXd model_spectrum(const CouplingScenario& scenario,
                               const Eigen::ArrayXd& sweep_hz,
                               const Eigen::ArrayXd& frequency_hz,
                               const Eigen::VectorXd& p, bool coupled) {
  if (!scenario.resonator)
    throw std::invalid_argument("model_spectrum: scenario has no resonator");
  const Resonator& tank = *scenario.resonator;
  const double omega_r = tank.resonance_frequency();
  const double dw_ref = scenario.resonator_detuning;

  const double c_ref = p(0);
  const double f2_hz = p(1);
  const double sweep_scale = p(2);
  const double sweep_offset = p(3);
  const double gain_db = p(4);
  const double floor_ohm = std::pow(10.0, p(5));
  const double temperature = scenario.circuit_temperature;

  // Linear-in-detuning capacitance shape anchored at the working point.
  const auto shape = [&](double dw) {
    return 2.0 * tank.total_capacitance * omega_r * dw /
           ((omega_r + dw) * (omega_r + dw));
  };
  const double shape_ref = shape(dw_ref);
  const auto c_eff_at = [&](double dw) { return c_ref * shape(dw) / shape_ref; };

  const auto bare = [&](const IonSpecies& ion, const TrapPort& port, double dressed) {
    const double shift =
        shifted_axial_frequency(ion, port, c_eff_at(dressed - omega_r), dressed) -
        dressed;
    return dressed - shift;
  };

  const double dressed2 = omega_r + hz_to_rad(f2_hz);
  const IonBranch branch2 = IonBranch::from_ion(
      scenario.ion2, scenario.port2, bare(scenario.ion2, scenario.port2, dressed2));
  const double width = bin_width(frequency_hz);

  Eigen::MatrixXd power(frequency_hz.size(), sweep_hz.size());
  for (Eigen::Index k = 0; k < sweep_hz.size(); ++k) {
    const double dnu_true = sweep_scale * (sweep_hz(k) - sweep_offset);
    const double dressed1 = dressed2 + hz_to_rad(dnu_true);
    const IonBranch branch1 = IonBranch::from_ion(
        scenario.ion1, scenario.port1, bare(scenario.ion1, scenario.port1, dressed1));

    const auto re_z = [&](double f_hz) {
      const double dw = hz_to_rad(f_hz);
      const double omega = omega_r + dw;
      const double re_tank = impedance(tank, omega).real();
      const complexd z_tank(re_tank, -1.0 / (omega * c_eff_at(dw)));
      if (coupled) {
        complexd y = 1.0 / z_tank;
        y += safe_admittance(branch1.impedance(omega));
        y += safe_admittance(branch2.impedance(omega));
        return (1.0 / y).real();
      }
      // No-interaction null model: normalised single-branch responses
      // multiply.
      const complexd y1 = 1.0 / z_tank + safe_admittance(branch1.impedance(omega));
      const complexd y2 = 1.0 / z_tank + safe_admittance(branch2.impedance(omega));
      const double r1 = (1.0 / y1).real();
      const double r2 = (1.0 / y2).real();
      return r1 * r2 / std::max(z_tank.real(), 1e-300);
    };
    for (Eigen::Index j = 0; j < frequency_hz.size(); ++j)
      power(j, k) = averaged_power_db(frequency_hz(j), width, temperature, gain_db,
                                      floor_ohm, re_z);
  }
  return power;
}

FitResult fit_avoided_crossing(const SpectrumGrid& grid,
                               const CouplingScenario& scenario,
                               const std::optional<FitGuess>& guess, bool coupled) {
  if (!scenario.resonator)
    throw std::invalid_argument("fit_avoided_crossing: scenario has no resonator");
  const double omega_r = scenario.resonator->resonance_frequency();

  FitGuess g;
  if (guess) {
    g = *guess;
  } else {
    // Feature-position heuristic: crossing and minimal splitting set the
    // capacitance scale; the branch mean tracks f2 + dnu/2.
    const SplittingEstimate split = minimal_splitting(grid);
    const auto columns = extract_mode_features(grid);
    double f2_acc = 0.0;
    int f2_n = 0;
    for (Eigen::Index k = 0; k < grid.sweep_axis.size(); ++k) {
      if (columns[k].position_hz.size() != 2) continue;
      const double mean =
          0.5 * (columns[k].position_hz[0] + columns[k].position_hz[1]);
      f2_acc += mean - 0.5 * (grid.sweep_axis(k) - split.crossing_hz);
      ++f2_n;
    }
    g.ion2_frequency_hz =
        f2_n > 0 ? f2_acc / f2_n : scenario.resonator_detuning / two_pi;
    g.sweep_scale = 1.0;
    g.sweep_offset_hz = split.crossing_hz;
    const double rabi_est = hz_to_rad(std::max(split.minimal_splitting_hz, 1e-3));
    // The pole pair splits slightly wider than the exchange rate; undo the
    // first-order (R_eff/X_eff)^2 inflation before converting to C.
    const double q = scenario.resonator->quality_factor();
    const double omega = omega_r + hz_to_rad(g.ion2_frequency_hz);
    const double x = omega / omega_r - omega_r / omega;
    const double inflation = 1.0 + 1.0 / (q * q * x * x);
    g.effective_capacitance =
        inflation *
        rabi_frequency(scenario.ion1, scenario.port1, scenario.ion2, scenario.port2,
                       1.0, omega) /
        rabi_est;
    g.gain_db = 0.0;
    g.noise_floor_ohm = 0.0;
  }

  Eigen::VectorXd p(6);
  p(0) = g.effective_capacitance;
  p(1) = g.ion2_frequency_hz;
  p(2) = g.sweep_scale;
  p(3) = g.sweep_offset_hz;
  p(4) = g.gain_db;
  p(5) = g.noise_floor_ohm > 0.0 ? std::log10(g.noise_floor_ohm) : 0.0;

  if (!guess || g.gain_db == 0.0) {
    // Anchor gain and floor on the data: mode-top level and map bottom.
    const Eigen::MatrixXd probe =
        model_spectrum(scenario, grid.sweep_axis, grid.frequency_axis, p, coupled);
    p(4) += grid.power.maxCoeff() - probe.maxCoeff();
    const double floor_db = grid.power.minCoeff() - p(4);
    p(5) = floor_db / 10.0 -
           std::log10(4.0 * k_boltzmann * scenario.circuit_temperature);
  }

  // The mode features are only a couple of bins wide, so the raw objective
  // has narrow basins. Graduated passes on column-smoothed power widen them;
  // every stage's objective is minimised by the same parameters when the
  // model matches the data, so the staging does not bias the estimate.
  const auto smooth = [](const Eigen::MatrixXd& power, int half, int passes) {
    Eigen::MatrixXd cur = power;
    for (int pass = 0; pass < passes; ++pass) {
      Eigen::MatrixXd next = cur;
      for (Eigen::Index k = 0; k < cur.cols(); ++k)
        for (Eigen::Index j = 0; j < cur.rows(); ++j) {
          const Eigen::Index lo = std::max<Eigen::Index>(0, j - half);
          const Eigen::Index hi = std::min<Eigen::Index>(cur.rows() - 1, j + half);
          next(j, k) = cur.col(k).segment(lo, hi - lo + 1).mean();
        }
      cur = next;
    }
    return cur;
  };

  const auto staged_residuals = [&](int half, int passes) {
    const Eigen::MatrixXd data =
        half > 0 ? smooth(grid.power, half, passes) : grid.power;
    return [&, half, passes, data](const Eigen::VectorXd& params) {
      Eigen::MatrixXd model = model_spectrum(scenario, grid.sweep_axis,
                                             grid.frequency_axis, params, coupled);
      if (half > 0) model = smooth(model, half, passes);
      Eigen::MatrixXd diff = model - data;
      return Eigen::VectorXd(Eigen::Map<Eigen::VectorXd>(diff.data(), diff.size()));
    };
  };

  FitOptions stage_options;
  stage_options.max_iterations = 80;
  FitOptions options;
  options.max_iterations = 120;
  const auto run_from = [&](Eigen::VectorXd start) {
    FitOutcome coarse = levenberg_marquardt(staged_residuals(6, 3), start, stage_options);
    coarse = levenberg_marquardt(staged_residuals(2, 2), coarse.parameters, stage_options);
    FitOutcome fine =
        levenberg_marquardt(staged_residuals(0, 0), coarse.parameters, options);
    // A restart with fresh damping escapes shallow stalls at small cost.
    return levenberg_marquardt(staged_residuals(0, 0), fine.parameters, options);
  };

  // The raw objective keeps nearby local minima along the capacitance axis;
  // a short multi-start picks the deepest.
  FitOutcome outcome = run_from(p);
  if (!guess) {
    for (double factor : {0.98, 1.02}) {
      Eigen::VectorXd start = p;
      start(0) *= factor;
      const FitOutcome other = run_from(start);
      if (other.residual_norm < outcome.residual_norm) outcome = other;
    }
  }

  FitResult result;
  result.parameters = outcome.parameters;
  result.covariance = outcome.covariance;
  result.effective_capacitance = outcome.parameters(0);
  result.capacitance_uncertainty = std::sqrt(std::max(outcome.covariance(0, 0), 0.0));
  result.ion2_frequency = outcome.parameters(1);
  const double sweep_step =
      grid.sweep_axis.size() > 1
          ? (grid.sweep_axis(grid.sweep_axis.size() - 1) - grid.sweep_axis(0)) /
                static_cast<double>(grid.sweep_axis.size() - 1)
          : 1.0;
  result.sweep_calibration = outcome.parameters(2) * sweep_step;
  result.residual_norm = outcome.residual_norm;
  result.converged = outcome.converged;
  result.iterations = outcome.iterations;
  result.rabi_frequency =
      rabi_frequency(scenario.ion1, scenario.port1, scenario.ion2, scenario.port2,
                     result.effective_capacitance,
                     omega_r + hz_to_rad(result.ion2_frequency));
  return result;
}

}  // namespace tcsim
