#include "tcsim/analytics.hpp"

#include <cmath>
#include <stdexcept>

#include "tcsim/constants.hpp"
#include "tcsim/coupling.hpp"
#include "tcsim/dynamics.hpp"
#include "tcsim/levmar.hpp"
#include "tcsim/resonator.hpp"

namespace tcsim {

namespace {

void check_validity(double rabi, double tau_c, double tau_1res, double tau_2res,
                    std::vector<std::string>* warnings) {
  if (!warnings) return;
  if (rabi * tau_c >= 0.3)
    warnings->push_back("tau_c * Omega_R >= 0.3: per-cycle transfer is no longer quadratic");
  if (pi / rabi >= 0.3 * std::min(tau_1res, tau_2res))
    warnings->push_back(
        "pi/Omega_R >= 0.3*min(tau_iRes): exchange is not fast against the resonator");
}

}  // namespace

std::pair<double, double> transferred_energies(double rabi, double tau_c,
                                               double e1_initial, double t_doppler,
                                               double t_circuit, double tau_1res,
                                               double tau_2res,
                                               std::vector<std::string>* warnings) {
  check_validity(rabi, tau_c, tau_1res, tau_2res, warnings);
  const double quad = 0.25 * rabi * rabi * tau_c * tau_c;
  const double to_helper =
      quad * (e1_initial + k_boltzmann * t_circuit * tau_c / (3.0 * tau_1res));
  const double to_target =
      quad * (k_boltzmann * t_doppler +
              k_boltzmann * t_circuit * tau_c / (3.0 * tau_2res));
  return {to_helper, to_target};
}

double equilibrium_temperature(double rabi, double tau_c, double t_doppler,
                               double t_circuit, double tau_1res, double tau_2res,
                               std::vector<std::string>* warnings) {
  check_validity(rabi, tau_c, tau_1res, tau_2res, warnings);
  return t_doppler + t_circuit * tau_c / (3.0 * tau_2res) +
         t_circuit * 4.0 / (rabi * rabi * tau_c * tau_1res);
}

OptimalCoupling optimal_coupling(double rabi, double t_doppler, double t_circuit,
                                 double tau_1res, double tau_2res) {
  if (!(tau_1res > tau_2res))
    throw std::domain_error(
        "optimal_coupling: requires tau_1Res > tau_2Res; for the opposite "
        "regime only the helper-free equilibrium form applies");
  OptimalCoupling opt;
  opt.coupling_time = 2.0 / rabi * std::sqrt(3.0 * tau_2res / (tau_1res - tau_2res));
  opt.minimal_temperature =
      t_circuit * 4.0 / (std::sqrt(3.0) * rabi) / std::sqrt(tau_1res * tau_2res) +
      t_doppler;
  return opt;
}

double effective_time_constant(double rabi, double tau_c) {
  return 4.0 / (rabi * rabi * tau_c);
}

Eigen::ArrayXd cooling_curve(double t_initial, double t_equilibrium, double rabi,
                             double tau_c, const Eigen::ArrayXd& times) {
  const double tau_eff = effective_time_constant(rabi, tau_c);
  if (!std::isfinite(tau_eff)) throw std::domain_error("cooling_curve: tau_eff not finite");
  return t_equilibrium + (t_initial - t_equilibrium) * (-times / tau_eff).exp();
}

IntermittentTheory intermittent_theory(const CouplingScenario& scenario,
                                       double tau_c) {
  if (!scenario.resonator)
    throw std::invalid_argument("intermittent_theory: scenario has no resonator");
  IntermittentTheory out;
  const EffectiveCircuit eff =
      effective_circuit(*scenario.resonator, scenario.resonator_detuning);
  const double r_eff = eff.effective_resistance;
  out.resonator_time1 =
      1.0 / ion_resonator_rate(scenario.ion1, scenario.port1, r_eff);
  out.resonator_time2 =
      1.0 / ion_resonator_rate(scenario.ion2, scenario.port2, r_eff);
  out.rabi_frequency =
      rabi_frequency(scenario.ion1, scenario.port1, scenario.ion2, scenario.port2,
                     eff.effective_capacitance, eff.working_frequency);

  const OptimalCoupling opt =
      optimal_coupling(out.rabi_frequency, scenario.doppler_limit,
                       scenario.circuit_temperature, out.resonator_time1,
                       out.resonator_time2);
  out.minimal_temperature = opt.minimal_temperature;
  out.optimal_coupling_time = opt.coupling_time;
  out.coupling_interval = tau_c > 0.0 ? tau_c : opt.coupling_time;
  out.equilibrium_temperature = equilibrium_temperature(
      out.rabi_frequency, out.coupling_interval, scenario.doppler_limit,
      scenario.circuit_temperature, out.resonator_time1, out.resonator_time2,
      &out.warnings);
  out.effective_time_constant =
      effective_time_constant(out.rabi_frequency, out.coupling_interval);
  const auto transfers = transferred_energies(
      out.rabi_frequency, out.coupling_interval,
      k_boltzmann * scenario.circuit_temperature, scenario.doppler_limit,
      scenario.circuit_temperature, out.resonator_time1, out.resonator_time2,
      nullptr);
  out.transferred_12 = transfers.first;
  out.transferred_21 = transfers.second;
  if (scenario.ion_frequency_mismatch != 0.0)
    out.warnings.push_back(
        "closed forms assume matched shifted frequencies; simulate for "
        "nonzero ion_frequency_mismatch");
  return out;
}

std::vector<DetuningScanRow> detuning_scan_intermittent(
    const CouplingScenario& scenario, const std::vector<double>& detunings,
    double tau_c) {
  std::vector<DetuningScanRow> rows(detunings.size());
  for (std::size_t i = 0; i < detunings.size(); ++i) {
    CouplingScenario local = scenario;
    local.resonator_detuning = detunings[i];
    const IntermittentTheory theory = intermittent_theory(local, tau_c);
    rows[i] = {detunings[i], theory.equilibrium_temperature,
               theory.effective_time_constant, theory.coupling_interval};
  }
  return rows;
}

std::vector<DetuningScanRow> detuning_scan_continuous(
    const CouplingScenario& scenario, const std::vector<double>& detunings,
    double gamma_laser, const SimulationParams& params) {
  std::vector<DetuningScanRow> rows(detunings.size());
  for (std::size_t i = 0; i < detunings.size(); ++i) {
    CouplingScenario local = scenario;
    local.resonator_detuning = detunings[i];
    const CouplingSummary summary = summarize_coupling(local);
    const double gamma = gamma_laser > 0.0 ? gamma_laser : summary.rabi_frequency;

    SimulationParams run = params;
    if (!(run.duration > 0.0)) run.duration = 40.0 / summary.rabi_frequency;
    ExchangeOptions options;
    options.gamma_laser = gamma;
    options.with_noise = true;
    options.sample_stride = 16;
    const Trajectory mean = exchange_ensemble_mean(local, run, options);

    // Late-time mean of the last quarter as the equilibrium temperature.
    std::size_t tail = mean.size() - mean.size() / 4;
    double t_eq = 0.0;
    for (std::size_t k = tail; k < mean.size(); ++k) t_eq += mean.temperature1[k];
    t_eq /= static_cast<double>(mean.size() - tail);

    const CoolingFit fit = fit_cooling_curve(mean.times, mean.temperature1);
    rows[i] = {detunings[i], t_eq, fit.time_constant, gamma};
  }
  return rows;
}

CoolingFit fit_cooling_curve(const std::vector<double>& times,
                             const std::vector<double>& temperatures) {
  if (times.size() != temperatures.size() || times.size() < 4)
    throw std::invalid_argument("fit_cooling_curve: need >= 4 samples");
  const double t0 = temperatures.front();
  double t_min = t0;
  for (double t : temperatures) t_min = std::min(t_min, t);

  const Eigen::Index n = static_cast<Eigen::Index>(times.size());
  Eigen::Map<const Eigen::ArrayXd> tt(times.data(), n);
  Eigen::Map<const Eigen::ArrayXd> yy(temperatures.data(), n);

  // Fit in log space so the decades of decay weigh evenly.
  const auto residuals = [&](const Eigen::VectorXd& p) {
    const double t_eq = p(0);
    const double tau = p(1);
    Eigen::ArrayXd model = t_eq + (t0 - t_eq) * (-tt / tau).exp();
    model = model.max(1e-12);
    return Eigen::VectorXd((model.log() - yy.max(1e-12).log()).matrix());
  };

  Eigen::VectorXd guess(2);
  guess(0) = std::max(t_min, 1e-9);
  guess(1) = std::max(times.back() / 10.0, times[1] - times[0]);
  const FitOutcome outcome = levenberg_marquardt(residuals, guess);

  CoolingFit fit;
  fit.equilibrium_temperature = outcome.parameters(0);
  fit.time_constant = outcome.parameters(1);
  fit.converged = outcome.converged;
  return fit;
}

}  // namespace tcsim
