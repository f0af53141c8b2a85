#include "tcsim/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "tcsim/analytics.hpp"
#include "tcsim/constants.hpp"
#include "tcsim/coupling.hpp"
#include "tcsim/csvio.hpp"
#include "tcsim/dynamics.hpp"
#include "tcsim/model.hpp"
#include "tcsim/resonator.hpp"
#include "tcsim/spectrum.hpp"

namespace tcsim::cli {

namespace {

namespace fs = std::filesystem;

struct CommonOptions {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int ensemble = 0;
  double time_step = 0.0;
  double duration = 0.0;
  std::vector<std::string> grids;
};

void add_common(CLI::App* sub, CommonOptions* opt, bool config_required = true) {
  auto* cfg = sub->add_option("--config", opt->config_path, "scenario config file");
  if (config_required) cfg->required();
  sub->add_option("--out", opt->out_dir, "output directory");
  sub->add_option("--seed", opt->seed, "RNG seed override")
      ->each([opt](const std::string&) { opt->seed_set = true; });
  sub->add_option("--ensemble", opt->ensemble, "ensemble size override");
  sub->add_option("--dt", opt->time_step, "time step override, s");
  sub->add_option("--duration", opt->duration, "duration override, s");
  sub->add_option("--grid", opt->grids,
                  "axis as start:stop:count[:log]; repeat per axis");
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  if (parts.size() < 3 || parts.size() > 4)
    throw CLI::ValidationError("--grid", "expected start:stop:count[:log]");
  const double start = std::strtod(parts[0].c_str(), nullptr);
  const double stop = std::strtod(parts[1].c_str(), nullptr);
  const long count = std::strtol(parts[2].c_str(), nullptr, 10);
  const bool log_spaced = parts.size() == 4 && parts[3] == "log";
  if (count < 1) throw CLI::ValidationError("--grid", "count must be >= 1");
  std::vector<double> grid(count);
  if (count == 1) {
    grid[0] = start;
    return grid;
  }
  if (log_spaced) {
    if (!(start > 0.0 && stop > 0.0))
      throw CLI::ValidationError("--grid", "log axes need positive bounds");
    const double ratio = std::log(stop / start) / static_cast<double>(count - 1);
    for (long i = 0; i < count; ++i) grid[i] = start * std::exp(ratio * i);
  } else {
    const double step = (stop - start) / static_cast<double>(count - 1);
    for (long i = 0; i < count; ++i) grid[i] = start + step * i;
  }
  return grid;
}

Eigen::ArrayXd to_array(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::ArrayXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

struct LoadedRun {
  ScenarioConfig config;
  std::string config_bytes;
  fs::path out_dir;
  RunManifest manifest;
};

LoadedRun prepare(const CommonOptions& opt, const std::string& subcommand) {
  LoadedRun run;
  if (!opt.config_path.empty()) {
    std::ifstream in(opt.config_path, std::ios::binary);
    if (!in) throw std::ios_base::failure("cannot open config file: " + opt.config_path);
    std::ostringstream buf;
    buf << in.rdbuf();
    run.config_bytes = buf.str();
    run.config = load_scenario(run.config_bytes);
  }
  if (opt.seed_set) run.config.params.rng_seed = opt.seed;
  if (opt.ensemble > 0) run.config.params.ensemble_size = opt.ensemble;
  if (opt.time_step > 0.0) run.config.params.time_step = opt.time_step;
  if (opt.duration > 0.0) run.config.params.duration = opt.duration;

  std::string out = opt.out_dir;
  if (out.empty()) {
    if (const char* env = std::getenv("TCSIM_OUT_DIR")) out = env;
    if (out.empty()) out = ".";
  }
  run.out_dir = fs::path(out);
  fs::create_directories(run.out_dir);

  run.manifest.subcommand = subcommand;
  run.manifest.seed = run.config.params.rng_seed;
  run.manifest.version = tool_version;
  char digest[24];
  std::snprintf(digest, sizeof digest, "%016llx",
                static_cast<unsigned long long>(config_digest(run.config_bytes)));
  run.manifest.config_digest = digest;
  return run;
}

void write_manifest(const LoadedRun& run) {
  nlohmann::json j;
  j["subcommand"] = run.manifest.subcommand;
  j["config_digest"] = run.manifest.config_digest;
  j["seed"] = run.manifest.seed;
  j["tool_version"] = run.manifest.version;
  j["outputs"] = run.manifest.outputs;
  std::ofstream out(run.out_dir / "manifest.json", std::ios::binary);
  out << j.dump(2) << "\n";
}

void standard_metadata(CsvWriter& csv, const LoadedRun& run) {
  csv.metadata("tool_version", run.manifest.version);
  csv.metadata("subcommand", run.manifest.subcommand);
  csv.metadata("config_digest", run.manifest.config_digest);
  csv.metadata("seed", std::to_string(run.manifest.seed));
}

void write_trajectory(CsvWriter& csv, const Trajectory& traj) {
  csv.header({"t_s", "E1_J", "E2_J", "T1_K", "T2_K"});
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const double row[] = {traj.times[k], traj.energy1[k], traj.energy2[k],
                          traj.temperature1[k], traj.temperature2[k]};
    csv.row(row);
  }
}

int run_impedance(const CommonOptions& opt) {
  LoadedRun run = prepare(opt, "impedance");
  const CouplingScenario& sc = run.config.scenario;
  if (!sc.resonator) throw scenario_error("impedance: config has no [resonator]");
  const Resonator& res = *sc.resonator;
  const double fwhm_hz = rad_to_hz(res.resonance_frequency() / res.quality_factor());

  std::vector<double> grid =
      opt.grids.empty() ? parse_grid(format_double(-40.0 * fwhm_hz) + ":" +
                                     format_double(40.0 * fwhm_hz) + ":401")
                        : parse_grid(opt.grids[0]);

  const fs::path path = run.out_dir / "impedance.csv";
  CsvWriter csv(path.string());
  standard_metadata(csv, run);
  csv.metadata("units", "f_Hz: offset from resonance; impedances in Ohm; Ceff in F");
  csv.metadata("resonance_frequency_Hz", format_double(rad_to_hz(res.resonance_frequency())));
  csv.metadata("quality_factor", format_double(res.quality_factor()));
  csv.header({"f_Hz", "ReZ_ohm", "ImZ_ohm", "Reff_ohm", "Ceff_F"});
  for (double f : grid) {
    const double dw = hz_to_rad(f);
    const auto z = impedance(res, res.resonance_frequency() + dw);
    double r_eff = std::nan(""), c_eff = std::nan("");
    if (std::abs(dw) > res.resonance_frequency() / res.quality_factor()) {
      const EffectiveCircuit eff = effective_circuit(res, dw);
      r_eff = eff.effective_resistance;
      c_eff = eff.effective_capacitance;
    }
    const double row[] = {f, z.real(), z.imag(), r_eff, c_eff};
    csv.row(row);
  }
  run.manifest.outputs.push_back("impedance.csv");
  write_manifest(run);
  std::printf("wrote %s (%zu rows)\n", path.string().c_str(), csv.rows_written());
  return 0;
}

int run_coupling(const CommonOptions& opt, bool emit_csv) {
  LoadedRun run = prepare(opt, "coupling");
  const CouplingSummary s = summarize_coupling(run.config.scenario);
  std::printf("rabi_frequency_Hz = %.6g\n", rad_to_hz(s.rabi_frequency));
  std::printf("exchange_time_s = %.6g\n", s.exchange_time);
  std::printf("shifted_frequency1_Hz = %.10g\n", rad_to_hz(s.shifted_frequencies[0]));
  std::printf("shifted_frequency2_Hz = %.10g\n", rad_to_hz(s.shifted_frequencies[1]));
  std::printf("mode_u_Hz = %.10g\n", rad_to_hz(s.mode_frequencies[0]));
  std::printf("mode_v_Hz = %.10g\n", rad_to_hz(s.mode_frequencies[1]));
  std::printf("modified_rabi_Hz = %.6g\n", rad_to_hz(s.modified_rabi));
  std::printf("coupling_constant_12 = %.6g\n", s.coupling_constants[0]);
  std::printf("coupling_constant_21 = %.6g\n", s.coupling_constants[1]);
  std::printf("coupling_capacitance_F = %.6g\n", s.coupling_capacitance);
  if (emit_csv) {
    const fs::path path = run.out_dir / "coupling.csv";
    CsvWriter csv(path.string());
    standard_metadata(csv, run);
    csv.header({"rabi_Hz", "exchange_time_s", "f1_Hz", "f2_Hz", "mode_u_Hz",
                "mode_v_Hz", "modified_rabi_Hz", "C12", "C21", "Ccpl_F"});
    const double row[] = {rad_to_hz(s.rabi_frequency), s.exchange_time,
                          rad_to_hz(s.shifted_frequencies[0]),
                          rad_to_hz(s.shifted_frequencies[1]),
                          rad_to_hz(s.mode_frequencies[0]),
                          rad_to_hz(s.mode_frequencies[1]),
                          rad_to_hz(s.modified_rabi), s.coupling_constants[0],
                          s.coupling_constants[1], s.coupling_capacitance};
    csv.row(row);
    run.manifest.outputs.push_back("coupling.csv");
    write_manifest(run);
  }
  return 0;
}

int run_exchange(const CommonOptions& opt, double gamma_l_hz, int noise_flag,
                 int stride, const char* name) {
  LoadedRun run = prepare(opt, name);
  const CouplingScenario& sc = run.config.scenario;
  SimulationParams params = run.config.params;
  if (!(params.duration > 0.0)) {
    const CouplingSummary s = summarize_coupling(sc);
    params.duration = 2.5 * two_pi / s.rabi_frequency;
  }
  ExchangeOptions options;
  options.gamma_laser = hz_to_rad(gamma_l_hz);
  options.with_noise = noise_flag < 0 ? sc.resonator.has_value() : noise_flag > 0;
  options.sample_stride = stride;

  const Trajectory traj = params.ensemble_size > 1
                              ? exchange_ensemble_mean(sc, params, options)
                              : simulate_exchange(sc, params, options);

  const std::string file = std::string(name) + ".csv";
  const fs::path path = run.out_dir / file;
  CsvWriter csv(path.string());
  standard_metadata(csv, run);
  csv.metadata("gamma_laser_Hz", format_double(gamma_l_hz));
  csv.metadata("noise", options.with_noise ? "on" : "off");
  csv.metadata("ensemble_size", std::to_string(params.ensemble_size));
  write_trajectory(csv, traj);
  run.manifest.outputs.push_back(file);
  write_manifest(run);
  std::printf("wrote %s (%zu rows)\n", path.string().c_str(), csv.rows_written());
  return 0;
}

int run_intermittent(const CommonOptions& opt, double tau_c, int n_cycles,
                     int noise_flag) {
  LoadedRun run = prepare(opt, "cool-intermittent");
  const CouplingScenario& sc = run.config.scenario;
  SimulationParams params = run.config.params;

  if (!(tau_c > 0.0)) tau_c = intermittent_theory(sc).optimal_coupling_time;
  if (n_cycles < 0) {
    const double duration = params.duration > 0.0 ? params.duration : 40.0;
    n_cycles = static_cast<int>(std::ceil(duration / tau_c));
  }
  IntermittentOptions options;
  options.with_noise = noise_flag != 0;

  const Trajectory traj =
      params.ensemble_size > 1
          ? intermittent_ensemble_mean(sc, tau_c, n_cycles, params, options)
          : simulate_intermittent_cooling(sc, tau_c, n_cycles, params, options);

  const fs::path path = run.out_dir / "cool_intermittent.csv";
  CsvWriter csv(path.string());
  standard_metadata(csv, run);
  csv.metadata("coupling_interval_s", format_double(tau_c));
  csv.metadata("cycles", std::to_string(n_cycles));
  csv.metadata("ensemble_size", std::to_string(params.ensemble_size));
  write_trajectory(csv, traj);
  run.manifest.outputs.push_back("cool_intermittent.csv");
  write_manifest(run);
  std::printf("wrote %s (%zu rows)\n", path.string().c_str(), csv.rows_written());
  return 0;
}

int run_analytics(const CommonOptions& opt, const std::string& method, double tau_c,
                  double gamma_l_hz) {
  LoadedRun run = prepare(opt, "cool-analytics");
  const CouplingScenario& sc = run.config.scenario;
  if (!sc.resonator) throw scenario_error("cool-analytics: config has no [resonator]");

  std::vector<double> dnu_hz;
  if (!opt.grids.empty()) {
    dnu_hz = parse_grid(opt.grids[0]);
  } else {
    const double center = rad_to_hz(sc.resonator_detuning);
    dnu_hz = parse_grid(format_double(0.4 * center) + ":" + format_double(2.0 * center) + ":17");
  }
  std::vector<double> dw(dnu_hz.size());
  for (std::size_t i = 0; i < dw.size(); ++i) dw[i] = hz_to_rad(dnu_hz[i]);

  const fs::path path = run.out_dir / "cool_analytics.csv";
  std::ofstream raw(path.string(), std::ios::binary);
  raw << "# tool_version: " << run.manifest.version << "\n";
  raw << "# config_digest: " << run.manifest.config_digest << "\n";
  raw << "# method: " << method << "\n";
  raw << "dnu_Hz,Teq_K,tau_eff_s,tau_c_opt_s,method\n";
  std::size_t rows = 0;
  if (method == "intermittent") {
    for (const DetuningScanRow& r : detuning_scan_intermittent(sc, dw, tau_c)) {
      raw << format_double(rad_to_hz(r.detuning)) << ','
          << format_double(r.equilibrium_temperature) << ','
          << format_double(r.effective_time_constant) << ','
          << format_double(r.coupling_time) << ",intermittent\n";
      ++rows;
    }
  } else if (method == "continuous") {
    for (const DetuningScanRow& r :
         detuning_scan_continuous(sc, dw, hz_to_rad(gamma_l_hz), run.config.params)) {
      raw << format_double(rad_to_hz(r.detuning)) << ','
          << format_double(r.equilibrium_temperature) << ','
          << format_double(r.effective_time_constant) << ','
          << format_double(r.coupling_time) << ",continuous\n";
      ++rows;
    }
  } else {
    throw CLI::ValidationError("--method", "expected intermittent or continuous");
  }
  raw.close();
  run.manifest.outputs.push_back("cool_analytics.csv");
  write_manifest(run);
  std::printf("wrote %s (%zu rows)\n", path.string().c_str(), rows);
  return 0;
}

int run_spectrum(const CommonOptions& opt, double gain_db, double floor_ohm,
                 double noise_fraction) {
  LoadedRun run = prepare(opt, "spectrum");
  const CouplingScenario& sc = run.config.scenario;
  if (!sc.resonator) throw scenario_error("spectrum: config has no [resonator]");

  std::vector<double> sweep =
      opt.grids.size() > 0 ? parse_grid(opt.grids[0]) : parse_grid("-3:3:41");
  std::vector<double> window;
  if (opt.grids.size() > 1) {
    window = parse_grid(opt.grids[1]);
  } else {
    const double center = rad_to_hz(sc.resonator_detuning);
    window = parse_grid(format_double(center - 3.0) + ":" + format_double(center + 3.0) + ":241");
  }

  SyntheticMapOptions options;
  options.gain_db = gain_db;
  options.noise_floor_ohm = floor_ohm;
  SpectrumGrid grid = avoided_crossing_map(sc, to_array(sweep), to_array(window), options);
  if (noise_fraction > 0.0) add_noise(grid, noise_fraction, run.config.params.rng_seed);

  const fs::path path = run.out_dir / "spectrum.csv";
  CsvWriter csv(path.string());
  standard_metadata(csv, run);
  csv.metadata("sweep_points", std::to_string(sweep.size()));
  csv.metadata("frequency_points", std::to_string(window.size()));
  csv.metadata("working_point_Hz", format_double(rad_to_hz(sc.resonator_detuning)));
  csv.metadata("noise_fraction", format_double(noise_fraction));
  csv.header({"dnu_Hz", "f_Hz", "power_dB"});
  for (Eigen::Index k = 0; k < grid.sweep_axis.size(); ++k)
    for (Eigen::Index j = 0; j < grid.frequency_axis.size(); ++j) {
      const double row[] = {grid.sweep_axis(k), grid.frequency_axis(j),
                            grid.power(j, k)};
      csv.row(row);
    }
  run.manifest.outputs.push_back("spectrum.csv");
  write_manifest(run);
  std::printf("wrote %s (%zu rows)\n", path.string().c_str(), csv.rows_written());
  return 0;
}

SpectrumGrid grid_from_table(const CsvTable& table) {
  const int c_dnu = table.column_index("dnu_Hz");
  const int c_f = table.column_index("f_Hz");
  const int c_p = table.column_index("power_dB");
  if (c_dnu < 0 || c_f < 0 || c_p < 0)
    throw std::runtime_error("fit: input needs columns dnu_Hz, f_Hz, power_dB");
  std::vector<double> sweeps, freqs;
  for (const auto& row : table.rows) {
    if (sweeps.empty() || row[c_dnu] != sweeps.back()) sweeps.push_back(row[c_dnu]);
  }
  const std::size_t n_freq = table.rows.size() / sweeps.size();
  if (n_freq * sweeps.size() != table.rows.size())
    throw std::runtime_error("fit: input is not a complete grid");
  for (std::size_t j = 0; j < n_freq; ++j) freqs.push_back(table.rows[j][c_f]);

  SpectrumGrid grid;
  grid.sweep_axis = to_array(sweeps);
  grid.frequency_axis = to_array(freqs);
  grid.power.resize(static_cast<Eigen::Index>(n_freq),
                    static_cast<Eigen::Index>(sweeps.size()));
  for (std::size_t k = 0; k < sweeps.size(); ++k)
    for (std::size_t j = 0; j < n_freq; ++j)
      grid.power(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) =
          table.rows[k * n_freq + j][c_p];
  return grid;
}

int run_fit(const CommonOptions& opt, const std::string& input, bool uncoupled) {
  LoadedRun run = prepare(opt, "fit");
  const CouplingScenario& sc = run.config.scenario;
  if (!fs::exists(input)) throw std::ios_base::failure("cannot open input: " + input);
  const SpectrumGrid grid = grid_from_table(read_csv(input));
  const FitResult fit = fit_avoided_crossing(grid, sc, std::nullopt, !uncoupled);

  std::printf("effective_capacitance_F = %.6g\n", fit.effective_capacitance);
  std::printf("capacitance_uncertainty_F = %.3g\n", fit.capacitance_uncertainty);
  std::printf("rabi_frequency_Hz = %.6g\n", rad_to_hz(fit.rabi_frequency));
  std::printf("ion2_frequency_Hz = %.8g\n", fit.ion2_frequency);
  std::printf("sweep_calibration_Hz_per_column = %.6g\n", fit.sweep_calibration);
  std::printf("residual_norm = %.6g\n", fit.residual_norm);
  std::printf("iterations = %d\n", fit.iterations);
  std::printf("converged = %s\n", fit.converged ? "true" : "false");

  nlohmann::json record;
  record["effective_capacitance_F"] = fit.effective_capacitance;
  record["capacitance_uncertainty_F"] = fit.capacitance_uncertainty;
  record["rabi_frequency_Hz"] = rad_to_hz(fit.rabi_frequency);
  record["ion2_frequency_Hz"] = fit.ion2_frequency;
  record["sweep_calibration_Hz_per_column"] = fit.sweep_calibration;
  record["residual_norm"] = fit.residual_norm;
  record["converged"] = fit.converged;
  record["iterations"] = fit.iterations;
  if (sc.resonator) {
    // The tank losses are not floated: document the fixed values.
    record["fixed"] = {{"parallel_resistance_ohm", sc.resonator->parallel_resistance},
                       {"inductance_H", sc.resonator->inductance},
                       {"total_capacitance_F", sc.resonator->total_capacitance},
                       {"quality_factor", sc.resonator->quality_factor()}};
  }
  const fs::path path = run.out_dir / "fit_result.json";
  std::ofstream out(path, std::ios::binary);
  out << record.dump(2) << "\n";
  out.close();
  run.manifest.outputs.push_back("fit_result.json");
  write_manifest(run);
  return fit.converged ? 0 : 75;
}

int run_sweep(const CommonOptions& opt) {
  LoadedRun run = prepare(opt, "sweep");
  const CouplingScenario& sc = run.config.scenario;
  SimulationParams params = run.config.params;
  const CouplingSummary s = summarize_coupling(sc);
  const double rabi_hz = rad_to_hz(s.rabi_frequency);

  std::vector<double> gamma_hz =
      opt.grids.size() > 0 ? parse_grid(opt.grids[0])
                           : parse_grid(format_double(0.05 * rabi_hz) + ":" +
                                        format_double(20.0 * rabi_hz) + ":13:log");
  std::vector<double> dnu_hz =
      opt.grids.size() > 1 ? parse_grid(opt.grids[1]) : std::vector<double>{0.0};
  if (!(params.duration > 0.0)) params.duration = 60.0 * s.exchange_time;

  std::vector<double> gamma(gamma_hz.size()), dnu(dnu_hz.size());
  for (std::size_t i = 0; i < gamma.size(); ++i) gamma[i] = hz_to_rad(gamma_hz[i]);
  for (std::size_t i = 0; i < dnu.size(); ++i) dnu[i] = hz_to_rad(dnu_hz[i]);

  const CoolingTimeMap map = cooling_time_map(sc, gamma, dnu, params);

  const fs::path path = run.out_dir / "sweep.csv";
  CsvWriter csv(path.string());
  standard_metadata(csv, run);
  csv.metadata("duration_s", format_double(params.duration));
  csv.metadata("note", "tau_cool_s is nan when the energy never decays to E0/e");
  csv.header({"gamma_L_Hz", "dnu_Hz", "tau_cool_s"});
  for (std::size_t ig = 0; ig < gamma.size(); ++ig)
    for (std::size_t id = 0; id < dnu.size(); ++id) {
      const double row[] = {gamma_hz[ig], dnu_hz[id],
                            map.tau_cool(static_cast<Eigen::Index>(ig),
                                         static_cast<Eigen::Index>(id))};
      csv.row(row);
    }
  run.manifest.outputs.push_back("sweep.csv");
  write_manifest(run);
  std::printf("wrote %s (%zu rows)\n", path.string().c_str(), csv.rows_written());
  return 0;
}

}  // namespace

int dispatch(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("tcsim");
  for (const std::string& a : args) argv.push_back(a.c_str());
  return dispatch(static_cast<int>(argv.size()), argv.data());
}

int dispatch(int argc, const char* const* argv) {
  CLI::App app{"Tank-circuit assisted ion-ion coupling: simulation and analysis"};
  app.require_subcommand(1);

  CommonOptions impedance_opt;
  auto* impedance_cmd = app.add_subcommand("impedance", "tank impedance sweep CSV");
  add_common(impedance_cmd, &impedance_opt);

  CommonOptions coupling_opt;
  bool coupling_csv = false;
  auto* coupling_cmd = app.add_subcommand("coupling", "closed-form coupling summary");
  add_common(coupling_cmd, &coupling_opt);
  coupling_cmd->add_flag("--csv", coupling_csv, "also write coupling.csv");

  CommonOptions exchange_opt;
  double exchange_gamma = 0.0;
  int exchange_noise = -1;
  int exchange_stride = 1;
  auto* exchange_cmd = app.add_subcommand("exchange", "energy-exchange trajectory");
  add_common(exchange_cmd, &exchange_opt);
  exchange_cmd->add_option("--gamma-l", exchange_gamma, "laser damping, Hz");
  exchange_cmd->add_option("--noise", exchange_noise, "1 on / 0 off (default: on with resonator)");
  exchange_cmd->add_option("--stride", exchange_stride, "sample stride");

  CommonOptions cont_opt;
  double cont_gamma = 0.0;
  int cont_noise = -1;
  int cont_stride = 1;
  auto* cont_cmd = app.add_subcommand("cool-continuous", "continuous sympathetic cooling");
  add_common(cont_cmd, &cont_opt);
  cont_cmd->add_option("--gamma-l", cont_gamma, "laser damping, Hz")->required();
  cont_cmd->add_option("--noise", cont_noise, "1 on / 0 off");
  cont_cmd->add_option("--stride", cont_stride, "sample stride");

  CommonOptions inter_opt;
  double inter_tau = 0.0;
  int inter_cycles = -1;
  int inter_noise = 1;
  auto* inter_cmd = app.add_subcommand("cool-intermittent", "intermittent cooling protocol");
  add_common(inter_cmd, &inter_opt);
  inter_cmd->add_option("--tau-c", inter_tau, "coupling interval, s (default: optimal)");
  inter_cmd->add_option("--cycles", inter_cycles, "number of cycles");
  inter_cmd->add_option("--noise", inter_noise, "1 on / 0 off");

  CommonOptions ana_opt;
  std::string ana_method = "intermittent";
  double ana_tau = 0.0;
  double ana_gamma = 0.0;
  auto* ana_cmd = app.add_subcommand("cool-analytics", "closed-form cooling figures over detuning");
  add_common(ana_cmd, &ana_opt);
  ana_cmd->add_option("--method", ana_method, "intermittent | continuous");
  ana_cmd->add_option("--tau-c", ana_tau, "coupling interval, s (default: optimal)");
  ana_cmd->add_option("--gamma-l", ana_gamma, "laser damping for continuous, Hz");

  CommonOptions spec_opt;
  double spec_gain = 0.0;
  double spec_floor = 0.0;
  double spec_noise = 0.0;
  auto* spec_cmd = app.add_subcommand("spectrum", "avoided-crossing dip-spectrum map");
  add_common(spec_cmd, &spec_opt);
  spec_cmd->add_option("--gain", spec_gain, "gain offset, dB");
  spec_cmd->add_option("--floor", spec_floor, "noise floor, Ohm");
  spec_cmd->add_option("--noise", spec_noise, "Gaussian noise fraction of depth");

  CommonOptions fit_opt;
  std::string fit_input;
  bool fit_uncoupled = false;
  auto* fit_cmd = app.add_subcommand("fit", "fit a spectrum map for the effective capacitance");
  add_common(fit_cmd, &fit_opt);
  fit_cmd->add_option("--in", fit_input, "spectrum CSV (dnu_Hz,f_Hz,power_dB)")->required();
  fit_cmd->add_flag("--uncoupled", fit_uncoupled, "fit the no-interaction null model");

  CommonOptions sweep_opt;
  auto* sweep_cmd = app.add_subcommand("sweep", "cooling-time map over laser damping and mismatch");
  add_common(sweep_cmd, &sweep_opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (impedance_cmd->parsed()) return run_impedance(impedance_opt);
    if (coupling_cmd->parsed()) return run_coupling(coupling_opt, coupling_csv);
    if (exchange_cmd->parsed())
      return run_exchange(exchange_opt, exchange_gamma, exchange_noise,
                          exchange_stride, "exchange");
    if (cont_cmd->parsed())
      return run_exchange(cont_opt, cont_gamma, cont_noise, cont_stride,
                          "cool_continuous");
    if (inter_cmd->parsed())
      return run_intermittent(inter_opt, inter_tau, inter_cycles, inter_noise);
    if (ana_cmd->parsed()) return run_analytics(ana_opt, ana_method, ana_tau, ana_gamma);
    if (spec_cmd->parsed()) return run_spectrum(spec_opt, spec_gain, spec_floor, spec_noise);
    if (fit_cmd->parsed()) return run_fit(fit_opt, fit_input, fit_uncoupled);
    if (sweep_cmd->parsed()) return run_sweep(sweep_opt);
  } catch (const scenario_error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 65;
  } catch (const std::ios_base::failure& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return 66;
  } catch (const integration_error& e) {
    std::fprintf(stderr, "integration error: %s\n", e.what());
    return 70;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 70;
  }
  return 1;
}

}  // namespace tcsim::cli
