#include "tcsim/model.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "tcsim/constants.hpp"

namespace tcsim {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

struct ConfigTree {
  // section -> key -> raw value
  std::map<std::string, std::map<std::string, std::string>> sections;

  bool has(const std::string& sec) const { return sections.count(sec) > 0; }

  const std::string* find(const std::string& sec, const std::string& key) const {
    auto s = sections.find(sec);
    if (s == sections.end()) return nullptr;
    auto k = s->second.find(key);
    if (k == s->second.end()) return nullptr;
    return &k->second;
  }
};

ConfigTree parse_tree(const std::string& text) {
  ConfigTree tree;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw scenario_error("parse failure at line " + std::to_string(lineno) +
                             ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      tree.sections[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos || section.empty())
      throw scenario_error("parse failure at line " + std::to_string(lineno) +
                           ": expected key = value inside a section");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw scenario_error("parse failure at line " + std::to_string(lineno) +
                           ": empty key or value");
    tree.sections[section][key] = value;
  }
  return tree;
}

double parse_number(const std::string& sec, const std::string& key,
                    const std::string& raw) {
  char* end = nullptr;
  const double v = std::strtod(raw.c_str(), &end);
  if (end == raw.c_str() || *end != '\0')
    throw scenario_error("parse failure: [" + sec + "] " + key + " = '" + raw +
                         "' is not a number");
  return v;
}

class SectionReader {
 public:
  SectionReader(const ConfigTree& tree, std::string section)
      : tree_(tree), section_(std::move(section)) {}

  double number(const std::string& key) const {
    const std::string* raw = tree_.find(section_, key);
    if (!raw)
      throw scenario_error("validation failure: [" + section_ + "] missing mandatory field `" + key + "`");
    return parse_number(section_, key, *raw);
  }

  double number_or(const std::string& key, double fallback) const {
    const std::string* raw = tree_.find(section_, key);
    return raw ? parse_number(section_, key, *raw) : fallback;
  }

  std::string text_or(const std::string& key, const std::string& fallback) const {
    const std::string* raw = tree_.find(section_, key);
    return raw ? *raw : fallback;
  }

  bool has(const std::string& key) const { return tree_.find(section_, key) != nullptr; }

 private:
  const ConfigTree& tree_;
  std::string section_;
};

IonSpecies read_ion(const ConfigTree& tree, const std::string& sec) {
  SectionReader r(tree, sec);
  IonSpecies ion;
  ion.name = r.text_or("name", sec);
  ion.charge = r.number("charge");
  ion.mass = r.number("mass");
  ion.count = static_cast<int>(std::llround(r.number_or("count", 1)));
  return ion;
}

TrapPort read_port(const ConfigTree& tree, const std::string& sec) {
  SectionReader r(tree, sec);
  TrapPort port;
  port.effective_distance = r.number("effective_distance");
  port.trap_capacitance = r.number("trap_capacitance");
  return port;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void IonSpecies::validate() const {
  if (charge == 0.0) throw scenario_error("validation failure: ion `" + name + "` violates charge != 0");
  if (!(mass > 0.0)) throw scenario_error("validation failure: ion `" + name + "` violates mass > 0");
  if (count < 1) throw scenario_error("validation failure: ion `" + name + "` violates count >= 1");
}

void TrapPort::validate() const {
  if (!(effective_distance > 0.0))
    throw scenario_error("validation failure: port violates effective_distance > 0");
  if (!(trap_capacitance > 0.0))
    throw scenario_error("validation failure: port violates trap_capacitance > 0");
}

double Resonator::resonance_frequency() const {
  return 1.0 / std::sqrt(inductance * total_capacitance);
}

double Resonator::quality_factor() const {
  return parallel_resistance / (resonance_frequency() * inductance);
}

void Resonator::validate() const {
  if (!(inductance > 0.0)) throw scenario_error("validation failure: resonator violates inductance > 0");
  if (!(coil_capacitance > 0.0))
    throw scenario_error("validation failure: resonator violates coil_capacitance > 0");
  if (!(parallel_resistance > 0.0))
    throw scenario_error("validation failure: resonator violates parallel_resistance > 0");
  if (!(total_capacitance >= coil_capacitance))
    throw scenario_error("validation failure: resonator violates total_capacitance >= coil_capacitance");
}

double CouplingScenario::working_frequency() const {
  if (resonator) return resonator->resonance_frequency() + resonator_detuning;
  return axial_frequency;
}

void CouplingScenario::validate() const {
  ion1.validate();
  ion2.validate();
  port1.validate();
  port2.validate();
  if (resonator) resonator->validate();
  if (!(circuit_temperature > 0.0))
    throw scenario_error("validation failure: violates circuit_temperature > 0");
  if (!(doppler_limit > 0.0))
    throw scenario_error("validation failure: violates doppler_limit > 0");
  if (!resonator) {
    if (!(axial_frequency > 0.0))
      throw scenario_error(
          "validation failure: axial_frequency required when no resonator is configured");
    // Bare coupling runs through one shared endcap electrode.
    const double c1 = port1.trap_capacitance, c2 = port2.trap_capacitance;
    if (std::abs(c1 - c2) > 1e-9 * std::max(c1, c2))
      throw scenario_error(
          "validation failure: without a resonator the ports must share one "
          "trap_capacitance (common endcap)");
  }
}

void SimulationParams::validate(double ion_frequency_mismatch) const {
  if (time_step < 0.0) throw scenario_error("validation failure: violates time_step >= 0");
  if (time_step > 0.0) {
    if (time_step * std::abs(ion_frequency_mismatch) >= 0.1)
      throw scenario_error(
          "validation failure: violates time_step * |ion_frequency_mismatch| < 0.1");
    if (duration > 0.0 && duration < time_step)
      throw scenario_error("validation failure: violates duration >= time_step");
  }
  if (noise_bandwidth < 0.0)
    throw scenario_error("validation failure: violates noise_bandwidth >= 0");
  if (ensemble_size < 1)
    throw scenario_error("validation failure: violates ensemble_size >= 1");
}

ScenarioConfig load_scenario(const std::string& config_text) {
  const ConfigTree tree = parse_tree(config_text);
  for (const auto& sec : {"ion1", "port1", "ion2", "port2", "environment"})
    if (!tree.has(sec))
      throw scenario_error(std::string("validation failure: missing mandatory section [") +
                           sec + "]");

  ScenarioConfig cfg;
  CouplingScenario& sc = cfg.scenario;
  sc.ion1 = read_ion(tree, "ion1");
  sc.ion2 = read_ion(tree, "ion2");
  sc.port1 = read_port(tree, "port1");
  sc.port2 = read_port(tree, "port2");

  if (tree.has("resonator")) {
    SectionReader r(tree, "resonator");
    Resonator res;
    res.inductance = r.number("inductance");
    res.coil_capacitance = r.number("coil_capacitance");
    res.parallel_resistance = r.number("parallel_resistance");
    if (r.has("total_capacitance")) {
      res.total_capacitance = r.number("total_capacitance");
    } else {
      // Equal port capacitances mean one common electrode; different values
      // mean two traps hanging off the same coil, so both load it.
      const double c1 = sc.port1.trap_capacitance, c2 = sc.port2.trap_capacitance;
      const bool shared = std::abs(c1 - c2) <= 1e-9 * std::max(std::abs(c1), std::abs(c2));
      res.total_capacitance = res.coil_capacitance + (shared ? c1 : c1 + c2);
    }
    sc.resonator = res;
  }

  {
    SectionReader r(tree, "environment");
    sc.circuit_temperature = r.number("circuit_temperature");
    sc.doppler_limit = r.number("doppler_limit");
    sc.resonator_detuning = hz_to_rad(r.number_or("resonator_detuning", 0.0));
    sc.ion_frequency_mismatch = hz_to_rad(r.number_or("ion_frequency_mismatch", 0.0));
    sc.axial_frequency = hz_to_rad(r.number_or("axial_frequency", 0.0));
  }

  if (tree.has("simulation")) {
    SectionReader r(tree, "simulation");
    SimulationParams& p = cfg.params;
    p.time_step = r.number_or("time_step", 0.0);
    p.duration = r.number_or("duration", 0.0);
    p.rng_seed = static_cast<std::uint64_t>(r.number_or("rng_seed", 1));
    p.noise_bandwidth = r.number_or("noise_bandwidth", 0.0);
    p.ensemble_size = static_cast<int>(std::llround(r.number_or("ensemble_size", 1)));
  }

  sc.validate();
  cfg.params.validate(sc.ion_frequency_mismatch);
  return cfg;
}

ScenarioConfig load_scenario_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw scenario_error("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_scenario(buf.str());
}

std::string serialize_scenario(const CouplingScenario& sc, const SimulationParams& p) {
  std::ostringstream out;
  auto ion = [&](const char* sec, const IonSpecies& i) {
    out << "[" << sec << "]\n";
    out << "name = " << (i.name.empty() ? std::string(sec) : i.name) << "\n";
    out << "charge = " << fmt(i.charge) << "\n";
    out << "mass = " << fmt(i.mass) << "\n";
    out << "count = " << i.count << "\n\n";
  };
  auto port = [&](const char* sec, const TrapPort& t) {
    out << "[" << sec << "]\n";
    out << "effective_distance = " << fmt(t.effective_distance) << "\n";
    out << "trap_capacitance = " << fmt(t.trap_capacitance) << "\n\n";
  };
  ion("ion1", sc.ion1);
  port("port1", sc.port1);
  ion("ion2", sc.ion2);
  port("port2", sc.port2);
  if (sc.resonator) {
    const Resonator& r = *sc.resonator;
    out << "[resonator]\n";
    out << "inductance = " << fmt(r.inductance) << "\n";
    out << "coil_capacitance = " << fmt(r.coil_capacitance) << "\n";
    out << "parallel_resistance = " << fmt(r.parallel_resistance) << "\n";
    out << "total_capacitance = " << fmt(r.total_capacitance) << "\n\n";
  }
  out << "[environment]\n";
  out << "circuit_temperature = " << fmt(sc.circuit_temperature) << "\n";
  out << "doppler_limit = " << fmt(sc.doppler_limit) << "\n";
  out << "resonator_detuning = " << fmt(rad_to_hz(sc.resonator_detuning)) << "\n";
  out << "ion_frequency_mismatch = " << fmt(rad_to_hz(sc.ion_frequency_mismatch)) << "\n";
  out << "axial_frequency = " << fmt(rad_to_hz(sc.axial_frequency)) << "\n\n";
  out << "[simulation]\n";
  out << "time_step = " << fmt(p.time_step) << "\n";
  out << "duration = " << fmt(p.duration) << "\n";
  out << "rng_seed = " << p.rng_seed << "\n";
  out << "noise_bandwidth = " << fmt(p.noise_bandwidth) << "\n";
  out << "ensemble_size = " << p.ensemble_size << "\n";
  return out.str();
}

std::uint64_t config_digest(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

bool scenario_equal(const CouplingScenario& a, const CouplingScenario& b) {
  auto ion_eq = [](const IonSpecies& x, const IonSpecies& y) {
    return x.name == y.name && x.charge == y.charge && x.mass == y.mass && x.count == y.count;
  };
  auto port_eq = [](const TrapPort& x, const TrapPort& y) {
    return x.effective_distance == y.effective_distance &&
           x.trap_capacitance == y.trap_capacitance;
  };
  if (!ion_eq(a.ion1, b.ion1) || !ion_eq(a.ion2, b.ion2)) return false;
  if (!port_eq(a.port1, b.port1) || !port_eq(a.port2, b.port2)) return false;
  if (a.resonator.has_value() != b.resonator.has_value()) return false;
  if (a.resonator) {
    const Resonator &x = *a.resonator, &y = *b.resonator;
    if (x.inductance != y.inductance || x.coil_capacitance != y.coil_capacitance ||
        x.parallel_resistance != y.parallel_resistance ||
        x.total_capacitance != y.total_capacitance)
      return false;
  }
  // The Hz <-> rad/s boundary costs up to two roundings, so frequency fields
  // match to a few ulp rather than bitwise.
  auto freq_eq = [](double x, double y) {
    return std::abs(x - y) <= 4.0 * 2.220446049250313e-16 * std::max(std::abs(x), std::abs(y));
  };
  return a.circuit_temperature == b.circuit_temperature &&
         a.doppler_limit == b.doppler_limit &&
         freq_eq(a.resonator_detuning, b.resonator_detuning) &&
         freq_eq(a.ion_frequency_mismatch, b.ion_frequency_mismatch) &&
         freq_eq(a.axial_frequency, b.axial_frequency);
}

}  // namespace tcsim
