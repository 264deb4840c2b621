#include "oscsim/scenario.hpp"

#include "oscsim/csv.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <optional>
#include <sstream>

namespace oscsim::scenario {

namespace {

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) {
    if (!out.empty()) out += "\n";
    out += s;
  }
  return out;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::optional<double> parse_double(const std::string& v) {
  const std::string t = trim(v);
  if (t.empty()) return std::nullopt;
  char* end = nullptr;
  const double x = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size()) return std::nullopt;
  if (!std::isfinite(x)) return std::nullopt;
  return x;
}

std::optional<long long> parse_int(const std::string& v) {
  const std::string t = trim(v);
  if (t.empty()) return std::nullopt;
  long long x = 0;
  auto res = std::from_chars(t.data(), t.data() + t.size(), x);
  if (res.ec != std::errc{} || res.ptr != t.data() + t.size()) return std::nullopt;
  return x;
}

std::optional<bool> parse_bool(const std::string& v) {
  const std::string t = trim(v);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  return std::nullopt;
}

std::optional<faults::FaultKind> parse_fault_kind(const std::string& v) {
  using faults::FaultKind;
  for (FaultKind k : {FaultKind::None, FaultKind::OpenCoil, FaultKind::DegradedQ,
                      FaultKind::MissingC1, FaultKind::MissingC2, FaultKind::SupplyLoss,
                      FaultKind::PinShortToGround, FaultKind::PinShortToSupply}) {
    if (v == faults::fault_name(k)) return k;
  }
  return std::nullopt;
}

std::optional<std::vector<std::pair<int, int>>> parse_dnl(const std::string& v) {
  std::vector<std::pair<int, int>> out;
  std::string t = trim(v);
  if (t.empty()) return out;
  std::replace(t.begin(), t.end(), ';', ',');
  std::stringstream ss(t);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto colon = item.find(':');
    if (colon == std::string::npos) return std::nullopt;
    const auto code = parse_int(item.substr(0, colon));
    const auto err = parse_int(item.substr(colon + 1));
    if (!code || !err) return std::nullopt;
    out.emplace_back(static_cast<int>(*code), static_cast<int>(*err));
  }
  return out;
}

std::string emit_dnl(const std::vector<std::pair<int, int>>& dnl) {
  std::string out;
  for (const auto& [c, e] : dnl) {
    if (!out.empty()) out += ",";
    out += std::to_string(c) + ":" + std::to_string(e);
  }
  return out;
}

// One scenario key: assigns a parsed value or reports why it cannot.
std::optional<std::string> apply_key(Scenario& s, const std::string& section,
                                     const std::string& key, const std::string& value) {
  const std::string where = section + "." + key;
  auto num = [&](double& field) -> std::optional<std::string> {
    const auto x = parse_double(value);
    if (!x) return "invalid number for " + where + ": '" + value + "'";
    field = *x;
    return std::nullopt;
  };
  auto integer = [&](int& field) -> std::optional<std::string> {
    const auto x = parse_int(value);
    if (!x) return "invalid integer for " + where + ": '" + value + "'";
    field = static_cast<int>(*x);
    return std::nullopt;
  };
  auto boolean = [&](bool& field) -> std::optional<std::string> {
    const auto x = parse_bool(value);
    if (!x) return "invalid boolean for " + where + ": '" + value + "'";
    field = *x;
    return std::nullopt;
  };

  if (section == "network") {
    if (key == "l_osc") return num(s.network.l_osc);
    if (key == "c_osc1") return num(s.network.c_osc1);
    if (key == "c_osc2") return num(s.network.c_osc2);
    if (key == "r_s") return num(s.network.r_s);
  } else if (section == "driver") {
    if (key == "g_lin") return num(s.g_lin);
    if (key == "v_ref") return num(s.v_ref);
    if (key == "vdd") return num(s.vdd);
    if (key == "i_m") return num(s.i_m);
    if (key == "g_cm") return num(s.g_cm);
    if (key == "active_halfwidth") return num(s.active_halfwidth);
    if (key == "enabled") return boolean(s.driver_enabled);
  } else if (section == "dac") {
    if (key == "i_unit") return num(s.dac_cfg.i_unit);
    if (key == "dnl_injection") {
      const auto dnl = parse_dnl(value);
      if (!dnl) return "invalid dnl_injection (want 'code:err,code:err'): '" + value + "'";
      s.dac_cfg.dnl_injection = *dnl;
      return std::nullopt;
    }
  } else if (section == "regulation") {
    if (key == "enabled") return boolean(s.reg.enabled);
    if (key == "v_set_rms") return num(s.reg.v_set_rms);
    if (key == "window_low_frac") return num(s.reg.window_low_frac);
    if (key == "window_high_frac") return num(s.reg.window_high_frac);
    if (key == "tick_period") return num(s.reg.tick_period);
    if (key == "nvm_code") return integer(s.reg.nvm_code);
    if (key == "t_nvm") return num(s.reg.t_nvm);
    if (key == "tau_rect") return num(s.reg.tau_rect);
    if (key == "tau_mid") return num(s.reg.tau_mid);
    if (key == "v_bg") return num(s.reg.v_bg);
  } else if (section == "detectors") {
    if (key == "t_timeout") return num(s.t_timeout);
    if (key == "v_low_frac") return num(s.v_low_frac);
    if (key == "v_low_abs") return num(s.v_low_abs);
    if (key == "v_asym_frac") return num(s.v_asym_frac);
    if (key == "v_asym_abs") return num(s.v_asym_abs);
    if (key == "tau_asym") return num(s.tau_asym);
    if (key == "hysteresis") return num(s.hysteresis);
  } else if (section == "fault") {
    if (key == "kind") {
      const auto k = parse_fault_kind(trim(value));
      if (!k) return "unknown fault.kind: '" + value + "'";
      s.fault.kind = *k;
      return std::nullopt;
    }
    if (key == "t_activate") return num(s.fault.t_activate);
    if (key == "r_s_multiplier") return num(s.fault.r_s_multiplier);
    if (key == "pin") return integer(s.fault.pin);
    if (key == "system") {
      const std::string t = trim(value);
      if (t == "A" || t == "a" || t == "0") {
        s.fault.system = 0;
        return std::nullopt;
      }
      if (t == "B" || t == "b" || t == "1") {
        s.fault.system = 1;
        return std::nullopt;
      }
      return "invalid fault.system (want A or B): '" + value + "'";
    }
    if (key == "preset") {
      try {
        s.fault.pin_model = faults::unsupplied_preset(trim(value));
      } catch (const std::domain_error& e) {
        return std::string(e.what());
      }
      return std::nullopt;
    }
    if (key == "v_pos_clamp") return num(s.fault.pin_model.v_pos_clamp);
    if (key == "v_neg_clamp") return num(s.fault.pin_model.v_neg_clamp);
    if (key == "i_leak_max") return num(s.fault.pin_model.i_leak_max);
    if (key == "r_on_clamp") return num(s.fault.pin_model.r_on_clamp);
  } else if (section == "dual") {
    if (key == "enabled") return boolean(s.dual_enabled);
    if (key == "k_c") return num(s.k_c);
    if (key == "b_l_osc") return num(s.b_l_osc);
    if (key == "b_c_osc1") return num(s.b_c_osc1);
    if (key == "b_c_osc2") return num(s.b_c_osc2);
    if (key == "b_r_s") return num(s.b_r_s);
    if (key == "b_nvm_code") return integer(s.b_nvm_code);
  } else if (section == "sim") {
    if (key == "dt") return num(s.dt);
    if (key == "t_end") return num(s.t_end);
    if (key == "decimation") {
      int d = 0;
      if (auto err = integer(d)) return err;
      s.decimation = d;
      return std::nullopt;
    }
    if (key == "seed") {
      const auto x = parse_int(value);
      if (!x || *x < 0) return "invalid integer for sim.seed: '" + value + "'";
      s.seed = static_cast<unsigned long>(*x);
      return std::nullopt;
    }
    if (key == "measure_window") return num(s.measure_window);
  } else {
    return "unknown section [" + section + "]";
  }
  return "unknown key " + where;
}

}  // namespace

ScenarioError::ScenarioError(std::vector<std::string> v)
    : std::runtime_error(join(v)), violations(std::move(v)) {}

Scenario parse_scenario(const std::string& text) {
  Scenario s;
  std::vector<std::string> errors;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find_first_of("#;");
    std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        errors.push_back("line " + std::to_string(line_no) + ": malformed section header '" +
                         line + "'");
        continue;
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      errors.push_back("line " + std::to_string(line_no) + ": expected key = value, got '" +
                       line + "'");
      continue;
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty()) {
      errors.push_back("line " + std::to_string(line_no) + ": key '" + key +
                       "' outside any [section]");
      continue;
    }
    if (auto err = apply_key(s, section, key, value)) {
      errors.push_back("line " + std::to_string(line_no) + ": " + *err);
    }
  }
  if (!errors.empty()) throw ScenarioError(std::move(errors));
  return s;
}

void apply_override(Scenario& s, const std::string& dotted_assignment) {
  const auto eq = dotted_assignment.find('=');
  if (eq == std::string::npos) {
    throw ScenarioError({"override must look like section.key=value: '" + dotted_assignment +
                         "'"});
  }
  const std::string path = trim(dotted_assignment.substr(0, eq));
  const std::string value = trim(dotted_assignment.substr(eq + 1));
  const auto dot = path.find('.');
  if (dot == std::string::npos) {
    throw ScenarioError({"override key must be section.key: '" + path + "'"});
  }
  if (auto err = apply_key(s, path.substr(0, dot), path.substr(dot + 1), value)) {
    throw ScenarioError({*err});
  }
}

tank::TankParams effective_network(const tank::TankParams& raw) {
  tank::TankParams p = raw;
  if (p.c_osc1 <= 0.0) p.c_osc1 = faults::kMissingCapParasitic;
  if (p.c_osc2 <= 0.0) p.c_osc2 = faults::kMissingCapParasitic;
  return p;
}

tank::TankParams system_b_network(const Scenario& s) {
  tank::TankParams b = s.network;
  if (s.b_l_osc > 0.0) b.l_osc = s.b_l_osc;
  if (s.b_c_osc1 >= 0.0) b.c_osc1 = s.b_c_osc1;
  if (s.b_c_osc2 >= 0.0) b.c_osc2 = s.b_c_osc2;
  if (s.b_r_s >= 0.0) b.r_s = s.b_r_s;
  return b;
}

detectors::DetectorConfig resolved_detectors(const Scenario& s) {
  detectors::DetectorConfig cfg;
  cfg.t_timeout = s.t_timeout;
  cfg.tau_asym = s.tau_asym;
  cfg.hysteresis = s.hysteresis;
  const double d_set = regulation::set_point_level(s.reg);
  cfg.v_low = s.v_low_abs >= 0.0 ? s.v_low_abs : s.v_low_frac * d_set;
  cfg.v_asym = s.v_asym_abs >= 0.0 ? s.v_asym_abs : s.v_asym_frac * d_set;
  return cfg;
}

Scenario finalized(const Scenario& raw) {
  Scenario s = raw;
  std::vector<std::string> errors;
  auto require = [&](bool ok, const std::string& msg) {
    if (!ok) errors.push_back(msg);
  };

  require(s.network.l_osc > 0.0, "network.l_osc must be > 0");
  require(s.network.r_s >= 0.0, "network.r_s must be >= 0");
  require(s.network.c_osc1 >= 0.0, "network.c_osc1 must be >= 0");
  require(s.network.c_osc2 >= 0.0, "network.c_osc2 must be >= 0");
  require(s.network.c_osc1 > 0.0 || s.network.c_osc2 > 0.0,
          "network.c_osc1 and c_osc2 cannot both be zero");

  require(s.vdd > 0.0, "driver.vdd must be > 0");
  require(s.g_lin >= 0.0, "driver.g_lin must be >= 0");
  require(s.i_m >= 0.0, "driver.i_m must be >= 0");
  require(s.g_cm >= 0.0, "driver.g_cm must be >= 0");
  require(s.active_halfwidth > 0.0, "driver.active_halfwidth must be > 0");

  require(s.dac_cfg.i_unit > 0.0, "dac.i_unit must be > 0");
  for (const auto& [code, err] : s.dac_cfg.dnl_injection) {
    (void)err;
    require(code >= 0 && code <= 127, "dac.dnl_injection code out of [0,127]: " +
                                          std::to_string(code));
  }

  require(s.reg.v_set_rms > 0.0, "regulation.v_set_rms must be > 0");
  require(s.reg.window_low_frac > 0.0, "regulation.window_low_frac must be > 0");
  require(s.reg.window_high_frac > s.reg.window_low_frac,
          "regulation.window_high_frac must exceed window_low_frac");
  require(regulation::relative_window_width(s.reg) > 1.0 / 16.0,
          "regulation window relative width must exceed 1/16 (the largest amplitude step); got " +
              csv::fmt(regulation::relative_window_width(s.reg)));
  require(s.reg.tick_period > 0.0, "regulation.tick_period must be > 0");
  require(s.reg.nvm_code >= 0 && s.reg.nvm_code <= 127,
          "regulation.nvm_code must be in [0,127]");
  require(s.reg.t_nvm >= 0.0, "regulation.t_nvm must be >= 0");
  require(s.reg.tau_rect > 0.0, "regulation.tau_rect must be > 0");
  require(s.reg.tau_mid > 0.0, "regulation.tau_mid must be > 0");
  require(s.reg.v_bg > 0.0, "regulation.v_bg must be > 0");

  require(s.t_timeout > 0.5e-6,
          "detectors.t_timeout must exceed one oscillation period at 2 MHz (0.5 us)");
  require(s.v_low_frac >= 0.0, "detectors.v_low_frac must be >= 0");
  require(s.v_asym_frac >= 0.0, "detectors.v_asym_frac must be >= 0");
  require(s.tau_asym > 0.0, "detectors.tau_asym must be > 0");
  require(s.hysteresis > 0.0, "detectors.hysteresis must be > 0");

  require(s.fault.t_activate >= 0.0, "fault.t_activate must be >= 0");
  require(s.fault.t_activate <= s.t_end, "fault.t_activate must lie within the run duration");
  if (s.fault.kind == faults::FaultKind::DegradedQ) {
    require(s.fault.r_s_multiplier > 1.0, "fault.r_s_multiplier must be > 1");
  }
  require(s.fault.pin == 1 || s.fault.pin == 2, "fault.pin must be 1 or 2");
  if (s.fault.kind == faults::FaultKind::SupplyLoss && s.fault.system == 1) {
    require(s.dual_enabled, "fault supply_loss on system B requires dual.enabled = true");
  }
  require(s.fault.pin_model.v_neg_clamp < 0.0 && s.fault.pin_model.v_pos_clamp > 0.0,
          "fault clamp window must straddle 0 (v_neg_clamp < 0 < v_pos_clamp)");
  require(s.fault.pin_model.i_leak_max >= 0.0, "fault.i_leak_max must be >= 0");
  require(s.fault.pin_model.r_on_clamp > 0.0, "fault.r_on_clamp must be > 0");

  if (s.dual_enabled) {
    require(s.k_c > 0.0 && s.k_c < 1.0, "dual.k_c must lie in (0,1)");
    require(s.b_nvm_code >= -1 && s.b_nvm_code <= 127,
            "dual.b_nvm_code must be in [0,127] (or -1 to copy system A)");
    const tank::TankParams b = system_b_network(s);
    require(b.l_osc > 0.0, "dual.b_l_osc must be > 0");
    require(b.c_osc1 > 0.0 || b.c_osc2 > 0.0,
            "system B capacitors cannot both be zero");
  }

  require(s.t_end > 0.0, "sim.t_end must be > 0");
  require(s.dt >= 0.0, "sim.dt must be >= 0");
  require(s.decimation >= 1, "sim.decimation must be >= 1");
  require(s.measure_window >= 0.0, "sim.measure_window must be >= 0");
  require(s.measure_window <= s.t_end, "sim.measure_window cannot exceed sim.t_end");

  // Auto-derived values. Guard on the checks above so derivation cannot
  // divide by zero while errors are being collected.
  if (errors.empty()) {
    if (s.v_ref == 0.0) s.v_ref = 0.5 * s.vdd;

    const tank::TankParams net_a = effective_network(s.network);
    double f_res = tank::resonant_frequency(net_a);
    if (s.dual_enabled) {
      const tank::TankParams net_b = effective_network(system_b_network(s));
      f_res = std::max(f_res, tank::resonant_frequency(net_b));
    }
    if (s.g_lin == 0.0) {
      const double gm0 = tank::critical_gm(net_a).value;
      s.g_lin = gm0 > 0.0 ? 50.0 * gm0 : 1e-3;
    }
    if (s.dt == 0.0) {
      s.dt = std::min(1.0 / (500.0 * f_res), s.reg.tick_period / 100.0);
    }
    if (s.measure_window == 0.0) s.measure_window = 0.2 * s.t_end;

    if (s.dt > s.reg.tick_period / 100.0) {
      errors.push_back("sim.dt must be <= regulation.tick_period/100; got " + csv::fmt(s.dt));
    }
    if (!s.reg.enabled && s.i_m <= 0.0) {
      errors.push_back("driver.i_m must be > 0 when regulation is disabled (open loop)");
    }
  }

  if (!errors.empty()) throw ScenarioError(std::move(errors));
  return s;
}

std::string emit_scenario(const Scenario& s) {
  std::ostringstream out;
  const auto& f = [](double v) { return csv::fmt(v); };
  out << "[network]\n";
  out << "l_osc = " << f(s.network.l_osc) << "\n";
  out << "c_osc1 = " << f(s.network.c_osc1) << "\n";
  out << "c_osc2 = " << f(s.network.c_osc2) << "\n";
  out << "r_s = " << f(s.network.r_s) << "\n\n";

  out << "[driver]\n";
  out << "g_lin = " << f(s.g_lin) << "\n";
  out << "v_ref = " << f(s.v_ref) << "\n";
  out << "vdd = " << f(s.vdd) << "\n";
  out << "i_m = " << f(s.i_m) << "\n";
  out << "g_cm = " << f(s.g_cm) << "\n";
  out << "active_halfwidth = " << f(s.active_halfwidth) << "\n";
  out << "enabled = " << (s.driver_enabled ? "true" : "false") << "\n\n";

  out << "[dac]\n";
  out << "i_unit = " << f(s.dac_cfg.i_unit) << "\n";
  out << "dnl_injection = " << emit_dnl(s.dac_cfg.dnl_injection) << "\n\n";

  out << "[regulation]\n";
  out << "enabled = " << (s.reg.enabled ? "true" : "false") << "\n";
  out << "v_set_rms = " << f(s.reg.v_set_rms) << "\n";
  out << "window_low_frac = " << f(s.reg.window_low_frac) << "\n";
  out << "window_high_frac = " << f(s.reg.window_high_frac) << "\n";
  out << "tick_period = " << f(s.reg.tick_period) << "\n";
  out << "nvm_code = " << s.reg.nvm_code << "\n";
  out << "t_nvm = " << f(s.reg.t_nvm) << "\n";
  out << "tau_rect = " << f(s.reg.tau_rect) << "\n";
  out << "tau_mid = " << f(s.reg.tau_mid) << "\n";
  out << "v_bg = " << f(s.reg.v_bg) << "\n\n";

  out << "[detectors]\n";
  out << "t_timeout = " << f(s.t_timeout) << "\n";
  out << "v_low_frac = " << f(s.v_low_frac) << "\n";
  out << "v_low_abs = " << f(s.v_low_abs) << "\n";
  out << "v_asym_frac = " << f(s.v_asym_frac) << "\n";
  out << "v_asym_abs = " << f(s.v_asym_abs) << "\n";
  out << "tau_asym = " << f(s.tau_asym) << "\n";
  out << "hysteresis = " << f(s.hysteresis) << "\n\n";

  out << "[fault]\n";
  out << "kind = " << faults::fault_name(s.fault.kind) << "\n";
  out << "t_activate = " << f(s.fault.t_activate) << "\n";
  out << "r_s_multiplier = " << f(s.fault.r_s_multiplier) << "\n";
  out << "pin = " << s.fault.pin << "\n";
  out << "system = " << (s.fault.system == 0 ? "A" : "B") << "\n";
  out << "v_pos_clamp = " << f(s.fault.pin_model.v_pos_clamp) << "\n";
  out << "v_neg_clamp = " << f(s.fault.pin_model.v_neg_clamp) << "\n";
  out << "i_leak_max = " << f(s.fault.pin_model.i_leak_max) << "\n";
  out << "r_on_clamp = " << f(s.fault.pin_model.r_on_clamp) << "\n\n";

  out << "[dual]\n";
  out << "enabled = " << (s.dual_enabled ? "true" : "false") << "\n";
  out << "k_c = " << f(s.k_c) << "\n";
  out << "b_l_osc = " << f(s.b_l_osc) << "\n";
  out << "b_c_osc1 = " << f(s.b_c_osc1) << "\n";
  out << "b_c_osc2 = " << f(s.b_c_osc2) << "\n";
  out << "b_r_s = " << f(s.b_r_s) << "\n";
  out << "b_nvm_code = " << s.b_nvm_code << "\n\n";

  out << "[sim]\n";
  out << "dt = " << f(s.dt) << "\n";
  out << "t_end = " << f(s.t_end) << "\n";
  out << "decimation = " << s.decimation << "\n";
  out << "seed = " << s.seed << "\n";
  out << "measure_window = " << f(s.measure_window) << "\n";
  return out.str();
}

}  // namespace oscsim::scenario
