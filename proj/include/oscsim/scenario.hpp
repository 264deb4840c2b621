#pragma once

#include "oscsim/dac.hpp"
#include "oscsim/detectors.hpp"
#include "oscsim/faults.hpp"
#include "oscsim/regulation.hpp"
#include "oscsim/tank.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace oscsim::scenario {

// INI-style scenario: every key has a documented default, unknown keys are
// hard errors, and validation reports every violated constraint at once.

struct Scenario {
  // [network]
  tank::TankParams network;

  // [driver]
  double g_lin = 0.0;   // 0 = auto: 50 * G_m0 of the network
  double v_ref = 0.0;   // 0 = auto: vdd / 2
  double vdd = 5.0;
  double i_m = 0.0;     // fixed current limit for open-loop runs (regulation.enabled=false)
  double g_cm = 1e-3;
  double active_halfwidth = 2.0;
  bool driver_enabled = true;

  // [dac]
  dac::DacConfig dac_cfg;

  // [regulation]
  regulation::RegulationParams reg;

  // [detectors]
  double t_timeout = 5e-6;
  double v_low_frac = 0.5;    // threshold as fraction of the set-point level
  double v_low_abs = -1.0;    // absolute override in volts; < 0 = unset
  double v_asym_frac = 0.1;
  double v_asym_abs = -1.0;
  double tau_asym = 50e-6;
  double hysteresis = 5e-3;

  // [fault]
  faults::FaultScenario fault;

  // [dual]
  bool dual_enabled = false;
  double k_c = 0.2;
  double b_l_osc = -1.0;  // system-B overrides; < 0 = copy of system A
  double b_c_osc1 = -1.0;
  double b_c_osc2 = -1.0;
  double b_r_s = -1.0;
  int b_nvm_code = -1;

  // [sim]
  double dt = 0.0;             // 0 = auto: min(1/(500 f_res), tick_period/100)
  double t_end = 20e-3;
  int decimation = 20;
  unsigned long seed = 0;      // reserved for randomized campaigns
  double measure_window = 0.0; // 0 = auto: trailing 20% of t_end

  bool operator==(const Scenario&) const = default;
};

struct ScenarioError : std::runtime_error {
  explicit ScenarioError(std::vector<std::string> v);
  std::vector<std::string> violations;
};

// Parse INI text (sections, key = value, '#'/';' comments). Collects every
// syntax and unknown-key error into one ScenarioError. Empty text gives the
// all-defaults scenario.
Scenario parse_scenario(const std::string& text);

// Apply one "section.key=value" command-line override.
void apply_override(Scenario& s, const std::string& dotted_assignment);

// Fill auto-derived values (g_lin, v_ref, dt, measure_window) and check all
// cross-field constraints, collecting every violation. Returns the
// concrete, runnable scenario.
Scenario finalized(const Scenario& s);

// Emit the scenario in the same INI format; parse(emit(s)) == s.
std::string emit_scenario(const Scenario& s);

// Resolved detector thresholds (fraction-of-set-point unless an absolute
// override is given).
detectors::DetectorConfig resolved_detectors(const Scenario& s);

// Effective system-B network (A plus any overrides).
tank::TankParams system_b_network(const Scenario& s);

// Effective capacitor values: a 0 in the scenario means the capacitor is
// absent from t=0 and is replaced by the parasitic value.
tank::TankParams effective_network(const tank::TankParams& raw);

}  // namespace oscsim::scenario
