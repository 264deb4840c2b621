#pragma once

#include "oscsim/detectors.hpp"
#include "oscsim/scenario.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace oscsim::sim {

// Deterministic fixed-step mixed-signal engine: RK4 over the tank and
// filter states with exact event-boundary splitting for fault activation,
// NVM load, and regulation ticks.

// Thrown when the integrator produces a non-finite state. The CLI maps it
// to exit code 2.
struct SimAbort : std::runtime_error {
  explicit SimAbort(const std::string& msg) : std::runtime_error(msg) {}
};

// One decimated trace sample of one system. Channels are float to keep
// long traces compact; time keeps full precision. i_pin1/i_pin2 are the
// chip-side pin currents (driver plus bias when supplied, clamp/leakage
// when unsupplied), positive into the pin.
struct Sample {
  double t = 0.0;
  float v1 = 0.0f;
  float v2 = 0.0f;
  float i_l = 0.0f;
  float i_pin1 = 0.0f;
  float i_pin2 = 0.0f;
  float v_dc1 = 0.0f;
  float v_r1 = 0.0f;
  float asym_lp = 0.0f;
  float i_limit = 0.0f;
  int code = 0;
  bool flag_missing = false;
  bool flag_lowamp = false;
  bool flag_asym = false;
};

// Regulation tick record: one per executed tick per live system.
struct TickRecord {
  double t = 0.0;
  double level = 0.0;       // v_dc1 - v_r1 at the tick
  int comparison = 0;       // -1 Below, 0 Inside, +1 Above
  int code_after = 0;
};

struct SystemSummary {
  int final_code = 0;
  bool fault_latched = false;
  bool regulation_frozen = false;
  detectors::Flag missing_osc;
  detectors::Flag low_amplitude;
  detectors::Flag asymmetry;
  // Trailing measure-window statistics, streamed over the undecimated
  // state (not the decimated samples).
  double rms_diff = 0.0;
  double peak_diff = 0.0;
  bool has_frequency = false;
  double frequency = 0.0;        // mean of interpolated rising-crossing spacing
  double mean_abs_ipin1 = 0.0;
  int window_code_changes = 0;
  // Unsupplied-pin loading (0 unless the system runs unsupplied).
  double max_abs_pin_current = 0.0;         // whole run
  double window_max_abs_pin_current = 0.0;  // measure window only
};

struct Summary {
  double t_end = 0.0;
  double dt = 0.0;
  double measure_window = 0.0;
  double f_res = 0.0;   // system A effective network at t=0
  double g_m0 = 0.0;
  double g_lin = 0.0;
  long long steps = 0;
  int ticks_executed = 0;
  bool dual = false;
  SystemSummary a;
  SystemSummary b;  // meaningful only when dual
};

struct Trace {
  std::vector<Sample> a;
  std::vector<Sample> b;  // empty unless dual
  std::vector<TickRecord> ticks_a;
  std::vector<TickRecord> ticks_b;
  Summary summary;
};

// Run one scenario to completion. The scenario is finalized internally
// (idempotent), so callers may pass either raw or finalized scenarios.
// Identical scenarios produce identical traces. Throws scenario::ScenarioError
// for invalid configs and SimAbort on numeric blow-up.
Trace run(const scenario::Scenario& s);

struct Measurements {
  double rms_diff = 0.0;
  double peak_diff = 0.0;
  bool has_frequency = false;
  double frequency = 0.0;
  double mean_abs_ipin1 = 0.0;
  int code_changes = 0;
};

// Trailing-window statistics over recorded samples: RMS/peak of v1-v2,
// mean frequency from interpolated rising zero crossings (absent below 4
// crossings), mean |i_pin1|, and sample-to-sample code changes.
Measurements measure(const std::vector<Sample>& samples, double window);

}  // namespace oscsim::sim
