#pragma once

namespace oscsim::detectors {

// Safety detectors: missing-oscillation watchdog on the extracted clock,
// low-amplitude check at regulation ticks, and pin-asymmetry detection by
// synchronous rectification of the midpoint signal.

struct DetectorConfig {
  double t_timeout = 5e-6;   // watchdog period
  double v_low = 0.0;        // low-amplitude threshold on (v_dc1 - v_r1), volts
  double v_asym = 0.0;       // asymmetry threshold on the demodulated midpoint, volts
  double tau_asym = 50e-6;   // asymmetry low-pass time constant
  double hysteresis = 5e-3;  // clock comparator hysteresis, volts
};

inline constexpr int kLowAmpTicks = 3;         // consecutive ticks below v_low
inline constexpr double kAsymPersistTaus = 3;  // persistence in units of tau_asym

struct Flag {
  bool fired = false;
  double time = 0.0;  // first-detection time, valid when fired
};

struct DetectorState {
  int clock_level = -1;         // Schmitt output, -1 or +1
  double last_edge_time = 0.0;  // watchdog reference; starts at t=0
  int below_count = 0;
  double asym_persist = 0.0;
  Flag missing_osc;
  Flag low_amplitude;
  Flag asymmetry;
};

// Schmitt comparator on v_diff = v1 - v2: output +1 once v_diff > +hyst,
// -1 once v_diff < -hyst, held in between. Registers threshold-crossing
// times by linear interpolation inside the step. Returns true when an edge
// occurred.
bool clock_update(DetectorState& s, double t_prev, double vd_prev, double t_now,
                  double vd_now, const DetectorConfig& cfg);

// Latches missing_osc once now - last_edge exceeds t_timeout; the recorded
// detection time is the exact expiry last_edge + t_timeout.
void watchdog_check(DetectorState& s, const DetectorConfig& cfg, double now);

// Tick-synchronous: level below v_low for kLowAmpTicks consecutive ticks
// latches low_amplitude. Strict comparison: v_low = 0 never fires because
// the rectified deviation is nonnegative.
void low_amplitude_tick(DetectorState& s, double level, const DetectorConfig& cfg, double t);

// Continuous: |filtered demodulated midpoint| above v_asym persisting for
// kAsymPersistTaus*tau_asym latches asymmetry. The filter itself is
// integrated by the kernel; this advances the persistence/latch logic.
void asymmetry_update(DetectorState& s, double asym_lp, const DetectorConfig& cfg, double dt,
                      double t);

// Demodulator feeding the asymmetry low-pass: AC midpoint content times the
// extracted clock sign.
inline double asym_demod(double v1, double v2, double v_r1, int clock_level) {
  return (0.5 * (v1 + v2) - v_r1) * static_cast<double>(clock_level);
}

}  // namespace oscsim::detectors
