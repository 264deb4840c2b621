#pragma once

namespace oscsim::regulation {

// Amplitude-regulation loop: rectifier + low-pass amplitude measurement,
// bandgap-referenced window comparator, and the +1/hold/-1 code state
// machine with power-on / NVM-preset startup and fail-safe latch.

struct RegulationParams {
  double v_set_rms = 0.8;        // target RMS differential amplitude (volts)
  double window_low_frac = 0.96; // lower window edge as fraction of d_set
  double window_high_frac = 1.04;
  double tick_period = 1e-3;
  int nvm_code = 105;
  double t_nvm = 5e-6;
  double tau_rect = 20e-6;  // rectifier low-pass time constant
  double tau_mid = 20e-6;   // midpoint low-pass time constant
  double v_bg = 1.20;       // bandgap reference (volts)
  bool enabled = true;      // false: open-loop, code frozen, no window action

  bool operator==(const RegulationParams&) const = default;
};

// Rectified set-point deviation: at amplitude V_rms the filtered
// max(v1,v2) sits (sqrt(2)/pi)*V_rms above the filtered midpoint.
double set_point_level(const RegulationParams& p);

struct WindowRefs {
  double v_r3 = 0.0;  // lower threshold
  double v_r4 = 0.0;  // upper threshold
};

// Thresholds v_r1 + alpha*v_bg with alpha chosen from the configured
// window fractions of the set-point level.
WindowRefs window_refs(double v_r1, const RegulationParams& p);

// Relative window width (v_r4-v_r3)/(center-v_r1); must exceed 1/16 (the
// largest per-code amplitude step) or the loop can jump across the window.
double relative_window_width(const RegulationParams& p);

enum class Comparison { Below, Inside, Above };

// Closed boundaries: equality with either threshold is Inside.
Comparison window_compare(double v_dc1, const WindowRefs& refs);

struct RegulatorState {
  int code = 105;            // power-on value
  bool fault_latched = false;
  bool frozen = false;       // supply lost: state machine halted
};

inline constexpr int kPowerOnCode = 105;
inline constexpr int kFailSafeCode = 127;

// One regulation step: Below -> code+1, Above -> code-1, Inside -> hold,
// saturating at [0,127]; a latched fault forces 127 regardless.
void tick(RegulatorState& s, Comparison c);

// t=0: power-on code; t=t_nvm: preset from NVM.
void power_on(RegulatorState& s);
void load_nvm(RegulatorState& s, int nvm_code);

// Filter right-hand sides, integrated by the simulation kernel alongside
// the tank states.
inline double rect_filter_derivative(double v1, double v2, double v_dc1, double tau_rect) {
  const double rect = v1 > v2 ? v1 : v2;  // ideal-diode full-wave pick
  return (rect - v_dc1) / tau_rect;
}

inline double mid_filter_derivative(double v1, double v2, double v_r1, double tau_mid) {
  return (0.5 * (v1 + v2) - v_r1) / tau_mid;
}

}  // namespace oscsim::regulation
