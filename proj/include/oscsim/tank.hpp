#pragma once

#include <algorithm>
#include <cmath>

namespace oscsim::tank {

// External resonance network: coil (l_osc, series r_s) between pins LC1 and
// LC2, one capacitor from each pin to ground.
struct TankParams {
  double l_osc = 1.8e-6;
  double c_osc1 = 2.7e-9;
  double c_osc2 = 2.7e-9;
  double r_s = 3.6;

  bool operator==(const TankParams&) const = default;
};

struct DriverParams {
  double i_m = 2.4e-3;            // current-limit magnitude (amperes)
  double g_lin = 0.27;            // linear-region transconductance slope (S)
  double v_ref = 2.5;             // common-mode reference (volts)
  double g_cm = 1e-3;             // common-mode bias conductance (S)
  double active_halfwidth = 2.0;  // stage input range about v_ref (volts)
  bool enabled = true;
};

struct TankState {
  double v1 = 0.0;  // LC1 pin voltage
  double v2 = 0.0;  // LC2 pin voltage
  double i_l = 0.0; // coil current, positive from pin 1 to pin 2
};

struct TankDerivative {
  double dv1 = 0.0;
  double dv2 = 0.0;
  double di_l = 0.0;
};

inline constexpr double kPi = 3.14159265358979323846;

// (1/2pi)/sqrt(L*c_ser) with c_ser = c1*c2/(c1+c2); equals
// (1/2pi)*sqrt(2/(L*C)) for equal capacitors. Requires both caps > 0.
double resonant_frequency(const TankParams& p);

struct CriticalGm {
  double value = 0.0;   // G_m0 = 2 * r_s * c_ser / l_osc; r_s * C / l_osc at equal caps
  bool equal_caps = true;
};

// Minimum per-stage transconductance sustaining oscillation, from the
// damping term of the differential characteristic polynomial. With equal
// capacitors C the equivalent forms r_s*C/L, 2*r_s/(w^2 L^2) and
// (1/2)*r_s*w^2*C^2 are cross-checked at resonance; they must agree to
// 1e-9 relative.
CriticalGm critical_gm(const TankParams& p);

// Steady-state RMS differential amplitude 2*k*i_m/G_m0 for hard-clipped
// drive. Throws std::domain_error when r_s == 0 (unbounded).
double predicted_amplitude(const TankParams& p, double i_m, double k);

// Amplitude change for a one-code step: v * delta(code). Throws
// std::domain_error for codes 0 and 127 where the step is undefined.
double predicted_amplitude_step(double v, int code);

// Static stage characteristic: clamp(g_lin*(v_pin - v_cm), +-i_m), forced
// to zero when the stage is disabled or the pin leaves the active input
// window about v_ref (a railed pin starves its stage).
inline double driver_current(double v_pin, double v_cm, const DriverParams& d) {
  if (!d.enabled) return 0.0;
  if (std::abs(v_pin - d.v_ref) > d.active_halfwidth) return 0.0;
  return std::clamp(d.g_lin * (v_pin - v_cm), -d.i_m, d.i_m);
}

// Common-mode bias current injected into BOTH pins. Senses only the common
// mode, so it damps/anchors (v1+v2)/2 without adding differential loading
// (a per-pin tie to v_ref would shift the oscillation threshold by g_cm).
inline double common_mode_current(double v_cm, const DriverParams& d) {
  if (!d.enabled) return 0.0;
  return d.g_cm * (d.v_ref - v_cm);
}

// Tank ODE right-hand side. i_ext1/i_ext2 are all externally injected pin
// currents beyond the coil (driver stages, bias, fault models, coupling),
// already evaluated at this state. coil_emf_override: when the coil belongs
// to a coupled pair the caller solves the inductance matrix itself and
// passes di_l/dt here (see faults::dual_coil_derivatives); NaN means the
// standalone coil equation applies.
inline TankDerivative derivatives_core(const TankState& s, const TankParams& p,
                                       double i_ext1, double i_ext2,
                                       double di_l_override = std::nan("")) {
  TankDerivative d;
  d.dv1 = (-s.i_l + i_ext1) / p.c_osc1;
  d.dv2 = (s.i_l + i_ext2) / p.c_osc2;
  if (std::isnan(di_l_override)) {
    d.di_l = (s.v1 - s.v2 - p.r_s * s.i_l) / p.l_osc;
  } else {
    d.di_l = di_l_override;
  }
  return d;
}

// Convenience full right-hand side for a standalone tank: drivers plus
// common-mode bias plus caller-supplied extra pin currents (fault models,
// zero in nominal runs), as functions of the sub-step state.
template <class PinFn>
TankDerivative derivatives(const TankState& s, const TankParams& p, const DriverParams& d,
                           PinFn&& extra_pin_current) {
  const double v_cm = 0.5 * (s.v1 + s.v2);
  const double i_cm = common_mode_current(v_cm, d);
  const double i1 = driver_current(s.v1, v_cm, d) + i_cm + extra_pin_current(0, s.v1);
  const double i2 = driver_current(s.v2, v_cm, d) + i_cm + extra_pin_current(1, s.v2);
  return derivatives_core(s, p, i1, i2);
}

// (1/2)*G_m0*v_rms^2: power burned in the network at that amplitude.
double dissipated_power(double v_rms_diff, const TankParams& p);

// k*v_rms*i_m: power delivered by a clipped driver at that amplitude.
double delivered_power(double v_rms_diff, double i_m, double k);

}  // namespace oscsim::tank
