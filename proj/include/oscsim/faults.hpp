#pragma once

#include <string>

namespace oscsim::faults {

// Fault-injection transforms, the unsupplied-driver pin model, and the
// coupled-coil math for the dual redundant configuration.

enum class FaultKind {
  None,
  OpenCoil,
  DegradedQ,
  MissingC1,
  MissingC2,
  SupplyLoss,
  PinShortToGround,
  PinShortToSupply,
};

const char* fault_name(FaultKind k);

// Pin behavior of a driver whose supply is gone: a clamp window about
// ground with only leakage inside it and resistive conduction outside.
struct UnsuppliedPinModel {
  double v_pos_clamp = 1.5;
  double v_neg_clamp = -1.5;
  double i_leak_max = 1e-6;
  double r_on_clamp = 100.0;

  bool operator==(const UnsuppliedPinModel&) const = default;
};

// Demo presets trading clamp range against loading of the neighbor system:
// "fig10a" conducts like a bulk diode near +-0.6 V, "fig10b" blocks a
// limited +-1.0 V range, "fig11" (default) blocks the full +-1.5 V
// operating swing. Throws std::domain_error for unknown names.
UnsuppliedPinModel unsupplied_preset(const std::string& name);

// Current drawn FROM the pin into the model (positive = pin is loaded).
// Inside the clamp window only leakage flows (|i| <= i_leak_max); outside,
// the clamp conducts through r_on_clamp, continuous at the window edges.
double unsupplied_pin_current(double v_pin, const UnsuppliedPinModel& m);

struct FaultScenario {
  FaultKind kind = FaultKind::None;
  double t_activate = 0.0;
  double r_s_multiplier = 20.0;  // DegradedQ
  int pin = 1;                   // pin shorts: 1 or 2
  int system = 1;                // SupplyLoss: 0 = A, 1 = B
  UnsuppliedPinModel pin_model;  // SupplyLoss behavior

  bool operator==(const FaultScenario&) const = default;
};

inline constexpr double kOpenCoilResistance = 10e6;
inline constexpr double kMissingCapParasitic = 10e-12;
inline constexpr double kShortResistance = 1.0;

// Effective per-system modifications the kernel consults each step.
struct SystemEffects {
  double c1_scale_to = -1.0;   // >0: capacitor replaced (farads)
  double c2_scale_to = -1.0;
  double r_s_multiplier = 1.0;
  bool coil_open = false;
  bool driver_alive = true;    // SupplyLoss clears this
  bool unsupplied = false;     // pin model active on both pins
  bool regulation_frozen = false;
  int short_pin = 0;           // 0 = none
  double short_voltage = 0.0;  // 0 or vdd

  bool operator==(const SystemEffects&) const = default;
};

// Transform for one system at activation time. vdd supplies the short
// target for PinShortToSupply. Faults addressed to the other system leave
// the effects untouched.
void apply_fault(SystemEffects& fx, const FaultScenario& fault, int system_index, double vdd);

// Coupled coil pair: L_A*di_A + M*di_B = e_A, M*di_A + L_B*di_B = e_B with
// M = k_c*sqrt(L_A*L_B); solved by the 2x2 inductance matrix (invertible
// for k_c < 1; throws std::domain_error otherwise). e = v1 - v2 - r_s*i for
// each coil.
struct CoilPair {
  double di_a = 0.0;
  double di_b = 0.0;
};
CoilPair dual_coil_derivatives(double e_a, double e_b, double l_a, double l_b, double k_c);

}  // namespace oscsim::faults
