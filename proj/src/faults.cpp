#include "oscsim/faults.hpp"

#include <cmath>
#include <stdexcept>

namespace oscsim::faults {

const char* fault_name(FaultKind k) {
  switch (k) {
    case FaultKind::None: return "none";
    case FaultKind::OpenCoil: return "open_coil";
    case FaultKind::DegradedQ: return "degraded_q";
    case FaultKind::MissingC1: return "missing_c1";
    case FaultKind::MissingC2: return "missing_c2";
    case FaultKind::SupplyLoss: return "supply_loss";
    case FaultKind::PinShortToGround: return "pin_short_ground";
    case FaultKind::PinShortToSupply: return "pin_short_supply";
  }
  return "unknown";
}

UnsuppliedPinModel unsupplied_preset(const std::string& name) {
  if (name == "fig11") return {1.5, -1.5, 1e-6, 100.0};
  if (name == "fig10a") return {0.6, -0.6, 1e-6, 50.0};
  if (name == "fig10b") return {1.0, -1.0, 1e-6, 100.0};
  throw std::domain_error("unknown unsupplied-pin preset: " + name);
}

double unsupplied_pin_current(double v_pin, const UnsuppliedPinModel& m) {
  const double span = std::max(m.v_pos_clamp, -m.v_neg_clamp);
  const double g_leak = span > 0.0 ? m.i_leak_max / span : 0.0;
  if (v_pin > m.v_pos_clamp) {
    return g_leak * m.v_pos_clamp + (v_pin - m.v_pos_clamp) / m.r_on_clamp;
  }
  if (v_pin < m.v_neg_clamp) {
    return g_leak * m.v_neg_clamp + (v_pin - m.v_neg_clamp) / m.r_on_clamp;
  }
  return g_leak * v_pin;
}

void apply_fault(SystemEffects& fx, const FaultScenario& fault, int system_index, double vdd) {
  switch (fault.kind) {
    case FaultKind::None:
      return;
    case FaultKind::OpenCoil:
      if (system_index == 0) fx.coil_open = true;
      return;
    case FaultKind::DegradedQ:
      if (system_index == 0) fx.r_s_multiplier = fault.r_s_multiplier;
      return;
    case FaultKind::MissingC1:
      if (system_index == 0) fx.c1_scale_to = kMissingCapParasitic;
      return;
    case FaultKind::MissingC2:
      if (system_index == 0) fx.c2_scale_to = kMissingCapParasitic;
      return;
    case FaultKind::SupplyLoss:
      if (system_index == fault.system) {
        fx.driver_alive = false;
        fx.unsupplied = true;
        fx.regulation_frozen = true;
      }
      return;
    case FaultKind::PinShortToGround:
      if (system_index == 0) {
        fx.short_pin = fault.pin;
        fx.short_voltage = 0.0;
      }
      return;
    case FaultKind::PinShortToSupply:
      if (system_index == 0) {
        fx.short_pin = fault.pin;
        fx.short_voltage = vdd;
      }
      return;
  }
  throw std::domain_error("unknown fault kind");
}

CoilPair dual_coil_derivatives(double e_a, double e_b, double l_a, double l_b, double k_c) {
  if (k_c >= 1.0 || k_c < 0.0) {
    throw std::domain_error("coupling coefficient must lie in [0,1)");
  }
  const double m = k_c * std::sqrt(l_a * l_b);
  const double det = l_a * l_b - m * m;
  return {(l_b * e_a - m * e_b) / det, (l_a * e_b - m * e_a) / det};
}

}  // namespace oscsim::faults
