#include "oscsim/regulation.hpp"

#include "oscsim/tank.hpp"

#include <cmath>

namespace oscsim::regulation {

double set_point_level(const RegulationParams& p) {
  return std::sqrt(2.0) * p.v_set_rms / tank::kPi;
}

WindowRefs window_refs(double v_r1, const RegulationParams& p) {
  const double d_set = set_point_level(p);
  const double alpha_low = p.window_low_frac * d_set / p.v_bg;
  const double alpha_high = p.window_high_frac * d_set / p.v_bg;
  return {v_r1 + alpha_low * p.v_bg, v_r1 + alpha_high * p.v_bg};
}

double relative_window_width(const RegulationParams& p) {
  const double center = 0.5 * (p.window_low_frac + p.window_high_frac);
  if (center <= 0.0) return 0.0;
  return (p.window_high_frac - p.window_low_frac) / center;
}

Comparison window_compare(double v_dc1, const WindowRefs& refs) {
  if (v_dc1 < refs.v_r3) return Comparison::Below;
  if (v_dc1 > refs.v_r4) return Comparison::Above;
  return Comparison::Inside;
}

void tick(RegulatorState& s, Comparison c) {
  if (s.frozen) return;
  if (s.fault_latched) {
    s.code = kFailSafeCode;
    return;
  }
  switch (c) {
    case Comparison::Below:
      if (s.code < 127) ++s.code;
      break;
    case Comparison::Above:
      if (s.code > 0) --s.code;
      break;
    case Comparison::Inside:
      break;
  }
}

void power_on(RegulatorState& s) {
  s.code = kPowerOnCode;
  s.fault_latched = false;
  s.frozen = false;
}

void load_nvm(RegulatorState& s, int nvm_code) {
  if (s.frozen) return;
  s.code = nvm_code;
}

}  // namespace oscsim::regulation
