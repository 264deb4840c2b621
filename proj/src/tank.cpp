#include "oscsim/tank.hpp"

#include "oscsim/dac.hpp"

#include <cmath>
#include <stdexcept>

namespace oscsim::tank {

double resonant_frequency(const TankParams& p) {
  if (p.c_osc1 <= 0.0 || p.c_osc2 <= 0.0) {
    throw std::domain_error("resonant_frequency requires both capacitors > 0");
  }
  if (p.l_osc <= 0.0) throw std::domain_error("l_osc must be > 0");
  const double c_ser = p.c_osc1 * p.c_osc2 / (p.c_osc1 + p.c_osc2);
  return 1.0 / (2.0 * kPi * std::sqrt(p.l_osc * c_ser));
}

CriticalGm critical_gm(const TankParams& p) {
  if (p.c_osc1 <= 0.0 || p.c_osc2 <= 0.0) {
    throw std::domain_error("critical_gm requires both capacitors > 0");
  }
  if (p.l_osc <= 0.0) throw std::domain_error("l_osc must be > 0");
  CriticalGm out;
  out.equal_caps = (p.c_osc1 == p.c_osc2);
  const double c_ser = p.c_osc1 * p.c_osc2 / (p.c_osc1 + p.c_osc2);
  out.value = 2.0 * p.r_s * c_ser / p.l_osc;

  if (out.equal_caps && p.r_s > 0.0) {
    // The equivalent closed forms must coincide at w^2 = 2/(L*C).
    const double c = p.c_osc1;
    const double w2 = 2.0 / (p.l_osc * c);
    const double form1 = p.r_s * c / p.l_osc;
    const double form2 = 2.0 * p.r_s / (w2 * p.l_osc * p.l_osc);
    const double form3 = 0.5 * p.r_s * w2 * c * c;
    const double rel1 = std::abs(form1 - out.value) / out.value;
    const double rel2 = std::abs(form2 - out.value) / out.value;
    const double rel3 = std::abs(form3 - out.value) / out.value;
    if (rel1 > 1e-9 || rel2 > 1e-9 || rel3 > 1e-9) {
      throw std::logic_error("critical_gm closed forms disagree");
    }
  }
  return out;
}

double predicted_amplitude(const TankParams& p, double i_m, double k) {
  if (i_m < 0.0) throw std::domain_error("i_m must be >= 0");
  if (k <= 0.0 || k > 1.0) throw std::domain_error("k must be in (0,1]");
  const double gm0 = critical_gm(p).value;
  if (gm0 <= 0.0) throw std::domain_error("r_s = 0 gives unbounded amplitude");
  return 2.0 * k * i_m / gm0;
}

double predicted_amplitude_step(double v, int code) {
  if (v < 0.0) throw std::domain_error("amplitude must be >= 0");
  if (code < 1 || code > 126) {
    throw std::domain_error("relative step undefined for code outside [1,126]");
  }
  const dac::DacConfig clean;
  return v * dac::step_profile(clean).delta[code];
}

double dissipated_power(double v_rms_diff, const TankParams& p) {
  if (v_rms_diff < 0.0) throw std::domain_error("amplitude must be >= 0");
  return 0.5 * critical_gm(p).value * v_rms_diff * v_rms_diff;
}

double delivered_power(double v_rms_diff, double i_m, double k) {
  if (v_rms_diff < 0.0 || i_m < 0.0 || k < 0.0) {
    throw std::domain_error("arguments must be >= 0");
  }
  return k * v_rms_diff * i_m;
}

}  // namespace oscsim::tank
