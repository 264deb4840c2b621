#include "oscsim/dac.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace oscsim::dac {

namespace {

void check_code(int code) {
  if (code < 0 || code >= kNumCodes) {
    throw std::domain_error("DAC code out of range [0,127]: " + std::to_string(code));
  }
}

long long dnl_for(int code, const DacConfig& cfg) {
  long long err = 0;
  for (const auto& [c, e] : cfg.dnl_injection) {
    if (c == code) err += e;
  }
  return err;
}

}  // namespace

ControlBuses decompose(int code) {
  check_code(code);
  const int segment = code / kCodesPerSegment;
  const int b = code % kCodesPerSegment;
  ControlBuses buses;
  buses.osc_d = kSegmentOscD[segment];
  buses.osc_e = kSegmentOscE[segment];
  buses.osc_f = b << kSegmentShift[segment];
  return buses;
}

long long bus_current_units(const ControlBuses& buses) {
  return static_cast<long long>(1 + buses.osc_d) *
         (buses.osc_f + 16 * (buses.osc_e % 2 + buses.osc_e / 2));
}

double bus_current(const ControlBuses& buses, const DacConfig& cfg) {
  return static_cast<double>(bus_current_units(buses)) * cfg.i_unit;
}

int active_gm_stages(const ControlBuses& buses) {
  return buses.osc_e % 2 + buses.osc_e / 2 + 1;
}

long long limit_current_units(int code, const DacConfig& cfg) {
  check_code(code);
  const int segment = code / kCodesPerSegment;
  const int b = code % kCodesPerSegment;
  const long long ideal = kSegmentMin[segment] + static_cast<long long>(b) * kSegmentStep[segment];
  return ideal + dnl_for(code, cfg);
}

double limit_current(int code, const DacConfig& cfg) {
  return static_cast<double>(limit_current_units(code, cfg)) * cfg.i_unit;
}

double ideal_exponential(int n, double i0, double delta) {
  if (n < 0) throw std::domain_error("exponent must be nonnegative");
  return i0 * std::pow(1.0 + delta, n);
}

StepProfile step_profile(const DacConfig& cfg) {
  StepProfile p;
  for (int n = 1; n <= 126; ++n) {
    const double in = static_cast<double>(limit_current_units(n, cfg));
    const double in1 = static_cast<double>(limit_current_units(n + 1, cfg));
    p.delta[n] = (in1 - in) / in;
  }
  return p;
}

std::optional<int> first_nonmonotonic_code(const DacConfig& cfg) {
  for (int n = 0; n <= 126; ++n) {
    if (limit_current_units(n + 1, cfg) <= limit_current_units(n, cfg)) return n;
  }
  return std::nullopt;
}

ExpFit fit_exponential(int n_lo, int n_hi) {
  if (n_lo < 1 || n_hi >= kNumCodes || n_lo >= n_hi) {
    throw std::domain_error("fit range must satisfy 1 <= n_lo < n_hi <= 127");
  }
  const DacConfig clean;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const int m = n_hi - n_lo + 1;
  for (int n = n_lo; n <= n_hi; ++n) {
    const double x = n;
    const double y = std::log(static_cast<double>(limit_current_units(n, clean)));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  const double intercept = (sy - slope * sx) / m;

  ExpFit fit;
  fit.delta = std::exp(slope) - 1.0;
  fit.i0_units = std::exp(intercept);
  for (int n = n_lo; n <= n_hi; ++n) {
    const double in = static_cast<double>(limit_current_units(n, clean));
    const double model = fit.i0_units * std::pow(1.0 + fit.delta, n);
    const double dev = std::abs(in - model) / in;
    if (dev > fit.max_rel_dev) {
      fit.max_rel_dev = dev;
      fit.argmax_code = n;
    }
  }
  return fit;
}

}  // namespace oscsim::dac
