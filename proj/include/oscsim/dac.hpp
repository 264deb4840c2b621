#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace oscsim::dac {

// 7-bit current-limitation DAC: 8 segments of 16 codes, piecewise-linear
// approximation of an exponential. All coding math is exact in integer
// "units" (1 unit = i_unit amperes, default 12.5 uA).

struct ControlBuses {
  int osc_d = 0;  // prescaler bus, 0..7
  int osc_e = 0;  // Gm-switching bus, one of {0,1,3,7,15} (thermometer-like)
  int osc_f = 0;  // current-mirror bus, 0..127; low shift bits are zero

  bool operator==(const ControlBuses&) const = default;
};

struct DacConfig {
  double i_unit = 12.5e-6;  // amperes per unit (LSB weight)
  // Additive per-code error in integer units, applied in the limit path
  // only (bus_current stays ideal so the two routes stay independent).
  std::vector<std::pair<int, int>> dnl_injection;

  bool operator==(const DacConfig&) const = default;
};

// Per-code relative step d(n) = (I(n+1) - I(n)) / I(n), defined for
// n in [1,126]; entries 0 and 127 are not meaningful (I(0)=0; no I(128)).
struct StepProfile {
  std::array<double, 128> delta{};  // delta[n] valid for n in [1,126]
};

inline constexpr int kNumCodes = 128;
inline constexpr int kCodesPerSegment = 16;

// Segment table columns: (range min, step) in units, plus the oscF shift
// amount and the (oscD, oscE) encoding per segment.
inline constexpr std::array<int, 8> kSegmentMin = {0, 16, 32, 64, 128, 256, 512, 1024};
inline constexpr std::array<int, 8> kSegmentStep = {1, 1, 2, 4, 8, 16, 32, 64};
inline constexpr std::array<int, 8> kSegmentShift = {0, 0, 0, 1, 1, 2, 2, 3};
inline constexpr std::array<int, 8> kSegmentOscD = {0, 0, 1, 1, 3, 3, 7, 7};
inline constexpr std::array<int, 8> kSegmentOscE = {0, 1, 1, 3, 3, 7, 7, 15};

// Code -> control buses (the coding table row for segment = code/16 with
// B = code%16 shifted into oscF). Throws std::domain_error outside [0,127].
ControlBuses decompose(int code);

// Bus formula route: units = (1+oscD) * (oscF + 16*(oscE mod 2 + oscE div 2)).
// Independent of the segment (min, step) table; the two must agree for all
// 128 codes.
long long bus_current_units(const ControlBuses& buses);
double bus_current(const ControlBuses& buses, const DacConfig& cfg);

// Number of active Gm stages implied by oscE (reporting only).
int active_gm_stages(const ControlBuses& buses);

// Closed-form route in units: segment_min + B*segment_step, plus any
// injected DNL error for that code. Throws std::domain_error outside [0,127].
long long limit_current_units(int code, const DacConfig& cfg);
double limit_current(int code, const DacConfig& cfg);

// i0 * (1+delta)^n; the exponential the PWL approximates (reporting only).
double ideal_exponential(int n, double i0, double delta);

StepProfile step_profile(const DacConfig& cfg);

// First code c in [1,126] where I(c+1) <= I(c) (DNL included), if any.
std::optional<int> first_nonmonotonic_code(const DacConfig& cfg);

struct ExpFit {
  double i0_units = 0.0;      // fitted I(0) extrapolation in units
  double delta = 0.0;         // fitted per-code relative step
  double max_rel_dev = 0.0;   // max |I(n) - fit(n)| / I(n) over the fit range
  int argmax_code = 0;
};

// Least-squares fit of ln I(n) vs n over [n_lo, n_hi] (no DNL), reporting
// how closely the PWL tracks a true exponential.
ExpFit fit_exponential(int n_lo = 16, int n_hi = 127);

}  // namespace oscsim::dac
