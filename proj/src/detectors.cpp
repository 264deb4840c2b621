#include "oscsim/detectors.hpp"

namespace oscsim::detectors {

namespace {

// Time at which the segment from (t0,v0) to (t1,v1) crosses level.
double cross_time(double t0, double v0, double t1, double v1, double level) {
  const double dv = v1 - v0;
  if (dv == 0.0) return t1;
  double f = (level - v0) / dv;
  if (f < 0.0) f = 0.0;
  if (f > 1.0) f = 1.0;
  return t0 + f * (t1 - t0);
}

}  // namespace

bool clock_update(DetectorState& s, double t_prev, double vd_prev, double t_now, double vd_now,
                  const DetectorConfig& cfg) {
  const double h = cfg.hysteresis;
  if (s.clock_level < 0 && vd_now > h) {
    s.clock_level = 1;
    s.last_edge_time = cross_time(t_prev, vd_prev, t_now, vd_now, h);
    return true;
  }
  if (s.clock_level > 0 && vd_now < -h) {
    s.clock_level = -1;
    s.last_edge_time = cross_time(t_prev, vd_prev, t_now, vd_now, -h);
    return true;
  }
  return false;
}

void watchdog_check(DetectorState& s, const DetectorConfig& cfg, double now) {
  if (s.missing_osc.fired) return;
  if (now - s.last_edge_time > cfg.t_timeout) {
    s.missing_osc.fired = true;
    s.missing_osc.time = s.last_edge_time + cfg.t_timeout;
  }
}

void low_amplitude_tick(DetectorState& s, double level, const DetectorConfig& cfg, double t) {
  if (level < cfg.v_low) {
    ++s.below_count;
  } else {
    s.below_count = 0;
  }
  if (!s.low_amplitude.fired && s.below_count >= kLowAmpTicks) {
    s.low_amplitude.fired = true;
    s.low_amplitude.time = t;
  }
}

void asymmetry_update(DetectorState& s, double asym_lp, const DetectorConfig& cfg, double dt,
                      double t) {
  if (asym_lp > cfg.v_asym || asym_lp < -cfg.v_asym) {
    s.asym_persist += dt;
  } else {
    s.asym_persist = 0.0;
  }
  if (!s.asymmetry.fired && s.asym_persist >= kAsymPersistTaus * cfg.tau_asym) {
    s.asymmetry.fired = true;
    s.asymmetry.time = t;
  }
}

}  // namespace oscsim::detectors
