#include "oscsim/sim.hpp"

#include "oscsim/csv.hpp"
#include "oscsim/dac.hpp"
#include "oscsim/faults.hpp"
#include "oscsim/regulation.hpp"
#include "oscsim/tank.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

namespace oscsim::sim {
namespace {

constexpr int kPerSys = 6;  // v1, v2, i_l, v_dc1, v_r1, asym_lp
constexpr int kMaxStates = 2 * kPerSys;

struct SysModel {
  tank::TankParams base_net;  // effective network before any fault
  tank::TankParams net;       // current effective network
  tank::DriverParams drv;
  regulation::RegulationParams regp;
  regulation::RegulatorState reg;
  detectors::DetectorState det;
  faults::SystemEffects fx;
  int nvm_code = regulation::kPowerOnCode;
  double i_limit = 0.0;
  // cached derivative coefficients, rebuilt on any event
  double inv_c1 = 0.0;
  double inv_c2 = 0.0;
  double inv_l = 0.0;
  double inv_tau_rect = 0.0;
  double inv_tau_mid = 0.0;
  double inv_tau_asym = 0.0;
  double clock_sign = -1.0;  // frozen copy of det.clock_level for the step
};

enum class EventKind { FaultActivate = 0, NvmLoad = 1, RegulationTick = 2, End = 3 };

struct Event {
  double t = 0.0;
  EventKind kind = EventKind::End;
};

struct WindowAcc {
  double sum_sq = 0.0;
  double sum_abs_ip1 = 0.0;
  long long n = 0;
  double peak = 0.0;
  long long crossings = 0;
  double first_cross = 0.0;
  double last_cross = 0.0;
  int code_changes = 0;
  double max_pin = 0.0;      // unsupplied loading, whole run
  double win_max_pin = 0.0;  // unsupplied loading, window only
};

struct PinCurrents {
  double i1 = 0.0;
  double i2 = 0.0;
};

PinCurrents pin_currents(const SysModel& m, double v1, double v2,
                         const faults::UnsuppliedPinModel& up) {
  PinCurrents out;
  if (m.fx.unsupplied) {
    out.i1 = -faults::unsupplied_pin_current(v1, up);
    out.i2 = -faults::unsupplied_pin_current(v2, up);
    return out;
  }
  const double v_cm = 0.5 * (v1 + v2);
  const double i_cm = tank::common_mode_current(v_cm, m.drv);
  out.i1 = tank::driver_current(v1, v_cm, m.drv) + i_cm;
  out.i2 = tank::driver_current(v2, v_cm, m.drv) + i_cm;
  return out;
}

class Engine {
 public:
  explicit Engine(const scenario::Scenario& s) : s_(s) {
    nsys_ = s_.dual_enabled ? 2 : 1;
    detcfg_ = scenario::resolved_detectors(s_);
    up_ = s_.fault.pin_model;
    win_start_ = s_.t_end - s_.measure_window;

    init_system(0, scenario::effective_network(s_.network), s_.reg.nvm_code);
    if (nsys_ == 2) {
      const int b_nvm = s_.b_nvm_code >= 0 ? s_.b_nvm_code : s_.reg.nvm_code;
      init_system(1, scenario::effective_network(scenario::system_b_network(s_)), b_nvm);
      const double la = sys_[0].base_net.l_osc;
      const double lb = sys_[1].base_net.l_osc;
      const double m = s_.k_c * std::sqrt(la * lb);
      const double det = la * lb - m * m;
      c_aa_ = lb / det;
      c_ab_ = -m / det;
      c_bb_ = la / det;
    }

    trace_.summary.f_res = tank::resonant_frequency(sys_[0].base_net);
    trace_.summary.g_m0 = tank::critical_gm(sys_[0].base_net).value;
    trace_.summary.g_lin = s_.g_lin;
    trace_.summary.t_end = s_.t_end;
    trace_.summary.dt = s_.dt;
    trace_.summary.measure_window = s_.measure_window;
    trace_.summary.dual = nsys_ == 2;
  }

  Trace execute() {
    build_events();
    push_sample(0.0);
    double t_cursor = 0.0;
    for (const Event& ev : events_) {
      integrate_segment(t_cursor, ev.t);
      t_cursor = ev.t;
      handle_event(ev);
    }
    finish_summary();
    return std::move(trace_);
  }

 private:
  void init_system(int idx, const tank::TankParams& net, int nvm_code) {
    SysModel& m = sys_[idx];
    m.base_net = net;
    m.net = net;
    m.nvm_code = nvm_code;
    m.regp = s_.reg;
    m.regp.nvm_code = nvm_code;
    m.drv.g_lin = s_.g_lin;
    m.drv.v_ref = s_.v_ref;
    m.drv.g_cm = s_.g_cm;
    m.drv.active_halfwidth = s_.active_halfwidth;
    m.drv.enabled = s_.driver_enabled;
    regulation::power_on(m.reg);
    refresh_limit(m);

    const bool dead_from_start = s_.fault.kind == faults::FaultKind::SupplyLoss &&
                                 s_.fault.t_activate == 0.0 && s_.fault.system == idx;
    double* q = y_.data() + kPerSys * idx;
    if (dead_from_start) {
      q[0] = q[1] = q[2] = q[3] = q[4] = q[5] = 0.0;
    } else {
      q[0] = s_.v_ref + 1e-3;
      q[1] = s_.v_ref - 1e-3;
      q[2] = 0.0;
      q[3] = s_.v_ref;
      q[4] = s_.v_ref;
      q[5] = 0.0;
    }
    refresh_coeffs(m);
  }

  void refresh_limit(SysModel& m) {
    if (s_.reg.enabled) {
      m.i_limit = std::max(0.0, dac::limit_current(m.reg.code, s_.dac_cfg));
    } else {
      m.i_limit = s_.i_m;
    }
    m.drv.i_m = m.i_limit;
  }

  void refresh_coeffs(SysModel& m) {
    m.inv_c1 = 1.0 / m.net.c_osc1;
    m.inv_c2 = 1.0 / m.net.c_osc2;
    m.inv_l = 1.0 / m.net.l_osc;
    m.inv_tau_rect = 1.0 / s_.reg.tau_rect;
    m.inv_tau_mid = 1.0 / s_.reg.tau_mid;
    m.inv_tau_asym = 1.0 / detcfg_.tau_asym;
    m.clock_sign = static_cast<double>(m.det.clock_level);
  }

  void build_events() {
    if (s_.fault.kind != faults::FaultKind::None && s_.fault.t_activate <= s_.t_end) {
      events_.push_back({s_.fault.t_activate, EventKind::FaultActivate});
    }
    if (s_.reg.t_nvm <= s_.t_end) {
      events_.push_back({s_.reg.t_nvm, EventKind::NvmLoad});
    }
    const long long n_ticks =
        static_cast<long long>(std::floor(s_.t_end / s_.reg.tick_period + 1e-9));
    for (long long k = 1; k <= n_ticks; ++k) {
      events_.push_back({static_cast<double>(k) * s_.reg.tick_period, EventKind::RegulationTick});
    }
    events_.push_back({s_.t_end, EventKind::End});
    std::stable_sort(events_.begin(), events_.end(), [](const Event& a, const Event& b) {
      if (a.t != b.t) return a.t < b.t;
      return static_cast<int>(a.kind) < static_cast<int>(b.kind);
    });
  }

  void handle_event(const Event& ev) {
    switch (ev.kind) {
      case EventKind::FaultActivate: {
        for (int i = 0; i < nsys_; ++i) {
          SysModel& m = sys_[i];
          faults::SystemEffects fx;
          faults::apply_fault(fx, s_.fault, i, s_.vdd);
          m.fx = fx;
          m.net = m.base_net;
          if (fx.c1_scale_to > 0.0) m.net.c_osc1 = fx.c1_scale_to;
          if (fx.c2_scale_to > 0.0) m.net.c_osc2 = fx.c2_scale_to;
          m.net.r_s *= fx.r_s_multiplier;
          if (fx.coil_open) y_[kPerSys * i + 2] = 0.0;
          m.drv.enabled = s_.driver_enabled && fx.driver_alive;
          if (fx.regulation_frozen) m.reg.frozen = true;
          refresh_coeffs(m);
        }
        break;
      }
      case EventKind::NvmLoad: {
        for (int i = 0; i < nsys_; ++i) {
          SysModel& m = sys_[i];
          if (!s_.reg.enabled || m.reg.frozen) continue;
          regulation::load_nvm(m.reg, m.nvm_code);
          refresh_limit(m);
        }
        break;
      }
      case EventKind::RegulationTick: {
        ++trace_.summary.ticks_executed;
        for (int i = 0; i < nsys_; ++i) {
          SysModel& m = sys_[i];
          if (!s_.reg.enabled || m.reg.frozen) continue;
          const double* q = y_.data() + kPerSys * i;
          const double v_dc1 = q[3];
          const double v_r1 = q[4];
          const double level = v_dc1 - v_r1;
          const auto refs = regulation::window_refs(v_r1, m.regp);
          const auto cmp = regulation::window_compare(v_dc1, refs);
          const int code_before = m.reg.code;
          regulation::tick(m.reg, cmp);
          if (m.reg.code != code_before) {
            refresh_limit(m);
            if (ev.t >= win_start_ - 1e-15) ++acc_[i].code_changes;
          }
          TickRecord rec;
          rec.t = ev.t;
          rec.level = level;
          rec.comparison = cmp == regulation::Comparison::Below   ? -1
                           : cmp == regulation::Comparison::Above ? 1
                                                                  : 0;
          rec.code_after = m.reg.code;
          (i == 0 ? trace_.ticks_a : trace_.ticks_b).push_back(rec);
          detectors::low_amplitude_tick(m.det, level, detcfg_, ev.t);
          if (m.det.low_amplitude.fired) m.reg.fault_latched = true;
        }
        break;
      }
      case EventKind::End:
        break;
    }
  }

  void integrate_segment(double ta, double tb) {
    const double span = tb - ta;
    if (span <= 0.0) return;
    const double dt = s_.dt;
    const long long n = static_cast<long long>(std::ceil(span / dt - 1e-12));
    double t_prev = ta;
    for (long long i = 1; i <= n; ++i) {
      const double t_next = std::min(ta + static_cast<double>(i) * dt, tb);
      const double h = t_next - t_prev;
      if (h <= 0.0) continue;
      advance(t_prev, t_next, h);
      t_prev = t_next;
    }
  }

  void eval(const double* y, double* dy) const {
    double e_coil[2] = {0.0, 0.0};
    for (int i = 0; i < nsys_; ++i) {
      const SysModel& m = sys_[i];
      const double* q = y + kPerSys * i;
      double* dq = dy + kPerSys * i;
      const double v1 = q[0];
      const double v2 = q[1];
      const double i_l = q[2];

      PinCurrents ip = pin_currents(m, v1, v2, up_);
      if (m.fx.short_pin == 1) {
        ip.i1 += (m.fx.short_voltage - v1) / faults::kShortResistance;
      } else if (m.fx.short_pin == 2) {
        ip.i2 += (m.fx.short_voltage - v2) / faults::kShortResistance;
      }

      double i_branch;
      if (m.fx.coil_open) {
        i_branch = (v1 - v2) / faults::kOpenCoilResistance;
        dq[2] = 0.0;
      } else {
        i_branch = i_l;
        e_coil[i] = v1 - v2 - m.net.r_s * i_l;
        dq[2] = e_coil[i] * m.inv_l;  // overwritten below for coupled coils
      }
      dq[0] = (-i_branch + ip.i1) * m.inv_c1;
      dq[1] = (i_branch + ip.i2) * m.inv_c2;

      const double mid = 0.5 * (v1 + v2);
      const double rect = v1 > v2 ? v1 : v2;
      dq[3] = (rect - q[3]) * m.inv_tau_rect;
      dq[4] = (mid - q[4]) * m.inv_tau_mid;
      dq[5] = ((mid - q[4]) * m.clock_sign - q[5]) * m.inv_tau_asym;
    }
    if (nsys_ == 2 && !sys_[0].fx.coil_open && !sys_[1].fx.coil_open) {
      dy[2] = c_aa_ * e_coil[0] + c_ab_ * e_coil[1];
      dy[kPerSys + 2] = c_ab_ * e_coil[0] + c_bb_ * e_coil[1];
    }
  }

  void advance(double t_prev, double t_now, double h) {
    const int n = kPerSys * nsys_;
    double vd_prev[2];
    for (int i = 0; i < nsys_; ++i) {
      vd_prev[i] = y_[kPerSys * i] - y_[kPerSys * i + 1];
    }

    double k1[kMaxStates], k2[kMaxStates], k3[kMaxStates], k4[kMaxStates], tmp[kMaxStates];
    eval(y_.data(), k1);
    const double h2 = 0.5 * h;
    for (int j = 0; j < n; ++j) tmp[j] = y_[j] + h2 * k1[j];
    eval(tmp, k2);
    for (int j = 0; j < n; ++j) tmp[j] = y_[j] + h2 * k2[j];
    eval(tmp, k3);
    for (int j = 0; j < n; ++j) tmp[j] = y_[j] + h * k3[j];
    eval(tmp, k4);
    const double h6 = h / 6.0;
    for (int j = 0; j < n; ++j) {
      y_[j] += h6 * (k1[j] + 2.0 * (k2[j] + k3[j]) + k4[j]);
    }

    for (int j = 0; j < n; ++j) {
      if (!std::isfinite(y_[j])) {
        throw SimAbort("non-finite state component " + std::to_string(j) + " at t = " +
                       csv::fmt(t_now) + " s (step " + std::to_string(steps_ + 1) + ")");
      }
    }

    const bool in_window = t_now >= win_start_ - 1e-15;
    for (int i = 0; i < nsys_; ++i) {
      SysModel& m = sys_[i];
      WindowAcc& acc = acc_[i];
      const double* q = y_.data() + kPerSys * i;
      const double vd = q[0] - q[1];

      detectors::clock_update(m.det, t_prev, vd_prev[i], t_now, vd, detcfg_);
      m.clock_sign = static_cast<double>(m.det.clock_level);
      const bool missing_before = m.det.missing_osc.fired;
      detectors::watchdog_check(m.det, detcfg_, t_now);
      if (!missing_before && m.det.missing_osc.fired && !m.reg.frozen) {
        m.reg.fault_latched = true;
      }
      detectors::asymmetry_update(m.det, q[5], detcfg_, h, t_now);

      if (m.fx.unsupplied) {
        const double ip = std::max(std::abs(faults::unsupplied_pin_current(q[0], up_)),
                                   std::abs(faults::unsupplied_pin_current(q[1], up_)));
        acc.max_pin = std::max(acc.max_pin, ip);
        if (in_window) acc.win_max_pin = std::max(acc.win_max_pin, ip);
      }

      if (in_window) {
        acc.sum_sq += vd * vd;
        acc.n += 1;
        acc.peak = std::max(acc.peak, std::abs(vd));
        const PinCurrents ip = pin_currents(m, q[0], q[1], up_);
        acc.sum_abs_ip1 += std::abs(ip.i1);
        if (vd_prev[i] < 0.0 && vd >= 0.0 && t_prev >= win_start_ - 1e-15) {
          const double frac = vd_prev[i] == vd ? 0.0 : -vd_prev[i] / (vd - vd_prev[i]);
          const double t_cross = t_prev + frac * (t_now - t_prev);
          if (acc.crossings == 0) acc.first_cross = t_cross;
          acc.last_cross = t_cross;
          ++acc.crossings;
        }
      }
    }

    ++steps_;
    if (steps_ % s_.decimation == 0) push_sample(t_now);
  }

  void push_sample(double t) {
    for (int i = 0; i < nsys_; ++i) {
      const SysModel& m = sys_[i];
      const double* q = y_.data() + kPerSys * i;
      Sample smp;
      smp.t = t;
      smp.v1 = static_cast<float>(q[0]);
      smp.v2 = static_cast<float>(q[1]);
      smp.i_l = static_cast<float>(q[2]);
      const PinCurrents ip = pin_currents(m, q[0], q[1], up_);
      smp.i_pin1 = static_cast<float>(ip.i1);
      smp.i_pin2 = static_cast<float>(ip.i2);
      smp.v_dc1 = static_cast<float>(q[3]);
      smp.v_r1 = static_cast<float>(q[4]);
      smp.asym_lp = static_cast<float>(q[5]);
      smp.i_limit = static_cast<float>(m.i_limit);
      smp.code = m.reg.code;
      smp.flag_missing = m.det.missing_osc.fired;
      smp.flag_lowamp = m.det.low_amplitude.fired;
      smp.flag_asym = m.det.asymmetry.fired;
      (i == 0 ? trace_.a : trace_.b).push_back(smp);
    }
  }

  void finish_summary() {
    trace_.summary.steps = steps_;
    for (int i = 0; i < nsys_; ++i) {
      const SysModel& m = sys_[i];
      const WindowAcc& acc = acc_[i];
      SystemSummary& out = i == 0 ? trace_.summary.a : trace_.summary.b;
      out.final_code = m.reg.code;
      out.fault_latched = m.reg.fault_latched;
      out.regulation_frozen = m.reg.frozen;
      out.missing_osc = m.det.missing_osc;
      out.low_amplitude = m.det.low_amplitude;
      out.asymmetry = m.det.asymmetry;
      if (acc.n > 0) {
        out.rms_diff = std::sqrt(acc.sum_sq / static_cast<double>(acc.n));
        out.peak_diff = acc.peak;
        out.mean_abs_ipin1 = acc.sum_abs_ip1 / static_cast<double>(acc.n);
      }
      if (acc.crossings >= 4 && acc.last_cross > acc.first_cross) {
        out.has_frequency = true;
        out.frequency =
            static_cast<double>(acc.crossings - 1) / (acc.last_cross - acc.first_cross);
      }
      out.window_code_changes = acc.code_changes;
      out.max_abs_pin_current = acc.max_pin;
      out.window_max_abs_pin_current = acc.win_max_pin;
    }
  }

  scenario::Scenario s_;
  int nsys_ = 1;
  detectors::DetectorConfig detcfg_;
  faults::UnsuppliedPinModel up_;
  SysModel sys_[2];
  std::array<double, kMaxStates> y_{};
  double c_aa_ = 0.0, c_ab_ = 0.0, c_bb_ = 0.0;
  double win_start_ = 0.0;
  std::vector<Event> events_;
  WindowAcc acc_[2];
  long long steps_ = 0;
  Trace trace_;
};

}  // namespace

Trace run(const scenario::Scenario& raw) {
  const scenario::Scenario s = scenario::finalized(raw);
  Engine engine(s);
  return engine.execute();
}

Measurements measure(const std::vector<Sample>& samples, double window) {
  Measurements out;
  if (samples.empty()) return out;
  const double t_last = samples.back().t;
  const double start = t_last - window - 1e-15;

  double sum_sq = 0.0;
  double sum_abs = 0.0;
  long long n = 0;
  long long crossings = 0;
  double first_cross = 0.0;
  double last_cross = 0.0;
  bool have_prev = false;
  double prev_t = 0.0;
  double prev_vd = 0.0;
  int prev_code = 0;

  for (const Sample& s : samples) {
    if (s.t < start) continue;
    const double vd = static_cast<double>(s.v1) - static_cast<double>(s.v2);
    sum_sq += vd * vd;
    sum_abs += std::abs(static_cast<double>(s.i_pin1));
    ++n;
    out.peak_diff = std::max(out.peak_diff, std::abs(vd));
    if (have_prev) {
      if (s.code != prev_code) ++out.code_changes;
      if (prev_vd < 0.0 && vd >= 0.0) {
        const double frac = prev_vd == vd ? 0.0 : -prev_vd / (vd - prev_vd);
        const double t_cross = prev_t + frac * (s.t - prev_t);
        if (crossings == 0) first_cross = t_cross;
        last_cross = t_cross;
        ++crossings;
      }
    }
    have_prev = true;
    prev_t = s.t;
    prev_vd = vd;
    prev_code = s.code;
  }
  if (n > 0) {
    out.rms_diff = std::sqrt(sum_sq / static_cast<double>(n));
    out.mean_abs_ipin1 = sum_abs / static_cast<double>(n);
  }
  if (crossings >= 4 && last_cross > first_cross) {
    out.has_frequency = true;
    out.frequency = static_cast<double>(crossings - 1) / (last_cross - first_cross);
  }
  return out;
}

}  // namespace oscsim::sim
