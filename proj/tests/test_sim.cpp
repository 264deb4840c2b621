#include "doctest.h"

#include "oscsim/sim.hpp"
#include "oscsim/tank.hpp"

#include <cmath>
#include <string>
#include <vector>

using namespace oscsim;

namespace {

bool same_sample(const sim::Sample& a, const sim::Sample& b) {
  return a.t == b.t && a.v1 == b.v1 && a.v2 == b.v2 && a.i_l == b.i_l && a.i_pin1 == b.i_pin1 &&
         a.i_pin2 == b.i_pin2 && a.v_dc1 == b.v_dc1 && a.v_r1 == b.v_r1 &&
         a.asym_lp == b.asym_lp && a.i_limit == b.i_limit && a.code == b.code &&
         a.flag_missing == b.flag_missing && a.flag_lowamp == b.flag_lowamp &&
         a.flag_asym == b.flag_asym;
}

}  // namespace

TEST_CASE("identical scenarios produce bit-identical traces") {
  scenario::Scenario s;
  s.t_end = 2e-4;
  s.reg.tick_period = 1e-4;
  s.decimation = 7;
  const auto t1 = sim::run(s);
  const auto t2 = sim::run(s);
  REQUIRE(t1.a.size() == t2.a.size());
  for (size_t i = 0; i < t1.a.size(); ++i) {
    CHECK(same_sample(t1.a[i], t2.a[i]));
  }
  CHECK(t1.summary.steps == t2.summary.steps);
  CHECK(t1.summary.a.rms_diff == t2.summary.a.rms_diff);
  CHECK(t1.summary.a.frequency == t2.summary.a.frequency);
  CHECK(t1.ticks_a.size() == t2.ticks_a.size());
}

TEST_CASE("regulation ticks land on exact multiples of the tick period") {
  scenario::Scenario s;
  s.network.l_osc = 18e-6;  // slower tank keeps the step count small
  s.reg.tick_period = 1e-4;
  s.t_end = 1.05e-3;  // 10 whole ticks, the half tick does not fire
  const auto tr = sim::run(s);
  CHECK(tr.summary.ticks_executed == 10);
  REQUIRE(tr.ticks_a.size() == 10);
  for (size_t k = 0; k < tr.ticks_a.size(); ++k) {
    CHECK(tr.ticks_a[k].t == static_cast<double>(k + 1) * 1e-4);
  }
}

TEST_CASE("very short runs still record the initial sample") {
  scenario::Scenario s;
  s.t_end = 1e-9;
  const auto tr = sim::run(s);
  REQUIRE(tr.a.size() == 1);
  CHECK(tr.a[0].t == 0.0);
  CHECK(tr.a[0].code == 105);  // power-on value, NVM time never reached
  CHECK(tr.summary.ticks_executed == 0);

  scenario::Scenario s1 = s;
  s1.decimation = 1;
  const auto tr1 = sim::run(s1);
  REQUIRE(tr1.a.size() >= 2);
  CHECK(tr1.a.back().t == 1e-9);  // integration lands exactly on t_end
}

TEST_CASE("open loop regulates nothing and reproduces the amplitude law") {
  scenario::Scenario s;
  s.reg.enabled = false;
  s.i_m = 2.4e-3;
  s.reg.tick_period = 1e-4;
  s.t_end = 5e-4;
  const auto tr = sim::run(s);

  CHECK(tr.summary.ticks_executed == 5);
  CHECK(tr.ticks_a.empty());  // no window action in open loop
  CHECK(tr.summary.a.final_code == 105);
  CHECK_FALSE(tr.summary.a.low_amplitude.fired);
  CHECK_FALSE(tr.summary.a.fault_latched);
  for (const auto& smp : tr.a) {
    CHECK(smp.code == 105);
    CHECK(smp.i_limit == 2.4e-3f);
  }

  // Steady state: V_rms = 2k i_m / G_m0 with k = 2 sqrt(2)/pi.
  const double k = 2.0 * std::sqrt(2.0) / tank::kPi;
  const double expect = 2.0 * k * 2.4e-3 / 5.4e-3;
  CHECK(tr.summary.a.rms_diff == doctest::Approx(expect).epsilon(0.03));
  REQUIRE(tr.summary.a.has_frequency);
  CHECK(tr.summary.a.frequency ==
        doctest::Approx(tank::resonant_frequency(s.network)).epsilon(0.01));
}

TEST_CASE("summary window statistics agree with measure() on an undecimated trace") {
  scenario::Scenario s;
  s.t_end = 1e-4;
  s.decimation = 1;
  const auto tr = sim::run(s);
  const auto m = sim::measure(tr.a, tr.summary.measure_window);
  CHECK(m.rms_diff == doctest::Approx(tr.summary.a.rms_diff).epsilon(1e-4));
  CHECK(m.peak_diff == doctest::Approx(tr.summary.a.peak_diff).epsilon(1e-4));
  REQUIRE(m.has_frequency == tr.summary.a.has_frequency);
  CHECK(m.frequency == doctest::Approx(tr.summary.a.frequency).epsilon(1e-5));
}

TEST_CASE("a dead oscillator latches the watchdog and forces the fail-safe code") {
  scenario::Scenario s;
  s.driver_enabled = false;  // 2 mV initial offset stays under the 5 mV hysteresis
  s.reg.nvm_code = 50;
  s.reg.tick_period = 2e-4;
  s.t_end = 3e-4;
  const auto tr = sim::run(s);

  CHECK(tr.summary.a.missing_osc.fired);
  CHECK(tr.summary.a.missing_osc.time == 5e-6);  // last_edge 0 + timeout, exact
  CHECK(tr.summary.a.fault_latched);
  CHECK(tr.summary.a.final_code == 127);
  REQUIRE(tr.ticks_a.size() == 1);
  CHECK(tr.ticks_a[0].code_after == 127);
}

TEST_CASE("supply lost from t=0: frozen regulation, live watchdog, no latch") {
  scenario::Scenario s;
  s.fault.kind = faults::FaultKind::SupplyLoss;
  s.fault.system = 0;
  s.fault.t_activate = 0.0;
  s.reg.tick_period = 2e-4;
  s.t_end = 3e-4;
  const auto tr = sim::run(s);

  CHECK(tr.summary.a.regulation_frozen);
  CHECK(tr.summary.a.final_code == 105);  // NVM load suppressed while frozen
  CHECK(tr.summary.ticks_executed == 1);
  CHECK(tr.ticks_a.empty());  // frozen systems take no window action
  CHECK(tr.summary.a.missing_osc.fired);
  CHECK(tr.summary.a.missing_osc.time == doctest::Approx(5e-6));
  CHECK_FALSE(tr.summary.a.fault_latched);  // frozen register cannot latch
  CHECK_FALSE(tr.summary.a.low_amplitude.fired);
  CHECK_FALSE(tr.summary.a.asymmetry.fired);
  // Everything starts and stays at 0 V: no swing, no pin loading.
  CHECK(tr.summary.a.rms_diff == 0.0);
  CHECK_FALSE(tr.summary.a.has_frequency);
  CHECK(tr.summary.a.max_abs_pin_current == 0.0);
}

TEST_CASE("a coarse explicit step blows up and aborts cleanly") {
  scenario::Scenario s;
  s.reg.tick_period = 1.0;
  s.dt = 1e-2;  // thousands of oscillation periods per step
  s.t_end = 0.5;
  try {
    (void)sim::run(s);
    FAIL("expected SimAbort");
  } catch (const sim::SimAbort& e) {
    CHECK(std::string(e.what()).find("non-finite") != std::string::npos);
  }
}

TEST_CASE("identical coupled systems stay in lockstep on the in-phase mode") {
  scenario::Scenario s;
  s.dual_enabled = true;
  s.k_c = 0.2;
  s.network.r_s = 0.1;       // slow ringdown: plenty of cycles to measure
  s.driver_enabled = false;  // passive tanks: the mode frequency is exact
  s.reg.nvm_code = 72;
  s.t_end = 5e-5;
  s.measure_window = 2e-5;
  const auto tr = sim::run(s);

  CHECK(tr.summary.dual);
  REQUIRE(tr.b.size() == tr.a.size());
  for (size_t i = 0; i < tr.a.size(); ++i) {
    CHECK(same_sample(tr.a[i], tr.b[i]));  // symmetry is exact, bit for bit
  }
  CHECK(tr.summary.b.final_code == 72);

  // Both systems start with the same polarity, so the coils carry in-phase
  // currents and each behaves as L(1 + k_c): the split mode at f0/sqrt(1.2).
  const double f0 = tank::resonant_frequency(s.network);
  REQUIRE(tr.summary.a.has_frequency);
  CHECK(tr.summary.a.frequency == doctest::Approx(f0 / std::sqrt(1.2)).epsilon(1e-4));
}

TEST_CASE("measure: synthetic sine and DC traces") {
  std::vector<sim::Sample> sine;
  const double f = 1e5;
  const double dt = 1e-7;
  for (int i = 0; i <= 10000; ++i) {
    sim::Sample smp;
    smp.t = i * dt;
    const double x = std::sin(2.0 * tank::kPi * f * smp.t);
    smp.v1 = static_cast<float>(2.5 + 0.5 * x);
    smp.v2 = static_cast<float>(2.5 - 0.5 * x);
    smp.i_pin1 = 1e-3f;
    smp.code = i > 7000 ? 1 : 0;
    sine.push_back(smp);
  }
  const auto m = sim::measure(sine, 5e-4);
  CHECK(m.rms_diff == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(0.003));
  CHECK(m.peak_diff == doctest::Approx(1.0).epsilon(0.005));
  REQUIRE(m.has_frequency);
  CHECK(m.frequency == doctest::Approx(1e5).epsilon(1e-6));
  CHECK(m.mean_abs_ipin1 == doctest::Approx(1e-3).epsilon(1e-6));
  CHECK(m.code_changes == 1);

  std::vector<sim::Sample> dc;
  for (int i = 0; i <= 100; ++i) {
    sim::Sample smp;
    smp.t = i * 1e-6;
    smp.v1 = 3.0f;
    smp.v2 = 2.5f;
    dc.push_back(smp);
  }
  const auto md = sim::measure(dc, 5e-5);
  CHECK(md.rms_diff == doctest::Approx(0.5).epsilon(1e-6));
  CHECK_FALSE(md.has_frequency);
  CHECK(md.code_changes == 0);

  const auto empty = sim::measure({}, 1e-3);
  CHECK(empty.rms_diff == 0.0);
  CHECK_FALSE(empty.has_frequency);
}
