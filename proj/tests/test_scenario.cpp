#include "doctest.h"

#include "oscsim/scenario.hpp"

#include <algorithm>
#include <string>

using namespace oscsim;

namespace {

bool mentions(const scenario::ScenarioError& e, const std::string& needle) {
  return std::any_of(e.violations.begin(), e.violations.end(), [&](const std::string& v) {
    return v.find(needle) != std::string::npos;
  });
}

}  // namespace

TEST_CASE("empty text parses to the default scenario") {
  const auto s = scenario::parse_scenario("");
  CHECK(s == scenario::Scenario{});
  CHECK(s.network.l_osc == 1.8e-6);
  CHECK(s.reg.nvm_code == 105);
  CHECK(s.decimation == 20);
}

TEST_CASE("unknown keys and malformed lines are reported with line numbers") {
  const std::string text =
      "[network]\n"
      "l_osc = 1e-6\n"
      "bogus = 3\n"
      "\n"
      "[sim]\n"
      "t_end\n";
  try {
    (void)scenario::parse_scenario(text);
    FAIL("expected ScenarioError");
  } catch (const scenario::ScenarioError& e) {
    REQUIRE(e.violations.size() == 2);
    CHECK(e.violations[0].find("line 3") != std::string::npos);
    CHECK(e.violations[0].find("unknown key network.bogus") != std::string::npos);
    CHECK(e.violations[1].find("line 6") != std::string::npos);
  }
}

TEST_CASE("finalized collects every violation at once") {
  scenario::Scenario s;
  s.network.r_s = -1.0;
  s.reg.nvm_code = 200;
  s.decimation = 0;
  s.t_end = -1.0;
  try {
    (void)scenario::finalized(s);
    FAIL("expected ScenarioError");
  } catch (const scenario::ScenarioError& e) {
    CHECK(e.violations.size() >= 4);
    CHECK(mentions(e, "network.r_s"));
    CHECK(mentions(e, "regulation.nvm_code"));
    CHECK(mentions(e, "sim.decimation"));
    CHECK(mentions(e, "sim.t_end"));
  }
}

TEST_CASE("window narrower than the largest amplitude step is rejected") {
  scenario::Scenario s;
  s.reg.window_low_frac = 0.975;
  s.reg.window_high_frac = 1.025;
  try {
    (void)scenario::finalized(s);
    FAIL("expected ScenarioError");
  } catch (const scenario::ScenarioError& e) {
    CHECK(mentions(e, "1/16"));
  }
}

TEST_CASE("auto-derived driver and sim values") {
  scenario::Scenario raw;
  const auto s = scenario::finalized(raw);
  CHECK(s.v_ref == doctest::Approx(2.5));
  // 50x the sustaining transconductance of the default network.
  CHECK(s.g_lin == doctest::Approx(50.0 * 5.4e-3).epsilon(1e-12));
  // min(1/(500 f_res), tick/100) with f_res = 3.2286205 MHz.
  CHECK(s.dt == doctest::Approx(6.1946167e-10).epsilon(1e-6));
  CHECK(s.measure_window == doctest::Approx(0.2 * s.t_end).epsilon(1e-12));
  // Finalization is idempotent.
  CHECK(scenario::finalized(s) == s);
}

TEST_CASE("explicit dt coarser than a hundredth of a tick is rejected") {
  scenario::Scenario s;
  s.dt = 2e-5;  // tick_period/100 = 1e-5
  try {
    (void)scenario::finalized(s);
    FAIL("expected ScenarioError");
  } catch (const scenario::ScenarioError& e) {
    CHECK(mentions(e, "tick_period/100"));
  }
}

TEST_CASE("open loop requires an explicit current limit") {
  scenario::Scenario s;
  s.reg.enabled = false;
  CHECK_THROWS_AS((void)scenario::finalized(s), scenario::ScenarioError);
  s.i_m = 2.4e-3;
  CHECK_NOTHROW((void)scenario::finalized(s));
}

TEST_CASE("overrides") {
  scenario::Scenario s;
  scenario::apply_override(s, "network.r_s=7.25");
  CHECK(s.network.r_s == 7.25);
  scenario::apply_override(s, "fault.kind=open_coil");
  CHECK(s.fault.kind == faults::FaultKind::OpenCoil);
  scenario::apply_override(s, "fault.system=B");
  CHECK(s.fault.system == 1);
  CHECK_THROWS_AS(scenario::apply_override(s, "network.r_s"), scenario::ScenarioError);
  CHECK_THROWS_AS(scenario::apply_override(s, "nosection=1"), scenario::ScenarioError);
  CHECK_THROWS_AS(scenario::apply_override(s, "network.nokey=1"), scenario::ScenarioError);
  CHECK_THROWS_AS(scenario::apply_override(s, "network.r_s=abc"), scenario::ScenarioError);
}

TEST_CASE("emit/parse round trip preserves a non-default scenario") {
  scenario::Scenario s;
  s.network.l_osc = 4.7e-6;
  s.network.c_osc1 = 1.0e-9;
  s.network.c_osc2 = 1.2e-9;
  s.network.r_s = 2.2;
  s.g_lin = 0.05;
  s.i_m = 1.7e-3;
  s.driver_enabled = false;
  s.dac_cfg.dnl_injection = {{96, -40}, {64, 12}};
  s.reg.enabled = false;
  s.reg.v_set_rms = 1.1;
  s.reg.nvm_code = 33;
  s.v_low_abs = 0.05;
  s.fault.kind = faults::FaultKind::PinShortToSupply;
  s.fault.t_activate = 3e-3;
  s.fault.pin = 2;
  s.fault.system = 1;
  s.fault.pin_model = faults::unsupplied_preset("fig10a");
  s.dual_enabled = true;
  s.k_c = 0.15;
  s.b_r_s = 4.4;
  s.b_nvm_code = 77;
  s.dt = 1e-9;
  s.t_end = 5e-3;
  s.decimation = 100;
  s.seed = 42;
  s.measure_window = 1e-3;

  const std::string text = scenario::emit_scenario(s);
  const auto back = scenario::parse_scenario(text);
  CHECK(back == s);
}

TEST_CASE("zero capacitance means absent: replaced by the parasitic") {
  tank::TankParams p;
  p.c_osc2 = 0.0;
  const auto eff = scenario::effective_network(p);
  CHECK(eff.c_osc1 == 2.7e-9);
  CHECK(eff.c_osc2 == doctest::Approx(10e-12));
}

TEST_CASE("system B network applies per-field overrides") {
  scenario::Scenario s;
  s.b_l_osc = 2.2e-6;
  s.b_c_osc2 = 0.0;
  const auto b = scenario::system_b_network(s);
  CHECK(b.l_osc == 2.2e-6);
  CHECK(b.c_osc1 == 2.7e-9);
  CHECK(b.c_osc2 == 0.0);
  CHECK(b.r_s == 3.6);
}

TEST_CASE("detector thresholds resolve from fractions or absolute overrides") {
  scenario::Scenario s;
  s.reg.v_set_rms = 0.8;  // set-point level 0.3601265265
  auto cfg = scenario::resolved_detectors(s);
  CHECK(cfg.v_low == doctest::Approx(0.1800632632).epsilon(1e-9));
  CHECK(cfg.v_asym == doctest::Approx(0.0360126526).epsilon(1e-8));
  s.v_low_abs = 0.2;
  s.v_asym_abs = 0.0;  // zero is a valid absolute threshold (asymmetry check disabled in effect)
  cfg = scenario::resolved_detectors(s);
  CHECK(cfg.v_low == 0.2);
  CHECK(cfg.v_asym == 0.0);
  CHECK(cfg.t_timeout == 5e-6);
  CHECK(cfg.hysteresis == 5e-3);
}

TEST_CASE("supply loss on system B requires the dual configuration") {
  scenario::Scenario s;
  s.fault.kind = faults::FaultKind::SupplyLoss;
  s.fault.system = 1;
  try {
    (void)scenario::finalized(s);
    FAIL("expected ScenarioError");
  } catch (const scenario::ScenarioError& e) {
    CHECK(mentions(e, "dual.enabled"));
  }
  s.dual_enabled = true;
  CHECK_NOTHROW((void)scenario::finalized(s));
}
