#include "oscsim/campaign.hpp"

#include "oscsim/csv.hpp"
#include "oscsim/dac.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

namespace oscsim::campaign {
namespace {

using nlohmann::ordered_json;

void parallel_for(int n, int threads, const std::function<void(int)>& body) {
  const int workers = std::max(1, std::min(threads, n));
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

ordered_json flag_json(const detectors::Flag& f) {
  ordered_json j;
  j["fired"] = f.fired;
  if (f.fired) j["time"] = f.time;
  return j;
}

ordered_json system_json(const sim::SystemSummary& s) {
  ordered_json j;
  j["final_code"] = s.final_code;
  j["fault_latched"] = s.fault_latched;
  j["regulation_frozen"] = s.regulation_frozen;
  j["flags"]["missing_osc"] = flag_json(s.missing_osc);
  j["flags"]["low_amplitude"] = flag_json(s.low_amplitude);
  j["flags"]["asymmetry"] = flag_json(s.asymmetry);
  ordered_json m;
  m["rms_diff"] = s.rms_diff;
  m["peak_diff"] = s.peak_diff;
  if (s.has_frequency) {
    m["frequency"] = s.frequency;
  } else {
    m["frequency"] = nullptr;
  }
  m["mean_abs_i_drv1"] = s.mean_abs_ipin1;
  m["window_code_changes"] = s.window_code_changes;
  j["measurements"] = m;
  j["unsupplied_pin_current_max"] = s.max_abs_pin_current;
  j["unsupplied_pin_current_window_max"] = s.window_max_abs_pin_current;
  return j;
}

const char* comma(bool& first) {
  if (first) {
    first = false;
    return "";
  }
  return ",";
}

void write_sample_block(std::ostream& os, const sim::Sample& s, bool& first) {
  const float v_diff = s.v1 - s.v2;
  os << comma(first) << csv::fmt(s.v1) << ',' << csv::fmt(s.v2) << ',' << csv::fmt(v_diff) << ','
     << csv::fmt(s.i_l) << ',' << csv::fmt(s.i_pin1) << ',' << csv::fmt(s.i_pin2) << ','
     << csv::fmt(s.code) << ',' << csv::fmt(s.i_limit) << ',' << csv::fmt(s.v_dc1) << ','
     << (s.flag_missing ? '1' : '0') << ',' << (s.flag_lowamp ? '1' : '0') << ','
     << (s.flag_asym ? '1' : '0');
}

std::string no_commas(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  return s;
}

struct FlagTimeLess {
  bool operator()(const FlagEvent& a, const FlagEvent& b) const { return a.time < b.time; }
};

std::string describe_flag(const FlagEvent& f) {
  std::string s = f.name;
  s += f.system == 0 ? "(A)" : "(B)";
  s += "@";
  s += csv::fmt(f.time);
  return s;
}

faults::FaultKind kind_from_name(const std::string& name, bool& ok) {
  using faults::FaultKind;
  for (FaultKind k : {FaultKind::None, FaultKind::OpenCoil, FaultKind::DegradedQ,
                      FaultKind::MissingC1, FaultKind::MissingC2, FaultKind::SupplyLoss,
                      FaultKind::PinShortToGround, FaultKind::PinShortToSupply}) {
    if (name == faults::fault_name(k)) {
      ok = true;
      return k;
    }
  }
  ok = false;
  return FaultKind::None;
}

bool valid_expected(const std::string& s) {
  return s == "none" || s == "missing_osc" || s == "low_amplitude" || s == "asymmetry";
}

bool valid_deadline_class(const std::string& s) {
  return s == "none" || s == "watchdog" || s == "slow";
}

std::string trimmed(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

RowObservation observe(const sim::Trace& tr, const scenario::Scenario& fin) {
  RowObservation o;
  o.t_activate = fin.fault.t_activate;
  o.t_timeout = fin.t_timeout;
  o.f_res = tr.summary.f_res;
  o.tick_period = fin.reg.tick_period;
  o.dual = tr.summary.dual;
  o.b_frozen = tr.summary.b.regulation_frozen;
  auto add = [&o](const detectors::Flag& f, const char* name, int sys) {
    if (f.fired) o.flags.push_back({name, sys, f.time});
  };
  add(tr.summary.a.missing_osc, "missing_osc", 0);
  add(tr.summary.a.low_amplitude, "low_amplitude", 0);
  add(tr.summary.a.asymmetry, "asymmetry", 0);
  if (o.dual) {
    add(tr.summary.b.missing_osc, "missing_osc", 1);
    add(tr.summary.b.low_amplitude, "low_amplitude", 1);
    add(tr.summary.b.asymmetry, "asymmetry", 1);
  }
  std::stable_sort(o.flags.begin(), o.flags.end(), FlagTimeLess{});
  for (const auto& t : tr.ticks_a) {
    if (t.code_after == regulation::kFailSafeCode && t.t >= fin.fault.t_activate) {
      o.fail_safe_time = t.t;
      break;
    }
  }
  return o;
}

}  // namespace

std::string summary_json(const sim::Summary& s) {
  ordered_json j;
  j["t_end"] = s.t_end;
  j["dt"] = s.dt;
  j["measure_window"] = s.measure_window;
  j["f_res"] = s.f_res;
  j["g_m0"] = s.g_m0;
  j["g_lin"] = s.g_lin;
  j["steps"] = s.steps;
  j["ticks_executed"] = s.ticks_executed;
  j["dual"] = s.dual;
  j["a"] = system_json(s.a);
  if (s.dual) j["b"] = system_json(s.b);
  return j.dump(2) + "\n";
}

void write_trace_csv(std::ostream& os, const sim::Trace& trace) {
  const char* block =
      "v1,v2,v_diff,i_coil,i_drv1,i_drv2,code,i_limit_A,v_dc1,"
      "flag_missing,flag_lowamp,flag_asym";
  os << "t," << block;
  if (trace.summary.dual) {
    os << ",v1_b,v2_b,v_diff_b,i_coil_b,i_drv1_b,i_drv2_b,code_b,i_limit_A_b,v_dc1_b,"
          "flag_missing_b,flag_lowamp_b,flag_asym_b";
  }
  os << '\n';
  for (size_t i = 0; i < trace.a.size(); ++i) {
    bool first = true;
    os << csv::fmt(trace.a[i].t) << ',';
    write_sample_block(os, trace.a[i], first);
    if (trace.summary.dual) {
      first = false;
      write_sample_block(os, trace.b[i], first);
    }
    os << '\n';
  }
}

void write_dac_table(std::ostream& os) {
  const dac::DacConfig clean;
  const dac::StepProfile profile = dac::step_profile(clean);
  os << "code,oscD,oscE,oscF,units,amperes,delta_percent\n";
  for (int code = 0; code < dac::kNumCodes; ++code) {
    const dac::ControlBuses buses = dac::decompose(code);
    const long long units = dac::limit_current_units(code, clean);
    const double amps = dac::limit_current(code, clean);
    const double delta = (code >= 1 && code <= 126) ? profile.delta[code] : 0.0;
    os << csv::fmt(code) << ',' << csv::fmt(buses.osc_d) << ',' << csv::fmt(buses.osc_e) << ','
       << csv::fmt(buses.osc_f) << ',' << csv::fmt(units) << ',' << csv::fmt(amps) << ','
       << csv::fmt(delta * 100.0) << '\n';
  }
}

int campaign_threads() {
  if (const char* env = std::getenv("OSC_SIM_THREADS"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != nullptr && *end == '\0' && v >= 0) {
      return v == 0 ? 1 : static_cast<int>(std::min<long>(v, 64));
    }
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

std::vector<FmeaExpectation> default_fmea_matrix() {
  using faults::FaultKind;
  return {
      {FaultKind::None, "none", "none"},
      {FaultKind::OpenCoil, "missing_osc", "watchdog"},
      {FaultKind::DegradedQ, "low_amplitude", "slow"},
      {FaultKind::MissingC1, "asymmetry", "slow"},
      {FaultKind::MissingC2, "asymmetry", "slow"},
      {FaultKind::SupplyLoss, "none", "none"},
      {FaultKind::PinShortToGround, "missing_osc", "slow"},
      {FaultKind::PinShortToSupply, "missing_osc", "slow"},
  };
}

std::vector<FmeaExpectation> parse_fmea_matrix(const std::string& text) {
  std::vector<FmeaExpectation> matrix;
  std::vector<std::string> errors;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trimmed(line);
    if (t.empty() || t[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      if (t.find("fault") == 0) continue;  // optional header row
    }
    std::vector<std::string> fields;
    std::istringstream ls(t);
    std::string field;
    while (std::getline(ls, field, ',')) fields.push_back(trimmed(field));
    if (fields.size() != 3) {
      errors.push_back("matrix line " + std::to_string(line_no) +
                       ": expected fault,expected_detector,deadline_class");
      continue;
    }
    FmeaExpectation exp;
    bool ok = false;
    exp.kind = kind_from_name(fields[0], ok);
    if (!ok) {
      errors.push_back("matrix line " + std::to_string(line_no) + ": unknown fault '" +
                       fields[0] + "'");
    }
    exp.expected = fields[1];
    if (!valid_expected(exp.expected)) {
      errors.push_back("matrix line " + std::to_string(line_no) + ": unknown detector '" +
                       fields[1] + "'");
    }
    exp.deadline_class = fields[2];
    if (!valid_deadline_class(exp.deadline_class)) {
      errors.push_back("matrix line " + std::to_string(line_no) + ": unknown deadline class '" +
                       fields[2] + "'");
    }
    if ((exp.expected == "none") != (exp.deadline_class == "none")) {
      errors.push_back("matrix line " + std::to_string(line_no) +
                       ": deadline class must be 'none' exactly when no detector is expected");
    }
    matrix.push_back(exp);
  }
  if (!errors.empty()) throw scenario::ScenarioError(std::move(errors));
  if (matrix.empty()) throw scenario::ScenarioError({"fault matrix is empty"});
  return matrix;
}

std::string format_fmea_matrix(const std::vector<FmeaExpectation>& matrix) {
  std::string out = "fault,expected_detector,deadline_class\n";
  for (const auto& e : matrix) {
    out += faults::fault_name(e.kind);
    out += ',';
    out += e.expected;
    out += ',';
    out += e.deadline_class;
    out += '\n';
  }
  return out;
}

RowVerdict evaluate_row(const FmeaExpectation& exp, const RowObservation& obs) {
  RowVerdict v;
  v.detected = "none";
  v.fail_safe_required = exp.expected == "missing_osc" || exp.expected == "low_amplitude";
  if (exp.deadline_class == "watchdog") {
    v.deadline = obs.t_activate + obs.t_timeout + 1.0 / obs.f_res;
  } else if (exp.deadline_class == "slow") {
    v.deadline = obs.t_activate + 5e-3;
  }

  std::vector<FlagEvent> flags = obs.flags;
  std::stable_sort(flags.begin(), flags.end(), FlagTimeLess{});

  if (exp.expected == "none") {
    if (!flags.empty()) {
      v.reason = "no flag expected but " + describe_flag(flags.front()) + " fired";
      return v;
    }
    if (exp.kind == faults::FaultKind::SupplyLoss && !(obs.dual && obs.b_frozen)) {
      v.reason = "system B regulation must be frozen after supply loss";
      return v;
    }
    v.pass = true;
    return v;
  }

  const FlagEvent* hit = nullptr;
  for (const auto& f : flags) {
    if (f.system == 0 && f.name == exp.expected) {
      hit = &f;
      break;
    }
  }
  if (hit == nullptr) {
    v.reason = "expected " + exp.expected + " never fired";
    return v;
  }
  v.detected = hit->name;
  v.detection_time = hit->time;
  if (hit->time > v.deadline) {
    v.reason = exp.expected + " fired at " + csv::fmt(hit->time) + " s; deadline " +
               csv::fmt(v.deadline) + " s";
    return v;
  }
  for (const auto& f : flags) {
    if (&f == hit) continue;
    if (f.time < hit->time) {
      v.reason = "unexpected " + describe_flag(f) + " before the expected detector";
      return v;
    }
  }
  if (v.fail_safe_required) {
    if (obs.fail_safe_time < 0.0) {
      v.reason = "code never reached the fail-safe value after detection";
      return v;
    }
    if (obs.fail_safe_time - hit->time > obs.tick_period * (1.0 + 1e-9)) {
      v.reason = "fail-safe code reached at " + csv::fmt(obs.fail_safe_time) +
                 " s, more than one tick after detection at " + csv::fmt(hit->time) + " s";
      return v;
    }
  }
  v.pass = true;
  return v;
}

FmeaReport run_fmea(const scenario::Scenario& base, const std::vector<FmeaExpectation>& matrix,
                    int threads) {
  FmeaReport report;
  report.rows.resize(matrix.size());
  parallel_for(static_cast<int>(matrix.size()), threads, [&](int i) {
    FmeaRow& row = report.rows[i];
    row.exp = matrix[i];
    try {
      scenario::Scenario sc = base;
      sc.fault.kind = row.exp.kind;
      if (row.exp.kind == faults::FaultKind::DegradedQ) sc.fault.r_s_multiplier = 20.0;
      if (row.exp.kind == faults::FaultKind::SupplyLoss) {
        sc.dual_enabled = true;
        sc.fault.system = 1;
      }
      sc.decimation = 1000000000;  // reports need summaries and ticks, not waveforms
      const scenario::Scenario fin = scenario::finalized(sc);
      const sim::Trace tr = sim::run(fin);
      row.obs = observe(tr, fin);
      row.verdict = evaluate_row(row.exp, row.obs);
    } catch (const std::exception& e) {
      row.error = e.what();
      row.verdict.pass = false;
      row.verdict.reason = std::string("run failed: ") + e.what();
    }
  });

  int detector_rows = 0;
  int detector_passed = 0;
  for (const auto& row : report.rows) {
    if (row.verdict.pass) ++report.rows_passed;
    if (row.exp.expected != "none") {
      ++detector_rows;
      if (row.verdict.pass) ++detector_passed;
    }
  }
  report.coverage = detector_rows > 0
                        ? static_cast<double>(detector_passed) / static_cast<double>(detector_rows)
                        : 1.0;
  report.all_pass = report.rows_passed == static_cast<int>(report.rows.size());
  return report;
}

void write_fmea_csv(std::ostream& os, const FmeaReport& report) {
  os << "fault,expected_detector,deadline_class,deadline_s,detected,detection_time_s,"
        "fail_safe_required,fail_safe_time_s,b_frozen,other_flags,verdict,reason\n";
  for (const auto& row : report.rows) {
    os << faults::fault_name(row.exp.kind) << ',' << row.exp.expected << ','
       << row.exp.deadline_class << ',';
    if (row.verdict.deadline >= 0.0) os << csv::fmt(row.verdict.deadline);
    os << ',' << row.verdict.detected << ',';
    if (row.verdict.detection_time >= 0.0) os << csv::fmt(row.verdict.detection_time);
    os << ',' << (row.verdict.fail_safe_required ? 1 : 0) << ',';
    if (row.obs.fail_safe_time >= 0.0) os << csv::fmt(row.obs.fail_safe_time);
    os << ',' << (row.obs.dual ? (row.obs.b_frozen ? "1" : "0") : "") << ',';
    bool first = true;
    for (const auto& f : row.obs.flags) {
      if (row.verdict.detection_time >= 0.0 && f.system == 0 && f.name == row.verdict.detected &&
          f.time == row.verdict.detection_time) {
        continue;
      }
      if (!first) os << ';';
      os << describe_flag(f);
      first = false;
    }
    os << ',' << (row.verdict.pass ? "PASS" : "FAIL") << ',' << no_commas(row.verdict.reason)
       << '\n';
  }
}

void write_fmea_text(std::ostream& os, const FmeaReport& report) {
  const auto ms = [](double seconds) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f ms", seconds * 1e3);
    return std::string(buf);
  };
  os << "FMEA fault-matrix report\n";
  os << "------------------------\n";
  for (const auto& row : report.rows) {
    std::ostringstream line;
    line << std::left << std::setw(18) << faults::fault_name(row.exp.kind) << std::setw(15)
         << row.exp.expected;
    std::string detected = "-";
    if (row.verdict.detection_time >= 0.0) {
      detected = row.verdict.detected + " @ " + ms(row.verdict.detection_time);
    }
    line << std::setw(28) << detected;
    std::string fs = "-";
    if (row.obs.fail_safe_time >= 0.0) {
      fs = "127 @ " + ms(row.obs.fail_safe_time);
    }
    line << std::setw(20) << fs << (row.verdict.pass ? "PASS" : "FAIL");
    os << line.str() << '\n';
    if (!row.verdict.pass) os << "    reason: " << row.verdict.reason << '\n';
    if (!row.error.empty()) os << "    error: " << row.error << '\n';
  }
  os << '\n';
  os << "rows passed: " << report.rows_passed << "/" << report.rows.size() << '\n';
  os << "detector coverage: " << csv::fmt(report.coverage * 100.0) << "% of rows with a"
     << " designated detector\n";
  os << "note: supply loss has no designated detector (supply monitoring is out of scope);\n"
     << "      its row checks that the victim freezes silently and nothing false-fires.\n";
  os << "overall: " << (report.all_pass ? "PASS" : "FAIL") << '\n';
}

std::vector<SweepPoint> run_sweep(const scenario::Scenario& base, const std::string& param,
                                  const std::vector<std::string>& values, int threads) {
  std::vector<SweepPoint> points(values.size());
  std::vector<std::exception_ptr> errors(values.size());
  parallel_for(static_cast<int>(values.size()), threads, [&](int i) {
    try {
      scenario::Scenario sc = base;
      scenario::apply_override(sc, param + "=" + values[i]);
      points[i].value = values[i];
      points[i].summary = sim::run(sc).summary;
    } catch (...) {
      errors[i] = std::current_exception();
    }
  });
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return points;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepPoint>& points) {
  os << "value,amplitude_rms,frequency,final_code,mean_driver_current\n";
  for (const auto& p : points) {
    os << p.value << ',' << csv::fmt(p.summary.a.rms_diff) << ',';
    if (p.summary.a.has_frequency) os << csv::fmt(p.summary.a.frequency);
    os << ',' << csv::fmt(p.summary.a.final_code) << ',' << csv::fmt(p.summary.a.mean_abs_ipin1)
       << '\n';
  }
}

}  // namespace oscsim::campaign
