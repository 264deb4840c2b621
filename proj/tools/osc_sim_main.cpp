#include "CLI11.hpp"

#include "oscsim/campaign.hpp"
#include "oscsim/csv.hpp"
#include "oscsim/scenario.hpp"
#include "oscsim/sim.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace oscsim;

namespace {

struct CommonOpts {
  std::string scenario_path;
  std::string out_dir = "out";
  std::vector<std::string> sets;
  double dt = -1.0;
  double duration = -1.0;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--scenario", o.scenario_path,
                  "Scenario file (INI); all defaults apply when omitted");
  cmd->add_option("--out", o.out_dir, "Output directory (created if missing)");
  cmd->add_option("--set", o.sets, "Override section.key=value (repeatable)");
  cmd->add_option("--dt", o.dt, "Integrator step override, seconds");
  cmd->add_option("--duration", o.duration, "Simulated time override, seconds");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

scenario::Scenario load_scenario(const CommonOpts& o) {
  scenario::Scenario s;
  if (!o.scenario_path.empty()) s = scenario::parse_scenario(read_file(o.scenario_path));
  for (const auto& kv : o.sets) scenario::apply_override(s, kv);
  if (o.dt >= 0.0) s.dt = o.dt;
  if (o.duration > 0.0) s.t_end = o.duration;
  return scenario::finalized(s);
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  return f;
}

void describe_system(std::ostream& os, const char* label, const sim::SystemSummary& s) {
  os << label << ": code " << s.final_code << ", rms " << csv::fmt(s.rms_diff) << " V";
  if (s.has_frequency) os << ", " << csv::fmt(s.frequency / 1e6) << " MHz";
  if (s.missing_osc.fired) os << ", missing_osc@" << csv::fmt(s.missing_osc.time);
  if (s.low_amplitude.fired) os << ", low_amplitude@" << csv::fmt(s.low_amplitude.time);
  if (s.asymmetry.fired) os << ", asymmetry@" << csv::fmt(s.asymmetry.time);
  if (s.regulation_frozen) os << ", frozen";
  os << '\n';
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const scenario::ScenarioError& e) {
    for (const auto& v : e.violations) std::cerr << "config error: " << v << '\n';
    return 1;
  } catch (const sim::SimAbort& e) {
    std::cerr << "numeric abort: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

int cmd_run(const CommonOpts& o) {
  const scenario::Scenario s = load_scenario(o);
  const sim::Trace tr = sim::run(s);
  fs::create_directories(o.out_dir);
  open_out(fs::path(o.out_dir) / "scenario.ini") << scenario::emit_scenario(s);
  {
    auto f = open_out(fs::path(o.out_dir) / "trace.csv");
    campaign::write_trace_csv(f, tr);
  }
  open_out(fs::path(o.out_dir) / "summary.json") << campaign::summary_json(tr.summary);
  std::cout << "wrote " << tr.a.size() << " samples over " << csv::fmt(s.t_end) << " s ("
            << tr.summary.steps << " steps) to " << o.out_dir << '\n';
  describe_system(std::cout, "A", tr.summary.a);
  if (tr.summary.dual) describe_system(std::cout, "B", tr.summary.b);
  return 0;
}

int cmd_startup(const CommonOpts& o) {
  const scenario::Scenario s = load_scenario(o);
  const sim::Trace tr = sim::run(s);
  fs::create_directories(o.out_dir);
  {
    auto f = open_out(fs::path(o.out_dir) / "startup.csv");
    f << "tick,t,level,comparison,code_after\n";
    int k = 0;
    for (const auto& t : tr.ticks_a) {
      f << ++k << ',' << csv::fmt(t.t) << ',' << csv::fmt(t.level) << ',' << t.comparison << ','
        << t.code_after << '\n';
    }
  }
  open_out(fs::path(o.out_dir) / "summary.json") << campaign::summary_json(tr.summary);

  std::ostringstream notes;
  notes << "power-on code " << regulation::kPowerOnCode << " at t = 0\n";
  if (s.reg.enabled && s.reg.t_nvm <= s.t_end) {
    notes << "nvm code " << s.reg.nvm_code << " loaded at t = " << csv::fmt(s.reg.t_nvm) << " s\n";
  }
  const sim::TickRecord* first_inside = nullptr;
  const sim::TickRecord* last_change = nullptr;
  int prev_code = s.reg.nvm_code;
  for (const auto& t : tr.ticks_a) {
    if (first_inside == nullptr && t.comparison == 0) first_inside = &t;
    if (t.code_after != prev_code) last_change = &t;
    prev_code = t.code_after;
  }
  if (first_inside != nullptr) {
    notes << "first in-window tick at t = " << csv::fmt(first_inside->t) << " s, code "
          << first_inside->code_after << '\n';
  } else {
    notes << "never entered the window\n";
  }
  if (last_change != nullptr) {
    notes << "last code change at t = " << csv::fmt(last_change->t) << " s\n";
  }
  notes << "final code " << tr.summary.a.final_code << ", rms " << csv::fmt(tr.summary.a.rms_diff)
        << " V\n";
  open_out(fs::path(o.out_dir) / "startup.txt") << notes.str();
  std::cout << notes.str();
  return 0;
}

int cmd_sweep(const CommonOpts& o, const std::string& param,
              const std::vector<std::string>& values) {
  const scenario::Scenario base = load_scenario(o);
  const auto points = campaign::run_sweep(base, param, values, campaign::campaign_threads());
  fs::create_directories(o.out_dir);
  {
    auto f = open_out(fs::path(o.out_dir) / "sweep.csv");
    campaign::write_sweep_csv(f, points);
  }
  for (size_t i = 0; i < points.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "run_%03zu", i);
    const fs::path dir = fs::path(o.out_dir) / name;
    fs::create_directories(dir);
    open_out(dir / "summary.json") << campaign::summary_json(points[i].summary);
    std::cout << name << "  " << param << " = " << points[i].value << "  rms "
              << csv::fmt(points[i].summary.a.rms_diff) << " V  code "
              << points[i].summary.a.final_code << '\n';
  }
  std::cout << "wrote " << (fs::path(o.out_dir) / "sweep.csv").string() << '\n';
  return 0;
}

int cmd_fmea(const CommonOpts& o, const std::string& matrix_path) {
  const scenario::Scenario base = load_scenario(o);
  std::vector<campaign::FmeaExpectation> matrix =
      matrix_path.empty() ? campaign::default_fmea_matrix()
                          : campaign::parse_fmea_matrix(read_file(matrix_path));
  const campaign::FmeaReport report = campaign::run_fmea(base, matrix, campaign::campaign_threads());
  fs::create_directories(o.out_dir);
  {
    auto f = open_out(fs::path(o.out_dir) / "fmea_report.csv");
    campaign::write_fmea_csv(f, report);
  }
  {
    auto f = open_out(fs::path(o.out_dir) / "fmea_report.txt");
    campaign::write_fmea_text(f, report);
  }
  open_out(fs::path(o.out_dir) / "fmea_matrix.csv") << campaign::format_fmea_matrix(matrix);
  campaign::write_fmea_text(std::cout, report);
  return report.all_pass ? 0 : 3;
}

int cmd_dac_table(const std::string& out_dir) {
  fs::create_directories(out_dir);
  auto f = open_out(fs::path(out_dir) / "dac_table.csv");
  campaign::write_dac_table(f);
  std::cout << "wrote " << (fs::path(out_dir) / "dac_table.csv").string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Behavioral simulator of a digitally amplitude-regulated LC oscillator driver"};
  app.require_subcommand(1);

  CommonOpts run_opts;
  CLI::App* run = app.add_subcommand("run", "Simulate one scenario; write trace.csv + summary.json");
  add_common(run, run_opts);

  CommonOpts startup_opts;
  CLI::App* startup =
      app.add_subcommand("startup", "Run and report the regulation startup tick sequence");
  add_common(startup, startup_opts);

  CommonOpts sweep_opts;
  std::string sweep_param;
  std::vector<std::string> sweep_values;
  CLI::App* sweep = app.add_subcommand("sweep", "One run per value of a scenario key");
  add_common(sweep, sweep_opts);
  sweep->add_option("--param", sweep_param, "Dotted scenario key, e.g. network.r_s")->required();
  sweep->add_option("--values", sweep_values, "Comma-separated values")
      ->required()
      ->delimiter(',');

  CommonOpts fmea_opts;
  std::string matrix_path;
  CLI::App* fmea =
      app.add_subcommand("fmea", "Run the fault matrix against the expected-detector table");
  add_common(fmea, fmea_opts);
  fmea->add_option("--matrix", matrix_path, "Expected-detector table CSV (default: built-in)");

  std::string dac_out = "out";
  CLI::App* dac_table = app.add_subcommand("dac-table", "Emit the 128-code current-limit table");
  dac_table->add_option("--out", dac_out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (run->parsed()) return guarded([&] { return cmd_run(run_opts); });
  if (startup->parsed()) return guarded([&] { return cmd_startup(startup_opts); });
  if (sweep->parsed()) return guarded([&] { return cmd_sweep(sweep_opts, sweep_param, sweep_values); });
  if (fmea->parsed()) return guarded([&] { return cmd_fmea(fmea_opts, matrix_path); });
  if (dac_table->parsed()) return guarded([&] { return cmd_dac_table(dac_out); });
  return 1;
}
