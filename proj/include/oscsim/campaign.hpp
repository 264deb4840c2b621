#pragma once

#include "oscsim/scenario.hpp"
#include "oscsim/sim.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace oscsim::campaign {

// Campaign layer: report writers, the FMEA fault matrix with its verdict
// rules, and parameter sweeps. Pure logic lives here so it is unit-testable;
// the CLI translates paths and exit codes.

// Structured run summary as a JSON document (machine-readable companion of
// trace.csv).
std::string summary_json(const sim::Summary& s);

// trace.csv: one row per decimated sample, columns
// t, v1, v2, v_diff, i_coil, i_drv1, i_drv2, code, i_limit_A, v_dc1,
// flag_missing, flag_lowamp, flag_asym; a dual trace appends the same block
// (minus t) with _b suffixes. Byte-stable for identical scenarios.
void write_trace_csv(std::ostream& os, const sim::Trace& trace);

// dac_table.csv: code, oscD, oscE, oscF, units, amperes, delta_percent for
// all 128 codes of the clean (no DNL) table; delta_percent is 0 at codes 0
// and 127 where the relative step is undefined.
void write_dac_table(std::ostream& os);

// Number of worker threads for campaigns: OSC_SIM_THREADS when set
// (0 means sequential), hardware concurrency otherwise.
int campaign_threads();

// ---- FMEA --------------------------------------------------------------

// One row of the expected-detector table. The table ships as data
// (default_fmea_matrix / an optional CSV override) so the matrix can be
// extended without touching code.
struct FmeaExpectation {
  faults::FaultKind kind = faults::FaultKind::None;
  std::string expected = "none";        // none | missing_osc | low_amplitude | asymmetry
  std::string deadline_class = "none";  // none | watchdog (t_timeout + 1/f_res) | slow (5 ms)
};

std::vector<FmeaExpectation> default_fmea_matrix();

// CSV form: header "fault,expected_detector,deadline_class" then one row
// per fault. Throws ScenarioError listing every malformed row.
std::vector<FmeaExpectation> parse_fmea_matrix(const std::string& text);
std::string format_fmea_matrix(const std::vector<FmeaExpectation>& matrix);

struct FlagEvent {
  std::string name;
  int system = 0;  // 0 = A, 1 = B
  double time = 0.0;
};

// Everything the verdict rule needs from one fault run.
struct RowObservation {
  double t_activate = 0.0;
  double t_timeout = 0.0;
  double f_res = 0.0;          // pre-fault system-A resonance
  double tick_period = 0.0;
  std::vector<FlagEvent> flags;    // every fired flag, both systems
  double fail_safe_time = -1.0;    // first tick with system-A code 127; -1 = never
  bool dual = false;
  bool b_frozen = false;
};

struct RowVerdict {
  bool pass = false;
  std::string detected;        // expected flag if it fired, else "none"
  double detection_time = -1.0;
  double deadline = -1.0;      // absolute seconds; -1 when no deadline applies
  bool fail_safe_required = false;
  std::string reason;          // failure explanation, empty on PASS
};

// Verdict rule: the expected detector must fire on system A within its
// deadline with no other flag anywhere strictly before it (later cascades
// are fine), and missing_osc / low_amplitude must force code 127 within one
// tick period of detection. Rows expecting "none" pass on zero flags; the
// supply-loss row additionally requires system B's regulation frozen.
RowVerdict evaluate_row(const FmeaExpectation& exp, const RowObservation& obs);

struct FmeaRow {
  FmeaExpectation exp;
  RowObservation obs;
  RowVerdict verdict;
  std::string error;  // nonempty when the run itself failed (aborted row = FAIL)
};

struct FmeaReport {
  std::vector<FmeaRow> rows;
  int rows_passed = 0;
  double coverage = 0.0;  // passed fraction of rows that expect a detector
  bool all_pass = false;
};

// Run the matrix against the base scenario (fault section of the base
// supplies t_activate, short pin and the unsupplied-pin model; the kind,
// the DegradedQ multiplier 20 and the supply-loss target B come from the
// matrix row). Trace decimation is forced coarse; reports need only
// summaries and tick records.
FmeaReport run_fmea(const scenario::Scenario& base, const std::vector<FmeaExpectation>& matrix,
                    int threads);

void write_fmea_csv(std::ostream& os, const FmeaReport& report);
void write_fmea_text(std::ostream& os, const FmeaReport& report);

// ---- Sweep ---------------------------------------------------------------

struct SweepPoint {
  std::string value;  // literal value text, echoed into the combined CSV
  sim::Summary summary;
};

// One run per value of the dotted scenario key, deterministic order.
std::vector<SweepPoint> run_sweep(const scenario::Scenario& base, const std::string& param,
                                  const std::vector<std::string>& values, int threads);

// sweep.csv: value, amplitude_rms, frequency, final_code, mean_driver_current
// (frequency column empty when under 4 crossings).
void write_sweep_csv(std::ostream& os, const std::vector<SweepPoint>& points);

}  // namespace oscsim::campaign
