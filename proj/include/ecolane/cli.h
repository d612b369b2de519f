// Commands behind the `ecolane` executable.
//
// Each command writes its files under an output directory and reports on the
// given streams. Errors go to `err` as one JSON object per line so scripts can
// parse them. Exit codes:
//   0  success
//   1  bad command-line usage (raised by the argument parser)
//   2  invalid scenario or input data (the JSON names the field)
//   3  a run aborted inside the simulator or a planner
//   4  an input or output file could not be read or written

#ifndef ECOLANE_CLI_H_
#define ECOLANE_CLI_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "ecolane/sim.h"

namespace ecolane::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kInvalidInput = 2,
  kRunAborted = 3,
  kIoError = 4,
};

int cmd_validate(const std::filesystem::path& scenario, std::ostream& out, std::ostream& err);

struct RunOptions {
  std::filesystem::path scenario;
  Policy policy = Policy::kProposed;
  std::optional<std::uint64_t> seed;  // overrides the scenario seed
  std::filesystem::path out_dir = ".";
};

/// Writes <policy>_seed<seed>_trace.csv, _metrics.json and _plot.csv.
int cmd_run(const RunOptions& options, std::ostream& out, std::ostream& err);

struct CompareOptions {
  std::filesystem::path scenario;
  int reps = 4;
  std::optional<std::uint64_t> seed_base;  // defaults to the scenario seed
  std::filesystem::path out_dir = ".";
  bool write_traces = false;
};

/// One seed run under both policies.
struct PairedRow {
  std::uint64_t seed = 0;
  RunMetrics baseline;
  RunMetrics proposed;
  /// (E_base - E_prop) / E_base in percent; only when both runs completed.
  std::optional<double> energy_saving_pct;
  /// (t_prop - t_base) / t_base in percent; only when both runs completed.
  std::optional<double> travel_time_change_pct;
  std::vector<std::string> trace_files;
};

struct RunReport {
  std::string scenario_name;
  std::string config_hash;
  std::vector<PairedRow> rows;
};

PairedRow compare_seed(const ScenarioConfig& config, std::uint64_t seed);

/// Writes compare.csv (one row per seed plus a mean row) and compare.json.
/// Nothing time-dependent is written, so repeated runs give identical files.
int cmd_compare(const CompareOptions& options, std::ostream& out, std::ostream& err);

/// Fits the energy model to a T_whl, v, P_tot table; writes JSON to `output`.
int cmd_fit_energy(const std::filesystem::path& samples, const std::filesystem::path& output,
                   std::ostream& out, std::ostream& err);

/// Columnar plot data: distance, speed, cumulative metered energy, lane and
/// maneuver per tick.
void write_plot_data(std::ostream& out, const RunResult& result);

std::string compare_csv(const RunReport& report);
std::string compare_json(const RunReport& report);

}  // namespace ecolane::cli

#endif  // ECOLANE_CLI_H_
