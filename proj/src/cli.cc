#include "ecolane/cli.h"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace ecolane::cli {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void report_error(std::ostream& err, const std::string& kind, const std::string& message,
                  const std::string& field = "") {
  Json j = {{"error", kind}, {"message", message}};
  if (!field.empty()) j["field"] = field;
  err << j.dump() << "\n";
}

// Runs `body`, turning the known failure types into exit codes.
template <typename Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    if (e.field() == "file") {
      report_error(err, "io", e.what());
      return kIoError;
    }
    report_error(err, "invalid_input", e.what(), e.field());
    return kInvalidInput;
  } catch (const DegenerateRegressorError& e) {
    report_error(err, "invalid_input", e.what());
    return kInvalidInput;
  } catch (const RunAborted& e) {
    report_error(err, "run_aborted", e.what());
    return kRunAborted;
  } catch (const IoError& e) {
    report_error(err, "io", e.what());
    return kIoError;
  }
}

void write_file(const fs::path& path, const std::string& contents) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  f << contents;
  if (!f) throw IoError("failed writing " + path.string());
}

std::string num(double x, int precision = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, x);
  return buf;
}

std::string stem(Policy policy, std::uint64_t seed) {
  return std::string(to_string(policy)) + "_seed" + std::to_string(seed);
}

Json metrics_object(const RunMetrics& m) { return Json::parse(metrics_json(m)); }

double mean_of(const std::vector<PairedRow>& rows, double (*get)(const PairedRow&)) {
  double sum = 0.0;
  for (const PairedRow& r : rows) sum += get(r);
  return rows.empty() ? 0.0 : sum / rows.size();
}

}  // namespace

int cmd_validate(const fs::path& scenario, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ScenarioConfig c = load_scenario(scenario);
    out << "ok " << (c.name.empty() ? scenario.filename().string() : c.name)
        << " config_hash=" << config_hash(c) << " seed=" << c.seed << "\n";
    return kOk;
  });
}

void write_plot_data(std::ostream& out, const RunResult& result) {
  const RunMetrics& m = result.metrics;
  out << "# config_hash=" << m.config_hash << " seed=" << m.seed << " policy=" << m.policy
      << "\n";
  out << "distance,speed,cumulative_energy,lane,maneuver\n";
  if (result.trace.empty()) return;
  const double s0 = result.trace.front().s;
  double cumulative = 0.0;
  for (const TraceRow& r : result.trace) {
    out << num(r.s - s0, 3) << ',' << num(r.v, 4) << ',' << num(cumulative, 1) << ','
        << r.lane << ',' << r.maneuver << "\n";
    cumulative += r.power * kSimStep;
  }
}

int cmd_run(const RunOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    ScenarioConfig c = load_scenario(options.scenario);
    if (options.seed) c.seed = *options.seed;
    const RunResult result = run(c, options.policy);
    const fs::path base = options.out_dir / stem(options.policy, c.seed);

    std::ostringstream trace, plot;
    write_trace(trace, result, c.lights.size());
    write_plot_data(plot, result);
    write_file(base.string() + "_trace.csv", trace.str());
    write_file(base.string() + "_plot.csv", plot.str());
    write_file(base.string() + "_metrics.json", metrics_json(result.metrics) + "\n");

    const RunMetrics& m = result.metrics;
    out << m.policy << " seed=" << m.seed << " energy_j=" << num(m.energy_j, 1)
        << " mpge=" << num(m.mpge, 2) << " stops=" << m.stops
        << " travel_time_s=" << num(m.travel_time, 1)
        << " completed=" << (m.completed ? "yes" : "no") << "\n";
    return kOk;
  });
}

namespace {

// Both policies on one seed. Traces are written to `trace_dir` when given.
PairedRow paired_run(const ScenarioConfig& config, std::uint64_t seed,
                     const fs::path* trace_dir) {
  ScenarioConfig c = config;
  c.seed = seed;
  PairedRow row;
  row.seed = seed;
  for (Policy p : {Policy::kBaseline, Policy::kProposed}) {
    RunResult r;
    try {
      r = run(c, p);
    } catch (const RunAborted& e) {
      throw RunAborted("seed " + std::to_string(seed) + ", " + std::string(to_string(p)) +
                           ": " + e.what(),
                       e.trace());
    }
    (p == Policy::kBaseline ? row.baseline : row.proposed) = r.metrics;
    if (trace_dir != nullptr) {
      std::ostringstream trace;
      write_trace(trace, r, c.lights.size());
      const std::string name = stem(p, seed) + "_trace.csv";
      write_file(*trace_dir / name, trace.str());
      row.trace_files.push_back(name);
    }
  }
  const RunMetrics& b = row.baseline;
  const RunMetrics& q = row.proposed;
  if (b.completed && q.completed) {
    row.energy_saving_pct = 100.0 * (b.energy_j - q.energy_j) / b.energy_j;
    row.travel_time_change_pct = 100.0 * (q.travel_time - b.travel_time) / b.travel_time;
  }
  return row;
}

}  // namespace

PairedRow compare_seed(const ScenarioConfig& config, std::uint64_t seed) {
  return paired_run(config, seed, nullptr);
}

std::string compare_csv(const RunReport& report) {
  std::ostringstream out;
  out << "# config_hash=" << report.config_hash << " scenario=" << report.scenario_name
      << " seeds=";
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    out << (i ? "," : "") << report.rows[i].seed;
  }
  out << "\n";
  out << "seed,energy_baseline_j,energy_proposed_j,mpge_baseline,mpge_proposed,"
         "stops_baseline,stops_proposed,travel_time_baseline_s,travel_time_proposed_s,"
         "energy_saving_pct,travel_time_change_pct\n";
  auto opt = [](const std::optional<double>& x) { return x ? num(*x, 3) : std::string(); };
  for (const PairedRow& r : report.rows) {
    out << r.seed << ',' << num(r.baseline.energy_j, 1) << ',' << num(r.proposed.energy_j, 1)
        << ',' << num(r.baseline.mpge, 3) << ',' << num(r.proposed.mpge, 3) << ','
        << r.baseline.stops << ',' << r.proposed.stops << ',' << num(r.baseline.travel_time, 2)
        << ',' << num(r.proposed.travel_time, 2) << ',' << opt(r.energy_saving_pct) << ','
        << opt(r.travel_time_change_pct) << "\n";
  }
  const auto& rows = report.rows;
  const double eb = mean_of(rows, [](const PairedRow& r) { return r.baseline.energy_j; });
  const double ep = mean_of(rows, [](const PairedRow& r) { return r.proposed.energy_j; });
  const double tb = mean_of(rows, [](const PairedRow& r) { return r.baseline.travel_time; });
  const double tp = mean_of(rows, [](const PairedRow& r) { return r.proposed.travel_time; });
  out << "mean," << num(eb, 1) << ',' << num(ep, 1) << ','
      << num(mean_of(rows, [](const PairedRow& r) { return r.baseline.mpge; }), 3) << ','
      << num(mean_of(rows, [](const PairedRow& r) { return r.proposed.mpge; }), 3) << ','
      << num(mean_of(rows, [](const PairedRow& r) { return double(r.baseline.stops); }), 2)
      << ','
      << num(mean_of(rows, [](const PairedRow& r) { return double(r.proposed.stops); }), 2)
      << ',' << num(tb, 2) << ',' << num(tp, 2) << ','
      << (eb > 0.0 ? num(100.0 * (eb - ep) / eb, 3) : "") << ','
      << (tb > 0.0 ? num(100.0 * (tp - tb) / tb, 3) : "") << "\n";
  return out.str();
}

std::string compare_json(const RunReport& report) {
  Json rows = Json::array();
  for (const PairedRow& r : report.rows) {
    Json row = {{"seed", r.seed},
                {"baseline", metrics_object(r.baseline)},
                {"proposed", metrics_object(r.proposed)}};
    row["energy_saving_pct"] = r.energy_saving_pct ? Json(*r.energy_saving_pct) : Json();
    row["travel_time_change_pct"] =
        r.travel_time_change_pct ? Json(*r.travel_time_change_pct) : Json();
    row["trace_files"] = r.trace_files;
    rows.push_back(std::move(row));
  }
  const Json j = {{"scenario", report.scenario_name},
                  {"config_hash", report.config_hash},
                  {"rows", rows}};
  return j.dump(2) + "\n";
}

int cmd_compare(const CompareOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (options.reps < 1) throw ConfigError("reps", "must be >= 1");
    const ScenarioConfig c = load_scenario(options.scenario);
    const std::uint64_t base = options.seed_base.value_or(c.seed);

    RunReport report;
    report.scenario_name = c.name;
    report.config_hash = config_hash(c);
    for (int k = 0; k < options.reps; ++k) {
      report.rows.push_back(paired_run(c, base + static_cast<std::uint64_t>(k),
                                       options.write_traces ? &options.out_dir : nullptr));
    }
    const std::string csv = compare_csv(report);
    write_file(options.out_dir / "compare.csv", csv);
    write_file(options.out_dir / "compare.json", compare_json(report));
    out << csv;
    return kOk;
  });
}

int cmd_fit_energy(const fs::path& samples, const fs::path& output, std::ostream& out,
                   std::ostream& err) {
  return guarded(err, [&] {
    std::ifstream in(samples, std::ios::binary);
    if (!in) throw IoError("cannot read " + samples.string());
    const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    std::istringstream table(bytes);
    std::vector<PowerSample> data;
    try {
      data = read_power_samples(table);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(samples.filename().string(), e.what());
    }
    const EnergyModelParams fit = fit_params(data);
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(bytes)));
    const Json j = {{"samples", samples.filename().string()},
                    {"samples_hash", hash},
                    {"count", data.size()},
                    {"c1", fit.c1},
                    {"c2", fit.c2},
                    {"sum_squared_residual_w2", fit_residual(fit, data)}};
    write_file(output, j.dump(2) + "\n");
    out << "c1=" << num(fit.c1, 6) << " c2=" << num(fit.c2, 6) << " samples=" << data.size()
        << "\n";
    return kOk;
  });
}

}  // namespace ecolane::cli
