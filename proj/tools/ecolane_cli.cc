// ecolane: validate scenarios, run Baseline or Proposed, compare the two over
// seeds, and fit the energy model. Exit codes are listed in ecolane/cli.h.

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "ecolane/cli.h"

int main(int argc, char** argv) {
  using namespace ecolane;
  CLI::App app{"SPaT-aware lane selection and trajectory planning simulator"};
  app.require_subcommand(1);

  std::string scenario;
  std::string out_dir = ".";

  auto* validate = app.add_subcommand("validate", "Check a scenario file");
  validate->add_option("--scenario", scenario, "Scenario JSON")->required();

  cli::RunOptions run_opts;
  std::string policy = "proposed";
  std::uint64_t seed = 0;
  auto* run = app.add_subcommand("run", "Simulate one policy");
  run->add_option("--scenario", scenario, "Scenario JSON")->required();
  run->add_option("--policy", policy, "baseline or proposed")
      ->check(CLI::IsMember({"baseline", "proposed"}));
  auto* seed_opt = run->add_option("--seed", seed, "Override the scenario seed");
  run->add_option("--out", out_dir, "Output directory");

  cli::CompareOptions cmp_opts;
  std::uint64_t seed_base = 0;
  auto* compare = app.add_subcommand("compare", "Baseline vs Proposed over seeds");
  compare->add_option("--scenario", scenario, "Scenario JSON")->required();
  compare->add_option("--reps", cmp_opts.reps, "Number of seeds")->check(CLI::PositiveNumber);
  auto* base_opt = compare->add_option("--seed", seed_base, "First seed (default: scenario)");
  compare->add_option("--out", out_dir, "Output directory");
  compare->add_flag("--traces", cmp_opts.write_traces, "Also write per-run traces");

  std::string samples, fit_out = "energy_fit.json";
  auto* fit = app.add_subcommand("fit-energy", "Fit c1, c2 to measured power");
  fit->add_option("--samples", samples, "Table with T_whl, v, P_tot columns")->required();
  fit->add_option("--out", fit_out, "Output JSON file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kOk : cli::kUsage;
  }

  if (*validate) return cli::cmd_validate(scenario, std::cout, std::cerr);
  if (*run) {
    run_opts.scenario = scenario;
    run_opts.policy = parse_policy(policy);
    if (*seed_opt) run_opts.seed = seed;
    run_opts.out_dir = out_dir;
    return cli::cmd_run(run_opts, std::cout, std::cerr);
  }
  if (*compare) {
    cmp_opts.scenario = scenario;
    if (*base_opt) cmp_opts.seed_base = seed_base;
    cmp_opts.out_dir = out_dir;
    return cli::cmd_compare(cmp_opts, std::cout, std::cerr);
  }
  return cli::cmd_fit_energy(samples, fit_out, std::cout, std::cerr);
}
