#include "ecolane/cli.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "json.hpp"

namespace ecolane {
namespace {

namespace fs = std::filesystem;

constexpr const char* kScenario = R"({
  "schema_version": 1,
  "name": "cli_short",
  "seed": 5,
  "run_duration": 60,
  "road": {"route_length": 300, "speed_limits": [{"s_start": 0, "speed": 13.4}]},
  "lights": [{"stop_line_s": 200, "green": 40, "yellow": 4, "red": 26, "lanes": [0, 1]}],
  "ego": {"s": 0, "v": 12, "lane": 0},
  "traffic": {"count_per_lane": [1, 1], "s_range": [60, 280]}
})";

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("ecolane_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    scenario_ = dir_ / "scenario.json";
    write(scenario_, kScenario);
  }
  void TearDown() override { fs::remove_all(dir_); }

  static void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }
  static std::string read(const fs::path& p) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
  }

  fs::path dir_, scenario_;
  std::ostringstream out_, err_;
};

TEST_F(CliTest, RunWritesFilesWithProvenance) {
  cli::RunOptions o;
  o.scenario = scenario_;
  o.policy = Policy::kBaseline;
  o.out_dir = dir_ / "run";
  ASSERT_EQ(cli::cmd_run(o, out_, err_), cli::kOk) << err_.str();
  const std::string hash = config_hash(load_scenario(scenario_));
  for (const char* suffix : {"_trace.csv", "_plot.csv", "_metrics.json"}) {
    const fs::path p = dir_ / "run" / (std::string("baseline_seed5") + suffix);
    ASSERT_TRUE(fs::exists(p)) << p;
    EXPECT_NE(read(p).find(hash), std::string::npos) << p;
  }
}

TEST_F(CliTest, SeedOverrideChangesFileNameAndHash) {
  cli::RunOptions o;
  o.scenario = scenario_;
  o.seed = 11;
  o.out_dir = dir_;
  ASSERT_EQ(cli::cmd_run(o, out_, err_), cli::kOk) << err_.str();
  EXPECT_NE(read(dir_ / "proposed_seed11_metrics.json").find("\"seed\": 11"), std::string::npos);
}

TEST_F(CliTest, RepeatedRunsGiveIdenticalFiles) {
  cli::RunOptions o;
  o.scenario = scenario_;
  o.out_dir = dir_ / "a";
  ASSERT_EQ(cli::cmd_run(o, out_, err_), cli::kOk);
  o.out_dir = dir_ / "b";
  ASSERT_EQ(cli::cmd_run(o, out_, err_), cli::kOk);
  for (const char* name : {"proposed_seed5_trace.csv", "proposed_seed5_metrics.json"}) {
    EXPECT_EQ(read(dir_ / "a" / name), read(dir_ / "b" / name)) << name;
  }
}

TEST_F(CliTest, InvalidScenarioNamesTheField) {
  std::string text = kScenario;
  text.replace(text.find("\"route_length\""), 0, "\"lane_width\": -3.5, ");
  write(scenario_, text);
  EXPECT_EQ(cli::cmd_validate(scenario_, out_, err_), cli::kInvalidInput);
  EXPECT_NE(err_.str().find("\"field\":\"road.lane_width\""), std::string::npos) << err_.str();
}

TEST_F(CliTest, MissingFileIsAnIoError) {
  EXPECT_EQ(cli::cmd_validate(dir_ / "absent.json", out_, err_), cli::kIoError);
  cli::RunOptions o;
  o.scenario = dir_ / "absent.json";
  EXPECT_EQ(cli::cmd_run(o, out_, err_), cli::kIoError);
}

TEST_F(CliTest, CompareSingleRepMeanEqualsRow) {
  cli::CompareOptions o;
  o.scenario = scenario_;
  o.reps = 1;
  o.out_dir = dir_;
  ASSERT_EQ(cli::cmd_compare(o, out_, err_), cli::kOk) << err_.str();
  std::istringstream csv(read(dir_ / "compare.csv"));
  std::vector<std::vector<double>> rows;
  for (std::string line; std::getline(csv, line);) {
    if (line.empty() || line[0] == '#' || line[0] == 's') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line.substr(line.find(' ')));
    rows.emplace_back(std::istream_iterator<double>(fields), std::istream_iterator<double>());
  }
  ASSERT_EQ(rows.size(), 2u);
  ASSERT_EQ(rows[0].size(), rows[1].size());
  for (std::size_t k = 0; k < rows[0].size(); ++k) EXPECT_NEAR(rows[0][k], rows[1][k], 1e-2) << k;
}

TEST_F(CliTest, ComparePairsPoliciesOnTheSameSeed) {
  const ScenarioConfig c = load_scenario(scenario_);
  const cli::PairedRow row = cli::compare_seed(c, 8);
  EXPECT_EQ(row.baseline.seed, 8u);
  EXPECT_EQ(row.proposed.seed, 8u);
  EXPECT_EQ(row.baseline.config_hash, row.proposed.config_hash);
  ASSERT_TRUE(row.energy_saving_pct.has_value());
}

TEST_F(CliTest, CompareRejectsZeroReps) {
  cli::CompareOptions o;
  o.scenario = scenario_;
  o.reps = 0;
  EXPECT_EQ(cli::cmd_compare(o, out_, err_), cli::kInvalidInput);
}

TEST_F(CliTest, FitEnergyRecoversCoefficients) {
  std::ostringstream table;
  table.precision(17);
  table << "T_whl,v,P_tot\n";
  for (int i = 0; i < 50; ++i) {
    const double t = -500.0 + 40.0 * i, v = 2.0 + 0.3 * i;
    table << t << ',' << v << ',' << 4.47 * t * v + 1522.23 * v << "\n";
  }
  write(dir_ / "samples.csv", table.str());
  ASSERT_EQ(cli::cmd_fit_energy(dir_ / "samples.csv", dir_ / "fit.json", out_, err_), cli::kOk)
      << err_.str();
  const auto fit = nlohmann::json::parse(read(dir_ / "fit.json"));
  EXPECT_NEAR(fit["c1"].get<double>(), 4.47, 1e-6);
  EXPECT_NEAR(fit["c2"].get<double>(), 1522.23, 1e-4);
  EXPECT_EQ(fit["samples_hash"].get<std::string>().size(), 16u);
  write(dir_ / "bad.csv", "T_whl,v,P_tot\n1,2,x\n");
  EXPECT_EQ(cli::cmd_fit_energy(dir_ / "bad.csv", dir_ / "fit2.json", out_, err_),
            cli::kInvalidInput);
}

}  // namespace
}  // namespace ecolane
