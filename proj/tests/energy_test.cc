#include "ecolane/energy.h"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

namespace ecolane {
namespace {

const EnergyModelParams kFitted{4.47, 1522.23};

std::vector<PowerSample> synthesize(const EnergyModelParams& truth, int count,
                                    std::mt19937& rng, double noise = 0.0) {
  std::uniform_real_distribution<double> torque(-2000.0, 1500.0);
  std::uniform_real_distribution<double> speed(0.5, 20.0);
  std::uniform_real_distribution<double> factor(1.0 - noise, 1.0 + noise);
  std::vector<PowerSample> out(count);
  for (PowerSample& p : out) {
    p.wheel_torque = torque(rng);
    p.speed = speed(rng);
    p.power = stage_cost(truth, p.wheel_torque, p.speed) * factor(rng);
  }
  return out;
}

TEST(StageCost, WorkedExamples) {
  EXPECT_NEAR(stage_cost(kFitted, 100.0, 10.0), 19692.3, 1e-9);
  EXPECT_NEAR(stage_cost(kFitted, -400.0, 10.0), -2657.7, 1e-9);
  EXPECT_DOUBLE_EQ(stage_cost(kFitted, 800.0, 0.0), 0.0);
}

TEST(ClampedStageCost, NeverNegativeAndPassesPositiveThrough) {
  EXPECT_DOUBLE_EQ(clamped_stage_cost(kFitted, -400.0, 10.0), 0.0);
  EXPECT_NEAR(clamped_stage_cost(kFitted, 100.0, 10.0), 19692.3, 1e-9);
  EXPECT_DOUBLE_EQ(clamped_stage_cost(kFitted, 100.0, 0.0), 0.0);
  std::mt19937 rng(1);
  for (const PowerSample& p : synthesize(kFitted, 1000, rng)) {
    const double raw = stage_cost(kFitted, p.wheel_torque, p.speed);
    const double clamped = clamped_stage_cost(kFitted, p.wheel_torque, p.speed);
    EXPECT_GE(clamped, 0.0);
    if (raw >= 0.0) EXPECT_EQ(clamped, raw);
  }
}

TEST(FitParams, RecoversNoiselessParameters) {
  std::mt19937 rng(2);
  const EnergyModelParams fit = fit_params(synthesize(kFitted, 200, rng));
  EXPECT_NEAR(fit.c1, kFitted.c1, 1e-6 * kFitted.c1);
  EXPECT_NEAR(fit.c2, kFitted.c2, 1e-6 * kFitted.c2);
}

TEST(FitParams, RecoversUnderMultiplicativeNoise) {
  std::mt19937 rng(3);
  const EnergyModelParams fit = fit_params(synthesize(kFitted, 10000, rng, 0.05));
  EXPECT_NEAR(fit.c1, kFitted.c1, 0.05 * kFitted.c1);
  EXPECT_NEAR(fit.c2, kFitted.c2, 0.05 * kFitted.c2);
}

TEST(FitParams, NegativeTrueOffsetLandsOnTheBoundary) {
  std::mt19937 rng(4);
  const auto samples = synthesize({2.0, -50.0}, 300, rng);
  const EnergyModelParams fit = fit_params(samples);
  EXPECT_EQ(fit.c2, 0.0);
  // One-dimensional oracle: c1 = sum(x P) / sum(x^2) with x = T v.
  double num = 0.0, den = 0.0;
  for (const PowerSample& p : samples) {
    const double x = p.wheel_torque * p.speed;
    num += x * p.power;
    den += x * x;
  }
  EXPECT_NEAR(fit.c1, std::max(0.0, num / den), 1e-9);
}

TEST(FitParams, DegenerateRegressorsThrow) {
  std::vector<PowerSample> same(5, PowerSample{200.0, 8.0, 20000.0});
  EXPECT_THROW(fit_params(same), DegenerateRegressorError);
  EXPECT_THROW(fit_params(std::vector<PowerSample>(1, PowerSample{1, 1, 1})),
               DegenerateRegressorError);
}

// Global minimality against a dense grid, and scale consistency.
TEST(FitParams, BeatsADenseGridAndScalesLinearly) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> c1_dist(-2.0, 8.0);
  std::uniform_real_distribution<double> c2_dist(-800.0, 2500.0);
  for (int k = 0; k < 20; ++k) {
    const EnergyModelParams truth{c1_dist(rng), c2_dist(rng)};
    auto samples = synthesize(truth, 60, rng, 0.2);
    const EnergyModelParams fit = fit_params(samples);
    ASSERT_GE(fit.c1, 0.0);
    ASSERT_GE(fit.c2, 0.0);
    const double best = fit_residual(fit, samples);
    double grid_best = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 200; ++i) {
      for (int j = 0; j <= 200; ++j) {
        grid_best = std::min(grid_best, fit_residual({0.05 * i, 15.0 * j}, samples));
      }
    }
    EXPECT_LE(best, grid_best * (1.0 + 1e-12)) << "instance " << k;

    const double alpha = 0.5 + k;
    for (PowerSample& p : samples) p.power *= alpha;
    const EnergyModelParams scaled = fit_params(samples);
    EXPECT_NEAR(scaled.c1, alpha * fit.c1, 1e-8 * std::max(1.0, alpha * fit.c1));
    EXPECT_NEAR(scaled.c2, alpha * fit.c2, 1e-8 * std::max(1.0, alpha * fit.c2));
  }
}

TEST(MeterTrajectory, WorkedExamplesAndAdditivity) {
  const std::vector<double> zero(100, 0.0);
  EXPECT_DOUBLE_EQ(meter_trajectory(kFitted, std::vector<double>(100, 500.0), zero, 0.1), 0.0);
  const std::vector<double> torque(100, 100.0), speed(100, 10.0);
  EXPECT_NEAR(meter_trajectory(kFitted, torque, speed, 0.1), 196923.0, 1e-6);
  EXPECT_DOUBLE_EQ(
      meter_trajectory(kFitted, std::vector<double>(100, -2000.0), speed, 0.1), 0.0);

  std::mt19937 rng(6);
  const auto samples = synthesize(kFitted, 80, rng);
  std::vector<double> t, v;
  for (const PowerSample& p : samples) {
    t.push_back(p.wheel_torque);
    v.push_back(p.speed);
  }
  const double whole = meter_trajectory(kFitted, t, v, 0.1);
  const std::span<const double> ts(t), vs(v);
  const double split = meter_trajectory(kFitted, ts.first(30), vs.first(30), 0.1) +
                       meter_trajectory(kFitted, ts.subspan(30), vs.subspan(30), 0.1);
  EXPECT_NEAR(whole, split, 1e-9 * whole);
  EXPECT_THROW(meter_trajectory(kFitted, ts.first(3), vs, 0.1), std::invalid_argument);
}

TEST(Mpge, UnitConversions) {
  const double gallon = 33.7 * 3.6e6;
  EXPECT_NEAR(mpge(gallon, kMetersPerMile), 1.0, 1e-12);
  EXPECT_NEAR(mpge(gallon, 40.0 * kMetersPerMile), 40.0, 1e-12);
  EXPECT_NEAR(mpge(12.132e8, 4000.0), 0.2486, 1e-4);
  EXPECT_THROW(mpge(0.0, 100.0), std::invalid_argument);
  EXPECT_THROW(mpge(100.0, -1.0), std::invalid_argument);
}

TEST(ReadPowerSamples, HeaderCommentsAndSeparators) {
  std::istringstream in(
      "T_whl,v,P_tot\n"
      "# comment\n"
      "\n"
      "100,10,19692.3\n"
      "-400;10;-2657.7\n"
      "0\t5\t7611.15\n");
  const auto samples = read_power_samples(in);
  ASSERT_EQ(samples.size(), 3u);
  EXPECT_DOUBLE_EQ(samples[1].wheel_torque, -400.0);
  EXPECT_DOUBLE_EQ(samples[2].power, 7611.15);
}

TEST(ReadPowerSamples, RejectsMalformedRows) {
  std::istringstream bad("1,2,3\nx,y,z\n");
  EXPECT_THROW(read_power_samples(bad), std::invalid_argument);
  std::istringstream negative("1,-2,3\n");
  EXPECT_THROW(read_power_samples(negative), std::invalid_argument);
}

}  // namespace
}  // namespace ecolane
