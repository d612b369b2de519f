#include "ecolane/dynamics.h"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace ecolane {
namespace {

VehicleParams heavy() {
  VehicleParams p;
  p.mass = 2000.0;
  p.wheel_radius = 0.3;
  return p;
}

TEST(ContinuousDerivative, CenterlineEquilibrium) {
  const State4 x(0.0, 12.0, 0.0, 0.0);
  const State4 dx = continuous_derivative(x, {0.0, 0.02}, 0.02, VehicleParams{});
  EXPECT_DOUBLE_EQ(dx[kS], 12.0);
  EXPECT_DOUBLE_EQ(dx[kV], 0.0);
  EXPECT_DOUBLE_EQ(dx[kEy], 0.0);
  EXPECT_DOUBLE_EQ(dx[kEpsi], 0.0);
}

TEST(ContinuousDerivative, HeadingRateFromCurvature) {
  const State4 dx = continuous_derivative(State4(0, 10, 0, 0), {0.0, 0.05}, 0.0, VehicleParams{});
  EXPECT_DOUBLE_EQ(dx[kEpsi], 0.5);
}

TEST(ContinuousDerivative, AccelerationFromTorque) {
  const State4 dx = continuous_derivative(State4(0, 5, 0, 0), {600.0, 0.0}, 0.0, heavy());
  EXPECT_DOUBLE_EQ(dx[kV], 1.0);
}

TEST(ContinuousDerivative, FullModelAtAnAngle) {
  const double v = 8.0, psi = 0.3, kappa = 0.04, road = 0.01;
  const State4 dx = continuous_derivative(State4(3, v, 1, psi), {300.0, kappa}, road, heavy());
  EXPECT_DOUBLE_EQ(dx[kS], v * std::cos(psi));
  EXPECT_DOUBLE_EQ(dx[kV], 0.5);
  EXPECT_DOUBLE_EQ(dx[kEy], v * std::sin(psi));
  EXPECT_NEAR(dx[kEpsi], (kappa - road) * v * std::cos(psi), 1e-15);
}

TEST(StepDiscrete, StandstillIsAFixedPoint) {
  const State4 x(42.0, 0.0, 0.5, 0.0);
  const State4 next = step_discrete(x, {}, 0.0, VehicleParams{});
  EXPECT_EQ(next, x);
}

TEST(StepDiscrete, OneEulerStep) {
  const State4 next = step_discrete(State4(0, 10, 0, 0), {}, 0.0, VehicleParams{});
  EXPECT_DOUBLE_EQ(next[kS], 1.0);
  EXPECT_DOUBLE_EQ(next[kV], 10.0);
}

TEST(StepDiscrete, SpeedIsClampedAtStandstill) {
  const VehicleParams p;
  const State4 next = step_discrete(State4(0, 0.05, 0, 0), {p.brake_torque, 0.0}, 0.0, p);
  EXPECT_DOUBLE_EQ(next[kV], 0.0);
}

TEST(StepDiscrete, LateralStatesStayZeroOnTheCenterline) {
  const RoadNetwork road = [] {
    RoadNetwork r;
    r.route_length = 1000.0;
    r.curvature = {{0.0, 0.0}, {50.0, 0.02}, {120.0, -0.03}};
    r.legal_speed = {{0.0, 13.0}};
    return r;
  }();
  State4 x(0.0, 9.0, 0.0, 0.0);
  for (int i = 0; i < 300; ++i) {
    const double k = road.curvature_at(x[kS]);
    x = step_discrete(x, {100.0 * std::sin(0.1 * i), k}, k, VehicleParams{});
    ASSERT_EQ(x[kEy], 0.0);
    ASSERT_EQ(x[kEpsi], 0.0);
  }
}

// One second of integration under smooth inputs, against dt = 1e-4.
State4 integrate(State4 x, double dt, const VehicleParams& p) {
  const int steps = static_cast<int>(std::lround(1.0 / dt));
  for (int i = 0; i < steps; ++i) {
    const double t = i * dt;
    const ControlInput u{400.0 * std::sin(2.0 * t), 0.03 * std::cos(3.0 * t)};
    x = step_discrete(x, u, 0.01, p, dt);
  }
  return x;
}

TEST(StepDiscrete, ConvergesAtFirstOrder) {
  const VehicleParams p;
  const State4 x0(0.0, 10.0, 0.2, 0.05);
  const State4 reference = integrate(x0, 1e-4, p);
  const double e1 = (integrate(x0, 0.02, p) - reference).norm();
  const double e2 = (integrate(x0, 0.01, p) - reference).norm();
  const double e3 = (integrate(x0, 0.005, p) - reference).norm();
  // Halving dt halves the error, within 20%.
  EXPECT_NEAR(e2 / e1, 0.5, 0.1);
  EXPECT_NEAR(e3 / e2, 0.5, 0.1);
}

TEST(LkMatrices, ForwardEulerOfTheIntegratorChain) {
  const LkMatrices m = lk_matrices(heavy(), 0.1);
  EXPECT_DOUBLE_EQ(m.a(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(m.a(0, 1), 0.1);
  EXPECT_DOUBLE_EQ(m.a(1, 0), 0.0);
  EXPECT_DOUBLE_EQ(m.a(1, 1), 1.0);
  EXPECT_DOUBLE_EQ(m.b(0), 0.0);
  EXPECT_NEAR(m.b(1), 1.6667e-4, 1e-8);
  const LkMatrices tiny = lk_matrices(heavy(), 1e-12);
  EXPECT_NEAR((tiny.a - Eigen::Matrix2d::Identity()).norm(), 0.0, 1e-11);
}

TEST(LkMatrices, MatchStepDiscreteOnTheLongitudinalBlock) {
  const VehicleParams p;
  const LkMatrices m = lk_matrices(p);
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    const double s = 500.0 * unit(rng), v = 2.0 + 15.0 * unit(rng);
    const double torque = p.brake_torque / 10.0 + (p.motor_torque - p.brake_torque / 10.0) * unit(rng);
    const State4 next = step_discrete(State4(s, v, 0, 0), {torque, 0.0}, 0.0, p);
    const Eigen::Vector2d lin = m.a * Eigen::Vector2d(s, v) + m.b * torque;
    EXPECT_DOUBLE_EQ(next[kS], lin[0]);
    EXPECT_DOUBLE_EQ(next[kV], lin[1]);
  }
}

TEST(VehicleParams, Validation) {
  VehicleParams p;
  EXPECT_NO_THROW(validate(p));
  p.brake_torque = 10.0;
  EXPECT_THROW(validate(p), ConfigError);
  p = VehicleParams{};
  p.mass = 0.0;
  EXPECT_THROW(validate(p), ConfigError);
}

}  // namespace
}  // namespace ecolane
