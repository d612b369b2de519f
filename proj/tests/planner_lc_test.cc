#include "ecolane/planner_lc.h"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "support/lc_scenes.h"
#include "support/rectangle_oracle.h"

namespace ecolane {
namespace {

using testing::random_lc_scene;
using testing::sampled_rectangle_distance;
using testing::two_lane_road;

AgentState vehicle_at(double s, double v, int lane, const RoadNetwork& road) {
  AgentState a;
  a.s = s;
  a.v = v;
  a.lane = lane;
  a.e_y = lane_center_offset(road, lane);
  return a;
}

TEST(EnlargeSv, MinkowskiSumOfRectangles) {
  AgentState sv;
  sv.s = 100.0;
  sv.e_y = 3.5;
  sv.length = 5.0;
  sv.width = 2.0;
  const SvPolytope p = enlarge_sv(sv, 5.0, 2.0);
  const Eigen::Vector4d b = p.b_at(0);
  EXPECT_DOUBLE_EQ(b[0], 105.0);   // s <= 105
  EXPECT_DOUBLE_EQ(-b[1], 95.0);   // s >= 95
  EXPECT_DOUBLE_EQ(b[2], 5.5);
  EXPECT_DOUBLE_EQ(-b[3], 1.5);
  EXPECT_TRUE(((SvPolytope::a() * Eigen::Vector2d(100.0, 3.5)).array() <= b.array()).all());
}

TEST(EnlargeSv, ZeroSizeEgoKeepsTheFootprint) {
  AgentState sv;
  sv.length = 4.0;
  sv.width = 1.8;
  const SvPolytope p = enlarge_sv(sv, 0.0, 0.0);
  EXPECT_DOUBLE_EQ(p.half_length, 2.0);
  EXPECT_DOUBLE_EQ(p.half_width, 0.9);
}

TEST(RectangleDistance, CenterAndLateralOffset) {
  AgentState sv;
  sv.s = 50.0;
  sv.e_y = 0.0;
  const SvPolytope p = enlarge_sv(sv, 0.0, 0.0);
  EXPECT_DOUBLE_EQ(point_to_rectangle_distance(p, 0, 50.0, 0.0), 0.0);
  EXPECT_NEAR(point_to_rectangle_distance(p, 0, 50.0, sv.width / 2 + 2.0), 2.0, 1e-12);
}

TEST(RectangleDistance, MatchesBoundarySamplingOracle) {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    SvPolytope p;
    p.s = 20.0 * u(rng);
    p.e_y = 3.0 * u(rng);
    p.v = 10.0 * std::abs(u(rng));
    p.half_length = 2.0 + 3.0 * std::abs(u(rng));
    p.half_width = 0.5 + 1.5 * std::abs(u(rng));
    const int step = k % 50;
    const double s = p.center_s_at(step) + 12.0 * u(rng);
    const double e = p.e_y + 5.0 * u(rng);
    EXPECT_NEAR(point_to_rectangle_distance(p, step, s, e),
                sampled_rectangle_distance(p, step, s, e), 1e-6);
  }
}

TEST(FreeSpace, EmptyLaneIsOneReachableGap) {
  const RoadNetwork road = two_lane_road();
  const AgentState ego = vehicle_at(0.0, 10.0, 0, road);
  const FreeSpaceGap gap = select_free_space({}, ego, 1, VehicleParams{});
  EXPECT_EQ(gap.lane, 1);
  EXPECT_LT(gap.s_min_free, 50.0);
  EXPECT_GT(gap.s_max_free, 50.0);
}

TEST(FreeSpace, GapBehindALeaderContainingTheProjection) {
  const RoadNetwork road = two_lane_road();
  const AgentState ego = vehicle_at(0.0, 10.0, 0, road);
  const std::vector<AgentState> svs{vehicle_at(40.0, 10.0, 1, road)};
  const FreeSpaceGap gap = select_free_space(svs, ego, 1, VehicleParams{});
  EXPECT_DOUBLE_EQ(gap.s_max_free, 90.0 - 10.0);
  EXPECT_LT(gap.s_min_free, 50.0);
}

TEST(FreeSpace, TooShortGapGivesWayToALongerOne) {
  const RoadNetwork road = two_lane_road();
  const AgentState ego = vehicle_at(0.0, 10.0, 0, road);
  // Reachable terminal positions are [8, 89]. SVs end at 39 and 62, so the
  // projection (50) sits in the 3 m gap [49, 52]; behind lies [8, 29] and
  // ahead [72, 89].
  const std::vector<AgentState> svs{vehicle_at(-11.0, 10.0, 1, road),
                                    vehicle_at(12.0, 10.0, 1, road)};
  const FreeSpaceGap gap = select_free_space(svs, ego, 1, VehicleParams{});
  EXPECT_NEAR(gap.s_min_free, 8.0, 1e-9);
  EXPECT_NEAR(gap.s_max_free, 29.0, 1e-9);
}

TEST(FreeSpace, PackedLaneHasNoGap) {
  const RoadNetwork road = two_lane_road();
  const AgentState ego = vehicle_at(0.0, 10.0, 0, road);
  std::vector<AgentState> svs;
  for (double s = -200.0; s <= 200.0; s += 15.0) svs.push_back(vehicle_at(s, 10.0, 1, road));
  EXPECT_THROW(select_free_space(svs, ego, 1, VehicleParams{}), NoFreeSpaceError);
}

TEST(PlanLc, EmptyRoadReachesTheTargetLane) {
  const RoadNetwork road = two_lane_road();
  LcRequest req;
  req.ego = vehicle_at(0.0, 10.0, 0, road);
  req.target_lane = 1;
  req.road = &road;
  LcConfig cfg;
  cfg.bounds = LcBounds::for_road(road);
  const VehicleParams veh;
  const LcResult res = plan_lc(req, cfg, veh);
  ASSERT_EQ(res.status, LcStatus::kAccepted) << res.reason;
  EXPECT_LE(lc_bound_violation(res.plan, cfg.bounds, 3.5, veh), 1e-6);
  EXPECT_NEAR(res.plan.waypoints.back().e_y, 3.5, 0.1);
  EXPECT_LE(std::abs(res.plan.waypoints.back().e_psi), 0.1);
  for (int i = 0; i < res.plan.steps(); ++i) {
    const double v = res.plan.waypoints[i].v;
    EXPECT_LE(std::abs(v * v * res.plan.inputs[i].curvature), 3.0 + 1e-6);
  }
  EXPECT_LT(res.solve_seconds, 5.0);
}

TEST(PlanLc, AlreadyInTheTargetLaneStaysStraight) {
  const RoadNetwork road = two_lane_road();
  LcRequest req;
  req.ego = vehicle_at(0.0, 10.0, 1, road);
  req.target_lane = 1;
  req.road = &road;
  LcConfig cfg;
  cfg.bounds = LcBounds::for_road(road);
  const LcResult res = plan_lc(req, cfg, VehicleParams{});
  ASSERT_EQ(res.status, LcStatus::kAccepted) << res.reason;
  // Curvature is only lightly penalized, so barrier terms leave a residue
  // far below the 0.1 1/m bound.
  for (const ControlInput& u : res.plan.inputs) EXPECT_NEAR(u.curvature, 0.0, 1e-3);
  const double target_cost = 10.0 * std::pow(res.plan.waypoints.back().e_y - 3.5, 2) +
                             10.0 * std::pow(res.plan.waypoints.back().e_psi, 2);
  EXPECT_LT(target_cost, 1e-6);
}

TEST(PlanLc, BlockedTargetLaneFallsBack) {
  const RoadNetwork road = two_lane_road();
  LcRequest req;
  req.ego = vehicle_at(0.0, 10.0, 0, road);
  req.target_lane = 1;
  req.road = &road;
  for (double s = -200.0; s <= 200.0; s += 15.0) req.svs.push_back(vehicle_at(s, 10.0, 1, road));
  LcConfig cfg;
  cfg.bounds = LcBounds::for_road(road);
  const LcResult res = plan_lc(req, cfg, VehicleParams{});
  EXPECT_EQ(res.status, LcStatus::kFallback);
  EXPECT_FALSE(res.reason.empty());
}

TEST(PlanLc, ProgramDerivativesMatchFiniteDifferences) {
  const RoadNetwork road = two_lane_road(0.01);
  std::mt19937 rng(5);
  const auto scene = random_lc_scene(rng, road);
  LcConfig cfg;
  cfg.bounds = LcBounds::for_road(road);
  std::vector<SvPolytope> polys;
  for (const AgentState& sv : scene.svs) polys.push_back(enlarge_sv(sv, 4.8, 1.9));
  const FreeSpaceGap gap{scene.ego.s + 20.0, scene.ego.s + 80.0, scene.target_lane};
  const nlp::Problem p = lc_program(scene, cfg, VehicleParams{}, gap, polys);

  std::uniform_real_distribution<double> u(-0.2, 0.2);
  nlp::Vector x = p.initial_guess;
  for (int j = 0; j < x.size(); ++j) x[j] += u(rng);
  const int m = p.num_constraints();
  nlp::Vector y(m);
  for (int j = 0; j < m; ++j) y[j] = u(rng);

  std::vector<nlp::Triplet> jt;
  p.jacobian(x, jt);
  Eigen::SparseMatrix<double> jac(m, x.size());
  jac.setFromTriplets(jt.begin(), jt.end());
  nlp::Vector g;
  p.gradient(x, g);
  std::vector<nlp::Triplet> ht;
  p.hessian(x, 1.0, y, ht);
  Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(x.size(), x.size());
  for (const auto& t : ht) {
    hess(t.row(), t.col()) += t.value();
    if (t.row() != t.col()) hess(t.col(), t.row()) += t.value();
  }

  auto lagrangian_grad = [&](const nlp::Vector& z) {
    nlp::Vector gz;
    p.gradient(z, gz);
    std::vector<nlp::Triplet> tz;
    p.jacobian(z, tz);
    Eigen::SparseMatrix<double> jz(m, z.size());
    jz.setFromTriplets(tz.begin(), tz.end());
    return nlp::Vector(gz + jz.transpose() * y);
  };
  const Eigen::MatrixXd jd(jac);
  double worst_j = 0.0, worst_h = 0.0, worst_g = 0.0;
  nlp::Vector cp(m), cm(m);
  for (int j = 0; j < x.size(); ++j) {
    const double h = 1e-6;
    nlp::Vector xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    p.constraints(xp, cp);
    p.constraints(xm, cm);
    worst_j = std::max(worst_j, ((cp - cm) / (2 * h) - jd.col(j)).lpNorm<Eigen::Infinity>());
    worst_g = std::max(worst_g, std::abs((p.objective(xp) - p.objective(xm)) / (2 * h) - g[j]));
    const nlp::Vector col = (lagrangian_grad(xp) - lagrangian_grad(xm)) / (2 * h);
    worst_h = std::max(worst_h, (col - hess.col(j)).lpNorm<Eigen::Infinity>());
  }
  EXPECT_LT(worst_g, 1e-5);
  EXPECT_LT(worst_j, 1e-5);
  EXPECT_LT(worst_h, 1e-4);
}

TEST(PlanLc, RandomScenesAreAcceptedOrFallBackCleanly) {
  const RoadNetwork road = two_lane_road(0.002);
  std::mt19937 rng(99);
  const VehicleParams veh;
  int accepted = 0;
  for (int k = 0; k < 15; ++k) {
    const LcRequest scene = random_lc_scene(rng, road);
    LcConfig cfg;
    cfg.bounds = LcBounds::for_road(road);
    const LcResult res = plan_lc(scene, cfg, veh);
    if (res.status != LcStatus::kAccepted) continue;
    ++accepted;
    const double y_t = lane_center_offset(road, scene.target_lane);
    EXPECT_LE(lc_bound_violation(res.plan, cfg.bounds, y_t, veh), 1e-6) << "scene " << k;
    EXPECT_TRUE(verify_clearance(res.plan, res.polytopes, cfg.d_min).ok) << "scene " << k;
  }
  EXPECT_GE(accepted, 14);
}

}  // namespace
}  // namespace ecolane
