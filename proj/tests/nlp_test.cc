#include "ecolane/nlp.h"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "support/kkt_verifier.h"
#include "support/random_nlp.h"

namespace ecolane::nlp {
namespace {

using ecolane::testing::random_nlp;
using ecolane::testing::verify_kkt;

Problem scalar_problem(std::function<double(const Vector&)> f) {
  Problem p;
  p.num_variables = 1;
  p.objective = std::move(f);
  p.initial_guess = Vector::Constant(1, 0.0);
  return p;
}

TEST(NlpSolve, UnconstrainedQuadratic) {
  Problem p = scalar_problem([](const Vector& x) { return (x[0] - 3.0) * (x[0] - 3.0); });
  const Solution sol = solve(p);
  ASSERT_EQ(sol.status, Status::kOptimal);
  EXPECT_NEAR(sol.x[0], 3.0, 1e-6);
}

TEST(NlpSolve, InequalityMultiplierMatchesTextbookKkt) {
  // min x^2 s.t. 1 - x <= 0.
  Problem p = scalar_problem([](const Vector& x) { return x[0] * x[0]; });
  p.num_inequalities = 1;
  p.constraints = [](const Vector& x, Vector& c) { c.resize(1); c[0] = 1.0 - x[0]; };
  const Solution sol = solve(p);
  ASSERT_EQ(sol.status, Status::kOptimal);
  EXPECT_NEAR(sol.x[0], 1.0, 1e-6);
  EXPECT_NEAR(sol.ineq_multipliers[0], 2.0, 1e-5);
}

TEST(NlpSolve, BoundMultiplierMatchesTextbookKkt) {
  Problem p = scalar_problem([](const Vector& x) { return x[0] * x[0]; });
  p.lower = Vector::Constant(1, 1.0);
  p.upper = Vector::Constant(1, std::numeric_limits<double>::infinity());
  const Solution sol = solve(p);
  ASSERT_EQ(sol.status, Status::kOptimal);
  EXPECT_NEAR(sol.x[0], 1.0, 1e-6);
  EXPECT_NEAR(sol.lower_multipliers[0], 2.0, 1e-5);
}

TEST(NlpSolve, ContradictoryEqualitiesAreInfeasible) {
  Problem p = scalar_problem([](const Vector& x) { return x[0] * x[0]; });
  p.num_equalities = 2;
  p.constraints = [](const Vector& x, Vector& c) {
    c.resize(2);
    c[0] = x[0];
    c[1] = x[0] - 1.0;
  };
  const Solution sol = solve(p);
  EXPECT_EQ(sol.status, Status::kInfeasible);
  EXPECT_NEAR(sol.relaxation, 1.0, 1e-4);
}

TEST(NlpSolve, FixedVariablesStayPut) {
  // min (x0 - 1)^2 + (x1 - 2)^2 with x1 fixed at 5 and x0 + x1 <= 5.5.
  Problem p;
  p.num_variables = 2;
  p.num_inequalities = 1;
  p.objective = [](const Vector& x) {
    return (x[0] - 1.0) * (x[0] - 1.0) + (x[1] - 2.0) * (x[1] - 2.0);
  };
  p.constraints = [](const Vector& x, Vector& c) { c.resize(1); c[0] = x[0] + x[1] - 5.5; };
  p.lower = Vector::Constant(2, -10.0);
  p.upper = Vector::Constant(2, 10.0);
  p.lower[1] = p.upper[1] = 5.0;
  p.initial_guess = Vector::Zero(2);
  const Solution sol = solve(p);
  ASSERT_EQ(sol.status, Status::kOptimal);
  EXPECT_DOUBLE_EQ(sol.x[1], 5.0);
  EXPECT_NEAR(sol.x[0], 0.5, 1e-6);
  const auto report = verify_kkt(p, sol);
  EXPECT_LE(report.stationarity_rel, 1e-4);
}

TEST(NlpSolve, NonFiniteObjectiveAtStartThrowsWithIterate) {
  Problem p = scalar_problem([](const Vector& x) { return std::log(x[0]); });
  p.initial_guess[0] = -1.0;
  try {
    solve(p);
    FAIL() << "expected EvaluationError";
  } catch (const EvaluationError& e) {
    EXPECT_DOUBLE_EQ(e.iterate()[0], -1.0);
  }
}

TEST(NlpSolve, MalformedProblemIsRejected) {
  Problem p = scalar_problem([](const Vector& x) { return x[0]; });
  p.num_equalities = 1;  // no constraint callback
  EXPECT_THROW(solve(p), std::invalid_argument);
  Problem q = scalar_problem([](const Vector& x) { return x[0]; });
  q.lower = Vector::Constant(1, 2.0);
  q.upper = Vector::Constant(1, 1.0);
  EXPECT_THROW(solve(q), std::invalid_argument);
}

TEST(NlpSolve, NonconvexRosenbrockWithDisk) {
  // min (1-x)^2 + 100 (y - x^2)^2  s.t. x^2 + y^2 <= 1.5
  Problem p;
  p.num_variables = 2;
  p.num_inequalities = 1;
  p.objective = [](const Vector& z) {
    return (1 - z[0]) * (1 - z[0]) + 100.0 * std::pow(z[1] - z[0] * z[0], 2);
  };
  p.constraints = [](const Vector& z, Vector& c) {
    c.resize(1);
    c[0] = z.squaredNorm() - 1.5;
  };
  p.initial_guess = Vector::Constant(2, -1.0);
  const Solution sol = solve(p);
  ASSERT_EQ(sol.status, Status::kOptimal);
  // The unconstrained minimizer (1, 1) violates the disk; the optimum sits on it.
  EXPECT_NEAR(sol.x.squaredNorm(), 1.5, 1e-5);
  EXPECT_LE(verify_kkt(p, sol).stationarity_rel, 1e-4);
}

TEST(NlpSolve, RandomProblemsPassIndependentKktCheck) {
  int optimal = 0;
  for (unsigned seed = 0; seed < 50; ++seed) {
    const Problem p = random_nlp(seed);
    const Solution sol = solve(p);
    if (sol.status != Status::kOptimal) continue;
    ++optimal;
    const auto report = verify_kkt(p, sol);
    EXPECT_LE(report.stationarity_rel, 1e-4) << "seed " << seed;
    EXPECT_LE(report.primal, 1e-6) << "seed " << seed;
    EXPECT_LE(report.complementarity, 1e-5) << "seed " << seed;
    EXPECT_GE(report.min_multiplier, 0.0) << "seed " << seed;
  }
  EXPECT_EQ(optimal, 50);
}

TEST(NlpSolve, IdenticalInputsGiveBitwiseIdenticalResults) {
  const Problem p = random_nlp(7);
  const Solution a = solve(p);
  const Solution b = solve(p);
  EXPECT_EQ(a.iterations, b.iterations);
  for (int j = 0; j < a.x.size(); ++j) EXPECT_EQ(a.x[j], b.x[j]);
}

}  // namespace
}  // namespace ecolane::nlp
