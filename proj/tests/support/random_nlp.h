// Generator of small random NLPs with a known feasible point.

#ifndef ECOLANE_TESTS_RANDOM_NLP_H_
#define ECOLANE_TESTS_RANDOM_NLP_H_

#include <cmath>
#include <random>

#include "ecolane/nlp.h"

namespace ecolane::testing {

/// Objective: convex quadratic plus a bounded sinusoidal term.
/// Constraints: linear equalities and ball inequalities that hold at a hidden
/// point, box bounds that contain it. Even seeds supply analytic derivatives;
/// odd seeds leave them to the solver's finite-difference fallbacks.
inline nlp::Problem random_nlp(unsigned seed) {
  using nlp::Vector;
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_int_distribution<int> dim(2, 6);

  const int n = dim(rng);
  const int me = std::uniform_int_distribution<int>(0, std::min(2, n - 1))(rng);
  const int mi = std::uniform_int_distribution<int>(0, 3)(rng);

  Vector feasible(n);
  for (int j = 0; j < n; ++j) feasible[j] = 2.0 * unit(rng);

  Eigen::MatrixXd q(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) q(i, j) = unit(rng);
  const Eigen::MatrixXd hess = q.transpose() * q + 0.5 * Eigen::MatrixXd::Identity(n, n);
  Vector lin(n), wave(n);
  for (int j = 0; j < n; ++j) {
    lin[j] = 3.0 * unit(rng);
    wave[j] = 0.2 * unit(rng);
  }

  Eigen::MatrixXd a_eq(me, n);
  for (int i = 0; i < me; ++i)
    for (int j = 0; j < n; ++j) a_eq(i, j) = unit(rng);
  const Vector b_eq = a_eq * feasible;

  std::vector<Vector> centers;
  std::vector<double> radii;
  for (int i = 0; i < mi; ++i) {
    Vector center(n);
    for (int j = 0; j < n; ++j) center[j] = feasible[j] + 0.8 * unit(rng);
    centers.push_back(center);
    radii.push_back((feasible - center).norm() + 0.1 + 0.5 * std::abs(unit(rng)));
  }

  nlp::Problem p;
  p.num_variables = n;
  p.num_equalities = me;
  p.num_inequalities = mi;
  p.objective = [=](const Vector& x) {
    double f = 0.5 * x.dot(hess * x) + lin.dot(x);
    for (int j = 0; j < n; ++j) f += wave[j] * std::sin(x[j]);
    return f;
  };
  p.constraints = [=](const Vector& x, Vector& c) {
    c.resize(me + mi);
    if (me > 0) c.head(me) = a_eq * x - b_eq;
    for (int i = 0; i < mi; ++i) {
      c[me + i] = (x - centers[i]).squaredNorm() - radii[i] * radii[i];
    }
  };
  if (seed % 2 == 0) {
    p.gradient = [=](const Vector& x, Vector& g) {
      g = hess * x + lin;
      for (int j = 0; j < n; ++j) g[j] += wave[j] * std::cos(x[j]);
    };
    p.jacobian = [=](const Vector& x, std::vector<nlp::Triplet>& t) {
      for (int i = 0; i < me; ++i)
        for (int j = 0; j < n; ++j) t.emplace_back(i, j, a_eq(i, j));
      for (int i = 0; i < mi; ++i)
        for (int j = 0; j < n; ++j) t.emplace_back(me + i, j, 2.0 * (x[j] - centers[i][j]));
    };
    p.hessian = [=](const Vector& x, double factor, const Vector& y,
                    std::vector<nlp::Triplet>& t) {
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
          double v = factor * hess(i, j);
          if (i == j) {
            v -= factor * wave[j] * std::sin(x[j]);
            for (int k = 0; k < mi; ++k) v += 2.0 * y[me + k];
          }
          t.emplace_back(i, j, v);
        }
      }
    };
  }
  p.lower = Vector::Constant(n, -std::numeric_limits<double>::infinity());
  p.upper = Vector::Constant(n, std::numeric_limits<double>::infinity());
  for (int j = 0; j < n; ++j) {
    if (j % 2 == 0) p.lower[j] = feasible[j] - 0.3 - std::abs(unit(rng));
    if (j % 3 == 0) p.upper[j] = feasible[j] + 0.3 + std::abs(unit(rng));
  }
  p.initial_guess = Vector::Zero(n);
  for (int j = 0; j < n; ++j) p.initial_guess[j] = 3.0 * unit(rng);
  return p;
}

}  // namespace ecolane::testing

#endif  // ECOLANE_TESTS_RANDOM_NLP_H_
